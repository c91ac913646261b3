"""
Feed-forward ReLU network representation.

A network is an ordered list of affine layers; every layer except the last
applies ReLU element-wise. Hidden neurons are addressed by `NeuronId`
(layer index among hidden layers, index within the layer), which is also the
variable space that branching literals talk about.
"""
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import DimensionMismatchError

# Hidden-layer index reserved for synthetic input-split guard literals.
GUARD_LAYER = -1


class Phase(IntEnum):
    """Activation phase of a ReLU neuron."""
    INACTIVE = -1
    UNKNOWN = 0
    ACTIVE = 1

    def opposite(self) -> "Phase":
        if self is Phase.UNKNOWN:
            return self
        return Phase.ACTIVE if self is Phase.INACTIVE else Phase.INACTIVE


class NeuronId(NamedTuple):
    """Hidden neuron address; layer -1 is reserved for split guards."""
    layer: int
    index: int

    @property
    def is_guard(self) -> bool:
        return self.layer == GUARD_LAYER

    def __str__(self) -> str:
        if self.is_guard:
            return f"S{self.index}"
        return f"L{self.layer}_{self.index}"


@dataclass(frozen=True, eq=False)
class Layer:
    """One affine map, optionally followed by ReLU."""
    weights: np.ndarray
    bias: np.ndarray
    has_relu: bool

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class Normalization:
    """
    NNet input/output normalization blocks.

    `means` and `ranges` have input_dim + 1 entries; the last one applies
    to every output.
    """
    mins: np.ndarray
    maxes: np.ndarray
    means: np.ndarray
    ranges: np.ndarray

    @classmethod
    def identity(cls, input_dim: int, lower: float = 0.0, upper: float = 1.0) -> "Normalization":
        return cls(
            mins=np.full(input_dim, lower),
            maxes=np.full(input_dim, upper),
            means=np.zeros(input_dim + 1),
            ranges=np.ones(input_dim + 1),
        )

    def normalize_input(self, x: np.ndarray) -> np.ndarray:
        n = len(self.mins)
        return (np.asarray(x, dtype=float) - self.means[:n]) / self.ranges[:n]


@dataclass(frozen=True, eq=False)
class ActivationPattern:
    """Phase of every hidden neuron: `active[k][i]` is True iff Active."""
    active: Tuple[np.ndarray, ...]

    def phase(self, neuron: NeuronId) -> Phase:
        return Phase.ACTIVE if self.active[neuron.layer][neuron.index] else Phase.INACTIVE

    def neurons(self):
        for k, layer in enumerate(self.active):
            for i, on in enumerate(layer):
                yield NeuronId(k, i), (Phase.ACTIVE if on else Phase.INACTIVE)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ActivationPattern):
            return NotImplemented
        return len(self.active) == len(other.active) and all(
            np.array_equal(a, b) for a, b in zip(self.active, other.active)
        )

    def __hash__(self) -> int:
        return hash(tuple(a.tobytes() for a in self.active))


@dataclass(frozen=True, eq=False)
class Network:
    """
    Immutable layered affine+ReLU network.

    Construction validates shapes, finiteness and the ReLU layout, so a
    `Network` instance can be shared read-only between workers.
    """
    layers: Tuple[Layer, ...]
    normalization: Optional[Normalization] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.layers:
            raise DimensionMismatchError("network needs at least one layer")

        for k, layer in enumerate(self.layers):
            if layer.weights.ndim != 2 or layer.bias.shape != (layer.out_dim,):
                raise DimensionMismatchError(
                    f"layer {k}: bias length {layer.bias.shape} does not match "
                    f"{layer.out_dim} weight rows"
                )
            if k > 0 and layer.in_dim != self.layers[k - 1].out_dim:
                raise DimensionMismatchError(
                    f"layer {k}: {layer.in_dim} columns, previous layer has "
                    f"{self.layers[k - 1].out_dim} rows"
                )
            if not (np.all(np.isfinite(layer.weights)) and np.all(np.isfinite(layer.bias))):
                raise ValueError(f"layer {k}: non-finite weight or bias")
            expected_relu = k < len(self.layers) - 1
            if layer.has_relu != expected_relu:
                raise ValueError(
                    f"layer {k}: hidden layers must apply ReLU and the output layer must not"
                )

    @classmethod
    def from_arrays(
        cls,
        weights: Sequence[Sequence[Sequence[float]]],
        biases: Sequence[Sequence[float]],
        normalization: Optional[Normalization] = None,
    ) -> "Network":
        """Build a network from per-layer weight matrices and bias vectors."""
        count = len(weights)
        layers = tuple(
            Layer(
                weights=np.array(w, dtype=np.float64).reshape(len(b), -1),
                bias=np.array(b, dtype=np.float64),
                has_relu=k < count - 1,
            )
            for k, (w, b) in enumerate(zip(weights, biases))
        )
        return cls(layers=layers, normalization=normalization)

    # ---------------------------------------------------
    # Shape helpers
    # ---------------------------------------------------

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def hidden_sizes(self) -> List[int]:
        return [layer.out_dim for layer in self.layers[:-1]]

    @property
    def num_hidden_layers(self) -> int:
        return len(self.layers) - 1

    @property
    def num_hidden_neurons(self) -> int:
        return sum(self.hidden_sizes)

    def hidden_neurons(self):
        """Yield every hidden NeuronId in layer-major order."""
        for k, width in enumerate(self.hidden_sizes):
            for i in range(width):
                yield NeuronId(k, i)

    def is_hidden(self, neuron: NeuronId) -> bool:
        return 0 <= neuron.layer < self.num_hidden_layers and 0 <= neuron.index < self.hidden_sizes[neuron.layer]

    def default_box(self) -> Tuple[np.ndarray, np.ndarray]:
        """Input mins/maxes from the normalization block, in network units."""
        norm = self.normalization or Normalization.identity(self.input_dim)
        return norm.normalize_input(norm.mins), norm.normalize_input(norm.maxes)

    def describe(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "hidden_layers": self.num_hidden_layers,
            "hidden_sizes": self.hidden_sizes,
            "hidden_neurons": self.num_hidden_neurons,
        }

    # ---------------------------------------------------
    # Forward evaluation
    # ---------------------------------------------------

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.input_dim,):
            raise DimensionMismatchError(
                f"input has shape {x.shape}, network expects ({self.input_dim},)"
            )
        return x

    def evaluate(self, x) -> np.ndarray:
        """Return f(x)."""
        value = self._check_input(x)
        for layer in self.layers:
            value = layer.weights @ value + layer.bias
            if layer.has_relu:
                value = np.maximum(value, 0.0)
        return value

    def evaluate_with_pattern(self, x) -> Tuple[np.ndarray, ActivationPattern]:
        """
        Return f(x) and the activation pattern at x.

        A pre-activation of exactly 0 is recorded Inactive.
        """
        value = self._check_input(x)
        active = []
        for layer in self.layers:
            value = layer.weights @ value + layer.bias
            if layer.has_relu:
                active.append(value > 0.0)
                value = np.maximum(value, 0.0)
        return value, ActivationPattern(tuple(active))

    def pre_activations(self, x) -> List[np.ndarray]:
        """Pre-activation vector of every layer, output layer included."""
        value = self._check_input(x)
        pres = []
        for layer in self.layers:
            value = layer.weights @ value + layer.bias
            pres.append(value)
            if layer.has_relu:
                value = np.maximum(value, 0.0)
        return pres

    def input_gradient(self, x, objective) -> np.ndarray:
        """
        Gradient of `objective · f(x)` with respect to x.

        The activation pattern of x is held fixed; a pre-activation of
        exactly 0 contributes the subgradient 0.

        Args:
            x: Input point.
            objective: Coefficients over the outputs.

        Returns:
            Vector of length input_dim.
        """
        objective = np.asarray(objective, dtype=np.float64)
        if objective.shape != (self.output_dim,):
            raise DimensionMismatchError(
                f"objective has shape {objective.shape}, network has {self.output_dim} outputs"
            )
        pres = self.pre_activations(x)

        grad = objective
        for k in range(len(self.layers) - 1, -1, -1):
            grad = self.layers[k].weights.T @ grad
            if k > 0:
                grad = grad * (pres[k - 1] > 0.0)
        return grad
