"""
Symbolic bound propagation under a partial phase assignment.

Each neuron's pre-activation gets linear lower and upper bounds over the
network inputs by back-substituting through every earlier layer, and a
concrete interval from concretizing those bounds over the box (intersected
with plain interval arithmetic). ReLUs are abstracted per neuron:

    fixed Active / stable positive   post = pre
    fixed Inactive / stable negative post = 0
    crossing (lo < 0 < hi)           hi * (z - lo) / (hi - lo) >= post >= lam * z

with lam = 1 when hi >= -lo and 0 otherwise.

A phase that contradicts the computed interval is reported as
`InfeasiblePhases`, never raised.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.cdcl.literals import Clause, ClauseOrigin, Literal
from src.network.model import Network, NeuronId, Phase
from src.properties.problem import Box, LinearConstraint

logger = logging.getLogger(__name__)

BOUND_TOLERANCE = 1e-9


# ---------------------------------------------------
# Phase assignment
# ---------------------------------------------------

class PhaseMap:
    """Phase per hidden neuron; Unknown where nothing is fixed."""

    def __init__(self, phases: Sequence[np.ndarray]):
        self.phases: Tuple[np.ndarray, ...] = tuple(np.asarray(p, dtype=np.int8) for p in phases)

    @classmethod
    def unknown(cls, network: Network) -> "PhaseMap":
        return cls([np.zeros(width, dtype=np.int8) for width in network.hidden_sizes])

    @classmethod
    def from_literals(cls, network: Network, literals: Iterable[Literal]) -> "PhaseMap":
        """Phase map fixing every non-guard literal."""
        phase_map = cls.unknown(network)
        for lit in literals:
            if not lit.is_guard:
                phase_map.phases[lit.neuron.layer][lit.neuron.index] = int(lit.phase)
        return phase_map

    def get(self, neuron: NeuronId) -> Phase:
        return Phase(int(self.phases[neuron.layer][neuron.index]))

    def with_phase(self, neuron: NeuronId, phase: Phase) -> "PhaseMap":
        phases = [p.copy() for p in self.phases]
        phases[neuron.layer][neuron.index] = int(phase)
        return PhaseMap(phases)

    def fixed(self) -> List[Literal]:
        return [
            Literal(NeuronId(k, int(i)), Phase(int(layer[i])))
            for k, layer in enumerate(self.phases)
            for i in np.flatnonzero(layer)
        ]

    def __eq__(self, other) -> bool:
        return isinstance(other, PhaseMap) and all(
            np.array_equal(a, b) for a, b in zip(self.phases, other.phases)
        )


# ---------------------------------------------------
# Bound containers
# ---------------------------------------------------

@dataclass(frozen=True)
class SymbolicBound:
    """Affine function coeffs · x + constant over the network inputs."""
    coeffs: np.ndarray
    constant: float

    def evaluate(self, x) -> float:
        return float(self.coeffs @ np.asarray(x, dtype=np.float64) + self.constant)

    def minimize(self, box: Box) -> float:
        return float(_concretize_lower(self.coeffs[None, :], np.array([self.constant]), box)[0])

    def maximize(self, box: Box) -> float:
        return float(_concretize_upper(self.coeffs[None, :], np.array([self.constant]), box)[0])


@dataclass
class LayerBounds:
    """
    Bounds for one layer.

    `lower_coeffs @ x + lower_const <= pre <= upper_coeffs @ x + upper_const`
    row-wise. Relaxation slopes/intercepts describe post in terms of pre and
    are None for the output layer.
    """
    pre_lower: np.ndarray
    pre_upper: np.ndarray
    lower_coeffs: np.ndarray
    lower_const: np.ndarray
    upper_coeffs: np.ndarray
    upper_const: np.ndarray
    post_lower: Optional[np.ndarray] = None
    post_upper: Optional[np.ndarray] = None
    relax_lower_slope: Optional[np.ndarray] = None
    relax_lower_const: Optional[np.ndarray] = None
    relax_upper_slope: Optional[np.ndarray] = None
    relax_upper_const: Optional[np.ndarray] = None
    effective: Optional[np.ndarray] = None


@dataclass(frozen=True)
class InfeasiblePhases:
    """The fixed phases contradict the concrete bounds at `neuron`."""
    neuron: NeuronId
    reason: str


class Reachability(str, Enum):
    CANNOT_REACH = "CannotReach"
    UNKNOWN = "Unknown"


class BoundsMap:
    """Per-layer bounds computed for one (box, phase map) pair."""

    def __init__(self, network: Network, box: Box, phases: PhaseMap, layers: List[LayerBounds]):
        self.network = network
        self.box = box
        self.phases = phases
        self.layers = layers

    @property
    def hidden(self) -> List[LayerBounds]:
        return self.layers[:-1]

    @property
    def output(self) -> LayerBounds:
        return self.layers[-1]

    def pre_bounds(self, neuron: NeuronId) -> Tuple[float, float]:
        layer = self.layers[neuron.layer]
        return float(layer.pre_lower[neuron.index]), float(layer.pre_upper[neuron.index])

    def post_bounds(self, neuron: NeuronId) -> Tuple[float, float]:
        layer = self.layers[neuron.layer]
        return float(layer.post_lower[neuron.index]), float(layer.post_upper[neuron.index])

    def symbolic_lower(self, neuron: NeuronId) -> SymbolicBound:
        layer = self.layers[neuron.layer]
        return SymbolicBound(layer.lower_coeffs[neuron.index].copy(), float(layer.lower_const[neuron.index]))

    def symbolic_upper(self, neuron: NeuronId) -> SymbolicBound:
        layer = self.layers[neuron.layer]
        return SymbolicBound(layer.upper_coeffs[neuron.index].copy(), float(layer.upper_const[neuron.index]))

    def output_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.output.pre_lower.copy(), self.output.pre_upper.copy()

    def effective_phase(self, neuron: NeuronId) -> Phase:
        """Phase the relaxation used: fixed, implied by the interval, or Unknown if crossing."""
        return Phase(int(self.layers[neuron.layer].effective[neuron.index]))

    def is_crossing(self, neuron: NeuronId) -> bool:
        return self.effective_phase(neuron) is Phase.UNKNOWN

    def unknown_neurons(self) -> List[NeuronId]:
        """Crossing neurons not fixed by the phase map, layer-major order."""
        return [
            NeuronId(k, int(i))
            for k, layer in enumerate(self.hidden)
            for i in np.flatnonzero(layer.effective == 0)
        ]

    def linear_bounds(self, coeffs) -> Tuple[float, float]:
        """
        Lower and upper bound of coeffs · y over the outputs.

        The functional is back-substituted to the inputs and the result is
        intersected with the interval bound from the output intervals.
        """
        coeffs = np.asarray(coeffs, dtype=np.float64)[None, :]
        lo_a, lo_c = _backsubstitute(self.network, self.layers, coeffs, np.zeros(1),
                                     len(self.layers) - 1, lower=True, from_pre=True)
        hi_a, hi_c = _backsubstitute(self.network, self.layers, coeffs, np.zeros(1),
                                     len(self.layers) - 1, lower=False, from_pre=True)
        lower = _concretize_lower(lo_a, lo_c, self.box)[0]
        upper = _concretize_upper(hi_a, hi_c, self.box)[0]

        out_lo, out_hi = self.output.pre_lower, self.output.pre_upper
        pos, neg = np.maximum(coeffs[0], 0.0), np.minimum(coeffs[0], 0.0)
        lower = max(lower, float(pos @ out_lo + neg @ out_hi))
        upper = min(upper, float(pos @ out_hi + neg @ out_lo))
        return float(lower), float(upper)


# ---------------------------------------------------
# Core propagation
# ---------------------------------------------------

def _concretize_lower(coeffs: np.ndarray, const: np.ndarray, box: Box) -> np.ndarray:
    return np.maximum(coeffs, 0.0) @ box.lower + np.minimum(coeffs, 0.0) @ box.upper + const


def _concretize_upper(coeffs: np.ndarray, const: np.ndarray, box: Box) -> np.ndarray:
    return np.maximum(coeffs, 0.0) @ box.upper + np.minimum(coeffs, 0.0) @ box.lower + const


def _backsubstitute(
    network: Network,
    layers: List[LayerBounds],
    coeffs: np.ndarray,
    const: np.ndarray,
    k: int,
    lower: bool,
    from_pre: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rewrite a bound expressed over layer k's input down to the network inputs.

    With `from_pre` the functional is over layer k's pre-activation and is
    first pushed through layer k's affine map. Otherwise it is over the
    post-activations of layer k - 1 (the input of layer k).
    """
    if from_pre:
        weights, bias = network.layers[k].weights, network.layers[k].bias
        const = const + coeffs @ bias
        coeffs = coeffs @ weights
    j = k - 1
    while j >= 0:
        layer = layers[j]
        pos, neg = np.maximum(coeffs, 0.0), np.minimum(coeffs, 0.0)
        if lower:
            slope_pos, const_pos = layer.relax_lower_slope, layer.relax_lower_const
            slope_neg, const_neg = layer.relax_upper_slope, layer.relax_upper_const
        else:
            slope_pos, const_pos = layer.relax_upper_slope, layer.relax_upper_const
            slope_neg, const_neg = layer.relax_lower_slope, layer.relax_lower_const
        const = const + pos @ const_pos + neg @ const_neg
        coeffs = pos * slope_pos + neg * slope_neg

        weights, bias = network.layers[j].weights, network.layers[j].bias
        const = const + coeffs @ bias
        coeffs = coeffs @ weights
        j -= 1
    return coeffs, const


def _relax(lo: np.ndarray, hi: np.ndarray, fixed: np.ndarray):
    """Choose the per-neuron ReLU abstraction; returns slopes, intercepts and effective phases."""
    width = len(lo)
    effective = np.zeros(width, dtype=np.int8)
    effective[fixed == Phase.ACTIVE] = Phase.ACTIVE
    effective[fixed == Phase.INACTIVE] = Phase.INACTIVE
    free = fixed == Phase.UNKNOWN
    effective[free & (hi <= 0.0)] = Phase.INACTIVE
    effective[free & (hi > 0.0) & (lo >= 0.0)] = Phase.ACTIVE

    lower_slope = np.zeros(width)
    lower_const = np.zeros(width)
    upper_slope = np.zeros(width)
    upper_const = np.zeros(width)

    on = effective == Phase.ACTIVE
    lower_slope[on] = 1.0
    upper_slope[on] = 1.0

    crossing = effective == Phase.UNKNOWN
    if np.any(crossing):
        l, h = lo[crossing], hi[crossing]
        slope = h / (h - l)
        upper_slope[crossing] = slope
        upper_const[crossing] = -slope * l
        lower_slope[crossing] = np.where(h >= -l, 1.0, 0.0)

    return lower_slope, lower_const, upper_slope, upper_const, effective


def propagate_bounds(
    network: Network,
    box: Box,
    phases: PhaseMap,
    parent: Optional[BoundsMap] = None,
) -> Union[BoundsMap, InfeasiblePhases]:
    """
    Compute bounds for every neuron under `phases`.

    Args:
        network: Network to bound.
        box: Input region.
        phases: Fixed phases; Unknown elsewhere.
        parent: Bounds for a superset region/assignment. Every interval is
            intersected with the parent's before relaxations are chosen.

    Returns:
        BoundsMap, or InfeasiblePhases if a fixed phase contradicts the
        concrete bounds or an intersected interval is empty.
    """
    if box.dim != network.input_dim:
        raise ValueError(f"box has {box.dim} dimensions, network expects {network.input_dim}")

    layers: List[LayerBounds] = []
    prev_lo, prev_hi = box.lower, box.upper

    for k, affine in enumerate(network.layers):
        width = affine.out_dim
        identity = np.eye(width)
        lo_a, lo_c = _backsubstitute(network, layers, identity, np.zeros(width), k, lower=True, from_pre=True)
        hi_a, hi_c = _backsubstitute(network, layers, identity, np.zeros(width), k, lower=False, from_pre=True)
        lo = _concretize_lower(lo_a, lo_c, box)
        hi = _concretize_upper(hi_a, hi_c, box)

        w_pos, w_neg = np.maximum(affine.weights, 0.0), np.minimum(affine.weights, 0.0)
        lo = np.maximum(lo, w_pos @ prev_lo + w_neg @ prev_hi + affine.bias)
        hi = np.minimum(hi, w_pos @ prev_hi + w_neg @ prev_lo + affine.bias)
        if parent is not None:
            lo = np.maximum(lo, parent.layers[k].pre_lower)
            hi = np.minimum(hi, parent.layers[k].pre_upper)

        crossed = np.flatnonzero(lo > hi + BOUND_TOLERANCE)
        if len(crossed):
            neuron = NeuronId(k, int(crossed[0]))
            return InfeasiblePhases(neuron, "empty pre-activation interval")
        hi = np.maximum(hi, lo)

        bounds = LayerBounds(
            pre_lower=lo, pre_upper=hi,
            lower_coeffs=lo_a, lower_const=lo_c, upper_coeffs=hi_a, upper_const=hi_c,
        )

        if not affine.has_relu:
            layers.append(bounds)
            break

        fixed = phases.phases[k]
        dead = np.flatnonzero((fixed == Phase.ACTIVE) & (hi < -BOUND_TOLERANCE))
        if len(dead):
            return InfeasiblePhases(NeuronId(k, int(dead[0])), "fixed Active with upper bound below 0")
        alive = np.flatnonzero((fixed == Phase.INACTIVE) & (lo > BOUND_TOLERANCE))
        if len(alive):
            return InfeasiblePhases(NeuronId(k, int(alive[0])), "fixed Inactive with lower bound above 0")

        on = fixed == Phase.ACTIVE
        off = fixed == Phase.INACTIVE
        lo = np.where(on, np.maximum(lo, 0.0), lo)
        hi = np.where(on, np.maximum(hi, lo), hi)
        hi = np.where(off, np.minimum(hi, 0.0), hi)
        lo = np.where(off, np.minimum(lo, hi), lo)
        bounds.pre_lower, bounds.pre_upper = lo, hi

        (bounds.relax_lower_slope, bounds.relax_lower_const,
         bounds.relax_upper_slope, bounds.relax_upper_const,
         bounds.effective) = _relax(lo, hi, fixed)

        post_lo = np.where(bounds.effective == Phase.ACTIVE, lo, 0.0)
        post_hi = np.where(bounds.effective == Phase.INACTIVE, 0.0, hi)
        bounds.post_lower, bounds.post_upper = np.maximum(post_lo, 0.0), np.maximum(post_hi, 0.0)
        if parent is not None:
            bounds.post_lower = np.maximum(bounds.post_lower, parent.layers[k].post_lower)
            bounds.post_upper = np.minimum(bounds.post_upper, parent.layers[k].post_upper)
            bounds.post_upper = np.maximum(bounds.post_upper, bounds.post_lower)

        layers.append(bounds)
        prev_lo, prev_hi = bounds.post_lower, bounds.post_upper

    return BoundsMap(network, box, phases, layers)


# ---------------------------------------------------
# Consumers
# ---------------------------------------------------

def check_unsafe_by_bounds(bounds: BoundsMap, unsafe: Sequence[LinearConstraint]) -> Reachability:
    """
    CannotReach if some unsafe constraint is violated everywhere in the bounds.

    Each constraint is put in a · y <= b form; it cannot be met when the
    lower bound of a · y exceeds b.
    """
    for constraint in unsafe:
        a, b = constraint.as_upper_form()
        lower, _ = bounds.linear_bounds(a)
        if lower > b + BOUND_TOLERANCE:
            logger.debug("unsafe constraint %s unreachable: lower bound %.6g", constraint, lower)
            return Reachability.CANNOT_REACH
    return Reachability.UNKNOWN


def derive_phase_clauses(bounds: BoundsMap, path: Sequence[Literal]) -> List[Clause]:
    """
    Clauses for neurons whose phase the bounds already decide.

    For every neuron left Unknown by the phase map with pre-activation
    lower bound > 0 the clause is (negated path) or (v Active); with upper
    bound <= 0 it is (negated path) or (v Inactive).
    """
    negated = [lit.negate() for lit in path]
    path_neurons = {lit.neuron for lit in path}
    clauses = []
    for k, layer in enumerate(bounds.hidden):
        free = bounds.phases.phases[k] == Phase.UNKNOWN
        for i in np.flatnonzero(free & (layer.pre_lower > 0.0)):
            neuron = NeuronId(k, int(i))
            if neuron not in path_neurons:
                clauses.append(Clause.from_literals(negated + [Literal(neuron, Phase.ACTIVE)],
                                                    ClauseOrigin.BOUND_IMPLIED))
        for i in np.flatnonzero(free & (layer.pre_upper <= 0.0)):
            neuron = NeuronId(k, int(i))
            if neuron not in path_neurons:
                clauses.append(Clause.from_literals(negated + [Literal(neuron, Phase.INACTIVE)],
                                                    ClauseOrigin.BOUND_IMPLIED))
    return clauses
