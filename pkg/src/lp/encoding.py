"""
LP encoding of a verification problem under fixed phases.

Variable order is fixed by the network shape: inputs, then for every hidden
layer its pre-activations followed by its post-activations, then outputs.
`Layout` computes those indices so any caller can read a solution vector.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.bounds.deeppoly import BoundsMap, PhaseMap
from src.cdcl.literals import Literal
from src.lp.simplex import LPProblem
from src.network.model import Network, NeuronId, Phase
from src.properties.problem import VerificationProblem

logger = logging.getLogger(__name__)

ELASTIC_BASES = ("relaxed", "boxonly")

PhaseRow = Tuple[Dict[int, float], float]


@dataclass(frozen=True)
class Layout:
    """Variable indices of the network LP."""
    inputs: np.ndarray
    pre: Tuple[np.ndarray, ...]
    post: Tuple[np.ndarray, ...]
    outputs: np.ndarray

    @classmethod
    def for_network(cls, network: Network) -> "Layout":
        cursor = 0

        def take(count: int) -> np.ndarray:
            nonlocal cursor
            block = np.arange(cursor, cursor + count)
            cursor += count
            return block

        inputs = take(network.input_dim)
        pre, post = [], []
        for width in network.hidden_sizes:
            pre.append(take(width))
            post.append(take(width))
        outputs = take(network.output_dim)
        return cls(inputs=inputs, pre=tuple(pre), post=tuple(post), outputs=outputs)

    def input_point(self, point: np.ndarray) -> np.ndarray:
        return np.asarray(point)[self.inputs]

    def output_point(self, point: np.ndarray) -> np.ndarray:
        return np.asarray(point)[self.outputs]

    def neuron_vars(self, neuron: NeuronId) -> Tuple[int, int]:
        """(pre, post) variable indices of a hidden neuron."""
        return int(self.pre[neuron.layer][neuron.index]), int(self.post[neuron.layer][neuron.index])


def phase_rows(layout: Layout, literal: Literal) -> List[PhaseRow]:
    """
    The three `<=` rows that pin a literal's phase.

    Active: z >= 0, a = z (as two inequalities).
    Inactive: z <= 0, a = 0 (as two inequalities).
    """
    z, a = layout.neuron_vars(literal.neuron)
    if literal.phase is Phase.ACTIVE:
        return [({z: -1.0}, 0.0), ({a: 1.0, z: -1.0}, 0.0), ({z: 1.0, a: -1.0}, 0.0)]
    return [({z: 1.0}, 0.0), ({a: 1.0}, 0.0), ({a: -1.0}, 0.0)]


def _declare(lp: LPProblem, network: Network, bounds: BoundsMap) -> Layout:
    layout = Layout.for_network(network)
    box = bounds.box
    for i in range(network.input_dim):
        lp.add_var(f"x{i}", box.lower[i], box.upper[i])
    for k, layer in enumerate(bounds.hidden):
        for i in range(len(layer.pre_lower)):
            lp.add_var(f"z{k}_{i}", layer.pre_lower[i], layer.pre_upper[i])
        for i in range(len(layer.pre_lower)):
            lp.add_var(f"a{k}_{i}", layer.post_lower[i], layer.post_upper[i])
    out_lo, out_hi = bounds.output_bounds()
    for j in range(network.output_dim):
        lp.add_var(f"y{j}", out_lo[j], out_hi[j])
    return layout


def _affine_rows(lp: LPProblem, network: Network, layout: Layout):
    sources = layout.inputs
    targets = list(layout.pre) + [layout.outputs]
    for k, affine in enumerate(network.layers):
        for i, target in enumerate(targets[k]):
            coeffs = {int(s): float(w) for s, w in zip(sources, affine.weights[i]) if w != 0.0}
            coeffs[int(target)] = coeffs.get(int(target), 0.0) - 1.0
            lp.add_eq(coeffs, -float(affine.bias[i]), name=f"aff{k}_{i}")
        if k < len(layout.post):
            sources = layout.post[k]


def _relu_rows(
    lp: LPProblem,
    layout: Layout,
    bounds: BoundsMap,
    phases: PhaseMap,
    triangles: Optional[Iterable[NeuronId]] = None,
):
    """Exact rows for decided neurons, triangle rows for crossing ones."""
    keep = None if triangles is None else set(triangles)
    for k, layer in enumerate(bounds.hidden):
        for i in range(len(layer.pre_lower)):
            neuron = NeuronId(k, i)
            z, a = layout.neuron_vars(neuron)
            fixed = phases.get(neuron)
            phase = fixed if fixed is not Phase.UNKNOWN else bounds.effective_phase(neuron)
            if phase is Phase.ACTIVE:
                lp.add_eq({a: 1.0, z: -1.0}, 0.0, name=f"on{k}_{i}")
                lp.add_le({z: -1.0}, 0.0, name=f"on_sign{k}_{i}")
            elif phase is Phase.INACTIVE:
                lp.add_eq({a: 1.0}, 0.0, name=f"off{k}_{i}")
                lp.add_le({z: 1.0}, 0.0, name=f"off_sign{k}_{i}")
            elif keep is None or neuron in keep:
                lo, hi = float(layer.pre_lower[i]), float(layer.pre_upper[i])
                slope = hi / (hi - lo)
                lp.add_le({a: -1.0}, 0.0, name=f"tri_lo{k}_{i}")
                lp.add_le({z: 1.0, a: -1.0}, 0.0, name=f"tri_id{k}_{i}")
                lp.add_le({a: 1.0, z: -slope}, -slope * lo, name=f"tri_up{k}_{i}")


def _unsafe_rows(lp: LPProblem, problem: VerificationProblem, layout: Layout):
    for c, constraint in enumerate(problem.unsafe):
        a, b = constraint.as_upper_form()
        lp.add_le({int(v): float(w) for v, w in zip(layout.outputs, a) if w != 0.0}, b, name=f"unsafe{c}")


def build_lp(problem: VerificationProblem, phases: PhaseMap, bounds: BoundsMap) -> LPProblem:
    """
    Feasibility LP for the problem under `phases`.

    Fixed-Active neurons get post = pre and pre >= 0, fixed-Inactive neurons
    post = 0 and pre <= 0. Unknown neurons the bounds decide are encoded the
    same way; crossing neurons get the triangle rows. Affine layers are
    equalities, the box and every interval are variable bounds, and the
    unsafe constraints are rows.
    """
    network = problem.network
    lp = LPProblem()
    layout = _declare(lp, network, bounds)
    _affine_rows(lp, network, layout)
    _relu_rows(lp, layout, bounds, phases)
    _unsafe_rows(lp, problem, layout)
    return lp


def build_elastic_base(
    problem: VerificationProblem,
    root_bounds: BoundsMap,
    path: Sequence[Literal] = (),
    mode: str = "relaxed",
) -> LPProblem:
    """
    Path-independent base LP for elastic filtering.

    Uses bounds computed with no phases fixed over the subproblem box, so
    any core found against it holds for the whole subproblem. `boxonly`
    keeps triangle rows only for neurons on the path.
    """
    if mode not in ELASTIC_BASES:
        raise ValueError(f"unknown elastic base {mode!r}; expected one of {ELASTIC_BASES}")
    network = problem.network
    lp = LPProblem()
    layout = _declare(lp, network, root_bounds)
    _affine_rows(lp, network, layout)
    triangles = None if mode == "relaxed" else [lit.neuron for lit in path if not lit.is_guard]
    _relu_rows(lp, layout, root_bounds, PhaseMap.unknown(network), triangles)
    _unsafe_rows(lp, problem, layout)
    return lp


def path_constraints(layout: Layout, path: Sequence[Literal]) -> List[Tuple[Literal, List[PhaseRow]]]:
    """Phase rows for every non-guard literal on a path, in path order."""
    return [(lit, phase_rows(layout, lit)) for lit in path if not lit.is_guard]
