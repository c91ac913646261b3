"""
Independent reference implementations used by the tests.

Nothing here imports the verifier's bounds, LP or propagation code; the LP
checks go through scipy.
"""
import itertools
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from src.lp.simplex import LPProblem


def forward_pass_loops(network, x) -> np.ndarray:
    """f(x) with explicit loops, one multiply-add at a time."""
    value = [float(v) for v in x]
    for layer in network.layers:
        out = []
        for i in range(layer.weights.shape[0]):
            total = float(layer.bias[i])
            for j in range(layer.weights.shape[1]):
                total += float(layer.weights[i, j]) * value[j]
            out.append(max(total, 0.0) if layer.has_relu else total)
        value = out
    return np.array(value)


def naive_propagate(clauses: Sequence[Sequence], assignment: Dict) -> Tuple[Dict, bool]:
    """
    Unit propagation by repeated full scans.

    Args:
        clauses: Lists of literals (anything with .neuron, .phase, .negate()).
        assignment: neuron -> phase, extended in place.

    Returns:
        (assignment, conflict).
    """
    changed = True
    while changed:
        changed = False
        for clause in clauses:
            free = []
            satisfied = False
            for lit in clause:
                phase = assignment.get(lit.neuron)
                if phase is None:
                    free.append(lit)
                elif phase == lit.phase:
                    satisfied = True
                    break
            if satisfied:
                continue
            if not free:
                return assignment, True
            if len(free) == 1:
                assignment[free[0].neuron] = free[0].phase
                changed = True
    return assignment, False


def _bounds(lower, upper):
    return [
        (None if np.isneginf(lo) else lo, None if np.isposinf(hi) else hi)
        for lo, hi in zip(lower, upper)
    ]


def scipy_solve(lp: LPProblem, objective: bool = True):
    """Solve an LPProblem with scipy's HiGHS; returns the OptimizeResult."""
    a_ub, b_ub, a_eq, b_eq = lp.dense()
    c = lp.objective_vector() if objective else np.zeros(lp.num_vars)
    return linprog(
        c,
        A_ub=a_ub if len(b_ub) else None,
        b_ub=b_ub if len(b_ub) else None,
        A_eq=a_eq if len(b_eq) else None,
        b_eq=b_eq if len(b_eq) else None,
        bounds=_bounds(lp.lower, lp.upper),
        method="highs",
    )


def scipy_feasible(lp: LPProblem) -> bool:
    result = scipy_solve(lp, objective=False)
    assert result.status in (0, 2), result.message
    return result.status == 0


def with_rows(base: LPProblem, rows) -> LPProblem:
    lp = base.copy()
    for coeffs, rhs in rows:
        lp.add_le(coeffs, rhs)
    return lp


def minimal_infeasible_subsets(base: LPProblem, path) -> List[Tuple[int, ...]]:
    """Every smallest subset of path positions that is infeasible with the base."""
    for size in range(1, len(path) + 1):
        found = [
            subset for subset in itertools.combinations(range(len(path)), size)
            if not scipy_feasible(with_rows(base, [row for i in subset for row in path[i][1]]))
        ]
        if found:
            return found
    return []


def pattern_witness(problem) -> Optional[np.ndarray]:
    """
    Exact reachability by depth-first search over activation patterns.

    Neurons are fixed one at a time in layer order. Under a partial pattern
    the fixed neurons' pre-activations are affine in x, so the pattern's
    region is a polyhedron; a branch whose polyhedron is empty is dropped.
    A complete pattern makes the output affine and adds the unsafe rows.
    Returns an input reaching the unsafe region, or None.
    """
    network = problem.network
    box = problem.input_box
    n = network.input_dim
    a_unsafe, b_unsafe = problem.unsafe_matrix()
    bounds = list(zip(box.lower, box.upper))

    def point(rows, rhs) -> Optional[np.ndarray]:
        result = linprog(
            np.zeros(n), A_ub=np.array(rows).reshape(len(rows), n), b_ub=np.array(rhs),
            bounds=bounds, method="highs",
        )
        return result.x if result.status == 0 else None

    def search(k, m, c, rows, rhs, on) -> Optional[np.ndarray]:
        layer = network.layers[k]
        p = layer.weights @ m
        q = layer.weights @ c + layer.bias
        if not layer.has_relu:
            x = point(
                rows + [a @ p for a in a_unsafe],
                rhs + [b - a @ q for a, b in zip(a_unsafe, b_unsafe)],
            )
            return None if x is None else np.clip(x, box.lower, box.upper)
        i = len(on)
        if i == layer.out_dim:
            mask = np.array(on, dtype=np.float64)
            return search(k + 1, p * mask[:, None], q * mask, rows, rhs, [])
        for active in (True, False):
            row, b = (-p[i], q[i]) if active else (p[i], -q[i])
            if point(rows + [row], rhs + [b]) is None:
                continue
            found = search(k, m, c, rows + [row], rhs + [b], on + [active])
            if found is not None:
                return found
        return None

    return search(0, np.eye(n), np.zeros(n), [], [], [])
