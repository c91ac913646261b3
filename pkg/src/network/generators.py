"""
Seeded generators for desk-scale networks and problems.

Used by the `generate` CLI command and by the test suite. Everything here is
a pure function of its arguments and the supplied random generator.
"""
from typing import List, Optional, Sequence

import numpy as np

from src.network.model import Network
from src.properties.problem import Box, LinearConstraint, Relation, VerificationProblem


def random_network(
    sizes: Sequence[int],
    rng: np.random.Generator,
    scale: float = 1.0,
) -> Network:
    """
    Gaussian-weight network with layer widths `sizes` (input first).

    Weights are drawn with standard deviation scale / sqrt(fan_in) and
    biases with standard deviation 0.5 * scale, which keeps a healthy share
    of hidden neurons crossing zero over unit-sized boxes.
    """
    if len(sizes) < 2:
        raise ValueError("a network needs an input size and at least one layer size")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, scale / np.sqrt(fan_in), size=(fan_out, fan_in)))
        biases.append(rng.normal(0.0, 0.5 * scale, size=fan_out))
    return Network.from_arrays(weights, biases)


def random_problem(
    rng: np.random.Generator,
    sizes: Sequence[int] = (2, 8, 8, 2),
    samples: int = 256,
    name: str = "random",
) -> VerificationProblem:
    """
    Random network, box and single-constraint unsafe region.

    The threshold is placed around the sampled maximum of a random output
    functional, so a seeded suite mixes holding and violated instances.
    """
    network = random_network(sizes, rng)
    center = rng.uniform(-1.0, 1.0, size=sizes[0])
    radius = rng.uniform(0.2, 1.0, size=sizes[0])
    box = Box(center - radius, center + radius)

    coeffs = rng.normal(size=network.output_dim)
    outputs = np.array([network.evaluate(x) for x in box.sample(rng, samples)])
    values = outputs @ coeffs
    spread = float(values.max() - values.min()) or 1.0
    bound = float(values.max() + rng.uniform(-0.15, 0.35) * spread)

    constraint = LinearConstraint(coeffs, Relation.GE, bound)
    return VerificationProblem(network=network, input_box=box, unsafe=(constraint,), name=name)


def random_suite(seed: int, count: int, sizes: Sequence[int] = (2, 8, 8, 2)) -> List[VerificationProblem]:
    """The seeded instance family used by the oracle tests and `cdclverify generate`."""
    rng = np.random.default_rng(seed)
    return [random_problem(rng, sizes, name=f"random_{seed}_{i:03d}") for i in range(count)]


def conflict_gadget(k: int, offsets: Optional[Sequence[float]] = None) -> VerificationProblem:
    """
    Holding problem with repeated infeasible sub-structure.

    Inputs (x, z) range over [-1, 1]^2. One hidden layer holds k neurons
    ReLU(z + c_i) that never reach the output, followed by a = ReLU(x) and
    b = ReLU(-x). Outputs are y0 = a + b = |x| and y1 = a - b = x, and the
    unsafe region asks for |x| >= 0.6 with |x| <= 0.2.

    Every phase combination of the k leading neurons hides the same small
    refutations over a and b, so learned clauses on a and b prune the
    remaining copies of that subtree.
    """
    if k < 0:
        raise ValueError("gadget size must be non-negative")
    if offsets is None:
        offsets = np.linspace(-0.4, 0.4, k) if k > 1 else np.full(k, 0.1)
    offsets = np.asarray(offsets, dtype=np.float64)
    if offsets.shape != (k,):
        raise ValueError(f"expected {k} offsets, got {offsets.shape}")

    hidden_w = np.zeros((k + 2, 2))
    hidden_w[:k, 1] = 1.0
    hidden_w[k, 0] = 1.0
    hidden_w[k + 1, 0] = -1.0
    hidden_b = np.concatenate([offsets, [0.0, 0.0]])

    out_w = np.zeros((2, k + 2))
    out_w[0, k:] = [1.0, 1.0]
    out_w[1, k:] = [1.0, -1.0]
    out_b = np.zeros(2)

    network = Network.from_arrays([hidden_w, out_w], [hidden_b, out_b])
    unsafe = (
        LinearConstraint([1.0, 0.0], Relation.GE, 0.6),
        LinearConstraint([0.0, 1.0], Relation.LE, 0.2),
        LinearConstraint([0.0, 1.0], Relation.GE, -0.2),
    )
    box = Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    return VerificationProblem(network=network, input_box=box, unsafe=unsafe, name=f"gadget_{k}")


def depth_one_problem() -> VerificationProblem:
    """
    One input, two hidden neurons, refuted by bounds under either phase of
    the only crossing neuron.

    a = ReLU(x) crosses zero over [-1, 1]; p = ReLU(x + 2) is always active.
    y0 = a and y1 = a - p + 2 = a - x, unsafe y0 >= 0.5 and y1 >= 0.3.
    """
    network = Network.from_arrays(
        [[[1.0], [1.0]], [[1.0, 0.0], [1.0, -1.0]]],
        [[0.0, 2.0], [0.0, 2.0]],
    )
    unsafe = (
        LinearConstraint([1.0, 0.0], Relation.GE, 0.5),
        LinearConstraint([0.0, 1.0], Relation.GE, 0.3),
    )
    return VerificationProblem(
        network=network, input_box=Box(np.array([-1.0]), np.array([1.0])), unsafe=unsafe,
        name="depth_one",
    )


def acas_shaped_network(rng: np.random.Generator, hidden_layers: int = 6, width: int = 50) -> Network:
    """5 inputs, `hidden_layers` x `width` ReLU layers, 5 outputs."""
    return random_network([5] + [width] * hidden_layers + [5], rng, scale=0.5)
