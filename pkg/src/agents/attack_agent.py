# src/agents/attack_agent.py
"""
Counterexample search by projected sign-gradient ascent.

Two entry points share the same ascent:

- `local_counterexample_search` starts from one point (the LP solution at a
  feasible search state) and is called inside the solver loop.
- `pgd_prefilter` starts from the box center and random box points and is
  run before verification to settle easy instances by attack alone.

The ascent maximizes the smallest unsafe-constraint slack; a point is only
reported after `check_counterexample` accepts it.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.core.config import PGDConfig
from src.properties.problem import Counterexample, Valid, VerificationProblem, check_counterexample

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Found:
    counterexample: Counterexample
    iterations: int


@dataclass(frozen=True)
class NotFound:
    pass


SearchResult = Union[Found, NotFound]


def _slack_gradient(problem: VerificationProblem, x: np.ndarray) -> np.ndarray:
    """Input gradient of the currently smallest unsafe slack."""
    y = problem.network.evaluate(x)
    worst = min(problem.unsafe, key=lambda c: c.slack(y))
    a, _ = worst.as_upper_form()
    return problem.network.input_gradient(x, -a)


def _ascend(problem: VerificationProblem, start: np.ndarray, config: PGDConfig) -> SearchResult:
    box = problem.input_box
    step = config.step_size * box.widths
    x = box.clamp(start)
    for iteration in range(config.steps + 1):
        verdict = check_counterexample(problem, x)
        if isinstance(verdict, Valid):
            return Found(verdict.counterexample, iteration)
        if iteration == config.steps:
            break
        grad = _slack_gradient(problem, x)
        if not np.any(grad):
            break
        x = box.clamp(x + step * np.sign(grad))
    return NotFound()


def local_counterexample_search(
    problem: VerificationProblem,
    start,
    config: Optional[PGDConfig] = None,
) -> SearchResult:
    """
    Search for a counterexample near `start`.

    Args:
        problem: Problem (or subproblem) whose box bounds the search.
        start: Starting input; clamped into the box.
        config: Ascent parameters; only `steps` and `step_size` are used.

    Returns:
        Found with a validated counterexample, otherwise NotFound.
    """
    if not problem.unsafe:
        return NotFound()
    config = config or PGDConfig()
    result = _ascend(problem, np.asarray(start, dtype=np.float64), config)
    if isinstance(result, Found):
        logger.debug("local search hit after %d iterations", result.iterations)
    return result


def pgd_prefilter(
    problem: VerificationProblem,
    config: Optional[PGDConfig] = None,
    seed: int = 0,
) -> SearchResult:
    """
    Multi-restart attack over the whole box.

    The first restart starts at the box center, the others at uniformly
    random box points drawn from `seed`.
    """
    if not problem.unsafe:
        return NotFound()
    config = config or PGDConfig()
    rng = np.random.default_rng(seed)
    box = problem.input_box
    starts = [box.center()]
    if config.restarts > 1:
        starts.extend(box.sample(rng, config.restarts - 1))

    for restart, start in enumerate(starts):
        result = _ascend(problem, start, config)
        if isinstance(result, Found):
            logger.info("attack found a counterexample for %s (restart %d)", problem.name, restart)
            return result
    logger.debug("attack found nothing for %s after %d restarts", problem.name, len(starts))
    return NotFound()
