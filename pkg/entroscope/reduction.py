"""
Electric network reduction at a node, and what it does to the constants.

Eliminating x replaces the weights on the remaining vertices by
c_yz + c_xy c_xz / sum_w c_xw. Remaining vertices keep their sorted order;
``ReductionStep.mapping[new] == old``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from entroscope.constants import all_constants
from entroscope.errors import DomainError
from entroscope.generators import (
    DirichletEvaluator,
    Selector,
    Term,
    generator_from_terms,
)
from entroscope.optimize import OptimizerOptions, RatioProblem, minimize_ratio
from entroscope.probes import sample_values
from entroscope.state_spaces import (
    SpaceKind,
    WeightedGraph,
    block_partition,
    build_space,
)
from entroscope.utils.typing import (
    InequalityCheck,
    MonotonicityReport,
    OctopusReport,
    ReductionReport,
)

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
OCTOPUS_RESTARTS = 64
OCTOPUS_MAX_N = 5


@dataclass(frozen=True, eq=False)
class ReductionStep:
    before: WeightedGraph
    node: int
    after: WeightedGraph
    star_weights: np.ndarray
    mapping: tuple[int, ...]

    def to_report(self) -> ReductionReport:
        return ReductionReport(
            node=self.node,
            before=self.before.weights.tolist(),
            after=self.after.weights.tolist(),
            star_weights=self.star_weights.tolist(),
            mapping=list(self.mapping),
        )


def star_weights(g: WeightedGraph, x: int) -> np.ndarray:
    """c*_yz = c_xy c_xz / sum_w c_xw on all n vertices (zero row and column at x)."""
    if not 0 <= x < g.n:
        raise DomainError(f"vertex {x} outside 0..{g.n - 1}")
    degree = g.degree(x)
    if degree <= 0:
        raise DomainError(f"vertex {x} is isolated; nothing to reduce")
    row = g.weights[x]
    star = np.outer(row, row) / degree
    np.fill_diagonal(star, 0.0)
    return star


def reduce(g: WeightedGraph, x: int) -> ReductionStep:
    """Eliminate vertex x from the network."""
    if g.n < 3:
        raise DomainError("reduction needs at least three vertices")
    star = star_weights(g, x)
    keep = tuple(y for y in range(g.n) if y != x)
    index = np.array(keep)
    after_weights = g.weights[np.ix_(index, index)] + star[np.ix_(index, index)]
    after = WeightedGraph(n=g.n - 1, weights=after_weights)
    logger.debug(f"Reduced vertex {x} with degree {g.degree(x):.6g}")
    return ReductionStep(
        before=g,
        node=x,
        after=after,
        star_weights=star[np.ix_(index, index)],
        mapping=keep,
    )


# =============================================================================
# Monotonicity under reduction
# =============================================================================


def _check(name: str, lhs: float, rhs: float, rtol: float) -> InequalityCheck:
    return InequalityCheck(
        name=name, lhs=lhs, rhs=rhs, holds=lhs <= rhs + rtol * max(1.0, abs(rhs))
    )


def monotonicity_report(
    g: WeightedGraph,
    x: int,
    options: OptimizerOptions | None = None,
    rtol: float = 1e-6,
) -> MonotonicityReport:
    """The four constants before and after reducing x, with the orderings that always hold."""
    step = reduce(g, x)
    before = all_constants(g, None, options)
    after = all_constants(step.after, None, options)
    checks = [
        _check("gap(G) <= gap(G_x)", before["gap"], after["gap"], rtol),
        _check("lsi(G) <= lsi(G_x)", before["lsi"], after["lsi"], rtol),
        _check("mlsi(G) <= mlsi(G_x)", before["mlsi"], after["mlsi"], rtol),
        _check("log2*kappa(G) <= kappa(G_x)", LOG2 * before["kappa"], after["kappa"], rtol),
    ]
    leaf = g.is_leaf(x)
    if leaf:
        checks.append(_check("kappa(G) <= kappa(G_x)", before["kappa"], after["kappa"], rtol))
    passed = all(check.holds for check in checks)
    if not passed:
        failed = [check.name for check in checks if not check.holds]
        logger.warning(f"Reduction at {x}: {', '.join(failed)} failed")
    return MonotonicityReport(
        node=x,
        leaf=leaf,
        before=before,
        after=after,
        checks=checks,
        passed=passed,
        reduction=step.to_report(),
    )


# =============================================================================
# Octopus comparison on permutations
# =============================================================================


def octopus_terms(g: WeightedGraph, x: int) -> tuple[tuple[Term, ...], tuple[Term, ...]]:
    """(star pair terms c*_yz, star's own terms c_xy) on the permutations of g's vertices."""
    if g.n > OCTOPUS_MAX_N:
        raise DomainError(f"octopus probe runs on n <= {OCTOPUS_MAX_N}, got n={g.n}")
    space = build_space(SpaceKind.PERMUTATIONS, g.n)
    star = star_weights(g, x)
    others = [y for y in range(g.n) if y != x]
    reduced = tuple(
        (float(star[y, z]), block_partition(space, (y, z)))
        for y, z in itertools.combinations(others, 2)
        if star[y, z] > 0
    )
    if not reduced:
        raise DomainError(f"vertex {x} needs at least two neighbors")
    own = tuple(
        (float(g.weights[x, y]), block_partition(space, (x, y)))
        for y in others
        if g.weights[x, y] > 0
    )
    return reduced, own


def octopus_probe(
    g: WeightedGraph,
    x: int,
    mode: Literal["variance", "entropy"] = "variance",
    samples: int = 1000,
    options: OptimizerOptions | None = None,
    seed: int | None = None,
    tolerance: float = 1e-10,
) -> OctopusReport:
    """Compare sum_{y<z} c*_yz mu[X_yz f] against sum_y c_xy mu[X_xy f].

    The variance comparison is a theorem and gets a pass/fail from the
    smallest eigenvalue of the difference of the two quadratic forms. The
    entropy comparison is open: the worst ratio found by the optimizer is
    recorded, together with the weakened form (ratio >= log 2) that is known
    to hold.
    """
    if mode not in ("variance", "entropy"):
        raise DomainError(f"unknown octopus mode {mode!r}")
    selector: Selector = "variance" if mode == "variance" else "entropy"
    reduced, own = octopus_terms(g, x)
    space = reduced[0][1].space
    lhs = DirichletEvaluator(space=space, terms=reduced, selector=selector)
    rhs = DirichletEvaluator(space=space, terms=own, selector=selector)

    options = options or OptimizerOptions(restarts=OCTOPUS_RESTARTS)
    rng = np.random.default_rng(options.seed if seed is None else seed)
    min_slack, worst_ratio = math.inf, math.inf
    for f in sample_values(rng, (samples, space.size)):
        f = f / f.mean()
        left, right = lhs(f), rhs(f)
        min_slack = min(min_slack, right - left)
        if left > 0:
            worst_ratio = min(worst_ratio, right / left)
    violations = 0
    weakened: bool | None = None
    passed: bool | None = None

    if mode == "variance":
        difference = (
            generator_from_terms(space, reduced).entries
            - generator_from_terms(space, own).entries
        )
        smallest = float(np.linalg.eigvalsh(difference)[0])
        scale = max(1.0, float(np.abs(difference).max()))
        passed = smallest >= -tolerance * scale
        violations = int(min_slack < -tolerance)
    else:
        problem = RatioProblem(numerator=rhs, denominator=lhs, quantity="ratio")
        search = minimize_ratio(problem, options)
        worst_ratio = min(worst_ratio, search.value)
        if search.minimizer is not None:
            f = np.asarray(search.minimizer)
            min_slack = min(min_slack, rhs(f) - lhs(f))
        weakened = worst_ratio >= LOG2 * (1 - tolerance)
        violations = int(worst_ratio < 1 - tolerance)
        if violations:
            logger.warning(
                f"Entropy octopus at {x}: ratio {worst_ratio:.10g} below 1 on {space.describe()}"
            )
    return OctopusReport(
        mode=mode,
        node=x,
        samples=samples,
        min_slack=min_slack,
        worst_ratio=worst_ratio,
        violations=violations,
        weakened_holds=weakened,
        passed=passed,
    )
