"""
Sampled inequality probes.

Each probe draws test functions with log-uniform entries in [1e-6, 1e6]
(about a tenth of them set to exactly zero), evaluates both sides and reports
the worst relative slack (rhs - lhs) / max(|lhs|, |rhs|). A violation is a
slack below ``-tolerance``. Probes report; they never raise on failure.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable

import numpy as np

from entroscope.config import settings
from entroscope.errors import DomainError
from entroscope.functionals import (
    block_cov_flogf,
    block_entropy,
    block_var_sqrt,
    entropy,
    leave_one_out_mean,
    local_edge_functionals,
    log_factorial,
    psi,
    psi_bar_rho,
    psi_hat,
    shannon_h,
    variance,
)
from entroscope.state_spaces import (
    SpaceKind,
    StateSpace,
    block_partition,
    build_space,
    site_partition,
)
from entroscope.utils.typing import InequalityReport

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
DEFAULT_SAMPLES = 10_000
DEFAULT_TOLERANCE = 1e-12


def sample_values(
    rng: np.random.Generator, shape: tuple[int, ...], zero_fraction: float = 0.1
) -> np.ndarray:
    """Log-uniform entries in [1e-6, 1e6] with some exact zeros, never all zero."""
    values = np.exp(rng.uniform(math.log(1e-6), math.log(1e6), size=shape))
    values[rng.random(shape) < zero_fraction] = 0.0
    rows = values.reshape(-1, shape[-1])
    empty = ~np.any(rows > 0, axis=1)
    rows[empty, 0] = 1.0
    return values


def relative_slack(lhs: float, rhs: float) -> float:
    if lhs == rhs:
        return 0.0
    if math.isinf(rhs) and rhs > 0:
        return 1.0
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return (rhs - lhs) / scale


class _Tally:
    def __init__(self, name: str, tolerance: float) -> None:
        self.name = name
        self.tolerance = tolerance
        self.samples = 0
        self.worst = math.inf
        self.violations = 0

    def add(self, lhs: float, rhs: float) -> None:
        slack = relative_slack(lhs, rhs)
        self.samples += 1
        self.worst = min(self.worst, slack)
        if slack < -self.tolerance:
            self.violations += 1

    def report(self) -> InequalityReport:
        if self.violations:
            logger.warning(
                f"{self.name}: {self.violations} violations, worst slack {self.worst:.3g}"
            )
        return InequalityReport(
            name=self.name,
            samples=self.samples,
            worst_slack=self.worst if self.samples else 0.0,
            violations=self.violations,
            tolerance=self.tolerance,
            passed=self.violations == 0,
        )


def _rng(seed: int | None) -> np.random.Generator:
    return np.random.default_rng(settings.seed if seed is None else seed)


# =============================================================================
# Two-point and one-dimensional bounds
# =============================================================================


def local_chain(
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> InequalityReport:
    """2 log2 Var sqrt <= Ent <= 2 Var sqrt <= Cov(f, log f) / 2 on pairs."""
    rng = _rng(seed)
    pairs = sample_values(rng, (samples, 2))
    tally = _Tally("local-chain", tolerance)
    for a, b in pairs:
        terms = local_edge_functionals(float(a), float(b))
        tally.add(2 * LOG2 * terms.var_sqrt, terms.ent)
        tally.add(terms.ent, 2 * terms.var_sqrt)
        tally.add(2 * terms.var_sqrt, 0.5 * terms.cov_flogf)
    return tally.report()


def rho_monotonicity(
    samples: int = DEFAULT_SAMPLES,
    grid: int = 50,
    seed: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> InequalityReport:
    """psi_bar_rho(a, b) / h(rho) is non-decreasing on (0, 1/2]."""
    rng = _rng(seed)
    rhos = np.linspace(0.5 / grid, 0.5, grid)
    h = np.asarray(shannon_h(rhos))
    tally = _Tally("rho-monotonicity", tolerance)
    for a, b in sample_values(rng, (samples, 2)):
        ratios = np.asarray(psi_bar_rho(a, b, rhos)) / h
        for lower, upper in zip(ratios[:-1], ratios[1:]):
            tally.add(float(lower), float(upper))
    return tally.report()


def symmetrized_entropy_bound(
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> InequalityReport:
    """psi_bar_rho(a, b) <= (h(rho) / log 2) psi(a, b)."""
    rng = _rng(seed)
    pairs = sample_values(rng, (samples, 2))
    rhos = rng.uniform(0.0, 0.5, samples)
    tally = _Tally("symmetrized-entropy-bound", tolerance)
    for (a, b), rho in zip(pairs, rhos):
        lhs = float(psi_bar_rho(a, b, rho))
        rhs = float(shannon_h(rho)) / LOG2 * float(psi(a, b))
        tally.add(lhs, rhs)
    return tally.report()


def psi_hat_bound(
    n: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> InequalityReport:
    """psi_hat_{1/n}(a) <= (h(1/n) / log n) Ent(a), equality at Dirac masses."""
    if n < 2:
        raise DomainError("needs n >= 2")
    rng = _rng(seed)
    factor = float(shannon_h(1 / n)) / math.log(n)
    tally = _Tally(f"psi-hat-bound-n{n}", tolerance)
    vectors = list(sample_values(rng, (samples, n)))
    vectors.extend(np.eye(n) * rng.uniform(0.1, 10.0))
    for a in vectors:
        if np.all(a == a[0]):
            continue
        tally.add(psi_hat(a, 1 / n), factor * entropy(a))
    return tally.report()


def psi_hat_dirac_gap(n: int) -> float:
    """Relative gap between both sides of the psi_hat bound at a Dirac mass."""
    a = np.zeros(n)
    a[0] = 1.0
    lhs = psi_hat(a, 1 / n)
    rhs = float(shannon_h(1 / n)) / math.log(n) * entropy(a)
    return abs(rhs - lhs) / rhs


def averaged_entropy_contraction(
    n: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> InequalityReport:
    """Ent(a_bar) <= (1 - log(n - 1) / log n) Ent(a)."""
    if n < 3:
        raise DomainError("needs n >= 3")
    rng = _rng(seed)
    factor = 1 - math.log(n - 1) / math.log(n)
    tally = _Tally(f"averaged-entropy-contraction-n{n}", tolerance)
    for a in sample_values(rng, (samples, n)):
        tally.add(entropy(leave_one_out_mean(a)), factor * entropy(a))
    return tally.report()


def complete_graph_lsi_bound(
    n: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> InequalityReport:
    """Ent f <= [log(n - 1) / (1 - 2/n)] Var sqrt f on n uniform points."""
    if n < 3:
        raise DomainError("needs n >= 3")
    rng = _rng(seed)
    factor = math.log(n - 1) / (1 - 2 / n)
    tally = _Tally(f"complete-graph-lsi-bound-n{n}", tolerance)
    for f in sample_values(rng, (samples, n)):
        tally.add(entropy(f), factor * variance(np.sqrt(f)))
    return tally.report()


# =============================================================================
# Bounds over state spaces
# =============================================================================


def _random_block(rng: np.random.Generator, n: int) -> tuple[int, ...]:
    size = int(rng.integers(2, n + 1))
    return tuple(int(x) for x in rng.choice(n, size=size, replace=False))


def block_chain(
    space: StateSpace,
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> InequalityReport:
    """mu[Var_A sqrt f] <= mu[Ent_A f] <= mu[Cov_A(f, log f)] for random A and f."""
    rng = _rng(seed)
    tally = _Tally(f"block-chain-{space.describe()}", tolerance)
    for f in sample_values(rng, (samples, space.size)):
        part = block_partition(space, _random_block(rng, space.n))
        ent = block_entropy(f, part)
        tally.add(block_var_sqrt(f, part), ent)
        tally.add(ent, block_cov_flogf(f, part))
    return tally.report()


def block_lsi_bound(
    n: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> InequalityReport:
    """ent_A f <= [log(|A| - 1) / (1 - 2/|A|)] var_A sqrt f for |A| >= 3."""
    if n < 3:
        raise DomainError("needs n >= 3")
    rng = _rng(seed)
    space = build_space(SpaceKind.SINGLE, n)
    tally = _Tally(f"block-lsi-bound-n{n}", tolerance)
    for f in sample_values(rng, (samples, n)):
        size = int(rng.integers(3, n + 1))
        block = tuple(int(x) for x in rng.choice(n, size=size, replace=False))
        part = block_partition(space, block)
        factor = math.log(size - 1) / (1 - 2 / size)
        tally.add(block_entropy(f, part), factor * block_var_sqrt(f, part))
    return tally.report()


def entropy_decomposition(
    space: StateSpace,
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> InequalityReport:
    """Ent f = mu[Ent(f | site x)] + Ent[mu(f | site x)], for every vertex x."""
    rng = _rng(seed)
    partitions = [site_partition(space, x) for x in range(space.n)]
    tally = _Tally(f"entropy-decomposition-{space.describe()}", tolerance)
    for f in sample_values(rng, (samples, space.size)):
        total = entropy(f)
        for part in partitions:
            split = block_entropy(f, part) + entropy(part.average(f))
            tally.add(max(total, split), min(total, split))
    return tally.report()


def _permutation_probe(
    name: str,
    n: int,
    samples: int,
    seed: int | None,
    tolerance: float,
    functional: Callable[[np.ndarray], float],
    factor: float,
) -> InequalityReport:
    space = build_space(SpaceKind.PERMUTATIONS, n)
    partitions = [site_partition(space, x) for x in range(n)]
    rng = _rng(seed)
    tally = _Tally(f"{name}-n{n}", tolerance)
    for f in sample_values(rng, (samples, space.size)):
        lhs = sum(functional(part.average(f)) for part in partitions)
        tally.add(lhs, factor * functional(f))
    return tally.report()


def variance_contraction(
    n: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> InequalityReport:
    """sum_x Var mu(f | sigma_x) <= n / (n - 1) Var f on permutations."""
    return _permutation_probe(
        "variance-contraction", n, samples, seed, tolerance, variance, n / (n - 1)
    )


def entropy_subadditivity(
    n: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> InequalityReport:
    """sum_x Ent mu(f | sigma_x) <= (n log n / log n!) Ent f on permutations."""
    factor = n * math.log(n) / log_factorial(n)
    return _permutation_probe(
        "entropy-subadditivity", n, samples, seed, tolerance, entropy, factor
    )


def default_spaces() -> list[StateSpace]:
    return [
        build_space(SpaceKind.SINGLE, 5),
        build_space(SpaceKind.PRODUCT, 3, particles=2),
        build_space(SpaceKind.PERMUTATIONS, 4),
        build_space(SpaceKind.SLICE, 5, r=2),
    ]


def run_all(
    samples: int = DEFAULT_SAMPLES, seed: int | None = None, n_max: int = 5
) -> list[InequalityReport]:
    """Every probe at its default size."""
    reports: list[InequalityReport] = [
        local_chain(samples, seed),
        rho_monotonicity(samples, seed=seed),
        symmetrized_entropy_bound(samples, seed),
    ]
    sizes: Iterable[int] = range(3, n_max + 1)
    for n in sizes:
        reports.append(psi_hat_bound(n, samples, seed))
        reports.append(averaged_entropy_contraction(n, samples, seed))
        reports.append(complete_graph_lsi_bound(n, samples, seed))
        reports.append(variance_contraction(n, max(1, samples // 10), seed))
        reports.append(entropy_subadditivity(n, max(1, samples // 10), seed))
    for space in default_spaces():
        reports.append(block_chain(space, max(1, samples // 10), seed))
        reports.append(entropy_decomposition(space, max(1, samples // 10), seed))
    reports.append(block_lsi_bound(max(3, n_max), samples, seed))
    return reports
