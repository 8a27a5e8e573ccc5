"""
Ratio minimization for the entropy-type constants.

kappa = inf_f D(f) / E(f) with D a Dirichlet form and E the entropy (or the
variance, or a second Dirichlet form). The interior search is a Dinkelbach
iteration: for the current ratio k, minimize the shift-invariant function

    G_k(g) = [D(exp g) - k E(exp g)] / mu(exp g)

with ``scipy.optimize.minimize`` (L-BFGS-B), then set k to the ratio at the
minimizer. Dirac masses, two-valued profiles and the linearization limit are
evaluated alongside, so boundary extremizers are never missed.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import optimize

from entroscope.config import settings
from entroscope.errors import DomainError
from entroscope.functionals import entropy, variance
from entroscope.generators import DirichletEvaluator
from entroscope.state_spaces import SpaceKind, StateSpace
from entroscope.utils.parallel import argmin_first, thread_map
from entroscope.utils.typing import Candidate, ConstantReport, Diagnostics, Quantity

logger = logging.getLogger(__name__)

# Linearization f = 1 + eps g: D/Ent tends to this multiple of the spectral gap.
LINEARIZATION_FACTOR = {"entropy": 1.0, "var_sqrt": 0.5, "cov_flogf": 2.0}

# Largest |g| the interior search may use; MLSI keeps min f / max f >= 1e-12.
LOG_BOUND = 40.0
MLSI_LOG_BOUND = 0.5 * math.log(1e12)


@dataclass(frozen=True)
class OptimizerOptions:
    tol: float = field(default_factory=lambda: settings.tol)
    restarts: int = field(default_factory=lambda: settings.restarts)
    max_iters: int = field(default_factory=lambda: settings.max_iters)
    seed: int = field(default_factory=lambda: settings.seed)
    threads: int | None = None
    max_outer: int = 100
    two_valued: int = 4
    subset_profiles_max_n: int = 10

    def __post_init__(self) -> None:
        if not 0 < self.tol < 1:
            raise DomainError("tol must lie in (0, 1)")
        if self.restarts < 0 or self.max_iters < 1:
            raise DomainError("restarts must be >= 0 and max_iters >= 1")


@dataclass(frozen=True, eq=False)
class RatioProblem:
    """numerator(f) / denominator(f) over nonnegative f on one space."""

    numerator: DirichletEvaluator
    denominator: Literal["entropy", "variance"] | DirichletEvaluator = "entropy"
    quantity: Quantity = "kappa"

    def __post_init__(self) -> None:
        if isinstance(self.denominator, DirichletEvaluator):
            if self.denominator.space != self.numerator.space:
                raise DomainError("numerator and denominator live on different spaces")
        elif self.denominator not in ("entropy", "variance"):
            raise DomainError(f"unknown denominator {self.denominator!r}")

    @property
    def space(self) -> StateSpace:
        return self.numerator.space

    def denominator_value(self, f: np.ndarray) -> float:
        if isinstance(self.denominator, DirichletEvaluator):
            return self.denominator(f)
        return entropy(f) if self.denominator == "entropy" else variance(f)

    def denominator_and_log_gradient(self, f: np.ndarray) -> tuple[float, np.ndarray]:
        if isinstance(self.denominator, DirichletEvaluator):
            return self.denominator.value_and_log_gradient(f)
        size, m = f.shape[0], f.mean()
        if self.denominator == "entropy":
            log_ratio = np.log(f / m)
            return float(np.mean(f * log_ratio)), f * log_ratio / size
        return float(np.var(f)), 2 * f * (f - m) / size

    def ratio(self, f: np.ndarray) -> float:
        den = self.denominator_value(f)
        if not den > 1e-300:
            return math.inf
        return self.numerator(f) / den

    def dirac_ratios(self) -> np.ndarray:
        """Ratio at every Dirac mass, in closed form (inf where undefined)."""
        num = self.numerator.dirac_values()
        size = self.space.size
        if isinstance(self.denominator, DirichletEvaluator):
            den = self.denominator.dirac_values()
        elif self.denominator == "entropy":
            den = np.full(size, math.log(size) / size)
        else:
            den = np.full(size, (1 - 1 / size) / size)
        out = np.full(size, np.inf)
        np.divide(num, den, out=out, where=(den > 0) & np.isfinite(num))
        return out


@dataclass
class _Found:
    value: float
    kind: Candidate
    values: np.ndarray | None = None
    iterations: int = 0
    converged: bool = True
    limit: bool = False
    note: str | None = None


# =============================================================================
# Interior search
# =============================================================================


def _dinkelbach(
    problem: RatioProblem, g0: np.ndarray, options: OptimizerOptions
) -> _Found:
    bound = MLSI_LOG_BOUND if problem.numerator.selector == "cov_flogf" else LOG_BOUND
    size = g0.shape[0]
    bounds = [(-bound, bound)] * size
    g = np.clip(g0 - g0.max() + bound, -bound, bound)
    kappa = problem.ratio(np.exp(g))
    if not math.isfinite(kappa):
        return _Found(value=math.inf, kind="interior", converged=False)

    def objective(x: np.ndarray, k: float) -> tuple[float, np.ndarray]:
        f = np.exp(x - x.max())
        m = f.mean()
        num, num_grad = problem.numerator.value_and_log_gradient(f)
        den, den_grad = problem.denominator_and_log_gradient(f)
        value = num - k * den
        grad = (num_grad - k * den_grad) / m - value / m**2 * f / size
        return value / m, grad

    iterations, converged = 0, False
    for _ in range(options.max_outer):
        result = optimize.minimize(
            objective,
            g,
            args=(kappa,),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": options.max_iters, "ftol": 1e-15, "gtol": 1e-12},
        )
        iterations += int(result.nit)
        candidate = np.clip(result.x - result.x.max() + bound, -bound, bound)
        new_kappa = problem.ratio(np.exp(candidate))
        if not new_kappa < kappa:
            converged = True
            break
        step = kappa - new_kappa
        g, kappa = candidate, new_kappa
        if step <= options.tol * max(1.0, kappa):
            converged = True
            break
    f = np.exp(g)
    boundary = bool(np.any(g <= -bound + 1e-9))
    return _Found(
        value=kappa,
        kind="interior",
        values=f / f.mean(),
        iterations=iterations,
        converged=converged,
        note="boundary" if boundary else None,
    )


def _start(problem: RatioProblem, seed: int, index: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    scale = rng.uniform(0.5, 3.0)
    return rng.normal(0.0, scale, problem.space.size)


# =============================================================================
# Candidate set
# =============================================================================


def _dirac_candidate(problem: RatioProblem) -> _Found | None:
    ratios = problem.dirac_ratios()
    index = argmin_first(ratios)
    if index < 0 or not math.isfinite(ratios[index]):
        return None
    values = np.zeros(problem.space.size)
    values[index] = problem.space.size
    return _Found(value=float(ratios[index]), kind="dirac", values=values)


def _profile_candidate(
    problem: RatioProblem, support: tuple[int, ...] | np.ndarray
) -> _Found | None:
    """f = 1 on the support and exp(u) elsewhere, best u by a bounded line search."""
    size = problem.space.size
    mask = np.zeros(size, dtype=bool)
    mask[np.asarray(support)] = True
    bound = MLSI_LOG_BOUND if problem.numerator.selector == "cov_flogf" else 30.0

    def profile(u: float) -> np.ndarray:
        return np.where(mask, 1.0, math.exp(u))

    result = optimize.minimize_scalar(
        lambda u: problem.ratio(profile(u)),
        bounds=(-bound, bound),
        method="bounded",
        options={"xatol": 1e-10},
    )
    if not math.isfinite(result.fun):
        return None
    f = profile(float(result.x))
    return _Found(
        value=float(result.fun),
        kind="two-valued",
        values=f / f.mean(),
        iterations=int(result.nfev),
    )


def _two_valued_candidates(
    problem: RatioProblem, options: OptimizerOptions
) -> list[_Found]:
    space = problem.space
    ranking = problem.numerator.with_selector("entropy").dirac_values()
    order = np.argsort(ranking, kind="stable")[: options.two_valued]
    supports: list[tuple[int, ...]] = [(int(s),) for s in order]
    if space.kind is SpaceKind.SINGLE and space.n <= options.subset_profiles_max_n:
        for k in range(2, space.n // 2 + 1):
            supports.extend(itertools.combinations(range(space.n), k))
    found = thread_map(lambda s: _profile_candidate(problem, s), supports, options.threads)
    return [c for c in found if c is not None]


def _linearization_candidate(problem: RatioProblem) -> _Found | None:
    factor = LINEARIZATION_FACTOR.get(problem.numerator.selector)
    if factor is None or problem.denominator != "entropy":
        return None
    if problem.space.size > settings.max_dense:
        return None
    eigenvalues, vectors = problem.numerator.generator().spectrum
    if eigenvalues.shape[0] < 2:
        return None
    direction = vectors[:, 1]
    values = 1.0 + 1e-3 * direction / np.abs(direction).max()
    return _Found(
        value=factor * max(0.0, float(eigenvalues[1])),
        kind="linearization",
        values=values / values.mean(),
        limit=True,
    )


# =============================================================================
# Entry point
# =============================================================================


def minimize_ratio(
    problem: RatioProblem, options: OptimizerOptions | None = None
) -> ConstantReport:
    """Best ratio over the interior multistart and the closed candidate set."""
    options = options or OptimizerOptions()
    space = problem.space
    if space.size < 2:
        raise DomainError("a ratio problem needs at least two states")

    analytic = [
        c
        for c in (_dirac_candidate(problem), _linearization_candidate(problem))
        if c is not None
    ]
    profiles = _two_valued_candidates(problem, options)

    starts: list[np.ndarray] = []
    if options.restarts > 0 and profiles:
        best_profile = profiles[argmin_first(c.value for c in profiles)]
        assert best_profile.values is not None
        starts.append(np.log(np.maximum(best_profile.values, 1e-30)))
    for index in range(len(starts), options.restarts):
        starts.append(_start(problem, options.seed, index))
    interior = thread_map(
        lambda g0: _dinkelbach(problem, g0, options), starts, options.threads
    )
    for index, run in enumerate(interior):
        logger.debug(
            f"restart {index}: ratio={run.value:.12g} iterations={run.iterations} "
            f"converged={run.converged}"
        )

    numeric = profiles + interior
    best_numeric = numeric[argmin_first(c.value for c in numeric)] if numeric else None
    best_analytic = (
        analytic[argmin_first(c.value for c in analytic)] if analytic else None
    )
    if best_analytic is not None and (
        best_numeric is None
        or best_analytic.value
        <= best_numeric.value + options.tol * max(1.0, abs(best_numeric.value))
    ):
        chosen = best_analytic
    elif best_numeric is not None:
        chosen = best_numeric
    else:
        raise DomainError("no finite candidate ratio (is the denominator degenerate?)")

    finite = [run.value for run in interior if math.isfinite(run.value)]
    boundary = chosen.kind == "dirac" or chosen.note == "boundary"
    notes = []
    if boundary and problem.numerator.selector == "cov_flogf":
        notes.append("minimizer at the positivity floor; the value is an upper bound")
    if chosen.limit:
        notes.append("value is the linearization limit at the constant function")

    diagnostics = Diagnostics(
        iterations=sum(c.iterations for c in numeric),
        restarts=len(interior),
        converged=chosen.converged,
        seed=options.seed,
        candidate=chosen.kind,
        limit=chosen.limit,
        boundary=boundary,
        restart_scatter=(max(finite) - min(finite)) if finite else None,
        notes=notes,
    )
    logger.info(
        f"{problem.quantity} on {space.describe()}: {chosen.value:.12g} "
        f"({chosen.kind}, {len(interior)} restarts)"
    )
    return ConstantReport(
        quantity=problem.quantity,
        value=max(0.0, chosen.value),
        space=space.describe(),
        minimizer=None if chosen.values is None else chosen.values.tolist(),
        diagnostics=diagnostics,
    )
