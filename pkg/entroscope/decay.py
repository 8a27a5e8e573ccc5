"""
Entropy and variance along the semigroup f_t = exp(tL) f0, and mixing times.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from typing import Literal

import numpy as np
from scipy import optimize

from entroscope.errors import DomainError
from entroscope.functionals import (
    DensityFunction,
    FunctionLike,
    as_values,
    entropy,
    variance,
)
from entroscope.generators import GeneratorMatrix
from entroscope.utils.parallel import thread_map
from entroscope.utils.typing import DecayCurve, EnvelopeReport, MixingReport

logger = logging.getLogger(__name__)

DEFAULT_STEPS = 24
MASS_TOL = 1e-9


def time_grid(
    generator: GeneratorMatrix, steps: int = DEFAULT_STEPS, t0: float | None = None
) -> list[float]:
    """0 followed by t0 2^k, k < steps, with t0 = 0.01 / gap by default."""
    if t0 is None:
        eigenvalues, _ = generator.spectrum
        gap = float(eigenvalues[1]) if eigenvalues.shape[0] > 1 else 0.0
        if gap <= 1e-12:
            raise DomainError("the generator has no spectral gap; give t0 explicitly")
        t0 = 0.01 / gap
    if t0 <= 0 or steps < 1:
        raise DomainError("t0 must be positive and steps at least 1")
    return [0.0] + [t0 * 2.0**k for k in range(steps)]


def evolve(
    generator: GeneratorMatrix,
    f0: FunctionLike,
    times: Sequence[float] | None = None,
    rate_bound: float | None = None,
    threads: int | None = None,
) -> DecayCurve:
    """Ent and Var of f_t on the time grid, from the spectral decomposition."""
    if isinstance(f0, DensityFunction) and f0.space != generator.space:
        raise DomainError("density and generator live on different spaces")
    values = as_values(f0)
    if values.shape[0] != generator.space.size:
        raise DomainError(
            f"expected {generator.space.size} values, got {values.shape[0]}"
        )
    if np.any(values < 0) or abs(values.mean() - 1.0) > MASS_TOL:
        raise DomainError("f0 must be a nonnegative density with mean 1")
    grid = list(time_grid(generator) if times is None else times)
    if any(t < 0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("times must be nonnegative and increasing")

    path = thread_map(lambda t: generator.evolve(values, t), grid, threads)
    ent_values = [entropy(np.maximum(f, 0.0)) for f in path]
    var_values = [variance(f) for f in path]
    mass_error = max(abs(float(f.mean()) - 1.0) for f in path)
    min_value = min(float(f.min()) for f in path)
    if min_value < -1e-12:
        logger.warning(f"Positivity lost along the semigroup: min value {min_value:.3g}")
    return DecayCurve(
        times=grid,
        ent_values=ent_values,
        var_values=var_values,
        rate_bound=rate_bound,
        mass_error=mass_error,
        min_value=min_value,
    )


def check_envelope(
    curve: DecayCurve, kappa: float, tolerance: float = 1e-10
) -> EnvelopeReport:
    """Ent(f_t) <= exp(-kappa t) Ent(f_0) at every grid point."""
    ent0 = curve.ent_values[0]
    excess = [
        ent - math.exp(-kappa * (t - curve.times[0])) * ent0
        for t, ent in zip(curve.times, curve.ent_values)
    ]
    worst = max(excess)
    rate = 0.0
    if len(curve.times) > 1 and ent0 > 0 and curve.ent_values[1] > 0:
        rate = -(math.log(curve.ent_values[1]) - math.log(ent0)) / (
            curve.times[1] - curve.times[0]
        )
    holds = worst <= tolerance * max(1.0, ent0)
    if not holds:
        logger.info(f"Envelope with rate {kappa:.6g} exceeded by {worst:.3g}")
    return EnvelopeReport(
        kappa=kappa,
        holds=holds,
        worst_excess=worst,
        empirical_rate=rate,
        tolerance=tolerance,
        curve=curve.model_copy(update={"rate_bound": kappa}),
    )


def entropy_production(generator: GeneratorMatrix, f: FunctionLike) -> float:
    """-mu(Lf log f), the rate at which Ent decreases at f."""
    values = as_values(f)
    flow = generator.apply(values)
    positive = values > 0
    if np.any(~positive & (np.abs(flow) > 0)):
        return math.inf
    logs = np.log(np.where(positive, values, 1.0))
    return float(-np.mean(flow * logs))


# =============================================================================
# Mixing times
# =============================================================================


def tv_distance(generator: GeneratorMatrix, t: float) -> float:
    """Worst total-variation distance to uniform over Dirac starts."""
    kernel = generator.semigroup(t)
    return float(0.5 * np.abs(kernel - 1.0 / generator.space.size).sum(axis=1).max())


def exact_mixing_time(generator: GeneratorMatrix, eps: float = 0.25) -> float:
    """inf{t : worst-start total variation <= eps}."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    if tv_distance(generator, 0.0) <= eps:
        return 0.0
    eigenvalues, _ = generator.spectrum
    if eigenvalues.shape[0] < 2 or eigenvalues[1] <= 1e-12:
        raise DomainError("the generator is not irreducible; it never mixes")
    high = 1.0 / float(eigenvalues[1])
    while tv_distance(generator, high) > eps:
        high *= 2.0
    return float(
        optimize.brentq(lambda t: tv_distance(generator, t) - eps, 0.0, high, xtol=1e-12)
    )


def pinsker_mixing_bound(
    kappa: float,
    kind: Literal["synchronous", "perm"],
    n: int,
    particles: int | None = None,
    constant: float = 1.0,
    eps: float = 0.25,
    generator: GeneratorMatrix | None = None,
) -> MixingReport:
    """C (log N + log log n) / kappa for N synchronous particles on n vertices,
    C log n / kappa for permutations. C is a free parameter, default 1.

    When a generator is given the exact mixing time is reported alongside.
    """
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    if constant <= 0:
        raise DomainError("the constant C must be positive")
    if kind == "perm":
        if n < 2:
            raise DomainError("permutations need n >= 2")
        bound = constant * math.log(n) / kappa
    elif kind == "synchronous":
        if particles is None or particles < 1 or n < 3:
            raise DomainError("synchronous bound needs N >= 1 particles and n >= 3")
        bound = constant * (math.log(particles) + math.log(math.log(n))) / kappa
    else:
        raise DomainError(f"unknown system kind {kind!r}")
    exact = exact_mixing_time(generator, eps) if generator is not None else None
    return MixingReport(
        kappa=kappa, constant=constant, bound=bound, eps=eps, exact_mixing_time=exact
    )
