"""
Entropy and variance functionals.

Global, block-conditional and the two-point functionals psi, psi_rho and
friends. Everything is 64-bit and uses the 0 log 0 = 0 convention through
``scipy.special.xlogy`` and ``entr``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import entr, gammaln, xlog1py, xlogy

from entroscope.errors import DomainError
from entroscope.state_spaces import BlockPartition, StateSpace


@dataclass(frozen=True, eq=False)
class DensityFunction:
    """Nonnegative test function f over the states of a space."""

    space: StateSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.shape[0] != self.space.size:
            raise DomainError(
                f"expected {self.space.size} values for {self.space.describe()}, "
                f"got {values.shape[0]}"
            )
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError("a density must be finite and nonnegative")
        if not np.any(values > 0):
            raise DomainError("a density cannot vanish identically")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def dirac(cls, space: StateSpace, index: int) -> DensityFunction:
        values = np.zeros(space.size)
        values[index] = 1.0
        return cls(space=space, values=values)

    @classmethod
    def constant(cls, space: StateSpace, c: float = 1.0) -> DensityFunction:
        return cls(space=space, values=np.full(space.size, c))

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def normalized(self) -> DensityFunction:
        """The same function scaled to mu(f) = 1."""
        return DensityFunction(space=self.space, values=self.values / self.mean)


FunctionLike = Union[DensityFunction, ArrayLike]


def as_values(f: FunctionLike) -> np.ndarray:
    if isinstance(f, DensityFunction):
        return f.values
    return np.asarray(f, dtype=float).reshape(-1)


def _check(f: FunctionLike, part: BlockPartition) -> np.ndarray:
    if isinstance(f, DensityFunction) and f.space != part.space:
        raise DomainError(
            f"function on {f.space.describe()} but partition on "
            f"{part.space.describe()}"
        )
    values = as_values(f)
    if values.shape[0] != part.labels.shape[0]:
        raise DomainError(
            f"function has {values.shape[0]} values, partition covers "
            f"{part.labels.shape[0]} states"
        )
    return values


def safe_ratio(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    """x / m where m > 0 and 1 elsewhere (those x are zero)."""
    out = np.ones(np.broadcast(x, m).shape)
    np.divide(x, m, out=out, where=m > 0)
    return out


# =============================================================================
# Global functionals
# =============================================================================


def entropy(f: FunctionLike) -> float:
    """Ent f = mu[f log(f / mu(f))]."""
    values = as_values(f)
    m = values.mean()
    if m <= 0:
        return 0.0
    return max(0.0, float(xlogy(values, values / m).mean()))


def variance(f: FunctionLike) -> float:
    return float(np.var(as_values(f)))


# =============================================================================
# Block-conditional functionals
# =============================================================================


def block_entropy(f: FunctionLike, part: BlockPartition) -> float:
    """mu[Ent_A f], the expected relative entropy within each class."""
    values = _check(f, part)
    m = part.average(values)
    return max(0.0, float(xlogy(values, safe_ratio(values, m)).mean()))


def block_variance(f: FunctionLike, part: BlockPartition) -> float:
    values = _check(f, part)
    return float(np.mean((values - part.average(values)) ** 2))


def block_var_sqrt(f: FunctionLike, part: BlockPartition) -> float:
    """mu[Var_A sqrt(f)]."""
    root = np.sqrt(_check(f, part))
    return float(np.mean((root - part.average(root)) ** 2))


def block_cov_flogf(f: FunctionLike, part: BlockPartition) -> float:
    """mu[Cov_A(f, log f)]; +inf when a class mixes zero and positive values."""
    values = _check(f, part)
    m = part.average(values)
    if np.any((values == 0) & (m > 0)):
        return math.inf
    log_values = np.log(np.where(values > 0, values, 1.0))
    return max(0.0, float(np.mean((values - m) * log_values)))


# =============================================================================
# Two-point and one-dimensional functionals
# =============================================================================


def psi(a: ArrayLike, b: ArrayLike) -> float | np.ndarray:
    """(1/2) a log a + (1/2) b log b - m log m with m = (a + b) / 2."""
    return psi_rho(a, b, 0.5)


def bernoulli_mean(a: ArrayLike, b: ArrayLike, rho: ArrayLike) -> np.ndarray:
    """mu_rho(a, b) = rho a + (1 - rho) b."""
    rho = np.asarray(rho, dtype=float)
    return rho * np.asarray(a, dtype=float) + (1 - rho) * np.asarray(b, dtype=float)


def psi_rho(a: ArrayLike, b: ArrayLike, rho: ArrayLike) -> float | np.ndarray:
    """Entropy of (a, b) with respect to the Bernoulli(rho) law.

    Written with log1p of a / m - 1 and b / m - 1, which stays accurate when
    a and b are close.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any((rho < 0) | (rho > 1)):
        raise DomainError("rho must lie in [0, 1]")
    m = bernoulli_mean(a, b, rho)
    d = a - b
    zeros = np.zeros(np.broadcast(a, b, rho).shape)
    up = np.divide((1 - rho) * d, m, out=zeros.copy(), where=m > 0)
    down = np.divide(-rho * d, m, out=zeros.copy(), where=m > 0)
    value = rho * xlog1py(a, up) + (1 - rho) * xlog1py(b, down)
    value = np.maximum(0.0, value)
    return float(value) if value.ndim == 0 else value


def psi_bar_rho(a: ArrayLike, b: ArrayLike, rho: ArrayLike) -> float | np.ndarray:
    """Symmetrized entropy (psi_rho(a, b) + psi_rho(b, a)) / 2."""
    value = (np.asarray(psi_rho(a, b, rho)) + np.asarray(psi_rho(b, a, rho))) / 2
    return float(value) if value.ndim == 0 else value


def shannon_h(rho: ArrayLike) -> float | np.ndarray:
    rho = np.asarray(rho, dtype=float)
    value = entr(rho) + entr(1 - rho)
    return float(value) if value.ndim == 0 else value


def leave_one_out_mean(a: ArrayLike) -> np.ndarray:
    """a_bar_i = (sum_{j != i} a_j) / (n - 1)."""
    a = np.asarray(a, dtype=float)
    return (a.sum() - a) / (a.shape[0] - 1)


def psi_hat(a: ArrayLike, rho: float) -> float:
    """(1/n) sum_i psi_rho(a_i, a_bar_i)."""
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.shape[0] < 2:
        raise DomainError("psi_hat needs at least two entries")
    return float(np.mean(psi_rho(a, leave_one_out_mean(a), rho)))


class LocalEdgeTerms(NamedTuple):
    var_sqrt: float
    ent: float
    cov_flogf: float
    boundary: bool


def local_edge_functionals(a: float, b: float) -> LocalEdgeTerms:
    """Var sqrt f, Ent f and Cov(f, log f) of (a, b) under the fair coin."""
    if a < 0 or b < 0:
        raise DomainError("edge values must be nonnegative")
    var_sqrt = 0.25 * (math.sqrt(a) - math.sqrt(b)) ** 2
    ent = float(psi(a, b))
    if a == b:
        return LocalEdgeTerms(var_sqrt, ent, 0.0, False)
    if a == 0 or b == 0:
        return LocalEdgeTerms(var_sqrt, ent, math.inf, True)
    return LocalEdgeTerms(var_sqrt, ent, 0.25 * (a - b) * math.log(a / b), False)


# =============================================================================
# Combinatorial logarithms
# =============================================================================


def log_factorial(n: int) -> float:
    return float(gammaln(n + 1))


def log_binomial(n: int, k: int) -> float:
    if not 0 <= k <= n:
        return -math.inf
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def log_multinomial(counts: Sequence[int]) -> float:
    return float(gammaln(sum(counts) + 1) - sum(gammaln(c + 1) for c in counts))
