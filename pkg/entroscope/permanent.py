"""
Permanents of nonnegative matrices and the row-norm bound

    perm(A) <= max{1, n! / n^(n/p)} * prod_i ||R_i||_p,   p >= 1,

with equality at the identity and the all-ones matrix when p = p_c(n).
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

from entroscope.closed_forms import p_critical
from entroscope.config import settings
from entroscope.errors import DomainError, SpaceSizeError
from entroscope.functionals import log_factorial
from entroscope.state_spaces import SpaceKind, build_space
from entroscope.utils.parallel import thread_map
from entroscope.utils.typing import CorrelationReport, FuzzReport, PermanentBoundReport

logger = logging.getLogger(__name__)

MAX_RYSER_N = 24
MAX_NAIVE_N = 9
MAX_CORRELATION_N = 7
EQUALITY_RTOL = 1e-8
BOUND_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class NonnegMatrix:
    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DomainError(f"expected a nonempty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise DomainError("matrix entries must be finite and nonnegative")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def coerce(cls, a: NonnegMatrix | ArrayLike) -> NonnegMatrix:
        return a if isinstance(a, NonnegMatrix) else cls(entries=np.asarray(a))

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])

    def row_norms(self, p: float) -> np.ndarray:
        return np.linalg.norm(self.entries, ord=p, axis=1)


# =============================================================================
# Permanent
# =============================================================================


def _ryser_terms(a: np.ndarray) -> Iterator[float]:
    """Signed row-sum products over column subsets, in Gray-code order."""
    n = a.shape[0]
    sums = np.zeros(n)
    included = np.zeros(n, dtype=bool)
    size = 0
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1
        if included[j]:
            sums -= a[:, j]
            size -= 1
        else:
            sums += a[:, j]
            size += 1
        included[j] = not included[j]
        term = float(np.prod(sums))
        yield -term if (n - size) % 2 else term


def permanent_ryser(a: NonnegMatrix | ArrayLike) -> float:
    """Ryser's formula, O(2^n n), terms added with ``math.fsum``."""
    matrix = NonnegMatrix.coerce(a)
    if matrix.n > MAX_RYSER_N:
        raise SpaceSizeError("Ryser matrix size", MAX_RYSER_N, matrix.n)
    return max(0.0, math.fsum(_ryser_terms(matrix.entries)))


def permanent_naive(a: NonnegMatrix | ArrayLike) -> float:
    """Sum over all permutations; the oracle for small n."""
    matrix = NonnegMatrix.coerce(a)
    if matrix.n > MAX_NAIVE_N:
        raise SpaceSizeError("naive permanent size", MAX_NAIVE_N, matrix.n)
    perms = np.array(list(itertools.permutations(range(matrix.n))))
    rows = np.arange(matrix.n)
    return math.fsum(np.prod(matrix.entries[rows, perms], axis=1).tolist())


# =============================================================================
# The bound
# =============================================================================


def prefactor(n: int, p: float, clamp: bool = True) -> float:
    """n! / n^(n/p), or its maximum with 1."""
    if p < 1:
        raise DomainError(f"p must be at least 1, got {p}")
    value = math.exp(log_factorial(n) - n * math.log(n) / p)
    return max(1.0, value) if clamp else value


def _equality_pattern(entries: np.ndarray) -> Literal["identity", "all-ones"] | None:
    """Rows scaled independently of a permutation matrix, or of the all-ones matrix."""
    positive = entries > 0
    if np.all(positive.sum(axis=1) == 1) and np.all(positive.sum(axis=0) == 1):
        return "identity"
    if np.all(positive) and np.allclose(entries, entries[:, :1], rtol=1e-12, atol=0.0):
        return "all-ones"
    return None


def bound_check(a: NonnegMatrix | ArrayLike, p: float) -> PermanentBoundReport:
    matrix = NonnegMatrix.coerce(a)
    n = matrix.n
    factor = prefactor(n, p)
    norms = matrix.row_norms(p)
    bound = factor * float(np.prod(norms))
    permanent = permanent_ryser(matrix)
    slack = bound - permanent
    relative = slack / bound if bound > 0 else 0.0
    equality = None
    if abs(relative) <= EQUALITY_RTOL:
        equality = _equality_pattern(matrix.entries)
    holds = relative >= -BOUND_RTOL
    if not holds:
        logger.warning(f"Permanent bound violated at n={n}, p={p}: slack {slack:.3g}")
    return PermanentBoundReport(
        n=n,
        p=p,
        permanent=permanent,
        bound=bound,
        prefactor=factor,
        slack=slack,
        relative_slack=relative,
        equality=equality,
        holds=holds,
    )


def correlation_check(phis: Sequence[ArrayLike], p: float | None = None) -> CorrelationReport:
    """mu[prod_x phi_x(sigma_x)] <= prod_x mu[phi_x(sigma_x)^p]^(1/p) on S_n.

    With p = p_c(n) (the default) this is the permanent bound in disguise:
    the left side is perm(Phi) / n!.
    """
    table = NonnegMatrix.coerce(np.array([np.asarray(phi, dtype=float) for phi in phis]))
    n = table.n
    if n > MAX_CORRELATION_N:
        raise SpaceSizeError("correlation check n", MAX_CORRELATION_N, n)
    p = p_critical(n) if p is None else p
    if n == 1:
        lhs = rhs = float(table.entries[0, 0])
    else:
        states = build_space(SpaceKind.PERMUTATIONS, n).states
        lhs = float(np.mean(np.prod(table.entries[np.arange(n), states], axis=1)))
        moments = np.mean(table.entries**p, axis=1) ** (1 / p)
        rhs = float(np.prod(moments))
    slack = rhs - lhs
    return CorrelationReport(
        n=n,
        p=p,
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        holds=slack >= -BOUND_RTOL * max(rhs, 1e-300),
    )


# =============================================================================
# Fuzzing
# =============================================================================


def random_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform, log-uniform or sparse nonnegative entries, never all zero."""
    style = int(rng.integers(3))
    if style == 0:
        a = rng.uniform(0.0, 1.0, (n, n))
    elif style == 1:
        a = np.exp(rng.uniform(math.log(1e-3), math.log(1e3), (n, n)))
    else:
        a = rng.uniform(0.0, 1.0, (n, n)) * (rng.random((n, n)) < 0.4)
    if not np.any(a > 0):
        a[0, 0] = 1.0
    return a


def fuzz(
    n: int,
    count: int,
    ps: Sequence[float] | None = None,
    seed: int | None = None,
    threads: int | None = None,
) -> FuzzReport:
    """Random matrices against the bound for every p in ps (default 1, 1.5, p_c, 2, 3)."""
    if count < 1:
        raise DomainError("fuzz needs at least one matrix")
    exponents = list(ps) if ps is not None else sorted([1.0, 1.5, p_critical(n), 2.0, 3.0])
    seed = settings.seed if seed is None else seed
    matrices = [
        random_matrix(n, np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,))))
        for i in range(count)
    ]

    def check(a: np.ndarray) -> tuple[float, int, float | None]:
        reports = [bound_check(a, p) for p in exponents]
        worst = min(r.relative_slack for r in reports)
        violations = sum(not r.holds for r in reports)
        error = None
        if n <= MAX_CORRELATION_N:
            naive = permanent_naive(a)
            scale = naive if naive > 0 else float(np.prod(a.sum(axis=1)))
            error = abs(reports[0].permanent - naive) / max(scale, 1e-300)
        return worst, violations, error

    results = thread_map(check, matrices, threads)
    errors = [e for _, _, e in results if e is not None]
    violations = sum(v for _, v, _ in results)
    max_error = max(errors) if errors else None
    logger.info(f"Fuzzed {count} matrices of size {n}: {violations} violations")
    return FuzzReport(
        n=n,
        count=count,
        ps=exponents,
        min_relative_slack=min(w for w, _, _ in results),
        violations=violations,
        max_ryser_error=max_error,
        passed=violations == 0,
    )
