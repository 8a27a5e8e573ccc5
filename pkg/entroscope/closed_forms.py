"""
Closed-form values of the constants and their bounds.

Log-factorials and log-binomials go through ``gammaln`` so nothing overflows.
``closed_form(name, **params)`` dispatches by name; dashes and underscores are
interchangeable so CLI names work unchanged.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator, Mapping, Sequence
from typing import Any

from entroscope.errors import DomainError
from entroscope.functionals import log_binomial, log_factorial, log_multinomial
from entroscope.state_spaces import MeanFieldWeights

LOG2 = math.log(2.0)

WeightsLike = MeanFieldWeights | Mapping[int, float] | Sequence[float]


def as_mean_field(n: int, w: WeightsLike | None = None, ell: int | None = None) -> MeanFieldWeights:
    """Accept a MeanFieldWeights, a {l: w_l} mapping, the vector (w_2..w_n) or alpha^ell."""
    if w is None:
        if ell is None:
            raise DomainError("give either mean-field weights or a block size ell")
        return MeanFieldWeights.single(n, ell)
    if isinstance(w, MeanFieldWeights):
        if w.n != n:
            raise DomainError(f"weights for n={w.n}, asked for n={n}")
        return w
    if isinstance(w, Mapping):
        return MeanFieldWeights.from_mapping(n, {int(k): float(v) for k, v in w.items()})
    return MeanFieldWeights(n=n, w=tuple(w))


def _need(n: int, minimum: int) -> None:
    if n < minimum:
        raise DomainError(f"needs n >= {minimum}, got n={n}")


# =============================================================================
# Single particle
# =============================================================================


def kappa_mf_single(n: int, w: WeightsLike | None = None, ell: int | None = None) -> float:
    """sum_l w_l binom(n-1, l-1) log l / log n, attained at Dirac masses."""
    _need(n, 2)
    mf = as_mean_field(n, w, ell)
    return sum(
        mf.weight(k) * math.comb(n - 1, k - 1) * math.log(k) for k in mf.support()
    ) / math.log(n)


def kappa_kn(n: int) -> float:
    """Entropy constant of the complete graph with unit rates."""
    _need(n, 2)
    return 2 * (n - 1) * LOG2 / math.log(n)


def lsi_kn(n: int) -> float:
    """Log-Sobolev constant of the complete graph with unit rates."""
    _need(n, 2)
    if n == 2:
        return 1.0
    return (n - 2) / math.log(n - 1)


def gap_kn(n: int) -> float:
    return float(n)


def star_bounds(n: int) -> tuple[float, float]:
    """Bracket for the entropy constant of the star with n - 1 unit leaves."""
    _need(n, 3)
    return 2 * LOG2 * (1 - 2 / n) / math.log(n - 1), 2 * LOG2 / math.log(n)


def kappa_lower_from_gap(n: int, gap: float) -> float:
    """(1 - 2/n) 2 log 2 lambda / log(n - 1)."""
    _need(n, 3)
    return (1 - 2 / n) * 2 * LOG2 * gap / math.log(n - 1)


# =============================================================================
# Permutations, slices and multislices
# =============================================================================


def gap_mf_perm(n: int, w: WeightsLike | None = None, ell: int | None = None) -> float:
    """sum_l (n w_l / l) binom(n-2, l-2), attained by one-particle functions."""
    _need(n, 2)
    mf = as_mean_field(n, w, ell)
    return sum(n * mf.weight(k) / k * math.comb(n - 2, k - 2) for k in mf.support())


def kappa_mf_perm(n: int, w: WeightsLike | None = None, ell: int | None = None) -> float:
    """sum_l w_l binom(n, l) log l! / log n!, attained at Dirac masses."""
    _need(n, 2)
    mf = as_mean_field(n, w, ell)
    return sum(
        mf.weight(k) * math.comb(n, k) * log_factorial(k) for k in mf.support()
    ) / log_factorial(n)


def kappa_bl(n: int, r: int) -> float:
    """r (n - r) log 2 / log binom(n, r)."""
    if not 1 <= r <= n - 1:
        raise DomainError(f"needs 1 <= r <= n - 1, got r={r}, n={n}")
    return r * (n - r) * LOG2 / log_binomial(n, r)


def star_perm_bounds(n: int) -> tuple[float, float]:
    """Bracket for the shuffle driven by the star's pairs on permutations."""
    _need(n, 3)
    return LOG2**2 / math.log(n), 2 * LOG2 / math.log(n)


def dirac_perm_upper(n: int) -> float:
    """Star shuffle ratio at a Dirac mass."""
    _need(n, 2)
    return 2 * LOG2 * (n - 1) / log_factorial(n)


def p_critical(n: int) -> float:
    """Exponent where n! / n^(n/p) equals 1."""
    _need(n, 2)
    return n * math.log(n) / log_factorial(n)


def set_partitions(items: Sequence[int]) -> Iterator[list[list[int]]]:
    """All set partitions of the items."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        yield [[first], *partition]
        for i in range(len(partition)):
            yield [*partition[:i], [first, *partition[i]], *partition[i + 1 :]]


def multislice_value(counts: Sequence[int]) -> float:
    """(1/2) sum_i v_i (n - v_i) log 2 / log multinomial(v)."""
    n = sum(counts)
    return 0.5 * sum(v * (n - v) for v in counts) * LOG2 / log_multinomial(counts)


def multislice_conjecture(n: int, colors: Sequence[int]) -> tuple[float, list[int]]:
    """Smallest value over coarsenings into at least two colors.

    Returns the value and the color counts of the minimizing coarsening.
    """
    counts = [int(c) for c in colors if c > 0]
    if sum(counts) != n:
        raise DomainError(f"color counts {list(colors)} do not add up to n={n}")
    if len(counts) < 2:
        raise DomainError("a multislice needs at least two nonempty colors")
    best: tuple[float, list[int]] = (math.inf, counts)
    for partition in set_partitions(range(len(counts))):
        if len(partition) < 2:
            continue
        merged = sorted(sum(counts[i] for i in part) for part in partition)
        value = multislice_value(merged)
        if value < best[0]:
            best = (value, merged)
    return best


# =============================================================================
# Dispatch
# =============================================================================


CLOSED_FORMS: dict[str, Callable[..., Any]] = {
    "kappa_mf_single": kappa_mf_single,
    "kappa_kn": kappa_kn,
    "lsi_kn": lsi_kn,
    "gap_kn": gap_kn,
    "gap_mf_perm": gap_mf_perm,
    "kappa_mf_perm": kappa_mf_perm,
    "kappa_bl": kappa_bl,
    "star_bounds": star_bounds,
    "star_perm_bounds": star_perm_bounds,
    "dirac_perm_upper": dirac_perm_upper,
    "p_critical": p_critical,
    "kappa_lower_from_gap": kappa_lower_from_gap,
    "multislice_conjecture": multislice_conjecture,
}


def canonical_name(name: str) -> str:
    return name.strip().lower().replace("-", "_")


def closed_form(name: str, **params: Any) -> Any:
    key = canonical_name(name)
    if key not in CLOSED_FORMS:
        raise DomainError(
            f"unknown closed form {name!r}; known: {', '.join(sorted(CLOSED_FORMS))}"
        )
    return CLOSED_FORMS[key](**params)
