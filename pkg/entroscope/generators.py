"""
Generators and Dirichlet forms.

Every process is a sum of block terms alpha_A (P_A - I) where P_A averages over
the classes of ``block_partition(space, A)``; the graph walk is the pair case
with alpha_xy = 2 c_xy. Generators are dense and symmetric (the measure is
uniform), so the semigroup comes from one ``scipy.linalg.eigh`` call.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, get_args

import numpy as np
from scipy import linalg
from scipy.special import xlogy

from entroscope.config import settings
from entroscope.errors import DomainError, SpaceSizeError
from entroscope.functionals import (
    DensityFunction,
    FunctionLike,
    as_values,
    safe_ratio,
)
from entroscope.state_spaces import (
    BlockPartition,
    HypergraphWeights,
    SpaceKind,
    StateSpace,
    WeightedGraph,
    block_partition,
    build_space,
)

logger = logging.getLogger(__name__)

Selector = Literal["entropy", "variance", "var_sqrt", "cov_flogf"]
Term = tuple[float, BlockPartition]


# =============================================================================
# Block terms
# =============================================================================


def hypergraph_terms(space: StateSpace, h: HypergraphWeights) -> tuple[Term, ...]:
    if h.n != space.n:
        raise DomainError(f"weights on {h.n} vertices, space on {space.n}")
    return tuple((alpha, block_partition(space, block)) for block, alpha in h.items())


def graph_terms(space: StateSpace, g: WeightedGraph) -> tuple[Term, ...]:
    """Pair terms alpha_xy = 2 c_xy; disconnected graphs are allowed."""
    if g.n != space.n:
        raise DomainError(f"graph on {g.n} vertices, space on {space.n}")
    return tuple((2.0 * c, block_partition(space, (x, y))) for x, y, c in g.edges())


def bernoulli_laplace_terms(space: StateSpace) -> tuple[Term, ...]:
    """Unit weight on every pair of sites."""
    return tuple(
        (1.0, block_partition(space, pair))
        for pair in itertools.combinations(range(space.n), 2)
    )


# =============================================================================
# Generator matrices
# =============================================================================


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Dense symmetric generator L on a state space, built from block terms."""

    space: StateSpace
    entries: np.ndarray
    terms: tuple[Term, ...] = field(default=())

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues of -L in ascending order, with orthonormal eigenvectors."""
        values, vectors = linalg.eigh(-self.entries)
        return values, vectors

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.entries @ values

    def semigroup(self, t: float) -> np.ndarray:
        """exp(tL) from the spectral decomposition."""
        values, vectors = self.spectrum
        return (vectors * np.exp(-t * values)) @ vectors.T

    def evolve(self, f0: np.ndarray, t: float) -> np.ndarray:
        values, vectors = self.spectrum
        return vectors @ (np.exp(-t * values) * (vectors.T @ f0))

    def dirichlet_form(self, values: np.ndarray) -> float:
        """-mu(f L f)."""
        return float(-(values @ self.entries @ values) / self.space.size)


def _check_dense(space: StateSpace) -> None:
    if space.size > settings.max_dense:
        raise SpaceSizeError("dense generator", settings.max_dense, space.size)


def generator_from_terms(space: StateSpace, terms: tuple[Term, ...]) -> GeneratorMatrix:
    _check_dense(space)
    entries = np.zeros((space.size, space.size))
    for alpha, part in terms:
        entries += alpha * part.projector()
        entries[np.diag_indices(space.size)] -= alpha
    entries = (entries + entries.T) / 2
    logger.debug(f"Built {space.size}x{space.size} generator from {len(terms)} blocks")
    return GeneratorMatrix(space=space, entries=entries, terms=terms)


def gen_single_graph(g: WeightedGraph) -> GeneratorMatrix:
    """L f(x) = sum_y c_xy [f(y) - f(x)]."""
    space = build_space(SpaceKind.SINGLE, g.n)
    entries = np.array(g.weights, dtype=float)
    entries[np.diag_indices(g.n)] = -entries.sum(axis=1)
    return GeneratorMatrix(space=space, entries=entries, terms=graph_terms(space, g))


def gen_single_hypergraph(h: HypergraphWeights) -> GeneratorMatrix:
    space = build_space(SpaceKind.SINGLE, h.n)
    return generator_from_terms(space, hypergraph_terms(space, h))


def gen_synchronous(h: HypergraphWeights, particles: int) -> GeneratorMatrix:
    """N labeled particles, all re-randomized inside a block when it rings."""
    space = build_space(SpaceKind.PRODUCT, h.n, particles=particles)
    return generator_from_terms(space, hypergraph_terms(space, h))


def gen_shuffle(h: HypergraphWeights) -> GeneratorMatrix:
    """Labels inside a ringing block are reshuffled uniformly."""
    space = build_space(SpaceKind.PERMUTATIONS, h.n)
    return generator_from_terms(space, hypergraph_terms(space, h))


def gen_bernoulli_laplace(n: int, r: int) -> GeneratorMatrix:
    space = build_space(SpaceKind.SLICE, n, r=r)
    return generator_from_terms(space, bernoulli_laplace_terms(space))


def build_generator(space: StateSpace, h: HypergraphWeights) -> GeneratorMatrix:
    """Block generator of h acting on any space kind."""
    if space.kind is SpaceKind.SLICE:
        return generator_from_terms(space, hypergraph_terms(space, h))
    if space.kind is SpaceKind.PRODUCT:
        return gen_synchronous(h, space.particles)
    if space.kind is SpaceKind.PERMUTATIONS:
        return gen_shuffle(h)
    return gen_single_hypergraph(h)


# =============================================================================
# Dirichlet forms
# =============================================================================


@dataclass(frozen=True, eq=False)
class DirichletEvaluator:
    """sum_A alpha_A mu[X_A f] for the selected local functional X."""

    space: StateSpace
    terms: tuple[Term, ...]
    selector: Selector = "entropy"

    def __post_init__(self) -> None:
        if self.selector not in get_args(Selector):
            raise DomainError(f"unknown functional {self.selector!r}")
        if not self.terms:
            raise DomainError("a Dirichlet form needs at least one block")
        for alpha, part in self.terms:
            if not alpha > 0:
                raise DomainError(f"block weight {alpha} is not positive")
            if part.space != self.space:
                raise DomainError("all blocks must live on the evaluator's space")

    @classmethod
    def for_hypergraph(
        cls, space: StateSpace, h: HypergraphWeights, selector: Selector = "entropy"
    ) -> DirichletEvaluator:
        return cls(space=space, terms=hypergraph_terms(space, h), selector=selector)

    @classmethod
    def for_graph(
        cls, g: WeightedGraph, selector: Selector = "entropy"
    ) -> DirichletEvaluator:
        space = build_space(SpaceKind.SINGLE, g.n)
        return cls(space=space, terms=graph_terms(space, g), selector=selector)

    def with_selector(self, selector: Selector) -> DirichletEvaluator:
        return DirichletEvaluator(space=self.space, terms=self.terms, selector=selector)

    def scaled(self, c: float) -> DirichletEvaluator:
        return DirichletEvaluator(
            space=self.space,
            terms=tuple((c * alpha, part) for alpha, part in self.terms),
            selector=self.selector,
        )

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([alpha for alpha, _ in self.terms])

    @cached_property
    def _stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """Class labels of all terms offset into one index range, and class sizes."""
        offsets = np.cumsum([0] + [part.n_classes for _, part in self.terms])
        labels = np.stack(
            [part.labels + offset for (_, part), offset in zip(self.terms, offsets)]
        )
        sizes = np.concatenate([part.sizes for _, part in self.terms])
        return labels, sizes

    def class_means(self, values: np.ndarray) -> np.ndarray:
        """Per-term conditional expectation, one row per block."""
        labels, sizes = self._stacked
        sums = np.bincount(
            labels.ravel(),
            weights=np.broadcast_to(values, labels.shape).ravel(),
            minlength=sizes.shape[0],
        )
        return (sums / sizes)[labels]

    def per_block(self, values: np.ndarray) -> np.ndarray:
        """mu[X_A f] for every block A."""
        values = np.asarray(values, dtype=float)
        if self.selector == "entropy":
            means = self.class_means(values)
            return np.maximum(0.0, xlogy(values, safe_ratio(values, means)).mean(axis=1))
        if self.selector == "variance":
            return ((values - self.class_means(values)) ** 2).mean(axis=1)
        if self.selector == "var_sqrt":
            root = np.sqrt(values)
            return ((root - self.class_means(root)) ** 2).mean(axis=1)
        means = self.class_means(values)
        mixed = np.any((values == 0) & (means > 0), axis=1)
        log_values = np.log(np.where(values > 0, values, 1.0))
        out = np.maximum(0.0, ((values - means) * log_values).mean(axis=1))
        return np.where(mixed, np.inf, out)

    def __call__(self, values: np.ndarray) -> float:
        return float(self.weights @ self.per_block(values))

    def value_and_log_gradient(self, values: np.ndarray) -> tuple[float, np.ndarray]:
        """Value and gradient with respect to g for f = exp(g) > 0."""
        f = np.asarray(values, dtype=float)
        size = self.space.size
        if self.selector == "entropy":
            means = self.class_means(f)
            log_ratio = np.log(f / means)
            blocks = (f * log_ratio).mean(axis=1)
            grad = f * log_ratio
        elif self.selector == "variance":
            means = self.class_means(f)
            blocks = ((f - means) ** 2).mean(axis=1)
            grad = 2 * f * (f - means)
        elif self.selector == "var_sqrt":
            root = np.sqrt(f)
            means = self.class_means(root)
            blocks = ((root - means) ** 2).mean(axis=1)
            grad = f - root * means
        else:
            log_f = np.log(f)
            means = self.class_means(f)
            log_means = self.class_means(log_f)
            blocks = ((f - means) * log_f).mean(axis=1)
            grad = f * log_f + f - f * log_means - means
        return float(self.weights @ blocks), (self.weights @ grad) / size

    def dirac_values(self) -> np.ndarray:
        """The form at every Dirac mass delta_s, in closed form."""
        labels, sizes = self._stacked
        k = sizes[labels]
        if self.selector == "entropy":
            per_state = self.weights @ np.log(k)
        elif self.selector == "cov_flogf":
            per_state = np.where(np.any(k > 1, axis=0), np.inf, 0.0)
        else:
            per_state = self.weights @ (1.0 - 1.0 / k)
        return per_state / self.space.size

    def generator(self) -> GeneratorMatrix:
        return generator_from_terms(self.space, self.terms)


def dirichlet(form: DirichletEvaluator, f: FunctionLike) -> float:
    """The form at f; with the variance selector this is -mu(f L f)."""
    if isinstance(f, DensityFunction) and f.space != form.space:
        raise DomainError("function and form live on different spaces")
    return form(as_values(f))
