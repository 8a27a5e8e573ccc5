"""
State spaces, block partitions and weight containers.

Four finite configuration spaces are supported, all carrying the uniform
measure:

- ``single``: one particle on n vertices, states are vertices.
- ``product``: N labeled particles on n vertices (synchronous updates), states
  are position vectors (xi_1, ..., xi_N) in base-n order.
- ``perm``: permutations sigma (vertex -> label), lexicographic order, which is
  the factorial number system rank.
- ``slice``: r-subsets of occupied sites, colexicographic order, which is the
  combinatorial number system rank.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from types import MappingProxyType

import networkx as nx
import numpy as np

from entroscope.config import settings
from entroscope.errors import DomainError, SpaceSizeError

logger = logging.getLogger(__name__)

Subset = tuple[int, ...]


# =============================================================================
# Subsets
# =============================================================================


def canonical_subset(vertices: Iterable[int], n: int) -> Subset:
    """Sorted, de-duplicated subset of {0, ..., n-1}."""
    subset = tuple(sorted({int(v) for v in vertices}))
    if subset and (subset[0] < 0 or subset[-1] >= n):
        raise DomainError(f"subset {subset} is not contained in 0..{n - 1}")
    return subset


def encode_subset(subset: Iterable[int]) -> int:
    """64-bit set encoding, bit x set iff x in the subset."""
    mask = 0
    for x in subset:
        mask |= 1 << int(x)
    return mask


def decode_subset(mask: int) -> Subset:
    return tuple(x for x in range(mask.bit_length()) if mask >> x & 1)


# =============================================================================
# Weight containers
# =============================================================================


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Symmetric nonnegative edge weights c_xy on n vertices."""

    n: int
    weights: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError("a graph needs at least one vertex")
        if self.n > settings.max_graph_n:
            raise SpaceSizeError("graph vertex", settings.max_graph_n, self.n)
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.n, self.n):
            raise DomainError(f"weights must be {self.n}x{self.n}, got {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise DomainError("edge weights must be finite and nonnegative")
        if np.any(np.diag(w) != 0):
            raise DomainError("edge weights must have a zero diagonal")
        if not np.allclose(w, w.T, rtol=0.0, atol=1e-12 * max(1.0, w.max())):
            raise DomainError("edge weights must be symmetric")
        if not np.any(w > 0):
            raise DomainError("a graph needs at least one positive edge weight")
        w = (w + w.T) / 2
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_edges(
        cls, n: int, edges: Iterable[tuple[int, int, float]]
    ) -> WeightedGraph:
        """Build from (x, y, c) triples; duplicate edges are summed."""
        w = np.zeros((n, n))
        for x, y, c in edges:
            if not (0 <= x < n and 0 <= y < n):
                raise DomainError(f"edge ({x}, {y}) is outside 0..{n - 1}")
            if x == y:
                raise DomainError(f"self-loop at vertex {x}")
            w[x, y] += c
            w[y, x] += c
        return cls(n=n, weights=w)

    @classmethod
    def from_networkx(cls, graph: nx.Graph, weight: str = "weight") -> WeightedGraph:
        nodes = sorted(graph.nodes)
        w = nx.to_numpy_array(graph, nodelist=nodes, weight=weight, dtype=float)
        return cls(n=len(nodes), weights=w)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_weighted_edges_from(self.edges())
        return graph

    def edges(self) -> list[tuple[int, int, float]]:
        xs, ys = np.nonzero(np.triu(self.weights, k=1))
        return [(int(x), int(y), float(self.weights[x, y])) for x, y in zip(xs, ys)]

    def degree(self, x: int) -> float:
        return float(self.weights[x].sum())

    def neighbors(self, x: int) -> list[int]:
        return [int(y) for y in np.nonzero(self.weights[x])[0]]

    def is_leaf(self, x: int) -> bool:
        return len(self.neighbors(x)) == 1

    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def scaled(self, c: float) -> WeightedGraph:
        return WeightedGraph(n=self.n, weights=self.weights * c)


@dataclass(frozen=True)
class HypergraphWeights:
    """Positive block weights alpha_A over vertex subsets with |A| >= 2."""

    n: int
    blocks: Mapping[Subset, float]

    def __post_init__(self) -> None:
        if self.n < 2:
            raise DomainError("a hypergraph needs at least two vertices")
        if self.n > settings.max_hypergraph_n:
            raise SpaceSizeError("hypergraph vertex", settings.max_hypergraph_n, self.n)
        blocks: dict[Subset, float] = {}
        for key, weight in self.blocks.items():
            subset = canonical_subset(key, self.n)
            if len(subset) < 2:
                raise DomainError(f"block {subset} has fewer than two vertices")
            if not (math.isfinite(weight) and weight > 0):
                raise DomainError(f"block {subset} has non-positive weight {weight}")
            blocks[subset] = blocks.get(subset, 0.0) + float(weight)
        if not blocks:
            raise DomainError("a hypergraph needs at least one block")
        cover = nx.Graph()
        cover.add_nodes_from(range(self.n))
        for subset in blocks:
            cover.add_edges_from((subset[0], y) for y in subset[1:])
        if not nx.is_connected(cover):
            raise DomainError("the blocks do not connect all vertices")
        ordered = dict(sorted(blocks.items(), key=lambda kv: (len(kv[0]), kv[0])))
        object.__setattr__(self, "blocks", MappingProxyType(ordered))

    @classmethod
    def from_blocks(
        cls, n: int, blocks: Iterable[tuple[Iterable[int], float]]
    ) -> HypergraphWeights:
        """Build from (subset, weight) pairs; duplicates are summed, zeros dropped."""
        merged: dict[Subset, float] = {}
        for subset, weight in blocks:
            key = canonical_subset(subset, n)
            merged[key] = merged.get(key, 0.0) + float(weight)
        return cls(n=n, blocks={k: w for k, w in merged.items() if w != 0.0})

    def items(self) -> list[tuple[Subset, float]]:
        return list(self.blocks.items())

    def masks(self) -> dict[int, float]:
        return {encode_subset(k): w for k, w in self.blocks.items()}

    def mean_field_weights(self) -> MeanFieldWeights | None:
        """The weight vector w if alpha_A depends on |A| only, else None."""
        by_size: dict[int, set[float]] = {}
        for subset, weight in self.blocks.items():
            by_size.setdefault(len(subset), set()).add(weight)
        w = [0.0] * (self.n - 1)
        for size, values in by_size.items():
            if len(values) != 1 or len(
                [b for b in self.blocks if len(b) == size]
            ) != math.comb(self.n, size):
                return None
            w[size - 2] = values.pop()
        return MeanFieldWeights(n=self.n, w=tuple(w))


@dataclass(frozen=True)
class MeanFieldWeights:
    """Weights w_l, l = 2..n; w[0] is w_2."""

    n: int
    w: tuple[float, ...]

    def __post_init__(self) -> None:
        w = tuple(float(v) for v in self.w)
        if len(w) != self.n - 1:
            raise DomainError(f"expected {self.n - 1} weights w_2..w_n, got {len(w)}")
        if any(v < 0 or not math.isfinite(v) for v in w):
            raise DomainError("mean-field weights must be finite and nonnegative")
        if not any(v > 0 for v in w):
            raise DomainError("at least one mean-field weight must be positive")
        object.__setattr__(self, "w", w)

    @classmethod
    def from_mapping(cls, n: int, weights: Mapping[int, float]) -> MeanFieldWeights:
        w = [0.0] * (n - 1)
        for ell, value in weights.items():
            if not 2 <= int(ell) <= n:
                raise DomainError(f"block size {ell} outside 2..{n}")
            w[int(ell) - 2] += float(value)
        return cls(n=n, w=tuple(w))

    @classmethod
    def single(cls, n: int, ell: int, weight: float = 1.0) -> MeanFieldWeights:
        """The vector weight * alpha^ell."""
        return cls.from_mapping(n, {ell: weight})

    @classmethod
    def parse(cls, n: int, text: str) -> MeanFieldWeights:
        """Parse ``"2:1.0,3:0.5"`` (block size : weight)."""
        weights: dict[int, float] = {}
        for item in text.split(","):
            if not item.strip():
                continue
            try:
                ell, value = item.split(":")
                weights[int(ell)] = weights.get(int(ell), 0.0) + float(value)
            except ValueError as e:
                raise DomainError(f"bad mean-field item {item!r}, expected l:w") from e
        return cls.from_mapping(n, weights)

    def weight(self, ell: int) -> float:
        return self.w[ell - 2]

    def support(self) -> list[int]:
        return [ell for ell in range(2, self.n + 1) if self.weight(ell) > 0]


def mean_field_expand(mf: MeanFieldWeights) -> HypergraphWeights:
    """alpha = sum_l w_l alpha^l with alpha^l_A = 1{|A| = l}."""
    blocks = {
        subset: mf.weight(ell)
        for ell in mf.support()
        for subset in itertools.combinations(range(mf.n), ell)
    }
    return HypergraphWeights(n=mf.n, blocks=blocks)


def graph_from_hypergraph(h: HypergraphWeights) -> WeightedGraph:
    """c_xy = sum over blocks A containing x and y of alpha_A / |A|."""
    w = np.zeros((h.n, h.n))
    for subset, alpha in h.blocks.items():
        idx = np.array(subset)
        w[np.ix_(idx, idx)] += alpha / len(subset)
    np.fill_diagonal(w, 0.0)
    return WeightedGraph(n=h.n, weights=w)


def hypergraph_from_graph(g: WeightedGraph) -> HypergraphWeights:
    """Pair blocks alpha_xy = 2 c_xy, the inverse of the pair case above."""
    return HypergraphWeights(n=g.n, blocks={(x, y): 2.0 * c for x, y, c in g.edges()})


# =============================================================================
# Graph families
# =============================================================================


def complete_graph(n: int, c: float = 1.0) -> WeightedGraph:
    return WeightedGraph.from_networkx(nx.complete_graph(n)).scaled(c)


def star_graph(n: int) -> WeightedGraph:
    """Star S_n with center 0 and n - 1 leaves."""
    return WeightedGraph.from_networkx(nx.star_graph(n - 1))


def cycle_graph(n: int) -> WeightedGraph:
    return WeightedGraph.from_networkx(nx.cycle_graph(n))


def path_graph(n: int) -> WeightedGraph:
    return WeightedGraph.from_networkx(nx.path_graph(n))


def box_graph(rows: int, cols: int) -> WeightedGraph:
    grid = nx.convert_node_labels_to_integers(
        nx.grid_2d_graph(rows, cols), ordering="sorted"
    )
    return WeightedGraph.from_networkx(grid)


def random_graph(
    n: int, rng: np.random.Generator, density: float = 0.6
) -> WeightedGraph:
    """Connected random graph with weights uniform in [0.1, 2]."""
    while True:
        skeleton = nx.gnp_random_graph(n, density, seed=int(rng.integers(2**31)))
        if nx.is_connected(skeleton):
            break
    for x, y in skeleton.edges:
        skeleton.edges[x, y]["weight"] = float(rng.uniform(0.1, 2.0))
    return WeightedGraph.from_networkx(skeleton)


def random_tree(n: int, rng: np.random.Generator) -> WeightedGraph:
    """Uniform labeled tree with weights uniform in [0.1, 2]."""
    tree = nx.random_labeled_tree(n, seed=int(rng.integers(2**31)))
    for x, y in tree.edges:
        tree.edges[x, y]["weight"] = float(rng.uniform(0.1, 2.0))
    return WeightedGraph.from_networkx(tree)


def random_hypergraph(
    n: int, rng: np.random.Generator, n_blocks: int | None = None
) -> HypergraphWeights:
    """Random blocks of random sizes, weights uniform in [0.1, 2], connected."""
    n_blocks = n_blocks or n + 1
    while True:
        blocks = []
        for _ in range(n_blocks):
            size = int(rng.integers(2, n + 1))
            subset = rng.choice(n, size=size, replace=False)
            blocks.append((subset.tolist(), float(rng.uniform(0.1, 2.0))))
        try:
            return HypergraphWeights.from_blocks(n, blocks)
        except DomainError:
            continue


# =============================================================================
# State spaces
# =============================================================================


class SpaceKind(str, Enum):
    SINGLE = "single"
    PRODUCT = "product"
    PERMUTATIONS = "perm"
    SLICE = "slice"


@dataclass(frozen=True)
class StateSpace:
    """Enumerated configuration set with the uniform measure."""

    kind: SpaceKind
    n: int
    particles: int = 1
    r: int = 0

    @property
    def size(self) -> int:
        if self.kind is SpaceKind.SINGLE:
            return self.n
        if self.kind is SpaceKind.PRODUCT:
            return self.n**self.particles
        if self.kind is SpaceKind.PERMUTATIONS:
            return math.factorial(self.n)
        return math.comb(self.n, self.r)

    @property
    def measure(self) -> float:
        return 1.0 / self.size

    @cached_property
    def states(self) -> np.ndarray:
        """One row per state, in rank order."""
        if self.kind is SpaceKind.SINGLE:
            table = np.arange(self.n)[:, None]
        elif self.kind is SpaceKind.PRODUCT:
            idx = np.arange(self.size)
            powers = self.n ** np.arange(self.particles - 1, -1, -1)
            table = (idx[:, None] // powers[None, :]) % self.n
        elif self.kind is SpaceKind.PERMUTATIONS:
            table = np.array(list(itertools.permutations(range(self.n))))
        else:
            combos = sorted(
                itertools.combinations(range(self.n), self.r), key=lambda c: c[::-1]
            )
            table = np.array(combos, dtype=int).reshape(len(combos), self.r)
        table = table.astype(np.int64)
        table.setflags(write=False)
        return table

    @cached_property
    def occupation(self) -> np.ndarray:
        """0/1 occupation numbers eta_x per state (slice and single spaces)."""
        if self.kind not in (SpaceKind.SLICE, SpaceKind.SINGLE):
            raise DomainError(f"occupation numbers are not defined on {self.kind.value}")
        occ = np.zeros((self.size, self.n), dtype=np.int8)
        rows = np.repeat(np.arange(self.size), self.states.shape[1])
        occ[rows, self.states.reshape(-1)] = 1
        occ.setflags(write=False)
        return occ

    def rank(self, state: Iterable[int]) -> int:
        s = [int(v) for v in state]
        if self.kind is SpaceKind.SINGLE:
            return s[0]
        if self.kind is SpaceKind.PRODUCT:
            index = 0
            for position in s:
                index = index * self.n + position
            return index
        if self.kind is SpaceKind.PERMUTATIONS:
            index = 0
            for i, label in enumerate(s):
                smaller = sum(1 for later in s[i + 1 :] if later < label)
                index += smaller * math.factorial(self.n - 1 - i)
            return index
        return sum(math.comb(c, i + 1) for i, c in enumerate(sorted(s)))

    def unrank(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise DomainError(f"rank {index} outside 0..{self.size - 1}")
        if self.kind is SpaceKind.SINGLE:
            return (index,)
        if self.kind is SpaceKind.PRODUCT:
            digits = []
            for _ in range(self.particles):
                index, digit = divmod(index, self.n)
                digits.append(digit)
            return tuple(reversed(digits))
        if self.kind is SpaceKind.PERMUTATIONS:
            remaining = list(range(self.n))
            labels = []
            for i in range(self.n - 1, -1, -1):
                digit, index = divmod(index, math.factorial(i))
                labels.append(remaining.pop(digit))
            return tuple(labels)
        combo = []
        for i in range(self.r, 0, -1):
            c = i - 1
            while math.comb(c + 1, i) <= index:
                c += 1
            combo.append(c)
            index -= math.comb(c, i)
        return tuple(reversed(combo))

    def positions(self) -> np.ndarray:
        """xi = sigma^{-1} per state (label -> vertex); permutations only."""
        if self.kind is not SpaceKind.PERMUTATIONS:
            raise DomainError("positions are defined for permutations only")
        inverse = np.empty_like(self.states)
        rows = np.arange(self.size)[:, None]
        inverse[rows, self.states] = np.arange(self.n)[None, :]
        return inverse

    def describe(self) -> str:
        if self.kind is SpaceKind.PRODUCT:
            return f"product(n={self.n}, N={self.particles})"
        if self.kind is SpaceKind.SLICE:
            return f"slice(n={self.n}, r={self.r})"
        return f"{self.kind.value}(n={self.n})"


def build_space(
    kind: SpaceKind | str, n: int, *, particles: int = 1, r: int | None = None
) -> StateSpace:
    """Validate parameters and size caps, then return the space."""
    kind = SpaceKind(kind)
    if n < 1:
        raise DomainError("a state space needs at least one vertex")
    if kind is SpaceKind.PRODUCT and particles < 1:
        raise DomainError("the product space needs at least one particle")
    if kind is SpaceKind.SLICE:
        if r is None or not 1 <= r <= n - 1:
            raise DomainError(f"slice needs 1 <= r <= n - 1, got r={r}, n={n}")
    space = StateSpace(
        kind=kind,
        n=n,
        particles=particles if kind is SpaceKind.PRODUCT else 1,
        r=r if kind is SpaceKind.SLICE and r is not None else 0,
    )
    if kind is SpaceKind.PERMUTATIONS and n > settings.max_permutation_n:
        raise SpaceSizeError("permutation n", settings.max_permutation_n, n)
    if kind is SpaceKind.PRODUCT and space.size > settings.max_product_states:
        raise SpaceSizeError("product state", settings.max_product_states, space.size)
    if kind is SpaceKind.SLICE and space.size > settings.max_slice_states:
        raise SpaceSizeError("slice state", settings.max_slice_states, space.size)
    if space.size > settings.max_states:
        raise SpaceSizeError("state", settings.max_states, space.size)
    logger.debug("built %s with %d states", space.describe(), space.size)
    return space


# =============================================================================
# Block partitions
# =============================================================================


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """States grouped into classes of equal conditioning data.

    For a block A the classes are the states agreeing outside A; for a site
    partition (``site=True``) the classes are the states with equal variables
    at the single vertex ``block[0]``.
    """

    space: StateSpace
    block: Subset
    labels: np.ndarray
    sizes: np.ndarray
    site: bool = field(default=False)

    @property
    def n_classes(self) -> int:
        return int(self.sizes.shape[0])

    def classes(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(self.sizes)[:-1]
        return np.split(order, bounds)

    def class_means(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.labels, weights=values, minlength=self.n_classes) / self.sizes

    def average(self, values: np.ndarray) -> np.ndarray:
        """The conditional expectation, broadcast back to states."""
        return self.class_means(values)[self.labels]

    def projector(self) -> np.ndarray:
        """Dense averaging matrix P with (P f)(s) = class mean of f at s."""
        same = self.labels[:, None] == self.labels[None, :]
        return same / self.sizes[self.labels][:, None]


def _partition_from_keys(
    space: StateSpace, block: Subset, keys: np.ndarray, site: bool
) -> BlockPartition:
    keys = keys.reshape(space.size, -1)
    _, labels, sizes = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    labels = labels.reshape(-1).astype(np.int64)
    labels.setflags(write=False)
    return BlockPartition(
        space=space, block=block, labels=labels, sizes=sizes.astype(float), site=site
    )


def block_partition(space: StateSpace, block: Iterable[int]) -> BlockPartition:
    """Classes of states connected by resampling inside the block."""
    subset = canonical_subset(block, space.n)
    if len(subset) < 2:
        raise DomainError(f"block {subset} has fewer than two vertices")
    inside = np.zeros(space.n, dtype=bool)
    inside[list(subset)] = True
    states = space.states
    if space.kind in (SpaceKind.SINGLE, SpaceKind.PRODUCT):
        keys = np.where(inside[states], -1, states)
    elif space.kind is SpaceKind.PERMUTATIONS:
        keys = states[:, ~inside]
        if keys.shape[1] == 0:
            keys = np.zeros((space.size, 1), dtype=np.int64)
    else:
        keys = space.occupation[:, ~inside]
        if keys.shape[1] == 0:
            keys = np.zeros((space.size, 1), dtype=np.int8)
    return _partition_from_keys(space, subset, keys, site=False)


def site_partition(space: StateSpace, x: int) -> BlockPartition:
    """Classes of states with equal variables at vertex x (eta_x or sigma_x)."""
    if not 0 <= x < space.n:
        raise DomainError(f"vertex {x} outside 0..{space.n - 1}")
    states = space.states
    if space.kind is SpaceKind.PERMUTATIONS:
        keys = states[:, x]
    elif space.kind in (SpaceKind.SINGLE, SpaceKind.PRODUCT):
        keys = states == x
    else:
        keys = space.occupation[:, x]
    return _partition_from_keys(space, (x,), keys, site=True)
