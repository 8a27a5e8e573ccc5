"""Input files and JSON output.

Graphs, hypergraphs, mean-field weights and matrices are read through
pydantic models so a malformed file fails with a ``pydantic.ValidationError``
naming the field.
Reports are written with every float at 17 significant digits; non-finite
floats become the strings "inf", "-inf" and "nan".
"""

import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from entroscope.errors import DomainError
from entroscope.state_spaces import (
    HypergraphWeights,
    MeanFieldWeights,
    WeightedGraph,
    hypergraph_from_graph,
    mean_field_expand,
)

logger = logging.getLogger(__name__)


class GraphFile(BaseModel):
    """{"n": 4, "edges": [[0, 1, 1.0], ...]} or {"weights": [[...], ...]}."""

    n: int | None = Field(default=None, ge=1)
    edges: list[tuple[int, int, float]] | None = None
    weights: list[list[float]] | None = None

    @model_validator(mode="after")
    def one_layout(self) -> "GraphFile":
        if (self.edges is None) == (self.weights is None):
            raise ValueError("give exactly one of 'edges' or 'weights'")
        if self.edges is not None and self.n is None:
            raise ValueError("'edges' needs 'n'")
        return self

    def to_graph(self) -> WeightedGraph:
        if self.weights is not None:
            return WeightedGraph(n=len(self.weights), weights=np.array(self.weights))
        assert self.n is not None and self.edges is not None
        return WeightedGraph.from_edges(self.n, self.edges)


class Block(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    vertices: list[int] = Field(alias="set", min_length=2)
    weight: float = Field(gt=0)


class HypergraphFile(BaseModel):
    """{"n": 4, "blocks": [{"set": [0, 1, 2], "weight": 1.0}, ...]}.

    "vertices" is accepted in place of "set".
    """

    n: int = Field(ge=2)
    blocks: list[Block] = Field(min_length=1)

    def to_hypergraph(self) -> HypergraphWeights:
        return HypergraphWeights.from_blocks(
            self.n, ((block.vertices, block.weight) for block in self.blocks)
        )


class MeanFieldFile(BaseModel):
    """{"n": 4, "w": {"2": 1.0, "3": 0.5}}; keys are block sizes."""

    n: int = Field(ge=2)
    w: dict[int, float] = Field(min_length=1)

    def to_weights(self) -> MeanFieldWeights:
        return MeanFieldWeights.from_mapping(self.n, self.w)

    def to_hypergraph(self) -> HypergraphWeights:
        return mean_field_expand(self.to_weights())


class MatrixFile(BaseModel):
    """{"matrix": [[...], ...]}."""

    matrix: list[list[float]] = Field(min_length=1)


def _read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise DomainError(f"{path} is not valid JSON: {e}") from e


def load_graph(path: str | Path) -> WeightedGraph:
    path = Path(path)
    graph = GraphFile.model_validate(_read_json(path)).to_graph()
    logger.info(f"Loaded graph on {graph.n} vertices from {path}")
    return graph


def load_hypergraph(path: str | Path) -> HypergraphWeights:
    path = Path(path)
    data = _read_json(path)
    if isinstance(data, dict) and "w" in data:
        return MeanFieldFile.model_validate(data).to_hypergraph()
    if isinstance(data, dict) and "blocks" not in data:
        # a plain graph file is read as its pair hypergraph
        return hypergraph_from_graph(GraphFile.model_validate(data).to_graph())
    h = HypergraphFile.model_validate(data).to_hypergraph()
    logger.info(f"Loaded {len(h.items())} blocks on {h.n} vertices from {path}")
    return h


def load_mean_field(path: str | Path) -> MeanFieldWeights:
    path = Path(path)
    mf = MeanFieldFile.model_validate(_read_json(path)).to_weights()
    logger.info(f"Loaded mean-field weights on {mf.n} vertices from {path}")
    return mf


def load_matrix(path: str | Path) -> np.ndarray:
    """CSV with n rows of n comma-separated reals, or JSON {"matrix": ...}."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        rows = MatrixFile.model_validate(_read_json(path)).matrix
        matrix = np.array(rows, dtype=float) if _is_square(rows) else None
    else:
        try:
            matrix = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
        except ValueError as e:
            raise DomainError(f"{path} is not a numeric CSV matrix: {e}") from e
    if matrix is None or matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"{path} does not hold a square matrix")
    return matrix


def _is_square(rows: list[list[float]]) -> bool:
    return all(len(row) == len(rows) for row in rows)


# =============================================================================
# Output
# =============================================================================


def _encode(value: Any) -> str:
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float | np.floating):
        v = float(value)
        if math.isfinite(v):
            return format(v, ".17g")
        return json.dumps("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        items = (f"{json.dumps(str(k))}: {_encode(v)}" for k, v in value.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(value, list | tuple | np.ndarray):
        return "[" + ", ".join(_encode(v) for v in value) + "]"
    raise TypeError(f"cannot encode {type(value).__name__}")


def dumps(report: BaseModel | dict[str, Any]) -> str:
    """One-line JSON with 17 significant digits per float."""
    data = report.model_dump(mode="python") if isinstance(report, BaseModel) else report
    return _encode(data)
