"""Distance statistics and certification of what the four models can encode.

Node pairs always span a whole collection: graph ``i``'s nodes get global
ids ``offsets[i]..offsets[i+1]-1`` and pairs ``(v, u)`` with ``v < u`` are
listed in lexicographic order.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .errors import UsageError
from .graph import GraphCollection
from .lipschitz import walk_kind_for
from .model import EmbeddingTable, Model, forward, readout
from .walks import WalkTable, walk_counts, walk_table

DEGENERATE_VARIANCE = 1e-24
COLLAPSE_TOL = 1e-10
PROPORTIONALITY_TOL = 1e-9
SUM_READOUT_TOL = 1e-9
MEAN_READOUT_TOL = 1e-10
COLLAPSING = ("dgcnn", "gat")


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def stack_layer(tables, k: int) -> np.ndarray:
    """Layer ``k`` of several embedding tables, rows in global-id order."""
    return np.vstack([t.layer(k) for t in _as_list(tables)])


def stack_walks(walks, k: int, kind: str) -> np.ndarray:
    return np.concatenate([w.column(k, kind) for w in _as_list(walks)])


@dataclass(frozen=True)
class DistanceSet:
    pairs: np.ndarray  # (P, 2), v < u
    values: np.ndarray

    def __len__(self) -> int:
        return self.values.shape[0]


def _pairs(count: int) -> np.ndarray:
    iu, ju = np.triu_indices(count, k=1)
    return np.column_stack([iu, ju])


def pairwise_distances(tables, k: int, kind: str | None = None) -> DistanceSet:
    """Distances between all node pairs at layer / walk length ``k``.

    ``tables`` is one table or a list (one per graph, in collection order)
    of either EmbeddingTables (Euclidean distance of rows) or WalkTables
    (absolute difference of the ``kind`` statistic).
    """
    items = _as_list(tables)
    if items and isinstance(items[0], WalkTable):
        if kind is None:
            kind = items[0].kind
        s = stack_walks(items, k, kind).astype(np.float64)
        pairs = _pairs(s.shape[0])
        return DistanceSet(pairs, np.abs(s[pairs[:, 0]] - s[pairs[:, 1]]))
    H = stack_layer(items, k)
    pairs = _pairs(H.shape[0])
    values = pdist(H) if H.shape[0] > 1 else np.zeros(0)
    return DistanceSet(pairs, values)


class Pearson(NamedTuple):
    r: float | None
    degenerate: bool


def pearson(xs, ys) -> Pearson:
    """Sample correlation; ``degenerate`` (and ``r is None``) when a side is constant."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"need two equal-length 1-d sequences, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("correlation needs at least two values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx / x.size <= DEGENERATE_VARIANCE or syy / y.size <= DEGENERATE_VARIANCE:
        return Pearson(None, True)
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return Pearson(min(1.0, max(-1.0, r)), False)


@dataclass(frozen=True)
class CorrelationReport:
    model_kind: str
    layer: int
    walk_kind: str
    pearson_r: float | None
    pair_count: int
    degenerate: bool
    pairs: np.ndarray = field(repr=False)
    walk_dist: np.ndarray = field(repr=False)
    embed_dist: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {
            "model": self.model_kind,
            "layer": self.layer,
            "walk_kind": self.walk_kind,
            "pearson_r": self.pearson_r,
            "pair_count": self.pair_count,
            "degenerate": self.degenerate,
            "max_embed_dist": float(self.embed_dist.max()) if self.pair_count else 0.0,
        }

    def scatter_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["pair_v", "pair_u", "walk_dist", "embed_dist"])
        for (v, u), w, e in zip(self.pairs.tolist(), self.walk_dist, self.embed_dist):
            out.writerow([v, u, format(w, ".17g"), format(e, ".17g")])
        return buf.getvalue()


def model_label(model: Model) -> str:
    if model.is_gin0:
        return "gin0"
    return model.variant or "empty"


def correlate(
    collection: GraphCollection,
    model: Model,
    k: int = 3,
    tables: Sequence[EmbeddingTable] | None = None,
) -> CorrelationReport:
    """Correlate layer-``k`` embedding distances with walk-statistic distances.

    GCN is paired with normalized walk sums, every other model with raw walk
    counts.
    """
    if k < 1 or k > model.depth:
        raise UsageError(f"layer {k} outside 1..{model.depth}")
    kind = walk_kind_for(model)
    if tables is None:
        tables = [forward(g, model) for g in collection]
    walks = [walk_table(g, k, kind) for g in collection]
    emb = pairwise_distances(list(tables), k)
    wd = pairwise_distances(walks, k, kind)
    if len(emb) >= 2:
        res = pearson(wd.values, emb.values)
    else:
        res = Pearson(None, True)
    return CorrelationReport(model_label(model), k, kind, res.r, len(emb), res.degenerate,
                             emb.pairs, wd.values, emb.values)


@dataclass(frozen=True)
class CollapseReport:
    layer: int
    passed: bool
    max_deviation: float  # max pairwise distance / (1 + max row norm)
    max_distance: float
    max_row_norm: float
    tolerance: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def collapse_check(tables, k: int, rel_tol: float = COLLAPSE_TOL) -> CollapseReport:
    """Are all node rows at layer ``k`` (across all given tables) the same?"""
    H = stack_layer(tables, k)
    dist = float(pdist(H).max()) if H.shape[0] > 1 else 0.0
    norm = float(np.linalg.norm(H, axis=1).max()) if H.shape[0] else 0.0
    dev = dist / (1.0 + norm)
    return CollapseReport(k, dev <= rel_tol, dev, dist, norm, rel_tol)


@dataclass(frozen=True)
class ProportionalityReport:
    layer: int
    walk_kind: str
    passed: bool
    max_violation: float
    worst_pair: tuple[int, int] | None
    tolerance: float

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["worst_pair"] = None if self.worst_pair is None else list(self.worst_pair)
        return d


def proportionality_check(
    tables, walks, k: int, kind: str | None = None, rel_tol: float = PROPORTIONALITY_TOL
) -> ProportionalityReport:
    """Check ``h_v * s_u == h_u * s_v`` componentwise for every pair of nodes.

    ``s`` is the walk statistic of length ``k`` (``kind`` raw or normalized).
    The violation of a pair is the largest componentwise gap divided by the
    larger of the two sides' max-norms.
    """
    walk_list = _as_list(walks)
    if kind is None:
        kind = walk_list[0].kind
        if kind == "both":
            raise UsageError("walk table holds both statistics; say which one to use")
    H = stack_layer(tables, k)
    s = stack_walks(walk_list, k, kind).astype(np.float64)
    if s.shape[0] != H.shape[0]:
        raise UsageError(f"{H.shape[0]} embedding rows but {s.shape[0]} walk statistics")
    worst, worst_pair = 0.0, None
    for v in range(H.shape[0] - 1):
        a = H[v] * s[v + 1:, None]          # h_v * s_u
        b = H[v + 1:] * s[v]                # h_u * s_v
        gap = np.abs(a - b).max(axis=1)
        scale = np.maximum(np.abs(a).max(axis=1), np.abs(b).max(axis=1))
        rel = np.divide(gap, scale, out=np.zeros_like(gap), where=scale > 0)
        i = int(rel.argmax()) if rel.size else 0
        if rel.size and rel[i] > worst:
            worst, worst_pair = float(rel[i]), (v, v + 1 + i)
    return ProportionalityReport(k, kind, worst <= rel_tol, worst, worst_pair, rel_tol)


@dataclass(frozen=True)
class ReadoutReport:
    mode: str
    passed: bool
    max_deviation: float
    sizes: tuple[int, ...]
    vectors: np.ndarray = field(repr=False)
    tolerance: float = 0.0

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "passed": self.passed,
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "sizes": list(self.sizes),
            "vectors": self.vectors.tolist(),
        }


def readout_census(collection: GraphCollection, model: Model, mode: str = "sum") -> ReadoutReport:
    """Check that collapsing models only see graph size (sum) or nothing (mean).

    Sum mode: ``g_i == (n_i / n_j) g_j`` for every pair, relative to the
    larger side. Mean mode: all ``g_i`` equal, relative to ``1 + max norm``.
    """
    if model.variant not in COLLAPSING:
        raise UsageError(f"readout census applies to dgcnn or gat, not {model.variant}")
    graphs = [g for g in collection if g.n > 0]
    vectors = np.array([readout(forward(g, model), mode) for g in graphs]).reshape(len(graphs), -1)
    sizes = tuple(g.n for g in graphs)
    worst = 0.0
    if mode == "sum":
        tol = SUM_READOUT_TOL
        for i in range(len(graphs)):
            for j in range(i + 1, len(graphs)):
                want = vectors[j] * (sizes[i] / sizes[j])
                scale = max(np.linalg.norm(vectors[i]), np.linalg.norm(want))
                if scale > 0:
                    worst = max(worst, float(np.linalg.norm(vectors[i] - want) / scale))
    elif mode == "mean":
        tol = MEAN_READOUT_TOL
        if len(graphs) > 1:
            norm = float(np.linalg.norm(vectors, axis=1).max())
            worst = float(pdist(vectors).max()) / (1.0 + norm)
    else:
        raise UsageError(f"unknown readout {mode!r}")
    return ReadoutReport(mode, worst <= tol, worst, sizes, vectors, tol)


@dataclass(frozen=True)
class CollisionWitness:
    """Nodes that share the exact length-``k`` walk count."""

    nodes: tuple[tuple[int, int], ...]  # (graph index, node)
    length: int
    count: int
    degrees: tuple[int, ...]
    embedding_distance: float | None = None

    def to_json(self) -> dict:
        return {
            "nodes": [list(x) for x in self.nodes],
            "k": self.length,
            "count": self.count,
            "degrees": list(self.degrees),
            "embedding_distance": self.embedding_distance,
        }


def find_walk_collisions(
    collection: GraphCollection,
    k: int,
    require_distinct_degrees: bool = True,
    model: Model | None = None,
) -> list[CollisionWitness]:
    """Group nodes by exact ``w^(k)``; every group of two or more is a witness.

    With ``require_distinct_degrees`` only groups whose members have at least
    two different degrees are kept. If ``model`` is given, each witness
    carries the largest layer-``k`` embedding distance within its group.
    """
    if k < 1:
        raise ValueError("walk length must be at least 1")
    if model is not None and model.depth < k:
        raise UsageError(f"model has {model.depth} layers, need at least {k}")
    groups: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for gi, g in enumerate(collection):
        counts = walk_counts(g, k).counts[:, k]
        for v in range(g.n):
            groups[int(counts[v])].append((gi, v))

    tables: dict[int, EmbeddingTable] = {}
    witnesses = []
    for count in sorted(groups):
        members = groups[count]
        if len(members) < 2:
            continue
        degrees = tuple(collection[gi].degree(v) for gi, v in members)
        if require_distinct_degrees and len(set(degrees)) < 2:
            continue
        dist = None
        if model is not None:
            rows = []
            for gi, v in members:
                if gi not in tables:
                    tables[gi] = forward(collection[gi], model)
                rows.append(tables[gi].layer(k)[v])
            dist = float(pdist(np.array(rows)).max())
        witnesses.append(CollisionWitness(tuple(members), k, count, degrees, dist))
    return witnesses
