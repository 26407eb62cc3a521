"""Walk censuses on the self-loop-augmented graph.

A walk of length ``k`` from ``v`` is a sequence ``(v = x_0, x_1, ..., x_k)``
with every ``x_{i+1}`` in ``N(x_i) ∪ {x_i}``, i.e. ``k`` steps on ``A + I``.

* ``w_v^(k)``: the number of such walks, ``((A + I)^k 1)_v``.
* ``w̃_v^(k)``: the same walks weighted by
  ``1 / ((1+d(x_1))...(1+d(x_{k-1})) * sqrt((1+d(x_0))(1+d(x_k))))``,
  which equals ``(S^k 1)_v`` for ``S = (D+I)^{-1/2} (A+I) (D+I)^{-1/2}``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationBudgetError, UsageError, WalkOverflowError
from .graph import Graph

INT64_MAX = int(np.iinfo(np.int64).max)
DEFAULT_BUDGET = 10_000_000


@dataclass(frozen=True)
class WalkTable:
    """Per-node walk statistics for lengths ``0..max_length``.

    ``counts[v, k]`` holds ``w_v^(k)`` (int64) and ``normalized[v, k]`` holds
    ``w̃_v^(k)`` (float64). Either may be absent depending on ``kind``.
    """

    max_length: int
    counts: np.ndarray | None = None
    normalized: np.ndarray | None = None

    @property
    def kind(self) -> str:
        if self.counts is not None and self.normalized is not None:
            return "both"
        return "raw" if self.counts is not None else "normalized"

    @property
    def node_count(self) -> int:
        arr = self.counts if self.counts is not None else self.normalized
        return arr.shape[0]

    def column(self, k: int, kind: str) -> np.ndarray:
        """Statistic of length ``k`` for every node; ``kind`` is raw or normalized."""
        if not 0 <= k <= self.max_length:
            raise UsageError(f"walk length {k} outside 0..{self.max_length}")
        arr = self.counts if kind == "raw" else self.normalized
        if kind not in ("raw", "normalized") or arr is None:
            raise UsageError(f"walk table of kind {self.kind!r} has no {kind!r} statistic")
        return arr[:, k]

    def merge(self, other: "WalkTable") -> "WalkTable":
        if other.max_length != self.max_length:
            raise UsageError("cannot merge walk tables of different lengths")
        return WalkTable(
            self.max_length,
            self.counts if self.counts is not None else other.counts,
            self.normalized if self.normalized is not None else other.normalized,
        )

    def rows(self):
        """Yield ``(node, k, count or None, normalized or None)``."""
        for v in range(self.node_count):
            for k in range(self.max_length + 1):
                c = None if self.counts is None else int(self.counts[v, k])
                w = None if self.normalized is None else float(self.normalized[v, k])
                yield v, k, c, w

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["node", "k", "count", "normalized"])
        for v, k, c, w in self.rows():
            out.writerow([v, k, "" if c is None else c, "" if w is None else format(w, ".17g")])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "max_length": self.max_length,
            "kind": self.kind,
            "counts": None if self.counts is None else self.counts.tolist(),
            "normalized": None if self.normalized is None else self.normalized.tolist(),
        }


def _check_length(k: int) -> None:
    if k < 0:
        raise ValueError(f"walk length must be nonnegative, got {k}")


def walk_counts(graph: Graph, max_length: int) -> WalkTable:
    """Exact ``w_v^(k)`` for ``k = 0..max_length``.

    Raises WalkOverflowError naming the first node and length whose count
    leaves the int64 range.
    """
    _check_length(max_length)
    n = graph.n
    out = np.zeros((n, max_length + 1), dtype=np.int64)
    out[:, 0] = 1
    idx, mask = graph.closed_index
    widest = idx.shape[1]
    for k in range(1, max_length + 1):
        prev = out[:, k - 1]
        if n and int(prev.max()) > INT64_MAX // max(widest, 1):
            out[:, k] = _counts_step_checked(graph, prev, k)
            continue
        padded = np.append(prev, 0)
        out[:, k] = padded[idx].sum(axis=1) if widest else 0
    out.setflags(write=False)
    return WalkTable(max_length, counts=out)


def _counts_step_checked(graph: Graph, prev: np.ndarray, k: int) -> np.ndarray:
    step = np.zeros(graph.n, dtype=np.int64)
    for v in range(graph.n):
        total = sum(int(prev[u]) for u in graph.closed_neighborhood(v))
        if total > INT64_MAX:
            raise WalkOverflowError(v, k)
        step[v] = total
    return step


def normalized_walk_sums(graph: Graph, max_length: int) -> WalkTable:
    """``w̃_v^(k)`` for ``k = 0..max_length`` in double precision.

    Each step sums over N(v) ∪ {v} in ascending neighbour order, so results
    are bit-reproducible.
    """
    _check_length(max_length)
    n = graph.n
    out = np.zeros((n, max_length + 1), dtype=np.float64)
    out[:, 0] = 1.0
    idx, mask = graph.closed_index
    deg1 = np.append(graph.degrees + 1, 1).astype(np.float64)
    scale = np.sqrt(deg1[:n, None] * deg1[idx])
    for k in range(1, max_length + 1):
        x = np.append(out[:, k - 1], 0.0)
        acc = np.zeros(n)
        for j in range(idx.shape[1]):
            acc = acc + np.where(mask[:, j], x[idx[:, j]] / scale[:, j], 0.0)
        out[:, k] = acc
    out.setflags(write=False)
    return WalkTable(max_length, normalized=out)


def walk_table(graph: Graph, max_length: int, kind: str = "both") -> WalkTable:
    """Raw, normalized or both statistics in one table."""
    if kind == "raw":
        return walk_counts(graph, max_length)
    if kind == "normalized":
        return normalized_walk_sums(graph, max_length)
    if kind == "both":
        return walk_counts(graph, max_length).merge(normalized_walk_sums(graph, max_length))
    raise UsageError(f"unknown walk kind {kind!r}")


# Brute-force oracles. Deliberately naive: explicit depth-first enumeration
# of every walk, sharing no code with the matrix-power routines above.

def _enumerate(graph: Graph, v: int, k: int, budget: int, visit) -> None:
    _check_length(k)
    if not 0 <= v < graph.n:
        raise ValueError(f"node {v} not in graph")
    steps = 0
    stack = [[v]]
    while stack:
        walk = stack.pop()
        steps += 1
        if steps > budget:
            raise EnumerationBudgetError(
                f"enumerating length-{k} walks from node {v} exceeded {budget} steps"
            )
        if len(walk) == k + 1:
            visit(walk)
            continue
        last = walk[-1]
        for nxt in (last, *graph.neighbors[last]):
            stack.append(walk + [nxt])


def enumerate_walks_bruteforce(graph: Graph, v: int, k: int, budget: int = DEFAULT_BUDGET) -> int:
    """Count length-``k`` walks from ``v`` by listing them one by one."""
    found = [0]

    def visit(_walk):
        found[0] += 1

    _enumerate(graph, v, k, budget, visit)
    return found[0]


def walk_weight(graph: Graph, walk: list[int]) -> float:
    """Weight of a single walk in the normalized census."""
    if len(walk) == 1:
        return 1.0
    d = [graph.degree(x) + 1 for x in walk]
    interior = 1.0
    for x in d[1:-1]:
        interior *= x
    return 1.0 / (interior * (d[0] * d[-1]) ** 0.5)


def enumerate_normalized_walks_bruteforce(
    graph: Graph, v: int, k: int, budget: int = DEFAULT_BUDGET
) -> float:
    """Sum of ``walk_weight`` over every length-``k`` walk from ``v``."""
    total = [0.0]

    def visit(walk):
        total[0] += walk_weight(graph, walk)

    _enumerate(graph, v, k, budget, visit)
    return total[0]
