"""Undirected simple graphs, file-format parsers and synthetic generators.

Graphs are immutable once built. Nodes are the dense indices ``0..n-1`` and
edges are stored once, as ``(u, v)`` with ``u < v``, in sorted order.

Randomised generators draw from numpy's PCG64 bit generator
(``numpy.random.Generator(numpy.random.PCG64(seed))``), so a given
``SyntheticSpec`` reproduces the same graph on any platform numpy supports.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConstructionError, GraphFormatError, SelfLoopError

__all__ = [
    "Graph",
    "GraphCollection",
    "SyntheticSpec",
    "FIG2_KINDS",
    "FIG2_RED_NODE",
    "parse_edge_list",
    "parse_tu_collection",
    "generate",
    "parse_synthetic",
    "fig2_collection",
    "to_edge_list",
    "random_corpus",
]


class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    Self-loops are rejected: every aggregation scheme adds the node's own
    contribution explicitly, so a stored loop would count it twice.
    """

    __slots__ = ("node_count", "edges", "neighbors", "degrees", "__dict__")

    def __init__(self, node_count: int, edges: Iterable[tuple[int, int]] = ()):
        if node_count < 0:
            raise ConstructionError(f"node count must be nonnegative, got {node_count}")
        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise SelfLoopError(f"self-loop on node {u}")
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise ConstructionError(
                    f"edge ({u}, {v}) out of range for {node_count} nodes"
                )
            canon.add((u, v) if u < v else (v, u))
        self.node_count = int(node_count)
        self.edges: tuple[tuple[int, int], ...] = tuple(sorted(canon))
        adj: list[list[int]] = [[] for _ in range(node_count)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        self.neighbors: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(a)) for a in adj)
        deg = np.array([len(a) for a in adj], dtype=np.int64)
        deg.setflags(write=False)
        self.degrees = deg

    @property
    def n(self) -> int:
        return self.node_count

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    def closed_neighborhood(self, v: int) -> tuple[int, ...]:
        """N(v) ∪ {v} in ascending order."""
        return tuple(sorted(self.neighbors[v] + (v,)))

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1
        a.setflags(write=False)
        return a

    def _padded(self, closed: bool) -> tuple[np.ndarray, np.ndarray]:
        rows = [self.closed_neighborhood(v) if closed else self.neighbors[v]
                for v in range(self.n)]
        width = max((len(r) for r in rows), default=0)
        # Padding points at index n, i.e. one past the last real row.
        idx = np.full((self.n, width), self.n, dtype=np.int64)
        mask = np.zeros((self.n, width), dtype=bool)
        for v, r in enumerate(rows):
            idx[v, : len(r)] = r
            mask[v, : len(r)] = True
        idx.setflags(write=False)
        mask.setflags(write=False)
        return idx, mask

    @cached_property
    def closed_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Padded ``(index, mask)`` arrays listing N(v) ∪ {v} per row, ascending."""
        return self._padded(closed=True)

    @cached_property
    def open_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Padded ``(index, mask)`` arrays listing N(v) per row, ascending."""
        return self._padded(closed=False)

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Return the graph with node ``v`` renamed to ``perm[v]``."""
        perm = [int(p) for p in perm]
        if sorted(perm) != list(range(self.n)):
            raise ConstructionError("relabelling must be a permutation of the nodes")
        return Graph(self.n, ((perm[u], perm[v]) for u, v in self.edges))

    def check_invariants(self) -> None:
        """Raise AssertionError if any structural invariant is broken."""
        assert all(u < v for u, v in self.edges)
        assert len(set(self.edges)) == len(self.edges)
        for v, nb in enumerate(self.neighbors):
            assert v not in nb
            assert list(nb) == sorted(set(nb))
            for u in nb:
                assert v in self.neighbors[u]
            assert self.degrees[v] == len(nb)
        assert int(self.degrees.sum()) == 2 * self.m

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [[u, v] for u, v in self.edges]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Graph":
        return cls(int(data["n"]), (tuple(e) for e in data["edges"]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class GraphCollection:
    """Ordered graphs whose nodes are also numbered globally.

    Global ids run through the graphs in order, so graph ``i`` owns the ids
    ``offsets[i] .. offsets[i+1]-1``.
    """

    graphs: tuple[Graph, ...]
    labels: tuple[int, ...] | None = None
    node_origin: tuple[tuple[int, int], ...] = field(init=False, repr=False)
    offsets: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
            if len(self.labels) != len(self.graphs):
                raise GraphFormatError(
                    f"{len(self.labels)} labels for {len(self.graphs)} graphs"
                )
        origin = []
        offsets = [0]
        for gi, g in enumerate(self.graphs):
            origin.extend((gi, v) for v in range(g.n))
            offsets.append(offsets[-1] + g.n)
        object.__setattr__(self, "node_origin", tuple(origin))
        object.__setattr__(self, "offsets", tuple(offsets))

    @property
    def total_nodes(self) -> int:
        return self.offsets[-1]

    def global_id(self, graph_index: int, node: int) -> int:
        return self.offsets[graph_index] + node

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def __getitem__(self, i) -> Graph:
        return self.graphs[i]


# ---------------------------------------------------------------- parsing

_INT = re.compile(r"^\d+$")
_N_HEADER = re.compile(r"^\s*#\s*n\s*=\s*(\d+)\s*$")


def parse_edge_list(text: str, node_count_hint: int | None = None) -> Graph:
    """Parse ``"u v"`` lines into a Graph.

    Blank lines and ``#`` comments are skipped, except a ``# n=<count>``
    header, which declares the node count (as written by ``to_edge_list``).
    Duplicate and reversed edges collapse to one; self-loop lines are an error.
    """
    edges = []
    max_seen = -1
    declared = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        header = _N_HEADER.match(raw)
        if header:
            declared = int(header.group(1))
            continue
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or not all(_INT.match(p) for p in parts):
            raise GraphFormatError(f"expected two nonnegative integers, got {raw!r}", lineno)
        u, v = int(parts[0]), int(parts[1])
        if u == v:
            raise SelfLoopError(f"self-loop on node {u} is not allowed", lineno)
        edges.append((u, v))
        max_seen = max(max_seen, u, v)
    n = max(max_seen + 1, declared or 0)
    if node_count_hint is not None:
        if node_count_hint < 0:
            raise GraphFormatError(f"negative node count hint {node_count_hint}")
        n = max(n, node_count_hint)
    return Graph(n, edges)


def to_edge_list(graph: Graph) -> str:
    """Serialise to edge-list text; a header comment keeps isolated nodes."""
    lines = [f"# n={graph.n}"]
    lines.extend(f"{u} {v}" for u, v in graph.edges)
    return "\n".join(lines) + "\n"


def _tu_lines(text: str) -> list[tuple[int, list[str]]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        out.append((lineno, [p for p in re.split(r"[,\s]+", line) if p]))
    return out


def _tu_int(token: str, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise GraphFormatError(f"{what}: not an integer: {token!r}", lineno) from None


def parse_tu_collection(
    adjacency_text: str, indicator_text: str, labels_text: str | None = None
) -> GraphCollection:
    """Parse the TU benchmark layout (``DS_A``, ``DS_graph_indicator``, ``DS_graph_labels``).

    Node and graph ids in the files are 1-based. Edges appear in both
    directions in ``DS_A`` and are deduplicated here.
    """
    graph_of: list[int] = []
    for lineno, parts in _tu_lines(indicator_text):
        if len(parts) != 1:
            raise GraphFormatError(f"graph indicator: expected one id, got {parts}", lineno)
        gid = _tu_int(parts[0], lineno, "graph indicator")
        if gid < 1:
            raise GraphFormatError(f"graph indicator: ids are 1-based, got {gid}", lineno)
        graph_of.append(gid)

    distinct = sorted(set(graph_of))
    if distinct and distinct != list(range(1, distinct[-1] + 1)):
        missing = sorted(set(range(1, distinct[-1] + 1)) - set(distinct))
        raise GraphFormatError(f"graph ids are not contiguous; missing {missing[:5]}")
    n_graphs = len(distinct)

    local = []
    sizes = [0] * n_graphs
    for gid in graph_of:
        local.append(sizes[gid - 1])
        sizes[gid - 1] += 1

    edges: list[list[tuple[int, int]]] = [[] for _ in range(n_graphs)]
    for lineno, parts in _tu_lines(adjacency_text):
        if len(parts) != 2:
            raise GraphFormatError(f"adjacency: expected 'i, j', got {parts}", lineno)
        i = _tu_int(parts[0], lineno, "adjacency")
        j = _tu_int(parts[1], lineno, "adjacency")
        for node in (i, j):
            if not 1 <= node <= len(graph_of):
                raise GraphFormatError(f"adjacency: undeclared node id {node}", lineno)
        gi, gj = graph_of[i - 1], graph_of[j - 1]
        if gi != gj:
            raise GraphFormatError(
                f"edge ({i}, {j}) joins graph {gi} to graph {gj}", lineno
            )
        if i == j:
            raise SelfLoopError(f"self-loop on node {i} is not allowed", lineno)
        edges[gi - 1].append((local[i - 1], local[j - 1]))

    labels = None
    if labels_text is not None:
        labels = []
        for lineno, parts in _tu_lines(labels_text):
            if len(parts) != 1:
                raise GraphFormatError(f"graph labels: expected one label, got {parts}", lineno)
            labels.append(_tu_int(parts[0], lineno, "graph labels"))

    graphs = tuple(Graph(sizes[g], edges[g]) for g in range(n_graphs))
    return GraphCollection(graphs, labels)


# ------------------------------------------------------------- generators

FIG2_KINDS = ("fig2-leaf-on-hub", "fig2-deg2-node", "fig2-star3")
# The highlighted node of every fig2-* construction.
FIG2_RED_NODE = 0

_KINDS = {
    "erdos-renyi": ("n", "p"),
    "path": ("n",),
    "cycle": ("n",),
    "star": ("leaves",),
    "complete": ("n",),
    **{k: () for k in FIG2_KINDS},
}
_ALIASES = {"leaf-count": "leaves", "leaf_count": "leaves", "prob": "p"}


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic graph. ``seed`` only matters for erdos-renyi."""

    kind: str
    n: int | None = None
    p: float | None = None
    leaves: int | None = None
    seed: int = 0

    def params(self) -> dict:
        return {k: getattr(self, k) for k in _KINDS.get(self.kind, ())}

    def describe(self) -> str:
        params = ",".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.kind}:{params}" if params else self.kind


def parse_synthetic(text: str, seed: int = 0) -> tuple[SyntheticSpec, int]:
    """Parse ``kind:key=value,...`` into a spec and a repeat count.

    The optional ``count`` key asks for that many independent draws; the
    caller seeds draw ``i`` with ``seed + i``.
    """
    kind, _, rest = text.strip().partition(":")
    kind = kind.strip()
    if kind not in _KINDS:
        raise ConstructionError(f"unknown synthetic kind {kind!r}; choose from {sorted(_KINDS)}")
    values: dict = {}
    count = 1
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        key = _ALIASES.get(key.strip(), key.strip())
        if not eq:
            raise ConstructionError(f"expected key=value, got {item!r}")
        try:
            if key == "count":
                count = int(val)
            elif key == "seed":
                seed = int(val)
            elif key == "p":
                values["p"] = float(val)
            elif key in ("n", "leaves"):
                values[key] = int(val)
            else:
                raise ConstructionError(f"unknown parameter {key!r} for {kind}")
        except ValueError as exc:
            raise ConstructionError(f"bad value for {key}: {val!r}") from exc
        if key not in ("count", "seed") and key not in _KINDS[kind]:
            raise ConstructionError(f"{kind} takes no parameter {key!r}")
    if count < 1:
        raise ConstructionError("count must be at least 1")
    return SyntheticSpec(kind, seed=seed, **values), count


def _erdos_renyi(n: int, p: float, seed: int) -> Graph:
    rng = np.random.Generator(np.random.PCG64(seed))
    iu, ju = np.triu_indices(n, k=1)
    # One uniform draw per candidate pair, pairs in lexicographic order.
    keep = rng.random(iu.size) < p
    return Graph(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConstructionError(msg)


def generate(spec: SyntheticSpec) -> Graph:
    """Build the graph described by ``spec``."""
    kind = spec.kind
    if kind not in _KINDS:
        raise ConstructionError(f"unknown synthetic kind {kind!r}")
    for key in _KINDS[kind]:
        _require(getattr(spec, key) is not None, f"{kind} needs parameter {key!r}")

    if kind == "erdos-renyi":
        _require(spec.n >= 1, "n must be at least 1")
        _require(0.0 <= spec.p <= 1.0, f"edge probability {spec.p} outside [0, 1]")
        return _erdos_renyi(spec.n, spec.p, spec.seed)
    if kind == "path":
        _require(spec.n >= 1, "n must be at least 1")
        return Graph(spec.n, ((i, i + 1) for i in range(spec.n - 1)))
    if kind == "cycle":
        _require(spec.n >= 3, "a simple cycle needs at least 3 nodes")
        return Graph(spec.n, ((i, (i + 1) % spec.n) for i in range(spec.n)))
    if kind == "star":
        _require(spec.leaves >= 0, "leaf count must be nonnegative")
        return Graph(spec.leaves + 1, ((0, i) for i in range(1, spec.leaves + 1)))
    if kind == "complete":
        _require(spec.n >= 1, "n must be at least 1")
        return Graph(spec.n, ((i, j) for i in range(spec.n) for j in range(i + 1, spec.n)))
    if kind == "fig2-leaf-on-hub":
        # Leaf 0 hangs off hub 1 (degree 7). The hub's other six neighbours
        # are paired into triangles so that only node 0 has 10 two-step walks.
        return Graph(8, [(0, 1), *((1, i) for i in range(2, 8)), (2, 3), (4, 5), (6, 7)])
    if kind == "fig2-deg2-node":
        # Node 0 has degree 2; its neighbours 1 and 2 have degrees 2 and 3.
        return Graph(6, [(0, 1), (0, 2), (1, 3), (2, 4), (2, 5)])
    if kind == "fig2-star3":
        return generate(SyntheticSpec("star", leaves=3))
    raise AssertionError(kind)


def fig2_collection() -> GraphCollection:
    """The three fig2-* graphs in ``FIG2_KINDS`` order."""
    return GraphCollection(tuple(generate(SyntheticSpec(k)) for k in FIG2_KINDS))


def random_corpus(
    count: int,
    n_range: tuple[int, int] = (5, 40),
    p_range: tuple[float, float] = (0.1, 0.5),
    seed: int = 0,
    no_isolated: bool = False,
    max_attempts: int = 1000,
) -> GraphCollection:
    """``count`` Erdős–Rényi graphs with ``n`` and ``p`` drawn uniformly from the ranges.

    A PCG64 stream seeded with ``seed`` supplies each graph's ``n``, ``p`` and
    generator seed. With ``no_isolated`` a draw containing an isolated node is
    discarded and redrawn from the same stream.
    """
    lo, hi = n_range
    if count < 0 or lo < 1 or hi < lo:
        raise ConstructionError(f"bad corpus parameters count={count}, n_range={n_range}")
    rng = np.random.Generator(np.random.PCG64(seed))
    graphs = []
    for _ in range(count):
        for _attempt in range(max_attempts):
            n = int(rng.integers(lo, hi, endpoint=True))
            p = float(rng.uniform(*p_range))
            g = generate(SyntheticSpec("erdos-renyi", n=n, p=p,
                                       seed=int(rng.integers(0, 2**63 - 1))))
            if not no_isolated or int(g.degrees.min()) > 0:
                break
        else:
            raise ConstructionError(f"no graph without isolated nodes after {max_attempts} draws")
        graphs.append(g)
    return GraphCollection(tuple(graphs))
