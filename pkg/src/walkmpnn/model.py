"""Forward passes of the GCN, DGCNN, GAT and GIN-ε aggregation layers.

Every node starts from the scalar feature 1 (``H^(0)`` is an ``n x 1``
column of ones). Dense matrices are float64 numpy arrays; a node's
representation is a row. Neighbour contributions are accumulated one
neighbour at a time in ascending index order, so a forward pass is
bit-reproducible for a given model and graph.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ConstructionError, DimensionMismatchError, IsolatedNodeError, UsageError
from .graph import Graph

VARIANTS = ("gcn", "dgcnn", "gat", "gin")
BIAS_MODES = ("zero", "random-small")
ISOLATED_POLICIES = ("error", "zero")

DEFAULT_WIDTH = 8
GAT_NEGATIVE_SLOPE = 0.2
# He-uniform: weights ~ U(-b, b) with b = sqrt(INIT_GAIN / fan_in).
INIT_GAIN = 6.0
SMALL_BIAS = 1e-2


def relu(x):
    return np.maximum(x, 0.0)


def elu(x):
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def leaky_relu(x, slope=GAT_NEGATIVE_SLOPE):
    return np.where(x > 0, x, slope * x)


ACTIVATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "relu": relu,
    "tanh": np.tanh,
    "elu": elu,
    "sigmoid": lambda x: 1.0 / (1.0 + np.exp(-x)),
    "identity": lambda x: x,
}


def activation(name: str) -> Callable[[np.ndarray], np.ndarray]:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ConstructionError(
            f"unknown nonlinearity {name!r}; choose from {sorted(ACTIVATIONS)}"
        ) from None


def as_matrix(values, name="matrix") -> np.ndarray:
    m = np.array(values, dtype=np.float64, ndmin=2)
    if m.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ConstructionError(f"{name} has non-finite entries")
    return m


# ------------------------------------------------------------------ blocks

@dataclass(frozen=True, eq=False)
class LinearLayer:
    """``x -> W x (+ b)`` applied to each row of its input."""

    weight: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "weight", as_matrix(self.weight, "weight"))
        if self.bias is not None:
            b = np.asarray(self.bias, dtype=np.float64).reshape(-1)
            if b.shape[0] != self.out_dim:
                raise DimensionMismatchError(
                    f"bias has {b.shape[0]} entries for {self.out_dim} outputs"
                )
            object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise DimensionMismatchError(
                f"input width {x.shape[-1]} does not match layer input {self.in_dim}"
            )
        y = x @ self.weight.T
        return y if self.bias is None else y + self.bias


@dataclass(frozen=True, eq=False)
class MLPBlock:
    """Linear layers with a ReLU after every one, the last included."""

    layers: tuple[LinearLayer, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ConstructionError("an MLP needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise DimensionMismatchError(
                    f"MLP layers do not chain: {a.out_dim} outputs into {b.in_dim} inputs"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def __call__(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = relu(layer(x))
        return x


# ------------------------------------------------------------------ layers

def _check_rows(graph: Graph, H: np.ndarray, in_dim: int) -> np.ndarray:
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != graph.n:
        raise DimensionMismatchError(f"expected {graph.n} rows, got shape {H.shape}")
    if H.shape[1] != in_dim:
        raise DimensionMismatchError(f"feature width {H.shape[1]} does not match layer input {in_dim}")
    return H


def _pad(M: np.ndarray) -> np.ndarray:
    return np.vstack([M, np.zeros((1, M.shape[1]))])


def gcn_layer(graph: Graph, H: np.ndarray, layer: LinearLayer) -> np.ndarray:
    """``ReLU(Σ_{u ∈ N(v) ∪ {v}} W h_u / sqrt((1+d(v))(1+d(u))))`` for every node."""
    if layer.bias is not None:
        raise UsageError("GCN layers are linear; a bias is not allowed")
    H = _check_rows(graph, H, layer.in_dim)
    n = graph.n
    M = _pad(layer(H))
    idx, mask = graph.closed_index
    deg1 = np.append(graph.degrees + 1, 1).astype(np.float64)
    scale = np.sqrt(deg1[:n, None] * deg1[idx])
    acc = np.zeros((n, layer.out_dim))
    for j in range(idx.shape[1]):
        acc = acc + np.where(mask[:, j, None], M[idx[:, j]] / scale[:, j, None], 0.0)
    return relu(acc)


def dgcnn_layer(graph: Graph, H: np.ndarray, layer: LinearLayer, f: str = "tanh") -> np.ndarray:
    """``f(Σ_{u ∈ N(v) ∪ {v}} W h_u / (d(v) + 1))`` for every node."""
    fn = activation(f) if isinstance(f, str) else f
    H = _check_rows(graph, H, layer.in_dim)
    n = graph.n
    M = _pad(layer(H))
    idx, mask = graph.closed_index
    acc = np.zeros((n, layer.out_dim))
    for j in range(idx.shape[1]):
        acc = acc + np.where(mask[:, j, None], M[idx[:, j]], 0.0)
    return fn(acc / (graph.degrees + 1)[:, None])


def _gat_scores(Z: np.ndarray, a: np.ndarray, v: int, nbrs, slope: float) -> np.ndarray:
    out = Z.shape[1]
    return leaky_relu(Z[v] @ a[:out] + Z[list(nbrs)] @ a[out:], slope)


def gat_attention(
    graph: Graph,
    H: np.ndarray,
    W: np.ndarray,
    a: np.ndarray,
    slope: float,
    v: int,
) -> np.ndarray:
    """Attention weights of node ``v`` over ``N(v)`` in ascending neighbour order.

    Softmax of ``LeakyReLU(a · [W h_v || W h_u])``, renormalised to sum to 1.
    """
    W = as_matrix(W, "weight")
    H = _check_rows(graph, H, W.shape[1])
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if a.shape[0] != 2 * W.shape[0]:
        raise DimensionMismatchError(f"attention vector needs {2 * W.shape[0]} entries, got {a.shape[0]}")
    nbrs = graph.neighbors[v]
    if not nbrs:
        raise IsolatedNodeError(v)
    e = _gat_scores(H @ W.T, a, v, nbrs, slope)
    ex = np.exp(e - e.max())
    return ex / ex.sum()


def gat_layer(
    graph: Graph,
    H: np.ndarray,
    layer: LinearLayer,
    a: np.ndarray,
    slope: float = GAT_NEGATIVE_SLOPE,
    sigma: str = "elu",
    isolated: str = "error",
) -> np.ndarray:
    """``σ(Σ_{u ∈ N(v)} α_vu W h_u)`` for every node.

    The sum runs over the open neighbourhood only. A node without neighbours
    either raises IsolatedNodeError (``isolated="error"``) or gets an all-zero
    row (``isolated="zero"``).
    """
    if isolated not in ISOLATED_POLICIES:
        raise ConstructionError(f"unknown isolated-node policy {isolated!r}")
    fn = activation(sigma) if isinstance(sigma, str) else sigma
    H = _check_rows(graph, H, layer.in_dim)
    n, out = graph.n, layer.out_dim
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if a.shape[0] != 2 * out:
        raise DimensionMismatchError(f"attention vector needs {2 * out} entries, got {a.shape[0]}")
    lonely = np.flatnonzero(graph.degrees == 0)
    if lonely.size and isolated == "error":
        raise IsolatedNodeError(int(lonely[0]))

    Z = layer(H)
    idx, mask = graph.open_index
    Zp = _pad(Z)
    src = Z @ a[:out]
    dst = np.append(Z @ a[out:], 0.0)
    e = leaky_relu(src[:, None] + dst[idx], slope) if idx.size else np.zeros((n, 0))
    e = np.where(mask, e, -np.inf)
    top = np.where(mask.any(axis=1), e.max(axis=1, initial=-np.inf), 0.0)
    ex = np.where(mask, np.exp(e - top[:, None]), 0.0)
    total = ex.sum(axis=1)
    alpha = np.divide(ex, total[:, None], out=np.zeros_like(ex), where=total[:, None] > 0)

    acc = np.zeros((n, out))
    for j in range(idx.shape[1]):
        acc = acc + np.where(mask[:, j, None], alpha[:, j, None] * Zp[idx[:, j]], 0.0)
    result = fn(acc)
    if lonely.size:
        result[lonely] = 0.0
    return result


def gin_layer(graph: Graph, H: np.ndarray, mlp: MLPBlock, epsilon: float = 0.0) -> np.ndarray:
    """``MLP((1 + ε) h_v + Σ_{u ∈ N(v)} h_u)`` for every node."""
    if not math.isfinite(epsilon):
        raise ConstructionError("epsilon must be finite")
    H = _check_rows(graph, H, mlp.in_dim)
    idx, mask = graph.open_index
    Hp = _pad(H)
    acc = (1.0 + epsilon) * H
    for j in range(idx.shape[1]):
        acc = acc + np.where(mask[:, j, None], Hp[idx[:, j]], 0.0)
    return mlp(acc)


# ------------------------------------------------------------------ models

@dataclass(frozen=True)
class LayerSpec:
    """Configuration of one aggregation layer.

    ``activation`` is DGCNN's ``f`` (default tanh) or GAT's ``σ`` (default
    elu); GCN and GIN always use ReLU. ``hidden`` and ``mlp_layers`` shape
    GIN's MLP. Only GIN layers may carry biases.
    """

    variant: str
    width: int = DEFAULT_WIDTH
    epsilon: float = 0.0
    hidden: int | None = None
    mlp_layers: int = 2
    activation: str | None = None
    negative_slope: float = GAT_NEGATIVE_SLOPE
    bias_mode: str = "zero"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConstructionError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.width < 1:
            raise ConstructionError(f"width must be at least 1, got {self.width}")
        if self.hidden is not None and self.hidden < 1:
            raise ConstructionError(f"hidden width must be at least 1, got {self.hidden}")
        if self.mlp_layers < 1:
            raise ConstructionError("an MLP needs at least one layer")
        if not math.isfinite(self.epsilon):
            raise ConstructionError("epsilon must be finite")
        if self.bias_mode not in BIAS_MODES:
            raise ConstructionError(f"unknown bias mode {self.bias_mode!r}")
        if self.bias_mode != "zero" and self.variant != "gin":
            raise ConstructionError(f"{self.variant} layers have no bias; use bias_mode='zero'")
        if self.activation is not None:
            activation(self.activation)

    @property
    def nonlinearity(self) -> str:
        if self.activation is not None:
            return self.activation
        return {"dgcnn": "tanh", "gat": "elu"}.get(self.variant, "relu")


@dataclass(frozen=True, eq=False)
class Layer:
    """A LayerSpec with its weights drawn."""

    spec: LayerSpec
    linear: LinearLayer | None = None
    mlp: MLPBlock | None = None
    attention: np.ndarray | None = None

    @property
    def in_dim(self) -> int:
        return (self.mlp or self.linear).in_dim

    @property
    def out_dim(self) -> int:
        return (self.mlp or self.linear).out_dim

    def linear_parts(self) -> tuple[LinearLayer, ...]:
        return self.mlp.layers if self.mlp is not None else (self.linear,)

    def apply(self, graph: Graph, H: np.ndarray, isolated: str = "error") -> np.ndarray:
        s = self.spec
        if s.variant == "gcn":
            return gcn_layer(graph, H, self.linear)
        if s.variant == "dgcnn":
            return dgcnn_layer(graph, H, self.linear, s.nonlinearity)
        if s.variant == "gat":
            return gat_layer(graph, H, self.linear, self.attention, s.negative_slope,
                             s.nonlinearity, isolated)
        return gin_layer(graph, H, self.mlp, s.epsilon)


@dataclass(frozen=True, eq=False)
class Model:
    layers: tuple[Layer, ...]
    seed: int | None = None
    isolated: str = "error"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if len({l.spec.variant for l in self.layers}) > 1:
            raise ConstructionError("all layers of a model must share one variant")
        if self.isolated not in ISOLATED_POLICIES:
            raise ConstructionError(f"unknown isolated-node policy {self.isolated!r}")
        dim = 1
        for i, layer in enumerate(self.layers, start=1):
            if layer.in_dim != dim:
                raise DimensionMismatchError(f"layer {i} expects width {layer.in_dim}, receives {dim}")
            dim = layer.out_dim

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def variant(self) -> str | None:
        return self.layers[0].spec.variant if self.layers else None

    @property
    def has_bias(self) -> bool:
        return any(p.bias is not None and np.any(p.bias != 0)
                   for l in self.layers for p in l.linear_parts())

    @property
    def is_gin0(self) -> bool:
        return self.variant == "gin" and all(l.spec.epsilon == 0.0 for l in self.layers)

    def with_isolated(self, policy: str) -> "Model":
        return replace(self, isolated=policy)

    def to_json(self) -> dict:
        layers = []
        for l in self.layers:
            s = l.spec
            layers.append({
                "variant": s.variant,
                "width": s.width,
                "epsilon": s.epsilon,
                "hidden": s.hidden,
                "mlp_layers": s.mlp_layers,
                "activation": s.nonlinearity,
                "negative_slope": s.negative_slope,
                "bias_mode": s.bias_mode,
                "weights": [p.weight.tolist() for p in l.linear_parts()],
                "biases": [None if p.bias is None else p.bias.tolist() for p in l.linear_parts()],
                "attention": None if l.attention is None else l.attention.tolist(),
            })
        return {"seed": self.seed, "isolated": self.isolated, "layers": layers}

    @classmethod
    def from_json(cls, data: dict) -> "Model":
        layers = []
        for d in data["layers"]:
            spec = LayerSpec(
                d["variant"], d["width"], d.get("epsilon", 0.0), d.get("hidden"),
                d.get("mlp_layers", 2), d.get("activation"),
                d.get("negative_slope", GAT_NEGATIVE_SLOPE), d.get("bias_mode", "zero"),
            )
            biases = d.get("biases") or [None] * len(d["weights"])
            parts = [LinearLayer(np.array(w), None if b is None else np.array(b))
                     for w, b in zip(d["weights"], biases)]
            if spec.variant == "gin":
                layers.append(Layer(spec, mlp=MLPBlock(tuple(parts))))
            else:
                att = d.get("attention")
                layers.append(Layer(spec, linear=parts[0],
                                    attention=None if att is None else np.array(att, dtype=np.float64)))
        return cls(tuple(layers), data.get("seed"), data.get("isolated", "error"))


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = math.sqrt(INIT_GAIN / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _linear(rng, in_dim: int, out_dim: int, bias_mode: str) -> LinearLayer:
    W = _uniform(rng, (out_dim, in_dim), in_dim)
    b = rng.uniform(-SMALL_BIAS, SMALL_BIAS, size=out_dim) if bias_mode == "random-small" else None
    return LinearLayer(W, b)


def init_model(specs: Sequence[LayerSpec], seed: int, isolated: str = "error") -> Model:
    """Draw weights for ``specs`` from a PCG64 stream seeded with ``seed``.

    Weights are He-uniform, ``U(-sqrt(6/fan_in), sqrt(6/fan_in))``; GAT
    attention vectors use ``fan_in = 2 * width``. Random-small biases are
    ``U(-0.01, 0.01)``. Layers are drawn in order, weights before biases
    before the attention vector.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    layers = []
    dim = 1
    for spec in specs:
        if spec.variant == "gin":
            hidden = spec.hidden or spec.width
            dims = [dim] + [hidden] * (spec.mlp_layers - 1) + [spec.width]
            parts = tuple(_linear(rng, a, b, spec.bias_mode) for a, b in zip(dims, dims[1:]))
            layers.append(Layer(spec, mlp=MLPBlock(parts)))
        else:
            lin = _linear(rng, dim, spec.width, "zero")
            att = _uniform(rng, 2 * spec.width, 2 * spec.width) if spec.variant == "gat" else None
            layers.append(Layer(spec, linear=lin, attention=att))
        dim = spec.width
    return Model(tuple(layers), seed, isolated)


def build_model(
    variant: str,
    depth: int = 3,
    width: int = DEFAULT_WIDTH,
    seed: int = 0,
    *,
    epsilon: float = 0.0,
    bias_mode: str = "zero",
    isolated: str = "error",
    **spec_kwargs,
) -> Model:
    """Shorthand for ``depth`` identical layers of one variant.

    ``variant`` may also be ``"gin0"``, meaning GIN with ``epsilon = 0``.
    """
    if variant == "gin0":
        variant, epsilon = "gin", 0.0
    spec = LayerSpec(variant, width, epsilon=epsilon, bias_mode=bias_mode, **spec_kwargs)
    return init_model([spec] * depth, seed, isolated)


# --------------------------------------------------------------- embedding

@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    """Node representations ``H^(0..K)``; ``layers[k]`` is ``n x width_k``."""

    layers: tuple[np.ndarray, ...] = field(default_factory=tuple)

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    @property
    def node_count(self) -> int:
        return self.layers[0].shape[0]

    def layer(self, k: int) -> np.ndarray:
        if not 0 <= k <= self.depth:
            raise UsageError(f"layer {k} outside 0..{self.depth}")
        return self.layers[k]

    @property
    def final(self) -> np.ndarray:
        return self.layers[-1]

    def to_csv(self) -> str:
        width = max(h.shape[1] for h in self.layers)
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["node", "layer", *(f"c{i}" for i in range(width))])
        for k, h in enumerate(self.layers):
            for v, row in enumerate(h):
                cells = [format(float(x), ".17g") for x in row]
                out.writerow([v, k, *cells, *([""] * (width - len(cells)))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"depth": self.depth, "layers": [h.tolist() for h in self.layers]}


def forward(graph: Graph, model: Model) -> EmbeddingTable:
    """Run every layer of ``model`` from the all-ones initial feature."""
    H = np.ones((graph.n, 1))
    tables = [H]
    for layer in model.layers:
        H = layer.apply(graph, H, model.isolated)
        tables.append(H)
    for h in tables:
        h.setflags(write=False)
    return EmbeddingTable(tuple(tables))


def readout(table: EmbeddingTable, mode: str = "sum") -> np.ndarray:
    """Column-wise sum or mean of the final layer."""
    H = table.final
    if mode == "sum":
        return H.sum(axis=0)
    if mode == "mean":
        if H.shape[0] == 0:
            raise UsageError("mean readout of a graph without nodes is undefined")
        return H.mean(axis=0)
    raise UsageError(f"unknown readout {mode!r}; use 'sum' or 'mean'")
