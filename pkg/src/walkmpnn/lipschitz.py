"""Spectral norms, layer Lipschitz constants and the walk-distance bounds.

For a bias-free linear map the Euclidean Lipschitz constant is its largest
singular value. ReLU is 1-Lipschitz, so the product of the sublayer norms
upper-bounds an MLP's constant. That product is conservative, never tight.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, UsageError
from .graph import Graph
from .model import EmbeddingTable, Layer, LinearLayer, MLPBlock, Model, as_matrix, forward
from .walks import WalkTable, normalized_walk_sums, walk_counts

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
BOUND_TOL = 1e-8


@dataclass(frozen=True)
class PowerIterationResult:
    value: float
    iterations: int
    residual: float
    converged: bool
    vector: np.ndarray


def _iterate(G: np.ndarray, x: np.ndarray, tol: float, max_iter: int):
    x = x / np.linalg.norm(x)
    y = G @ x
    lam = float(x @ y)
    for it in range(1, max_iter + 1):
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0, x, it, 0.0, True
        x = y / ny
        y = G @ x
        new = float(x @ y)
        if abs(new - lam) <= tol * abs(new):
            residual = float(np.linalg.norm(y - new * x) / max(abs(new), 1e-300))
            return new, x, it, residual, True
        lam = new
    residual = float(np.linalg.norm(y - lam * x) / max(abs(lam), 1e-300))
    return lam, x, max_iter, residual, False


def power_iteration(
    W, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, strict: bool = True
) -> PowerIterationResult:
    """Largest singular value of ``W`` by power iteration on ``W^T W``.

    Starts from the all-ones vector. A second run from a fixed pseudo-random
    start guards against the ones vector being orthogonal to the top singular
    direction; the larger estimate wins. With ``strict`` a run that does not
    converge raises ConvergenceError.
    """
    W = as_matrix(W, "weight")
    if tol <= 0:
        raise ValueError("tol must be positive")
    G = W.T @ W
    dim = G.shape[0]
    starts = [np.ones(dim), np.random.Generator(np.random.PCG64(0)).uniform(0.5, 1.5, dim)]
    best = None
    for x0 in starts:
        lam, x, it, res, ok = _iterate(G, x0, tol, max_iter)
        if not ok:
            if strict:
                raise ConvergenceError(
                    f"power iteration did not converge in {max_iter} iterations "
                    f"(residual {res:.3g})", x, res)
            return PowerIterationResult(float(np.sqrt(max(lam, 0.0))), it, res, False, x)
        if best is None or lam > best[0] * (1 + tol):
            best = (lam, x, it, res)
    lam, x, it, res = best
    return PowerIterationResult(float(np.sqrt(max(lam, 0.0))), it, res, True, x)


def spectral_norm(W, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    return power_iteration(W, tol, max_iter).value


def layer_lipschitz(layer: LinearLayer | MLPBlock | Layer, tol: float = DEFAULT_TOL) -> float:
    """Spectral norm of a linear layer, or the product over an MLP's sublayers."""
    if isinstance(layer, Layer):
        parts = layer.linear_parts()
    elif isinstance(layer, MLPBlock):
        parts = layer.layers
    else:
        parts = (layer,)
    out = 1.0
    for p in parts:
        out *= spectral_norm(p.weight, tol)
    return out


@dataclass(frozen=True)
class LipschitzProfile:
    per_layer: tuple[float, ...]
    cumulative: tuple[float, ...]

    def upto(self, k: int) -> float:
        """Product of the first ``k`` constants (1 for ``k = 0``)."""
        return 1.0 if k == 0 else self.cumulative[k - 1]

    def to_json(self) -> dict:
        return {"per_layer": list(self.per_layer), "cumulative": list(self.cumulative)}


def lipschitz_profile(model: Model, tol: float = DEFAULT_TOL) -> LipschitzProfile:
    per = tuple(layer_lipschitz(l, tol) for l in model.layers)
    cum = []
    running = 1.0
    for c in per:
        running *= c
        cum.append(running)
    return LipschitzProfile(per, tuple(cum))


@dataclass(frozen=True)
class BoundReport:
    """Pairwise check of ``||h_v - h_u|| <= L_1...L_k |s_v - s_u|``."""

    layer: int
    model_kind: str
    walk_kind: str
    tolerance: float
    lipschitz_product: float
    pairs: np.ndarray  # (P, 2) node ids, v < u
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def slack(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def violations(self) -> list[tuple[int, int, float]]:
        bad = np.flatnonzero(self.slack < -self.tolerance)
        return [(int(self.pairs[i, 0]), int(self.pairs[i, 1]), float(self.slack[i])) for i in bad]

    @property
    def certified(self) -> bool:
        return not self.violations

    @property
    def min_slack(self) -> float:
        return float(self.slack.min()) if self.slack.size else 0.0

    def to_json(self) -> dict:
        return {
            "layer": self.layer,
            "model": self.model_kind,
            "walk_kind": self.walk_kind,
            "tolerance": self.tolerance,
            "lipschitz_product": self.lipschitz_product,
            "pair_count": int(self.pairs.shape[0]),
            "min_slack": self.min_slack,
            "certified": self.certified,
            "violations": [{"v": v, "u": u, "slack": s} for v, u, s in self.violations],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["v", "u", "lhs", "rhs", "slack"])
        for (v, u), l, r in zip(self.pairs.tolist(), self.lhs, self.rhs):
            out.writerow([v, u, format(l, ".17g"), format(r, ".17g"), format(r - l, ".17g")])
        return buf.getvalue()


def walk_kind_for(model: Model) -> str:
    """Walk statistic matched to a model: normalized for GCN, raw otherwise."""
    return "normalized" if model.variant == "gcn" else "raw"


def verify_bound(
    graph: Graph,
    model: Model,
    k: int,
    walks: WalkTable | None = None,
    tol: float = BOUND_TOL,
    table: EmbeddingTable | None = None,
    profile: LipschitzProfile | None = None,
    require_zero_bias: bool = True,
) -> BoundReport:
    """Evaluate both sides of the walk-distance bound for every node pair.

    GCN is checked against normalized walk sums, GIN-0 against raw walk
    counts. Passing ``require_zero_bias=False`` lets a biased GIN-0 through
    for informational runs; the bound is not guaranteed there.
    """
    if model.variant == "gcn":
        kind = "normalized"
    elif model.is_gin0:
        kind = "raw"
        if require_zero_bias and model.has_bias:
            raise UsageError("the GIN-0 bound assumes bias-free MLPs")
    else:
        raise UsageError(f"no walk bound applies to a {model.variant} model")
    if not 1 <= k <= model.depth:
        raise UsageError(f"layer {k} outside 1..{model.depth}")
    if walks is None:
        walks = (normalized_walk_sums if kind == "normalized" else walk_counts)(graph, k)
    s = walks.column(k, kind).astype(np.float64)
    if table is None:
        table = forward(graph, model)
    if profile is None:
        profile = lipschitz_profile(model)
    H = table.layer(k)
    iu, ju = np.triu_indices(graph.n, k=1)
    lhs = np.linalg.norm(H[iu] - H[ju], axis=1)
    L = profile.upto(k)
    rhs = L * np.abs(s[iu] - s[ju])
    return BoundReport(k, "gin0" if kind == "raw" else "gcn", kind, tol, L,
                       np.column_stack([iu, ju]), lhs, rhs)
