import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from walkmpnn.errors import ConvergenceError, UsageError
from walkmpnn.graph import SyntheticSpec, generate, parse_edge_list
from walkmpnn.lipschitz import (
    layer_lipschitz,
    lipschitz_profile,
    power_iteration,
    spectral_norm,
    verify_bound,
)
from walkmpnn.model import LinearLayer, MLPBlock, build_model, forward

from conftest import random_graph, small_graphs

GOLDEN = (1 + math.sqrt(5)) / 2


def test_identity():
    assert spectral_norm(np.eye(4)) == pytest.approx(1.0, rel=1e-12)


def test_diagonal():
    assert spectral_norm(np.diag([3.0, 2.0])) == pytest.approx(3.0, rel=1e-10)


def test_shear_is_golden_ratio():
    # sigma_max of [[1,1],[0,1]] is sqrt((3 + sqrt 5)/2), which is the golden ratio.
    assert math.sqrt((3 + math.sqrt(5)) / 2) == pytest.approx(GOLDEN, rel=1e-15)
    assert spectral_norm([[1.0, 1.0], [0.0, 1.0]]) == pytest.approx(GOLDEN, rel=1e-9)


def test_zero_matrix():
    assert spectral_norm(np.zeros((3, 2))) == 0.0


def test_ones_start_orthogonal_to_top_direction():
    # W maps the all-ones start to zero; only the second start sees the top direction.
    W = np.array([[1.0, -1.0], [0.0, 0.0]])
    assert spectral_norm(W) == pytest.approx(math.sqrt(2), rel=1e-9)


def test_rectangular_matches_svd():
    rng = np.random.default_rng(7)
    for shape in ((1, 5), (5, 1), (8, 3), (3, 8)):
        W = rng.normal(size=shape)
        assert spectral_norm(W) == pytest.approx(np.linalg.svd(W, compute_uv=False)[0], rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(-10, 10, allow_nan=False)), st.floats(0.1, 10))
def test_properties(W, c):
    s = spectral_norm(W)
    exact = np.linalg.svd(W, compute_uv=False)[0]
    assert s >= 0
    assert s <= exact * (1 + 1e-9) + 1e-12
    # lower bound from any probe
    x = np.ones(W.shape[1])
    assert np.linalg.norm(W @ x) <= s * np.linalg.norm(x) * (1 + 1e-6) + 1e-9
    assert spectral_norm(c * W) == pytest.approx(c * s, rel=1e-6, abs=1e-9)


def test_convergence_error():
    W = np.diag([1.0, 0.9])
    with pytest.raises(ConvergenceError) as exc:
        power_iteration(W, max_iter=3)
    assert exc.value.iterate.shape == (2,)
    res = power_iteration(W, max_iter=3, strict=False)
    assert not res.converged


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        power_iteration(np.eye(2), tol=0)
    with pytest.raises(ValueError):
        spectral_norm(np.array([[np.nan]]))


def test_mlp_product():
    mlp = MLPBlock((LinearLayer(np.diag([2.0, 1.0])), LinearLayer(np.diag([3.0, 0.5]))))
    assert layer_lipschitz(mlp) == pytest.approx(6.0, rel=1e-10)


def test_profile_cumulative():
    m = build_model("gin0", depth=3, seed=2)
    p = lipschitz_profile(m)
    assert p.upto(0) == 1.0
    assert p.upto(3) == pytest.approx(np.prod(p.per_layer), rel=1e-12)
    for l, c in zip(m.layers, p.per_layer):
        exact = np.prod([np.linalg.svd(x.weight, compute_uv=False)[0] for x in l.linear_parts()])
        assert c == pytest.approx(exact, rel=1e-8)


def test_empirical_ratio_below_constant():
    rng = np.random.default_rng(3)
    layer = LinearLayer(rng.normal(size=(6, 4)))
    L = layer_lipschitz(layer)
    for _ in range(200):
        x, y = rng.normal(size=4), rng.normal(size=4)
        ratio = np.linalg.norm(layer(x[None])[0] - layer(y[None])[0]) / np.linalg.norm(x - y)
        assert ratio <= L * (1 + 1e-9)


# --- bound verification

@pytest.mark.parametrize("variant", ["gin0", "gcn"])
def test_bound_reflexive_pairs_and_zero_rhs(variant):
    # C5 is vertex-transitive: every walk statistic agrees, so rhs is zero and lhs must be too.
    g = generate(SyntheticSpec("cycle", n=5))
    rep = verify_bound(g, build_model(variant, depth=3, seed=1), 3)
    assert np.all(rep.rhs == 0)
    assert np.all(rep.lhs <= 1e-8)
    assert rep.certified


@pytest.mark.parametrize("variant", ["gin0", "gcn"])
def test_bound_random_graphs(variant):
    rng = np.random.default_rng(12)
    for i in range(30):
        g = random_graph(rng, int(rng.integers(2, 20)), float(rng.uniform(0.1, 0.6)))
        m = build_model(variant, depth=3, seed=i)
        for k in (1, 2, 3):
            rep = verify_bound(g, m, k)
            assert rep.certified, rep.violations
            assert rep.pairs.shape[0] == g.n * (g.n - 1) // 2


@settings(max_examples=40, deadline=None)
@given(small_graphs(max_nodes=8, min_nodes=2), st.integers(0, 10_000), st.sampled_from(["gin0", "gcn"]))
def test_bound_property(g, seed, variant):
    m = build_model(variant, depth=2, width=4, seed=seed)
    assert verify_bound(g, m, 2).min_slack >= -1e-8


def test_bound_usage_errors():
    g = parse_edge_list("0 1\n1 2")
    for variant in ("dgcnn", "gat"):
        with pytest.raises(UsageError):
            verify_bound(g, build_model(variant, depth=2, seed=0), 1)
    with pytest.raises(UsageError):
        verify_bound(g, build_model("gin", depth=2, seed=0, epsilon=0.5), 1)
    biased = build_model("gin0", depth=2, seed=0, bias_mode="random-small")
    with pytest.raises(UsageError):
        verify_bound(g, biased, 1)
    verify_bound(g, biased, 1, require_zero_bias=False)
    with pytest.raises(UsageError):
        verify_bound(g, build_model("gin0", depth=2, seed=0), 3)


def test_bound_report_exports():
    g = parse_edge_list("0 1\n1 2")
    m = build_model("gin0", depth=2, seed=0)
    rep = verify_bound(g, m, 2, table=forward(g, m))
    lines = rep.to_csv().splitlines()
    assert lines[0] == "v,u,lhs,rhs,slack"
    assert [l.split(",")[:2] for l in lines[1:]] == [["0", "1"], ["0", "2"], ["1", "2"]]
    js = rep.to_json()
    assert js["certified"] and js["pair_count"] == 3 and js["walk_kind"] == "raw"
