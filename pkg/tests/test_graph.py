import json

import pytest
from hypothesis import given, settings

from walkmpnn.errors import ConstructionError, GraphFormatError, SelfLoopError
from walkmpnn.graph import (
    FIG2_KINDS,
    FIG2_RED_NODE,
    Graph,
    GraphCollection,
    SyntheticSpec,
    fig2_collection,
    generate,
    parse_edge_list,
    parse_synthetic,
    parse_tu_collection,
    random_corpus,
    to_edge_list,
)
from walkmpnn.walks import walk_counts

from conftest import small_graphs


def test_parse_path():
    g = parse_edge_list("0 1\n1 2")
    assert g.n == 3 and g.m == 2
    assert g.degrees.tolist() == [1, 2, 1]


def test_parse_empty_with_hint():
    g = parse_edge_list("", node_count_hint=1)
    assert g.n == 1 and g.m == 0


def test_parse_deduplicates():
    g = parse_edge_list("0 1\n1 2\n2 0\n1 2")
    assert g.m == 3
    assert g.degrees.tolist() == [2, 2, 2]


def test_parse_comments_and_blank_lines():
    g = parse_edge_list("# header\n\n0 1  # trailing\n\n2 1\n")
    assert g.edges == ((0, 1), (1, 2))


def test_parse_hint_adds_isolated_nodes():
    g = parse_edge_list("0 1", node_count_hint=5)
    assert g.n == 5 and g.degrees.tolist() == [1, 1, 0, 0, 0]


@pytest.mark.parametrize("text, line", [("0 1\nfoo bar", 2), ("0 1 2", 1), ("0 -1", 1), ("3", 1)])
def test_parse_malformed_reports_line(text, line):
    with pytest.raises(GraphFormatError) as exc:
        parse_edge_list(text)
    assert exc.value.line == line


def test_parse_self_loop_rejected():
    with pytest.raises(SelfLoopError) as exc:
        parse_edge_list("0 1\n2 2\n")
    assert exc.value.line == 2


def test_graph_constructor_rejects_bad_edges():
    with pytest.raises(SelfLoopError):
        Graph(3, [(1, 1)])
    with pytest.raises(ConstructionError):
        Graph(2, [(0, 2)])


@settings(max_examples=200, deadline=None)
@given(small_graphs(max_nodes=10, min_nodes=0))
def test_invariants_and_round_trip(g):
    g.check_invariants()
    again = parse_edge_list(to_edge_list(g))
    assert again == g
    assert Graph.from_json(json.loads(json.dumps(g.to_json()))) == g


def test_canonical_json():
    g = parse_edge_list("2 0\n1 0")
    assert g.to_json() == {"n": 3, "edges": [[0, 1], [0, 2]]}


def test_relabel():
    g = parse_edge_list("0 1\n1 2")
    h = g.relabel([2, 0, 1])
    assert h.edges == ((0, 1), (0, 2))
    assert h.degrees.tolist() == [2, 1, 1]


# --- TU format

def test_tu_minimal():
    c = parse_tu_collection("1, 2\n2, 1", "1\n1")
    assert len(c) == 1
    assert c[0].n == 2 and c[0].m == 1


def test_tu_multi_graph_split():
    c = parse_tu_collection("1, 2\n2, 1", "1\n1\n2")
    assert [g.n for g in c] == [2, 1]
    assert [g.m for g in c] == [1, 0]
    assert c.node_origin == ((0, 0), (0, 1), (1, 0))
    assert c.offsets == (0, 2, 3)


def test_tu_relocalises_and_reads_labels():
    adj = "1,2\n2,1\n3 4\n4 3\n4 5\n5 4\n"
    c = parse_tu_collection(adj, "1\n1\n2\n2\n2\n", "0\n1\n")
    assert c.labels == (0, 1)
    assert c[1].edges == ((0, 1), (1, 2))


def test_tu_cross_graph_edge():
    with pytest.raises(GraphFormatError):
        parse_tu_collection("1, 3", "1\n1\n2")


def test_tu_graph_id_gap():
    with pytest.raises(GraphFormatError):
        parse_tu_collection("", "1\n3\n")


def test_tu_undeclared_node():
    with pytest.raises(GraphFormatError):
        parse_tu_collection("1, 7", "1\n1\n")


def test_tu_label_count_mismatch():
    with pytest.raises(GraphFormatError):
        parse_tu_collection("1, 2", "1\n1\n", "0\n1\n")


def test_collection_global_ids_partition():
    c = GraphCollection((Graph(3), Graph(0), Graph(2)))
    assert c.total_nodes == 5
    assert [c.global_id(g, v) for g, v in c.node_origin] == list(range(5))


# --- generators

def test_star():
    g = generate(SyntheticSpec("star", leaves=3))
    assert g.n == 4 and g.degrees.tolist() == [3, 1, 1, 1]


@pytest.mark.parametrize("kind, n, degrees", [
    ("path", 4, [1, 2, 2, 1]),
    ("cycle", 5, [2] * 5),
    ("complete", 4, [3] * 4),
])
def test_deterministic_kinds(kind, n, degrees):
    assert generate(SyntheticSpec(kind, n=n)).degrees.tolist() == degrees


def test_erdos_renyi_reproducible():
    spec = SyntheticSpec("erdos-renyi", n=20, p=0.3, seed=7)
    assert generate(spec).edges == generate(spec).edges
    other = generate(SyntheticSpec("erdos-renyi", n=20, p=0.3, seed=8))
    assert other.edges != generate(spec).edges


def test_erdos_renyi_extremes():
    assert generate(SyntheticSpec("erdos-renyi", n=6, p=0.0)).m == 0
    assert generate(SyntheticSpec("erdos-renyi", n=6, p=1.0)).m == 15


@pytest.mark.parametrize("spec", [
    SyntheticSpec("erdos-renyi", n=0, p=0.5),
    SyntheticSpec("erdos-renyi", n=5, p=1.5),
    SyntheticSpec("erdos-renyi", n=5),
    SyntheticSpec("cycle", n=2),
    SyntheticSpec("star", leaves=-1),
    SyntheticSpec("torus", n=3),
])
def test_generate_rejects_bad_parameters(spec):
    with pytest.raises(ConstructionError):
        generate(spec)


def test_fig2_constructions():
    degrees = []
    for kind in FIG2_KINDS:
        g = generate(SyntheticSpec(kind))
        g.check_invariants()
        degrees.append(g.degree(FIG2_RED_NODE))
        assert walk_counts(g, 2).counts[FIG2_RED_NODE, 2] == 10
    assert degrees == [1, 2, 3]
    hub = generate(SyntheticSpec("fig2-leaf-on-hub"))
    assert hub.degree(hub.neighbors[FIG2_RED_NODE][0]) == 7
    deg2 = generate(SyntheticSpec("fig2-deg2-node"))
    assert sorted(deg2.degree(u) for u in deg2.neighbors[FIG2_RED_NODE]) == [2, 3]
    assert len(fig2_collection()) == 3


def test_parse_synthetic_grammar():
    spec, count = parse_synthetic("erdos-renyi:n=30,p=0.2", seed=11)
    assert spec == SyntheticSpec("erdos-renyi", n=30, p=0.2, seed=11) and count == 1
    spec, count = parse_synthetic("star:leaf-count=4,count=3")
    assert spec.leaves == 4 and count == 3
    assert parse_synthetic("fig2-star3")[0].kind == "fig2-star3"
    for bad in ("nope:n=3", "path:p=0.1", "path:n", "path:n=x", "star:leaves=2,count=0"):
        with pytest.raises(ConstructionError):
            parse_synthetic(bad)


def test_random_corpus():
    a = random_corpus(10, seed=5)
    b = random_corpus(10, seed=5)
    assert [g.edges for g in a] == [g.edges for g in b]
    assert all(5 <= g.n <= 40 for g in a)
    c = random_corpus(10, n_range=(5, 8), p_range=(0.1, 0.2), seed=1, no_isolated=True)
    assert all(int(g.degrees.min()) >= 1 for g in c)
