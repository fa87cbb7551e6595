import json
from fractions import Fraction
from itertools import combinations, permutations

import networkx as nx
import pytest
from hypothesis import given, strategies as st

from persistent_harmonics.complex import (
    MAX_SIMPLICES_ENV,
    CliqueComplex,
    ComplexTooLarge,
    WeightedGraph,
    build_clique_complex,
    format_rational,
    graph_join,
    orient,
    parse_rational,
    permutation_sign,
    qubit_graph,
    wedge_base_graph,
)

from strategies import graphs


def brute_cliques(g: WeightedGraph, k: int):
    """All (k+1)-vertex cliques by subset enumeration."""
    return sorted(s for s in combinations(range(g.vertex_count), k + 1) if g.is_clique(s))


@pytest.mark.parametrize("text,value", [("3/4", Fraction(3, 4)), ("-2", Fraction(-2)), (5, Fraction(5)), ("0.25", Fraction(1, 4))])
def test_parse_rational(text, value):
    assert parse_rational(text) == value


def test_format_rational_round_trip():
    for v in (Fraction(0), Fraction(7), Fraction(-3, 8), Fraction(22, 7)):
        assert parse_rational(format_rational(v)) == v
    assert format_rational(Fraction(1, 10)) == "1/10"


def test_permutation_sign_matches_inversion_count():
    for perm in permutations(range(4)):
        inv = sum(1 for i in range(4) for j in range(i + 1, 4) if perm[i] > perm[j])
        assert permutation_sign(perm) == (-1) ** inv


def test_orient_sorts_with_sign():
    assert orient((2, 0, 1)) == (1, (0, 1, 2))
    assert orient((1, 0)) == (-1, (0, 1))


def test_graph_validation_errors():
    with pytest.raises(ValueError):
        WeightedGraph.from_edges(2, [(0, 0)])
    with pytest.raises(ValueError):
        WeightedGraph.from_edges(2, [(0, 2)])
    with pytest.raises(ValueError):
        WeightedGraph.from_edges(2, [(0, 1)], [1, 0])


def test_graph_json_errors_name_the_field():
    with pytest.raises(ValueError, match="graph.vertices"):
        WeightedGraph.from_json({"edges": []})
    with pytest.raises(ValueError, match=r"graph.edges\[1\]"):
        WeightedGraph.from_json({"vertices": 3, "edges": [[0, 1], [2]]})
    with pytest.raises(ValueError, match="graph.weights"):
        WeightedGraph.from_json({"vertices": 1, "weights": ["x"]})


@given(graphs())
def test_graph_json_round_trip(g):
    again = WeightedGraph.from_json(json.loads(json.dumps(g.to_json())))
    assert again == g


@given(graphs())
def test_cliques_match_brute_force(g):
    K = CliqueComplex(g, 3)
    for k in range(4):
        assert list(K.simplices[k]) == brute_cliques(g, k)


@given(graphs())
def test_face_closure_and_order(g):
    K = CliqueComplex(g, 3)
    for k in range(1, 4):
        assert list(K.simplices[k]) == sorted(K.simplices[k])
        for s in K.simplices[k]:
            for i in range(len(s)):
                assert s[:i] + s[i + 1:] in K


def test_counts_match_networkx_oracle():
    g = nx.gnp_random_graph(10, 0.5, seed=3)
    wg = WeightedGraph.from_edges(10, g.edges())
    K = CliqueComplex(wg, 9)
    want = [0] * 10
    for c in nx.enumerate_all_cliques(g):
        want[len(c) - 1] += 1
    assert list(K.counts) == want
    assert not K.truncated


def test_truncation_flag():
    tri = WeightedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert CliqueComplex(tri, 1).truncated
    assert not CliqueComplex(tri, 2).truncated


def test_index_and_weight():
    g = WeightedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)], [2, 3, Fraction(1, 2)])
    K = CliqueComplex(g, 2)
    assert K.index((0, 2)) == 1
    assert K.weight((0, 1, 2)) == 3
    with pytest.raises(KeyError):
        K.index((0, 3))


def test_simplex_cap(monkeypatch):
    g = WeightedGraph.from_edges(6, list(combinations(range(6), 2)))
    with pytest.raises(ComplexTooLarge):
        CliqueComplex(g, 5, max_simplices=20)
    monkeypatch.setenv(MAX_SIMPLICES_ENV, "10")
    with pytest.raises(ComplexTooLarge):
        build_clique_complex(g, 5)


@given(graphs(max_vertices=3), graphs(max_vertices=3), graphs(max_vertices=3))
def test_join_associative_counts(a, b, c):
    left = build_clique_complex(graph_join(a, graph_join(b, c)), 8)
    right = build_clique_complex(graph_join(graph_join(a, b), c), 8)
    assert left.counts == right.counts


def test_join_adds_all_cross_edges():
    a = WeightedGraph.from_edges(2, [])
    b = WeightedGraph.from_edges(3, [(0, 1)])
    j = graph_join(a, b)
    assert j.vertex_count == 5
    assert len(j.edges) == 1 + 2 * 3


def test_wedge_base_graph():
    base = wedge_base_graph()
    g = base.graph
    assert g.vertex_count == 7
    assert len(brute_cliques(g, 2)) == 0  # triangle-free
    assert base.cycles[0] == ((0, 1), (1, 2), (2, 3), (3, 0))
    assert base.cycles[1] == ((3, 4), (4, 5), (5, 6), (6, 3))


def test_qubit_graph_relabels_cycles():
    qg = qubit_graph(2)
    assert qg.graph.vertex_count == 14
    assert qg.cycle_vertices(1, 0) == [7, 8, 9, 10]
    assert qg.cycle(1, 1) == ((10, 11), (11, 12), (12, 13), (13, 10))
    # N=2 clique complex counts (frozen from the brute-force oracle)
    K = CliqueComplex(qg.graph, 4)
    assert K.counts == (14, 65, 112, 64, 0)
    assert K.counts[3] == len(brute_cliques(qg.graph, 3))
