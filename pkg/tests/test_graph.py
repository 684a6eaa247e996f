"""Graph model, serialization, and the certified connectivity oracle."""

import numpy as np
import pytest

from mgnet import ConnectivityCertificate, Graph, LinkAttackSet, extend_graph, vertex_connectivity

from oracles import brute_force_connectivity


class TestGraphBasics:
    def test_edges_normalize_and_deduplicate(self):
        g = Graph.from_edges(4, [(2, 1), (1, 2), (0, 3)])
        assert g.edges == frozenset({(1, 2), (0, 3)})
        assert g.has_edge(2, 1) and g.has_edge(1, 2)
        assert not g.has_edge(0, 1)

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="self-loop"):
            Graph.from_edges(3, [(1, 1)])

    def test_out_of_range_edge_rejected(self):
        with pytest.raises(ValueError, match="out of range"):
            Graph.from_edges(3, [(0, 3)])

    def test_node_count_must_be_positive(self):
        with pytest.raises(ValueError):
            Graph(0, frozenset())

    def test_neighbors_and_degree(self, ref_graph):
        assert sorted(ref_graph.neighbors(0)) == [1, 2, 3]
        assert ref_graph.degree(1) == 4
        with pytest.raises(ValueError):
            ref_graph.neighbors(6)

    def test_adjacency_is_symmetric_01(self, ref_graph):
        a = ref_graph.adjacency()
        assert np.array_equal(a, a.T)
        assert a.sum() == 2 * len(ref_graph.edges)
        assert set(np.unique(a)) <= {0, 1}

    def test_complete_and_connected(self):
        assert Graph.complete(5).is_complete()
        assert Graph.complete(1).is_connected()
        assert not Graph.from_edges(4, [(0, 1), (2, 3)]).is_connected()

    def test_relabeled_preserves_structure(self, ref_graph):
        perm = [3, 0, 5, 1, 4, 2]
        h = ref_graph.relabeled(perm)
        assert sorted(h.degree(perm[v]) for v in range(6)) == sorted(
            ref_graph.degree(v) for v in range(6))
        inverse = [perm.index(v) for v in range(6)]
        assert h.relabeled(inverse) == ref_graph

    def test_relabeled_rejects_non_permutation(self, ref_graph):
        with pytest.raises(ValueError, match="permutation"):
            ref_graph.relabeled([0, 0, 1, 2, 3, 4])


class TestGraphSerialization:
    def test_edge_list_round_trip(self, ref_graph):
        assert Graph.from_edge_list_text(ref_graph.to_edge_list_text()) == ref_graph

    def test_edge_list_keeps_isolated_trailing_node(self):
        g = Graph.from_edges(5, [(0, 1)])
        assert Graph.from_edge_list_text(g.to_edge_list_text()) == g

    def test_edge_list_without_header_infers_node_count(self):
        g = Graph.from_edge_list_text("0 1\n1 3\n")
        assert g.node_count == 4
        assert g.edges == frozenset({(0, 1), (1, 3)})

    def test_edge_list_malformed_line_reports_position(self):
        with pytest.raises(ValueError, match="line 2"):
            Graph.from_edge_list_text("0 1\n1 -- 2\n")

    def test_dot_round_trip(self, ref_graph):
        assert Graph.from_dot(ref_graph.to_dot()) == ref_graph

    def test_dot_round_trip_isolated_node(self):
        g = Graph.from_edges(3, [(0, 1)])
        text = g.to_dot()
        assert "2;" in text
        assert Graph.from_dot(text) == g

    def test_dot_malformed_statement(self):
        with pytest.raises(ValueError, match="line 2"):
            Graph.from_dot("graph G {\n0 -> 1;\n}")


class TestVertexConnectivity:
    def test_reference_graph_certificate(self, ref_graph):
        cert = vertex_connectivity(ref_graph)
        assert cert.kappa == 3
        assert cert.witness_cut == frozenset({1, 2, 3})

    def test_witness_cut_actually_disconnects(self, ref_graph):
        cert = vertex_connectivity(ref_graph)
        survivors = set(range(6)) - cert.witness_cut
        kept = [(i, j) for i, j in ref_graph.edges if i in survivors and j in survivors]
        sub = Graph.from_edges(6, kept)
        # connectivity among survivors only; reuse the oracle on the remnant
        assert brute_force_connectivity(6, kept) == 0 or not sub.is_connected()

    def test_complete_graph_convention(self):
        cert = vertex_connectivity(Graph.complete(4))
        assert cert == ConnectivityCertificate(3, None)

    def test_disconnected_graph(self):
        cert = vertex_connectivity(Graph.from_edges(4, [(0, 1), (2, 3)]))
        assert cert.kappa == 0
        assert cert.witness_cut == frozenset()

    def test_path_cycle_star(self):
        assert vertex_connectivity(Graph.from_edges(5, [(i, i + 1) for i in range(4)])).kappa == 1
        cycle = [(i, (i + 1) % 6) for i in range(6)]
        assert vertex_connectivity(Graph.from_edges(6, cycle)).kappa == 2
        star = [(0, i) for i in range(1, 6)]
        cert = vertex_connectivity(Graph.from_edges(6, star))
        assert cert.kappa == 1 and cert.witness_cut == frozenset({0})

    def test_too_small(self):
        with pytest.raises(ValueError):
            vertex_connectivity(Graph(1, frozenset()))

    def test_matches_brute_force_on_random_graphs(self):
        # dual route: max-flow certificate vs exhaustive subset removal
        rng = np.random.default_rng(1813)
        for _ in range(150):
            n = int(rng.integers(4, 8))
            density = float(rng.uniform(0.2, 0.9))
            pairs = [(i, j) for i in range(n) for j in range(i + 1, n)
                     if rng.random() < density]
            g = Graph.from_edges(n, pairs)
            cert = vertex_connectivity(g)
            assert cert.kappa == brute_force_connectivity(n, pairs)
            if cert.witness_cut is not None and g.is_connected():
                survivors = set(range(n)) - cert.witness_cut
                kept = [(i, j) for i, j in pairs if i in survivors and j in survivors]
                assert brute_force_connectivity(len(survivors), kept) == 0 or len(survivors) < 2


class TestExtendGraph:
    def test_explicit_targets(self):
        g = extend_graph(Graph.complete(3), 2, targets=[0, 2])
        assert g.node_count == 4
        assert g.has_edge(3, 0) and g.has_edge(3, 2) and not g.has_edge(3, 1)

    def test_m_equal_to_node_count_links_everything(self):
        g = extend_graph(Graph.complete(3), 3, targets=[0, 1, 2])
        assert g == Graph.complete(4)

    def test_m_larger_than_node_count_rejected(self):
        with pytest.raises(ValueError, match="distinct targets"):
            extend_graph(Graph.complete(3), 4, targets=[0, 1, 2, 2])

    def test_duplicate_or_out_of_range_targets(self):
        with pytest.raises(ValueError, match="distinct"):
            extend_graph(Graph.complete(3), 2, targets=[1, 1])
        with pytest.raises(ValueError, match="out of range"):
            extend_graph(Graph.complete(3), 2, targets=[0, 5])

    def test_needs_targets_or_rng(self):
        with pytest.raises(ValueError, match="rng"):
            extend_graph(Graph.complete(3), 2)

    def test_rng_sampling_adds_m_edges(self):
        rng = np.random.default_rng(7)
        g = extend_graph(Graph.complete(4), 3, rng=rng)
        assert g.degree(4) == 3

    def test_preserves_connectivity_at_m(self):
        # kappa >= m in, kappa >= m out, over random certified inputs
        rng = np.random.default_rng(99)
        for _ in range(40):
            m = int(rng.integers(1, 4))
            g = Graph.complete(m + 1)
            for _ in range(int(rng.integers(1, 4))):
                g = extend_graph(g, m, rng=rng)
            assert vertex_connectivity(g).kappa >= m


class TestLinkAttackSet:
    def test_normalization_and_queries(self):
        attacks = LinkAttackSet.from_pairs([(3, 1), (0, 2)])
        assert attacks.forbids(1, 3) and attacks.forbids(3, 1)
        assert not attacks.forbids(0, 1)
        assert attacks.touches(2) and not attacks.touches(4)

    def test_validate_range(self):
        attacks = LinkAttackSet.from_pairs([(0, 9)])
        with pytest.raises(ValueError, match="out of range"):
            attacks.validate_range(5)
        attacks.validate_range(10)
