import logging

import pytest

from motifclust.hin import load_hin, write_hin

from conftest import TOY_EDGES, TOY_NODES


def write_pair(tmp_path, nodes, edges):
    np_path, ep_path = tmp_path / "n.tsv", tmp_path / "e.tsv"
    np_path.write_text(nodes, encoding="utf-8")
    ep_path.write_text(edges, encoding="utf-8")
    return np_path, ep_path


class TestLoad:
    def test_minimal(self, tmp_path):
        hin = load_hin(*write_pair(tmp_path, "a1\tA\n", ""))
        assert hin.num_types() == 1
        assert hin.nodes_of_type(0) == ["a1"]
        assert hin.edges == []

    def test_single_undirected_edge_is_symmetric(self, tmp_path):
        hin = load_hin(*write_pair(tmp_path, "a1\tA\np1\tP\n", "a1\tp1\twrites\tu\n"))
        e = hin.edge_type_id("writes")
        assert hin.neighbors_fwd(e, 0) == [0]  # a1 -> p1
        assert hin.neighbors_rev(e, 0) == [0]  # p1 -> a1

    def test_toy_counts_and_degrees_match_raw_files(self, toy_paths):
        # independent recount straight off the raw text
        type_counts = {}
        for line in TOY_NODES.strip().splitlines():
            _, t = line.split("\t")
            type_counts[t] = type_counts.get(t, 0) + 1
        degree = {}
        edge_lines = TOY_EDGES.strip().splitlines()
        for line in edge_lines:
            src, dst, _, _ = line.split("\t")
            degree[src] = degree.get(src, 0) + 1
            degree[dst] = degree.get(dst, 0) + 1

        hin = load_hin(*toy_paths)
        assert hin.num_types() == 5
        for tname, count in type_counts.items():
            assert hin.num_nodes(hin.type_id(tname)) == count
        assert len(hin.edges) == len(edge_lines) == 20
        got = {}
        for e in hin.edges:
            for t, j in (e.src, e.dst):
                name = hin.node_name(t, j)
                got[name] = got.get(name, 0) + 1
        assert got == degree

    def test_first_appearance_order(self, toy_paths):
        hin = load_hin(*toy_paths)
        assert hin.nodes_of_type(hin.type_id("P")) == ["p1", "p2", "p3", "p4"]

    def test_empty_type_via_directive(self, tmp_path):
        hin = load_hin(*write_pair(tmp_path, "#types A B\na1\tA\n", ""))
        assert hin.nodes_of_type(hin.type_id("B")) == []

    def test_unknown_type_query(self, toy_paths):
        hin = load_hin(*toy_paths)
        with pytest.raises(KeyError):
            hin.nodes_of_type(99)

    def test_comments_skipped(self, tmp_path):
        hin = load_hin(*write_pair(tmp_path, "# c\na1\tA\n\n", "# c\n"))
        assert hin.num_nodes(0) == 1


class TestLoadErrors:
    def test_malformed_node_line(self, tmp_path):
        with pytest.raises(ValueError, match="line 2"):
            load_hin(*write_pair(tmp_path, "a1\tA\nbroken\n", ""))

    def test_duplicate_node(self, tmp_path):
        with pytest.raises(ValueError, match="line 2.*duplicate"):
            load_hin(*write_pair(tmp_path, "a1\tA\na1\tB\n", ""))

    def test_unknown_edge_endpoint(self, tmp_path):
        with pytest.raises(ValueError, match="line 1.*unknown node"):
            load_hin(*write_pair(tmp_path, "a1\tA\n", "a1\tzz\tw\tu\n"))

    def test_bad_direction_flag(self, tmp_path):
        with pytest.raises(ValueError, match="'d' or 'u'"):
            load_hin(*write_pair(tmp_path, "a1\tA\np1\tP\n", "a1\tp1\tw\tx\n"))

    def test_self_loop_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="self-loop"):
            load_hin(*write_pair(tmp_path, "a1\tA\n", "a1\ta1\tw\tu\n"))

    def test_inconsistent_direction(self, tmp_path):
        edges = "a1\tp1\tw\tu\np1\ta1\tw\td\n"
        with pytest.raises(ValueError, match="inconsistent direction"):
            load_hin(*write_pair(tmp_path, "a1\tA\np1\tP\n", edges))

    def test_inconsistent_endpoint_types(self, tmp_path):
        nodes = "a1\tA\np1\tP\nt1\tT\n"
        edges = "a1\tp1\tw\tu\na1\tt1\tw\tu\n"
        with pytest.raises(ValueError, match="incompatible node types"):
            load_hin(*write_pair(tmp_path, nodes, edges))

    def test_duplicate_edges_warn_and_dedup(self, tmp_path, caplog):
        edges = "a1\tp1\tw\tu\np1\ta1\tw\tu\n"
        with caplog.at_level(logging.WARNING, logger="motifclust.hin"):
            hin = load_hin(*write_pair(tmp_path, "a1\tA\np1\tP\n", edges))
        assert len(hin.edges) == 1
        assert any("duplicate" in rec.message for rec in caplog.records)


class TestProperties:
    def test_round_trip(self, toy_paths, tmp_path):
        hin = load_hin(*toy_paths)
        n2, e2 = tmp_path / "n2.tsv", tmp_path / "e2.tsv"
        write_hin(hin, n2, e2)
        assert load_hin(n2, e2) == hin

    def test_undirected_symmetry(self, toy_paths):
        hin = load_hin(*toy_paths)
        for name, et in zip([e.name for e in hin.edge_types], hin.edge_types):
            if et.directed:
                continue
            e = hin.edge_type_id(name)
            for u in range(hin.num_nodes(et.src_type)):
                for v in hin.neighbors_fwd(e, u):
                    assert u in hin.neighbors_rev(e, v)
            for v in range(hin.num_nodes(et.dst_type)):
                for u in hin.neighbors_rev(e, v):
                    assert v in hin.neighbors_fwd(e, u)

    def test_directed_adjacency_is_transpose(self, toy_paths):
        hin = load_hin(*toy_paths)
        e = hin.edge_type_id("cites")
        pairs_fwd = {
            (u, v)
            for u in range(hin.num_nodes(hin.edge_types[e].src_type))
            for v in hin.neighbors_fwd(e, u)
        }
        pairs_rev = {
            (u, v)
            for v in range(hin.num_nodes(hin.edge_types[e].dst_type))
            for u in hin.neighbors_rev(e, v)
        }
        assert pairs_fwd == pairs_rev == {(1, 0)}  # p2 cites p1

    def test_same_type_undirected_edges(self, tmp_path):
        nodes = "p1\tP\np2\tP\np3\tP\n"
        edges = "p1\tp2\trel\tu\np2\tp3\trel\tu\n"
        hin = load_hin(*write_pair(tmp_path, nodes, edges))
        e = hin.edge_type_id("rel")
        assert hin.neighbors_fwd(e, 1) == [0, 2]
        assert hin.neighbors_fwd(e, 1) == hin.neighbors_rev(e, 1)
