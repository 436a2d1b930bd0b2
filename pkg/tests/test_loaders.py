import io
import logging

import pandas as pd
import pytest

from errors import TopologyFormatError
from loaders import (
    find_column, load_topology, load_topology_text, normalize_colname, parse_edge_lines, write_topology,
)

from conftest import FIX_K, FIX_STAR


class TestColumnMatching:
    def test_normalize(self):
        assert normalize_colname(" Node-1 ") == "node1"

    def test_exact_then_substring(self):
        df = pd.DataFrame(columns=["Source Node", "Target"])
        assert find_column(df, ["target", "dst"]) == "Target"
        assert find_column(df, ["source"]) == "Source Node"

    def test_short_candidates_do_not_substring_match(self):
        df = pd.DataFrame(columns=["alpha", "beta"])
        assert find_column(df, ["a", "u"]) is None


class TestEdgeList:
    def test_comments_and_monitor_section(self):
        edges, monitors = parse_edge_lines(["# header", "", "x y", "y z  # trailing", "[monitors]", "x", "z"])
        assert edges == [("x", "y"), ("y", "z")]
        assert monitors == ["x", "z"]

    def test_no_monitor_section(self):
        _, monitors = parse_edge_lines(["x y"])
        assert monitors is None

    def test_malformed_line_reports_line_number(self):
        with pytest.raises(TopologyFormatError) as err:
            parse_edge_lines(["x y", "lonely"], source="g.txt")
        assert err.value.line == 2
        assert "g.txt:2" in str(err.value)

    def test_self_loop(self):
        with pytest.raises(TopologyFormatError):
            parse_edge_lines(["x x"])

    def test_duplicate_warns_once(self, caplog):
        with caplog.at_level(logging.WARNING):
            edges, _ = parse_edge_lines(["x y", "y x"])
        assert edges == [("x", "y")]
        assert "duplicate edge" in caplog.text

    def test_text_loader(self):
        G = load_topology_text(FIX_STAR)
        assert G.label_set(G.monitors) == {"m1", "m2", "m3"}
        assert G.sigma == 3

    def test_separate_monitor_text_wins(self):
        G = load_topology_text(FIX_K, monitor_text="a\nc\n")
        assert G.label_set(G.monitors) == {"a", "c"}

    def test_unknown_monitor(self):
        with pytest.raises(TopologyFormatError):
            load_topology_text("x y\n[monitors]\nq\n")

    def test_empty(self):
        with pytest.raises(TopologyFormatError):
            load_topology_text("# nothing\n")


class TestFiles:
    def test_load_from_file(self, fix_k_file):
        G = load_topology(fix_k_file)
        assert G.labels == ("m1", "a", "b", "c", "m2")
        assert G.metadata["source"] == str(fix_k_file)

    def test_monitor_file(self, fix_k_file, tmp_path):
        monitors = tmp_path / "mon.txt"
        monitors.write_text("# monitors\nm1\nb\n")
        G = load_topology(fix_k_file, monitors)
        assert G.label_set(G.monitors) == {"m1", "b"}

    def test_missing_file(self, tmp_path):
        with pytest.raises(TopologyFormatError):
            load_topology(tmp_path / "absent.txt")

    def test_csv_with_headers(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("From Node,To Node,weight\nx,y,1\ny,z,1\n")
        G = load_topology(path)
        assert G.labels == ("x", "y", "z")
        assert G.num_links == 2

    def test_csv_without_recognised_headers(self, tmp_path, caplog):
        path = tmp_path / "g.csv"
        path.write_text("p,q\nx,y\n")
        with caplog.at_level(logging.INFO):
            G = load_topology(path)
        assert G.num_links == 1
        assert "no endpoint headers" in caplog.text

    def test_csv_missing_endpoint_line(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("source,target\nx,y\nz,\n")
        with pytest.raises(TopologyFormatError) as err:
            load_topology(path)
        assert err.value.line == 3


class TestWrite:
    def test_write_then_read_keeps_roles(self, fix_star, tmp_path):
        out = tmp_path / "star.txt"
        write_topology(fix_star, out)
        again = load_topology(out)
        assert again.label_set(again.monitors) == fix_star.label_set(fix_star.monitors)
        assert {frozenset(again.label_set(e)) for e in again.edges} == \
            {frozenset(fix_star.label_set(e)) for e in fix_star.edges}

    def test_write_to_stream(self, fix_path):
        buf = io.StringIO()
        write_topology(fix_path, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0].startswith("# |V|=3")
        assert lines[1:] == ["m1 a", "a m2", "[monitors]", "m1", "m2"]
