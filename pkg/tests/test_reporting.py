import json

import pandas as pd

from experiments import ResultRecord
from reporting import (
    RESULT_COLUMNS, analysis_frame, label_list, metadata_path, oracle_frame, oracle_sets, oracle_sets_path,
    records_frame, results_csv, summarize, summary_block, write_metadata, write_oracle_report, write_results,
)
from up import gen_paths_shortest


def _records():
    return [
        ResultRecord("sweep", "ER-0.4", 1, 11, 3, 2, "CSP", "outer_size", 4.0),
        ResultRecord("sweep", "ER-0.4", 0, 10, 3, 1, "CSP", "inner_size", 1.0),
        ResultRecord("sweep", "ER-0.4", 1, 11, 3, 1, "CSP", "inner_size", 3.0),
        ResultRecord("tightness", "ER-0.4", 0, 10, 3, None, "UP", "coincidence_rate", 0.5),
    ]


class TestNodeFrames:
    def test_analysis_frame(self, fix_k):
        frame = analysis_frame(fix_k, gen_paths_shortest(fix_k))
        assert list(frame["node_label"]) == ["a", "b", "c"]
        row = frame.set_index("node_label").loc["a"]
        assert (row["gamma_star"], row["gamma_gm_min"], row["pi"]) == (3, 1, 1)
        assert (row["csp_lower"], row["csp_upper"], row["csp_applicability"]) == (0, 1, "in-range")
        assert (row["cap_lower"], row["cap_upper"], row["cap_applicability"]) == (3, 3, "exact")
        assert (row["msc"], row["gsc"], row["up_lower"], row["up_upper"]) == (1, 1, 0, 1)
        assert frame.set_index("node_label").loc["c", "csp_applicability"] == "range-exceeded"

    def test_oracle_frame(self, fix_k):
        frame = oracle_frame(fix_k, {"CSP": {3: 1, 1: 1}, "CAP": {1: 3}})
        assert frame.to_dict("records") == [
            {"node_label": "a", "mechanism": "CSP", "exact_omega": 1},
            {"node_label": "c", "mechanism": "CSP", "exact_omega": 1},
            {"node_label": "a", "mechanism": "CAP", "exact_omega": 3},
        ]

    def test_summary_block(self, fix_star):
        assert summary_block(fix_star) == {"V": 6, "L": 7, "sigma": 3, "mu": 3}

    def test_label_list(self, fix_k):
        assert label_list(fix_k, {3, 1}) == ["a", "c"]
        assert label_list(fix_k, ()) == []

    def test_oracle_sets_are_sorted_labels(self, fix_k):
        sets = oracle_sets(fix_k, {"UP": {1: set()}, "CSP": {2: {3}, 1: {3, 2, 1}}})
        assert list(sets) == ["CSP", "UP"]
        assert sets["CSP"] == {"1": ["a", "b", "c"], "2": ["c"]}
        assert list(sets["CSP"]) == ["1", "2"]
        assert sets["UP"] == {"1": []}

    def test_oracle_report_files(self, fix_k, tmp_path):
        out = tmp_path / "exact.csv"
        frame = oracle_frame(fix_k, {"CAP": {1: 3}})
        target = write_oracle_report(frame, {"CAP": {"1": ["a"]}}, out)
        assert target == oracle_sets_path(out)
        assert target.name == "exact.csv.sets.json"
        assert out.read_text().splitlines() == ["node_label,mechanism,exact_omega", "a,CAP,3"]
        assert json.loads(target.read_text()) == {"CAP": {"1": ["a"]}}


class TestResults:
    def test_sorted_with_fixed_columns(self):
        df = records_frame(_records())
        assert list(df.columns) == RESULT_COLUMNS
        assert list(df["experiment"]) == ["sweep", "sweep", "sweep", "tightness"]
        assert list(df["instance"]) == [0, 1, 1, 0]
        assert list(df["metric"][:3]) == ["inner_size", "inner_size", "outer_size"]
        assert str(df["k"].dtype) == "Int64"
        assert pd.isna(df.loc[3, "k"])

    def test_input_order_does_not_matter(self):
        a = records_frame(_records())
        b = records_frame(reversed(_records()))
        assert results_csv(a) == results_csv(b)

    def test_csv_text(self):
        text = results_csv(records_frame(_records()))
        lines = text.split("\n")
        assert lines[0] == ",".join(RESULT_COLUMNS)
        assert lines[1] == "sweep,ER-0.4,0,10,3,1,CSP,inner_size,1.0"
        assert "\r" not in text
        assert lines[4].startswith("tightness,ER-0.4,0,10,3,,UP")

    def test_empty(self):
        df = records_frame([])
        assert df.empty
        assert list(summarize(df).columns)[-1] == "instances"

    def test_summarize(self):
        out = summarize(records_frame(_records()))
        row = out[(out["metric"] == "inner_size")].iloc[0]
        assert (row["mean"], row["min"], row["max"], row["instances"]) == (2.0, 1.0, 3.0, 2)

    def test_files(self, tmp_path):
        out = tmp_path / "res.csv"
        write_results(records_frame(_records()), out)
        assert out.read_text().startswith("experiment,")
        meta = write_metadata(out, {"seed": 3, "calibrated": {"ER": 0.4}})
        assert meta == metadata_path(out)
        assert meta.name == "res.csv.meta.json"
        assert json.loads(meta.read_text())["seed"] == 3
