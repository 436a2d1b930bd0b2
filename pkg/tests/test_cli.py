import json

import pandas as pd

from cli import main
from errors import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME
from loaders import load_topology


class TestExitCodes:
    def test_analyze_to_stdout(self, fix_k_file, capsys):
        assert main(["analyze", str(fix_k_file)]) == EXIT_OK
        captured = capsys.readouterr()
        assert captured.out.splitlines()[0].startswith("node_label,gamma_star,gamma_gm_min,pi,")
        assert "V=5 L=6 sigma=3 mu=2" in captured.err

    def test_analyze_to_file(self, fix_k_file, tmp_path):
        out = tmp_path / "nodes.csv"
        assert main(["-q", "analyze", str(fix_k_file), "--out", str(out)]) == EXIT_OK
        assert list(pd.read_csv(out)["node_label"]) == ["a", "b", "c"]

    def test_analyze_oracle_export(self, fix_k_file, tmp_path):
        out = tmp_path / "exact.csv"
        assert main(["-q", "analyze", str(fix_k_file), "--out", str(tmp_path / "nodes.csv"),
                     "--oracle-out", str(out)]) == EXIT_OK
        assert len(pd.read_csv(out)) == 9
        assert json.loads((tmp_path / "exact.csv.sets.json").read_text())["CSP"]["1"] == ["a", "b", "c"]
        code = main(["-q", "analyze", str(fix_k_file), "--oracle-out", str(out), "--oracle-budget", "4"])
        assert code == EXIT_RUNTIME

    def test_bad_arguments(self):
        assert main([]) == EXIT_CONFIG
        assert main(["sweep", "--mu-list", "two"]) == EXIT_CONFIG
        assert main(["sweep", "--model", "ER", "--nodes", "10", "--param", "0.4", "--mu-list", "1"]) == EXIT_CONFIG

    def test_missing_input_is_runtime(self, tmp_path):
        assert main(["analyze", str(tmp_path / "absent.txt")]) == EXIT_RUNTIME

    def test_failed_check(self, capsys):
        code = main(["-q", "oracle-check", "--instances", "1", "--mu-list", "2,3", "--n-range", "6,7",
                     "--parallel", "1", "--inject-fault", "pi_off_by_one"])
        assert code == EXIT_CHECK_FAILED
        assert "csp_sandwich" in capsys.readouterr().out

    def test_oracle_budget_is_runtime(self):
        assert main(["-q", "oracle-check", "--n-range", "6,20", "--mu-list", "2", "--parallel", "1"]) == EXIT_RUNTIME


class TestGen:
    def test_ba_with_monitors(self, tmp_path):
        out = tmp_path / "g.txt"
        code = main(["gen", "--model", "BA", "--nodes", "10", "--param", "2", "--monitors", "3",
                     "--seed", "4", "--out", str(out)])
        assert code == EXIT_OK
        G = load_topology(out)
        assert (len(G.nodes), G.num_links, G.mu) == (10, 15, 3)

    def test_gen_is_reproducible(self, capsys):
        argv = ["gen", "--model", "ER", "--nodes", "12", "--links", "20", "--seed", "1"]
        main(argv)
        first = capsys.readouterr().out
        main(argv)
        assert capsys.readouterr().out == first

    def test_gen_needs_one_model(self):
        assert main(["gen", "--model", "ER", "--model", "BA", "--param", "2"]) == EXIT_CONFIG
        assert main(["gen", "--model", "FILE", "--edges", "g.txt"]) == EXIT_CONFIG


class TestExperimentCommands:
    def test_sweep_writes_results_and_meta(self, fix_k_file, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code = main(["-q", "sweep", "--model", "FILE", "--edges", str(fix_k_file), "--instances", "1",
                     "--kmax", "2", "--mechanisms", "CSP", "--parallel", "1", "--out", str(out)])
        assert code == EXIT_OK
        df = pd.read_csv(out)
        assert len(df) == 6
        meta = json.loads((tmp_path / "sweep.csv.meta.json").read_text())
        assert meta["config"]["mechanisms"] == ["CSP"]
        assert "mean" in capsys.readouterr().out

    def test_config_file_and_overrides(self, tmp_path, capsys):
        config = tmp_path / "t.json"
        config.write_text(json.dumps({"experiment": "tightness", "models": [{"model": "ER", "n": 10, "param": 0.4}],
                                      "mu_list": [3], "instances": 5, "parallel": 1}))
        assert main(["-q", "tightness", "--config", str(config), "--instances", "1"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("experiment,model,instance")
        assert len(lines) == 1 + 9

    def test_file_k_max_out_of_range(self, fix_k_file):
        code = main(["-q", "sweep", "--model", "FILE", "--edges", str(fix_k_file), "--kmax", "50", "--parallel", "1"])
        assert code == EXIT_CONFIG

    def test_all_monitor_tightness_is_empty(self, tmp_path, capsys):
        edges = tmp_path / "monitors.txt"
        edges.write_text("m1 m2\nm2 m3\n[monitors]\nm1\nm2\nm3\n")
        code = main(["-q", "tightness", "--model", "FILE", "--edges", str(edges), "--instances", "1",
                     "--parallel", "1"])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines == ["experiment,model,instance,seed,mu,k,mechanism,metric,value"]

    def test_config_for_another_experiment(self, tmp_path):
        config = tmp_path / "t.json"
        config.write_text(json.dumps({"experiment": "tightness"}))
        assert main(["sweep", "--config", str(config)]) == EXIT_CONFIG
