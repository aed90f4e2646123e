"""Unit tests for the pml entry point."""

import argparse
import json
import logging
import os
from unittest.mock import patch

from pmlaplacian.app import main, pick
from pmlaplacian.lib.args import parse_layers
from pmlaplacian.lib.config import load_config
from pmlaplacian.lib.results import read_csv


class TestPick:
    """Tests for the pick function."""

    def test_precedence(self):
        """Test flag over config file over default."""
        config = {"experiment": {"runs": 4}}
        assert pick(argparse.Namespace(runs=2), config, "experiment", "runs", 10) == 2
        assert pick(argparse.Namespace(runs=None), config, "experiment", "runs", 10) == 4
        assert pick(argparse.Namespace(runs=None), {}, "experiment", "runs", 10) == 10

    def test_false_switch_is_unset(self):
        """Test that an absent store_true switch lets the config decide."""
        config = {"solver": {"single_thread": True}}
        assert pick(argparse.Namespace(single_thread=False), config, "solver", "single_thread", False) is True

    def test_missing_attribute(self):
        """Test that options a subcommand lacks fall through to the config."""
        assert pick(argparse.Namespace(), {"solver": {"jobs": 3}}, "solver", "jobs", None) == 3

    def test_parse_applies_to_file_values(self):
        """Test that config values go through the flag's converter."""
        config = {"case1": {"layers": ["0.1:0.02", "0.02:0.1"]}}
        assert pick(argparse.Namespace(layers=None), config, "case1", "layers", None, parse_layers) == [
            (0.1, 0.02),
            (0.02, 0.1),
        ]

    def test_key_override(self):
        """Test reading a config option whose name differs from the flag."""
        config = {"case3": {"layers": 7}}
        assert pick(argparse.Namespace(T=None), config, "case3", "T", 10, key="layers") == 7


class TestGenerateCommand:
    """Tests for pml generate."""

    def test_case2(self, tmp_path, capsys):
        """Test that Case 2 writes a bundle of three layers and exits 0."""
        out = str(tmp_path / "bundle")
        assert main(["generate", "--case", "2", "--cluster-size", "6", "--p-in", "0.9", "--p-out", "0.2", "--out", out]) == 0
        with open(os.path.join(out, "meta.json")) as f:
            meta = json.load(f)
        assert (meta["n"], meta["T"]) == (18, 3)
        assert "n=18 T=3" in capsys.readouterr().out

    def test_case1_reproducible(self, tmp_path):
        """Test that the same seed writes identical bundles."""
        args = ["generate", "--case", "1", "--cluster-size", "10", "--layers", "0.6:0.1,0.1:0.6", "--seed", "4"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        for name in ("layer_000.mtx", "layer_001.mtx", "meta.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_case3_parameter_error(self, tmp_path, caplog):
        """Test that an impossible Case-3 setting exits 1 with the error logged."""
        with caplog.at_level(logging.ERROR):
            code = main(["generate", "--case", "3", "--n", "20", "--degree", "30", "--mu", "0", "--out", str(tmp_path)])
        assert code == 1
        assert "ParameterError" in caplog.text

    def test_missing_out(self, caplog):
        """Test that generate without --out is a usage error."""
        with caplog.at_level(logging.ERROR):
            assert main(["generate", "--case", "2"]) == 2
        assert "--out" in caplog.text


class TestSweepCommand:
    """Tests for pml sweep."""

    def test_case2(self, tmp_path):
        """Test a small Case-2 sweep end to end."""
        out = str(tmp_path / "sweep.csv")
        code = main(
            ["sweep", "--experiment", "case2", "--cluster-size", "8", "--p-in", "0.9", "--p-out", "0.2",
             "--methods", "power_mean,agg", "--p=-1,-2", "--runs", "2", "--jobs", "2", "--seed", "6", "--out", out]
        )
        assert code == 0
        meta, rows = read_csv(out)
        assert meta["seed"] == "6"
        assert len(rows) == 6

    def test_failed_rows_exit_one(self, tmp_path):
        """Test that a sweep with failed rows still writes them and exits 1."""
        out = str(tmp_path / "sweep.csv")
        code = main(
            ["sweep", "--experiment", "case3-grid", "--n", "20", "--T", "2", "--K", "2", "--degree", "15",
             "--p-tilde", "0.5", "--mu", "0,1", "--methods", "agg", "--runs", "1", "--out", out]
        )
        assert code == 1
        _, rows = read_csv(out)
        assert len(rows) == 2
        assert rows[0]["error"].startswith("ParameterError")

    def test_config_file_and_flag_override(self, tmp_path):
        """Test that config values apply and explicit flags win over them."""
        config = tmp_path / "pml.ini"
        config.write_text(
            "[experiment]\nexperiment = case2\nseed = 5\nruns = 1\nmethods = agg\n"
            "[case2]\ncluster_size = 6\np_in = 0.9\np_out = 0.2\n"
        )
        out_file = str(tmp_path / "from_file.csv")
        assert main(["sweep", "--config", str(config), "--out", out_file]) == 0
        meta, rows = read_csv(out_file)
        assert meta["seed"] == "5"
        assert len(rows) == 1
        assert rows[0]["p_in"] == "0.9"

        out_flag = str(tmp_path / "from_flag.csv")
        assert main(["sweep", "--config", str(config), "--seed", "7", "--runs", "2", "--out", out_flag]) == 0
        meta, rows = read_csv(out_flag)
        assert meta["seed"] == "7"
        assert len(rows) == 2

    def test_bad_config_value(self, tmp_path, caplog):
        """Test that an invalid method in the config file is a usage error."""
        config = tmp_path / "pml.ini"
        config.write_text("[experiment]\nmethods = louvain\n")
        with caplog.at_level(logging.ERROR):
            assert main(["sweep", "--config", str(config)]) == 2
        assert "louvain" in caplog.text

    def test_missing_config(self, tmp_path):
        """Test that a missing config file exits 1."""
        assert main(["sweep", "--config", str(tmp_path / "absent.ini")]) == 1

    def test_unknown_experiment_in_config(self, tmp_path):
        """Test that an unknown experiment name from the config is a usage error."""
        config = tmp_path / "pml.ini"
        config.write_text("[experiment]\nexperiment = case4\n")
        assert main(["sweep", "--config", str(config)]) == 2


class TestBenchmarkCommand:
    """Tests for pml benchmark."""

    def test_small_sizes(self, tmp_path):
        """Test a tiny benchmark with single-thread metadata."""
        out = str(tmp_path / "bench.csv")
        code = main(["benchmark", "--sizes", "150,200", "--p", "-1", "--runs", "1", "--p-in", "0.1", "--p-out", "0.05", "--out", out])
        assert code == 0
        meta, rows = read_csv(out)
        assert [row["n"] for row in rows] == ["150", "200"]
        assert meta["threading"].startswith("workers=1 ")

    @patch("pmlaplacian.experiments.get_available_memory", return_value=0)
    def test_memory_guard_exit_code(self, mock_memory, tmp_path):
        """Test that points skipped by the memory guard make the exit code 1."""
        out = str(tmp_path / "bench.csv")
        assert main(["benchmark", "--sizes", "150", "--p", "-1", "--runs", "1", "--out", out]) == 1


class TestClusterCommand:
    """Tests for pml cluster."""

    def test_bundle(self, tmp_path, capsys):
        """Test clustering a generated bundle with its ground truth."""
        bundle = str(tmp_path / "bundle")
        main(["generate", "--case", "1", "--cluster-size", "20", "--layers", "0.8:0.05,0.6:0.05", "--out", bundle])
        capsys.readouterr()
        labels = str(tmp_path / "labels.csv")
        assert main(["cluster", "--bundle", bundle, "--p", "-1", "--out", labels]) == 0
        assert "clustering_error: 0.0000" in capsys.readouterr().out
        _, rows = read_csv(labels)
        assert len(rows) == 40

    def test_mixed_inputs(self, tmp_path):
        """Test that a bundle together with feature files is a usage error."""
        assert main(["cluster", "--bundle", str(tmp_path), "--features", "a.csv", "--knn", "3"]) == 2

    def test_no_input(self):
        """Test that cluster without any input is a usage error."""
        assert main(["cluster"]) == 2

    def test_p_list_in_config(self, tmp_path):
        """Test that a p grid in the config file is a usage error for cluster."""
        bundle = str(tmp_path / "bundle")
        main(["generate", "--case", "2", "--cluster-size", "5", "--out", bundle])
        config = tmp_path / "pml.ini"
        config.write_text("[experiment]\np = -10,-1\n")
        assert main(["cluster", "--config", str(config), "--bundle", bundle]) == 2

    def test_missing_bundle(self, tmp_path):
        """Test that a bundle directory without meta.json exits 1."""
        assert main(["cluster", "--bundle", str(tmp_path / "nowhere")]) == 1


class TestSpectrumCommand:
    """Tests for pml spectrum."""

    def test_expected_graph(self, tmp_path):
        """Test the spectrum of an expected Case-2 graph."""
        out = str(tmp_path / "spectrum.csv")
        assert main(["spectrum", "--cluster-size", "5", "--p=-10,1", "--count", "4", "--out", out]) == 0
        _, rows = read_csv(out)
        assert len(rows) == 8
        assert [row["informative"] for row in rows[:4]] == ["True", "True", "True", "False"]


class TestLoadConfigIntegration:
    """Tests for config files written the way the README shows them."""

    def test_readme_example(self, tmp_path):
        """Test that every documented section loads."""
        config = tmp_path / "pml.ini"
        config.write_text(
            "[experiment]\nseed = 1\np = -10,-1,1\n[solver]\nouter_tol = 1e-8\njobs = 2\n"
            "[case1]\nk = 2\n[case2]\np_in = 0.1\n[case3]\nlayers = 10\ncommunities = 2\n"
            "[benchmark]\nsizes = 10000,20000\n"
        )
        loaded = load_config(str(config))
        assert loaded["case3"] == {"layers": 10, "communities": 2}
        assert loaded["benchmark"]["sizes"] == [10000, 20000]
