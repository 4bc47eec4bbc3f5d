"""End-to-end CLI tests exercising the documented exit-code table."""

import csv
import json

import numpy as np
import pytest

from lipbound.cli import main
from lipbound.network import Network, load_network, save_network


@pytest.fixture
def oracle_path(tmp_path):
    net = Network((np.array([[2.0]]), np.array([[3.0]])), activation="tanh")
    path = tmp_path / "oracle.json"
    save_network(net, path)
    return path


class TestGen:
    def test_writes_network(self, tmp_path, capsys):
        out = tmp_path / "net.json"
        code = main(["gen", "--layers", "3", "--width", "5", "--in", "4",
                     "--out", "2", "--seed", "1", "--o", str(out)])
        assert code == 0
        net = load_network(out)
        assert net.dims == (4, 5, 5, 5, 2)
        assert "4 -> 5 -> 5 -> 5 -> 2" in capsys.readouterr().out

    def test_table_shape(self, tmp_path):
        out = tmp_path / "net.json"
        code = main(["gen", "--layers", "50", "--width", "100", "--in", "100",
                     "--out", "10", "--seed", "1", "--o", str(out)])
        assert code == 0
        assert len(load_network(out).weights) == 51

    def test_minimal(self, tmp_path):
        out = tmp_path / "n.json"
        assert main(["gen", "--layers", "1", "--width", "1", "--in", "1",
                     "--out", "1", "--seed", "0", "--o", str(out)]) == 0

    def test_zero_layers_exit_2(self, tmp_path):
        assert main(["gen", "--layers", "0", "--width", "1", "--in", "1",
                     "--out", "1", "--seed", "0",
                     "--o", str(tmp_path / "x.json")]) == 2

    def test_binary_output(self, tmp_path):
        out = tmp_path / "net.lnet"
        assert main(["gen", "--layers", "2", "--width", "3", "--in", "3",
                     "--out", "3", "--seed", "5", "--binary",
                     "--o", str(out)]) == 0
        assert load_network(out).dims == (3, 3, 3, 3)

    def test_missing_flag_exit_2(self):
        assert main(["gen", "--layers", "1"]) == 2


class TestCompute:
    def test_fast_oracle(self, oracle_path, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        code = main(["compute", "--net", str(oracle_path), "--method", "fast",
                     "--o", str(report_path)])
        assert code == 0
        assert "bound=6" in capsys.readouterr().out
        payload = json.loads(report_path.read_text())
        assert abs(payload["bound"] - 6.0) <= 1e-9
        assert payload["manifest"]["command"] == "compute"

    def test_sn_c1_equals_fast(self, oracle_path, capsys):
        assert main(["compute", "--net", str(oracle_path),
                     "--method", "sn", "--c", "1.0"]) == 0
        sn_line = capsys.readouterr().out
        assert main(["compute", "--net", str(oracle_path),
                     "--method", "fast"]) == 0
        fast_line = capsys.readouterr().out
        assert sn_line.split("bound=")[1] == fast_line.split("bound=")[1]

    def test_best_dominates_fast(self, tmp_path, capsys):
        net_path = tmp_path / "net.json"
        main(["gen", "--layers", "4", "--width", "8", "--in", "6", "--out",
              "4", "--seed", "3", "--o", str(net_path)])
        capsys.readouterr()
        assert main(["compute", "--net", str(net_path), "--method", "fast"]) == 0
        fast = float(capsys.readouterr().out.split("bound=")[1].split()[0])
        assert main(["compute", "--net", str(net_path), "--method", "best"]) == 0
        best = float(capsys.readouterr().out.split("bound=")[1].split()[0])
        assert best <= fast * (1.0 + 1e-12)

    def test_sweep_flag(self, oracle_path, tmp_path):
        report_path = tmp_path / "r.json"
        assert main(["compute", "--net", str(oracle_path), "--method", "sn",
                     "--sweep", "0.5:1.5:0.5", "--o", str(report_path)]) == 0
        payload = json.loads(report_path.read_text())
        assert payload["config"]["c"] == 1.0

    def test_missing_network_exit_3(self, tmp_path):
        assert main(["compute", "--net", str(tmp_path / "nope.json"),
                     "--method", "fast"]) == 3

    def test_bad_method_exit_2(self, oracle_path):
        assert main(["compute", "--net", str(oracle_path),
                     "--method", "bogus"]) == 2

    def test_invalid_c_exit_2(self, oracle_path):
        assert main(["compute", "--net", str(oracle_path), "--method", "sn",
                     "--c", "3.0"]) == 2


class TestVerify:
    def _compute_report(self, oracle_path, tmp_path):
        report_path = tmp_path / "report.json"
        assert main(["compute", "--net", str(oracle_path), "--method", "fast",
                     "--o", str(report_path)]) == 0
        return report_path

    def test_oracle_report_passes(self, oracle_path, tmp_path, capsys):
        report_path = self._compute_report(oracle_path, tmp_path)
        out_path = tmp_path / "validation.json"
        code = main(["verify", "--net", str(oracle_path), "--report",
                     str(report_path), "--samples", "20", "--o", str(out_path)])
        assert code == 0
        result = json.loads(out_path.read_text())
        assert abs(result["margin"]) <= 1e-9
        assert result["lmi"]["psd"] is True
        assert "psd=True" in capsys.readouterr().out

    def test_tampered_report_exit_6(self, oracle_path, tmp_path):
        report_path = self._compute_report(oracle_path, tmp_path)
        payload = json.loads(report_path.read_text())
        payload["bound"] *= 0.5
        report_path.write_text(json.dumps(payload))
        assert main(["verify", "--net", str(oracle_path),
                     "--report", str(report_path), "--samples", "5"]) == 6

    def test_oversized_lmi_message_but_empirical_runs(
        self, oracle_path, tmp_path, capsys
    ):
        report_path = self._compute_report(oracle_path, tmp_path)
        code = main(["verify", "--net", str(oracle_path), "--report",
                     str(report_path), "--samples", "5", "--lmi",
                     "--lmi-cap", "1"])
        assert code == 0
        captured = capsys.readouterr()
        assert "exceeds cap" in captured.err
        assert "psd=n/a" in captured.out


class TestBench:
    def test_csv_schema_and_ordering(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main(["bench", "--depths", "3,2", "--widths", "4", "--seeds",
                     "1,0", "--methods", "fast,gc,product", "--o", str(out)])
        assert code == 0
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2 * 2 * 3
        keys = [(int(r["depth"]), int(r["width"]), int(r["seed"]), r["method"])
                for r in rows]
        assert keys == sorted(keys)
        assert all(r["status"] == "ok" for r in rows)
        assert all(float(r["bound"]) > 0 for r in rows)
        manifest = json.loads((tmp_path / "bench.manifest.json").read_text())
        assert manifest["command"] == "bench"

    def test_parallel_matches_serial(self, tmp_path):
        serial, parallel = tmp_path / "s.csv", tmp_path / "p.csv"
        args = ["bench", "--depths", "2", "--widths", "5", "--seeds", "0,1",
                "--methods", "fast,gc"]
        assert main(args + ["--o", str(serial)]) == 0
        assert main(args + ["--jobs", "4", "--o", str(parallel)]) == 0
        with open(serial, newline="") as fh:
            s_rows = list(csv.DictReader(fh))
        with open(parallel, newline="") as fh:
            p_rows = list(csv.DictReader(fh))
        assert [r["bound"] for r in s_rows] == [r["bound"] for r in p_rows]

    def test_bad_method_exit_2(self, tmp_path):
        assert main(["bench", "--depths", "2", "--widths", "3",
                     "--methods", "nope", "--o", str(tmp_path / "b.csv")]) == 2


class TestReproducibility:
    def test_same_manifest_same_bound(self, tmp_path, capsys):
        net_path = tmp_path / "net.json"
        main(["gen", "--layers", "3", "--width", "6", "--in", "5", "--out",
              "4", "--seed", "2", "--o", str(net_path)])
        capsys.readouterr()
        bounds = []
        for _ in range(2):
            assert main(["compute", "--net", str(net_path),
                         "--method", "gc", "--c", "1.5"]) == 0
            bounds.append(capsys.readouterr().out.split("bound=")[1].split()[0])
        assert bounds[0] == bounds[1]
