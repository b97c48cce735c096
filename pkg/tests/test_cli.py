import json

import numpy as np
import pytest

from firsyn import cli
from firsyn.benchmarks import BenchmarkEntry, registry
from firsyn.fileio import load_gains, save_system
from firsyn.sysmodel import StateSpaceSystem, TransferFunction


def run(argv):
    return cli.main(argv)


def stable_toy_file(tmp_path):
    path = tmp_path / "toy.json"
    save_system(
        path,
        "toy",
        StateSpaceSystem(A=[[0.6, 0.1], [0.0, 0.4]], B=[[1.0], [0.5]], C=[[1.0, 0.0]]),
    )
    return str(path)


class TestAnalyze:
    def test_system1_pip_holds(self, capsys):
        assert run(["analyze", "system1"]) == 0
        out = capsys.readouterr().out
        assert "parity interlacing property: holds" in out
        assert "stabilizable (PBH): yes" in out

    def test_system2_reports_impossibility(self, capsys):
        assert run(["analyze", "system2"]) == 0
        out = capsys.readouterr().out
        assert "parity interlacing property: fails" in out
        assert "no stabilizing FIR controller exists" in out

    def test_system4_mimo_gate(self, capsys):
        assert run(["analyze", "system4"]) == 0
        out = capsys.readouterr().out
        assert "not applicable (MIMO)" in out
        assert "detectable (PBH): yes" in out

    def test_json_report(self, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        assert run(["analyze", "system1", "--json", str(report_path)]) == 0
        capsys.readouterr()
        report = json.loads(report_path.read_text(encoding="utf-8"))
        assert report["pip"]["holds"] is True
        assert report["open_loop_spectral_radius"] == pytest.approx(4.0)

    def test_file_input(self, tmp_path, capsys):
        path = tmp_path / "tf.json"
        save_system(path, "g2", TransferFunction(num=[1.0, -2.0], den=[1.0, -3.0, 0.0]))
        assert run(["analyze", str(path)]) == 0
        assert "fails" in capsys.readouterr().out

    def test_parse_error_exits_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"kind": "state_space", "A": [[1, 0], [1]]}', encoding="utf-8")
        assert run(["analyze", str(bad)]) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_file_exits_nonzero(self, capsys):
        assert run(["analyze", "/nonexistent/system.json"]) == 1


class TestDesign:
    def test_system4_convex_designed(self, tmp_path, capsys):
        out_path = tmp_path / "gains.json"
        code = run([
            "design", "system4", "--order", "0", "--method", "convex",
            "--out", str(out_path),
        ])
        assert code == 0
        assert "designed" in capsys.readouterr().out
        name, gains, extra = load_gains(out_path)
        assert gains.order == 0
        assert extra["rho"] < 1.0
        assert extra["lyapunov_certificate"] is True
        assert extra["method"] == "convex"

    def test_system1_convex_not_designed(self, tmp_path, capsys):
        code = run([
            "design", "system1", "--order", "0", "--method", "convex",
            "--out", str(tmp_path / "g.json"),
        ])
        assert code == 2
        assert "not designed" in capsys.readouterr().out

    def test_system3_direct_order1(self, tmp_path, capsys):
        out_path = tmp_path / "gains.json"
        code = run([
            "design", "system3", "--order", "1", "--method", "direct",
            "--runs", "10", "--seed", "1", "--out", str(out_path),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "designed" in out
        _, gains, extra = load_gains(out_path)
        assert extra["rho"] < 1.0
        assert extra["decay_below_threshold"] is True
        assert gains.order == 1

    def test_system3_direct_order0_not_designed(self, tmp_path, capsys):
        code = run([
            "design", "system3", "--order", "0", "--method", "direct",
            "--runs", "4", "--seed", "1", "--out", str(tmp_path / "g.json"),
        ])
        assert code == 2


class TestSweep:
    def test_stable_toy_files_and_determinism(self, tmp_path, capsys):
        toy = stable_toy_file(tmp_path)
        csv1 = tmp_path / "a.csv"
        svg = tmp_path / "a.svg"
        assert run([
            "sweep", toy, "--max-order", "2", "--runs", "4", "--seed", "7",
            "--csv", str(csv1), "--svg", str(svg),
        ]) == 0
        csv2 = tmp_path / "b.csv"
        assert run([
            "sweep", toy, "--max-order", "2", "--runs", "4", "--seed", "7",
            "--csv", str(csv2),
        ]) == 0
        assert csv1.read_bytes() == csv2.read_bytes()
        text = csv1.read_text(encoding="utf-8")
        assert text.startswith("order,median_rho,best_rho,worst_rho,runs,evals")
        for line in text.strip().splitlines()[1:]:
            assert float(line.split(",")[2]) < 1.0
        assert svg.read_text(encoding="utf-8").count("<polyline") == 3


class TestApproximate:
    def test_scalar_controller(self, tmp_path, capsys):
        ctl_path = tmp_path / "ctl.json"
        ctl_path.write_text(
            '{"name": "lag", "kind": "dynamic_controller",'
            ' "H": [[0.5]], "G": [[1.0]], "E": [[1.0]], "D": [[0.0]]}',
            encoding="utf-8",
        )
        out_path = tmp_path / "fir.json"
        assert run([
            "approximate", str(ctl_path), "--order", "3", "--out", str(out_path),
        ]) == 0
        _, gains, extra = load_gains(out_path)
        flat = [g[0][0] for g in (x.tolist() for x in gains.gains)]
        assert flat == pytest.approx([0.0, 1.0, 0.5, 0.25])
        # Tail oracle: sum_{i>=4} 0.5^{i-1} = 0.5^3 / (1 - 0.5) / 2 ... the
        # dropped terms are E H^i G for i >= 3, i.e. 0.5^3 + 0.5^4 + ... = 0.25.
        assert extra["truncation_tail_bound"] == pytest.approx(0.25, abs=1e-12)

    def test_nilpotent_controller_recovered_exactly(self, tmp_path, capsys):
        # An FIR law in dynamic form truncates to itself with zero tail.
        ctl_path = tmp_path / "ctl.json"
        ctl_path.write_text(
            json.dumps({
                "name": "fir2",
                "kind": "dynamic_controller",
                "H": [[0.0, 0.0], [1.0, 0.0]],
                "G": [[1.0], [0.0]],
                "E": [[1.5, -2.0]],
                "D": [[0.25]],
            }),
            encoding="utf-8",
        )
        out_path = tmp_path / "fir.json"
        assert run([
            "approximate", str(ctl_path), "--order", "2", "--out", str(out_path),
        ]) == 0
        _, gains, extra = load_gains(out_path)
        assert [g[0, 0] for g in gains.gains] == [0.25, 1.5, -2.0]
        assert extra["truncation_tail_bound"] == 0.0

    def test_unstable_controller_rejected(self, tmp_path, capsys):
        ctl_path = tmp_path / "ctl.json"
        ctl_path.write_text(
            '{"name": "bad", "kind": "dynamic_controller",'
            ' "H": [[1.5]], "G": [[1.0]], "E": [[1.0]], "D": [[0.0]]}',
            encoding="utf-8",
        )
        assert run(["approximate", str(ctl_path), "--order", "2"]) == 1
        assert "Schur" in capsys.readouterr().err


class TestBench:
    def test_default_run_meets_all_expectations(self, tmp_path, capsys):
        bundle = tmp_path / "bundle"
        assert run(["bench", "--out", str(bundle), "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert "expectations met" in out
        summary = (bundle / "summary.csv").read_text(encoding="utf-8")
        assert "FAIL" not in summary
        # Sweep statistics land in per-system CSVs with the known shape:
        # system2 never dips below 1, system3 only from order 1 on.
        def column(sid, idx):
            text = (bundle / f"{sid}_sweep.csv").read_text(encoding="utf-8")
            return [float(line.split(",")[idx]) for line in text.strip().splitlines()[1:]]

        assert all(m >= 1.0 for m in column("system2", 1))  # medians
        sys3_best = column("system3", 2)
        assert sys3_best[0] >= 1.0
        assert all(b < 1.0 for b in sys3_best[1:])
        for sid in ("system1", "system2", "system3", "system4"):
            assert (bundle / f"{sid}_sweep.svg").exists()

    def test_tampered_registry_exits_three(self, tmp_path, capsys, monkeypatch):
        entries = registry()
        good = entries["system4"]
        tampered = BenchmarkEntry(
            id=good.id,
            model=good.model,
            strong_stabilizability=good.strong_stabilizability,
            convex_order0_feasible=False,  # wrong on purpose
            minimal_stabilizing_order=good.minimal_stabilizing_order,
        )
        monkeypatch.setattr(cli, "registry", lambda: {"system4": tampered})
        code = run(["bench", "--out", str(tmp_path / "bundle"), "--seed", "1"])
        assert code == 3
        out = capsys.readouterr().out
        assert "MISMATCH system4 convex_design_order0" in out
        summary = (tmp_path / "bundle" / "summary.csv").read_text(encoding="utf-8")
        assert "FAIL" in summary
        assert (tmp_path / "bundle" / "system4_sweep.csv").exists()
        assert (tmp_path / "bundle" / "system4_sweep.svg").exists()
