import numpy as np
import pytest

import lewisweights.cli as cli
from lewisweights import Certificate, parse_report
from lewisweights.cli import bench_cli, benchmark, run_cli
from conftest import random_matrix, stacked_identity


def _write_csv(tmp_path, name, M):
    path = tmp_path / name
    path.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in M) + "\n")
    return str(path)


class TestRunCli:
    def test_stacked_identity_passes(self, tmp_path, capsys):
        path = _write_csv(tmp_path, "copies.csv", stacked_identity(3, 4))
        code = run_cli(["--input", path, "--p", "4", "--alpha", "0.3", "--quiet"])
        captured = capsys.readouterr()
        assert code == 0
        report = parse_report(captured.out)
        two_sided = report.certificates["two_sided"]
        assert two_sided.passed
        assert two_sided.min_ratio == pytest.approx(1.0, abs=1e-6)
        assert two_sided.max_ratio == pytest.approx(1.0, abs=1e-6)

    def test_p_below_two_is_config_error(self, tmp_path, capsys):
        path = _write_csv(tmp_path, "m.csv", random_matrix(0, 8, 2))
        code = run_cli(["--input", path, "--p", "1.5", "--alpha", "0.3"])
        captured = capsys.readouterr()
        assert code == 1
        assert "p >= 2" in captured.err
        assert captured.out == ""

    def test_bad_alpha_is_config_error(self, tmp_path, capsys):
        path = _write_csv(tmp_path, "m.csv", random_matrix(0, 8, 2))
        assert run_cli(["--input", path, "--p", "2", "--alpha", "1.2"]) == 1
        assert "alpha" in capsys.readouterr().err

    def test_missing_file_is_input_error(self, capsys):
        assert run_cli(["--input", "no/such/file", "--p", "2", "--alpha", "0.5"]) == 1
        assert "error" in capsys.readouterr().err

    def test_reference_certificate(self, tmp_path, capsys):
        path = _write_csv(tmp_path, "m.csv", random_matrix(1, 10, 3))
        code = run_cli([
            "--input", path, "--p", "4", "--alpha", "0.25",
            "--reference", "--quiet",
        ])
        captured = capsys.readouterr()
        assert code == 0
        report = parse_report(captured.out)
        estimate = report.certificates["estimate"]
        assert estimate.passed
        assert estimate.eps_target == pytest.approx(
            min(0.9, 10 * 0.25 * 16 * np.sqrt(3))
        )

    def test_report_written_to_file_and_deterministic(self, tmp_path):
        path = _write_csv(tmp_path, "m.csv", random_matrix(2, 12, 3))
        out_a = tmp_path / "a.json"
        out_b = tmp_path / "b.json"
        args = ["--input", path, "--p", "3", "--alpha", "0.5", "--seed", "7", "--quiet"]
        assert run_cli(args + ["--output", str(out_a)]) == 0
        assert run_cli(args + ["--output", str(out_b)]) == 0
        from lewisweights import render_report

        stripped_a = parse_report(out_a.read_text()).to_dict()
        stripped_b = parse_report(out_b.read_text()).to_dict()
        stripped_a.pop("timings_ms")
        stripped_b.pop("timings_ms")
        assert render_report(stripped_a) == render_report(stripped_b)

    def test_adaptive_mode_reported(self, tmp_path, capsys):
        path = _write_csv(tmp_path, "m.csv", random_matrix(4, 60, 3))
        code = run_cli([
            "--input", path, "--p", "4", "--alpha", "0.5",
            "--mode", "adaptive", "--quiet",
        ])
        captured = capsys.readouterr()
        assert code == 0
        report = parse_report(captured.out)
        assert report.mode == "adaptive"
        schedule = report.schedule
        assert schedule["iterations_executed"] <= schedule["num_rounds"]
        assert schedule["leverage_calls"] == schedule["iterations_executed"] + 1

    def test_certificate_failure_exits_two_with_report(self, tmp_path, capsys, monkeypatch):
        path = _write_csv(tmp_path, "m.csv", random_matrix(3, 10, 2))
        real = cli.two_sided_lewis

        def sabotaged(A, p, alpha, **kwargs):
            import dataclasses

            result = real(A, p, alpha, **kwargs)
            failing = Certificate(
                kind="two_sided", eps_target=alpha, slack=0.0,
                min_ratio=0.1, max_ratio=3.0, passed=False,
            )
            return dataclasses.replace(result, certificate=failing)

        monkeypatch.setattr(cli, "two_sided_lewis", sabotaged)
        code = run_cli(["--input", path, "--p", "2", "--alpha", "0.4", "--quiet"])
        captured = capsys.readouterr()
        assert code == 2
        report = parse_report(captured.out)  # report still emitted
        assert not report.certificates["two_sided"].passed

    def test_help_exits_zero(self, capsys):
        assert run_cli(["--help"]) == 0
        assert "lewisweights" in capsys.readouterr().out


class TestBenchmark:
    def test_square_instance_makes_two_calls(self):
        rows = benchmark([5], [5], [4.0], [0.5])
        assert len(rows) == 1
        assert rows[0]["num_rounds"] == 1
        assert rows[0]["leverage_calls"] == 2
        assert rows[0]["passed"]

    def test_faithful_call_count_matches_schedule(self):
        rows = benchmark([30], [2], [3.0], [0.8])
        assert rows[0]["leverage_calls"] == rows[0]["num_rounds"] + 1

    def test_adaptive_no_more_calls_than_faithful(self):
        faithful = benchmark([60], [3], [4.0], [0.5], mode="faithful")
        adaptive = benchmark([60], [3], [4.0], [0.5], mode="adaptive")
        assert adaptive[0]["leverage_calls"] <= faithful[0]["leverage_calls"]

    def test_cli_emits_csv(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        code = bench_cli([
            "--n", "6,8", "--d", "2", "--p", "2,4", "--alpha", "0.9",
            "--output", str(out),
        ])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("n,d,p,alpha,mode,backend,num_rounds")
        assert len(lines) == 1 + 4  # header + 2 sizes x 2 exponents
