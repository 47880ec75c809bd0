import csv
import io
import json
from importlib import resources

import pytest

from qcommit import cli


def bundled(name: str) -> str:
    return str(resources.files("qcommit").joinpath("scenarios", name))


def read_csv(path) -> list:
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestScenarioSchema:
    def test_round_trip_lossless(self):
        sc = cli.load_scenario(bundled("ideal-1d.toml"))
        again = cli.Scenario.from_dict(sc.to_dict())
        assert again == sc

    def test_unknown_top_level_field_rejected(self):
        with pytest.raises(cli.ScenarioError, match="mystery"):
            cli.Scenario.from_dict({"name": "x", "mode": "ideal", "mystery": 1})

    def test_unknown_block_field_rejected(self):
        with pytest.raises(cli.ScenarioError, match="quantum.dims"):
            cli.Scenario.from_dict(
                {"name": "x", "mode": "ideal", "quantum": {"dims": 2}}
            )

    def test_unknown_mode_rejected(self):
        with pytest.raises(cli.ScenarioError, match="mode"):
            cli.Scenario.from_dict({"name": "x", "mode": "sideways"})

    def test_all_bundled_scenarios_parse(self):
        for name in (
            "ideal-1d.toml",
            "clone-attack-sweep.toml",
            "dual-temporary-cheat.toml",
            "teleport-hiding.toml",
            "redundant-loss.toml",
            "chain-depth2.toml",
            "non-ideal-delays.toml",
        ):
            sc = cli.load_scenario(bundled(name))
            assert sc.name


class TestRun:
    def test_ideal_scenario_full_pass(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code = cli.main(
            ["run", bundled("ideal-1d.toml"), "--trials", "300", "--out", str(out)]
        )
        assert code == cli.EXIT_OK
        rows = read_csv(out)
        assert float(rows[0]["pass_rate"]) == 1.0
        assert float(rows[0]["hiding_pairs_identical"]) == 1.0

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["run", bundled("ideal-1d.toml"), "--trials", "100"]
        assert cli.main(argv + ["--out", str(a)]) == cli.EXIT_OK
        assert cli.main(argv + ["--out", str(b)]) == cli.EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_timing_column_is_opt_in(self, tmp_path):
        out = tmp_path / "t.csv"
        argv = ["run", bundled("ideal-1d.toml"), "--trials", "30", "--out", str(out)]
        assert cli.main(argv) == cli.EXIT_OK
        assert "runtime_s" not in read_csv(out)[0]
        assert cli.main(argv + ["--timing"]) == cli.EXIT_OK
        assert "runtime_s" in read_csv(out)[0]

    def test_json_format(self, tmp_path):
        out = tmp_path / "r.json"
        code = cli.main(
            [
                "run", bundled("ideal-1d.toml"), "--trials", "50",
                "--format", "json", "--out", str(out),
            ]
        )
        assert code == cli.EXIT_OK
        data = json.loads(out.read_text())
        assert data[0]["pass_rate"] == 1.0

    def test_transcript_archive(self, tmp_path):
        out = tmp_path / "r.csv"
        arch = tmp_path / "t.json"
        code = cli.main(
            [
                "run", bundled("ideal-1d.toml"), "--trials", "20",
                "--out", str(out), "--archive", str(arch),
            ]
        )
        assert code == cli.EXIT_OK
        data = json.loads(arch.read_text())
        assert data["status"] == "completed"
        assert data["verdicts"]["0"] == "pass"

    def test_dual_temporary_cheat_detection(self, tmp_path):
        out = tmp_path / "d.csv"
        code = cli.main(
            [
                "run", bundled("dual-temporary-cheat.toml"), "--trials", "1200",
                "--out", str(out),
            ]
        )
        assert code == cli.EXIT_OK
        row = read_csv(out)[0]
        det = float(row["detection_rate"])
        assert abs(det - 0.75) <= float(row["detection_rate_3sigma"])

    def test_redundant_scenario(self, tmp_path):
        out = tmp_path / "r.csv"
        code = cli.main(
            ["run", bundled("redundant-loss.toml"), "--trials", "400", "--out", str(out)]
        )
        assert code == cli.EXIT_OK
        row = read_csv(out)[0]
        assert abs(float(row["accept_rate"]) - float(row["closed_form"])) <= float(
            row["accept_rate_3sigma"]
        )

    def test_chained_scenario(self, tmp_path):
        out = tmp_path / "c.csv"
        code = cli.main(
            ["run", bundled("chain-depth2.toml"), "--trials", "60", "--out", str(out)]
        )
        assert code == cli.EXIT_OK
        assert float(read_csv(out)[0]["recovery_rate"]) == 1.0

    def test_non_ideal_scenario_full_pass(self, tmp_path):
        out = tmp_path / "n.csv"
        code = cli.main(
            ["run", bundled("non-ideal-delays.toml"), "--trials", "200", "--out", str(out)]
        )
        assert code == cli.EXIT_OK
        row = read_csv(out)[0]
        assert float(row["pass_rate"]) == 1.0
        assert float(row["hiding_pairs_identical"]) == 1.0

    def test_malformed_toml_exits_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text('name = "x"\nmode = broken[\n')
        assert cli.main(["run", str(bad)]) == cli.EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_unknown_field_exits_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text('name = "x"\nmode = "ideal"\n[quantum]\nqubits = 3\n')
        assert cli.main(["run", str(bad)]) == cli.EXIT_CONFIG
        err = capsys.readouterr().err
        assert "quantum.qubits" in err

    def test_missing_file_exits_config(self, tmp_path):
        assert cli.main(["run", str(tmp_path / "nope.toml")]) == cli.EXIT_CONFIG

    def test_acausal_strategy_exits_causality(self, tmp_path):
        sc = tmp_path / "acausal.toml"
        sc.write_text(
            'name = "acausal"\nmode = "ideal"\ntrials = 5\nseed = 1\n'
            '[adversary]\nstrategy = "acausal-probe"\n'
        )
        assert cli.main(["run", str(sc), "--out", str(tmp_path / "o.csv")]) == cli.EXIT_CAUSALITY


class TestSweep:
    def test_clone_sweep_columns_track_closed_form(self, tmp_path):
        out = tmp_path / "s.csv"
        code = cli.main(
            [
                "sweep", bundled("clone-attack-sweep.toml"), "--trials", "1200",
                "--out", str(out),
            ]
        )
        assert code == cli.EXIT_OK
        rows = read_csv(out)
        assert [int(r["d"]) for r in rows] == [2, 4, 8, 16]
        bounds = [float(r["bound"]) for r in rows]
        assert bounds == sorted(bounds, reverse=True)  # wiggle room shrinks with d
        for r in rows:
            assert abs(float(r["sum"]) - float(r["bound"])) <= float(r["sum_3sigma"])
        sums = [float(r["sum"]) for r in rows]
        assert all(a > b for a, b in zip(sums, sums[1:]))

    def test_single_point_grid_matches_run(self, tmp_path):
        sc = tmp_path / "one.toml"
        sc.write_text(
            'name = "one"\nmode = "ideal"\ntrials = 150\nseed = 4\n'
            '[adversary]\nstrategy = "clone-symmetric"\n'
            '[sweep]\n"quantum.d" = [3]\n'
        )
        out_sweep = tmp_path / "sweep.csv"
        assert cli.main(["sweep", str(sc), "--out", str(out_sweep)]) == cli.EXIT_OK
        direct = tmp_path / "direct.toml"
        direct.write_text(
            'name = "one"\nmode = "ideal"\ntrials = 150\nseed = 4\n'
            "[quantum]\nd = 3\n"
            '[adversary]\nstrategy = "clone-symmetric"\n'
        )
        out_run = tmp_path / "run.csv"
        assert cli.main(["run", str(direct), "--out", str(out_run)]) == cli.EXIT_OK
        row_s, row_r = read_csv(out_sweep)[0], read_csv(out_run)[0]
        for key in ("p0", "p1", "sum", "bound", "gap"):
            assert row_s[key] == row_r[key]

    def test_epsilon_table_over_copies_and_threshold(self, tmp_path):
        # oracle: re-evaluate the closed form for every grid row
        from qcommit import robustness as rb

        sc = tmp_path / "eps.toml"
        sc.write_text(
            'name = "eps"\nmode = "redundant"\ntrials = 60\nseed = 2\n'
            "[quantum]\nd = 3\n"
            "[redundancy]\ncopies = 10\nthreshold = 6\n"
            '[sweep]\n"redundancy.copies" = [10, 14]\n"redundancy.threshold" = [6, 8]\n'
        )
        out = tmp_path / "eps.csv"
        assert cli.main(["sweep", str(sc), "--out", str(out)]) == cli.EXIT_OK
        rows = read_csv(out)
        assert len(rows) == 4
        for r in rows:
            expected = rb.cheat_epsilon(3, int(float(r["copies"])), int(float(r["threshold"])))
            assert float(r["cheat_epsilon"]) == expected

    def test_parallel_jobs_preserve_grid_order(self, tmp_path):
        out_seq = tmp_path / "seq.csv"
        out_par = tmp_path / "par.csv"
        argv = ["sweep", bundled("clone-attack-sweep.toml"), "--trials", "150"]
        assert cli.main(argv + ["--out", str(out_seq)]) == cli.EXIT_OK
        assert cli.main(argv + ["--out", str(out_par), "--jobs", "2"]) == cli.EXIT_OK
        assert out_seq.read_bytes() == out_par.read_bytes()

    def test_empty_grid_rejected(self, tmp_path):
        sc = tmp_path / "no.toml"
        sc.write_text('name = "x"\nmode = "ideal"\n')
        assert cli.main(["sweep", str(sc)]) == cli.EXIT_CONFIG


class TestVerifyBounds:
    def test_small_range_passes(self, tmp_path):
        out = tmp_path / "v.csv"
        code = cli.main(
            [
                "verify-bounds", "--d-max", "4", "--m-max", "2",
                "--search-trials", "30", "--out", str(out),
            ]
        )
        assert code == cli.EXIT_OK
        rows = read_csv(out)
        assert all(r["pass"] == "True" for r in rows)
        single = [r for r in rows if r["check"] == "construction" and r["d"] == "2"]
        assert abs(float(single[0]["bound"]) - 5 / 3) < 1e-12

    def test_invalid_caps_usage_error(self):
        assert cli.main(["verify-bounds", "--d-max", "1"]) == cli.EXIT_CONFIG


class TestChainDemo:
    def test_demo_runs(self, capsys):
        assert cli.main(["chain-demo", "--depth", "1", "--seed", "3"]) == cli.EXIT_OK
        assert "recovered value" in capsys.readouterr().out
