import io
import json
import math
import subprocess
import sys
from fractions import Fraction

import pytest

from keyguess import cli
from keyguess.cost import speedup
from keyguess.distributions import dist_from_json, make_bernoulli, make_ternary
from keyguess.ranking import build_rank_table, get_key, load_rank_table, save_rank_table
from keyguess.report import cost_report, dict_to_csv, entropy_rows, to_json
from keyguess.simulate import SimConfig, multi_key_guess, quantum_multi_key_guess, trace_csv
from keyguess.suites import run_suite
from keyguess.sweeps import (PRESETS, SweepSpec, grid, rows_to_csv, rows_to_json, run_sweep)

BER = '{"kind": "bernoulli", "params": {"p": 0.2}}'
QUARTER = '{"kind": "bernoulli", "params": {"p": "1/4"}}'


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestEntropy:
    def test_half_is_one_bit(self, capsys):
        code, out, _ = run(capsys, "entropy", "--dist", '{"kind": "bernoulli", "params": {"p": 0.5}}')
        assert code == 0
        assert all(v == pytest.approx(1.0) for v in json.loads(out).values())

    def test_matches_library(self, capsys):
        d = dist_from_json('{"kind": "bernoulli", "params": {"p": 0.1}}')
        code, out, _ = run(capsys, "entropy", "--dist", '{"kind": "bernoulli", "params": {"p": 0.1}}',
                           "--format", "csv")
        assert out == rows_to_csv(entropy_rows(d), ["measure", "bits"])
        assert "H_0.5,0.678071905113" in out

    def test_malformed_json_exit_2(self, capsys):
        code, _, err = run(capsys, "entropy", "--dist", '{"kind": ')
        assert code == 2
        assert "malformed" in err

    def test_sweep_monotone(self, capsys):
        code, out, _ = run(capsys, "entropy", "--sweep", "--preset", "fig1", "--steps", "40",
                           "--format", "json")
        for row in json.loads(out):
            assert row["H_0.5"] >= row["H_0.667"] >= row["H_1"] >= row["H_min"] - 1e-12


class TestSpeedup:
    def test_point(self, capsys):
        code, out, _ = run(capsys, "speedup", "--dist", BER, "-n", "100")
        assert out == to_json(speedup(make_bernoulli(0.2) ** 100).to_dict())

    def test_gaussian(self, capsys):
        dist = '{"kind": "gaussian", "params": {"bound": 100, "sigma": 1}}'
        code, out, _ = run(capsys, "speedup", "--dist", dist)
        assert json.loads(out)["s_asymptotic"] == pytest.approx(2.11, abs=0.01)

    def test_ternary_quadratic_points(self):
        assert speedup(make_ternary(Fraction(2, 3))).s_asymptotic == pytest.approx(2.0, abs=1e-12)
        assert speedup(make_ternary(1)).s_asymptotic == pytest.approx(2.0, abs=1e-12)
        rows = run_sweep(PRESETS["fig3"])
        assert all(r["s_asymptotic"] > 2.0 for r in rows if abs(r["p"] - 2 / 3) > 0.01 and r["p"] < 1)

    def test_invalid_family(self, capsys):
        code, _, err = run(capsys, "speedup", "--family", "nosuch", "--axis", "p",
                           "--start", "0.1", "--stop", "0.2")
        assert code == 2


class TestCost:
    def test_quarter_squared(self, capsys):
        code, out, _ = run(capsys, "cost", "--dist", QUARTER, "-n", "2", "--rho", "1")
        doc = json.loads(out)
        assert doc["log2_lower"] <= math.log2(1.75) <= doc["log2_upper"]
        rep, _ = cost_report(dist_from_json(QUARTER), 2, 1)
        assert out == to_json(rep.to_dict())

    def test_uniform_rank_mean(self, capsys):
        code, out, _ = run(capsys, "cost", "--dist", '{"kind": "uniform", "params": {"size": 1024}}')
        doc = json.loads(out)
        assert doc["log2_lower"] <= math.log2(1025 / 2) <= doc["log2_upper"]

    def test_budget_fallback(self, capsys, caplog):
        code, _, err = run(capsys, "cost", "--dist", BER, "-n", "64", "--budget", "10")
        assert code == 2
        assert "--bounds-only" in err
        code, out, err = run(capsys, "cost", "--dist", BER, "-n", "64", "--budget", "10",
                             "--bounds-only", "--format", "csv")
        assert code == 0
        assert "Arikan bounds only" in caplog.text
        rep, _ = cost_report(make_bernoulli(0.2), 64, 1, budget=10, bounds_only=True)
        assert out == dict_to_csv(rep.to_dict())

    def test_cache_roundtrip(self, capsys, tmp_path):
        path = str(tmp_path / "table.kgrt")
        first = run(capsys, "cost", "--dist", BER, "-n", "30", "--rho", "0.5", "--cache", path)[1]
        second = run(capsys, "cost", "--dist", BER, "-n", "30", "--rho", "0.5", "--cache", path)[1]
        assert first == second
        code, _, err = run(capsys, "cost", "--dist", QUARTER, "-n", "30", "--cache", path)
        assert code == 2


class TestSimulate:
    def test_json_matches_library(self, capsys):
        code, out, _ = run(capsys, "simulate", "--dist", BER, "-n", "16", "-m", "2000", "-c", "0.4",
                           "--seed", "9")
        outcome = multi_key_guess(make_bernoulli(0.2) ** 16, SimConfig(seed=9, m=2000, c=0.4))
        assert code == 0
        assert out == to_json(outcome.to_dict())
        assert json.loads(out)["alpha_max"] <= 12

    def test_quantum_and_trace(self, capsys):
        args = ["simulate", "--dist", BER, "-n", "16", "-m", "200", "-c", "0.4", "--seed", "9"]
        cl = json.loads(run(capsys, *args)[1])
        qu = json.loads(run(capsys, *args, "--quantum", "--trace")[1])
        assert qu["recovered"] == cl["recovered"]
        assert qu["queries_total"] < cl["queries_total"]
        assert len(qu["trace"]) == qu["alpha_max"]
        csv_out = run(capsys, *args, "--quantum", "--trace", "--format", "csv")[1]
        outcome = quantum_multi_key_guess(make_bernoulli(0.2) ** 16, SimConfig(seed=9, m=200, c=0.4))
        assert csv_out == trace_csv(outcome)

    def test_doubling_cap_exit_1(self, capsys):
        code, _, err = run(capsys, "simulate", "--dist", BER, "-n", "16", "-m", "50", "-c", "0.9",
                           "--max-doublings", "2")
        assert code == 1
        assert "doublings" in err


class TestRank:
    def test_rank_and_unrank(self, capsys):
        doc = json.loads(run(capsys, "rank", "--dist", QUARTER, "-n", "2", "--key", "1,0")[1])
        assert doc["rank"] == 3
        doc = json.loads(run(capsys, "rank", "--dist", QUARTER, "-n", "2", "--rank", "2")[1])
        assert doc["key"] == [0, 1]

    def test_big_rank_exact(self, capsys):
        i = 3 ** 60 - 5
        doc = json.loads(run(capsys, "rank", "--dist", '{"kind": "ternary", "params": {"p": 0.375}}',
                             "-n", "60", "--rank", str(i))[1])
        tbl = build_rank_table(make_ternary(0.375) ** 60)
        assert tuple(doc["key"]) == get_key(tbl, i)

    def test_mass_core_grover(self, capsys):
        doc = json.loads(run(capsys, "rank", "--dist", BER, "-n", "16", "--mass", "4096")[1])
        assert 2 ** doc["log2_mass"] == pytest.approx(0.8416486632718335, rel=1e-12)
        doc = json.loads(run(capsys, "rank", "--dist", QUARTER, "-n", "2", "--core-delta", "0")[1])
        assert doc["core_set_size"] == 1
        doc = json.loads(run(capsys, "rank", "--grover", "100", "--dist", BER)[1])
        assert doc["queries"] == 9

    def test_out_of_range_rank(self, capsys):
        code, _, _ = run(capsys, "rank", "--dist", QUARTER, "-n", "2", "--rank", "5")
        assert code == 2


class TestVerify:
    def test_lpn_bound(self, capsys):
        code, out, _ = run(capsys, "verify", "lpn-bound")
        assert code == 0
        assert out == run_suite("lpn-bound", 0).render()
        assert out.count("PASS  p=1e-") == 11

    @pytest.mark.parametrize("suite", ["arikan-sandwich", "rank-bijection", "core-set", "thm2-scaling"])
    def test_suites_pass(self, suite):
        rep = run_suite(suite, 1)
        assert rep.passed, [c.line() for c in rep.checks if not c.passed]

    def test_deterministic(self):
        assert run_suite("core-set", 3).render() == run_suite("core-set", 3).render()

    def test_unknown_suite(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["verify", "nosuch"])
        assert exc.value.code == 2
        with pytest.raises(KeyError):
            run_suite("nosuch")

    def test_failure_exit_code(self, capsys, monkeypatch):
        from keyguess import suites

        def failing(seed):
            rep = suites.SuiteReport("always-fails", seed)
            rep.add("impossible", 1.0, 2.0, 3.0)
            return rep
        monkeypatch.setitem(suites.SUITES, "lpn-bound", failing)
        code, out, _ = run(capsys, "verify", "lpn-bound")
        assert code == 1
        assert "FAIL" in out


class TestSweep:
    def test_presets_build(self):
        for name, spec in PRESETS.items():
            points = grid(spec)
            assert spec.steps == 200
            # integer axes on a log scale drop duplicate points
            assert len(points) == 200 or (spec.family == "zipf" and len(set(points)) == len(points))
            assert points[0] == spec.start and points[-1] == spec.stop

    def test_spec_validation(self):
        from keyguess.distributions import DistributionError
        for kwargs in ({"start": 0.5, "stop": 0.4}, {"start": 0.1, "stop": 0.2, "steps": 1},
                       {"start": 0.0, "stop": 0.5}, {"start": 0.1, "stop": 1.0}):
            with pytest.raises(DistributionError):
                SweepSpec("bernoulli", "p", **kwargs)
        with pytest.raises(DistributionError):
            SweepSpec("bernoulli", "sigma", 0.1, 0.2)

    def test_csv_matches_library(self, capsys):
        code, out, _ = run(capsys, "sweep", "--preset", "fig5", "--format", "csv")
        spec = PRESETS["fig5"]
        assert out == rows_to_csv(run_sweep(spec), [spec.axis, *spec.columns])
        lines = out.split("\n")
        assert lines[0] == "m,s_asymptotic"
        assert "\r" not in out
        assert len(lines) == 202 and lines[-1] == ""

    def test_parallel_same_order(self):
        spec = SweepSpec("bernoulli", "p", 0.01, 0.99, steps=50, columns=("s_asymptotic", "s_lower"), n=64)
        assert run_sweep(spec, jobs=3) == run_sweep(spec, jobs=1)

    def test_custom_sweep_and_out(self, capsys, tmp_path):
        path = tmp_path / "z.json"
        code, out, _ = run(capsys, "sweep", "--family", "zipf", "--axis", "N", "--start", "2",
                           "--stop", "1e6", "--steps", "5", "--scale", "log", "--fixed", "t=0.777",
                           "--format", "json", "--out", str(path))
        assert out == ""
        rows = json.loads(path.read_text())
        assert [r["N"] for r in rows][0] == 2 and len(rows) == 5
        assert all(2.0 < r["s_asymptotic"] < 2.1 for r in rows)

    def test_degenerate_points_are_empty(self, capsys):
        spec = SweepSpec("binomial", "m", 1, 3, steps=3, columns=("s_lower",), n=1)
        rows = run_sweep(spec)
        assert all(isinstance(r["s_lower"], float) for r in rows)
        assert rows_to_json(rows).count("null") == 0


class TestCacheFile:
    def test_roundtrip(self, tmp_path):
        d = make_ternary(Fraction(3, 8)) ** 25
        tbl = build_rank_table(d)
        buf = io.BytesIO()
        save_rank_table(tbl, buf)
        buf.seek(0)
        again = load_rank_table(buf, expect=d)
        assert again.classes == tbl.classes
        assert again.cum_counts == tbl.cum_counts
        assert again.cum_log_mass == tbl.cum_log_mass
        assert get_key(again, 3 ** 25 - 7) == get_key(tbl, 3 ** 25 - 7)

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            load_rank_table(io.BytesIO(b"NOPE" + bytes(40)))
        d = make_bernoulli(0.2) ** 4
        buf = io.BytesIO()
        save_rank_table(build_rank_table(d), buf)
        with pytest.raises(ValueError):
            load_rank_table(io.BytesIO(buf.getvalue()[:-3]))
        with pytest.raises(ValueError):
            load_rank_table(io.BytesIO(buf.getvalue()), expect=make_bernoulli(0.3) ** 4)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "keyguess", "rank", "--grover", "1000000",
                           "--dist", BER], capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["queries"] == 787
