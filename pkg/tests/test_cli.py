import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from covfuse import cli, svg
from covfuse.cli import RunRecord, digest, dumps, main, resolve_seed
from covfuse.errors import DimensionError, InvalidInputError
from covfuse.estimates import Estimate
from covfuse.mee import contains, solve_mee

from conftest import estimate, seeds

PAIR = {"estimates": [{"mean": [0, 0], "cov": [[1, 0], [0, 1]]}, {"mean": [4, 4], "cov": [[1, 0], [0, 1]]}]}


def write(tmp_path, obj, name="in.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), (json.loads(err) if err.strip() else None)


def scenario(estimates, **extra):
    return {"estimates": [{"mean": e.mean.tolist(), "cov": e.cov.tolist()} for e in estimates], **extra}


class TestJSON:
    def test_seventeen_digits(self):
        assert dumps(0.1, indent=None) == "0.10000000000000001"
        assert dumps(2.0, indent=None) == "2.0"

    def test_non_finite_tokens(self):
        assert dumps([math.nan, math.inf, -math.inf], indent=None) == "[NaN,Infinity,-Infinity]"
        assert math.isnan(json.loads(dumps(math.nan))) and json.loads(dumps(math.inf)) == math.inf

    @given(st.lists(st.floats(allow_nan=False), max_size=8))
    def test_float_round_trip(self, xs):
        assert json.loads(dumps(xs)) == xs

    def test_digest_ignores_key_order(self):
        assert digest({"a": 1, "b": [1.5]}) == digest({"b": [1.5], "a": 1})
        assert digest({"a": 1}) != digest({"a": 2})


class TestFuse:
    def test_kalman(self, capsys, tmp_path):
        code, rec, _ = run(capsys, ["fuse", "--method", "kf", "--in", write(tmp_path, PAIR)])
        assert code == 0 and rec["command"] == "fuse" and rec["status"] == "converged"
        assert np.allclose(rec["results"][0]["mean"], [2.0, 2.0])
        assert np.allclose(rec["results"][0]["cov"], 0.5 * np.eye(2))
        assert rec["input_digest"] == digest(PAIR)

    def test_ci_default_echoes_inputs(self, capsys, tmp_path):
        code, rec, _ = run(capsys, ["fuse", "--in", write(tmp_path, PAIR)])
        assert code == 0 and rec["diagnostics"]["method"] == "ci"
        assert rec["inputs"] == PAIR["estimates"]
        assert sum(rec["weights"]) == pytest.approx(1.0)

    def test_mismatched_dimensions(self, capsys, tmp_path):
        bad = {"estimates": [{"mean": [0, 0], "cov": np.eye(2).tolist()}, {"mean": [0], "cov": [[1]]}]}
        code, rec, err = run(capsys, ["fuse", "--in", write(tmp_path, bad)])
        assert code == 2 and rec is None and err["error"] == "input-error"

    @pytest.mark.parametrize("text", ["{not json", '{"estimates": []}', '{"estimates": [{"mean": [0]}]}', "[1, 2]"])
    def test_malformed_input(self, capsys, tmp_path, text):
        code, _, err = run(capsys, ["fuse", "--in", write(tmp_path, text)])
        assert code == 2 and err["exit_code"] == 2

    def test_unknown_config_key(self, capsys, tmp_path):
        code, _, err = run(capsys, ["fuse", "--in", write(tmp_path, dict(PAIR, config={"colour": 1}))])
        assert code == 2 and "colour" in err["message"]

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, ["fuse", "--in", str(tmp_path / "absent.json")])
        assert code == 2 and err["error"] == "input-error"

    def test_bad_method_is_usage_error(self, capsys, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["fuse", "--method", "nope", "--in", write(tmp_path, PAIR)])
        assert exc.value.code == 2
        assert json.loads(capsys.readouterr().err)["error"] == "usage-error"

    def test_out_file_matches_stdout(self, capsys, tmp_path):
        out = tmp_path / "rec.json"
        main(["fuse", "--method", "kf", "--in", write(tmp_path, PAIR), "--out", str(out)])
        assert capsys.readouterr().out == out.read_text()


class TestUnion:
    def test_two_disks(self, capsys, tmp_path):
        code, rec, _ = run(capsys, ["union", "--in", write(tmp_path, PAIR)])
        assert code == 0 and rec["diagnostics"]["method"] == "gcu-mee"
        assert np.allclose(rec["results"][0]["mean"], [2.0, 2.0], atol=1e-6)
        assert rec["diagnostics"]["solver"]["status"] == "optimal"

    def test_cu(self, capsys, tmp_path):
        code, rec, _ = run(capsys, ["union", "--method", "cu", "--in", write(tmp_path, PAIR)])
        assert code == 0 and np.allclose(rec["results"][0]["cov"], [[5, 4], [4, 5]], atol=1e-6)

    def test_single_estimate_identity(self, capsys, tmp_path):
        one = {"estimates": [{"mean": [1.0, 2.0], "cov": [[2.0, 0.5], [0.5, 1.0]]}]}
        for method in ("cu", "gcu-direct", "gcu-mee"):
            code, rec, _ = run(capsys, ["union", "--method", method, "--in", write(tmp_path, one)])
            assert code == 0
            assert np.allclose(rec["results"][0]["mean"], [1.0, 2.0])
            assert np.allclose(rec["results"][0]["cov"], [[2.0, 0.5], [0.5, 1.0]])

    def test_cross_check_random(self, capsys, tmp_path):
        rng = np.random.default_rng(12)
        obj = scenario([estimate(rng, 2) for _ in range(5)])
        code, rec, _ = run(capsys, ["union", "--cross-check", "--in", write(tmp_path, obj)])
        check = rec["diagnostics"]["cross_check"]
        assert code == 0 and check["agree"]
        assert check["logdet_gap"] <= 1e-3
        assert check["mee_feasible_for_gcu"] and check["direct_feasible_for_mee"]

    def test_cross_check_disagreement_exits_4(self, capsys, tmp_path, monkeypatch):
        real = cli.cross_check

        def broken(scn, seed):
            return dict(real(scn, seed), agree=False)

        monkeypatch.setattr(cli, "cross_check", broken)
        code, rec, err = run(capsys, ["union", "--cross-check", "--in", write(tmp_path, PAIR)])
        assert code == 4 and err["error"] == "theorem-violation" and rec is not None

    def test_iteration_cap_exits_3_with_record(self, capsys, tmp_path):
        obj = dict(PAIR, config={"barrier": {"max_outer": 1}})
        code, rec, err = run(capsys, ["union", "--in", write(tmp_path, obj)])
        assert code == 3 and err["error"] == "solver-failure"
        assert rec["status"] == "iteration-capped"

    def test_singular_covariance_is_input_error(self, capsys, tmp_path):
        obj = {"estimates": [{"mean": [0, 0], "cov": [[1, 0], [0, 0]]}, {"mean": [1, 1], "cov": np.eye(2).tolist()}]}
        code, _, err = run(capsys, ["union", "--method", "gcu-direct", "--in", write(tmp_path, obj)])
        assert code == 2 and err["error"] == "input-error"


class TestDeconflict:
    def test_far_pair_takes_cu(self, capsys, tmp_path):
        code, rec, _ = run(capsys, ["deconflict", "--in", write(tmp_path, PAIR)])
        d = rec["diagnostics"]
        assert code == 0 and d["branch"] == "union-cu" and d["gate"] == 9.0
        assert d["max_distance"] == pytest.approx(16.0)
        assert d["distances"] == [{"i": 0, "j": 1, "distance": pytest.approx(16.0)}]
        assert np.allclose(rec["results"][0]["cov"], [[5, 4], [4, 5]], atol=1e-6)

    def test_gate_flag_overrides(self, capsys, tmp_path):
        code, rec, _ = run(capsys, ["deconflict", "--gate", "20", "--in", write(tmp_path, PAIR)])
        assert code == 0 and rec["diagnostics"]["branch"] == "fusion-ci"

    def test_config_gate(self, capsys, tmp_path):
        code, rec, _ = run(capsys, ["deconflict", "--in", write(tmp_path, dict(PAIR, config={"gate": 20}))])
        assert rec["diagnostics"]["branch"] == "fusion-ci"

    def test_gcu_branch(self, capsys, tmp_path):
        code, rec, _ = run(capsys, ["deconflict", "--union", "gcu", "--in", write(tmp_path, PAIR)])
        assert code == 0 and rec["diagnostics"]["branch"] == "union-gcu"

    def test_negative_gate(self, capsys, tmp_path):
        code, _, _ = run(capsys, ["deconflict", "--gate", "-1", "--in", write(tmp_path, PAIR)])
        assert code == 2

    @given(seeds)
    def test_scaling_covariances_crosses_gate(self, seed):
        rng = np.random.default_rng(seed)
        a, b = estimate(rng, 2), estimate(rng, 2)
        D = cli.mahalanobis(a, b)
        if D == 0:
            return
        # distances scale as 1/s under cov -> s cov
        for s, branch in ((D / 18.0, "union-cu"), (D / 4.5, "fusion-ci")):
            scn = cli.parse_scenario(scenario([Estimate(a.mean, s * a.cov), Estimate(b.mean, s * b.cov)]))
            rec = cli.cmd_deconflict(scn, 9.0, "cu", 0)
            assert rec.diagnostics["branch"] == branch
            assert rec.diagnostics["max_distance"] == pytest.approx(D / s)


class TestRecordsAndSeeds:
    def test_round_trip(self, capsys, tmp_path):
        code, rec, _ = run(capsys, ["union", "--method", "cu", "--in", write(tmp_path, PAIR)])
        text = dumps(rec)
        back = RunRecord.from_json(text)
        assert back.to_dict() == rec and back.to_json() == text
        assert back.estimates()[0].allclose(Estimate([2.0, 2.0], [[5, 4], [4, 5]]), atol=1e-6)

    def test_not_a_record(self):
        with pytest.raises(InvalidInputError):
            RunRecord.from_dict({"results": []})

    def test_seed_precedence(self, monkeypatch):
        monkeypatch.delenv(cli.SEED_ENV, raising=False)
        assert resolve_seed(None) == 0
        assert resolve_seed(None, 5) == 5
        monkeypatch.setenv(cli.SEED_ENV, "7")
        assert resolve_seed(None, 5) == 7
        assert resolve_seed(3, 5) == 3
        monkeypatch.setenv(cli.SEED_ENV, "x")
        with pytest.raises(InvalidInputError):
            resolve_seed(None)

    def test_seed_reaches_verify(self, capsys, monkeypatch):
        monkeypatch.setenv(cli.SEED_ENV, "11")
        _, rec, _ = run(capsys, ["verify", "--suite", "single-enclosure", "--n", "3"])
        assert rec["diagnostics"]["seed"] == 11


class TestBatch:
    def test_all_good(self, capsys, tmp_path):
        path = write(tmp_path, [PAIR, dict(PAIR, config={"gate": 20})])
        code, out, err = run(capsys, ["deconflict", "--batch", path])
        assert code == 0 and err is None
        assert [r["diagnostics"]["branch"] for r in out] == ["union-cu", "fusion-ci"]

    def test_parallel_matches_serial(self, capsys, tmp_path):
        path = write(tmp_path, {"scenarios": [PAIR, PAIR, PAIR]})
        _, serial, _ = run(capsys, ["fuse", "--method", "kf", "--batch", path])
        _, parallel, _ = run(capsys, ["fuse", "--method", "kf", "--batch", path, "--jobs", "2"])
        strip = lambda rs: [{k: v for k, v in r.items() if k != "wall_time"} for r in rs]
        assert strip(serial) == strip(parallel)

    def test_one_bad_scenario(self, capsys, tmp_path):
        path = write(tmp_path, [PAIR, {"estimates": []}])
        code, out, err = run(capsys, ["fuse", "--batch", path])
        assert code == 2 and err["error"] == "batch"
        assert out[0]["command"] == "fuse" and out[1]["error"]["exit_code"] == 2

    def test_empty_batch(self, capsys, tmp_path):
        code, _, _ = run(capsys, ["fuse", "--batch", write(tmp_path, [])])
        assert code == 2


class TestVerify:
    @pytest.mark.parametrize("suite", ["single-enclosure", "ci-bounds", "equivalence"])
    def test_suites_pass(self, capsys, suite):
        code, rec, err = run(capsys, ["verify", "--suite", suite, "--n", "3", "--seed", "1"])
        assert code == 0 and err is None
        assert rec["diagnostics"]["passed"] == 3 and rec["diagnostics"]["failed"] == []

    def test_failure_exits_4(self, capsys, monkeypatch):
        monkeypatch.setattr(cli, "run_suite", lambda *a: {"suite": "x", "n": 1, "seed": 0, "passed": 0,
                                                          "failed": [0], "cases": [], "wall_time": 0.0})
        code, rec, err = run(capsys, ["verify", "--suite", "equivalence", "--n", "1"])
        assert code == 4 and rec["status"] == "theorem-violation" and err["error"] == "theorem-violation"

    def test_zero_cases(self, capsys):
        code, _, _ = run(capsys, ["verify", "--suite", "equivalence", "--n", "0"])
        assert code == 2

    def test_trace(self, capsys):
        _, rec, _ = run(capsys, ["verify", "--suite", "equivalence", "--n", "4", "--seed", "3", "--trace"])
        cases = rec["diagnostics"]["cases"]
        # nested instances skip the barrier solver and carry an empty trace
        assert all("trace" in c for c in cases) and any(c["trace"] for c in cases)


class TestPlot:
    def test_record_and_scenario(self, capsys, tmp_path):
        _, rec, _ = run(capsys, ["union", "--in", write(tmp_path, PAIR)])
        rec_path = write(tmp_path, dumps(rec), "rec.json")
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        code, prec, _ = run(capsys, ["plot", "--in", rec_path, "--out", str(a)])
        assert code == 0 and prec["diagnostics"]["svg"] == str(a)
        code, _, _ = run(capsys, ["plot", "--in", write(tmp_path, PAIR), "--out", str(b)])
        assert code == 0 and a.read_bytes() == b.read_bytes()

    def test_byte_identical_reruns(self, capsys, tmp_path):
        paths = [tmp_path / "x.svg", tmp_path / "y.svg"]
        digests = []
        for p in paths:
            _, rec, _ = run(capsys, ["plot", "--in", write(tmp_path, PAIR), "--out", str(p)])
            digests.append(rec["diagnostics"]["svg_digest"])
        assert paths[0].read_bytes() == paths[1].read_bytes() and digests[0] == digests[1]

    def test_three_dimensional_rejected(self, capsys, tmp_path):
        obj = {"estimates": [{"mean": [0, 0, 0], "cov": np.eye(3).tolist()}]}
        code, _, err = run(capsys, ["plot", "--in", write(tmp_path, obj), "--out", str(tmp_path / "z.svg")])
        assert code == 2 and not (tmp_path / "z.svg").exists()

    def test_single_estimate_contours_coincide(self, capsys, tmp_path):
        obj = {"estimates": [{"mean": [1.0, -1.0], "cov": [[2.0, 0.3], [0.3, 1.0]]}]}
        out = tmp_path / "one.svg"
        run(capsys, ["plot", "--in", write(tmp_path, obj), "--out", str(out)])
        lines = svg.parse_polylines(out.read_text())
        assert np.allclose(lines["input"][0], lines["solution"][0])


class TestSvg:
    def test_contour_on_unit_level(self):
        e = Estimate([1.0, 2.0], [[3.0, 1.0], [1.0, 2.0]])
        pts = svg.contour(e)
        assert pts.shape == (65, 2) and np.array_equal(pts[0], pts[-1])
        d = pts - e.mean
        assert np.allclose(np.einsum("ki,ij,kj->k", d, np.linalg.inv(e.cov), d), 1.0)

    def test_singular_contour_is_segment(self):
        pts = svg.contour(Estimate([0.0, 0.0], [[1.0, 0.0], [0.0, 0.0]]))
        assert np.allclose(pts[:, 1], 0.0) and np.abs(pts[:, 0]).max() == pytest.approx(1.0)

    def test_vertices_parse_back_exactly(self):
        es = [Estimate([0.0, 0.0], np.eye(2)), Estimate([4.0, 4.0], [[1.0, 0.2], [0.2, 0.5]])]
        sol = Estimate([2.0, 2.0], [[9.0, 7.0], [7.0, 9.0]])
        lines = svg.parse_polylines(svg.render(es, sol, ["a", 'b"<&']))
        assert all(np.array_equal(p, svg.contour(e)) for p, e in zip(lines["input"], es))
        assert np.array_equal(lines["solution"][0], svg.contour(sol))

    def test_labels_escaped(self):
        text = svg.render([Estimate([0.0, 0.0], np.eye(2))], Estimate([0.0, 0.0], np.eye(2)), ['x"<&'])
        assert 'data-label="x&quot;&lt;&amp;"' in text

    def test_rejects_3d(self):
        with pytest.raises(DimensionError):
            svg.contour(Estimate([0.0, 0.0, 0.0], np.eye(3)))

    def test_gcu_solution_contains_inputs_after_round_trip(self):
        es = [Estimate([0.0, 0.0], np.eye(2)), Estimate([4.0, 4.0], np.eye(2))]
        sol = solve_mee(es).estimate
        lines = svg.parse_polylines(svg.render(es, sol))
        P = np.linalg.inv(sol.cov)
        for pts in lines["input"]:
            d = pts - sol.mean
            assert np.einsum("ki,ij,kj->k", d, P, d).max() <= 1.0 + 1e-6
        assert all(contains(sol, e)[0] for e in es)


def test_console_entry_point(tmp_path):
    path = write(tmp_path, PAIR)
    out = subprocess.run([sys.executable, "-m", "covfuse.cli", "fuse", "--method", "kf", "--in", path],
                         capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["command"] == "fuse"
