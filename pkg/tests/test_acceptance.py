"""Acceptance criteria: one PASS/FAIL line per criterion, each at its stated tolerance and time budget."""
import json
import time

import numpy as np
import pytest

from covfuse.cli import main
from covfuse.estimates import Estimate
from covfuse.fusion import kalman_fuse, translate_cu
from covfuse.maxdet import solve
from covfuse.mee import TAU_LIMIT, assemble
from covfuse.psd import Tolerance, is_psd
from covfuse.svg import parse_polylines
from covfuse.union import cu_union
from covfuse.verify import random_instance, run_suite

from conftest import ACCEPTANCE_LINES

SWEEP_SEED = 2026


def report(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def sweep():
    return run_suite("equivalence", 100, SWEEP_SEED)


def test_cu_worked_example():
    start = time.perf_counter()
    r = cu_union([Estimate([0.0, 0.0], np.eye(2)), Estimate([4.0, 4.0], np.eye(2))])
    elapsed = time.perf_counter() - start
    err = max(np.abs(r.estimate.mean - [2.0, 2.0]).max(), np.abs(r.estimate.cov - [[5.0, 4.0], [4.0, 5.0]]).max())
    report("cu-worked-example", err <= 1e-6 and elapsed < 1.0, f"max entry error {err:.2e}, {elapsed:.3f} s")


def test_one_dimensional_translation():
    start = time.perf_counter()
    origin = Estimate([0.0], [[0.0]])
    direct = float(translate_cu(origin, [2.0]).cov[0, 0])
    chained = float(translate_cu(translate_cu(origin, [1.0]), [1.0]).cov[0, 0])
    elapsed = time.perf_counter() - start
    report("1d-translation", direct == 4.0 and chained == 2.0 and elapsed < 1.0,
           f"direct {direct!r}, two-step {chained!r}, {elapsed:.3f} s")


def test_theorem_sweep(sweep):
    cases = sweep["cases"]
    worst = max(c["logdet_gap"] for c in cases)
    feasible = all(c["mee_feasible_for_gcu"] and c["direct_encloses_inputs"] for c in cases)
    contained = all(c["containment"] for c in cases)
    ok = len(cases) >= 100 and not sweep["failed"] and worst <= 1e-3 and feasible and contained
    report("theorem-sweep", ok and sweep["wall_time"] < 60.0,
           f"{len(cases)} instances, failed {sweep['failed']}, worst log-det gap {worst:.2e}, "
           f"{sweep['wall_time']:.1f} s")


def test_single_enclosure_equivalence():
    out = run_suite("single-enclosure", 1000, SWEEP_SEED)
    report("single-enclosure", not out["failed"] and out["wall_time"] < 10.0,
           f"{out['passed']}/1000 agree, {out['wall_time']:.2f} s")


def test_tau_bound(sweep):
    converged = [c for c in sweep["cases"] if c["status_mee"] == "converged"]
    worst = max(c["tau_max"] for c in converged)
    ok = len(converged) == len(sweep["cases"]) and worst <= TAU_LIMIT
    report("tau-bound", ok, f"{len(converged)} converged, max tau {worst!r}")


def test_ci_joint_bound():
    out = run_suite("ci-bounds", 100, SWEEP_SEED)
    report("ci-joint-bound", not out["failed"] and out["wall_time"] < 30.0,
           f"{out['passed']}/100 instances x 50 cross-covariances, {out['wall_time']:.2f} s")


def test_kalman_dominance():
    tol = Tolerance(psd_eig=1e-9)
    violations = 0
    for k in range(100):
        es = random_instance(np.random.default_rng([SWEEP_SEED, k]))
        C = kalman_fuse(es).estimate.cov
        violations += sum(not is_psd(e.cov - C, tol) for e in es)
    report("kalman-dominance", violations == 0, f"100 instances, {violations} violations")


def test_maxdet_certification():
    p = assemble([Estimate([0.0, 0.0], np.eye(2)), Estimate([0.0, 0.0], 4 * np.eye(2))], normalize_scale=False).assembled
    a, b = solve(p), solve(p)
    err = np.abs(p.W(a.solution) - np.eye(2) / 4).max()
    identical = np.array_equal(a.solution, b.solution) and a.objective == b.objective
    ok = a.status == "optimal" and err <= 1e-7 and a.gap <= 1e-7 and identical
    report("maxdet-certification", ok, f"status {a.status}, |W - I/4| {err:.2e}, gap {a.gap:.1e}, identical {identical}")


FIVE = {
    "estimates": [
        {"mean": [0.0, 0.0], "cov": [[1.0, 0.3], [0.3, 0.5]]},
        {"mean": [3.0, 1.0], "cov": [[0.4, -0.1], [-0.1, 0.8]]},
        {"mean": [1.0, 3.5], "cov": [[0.6, 0.2], [0.2, 0.3]]},
        {"mean": [-1.5, 2.0], "cov": [[0.3, 0.0], [0.0, 0.9]]},
        {"mean": [2.0, -1.5], "cov": [[0.7, 0.25], [0.25, 0.4]]},
    ],
    "labels": ["a", "b", "c", "d", "e"],
}


def test_five_ellipse_figure(tmp_path, capsys):
    scenario = tmp_path / "five.json"
    scenario.write_text(json.dumps(FIVE))
    svgs = [tmp_path / "first.svg", tmp_path / "second.svg"]
    codes, records = [], []
    for p in svgs:
        codes.append(main(["plot", "--in", str(scenario), "--out", str(p)]))
        records.append(json.loads(capsys.readouterr().out))
    rec = records[0]
    lines = parse_polylines(svgs[0].read_text())
    sol = Estimate(rec["results"][0]["mean"], rec["results"][0]["cov"])
    P = np.linalg.inv(sol.cov)
    worst = max(np.einsum("ki,ij,kj->k", pts - sol.mean, P, pts - sol.mean).max() for pts in lines["input"])
    identical = svgs[0].read_bytes() == svgs[1].read_bytes()
    ok = codes == [0, 0] and len(lines["input"]) == 5 and worst <= 1.0 + 1e-6 and identical
    report("five-ellipse-figure", ok, f"max input vertex level {worst:.9f}, byte-identical {identical}")
