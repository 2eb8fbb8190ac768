"""``covfuse`` command-line interface.

Scenarios and run records are JSON.  Floats are written with 17 significant
digits so every record reloads to identical numbers.  Exit codes: 0 ok,
2 invalid input, 3 solver failure, 4 a theorem check failed.  Errors are
reported as a JSON object on stderr.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional

import numpy as np

from . import svg
from .errors import CovfuseError, InfeasibleError, InvalidInputError, SingularMatrixError
from .estimates import Estimate, mahalanobis
from .fusion import CIConfig, ci_fuse, kalman_fuse
from .maxdet import BarrierParams
from .mee import TheoremCheckError, contains, solve_mee
from .psd import Tolerance
from .union import UnionConfig, cu_union, gcu_direct, gcu_feasible
from .verify import LOGDET_AGREEMENT, SUITES, run_suite

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_THEOREM = 4
DEFAULT_GATE = 9.0
SEED_ENV = "COVFUSE_SEED"
CONFIG_KEYS = {"seed", "gate", "tolerance", "ci", "union", "barrier"}


class CommandError(Exception):
    """Failure carrying an exit code; ``record`` is still emitted when present."""

    def __init__(self, code: int, kind: str, message: str, record: Optional["RunRecord"] = None):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.record = record

    def as_json(self) -> dict:
        return {"error": self.kind, "message": str(self), "exit_code": self.code}


# ---------------------------------------------------------------- JSON


def _float_token(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _encode(obj, indent: Optional[int], level: int, sort_keys: bool) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float_token(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = "," if indent is None else ", "
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [_encode(v, indent, level + 1, sort_keys) for v in obj]
        if indent is None or all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + sep.join(items) + "]"
        return "[" + ",".join(pad + s for s in items) + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        keys = sorted(obj) if sort_keys else list(obj)
        colon = ":" if indent is None else ": "
        items = [json.dumps(k) + colon + _encode(obj[k], indent, level + 1, sort_keys) for k in keys]
        if indent is None:
            return "{" + ",".join(items) + "}"
        return "{" + ",".join(pad + s for s in items) + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: Optional[int] = 2, sort_keys: bool = False) -> str:
    """JSON text with floats at 17 significant digits (``NaN``/``Infinity`` tokens for non-finite)."""
    return _encode(_plain(obj), indent, 0, sort_keys)


def digest(obj) -> str:
    return "sha256:" + hashlib.sha256(dumps(obj, indent=None, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------- scenario


@dataclass
class Scenario:
    estimates: List[Estimate]
    labels: List[Optional[str]]
    config: dict
    digest: str

    @property
    def dim(self) -> int:
        return self.estimates[0].dim

    def _section(self, key: str, cls, **overrides):
        values = dict(self.config.get(key) or {})
        if not isinstance(values, dict):
            raise InvalidInputError(f"config.{key} must be an object")
        values.update(overrides)
        try:
            return cls(**values)
        except TypeError as exc:
            raise InvalidInputError(f"config.{key}: {exc}") from None

    def tolerance(self) -> Tolerance:
        return self._section("tolerance", Tolerance)

    def ci_config(self) -> CIConfig:
        return self._section("ci", CIConfig)

    def union_config(self, seed: int) -> UnionConfig:
        return self._section("union", UnionConfig, seed=seed)

    def barrier_params(self) -> BarrierParams:
        return self._section("barrier", BarrierParams)


def parse_scenario(obj) -> Scenario:
    """Validate a decoded scenario: at least one estimate, equal dimensions, known config keys."""
    if not isinstance(obj, dict) or not isinstance(obj.get("estimates"), list):
        raise InvalidInputError('scenario must be an object with an "estimates" list')
    raw = obj["estimates"]
    if not raw:
        raise InvalidInputError("scenario needs at least one estimate")
    estimates = []
    labels = list(obj.get("labels") or [])
    for i, d in enumerate(raw):
        if not isinstance(d, dict):
            raise InvalidInputError(f"estimate {i} must be an object")
        try:
            estimates.append(Estimate(np.asarray(d["mean"], dtype=float), np.asarray(d["cov"], dtype=float)))
        except KeyError as exc:
            raise InvalidInputError(f"estimate {i} is missing {exc}") from None
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"estimate {i}: {exc}") from None
        if i >= len(labels):
            labels.append(d.get("label"))
    dims = {e.dim for e in estimates}
    if len(dims) != 1:
        raise InvalidInputError(f"estimates have different dimensions {sorted(dims)}")
    config = obj.get("config") or {}
    if not isinstance(config, dict):
        raise InvalidInputError("config must be an object")
    unknown = set(config) - CONFIG_KEYS
    if unknown:
        raise InvalidInputError(f"unknown config keys {sorted(unknown)}")
    return Scenario(estimates, labels[: len(estimates)], config, digest(obj))


def _read_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CommandError(EXIT_INPUT, "input-error", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CommandError(EXIT_INPUT, "input-error", f"{path} is not valid JSON: {exc}") from None


def resolve_seed(flag: Optional[int], config_seed=None) -> int:
    """Flag, then ``COVFUSE_SEED``, then the scenario config, then 0."""
    if flag is not None:
        return int(flag)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise InvalidInputError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    if config_seed is not None:
        if isinstance(config_seed, bool) or not isinstance(config_seed, int):
            raise InvalidInputError("config.seed must be an integer")
        return config_seed
    return 0


# ---------------------------------------------------------------- records


@dataclass
class RunRecord:
    command: str
    input_digest: str
    results: List[dict]
    weights: Optional[List[float]] = None
    objective: Optional[float] = None
    status: str = "converged"
    inputs: List[dict] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return _plain(
            {
                "command": self.command,
                "input_digest": self.input_digest,
                "status": self.status,
                "results": self.results,
                "weights": self.weights,
                "objective": self.objective,
                "inputs": self.inputs,
                "diagnostics": self.diagnostics,
                "wall_time": self.wall_time,
            }
        )

    def to_json(self, indent: Optional[int] = 2) -> str:
        return dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        try:
            return cls(
                command=d["command"],
                input_digest=d["input_digest"],
                results=d["results"],
                weights=d.get("weights"),
                objective=d.get("objective"),
                status=d.get("status", "converged"),
                inputs=d.get("inputs", []),
                diagnostics=d.get("diagnostics", {}),
                wall_time=d.get("wall_time", 0.0),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"not a run record: missing {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls.from_dict(json.loads(text))

    def estimates(self) -> List[Estimate]:
        return [Estimate(r["mean"], r["cov"]) for r in self.results]


def _est(e: Estimate) -> dict:
    return {"mean": e.mean.tolist(), "cov": e.cov.tolist()}


def _record(command, scenario: Scenario, estimates, weights, objective, status, diagnostics) -> RunRecord:
    diagnostics = dict(diagnostics)
    if any(scenario.labels):
        diagnostics["labels"] = scenario.labels
    return RunRecord(
        command=command,
        input_digest=scenario.digest,
        results=[_est(e) for e in estimates],
        weights=None if weights is None else [float(w) for w in weights],
        objective=None if objective is None else float(objective),
        status=status,
        inputs=[_est(e) for e in scenario.estimates],
        diagnostics=diagnostics,
    )


def _union_diagnostics(result) -> dict:
    info = dict(result.info)
    out = {"active": list(result.active)}
    report = info.pop("report", None)
    if report is not None:
        out["solver"] = {
            "status": report.status,
            "newton_iterations": report.iterations,
            "kkt_residual": report.kkt_residual,
            "gap": report.gap,
            "t": report.t,
        }
    for key in ("tau", "slacks", "nfev", "nested"):
        if key in info:
            out[key] = info[key]
    return out


# ---------------------------------------------------------------- commands


def cmd_fuse(scenario: Scenario, method: str, seed: int) -> RunRecord:
    tol = scenario.tolerance()
    if method == "kf":
        r = kalman_fuse(scenario.estimates, tol)
    elif method == "ci":
        r = ci_fuse(scenario.estimates, scenario.ci_config(), tol)
    else:
        raise InvalidInputError(f"unknown fusion method {method!r}")
    weights = None if r.weights is None else r.weights.weights
    return _record("fuse", scenario, [r.estimate], weights, r.objective, r.status, {"method": method})


def _run_union(scenario: Scenario, method: str, seed: int):
    tol = scenario.tolerance()
    if method == "cu":
        return cu_union(scenario.estimates, scenario.union_config(seed), tol)
    if method == "gcu-direct":
        return gcu_direct(scenario.estimates, scenario.union_config(seed), tol)
    if method == "gcu-mee":
        return solve_mee(scenario.estimates, scenario.barrier_params(), tol)
    raise InvalidInputError(f"unknown union method {method!r}")


def cross_check(scenario: Scenario, seed: int) -> dict:
    """Run both GCU solvers; report the log-det gap and whether each solution is feasible for the other."""
    tol = scenario.tolerance()
    direct = gcu_direct(scenario.estimates, scenario.union_config(seed), tol)
    mee = solve_mee(scenario.estimates, scenario.barrier_params(), tol)
    mee_feasible, witnesses = gcu_feasible(mee.estimate, scenario.estimates, tol)
    direct_feasible = all(contains(direct.estimate, e, tol)[0] for e in scenario.estimates)
    gap = abs(direct.objective - mee.objective)
    return {
        "logdet_direct": direct.objective,
        "logdet_mee": mee.objective,
        "logdet_gap": gap,
        "mee_feasible_for_gcu": mee_feasible,
        "gcu_omegas_for_mee": list(witnesses.weights),
        "direct_feasible_for_mee": direct_feasible,
        "status_direct": direct.status,
        "status_mee": mee.status,
        "agree": bool(gap <= LOGDET_AGREEMENT and mee_feasible and direct_feasible),
    }


def cmd_union(scenario: Scenario, method: str, seed: int, check: bool = False) -> RunRecord:
    r = _run_union(scenario, method, seed)
    weights = None if r.omegas is None else r.omegas.weights
    diagnostics = {"method": method, **_union_diagnostics(r)}
    if check:
        diagnostics["cross_check"] = cross_check(scenario, seed)
    return _record("union", scenario, [r.estimate], weights, r.objective, r.status, diagnostics)


def cmd_deconflict(scenario: Scenario, gate: float, union: str, seed: int) -> RunRecord:
    """Union when the largest pairwise Mahalanobis distance exceeds ``gate``, CI fusion otherwise."""
    if not (math.isfinite(gate) and gate >= 0):
        raise InvalidInputError(f"gate must be a finite non-negative number, got {gate!r}")
    distances = [
        {"i": i, "j": j, "distance": mahalanobis(a, b)}
        for (i, a), (j, b) in combinations(enumerate(scenario.estimates), 2)
    ]
    largest = max((d["distance"] for d in distances), default=0.0)
    if largest > gate:
        method = "cu" if union == "cu" else "gcu-mee"
        r = _run_union(scenario, method, seed)
        branch = f"union-{union}"
        weights = None if r.omegas is None else r.omegas.weights
        extra = {"method": method, **_union_diagnostics(r)}
    else:
        r = ci_fuse(scenario.estimates, scenario.ci_config(), scenario.tolerance())
        branch = "fusion-ci"
        weights = r.weights.weights
        extra = {"method": "ci"}
    diagnostics = {"branch": branch, "gate": gate, "max_distance": largest, "distances": distances, **extra}
    return _record("deconflict", scenario, [r.estimate], weights, r.objective, r.status, diagnostics)


def cmd_verify(suite: str, n: int, seed: int, trace: bool = False) -> RunRecord:
    if n < 1:
        raise InvalidInputError("--n must be at least 1")
    out = run_suite(suite, n, seed, trace)
    wall = out.pop("wall_time")
    status = "converged" if not out["failed"] else "theorem-violation"
    rec = RunRecord(
        command="verify",
        input_digest=digest({"suite": suite, "n": n, "seed": seed}),
        results=[],
        status=status,
        diagnostics=out,
    )
    rec.wall_time = wall
    return rec


def cmd_plot(source: dict, out_path: str, method: str, seed: int) -> RunRecord:
    """Render a run record (its inputs and first result) or a scenario (solved with ``method``)."""
    if isinstance(source, dict) and "command" in source:
        rec = RunRecord.from_dict(source)
        inputs = [Estimate(d["mean"], d["cov"]) for d in rec.inputs]
        if not rec.results:
            raise InvalidInputError("run record has no result estimate to plot")
        solution = rec.estimates()[0]
        labels = rec.diagnostics.get("labels")
        in_digest = digest(source)
        status = rec.status
    else:
        scenario = parse_scenario(source)
        if scenario.dim != 2:
            raise InvalidInputError(f"plotting is 2D only, got dimension {scenario.dim}")
        r = _run_union(scenario, method, seed)
        inputs, solution, labels = scenario.estimates, r.estimate, scenario.labels
        in_digest = scenario.digest
        status = r.status
    if solution.dim != 2 or any(e.dim != 2 for e in inputs):
        raise InvalidInputError("plotting is 2D only")
    text = svg.render(inputs, solution, labels)
    try:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CommandError(EXIT_INPUT, "output-error", f"cannot write {out_path}: {exc.strerror}") from None
    return RunRecord(
        command="plot",
        input_digest=in_digest,
        results=[_est(solution)],
        status=status,
        inputs=[_est(e) for e in inputs],
        diagnostics={"svg": out_path, "svg_digest": "sha256:" + hashlib.sha256(text.encode()).hexdigest()},
    )


# ---------------------------------------------------------------- dispatch


def _classify(exc: BaseException) -> CommandError:
    if isinstance(exc, CommandError):
        return exc
    if isinstance(exc, TheoremCheckError):
        return CommandError(EXIT_THEOREM, "theorem-violation", str(exc))
    if isinstance(exc, InfeasibleError):
        return CommandError(EXIT_SOLVER, "solver-failure", str(exc))
    if isinstance(exc, (InvalidInputError, SingularMatrixError, CovfuseError)):
        return CommandError(EXIT_INPUT, "input-error", str(exc))
    if isinstance(exc, np.linalg.LinAlgError):
        return CommandError(EXIT_SOLVER, "solver-failure", f"linear algebra failure: {exc}")
    raise exc


def run_scenario(command: str, obj, opts: dict):
    """Run one scenario command; returns ``(exit_code, record dict or None, error dict or None)``."""
    start = time.perf_counter()
    try:
        scenario = parse_scenario(obj)
        seed = resolve_seed(opts.get("seed"), scenario.config.get("seed"))
        if command == "fuse":
            rec = cmd_fuse(scenario, opts["method"], seed)
        elif command == "union":
            rec = cmd_union(scenario, opts["method"], seed, opts.get("cross_check", False))
        elif command == "deconflict":
            gate = opts.get("gate")
            if gate is None:
                gate = scenario.config.get("gate", DEFAULT_GATE)
            try:
                gate = float(gate)
            except (TypeError, ValueError):
                raise InvalidInputError(f"gate must be a number, got {gate!r}") from None
            rec = cmd_deconflict(scenario, gate, opts.get("union", "cu"), seed)
        else:
            raise InvalidInputError(f"unknown command {command!r}")
    except Exception as exc:  # noqa: BLE001 - mapped to an exit code, re-raised when unknown
        err = _classify(exc)
        return err.code, None, err.as_json()
    rec.wall_time = time.perf_counter() - start
    return _outcome(rec)


def _outcome(rec: RunRecord):
    check = rec.diagnostics.get("cross_check")
    if check is not None and not check["agree"]:
        err = CommandError(EXIT_THEOREM, "theorem-violation", "GCU solvers disagree: " + dumps(check, indent=None))
        return err.code, rec.to_dict(), err.as_json()
    if rec.status == "theorem-violation":
        failed = rec.diagnostics.get("failed", [])
        err = CommandError(EXIT_THEOREM, "theorem-violation", f"{len(failed)} case(s) failed: {failed[:20]}")
        return err.code, rec.to_dict(), err.as_json()
    if rec.status not in ("converged", "optimal"):
        err = CommandError(EXIT_SOLVER, "solver-failure", f"solver status {rec.status}")
        return err.code, rec.to_dict(), err.as_json()
    return EXIT_OK, rec.to_dict(), None


def _batch_worker(args):
    return run_scenario(*args)


def _emit(code: int, payload, error, out_path: Optional[str]) -> int:
    if payload is not None:
        text = dumps(payload)
        sys.stdout.write(text + "\n")
        if out_path:
            try:
                with open(out_path, "w", encoding="utf-8") as fh:
                    fh.write(text + "\n")
            except OSError as exc:
                err = CommandError(EXIT_INPUT, "output-error", f"cannot write {out_path}: {exc.strerror}")
                sys.stderr.write(dumps(err.as_json(), indent=None) + "\n")
                return EXIT_INPUT
    if error is not None:
        sys.stderr.write(dumps(error, indent=None) + "\n")
    return code


def _scenario_command(command: str, args, opts: dict) -> int:
    if args.batch:
        obj = _read_json(args.batch)
        items = obj.get("scenarios") if isinstance(obj, dict) else obj
        if not isinstance(items, list) or not items:
            raise CommandError(EXIT_INPUT, "input-error", 'batch file must hold a non-empty list or {"scenarios": [...]}')
        jobs = [(command, item, opts) for item in items]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                outcomes = list(pool.map(_batch_worker, jobs))
        else:
            outcomes = [_batch_worker(j) for j in jobs]
        entries = [rec if err is None else {"error": err, "record": rec} for _, rec, err in outcomes]
        code = max(c for c, _, _ in outcomes)
        failed = [i for i, (c, _, _) in enumerate(outcomes) if c != EXIT_OK]
        error = None
        if failed:
            error = {"error": "batch", "message": f"scenarios {failed} failed", "exit_code": code}
        return _emit(code, entries, error, args.out)
    if not args.inp:
        raise CommandError(EXIT_INPUT, "input-error", "one of --in or --batch is required")
    code, rec, err = run_scenario(command, _read_json(args.inp), opts)
    return _emit(code, rec, err, args.out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        err = CommandError(EXIT_INPUT, "usage-error", f"{self.prog}: {message}")
        sys.stderr.write(dumps(err.as_json(), indent=None) + "\n")
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="covfuse", description="Covariance fusion and covariance union.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_io(sp):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--in", dest="inp", metavar="PATH", help="scenario JSON")
        src.add_argument("--batch", metavar="PATH", help="JSON list of scenarios")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for --batch")
        sp.add_argument("--out", metavar="PATH", help="also write the run record here")
        sp.add_argument("--seed", type=int, help=f"overrides {SEED_ENV} and config.seed")

    fuse = sub.add_parser("fuse", help="Kalman or Covariance Intersection fusion")
    fuse.add_argument("--method", choices=["kf", "ci"], default="ci")
    scenario_io(fuse)

    union = sub.add_parser("union", help="CU or GCU union")
    union.add_argument("--method", choices=["cu", "gcu-direct", "gcu-mee"], default="gcu-mee")
    union.add_argument("--cross-check", action="store_true", help="run both GCU solvers and compare")
    scenario_io(union)

    dec = sub.add_parser("deconflict", help="Mahalanobis-gated union or CI fusion")
    dec.add_argument("--gate", type=float, help=f"squared-distance threshold (default {DEFAULT_GATE})")
    dec.add_argument("--union", choices=["cu", "gcu"], default="cu", help="union used above the gate")
    scenario_io(dec)

    plot = sub.add_parser("plot", help="SVG of 2D input and solution contours")
    plot.add_argument("--in", dest="inp", required=True, metavar="PATH", help="run record or scenario JSON")
    plot.add_argument("--out", required=True, metavar="PATH", help="SVG output path")
    plot.add_argument("--method", choices=["cu", "gcu-direct", "gcu-mee"], default="gcu-mee",
                      help="union solver when --in is a scenario")
    plot.add_argument("--seed", type=int)

    ver = sub.add_parser("verify", help="seeded property sweeps")
    ver.add_argument("--suite", choices=sorted(SUITES), required=True)
    ver.add_argument("--n", type=int, default=100)
    ver.add_argument("--seed", type=int)
    ver.add_argument("--trace", action="store_true", help="include per-iteration barrier traces")
    ver.add_argument("--out", metavar="PATH")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("fuse", "union", "deconflict"):
            opts = {"seed": args.seed}
            if args.command in ("fuse", "union"):
                opts["method"] = args.method
            if args.command == "union":
                opts["cross_check"] = args.cross_check
            if args.command == "deconflict":
                opts["gate"] = args.gate
                opts["union"] = args.union
            if args.jobs < 1:
                raise InvalidInputError("--jobs must be at least 1")
            return _scenario_command(args.command, args, opts)
        if args.command == "plot":
            start = time.perf_counter()
            source = _read_json(args.inp)
            config_seed = (source.get("config") or {}).get("seed") if isinstance(source, dict) else None
            rec = cmd_plot(source, args.out, args.method, resolve_seed(args.seed, config_seed))
            rec.wall_time = time.perf_counter() - start
            return _emit(*_outcome(rec), None)
        if args.command == "verify":
            start = time.perf_counter()
            rec = cmd_verify(args.suite, args.n, resolve_seed(args.seed), args.trace)
            rec.wall_time = time.perf_counter() - start
            return _emit(*_outcome(rec), args.out)
    except Exception as exc:  # noqa: BLE001
        err = _classify(exc)
        return _emit(err.code, None, err.as_json(), None)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
