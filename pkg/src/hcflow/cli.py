"""Command-line harness: ``flow``, ``sweep``, ``verify``, ``classify``, ``report``.

Exit codes: 0 ok, 2 bad configuration, 3 integration failure, 4 verification
failure, 5 no data.  ``HCF_OUT`` overrides the output directory.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import re
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from hcflow import __version__
from hcflow.analysis import (
    classify_growth,
    einstein_residual,
    estimate_blowup_time,
    pinching_series,
)
from hcflow.errors import HCFError, IntegrationError
from hcflow.flow import BLOWUP, IntegratorConfig, integrate
from hcflow.forms import HermitianForm
from hcflow.geometry import (
    build_model,
    random_points,
    relative_deviation,
    theta_brackets,
    theta_coordinate,
    theta_from_sharp,
)
from hcflow.io import (
    parse_initial_form,
    random_pd,
    trajectory_sidecar,
    write_json,
    write_trajectory_csv,
)
from hcflow.lie import classify_algebra, construct_algebra, killing_metric, parse_spec, spec_to_string

log = logging.getLogger("hcflow")

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_VERIFY, EXIT_NO_DATA = 0, 2, 3, 4, 5

VERIFY_TOL = {"analytic": 1e-10, "finite_difference": 1e-5, "sharp": 1e-10}


class ConfigError(HCFError, ValueError):
    pass


@dataclass
class RunConfig:
    algebra: str = "su2c"
    h0: str = "identity"
    t_end: float | None = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    blowup_norm: float = 1e12
    min_step: float = 1e-14
    max_steps: int = 1_000_000
    sample_interval: float | None = None
    out: str = "runs"
    seed: int = 0

    def integrator(self) -> IntegratorConfig:
        interval = self.sample_interval
        if interval is None and self.t_end is not None:
            interval = self.t_end / 1000
        return IntegratorConfig(
            rel_tol=self.rel_tol, abs_tol=self.abs_tol, t_end=self.t_end,
            max_steps=self.max_steps, blowup_norm=self.blowup_norm,
            min_step=self.min_step, sample_interval=interval,
        )

    def identity_key(self) -> str:
        snap = {k: v for k, v in asdict(self).items() if k != "out"}
        return hashlib.sha256(json.dumps(snap, sort_keys=True).encode()).hexdigest()[:10]


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_")


def pinching_target(alg):
    """Identity (the Killing direction in the normalized basis) for su2c; otherwise none."""
    return HermitianForm.identity(alg.dim) if alg.spec.get("kind") == "su2c" else None


def plot_script(csv_name: str, title: str) -> str:
    return "\n".join([
        "# gnuplot script; run with: gnuplot -p plot.gp",
        'set datafile separator ","',
        "set key autotitle columnhead",
        f'set title "{title}"',
        "set xlabel 't'",
        "set logscale y",
        f"plot '{csv_name}' using 1:(column('sup_norm')) with lines title 'sup norm'",
        "",
    ])


def run_flow(cfg: RunConfig) -> dict:
    """Integrate one configuration and write its outputs; returns the run record.

    Raises ConfigError for unusable configs and IntegrationError (after
    writing partial outputs) when the integrator fails.
    """
    start = time.perf_counter()
    try:
        alg = construct_algebra(cfg.algebra)
        h0 = parse_initial_form(cfg.h0, alg, default_seed=cfg.seed)
        icfg = cfg.integrator()
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(str(exc)) from exc

    run_dir = Path(cfg.out) / f"{_slug(alg.name)}-{cfg.identity_key()}"
    run_dir.mkdir(parents=True, exist_ok=True)
    failure = None
    try:
        traj = integrate(alg, h0, icfg)
    except IntegrationError as exc:
        traj, failure = exc.trajectory, exc

    target = pinching_target(alg)
    extra = {}
    record = {
        "version": __version__,
        "config": asdict(cfg),
        "algebra": alg.spec,
        "algebra_name": alg.name,
        "termination": {"kind": traj.termination.kind, "t_last": traj.termination.t_last},
        "files": {"trajectory": "trajectory.csv", "sidecar": "trajectory.json", "plot": "plot.gp"},
    }
    if target is not None:
        pinch = pinching_series(traj, target)
        extra["pinching"] = pinch
        record["pinching_floor"] = float(np.min(pinch))
        record["pinching_last"] = float(pinch[-1])

    write_trajectory_csv(traj, run_dir / "trajectory.csv", extra)
    write_json(trajectory_sidecar(traj), run_dir / "trajectory.json")
    (run_dir / "plot.gp").write_text(plot_script("trajectory.csv", alg.name))

    try:
        growth = classify_growth(traj).to_dict()
    except HCFError as exc:
        growth = {"error": str(exc)}
    write_json(growth, run_dir / "growth.json")
    record["growth"] = growth
    record["files"]["growth"] = "growth.json"

    final = traj.final
    if np.any(final.m != 0):
        einstein = einstein_residual(alg, final).to_dict()
        write_json(einstein, run_dir / "einstein.json")
        record["einstein"] = einstein
        record["files"]["einstein"] = "einstein.json"
    if traj.termination.kind == BLOWUP:
        try:
            record["blowup_time"] = estimate_blowup_time(traj)
        except (ValueError, HCFError) as exc:
            record["blowup_time_error"] = str(exc)
    record["wall_time"] = time.perf_counter() - start
    record["run_dir"] = str(run_dir)
    write_json(record, run_dir / "record.json")
    if failure is not None:
        raise IntegrationError(str(failure), traj)
    return record


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

_FLAG_FIELDS = {f.name for f in fields(RunConfig)}


def _load_config(args) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        try:
            values.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for name in _FLAG_FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if "out" not in values or os.environ.get("HCF_OUT"):
        values["out"] = os.environ.get("HCF_OUT", values.get("out", "runs"))
    if isinstance(values.get("algebra"), dict):
        values["algebra"] = json.dumps(values["algebra"], sort_keys=True)
    unknown = set(values) - _FLAG_FIELDS - {"count", "diagonal", "scale", "jobs"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return RunConfig(**{k: v for k, v in values.items() if k in _FLAG_FIELDS})
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _add_run_flags(p):
    p.add_argument("--algebra", help="algebra spec, e.g. su2c, strict_upper:3, borel:2, abelian:4")
    p.add_argument("--h0", help="identity | diag:a,b,... | random_pd(seed,scale) | random_diag(seed,scale) | form.json")
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--abs-tol", dest="abs_tol", type=float)
    p.add_argument("--blowup-norm", dest="blowup_norm", type=float)
    p.add_argument("--min-step", dest="min_step", type=float)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--sample-interval", dest="sample_interval", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (HCF_OUT overrides)")
    p.add_argument("--config", help="JSON file with the same keys as the flags")


def cmd_flow(args) -> int:
    try:
        cfg = _load_config(args)
        record = run_flow(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    growth = record["growth"]
    summary = {k: v for k, v in growth.items() if k in ("regime", "degree", "rate", "t_star", "error")}
    print(json.dumps({"run_dir": record["run_dir"], "termination": record["termination"], **summary}))
    return EXIT_OK


def _sweep_worker(cfg_dict: dict) -> dict:
    cfg = RunConfig(**cfg_dict)
    try:
        rec = run_flow(cfg)
        growth = rec["growth"]
        return {
            "seed": cfg.seed,
            "h0": cfg.h0,
            "run_dir": rec["run_dir"],
            "regime": growth.get("regime"),
            "growth": growth,
            "pinching_floor": rec.get("pinching_floor"),
            "blowup_time": rec.get("blowup_time"),
            "termination": rec["termination"]["kind"],
        }
    except HCFError as exc:
        return {"seed": cfg.seed, "h0": cfg.h0, "error": f"{type(exc).__name__}: {exc}"}


def sweep_configs(base: RunConfig, count: int, diagonal: bool, scale: float, root: Path) -> list[dict]:
    kind = "random_diag" if diagonal else "random_pd"
    out = []
    for i in range(count):
        seed = base.seed + i
        cfg = asdict(base)
        cfg.update(seed=seed, h0=f"{kind}({seed},{scale!r})", out=str(root / "runs"))
        out.append(cfg)
    return out


def cmd_sweep(args) -> int:
    try:
        base = _load_config(args)
        construct_algebra(base.algebra)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.count < 1:
        print("config error: --count must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    root = Path(base.out) / f"sweep-{_slug(spec_to_string(parse_spec(base.algebra)))}-seed{base.seed}"
    root.mkdir(parents=True, exist_ok=True)
    configs = sweep_configs(base, args.count, args.diagonal, args.scale, root)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_worker, configs))
    else:
        results = [_sweep_worker(c) for c in configs]

    ok = [r for r in results if "error" not in r]
    summary = {
        "algebra": base.algebra,
        "count": args.count,
        "succeeded": len(ok),
        "failed": len(results) - len(ok),
        "regimes": dict(sorted(Counter(r["regime"] for r in ok).items(), key=lambda kv: str(kv[0]))),
        "pinching_floors": [r["pinching_floor"] for r in ok if r.get("pinching_floor") is not None],
        "blowup_times": [r["blowup_time"] for r in ok if r.get("blowup_time") is not None],
        "runs": results,
    }
    write_json(summary, root / "summary.json")
    print(json.dumps({k: summary[k] for k in ("algebra", "count", "succeeded", "failed", "regimes")}))
    return EXIT_OK if ok else EXIT_INTEGRATION


def verify_model(model_spec: str, trials: int, seed: int) -> dict:
    """Compare the coordinate, bracket and ``#`` routes for Theta on random samples."""
    model = build_model(model_spec)
    rng = np.random.default_rng(seed)
    points = random_points(model, trials, rng)
    worst = {key: (0.0, None) for key in VERIFY_TOL}
    for z in points:
        h = random_pd(model.alg.dim, rng)
        tb = theta_brackets(model, h, z)
        devs = {
            "analytic": relative_deviation(theta_coordinate(model, h, z), tb),
            "finite_difference": relative_deviation(theta_coordinate(model, h, z, method="fd"), tb),
            "sharp": relative_deviation(theta_from_sharp(model, h, z), tb),
        }
        for key, d in devs.items():
            if d > worst[key][0]:
                worst[key] = (d, {"point": [[v.real, v.imag] for v in z], "form": h.to_entries()})
    ident = HermitianForm.identity(model.alg.dim)
    thetas = [theta_brackets(model, ident, z) for z in points[: min(10, len(points))]]
    spread = max(relative_deviation(th, thetas[0]) for th in thetas)
    zero = all(np.linalg.norm(th) == 0.0 for th in thetas)
    return {
        "model": model.name,
        "sign_convention": model.sign_convention,
        "trials": trials,
        "max_deviation": {k: v[0] for k, v in worst.items()},
        "worst_case": {k: v[1] for k, v in worst.items() if v[0] > VERIFY_TOL[k]},
        "passed": all(worst[k][0] <= VERIFY_TOL[k] for k in VERIFY_TOL),
        "theta_identity_constant": bool(spread < 1e-10),
        "theta_identity_zero": bool(zero),
    }


def cmd_verify(args) -> int:
    try:
        report = verify_model(args.model, args.trials, args.seed)
    except (ValueError, HCFError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def cmd_classify(args) -> int:
    try:
        alg = construct_algebra(args.algebra)
    except (ValueError, HCFError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cls = classify_algebra(alg)
    kill = killing_metric(alg)
    print(json.dumps({
        "algebra": alg.name,
        "dim": alg.dim,
        "basis": list(alg.basis_labels),
        "kind": cls.kind,
        "lower_central_dims": cls.lower_central_dims,
        "derived_dims": cls.derived_dims,
        "killing_is_zero": bool(np.allclose(kill, 0.0, atol=1e-12)),
        "warning": cls.warning,
    }, indent=2))
    return EXIT_OK


def _row(record: dict) -> dict:
    growth = record.get("growth", {})
    param = growth.get("degree", growth.get("rate", growth.get("t_star")))
    return {
        "algebra": record.get("algebra_name") or spec_to_string(record["algebra"]),
        "seed": int(record["config"]["seed"]),
        "h0": record["config"]["h0"],
        "regime": growth.get("regime", "error"),
        "parameter": param,
        "t_star": record.get("blowup_time"),
        "einstein_residual": record.get("einstein", {}).get("residual"),
        "pinching_floor": record.get("pinching_floor"),
    }


def _cell(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def build_report(directory: Path) -> tuple[str, list[dict], list[str]]:
    rows, bad = [], []
    for path in sorted(directory.rglob("record.json")):
        try:
            record = json.loads(path.read_text())
            rows.append(_row(record))
            (path.parent / "plot.gp").write_text(plot_script("trajectory.csv", rows[-1]["algebra"]))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            bad.append(f"{path}: {exc}")
    rows.sort(key=lambda r: (r["algebra"], r["seed"]))
    cols = ["algebra", "seed", "h0", "regime", "parameter", "t_star", "einstein_residual", "pinching_floor"]
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    lines += ["| " + " | ".join(_cell(r[c]) for c in cols) + " |" for r in rows]
    if bad:
        lines += ["", "Unreadable records:", *[f"- {b}" for b in bad]]
    return "\n".join(lines) + "\n", rows, bad


def cmd_report(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        print(f"no such directory: {directory}", file=sys.stderr)
        return EXIT_NO_DATA
    text, rows, bad = build_report(directory)
    for b in bad:
        print(f"skipped {b}", file=sys.stderr)
    if not rows:
        print("no valid run records found", file=sys.stderr)
        return EXIT_NO_DATA
    (directory / "report.md").write_text(text)
    print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hcflow", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flow", help="integrate one initial form and classify its growth")
    _add_run_flags(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("sweep", help="run many seeded random initial forms")
    _add_run_flags(p)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--diagonal", action="store_true", help="random diagonal forms instead of dense")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="cross-check the Theta formulas on a model")
    p.add_argument("--model", required=True, help="hopf_sl2 | heisenberg_left | translations:n | JSON spec")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("classify", help="nilpotent / solvable / non-solvable classification")
    p.add_argument("--algebra", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("report", help="summarize run records in a directory")
    p.add_argument("directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
