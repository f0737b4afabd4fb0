"""Command-line front end: ``levylab <command> [options]``.

Every command writes self-describing reports into ``--out``: the resolved
configuration is embedded in each JSON report, while wall-clock data goes to
``run_meta.json`` so that reruns produce byte-identical reports.

Exit status: 0 when every gate passes, 1 when a numeric gate fails, 2 for
configuration or model-spec errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import bound_report, integral_condition, symbol_derivative_check
from .density import GridSpec, auto_grid, density
from .errors import (DivergentMoment, GridUnderresolvedWarning, InvalidModel, LevyLabError,
                     NoLevyMeasure, NonIntegrable)
from .mc import SamplerConfig, empirical_tv_lower, ks_statistic, sample_increments
from .models import CATALOG, Polar, model_from_dict, model_to_dict
from .profile import phi_profile
from .rates import (LARGE_T, SMALL_T, baseline_compare, grad_norm, hypothesis_report, rate_fit,
                    theory_law, tv_distance, RateSeries)

SCHEMA_VERSION = 1
COMMANDS = ("catalog", "density", "tv-rate", "grad-rate", "verify-bounds", "mc-check")


class ConfigError(Exception):
    pass


def _t_grid(spec: str | None, regime: str | None) -> list[float]:
    if spec is None:
        lo, hi = SMALL_T if regime == "small" else LARGE_T
        return list(np.geomspace(lo, hi, 16))
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) != 3:
            raise ValueError
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--t: expected T or MIN:MAX:POINTS, got {spec!r}") from None
    if not 0 < lo < hi or n < 1:
        raise ConfigError("--t: need 0 < MIN < MAX and POINTS >= 1")
    return list(np.geomspace(lo, hi, n)) if n > 1 else [lo]


def _load_model(args):
    if args.model is None:
        raise ConfigError("--model is required")
    path = Path(args.model)
    try:
        spec = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"--model: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--model: {path} line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if args.dim is not None:
        if "dim" in spec and spec["dim"] != args.dim:
            raise ConfigError(f"--dim {args.dim} contradicts the model's dim {spec['dim']}")
        spec.setdefault("dim", args.dim)
    try:
        return model_from_dict(spec), spec
    except LevyLabError as exc:
        raise ConfigError(f"--model: {exc}") from None


def _grid(args, model, t):
    if args.N is None and args.L is None:
        return None
    auto = auto_grid(model, t)
    N = args.N or auto.N
    L = args.L or auto.L
    try:
        return GridSpec(model.dim, N, L)
    except LevyLabError as exc:
        raise ConfigError(f"grid: {exc}") from None


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    return str(x)


def _config(args, command) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func",)}
    cfg["command"] = command
    return cfg


def _report(args, command, body: dict, gates: dict) -> dict:
    gates = {k: bool(v) for k, v in gates.items()}
    return {"schema_version": SCHEMA_VERSION, "command": command, "config": _config(args, command),
            "gates": gates, **body}


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# ------------------------------------------------------------------ commands


def cmd_catalog(args, out: Path) -> dict:
    body = {"families": CATALOG}
    if not args.quiet:
        for entry in CATALOG:
            print(f"{entry['family']:13s} {json.dumps(entry['params'])}")
    _dump(out / "catalog.json", _report(args, "catalog", body, {}))
    return {}


def cmd_density(args, out: Path) -> dict:
    model, _ = _load_model(args)
    ts = _t_grid(args.t, args.regime)
    if len(ts) != 1:
        raise ConfigError("density takes a single --t value")
    t = ts[0]
    dg = density(model, t, _grid(args, model, t))
    dg.save(out / "density.bin")
    if model.dim == 1:
        dg.to_csv(out / "density.csv")
    mass_ok = abs(dg.diagnostics["mass"] - 1.0) <= 1e-4
    gates = {"mass_within_1e-4": mass_ok}
    body = {"t": t, "grid": {"dim": dg.grid.dim, "N": dg.grid.N, "L": dg.grid.L},
            "diagnostics": dg.diagnostics, "model": model_to_dict(model)}
    _dump(out / "density_report.json", _report(args, "density", body, gates))
    return gates


def _rate_command(args, out: Path, quantity: str) -> dict:
    model, _ = _load_model(args)
    regime = args.regime or "large"
    ts = sorted(_t_grid(args.t, args.regime))
    shift = args.shift if args.shift is not None else 1.0
    vals = []
    for t in ts:
        grid = _grid(args, model, t)
        if quantity == "tv":
            vals.append(tv_distance(density(model, t, grid), shift))
        else:
            vals.append(grad_norm(model, t, grid))
    law = theory_law(model, regime)
    law_vals = law(np.array(ts))
    rows = [(t, quantity, v, lv, v / lv) for t, v, lv in zip(ts, vals, law_vals)]
    _write_csv(out / f"{quantity}_series.csv", ["t", "quantity", "value", "law_value", "ratio"], rows)
    gates = {}
    body = {"regime": regime, "t_window": [ts[0], ts[-1]], "law": repr(law),
            "direction_sampling_margin": 0.02}
    try:
        series = RateSeries(quantity, np.array(ts), np.array(vals))
        gates["monotone"] = True
    except InvalidModel as exc:
        series = None
        gates["monotone"] = False
        body["monotone_violation"] = str(exc)
    if series is not None and len(ts) >= 8:
        fit = rate_fit(series, law)
        body["fit"] = fit.to_dict()
        if isinstance(fit.theory_exponent, float):
            gates["slope"] = abs(fit.slope - fit.theory_exponent) <= args.tol
        else:
            gates["drift_per_decade"] = fit.ratio_stats["drift_per_decade"] < 0.1
        try:
            body["hypothesis_report"] = hypothesis_report(law, regime)
        except LevyLabError as exc:
            body["hypothesis_report"] = {"error": str(exc)}
        if quantity == "tv":
            body["baseline_compare"] = [
                {"t": t, "value": v, "baseline": b, "flag": f}
                for t, v, b, f in baseline_compare(series, shift)]
    elif series is not None:
        body["fit"] = None
    _dump(out / f"{quantity}_fit.json", _report(args, f"{quantity}-rate", body, gates))
    if not args.quiet and "fit" in body and body["fit"]:
        print(f"slope {body['fit']['slope']:.4f}  theory {body['fit']['theory_exponent']}  "
              f"drift {body['fit']['drift']:.3g}")
    return gates


def cmd_tv_rate(args, out):
    return _rate_command(args, out, "tv")


def cmd_grad_rate(args, out):
    return _rate_command(args, out, "grad")


def cmd_verify_bounds(args, out: Path) -> dict:
    model, _ = _load_model(args)
    ts = _t_grid(args.t, args.regime)
    d = model.dim
    body, gates = {"t_window": [min(ts), max(ts)]}, {}
    prof = phi_profile(model)
    try:
        rows = [integral_condition(model, t, d + 2, prof) for t in ts]
        ratios = [r.bound_ratio for r in rows]
        body["integral_condition"] = {"m": d + 2, "t": ts, "value": [r.value for r in rows],
                                      "bound_ratio": ratios}
        gates["integral_condition_factor_3"] = max(ratios) <= 3.0 * min(ratios)
    except NonIntegrable as exc:
        body["integral_condition"] = {"error": str(exc)}
        gates["integral_condition_factor_3"] = False
    if isinstance(model, Polar):
        try:
            rep = bound_report(model, d + 1, 1, ts)
            body["bound_report"] = rep.to_dict()
            gates["envelope_bounded"] = rep.verdict["bounded"]
        except (DivergentMoment, NoLevyMeasure) as exc:
            body["bound_report"] = {"skipped": str(exc)}
        try:
            rng = np.random.default_rng(args.seed)
            xis = rng.uniform(-20, 20, size=(50, d))
            chk = symbol_derivative_check(model, xis if d > 1 else xis[:, 0])
            body["symbol_derivatives"] = {"second_moment": chk.second_bound, "violations": chk.violations}
            gates["symbol_derivatives"] = chk.violations == 0
        except DivergentMoment as exc:
            body["symbol_derivatives"] = {"skipped": str(exc)}
    _dump(out / "bounds_report.json", _report(args, "verify-bounds", body, gates))
    return gates


def cmd_mc_check(args, out: Path) -> dict:
    model, _ = _load_model(args)
    t = _t_grid(args.t, args.regime)[0]
    shift = args.shift if args.shift is not None else 1.0
    cfg = SamplerConfig(epsilon=args.epsilon, n_paths=args.n_paths, t=t, seed=args.seed)
    emp = sample_increments(model, cfg)
    dg = density(model, t, _grid(args, model, t))
    delta = np.zeros(model.dim)
    delta[0] = shift
    lower = empirical_tv_lower(emp, emp.shifted(delta), args.cells)
    lattice = tv_distance(dg, delta if model.dim > 1 else shift)
    band = 3.0 * math.sqrt(args.cells / args.n_paths)
    gates = {"tv_lower_consistent": lower <= lattice + band}
    body = {"t": t, "shift": shift, "empirical_tv_lower": lower, "lattice_tv": lattice, "noise_band": band}
    if model.dim == 1:
        ks = ks_statistic(emp, dg)
        body["ks"] = {"statistic": ks.statistic, "threshold": ks.threshold}
        gates["ks_1pct"] = ks.passed
    _dump(out / "mc_report.json", _report(args, "mc-check", body, gates))
    return gates


HANDLERS = {"catalog": cmd_catalog, "density": cmd_density, "tv-rate": cmd_tv_rate,
            "grad-rate": cmd_grad_rate, "verify-bounds": cmd_verify_bounds, "mc-check": cmd_mc_check}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levylab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"levylab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--model", help="model spec (JSON)")
        sp.add_argument("--t", help="T or MIN:MAX:POINTS (log-spaced)")
        sp.add_argument("--shift", type=float)
        sp.add_argument("--N", type=int)
        sp.add_argument("--L", type=float)
        sp.add_argument("--out", default=".")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--dim", type=int, choices=(1, 2))
        sp.add_argument("--regime", choices=("small", "large"))
        sp.add_argument("--tol", type=float, default=0.1, help="slope tolerance of the rate gate")
        sp.add_argument("--n-paths", type=int, default=100_000)
        sp.add_argument("--epsilon", type=float, default=1e-3)
        sp.add_argument("--cells", type=int, default=64)
        sp.add_argument("--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Path(args.out)
    started = time.time()
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: --out: {exc}", file=sys.stderr)
        return 2
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", GridUnderresolvedWarning)
            gates = HANDLERS[args.command](args, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LevyLabError as exc:
        print(f"gate failed: {exc.code}: {exc}", file=sys.stderr)
        status = 1
        gates = {exc.code: False}
        caught = []
    else:
        failed = [k for k, ok in gates.items() if not ok]
        for k in failed:
            print(f"gate failed: {k}", file=sys.stderr)
        status = 1 if failed else 0
    meta = {"started": started, "elapsed_s": time.time() - started, "python": platform.python_version(),
            "numpy": np.__version__, "levylab": __version__, "exit_status": status,
            "warnings": sorted({str(w.message) for w in caught})}
    _dump(out / "run_meta.json", meta)
    return status


if __name__ == "__main__":
    sys.exit(main())
