"""Command-line interface: ``doublegg <subcommand> ...``.

Subcommands
-----------
pdf, cdf   tabulate the density or distribution of one channel
sample     draw irradiance samples
ber        one BER curve by quadrature, closed form or Monte Carlo
gain       SNR gains at a target BER between curves of a CSV file
check      cross-validate closed form, quadrature and Monte Carlo
run        execute a scenario file (see ``scenario.schema.json``)

Exit status is 0 on success, 1 when ``check`` finds a disagreement, 2 for
invalid arguments or scenario files and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from scipy import optimize

from . import ber_analytic as ba
from . import ber_numeric as bn
from . import channel as ch
from . import montecarlo as mc
from .specfun import MeijerGError

EXIT_CHECK = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

SCENARIO_DEFAULT_SNR = {"start": 0.0, "stop": 90.0, "step": 1.0}


class UsageError(Exception):
    pass


def _workers() -> int:
    env = os.environ.get("DOUBLEGG_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"DOUBLEGG_WORKERS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


# -- parsing helpers ------------------------------------------------------------------


def _channel(spec) -> ch.DoubleGGParams:
    if isinstance(spec, str):
        try:
            return ch.preset(spec)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    small = ch.GenGammaParams(**spec["small"])
    large = ch.GenGammaParams(**spec["large"])
    try:
        if "p" in spec and "q" in spec:
            return ch.DoubleGGParams(small, large, spec["p"], spec["q"])
        return ch.DoubleGGParams.from_factors(small, large)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _snr_list(spec) -> list[float]:
    if isinstance(spec, dict):
        n = int(math.floor((spec["stop"] - spec["start"]) / spec["step"] + 1e-9)) + 1
        return [round(spec["start"] + i * spec["step"], 10) for i in range(n)]
    return [float(v) for v in spec]


def _range_arg(text: str, count_last: bool):
    """``start:stop:n`` (count) or ``start:stop:step``."""
    try:
        a, b, c = text.split(":")
        start, stop = float(a), float(b)
        if count_last:
            out = np.linspace(start, stop, int(c))
        elif float(c) > 0:
            out = np.asarray(_snr_list({"start": start, "stop": stop, "step": float(c)}))
        else:
            raise ValueError
    except ValueError:
        raise UsageError(f"expected start:stop:{'count' if count_last else 'step'}, got {text!r}") from None
    if out.size == 0 or (out.size > 1 and np.any(np.diff(out) <= 0)):
        raise UsageError(f"empty or decreasing range {text!r}")
    return out


def _link_from_args(args) -> bn.LinkConfig:
    if args.link:
        rows = [[_channel(tok.strip()) for tok in row.split(",")] for row in args.link.split(";")]
    else:
        rows = [[_channel(args.channel)] * args.n for _ in range(args.m)]
    try:
        return bn.LinkConfig(rows, combiner=args.combiner)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_link_args(p):
    p.add_argument("--channel", default="b", help="preset a..d for i.i.d. links (default b)")
    p.add_argument("--n", type=int, default=1, help="receive apertures")
    p.add_argument("--m", type=int, default=1, help="transmit apertures")
    p.add_argument("--link", help="explicit channel matrix, rows ';'-separated: 'a,b' is 1x2, 'a;b' is 2x1")
    p.add_argument("--combiner", default="OC", choices=bn.COMBINERS)


def _add_mc_args(p):
    p.add_argument("--draws", type=int, default=10_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--streams", type=int, default=None, help="worker threads (default: DOUBLEGG_WORKERS or CPU count)")
    p.add_argument("--bit-level", action="store_true", help="simulate bits instead of averaging the conditional BER")


def _mc_settings(args) -> mc.McSettings:
    try:
        return mc.McSettings(
            draws=args.draws, seed=args.seed, streams=args.streams or _workers(), bit_level=args.bit_level
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- curves -------------------------------------------------------------------------


def _closed_curve(cfg: bn.LinkConfig, snr_db) -> bn.BerCurve:
    if cfg.M != 1 or cfg.combiner != "OC":
        raise UsageError("the closed form covers single-transmitter optimal combining only")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ba.RationalNudgeWarning)
        ctxs = [ba.lambda_context(c) for c in cfg.channels[0]]
    db = np.asarray(snr_db, dtype=float)
    vals = ba.ber_simo_oc_closed(ctxs, bn.db_to_linear(db))
    prov = {
        "approximation": "Q(x) ~ exp(-x^2/2)/12 + exp(-2x^2/3)/4",
        "l_k": [[c.l, c.k] for c in ctxs],
        "gamma2_used": [c.channel.gg2.gamma for c in ctxs],
        "gamma2_rel_shift": [c.rational.rel_error for c in ctxs],
    }
    return bn.BerCurve(db, np.atleast_1d(vals), None, "closed", cfg.config_id, prov)


def _curve(cfg, method, snr_db, settings):
    if method == "quadrature":
        return bn.ber_curve(cfg, snr_db)
    if method == "closed":
        return _closed_curve(cfg, snr_db)
    return mc.mc_curve(cfg, settings, snr_db)


def _numeric_message(exc, snr_db) -> str:
    msg = f"{type(exc).__name__}: {exc}"
    est, err = getattr(exc, "estimate", None), getattr(exc, "error", None)
    if est is not None and err is not None:
        est, err = np.atleast_1d(est), np.atleast_1d(err)
        if est.size == len(snr_db):
            bad = [
                f"{snr_db[i]:g} dB (value {est[i]:.3e}, error {err[i]:.1e})"
                for i in range(est.size)
                if err[i] > 1e-4 * abs(est[i])
            ]
            msg += "; failing points: " + ", ".join(bad)
    return msg


# -- subcommands ---------------------------------------------------------------------


def cmd_table(args, out) -> int:
    c = _channel(args.channel)
    grid = _range_arg(args.grid, count_last=True)
    if args.log:
        grid = np.geomspace(grid[0], grid[-1], grid.size)
    if np.any(grid <= 0):
        raise UsageError("irradiance grid must be positive")
    fn = ch.pdf if args.command == "pdf" else ch.cdf
    vals = fn(c, grid)
    out.write(f"irradiance,{args.command}\n")
    for x, v in zip(grid, vals):
        out.write(f"{float(x)!r},{float(v)!r}\n")
    return 0


def cmd_sample(args, out) -> int:
    if args.count < 1:
        raise UsageError("--count must be positive")
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    for v in ch.sample(_channel(args.channel), rng, args.count):
        out.write(f"{float(v)!r}\n")
    return 0


def cmd_ber(args, out) -> int:
    cfg = _link_from_args(args)
    snr_db = _range_arg(args.snr, count_last=False)
    curve = _curve(cfg, args.method, snr_db, _mc_settings(args) if args.method == "montecarlo" else None)
    bn.write_csv([curve], out)
    return 0


def cmd_gain(args, out) -> int:
    with open(args.csv, newline="") as fh:
        curves = bn.read_csv(fh)
    ref = [c for c in curves if c.config_id == args.reference and c.method == args.method]
    if not ref:
        raise UsageError(f"no {args.method} curve with config_id {args.reference!r} in {args.csv}")
    out.write("reference,config_id,method,snr_db_at_target,gain_db\n")
    status = 0
    for c in curves:
        if c.method != args.method or c.config_id == args.reference:
            continue
        if args.new and c.config_id not in args.new:
            continue
        try:
            at = mc.snr_at_ber(c, args.target)
            gain = mc.gain_at_target(ref[0], c, args.target)
            out.write(f"{args.reference},{c.config_id},{c.method},{at:.3f},{gain:.3f}\n")
        except mc.RangeError as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = EXIT_NUMERIC
    return status


def cmd_check(args, out) -> int:
    cfg = _link_from_args(args)
    if cfg.M != 1:
        raise UsageError("check covers single-transmitter links")
    snr_db = [float(v) for v in args.snr.split(",")]
    s = bn.db_to_linear(snr_db)
    settings = _mc_settings(args)
    row = list(cfg.channels[0])
    N = len(row)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ba.RationalNudgeWarning)
        ctxs = [ba.lambda_context(c) for c in row]
    # Lambda: closed form against quadrature on the channel it describes
    for c in ctxs:
        for ups in (3, 4):
            r = ba.lambda_closed_result(c, ups, N, s)
            o = bn.lambda_oracle(c.channel, ups, N, s)
            err = float(np.max(np.abs(np.asarray(r.value) / o - 1.0)))
            rows.append((f"lambda u={ups} l/k={c.l}/{c.k}", "closed vs quadrature", err, 1e-6))
    nudged = bn.LinkConfig([[c.channel for c in ctxs]], combiner="OC")
    closed = ba.ber_simo_oc_closed(ctxs, s)
    shift = _horizontal_shift_db(closed, lambda x: bn.ber(nudged, x), snr_db)
    rows.append(("ber OC", "closed vs quadrature [dB]", shift, 0.3))
    for comb in bn.COMBINERS:
        link = bn.LinkConfig([row], combiner=comb)
        q = np.atleast_1d(bn.ber(link, s))
        r = mc.ber_mc(link, s, settings)
        z = float(np.max(np.abs(r.ber - q) / r.stderr))
        rows.append((f"ber {comb}", "montecarlo vs quadrature [SE]", z, 3.0))
    ok = True
    out.write(f"{'quantity':<28} {'comparison':<32} {'deviation':>11} {'limit':>8}  result\n")
    for name, what, dev, lim in rows:
        good = dev <= lim
        ok &= good
        out.write(f"{name:<28} {what:<32} {dev:>11.3e} {lim:>8.2g}  {'PASS' if good else 'FAIL'}\n")
    return 0 if ok else EXIT_CHECK


def _horizontal_shift_db(approx, exact_fn, snr_db):
    """Largest |x - snr_db| with exact_fn(x dB) equal to ``approx`` at snr_db."""
    worst = 0.0
    for level, db in zip(np.log10(np.atleast_1d(approx)), snr_db):
        def f(x):
            return math.log10(float(exact_fn(bn.db_to_linear(x)))) - level

        try:
            x = optimize.brentq(f, db - 20.0, db + 20.0, xtol=1e-6)
        except ValueError:
            return math.inf
        worst = max(worst, abs(x - db))
    return worst


# -- scenarios -----------------------------------------------------------------------


def load_schema() -> dict:
    return json.loads(resources.files("doublegg").joinpath("scenario.schema.json").read_text())


def load_scenario(path) -> dict:
    """Read and validate a scenario; raises :class:`UsageError` on any problem."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read scenario {path}: {exc}") from None
    try:
        jsonschema.validate(data, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise UsageError(f"scenario {path}: {where}: {exc.message}") from None
    ids = [link["id"] for link in data["links"]]
    if len(set(ids)) != len(ids):
        raise UsageError(f"scenario {path}: link ids must be unique")
    for comp in data.get("comparisons", []):
        for key in ("reference", "new"):
            if comp[key] not in ids:
                raise UsageError(f"scenario {path}: comparison refers to unknown link {comp[key]!r}")
        if comp.get("method", "quadrature") not in data["methods"]:
            raise UsageError(f"scenario {path}: comparison method {comp['method']!r} is not run")
    return data


def _scenario_links(data) -> list[bn.LinkConfig]:
    default = data.get("snr_db", SCENARIO_DEFAULT_SNR)
    out = []
    for link in data["links"]:
        rows = [[_channel(c) for c in row] for row in link["channels"]]
        try:
            out.append(
                bn.LinkConfig(
                    rows,
                    combiner=link.get("combiner", "OC"),
                    snr_grid_db=_snr_list(link.get("snr_db", default)),
                    label=link["id"],
                )
            )
        except (ValueError, TypeError) as exc:
            raise UsageError(f"link {link['id']!r}: {exc}") from None
    return out


def run_scenario(path, out_dir=None, log=sys.stderr) -> int:
    """Evaluate every (link, method) of a scenario and write CSV plus summary."""
    data = load_scenario(path)
    links = _scenario_links(data)
    mc_cfg = dict(data.get("mc", {}))
    mc_cfg.setdefault("streams", _workers())
    settings = mc.McSettings(**mc_cfg)
    jobs = []
    for cfg in links:
        for method in data["methods"]:
            if method == "closed" and (cfg.M != 1 or cfg.combiner != "OC"):
                continue
            jobs.append((cfg, method))

    def work(job):
        cfg, method = job
        try:
            return _curve(cfg, method, cfg.snr_grid_db, settings), None
        except (bn.QuadratureError, MeijerGError, ArithmeticError, ValueError) as exc:
            return None, _numeric_message(exc, cfg.snr_grid_db)

    # Monte Carlo jobs parallelize internally; run them after the rest
    analytic = [j for j in jobs if j[1] != "montecarlo"]
    sampled = [j for j in jobs if j[1] == "montecarlo"]
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = dict(zip(analytic, pool.map(work, analytic)))
    for j in sampled:
        results[j] = work(j)

    curves, failures = [], []
    for job in jobs:
        curve, err = results[job]
        if err is None:
            curves.append(curve)
        else:
            failures.append({"config_id": job[0].config_id, "method": job[1], "message": err})
            print(f"error: {job[0].config_id} [{job[1]}]: {err}", file=log)

    by_key = {(c.config_id, c.method): c for c in curves}
    gains = []
    for comp in data.get("comparisons", []):
        method = comp.get("method", "quadrature")
        target = comp.get("target", 1e-5)
        entry = {"reference": comp["reference"], "new": comp["new"], "method": method, "target": target}
        ref, new = by_key.get((comp["reference"], method)), by_key.get((comp["new"], method))
        if ref is None or new is None:
            entry["error"] = "curve not available"
        else:
            try:
                entry["gain_db"] = round(mc.gain_at_target(ref, new, target), 6)
            except mc.RangeError as exc:
                entry["error"] = str(exc)
        if "error" in entry:
            failures.append({"config_id": comp["new"], "method": method, "message": entry["error"]})
            print(f"error: gain {comp['new']} vs {comp['reference']}: {entry['error']}", file=log)
        gains.append(entry)

    base = Path(out_dir) if out_dir is not None else Path(path).resolve().parent
    base.mkdir(parents=True, exist_ok=True)
    output = data.get("output", {})
    csv_path = base / output.get("csv", f"{data['name']}.csv")
    summary_path = base / output.get("summary", f"{data['name']}_summary.json")
    with open(csv_path, "w", newline="") as fh:
        bn.write_csv(curves, fh)
    summary = {
        "name": data["name"],
        "csv": csv_path.name,
        "curves": [
            {
                "config_id": c.config_id,
                "method": c.method,
                "points": len(c),
                "underflow_points": int(np.sum(c.underflow)),
                "provenance": c.provenance,
            }
            for c in curves
        ],
        "gains": gains,
        "failures": failures,
    }
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    for g in gains:
        if "gain_db" in g:
            print(f"{g['new']} vs {g['reference']} at BER {g['target']:g}: {g['gain_db']:.2f} dB", file=log)
    return EXIT_NUMERIC if failures else 0


def cmd_run(args, out) -> int:
    path = args.scenario
    if not os.path.exists(path):
        bundled = resources.files("doublegg").joinpath("scenarios", path if path.endswith(".json") else f"{path}.json")
        if bundled.is_file():
            path = str(bundled)
    return run_scenario(path, args.out_dir or ("." if path != args.scenario else None))


# -- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="doublegg", description="Double GG FSO channel and BER toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, what in (("pdf", "density"), ("cdf", "distribution function")):
        p = sub.add_parser(name, help=f"tabulate the {what}")
        p.add_argument("--channel", default="a")
        p.add_argument("--grid", default="0.01:10:200", help="start:stop:count of irradiance values")
        p.add_argument("--log", action="store_true", help="log-spaced grid")
        p.set_defaults(func=cmd_table)

    p = sub.add_parser("sample", help="draw irradiance samples")
    p.add_argument("--channel", default="a")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("ber", help="compute one BER curve")
    _add_link_args(p)
    p.add_argument("--method", default="quadrature", choices=("quadrature", "closed", "montecarlo"))
    p.add_argument("--snr", default="0:90:1", help="start:stop:step in dB")
    _add_mc_args(p)
    p.set_defaults(func=cmd_ber)

    p = sub.add_parser("gain", help="SNR gains at a target BER from a curve CSV")
    p.add_argument("csv")
    p.add_argument("--reference", required=True, help="config_id of the reference curve")
    p.add_argument("--new", nargs="*", help="config_ids to compare (default: all others)")
    p.add_argument("--method", default="quadrature")
    p.add_argument("--target", type=float, default=1e-5)
    p.set_defaults(func=cmd_gain)

    p = sub.add_parser("check", help="cross-check closed form, quadrature and Monte Carlo")
    _add_link_args(p)
    p.add_argument("--snr", default="10,20,30", help="comma-separated dB values")
    _add_mc_args(p)
    p.set_defaults(func=cmd_check, draws=1_000_000)

    p = sub.add_parser("run", help="run a scenario file or a bundled scenario (fig1..fig4)")
    p.add_argument("scenario")
    p.add_argument("--out-dir", help="directory for the CSV and summary (default: next to the scenario)")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, sys.stdout)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (bn.QuadratureError, MeijerGError, mc.RangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
