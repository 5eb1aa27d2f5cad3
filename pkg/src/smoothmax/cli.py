"""Command line entry point: ``smoothmax <subcommand> ...``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import density as dens
from . import harness, theory
from .geometry import as_pnorm
from .maxima import maximal_points
from .sampling import SeedSpec, SmoothedDist, sample_set


def _common(sp: argparse.ArgumentParser, *names: str):
    if "p" in names:
        sp.add_argument("--p", default="2", help="norm of the base ball (a number >= 1 or 'inf')")
    if "q" in names:
        sp.add_argument("--q", default="2", help="norm of the perturbation ball")
    if "delta" in names:
        sp.add_argument("--delta", type=float, default=1.0, help="perturbation size")
    if "delta_power" in names:
        sp.add_argument("--delta-power", type=float, default=None,
                        help="use delta = n^a instead of a fixed --delta")
    if "n" in names:
        sp.add_argument("--n", type=int, nargs="+", default=[1024], help="sample size(s)")
    if "reps" in names:
        sp.add_argument("--reps", type=int, default=100, help="replicates per cell")
    if "seed" in names:
        sp.add_argument("--seed", type=int, default=0, help="master seed")
    if "out" in names:
        sp.add_argument("--out", default=None, help="output file or directory (default: stdout)")
    if "config" in names:
        sp.add_argument("--config", default=None, help="JSON experiment config")


def _open_out(path):
    if path is None or path == "-":
        return contextlib.nullcontext(sys.stdout)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="")


def _read_points(path) -> np.ndarray:
    fh = sys.stdin if path in (None, "-") else open(path, newline="")
    try:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    finally:
        if fh is not sys.stdin:
            fh.close()
    if rows and rows[0][:2] == ["x", "y"]:
        rows = rows[1:]
    return np.array([[float(r[0]), float(r[1])] for r in rows], dtype=float).reshape(-1, 2)


# --------------------------------------------------------------------------


def cmd_sample(a):
    dist = SmoothedDist(a.p, a.q, a.delta)
    n = a.n[0]
    if a.delta_power is not None:
        dist = SmoothedDist(a.p, a.q, n**a.delta_power)
    pts = sample_set(dist, n, SeedSpec(a.seed))
    with _open_out(a.out) as fh:
        fh.write("x,y\n")
        for x, y in pts:
            fh.write(f"{float(x)!r},{float(y)!r}\n")
    return 0


def cmd_maxima(a):
    pts = _read_points(a.input)
    res = maximal_points(pts)
    with _open_out(a.out) as fh:
        fh.write("x,y\n")
        for x, y in res.maxima:
            fh.write(f"{float(x)!r},{float(y)!r}\n")
        fh.write(f"# count,{res.count}\n")
    return 0


_FAMILIES = ("numeric", "b2b2", "b1b1", "sector", "b1b2", "binfq")


def _density_values(a, pts: np.ndarray) -> np.ndarray:
    fam = a.family
    if fam == "numeric":
        return np.atleast_1d(dens.density_numeric(SmoothedDist(a.p, a.q, a.delta), pts, m=a.m))
    if fam == "b1b2":
        return np.atleast_1d(dens.density_b1b2(a.delta, pts))
    if fam == "binfq":
        return np.atleast_1d(dens.density_binfq(a.q, a.delta, pts))
    if fam == "b1b1":
        return np.atleast_1d(dens.measure_t_b1b1(a.delta, pts))
    # the radial families take σ; a point is mapped to its distance below the outer circle
    sigma = 1.0 + a.delta - np.hypot(pts[:, 0], pts[:, 1])
    if fam == "b2b2":
        return np.atleast_1d(dens.density_b2b2(a.delta, sigma))
    return np.atleast_1d(dens.measure_sector_b2b2(a.delta, a.t, sigma))


def cmd_density(a):
    if a.point is not None:
        pts = np.array([[float(s) for s in a.point.split(",")]])
    else:
        e = 1.0 + a.delta
        lo, hi = (0.0, e) if a.family != "numeric" else (-e, e)
        g = np.linspace(lo, hi, a.grid + 2)[1:-1]
        X, Y = np.meshgrid(g, g, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        if a.family in ("b1b2",):
            pts = pts[(pts[:, 1] <= pts[:, 0]) & SmoothedDist(1, 2, a.delta).contains(pts)]
        elif a.family != "numeric":
            fam_dist = {"binfq": SmoothedDist("inf", a.q, a.delta), "b1b1": SmoothedDist(1, 1, a.delta)}
            d = fam_dist.get(a.family, SmoothedDist(2, 2, a.delta))
            pts = pts[d.contains(pts)]
    f = _density_values(a, pts)
    with _open_out(a.out) as fh:
        fh.write("x,y,f\n")
        for (x, y), v in zip(pts, f):
            fh.write(f"{float(x)!r},{float(y)!r},{float(v)!r}\n")
    return 0


def _region_json(r) -> dict:
    if isinstance(r, dens.CornerTriangle):
        return {"kind": "corner_triangle", "points": [list(map(float, r.v))], "delta": r.delta}
    if isinstance(r, dens.CornerRegion):
        return {"kind": "corner_region", "points": [list(map(float, r.v))]}
    return {"kind": type(r).__name__}


def cmd_witness(a):
    n = a.n[0]
    delta = n**a.delta_power if a.delta_power is not None else a.delta
    p, q = as_pnorm(a.p), as_pnorm(a.q)
    if p.value == 1 and q.value == 1:
        w = theory.witness_b1b1(delta, n)
    elif p.value == 2 and q.value == 2:
        w = theory.witness_b2b2(delta, n)
    elif p.is_inf and not q.is_inf:
        w = theory.witness_binfq(q, delta, n)
    else:
        raise SystemExit(f"no witness construction for the pair ({p}, {q})")
    rep = theory.verify_witness(w.dist, w, mc_samples=a.mc_samples, seed=a.seed)
    doc = {
        "schema_version": harness.SCHEMA_VERSION,
        "pair": [str(p), str(q)], "delta": delta, "n": n,
        "sigma": w.sigma, "m": w.m, "predicted_m": w.predicted_m,
        "regions": [_region_json(r) for r in w.regions],
        "report": {
            "passed": rep.passed, "disjoint": rep.disjoint, "dominant": rep.dominant,
            "measures_ok": rep.measures_ok, "count_ratio": rep.count_ratio,
            "n_mu": rep.n_mu, "n_mu_stderr": rep.n_mu_stderr, "failures": rep.failures,
        },
    }
    with _open_out(a.out) as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")
    return 0 if rep.passed else 1


def _config_from_args(a) -> harness.ExperimentConfig:
    if a.config:
        cfg = harness.ExperimentConfig.load(a.config)
        if a.workers is not None:
            cfg.workers = a.workers
        return cfg
    rule = {"power": a.delta_power} if a.delta_power is not None else a.delta
    return harness.ExperimentConfig(pairs=[(a.p, a.q)], delta_spec=[rule], n_grid=a.n,
                                    replicates=a.reps, master_seed=a.seed, workers=a.workers or 1)


def cmd_experiment(a):
    cfg = _config_from_args(a)
    records = harness.run_experiment(cfg, timing=a.timing)
    out = a.out or "."
    paths = harness.emit_report(out, records, config=cfg, strict=not a.no_strict)
    for k, v in paths.items():
        print(f"{k}: {v}")
    return 0


def cmd_fit(a):
    records = harness.read_records(a.records)
    rules = harness.ExperimentConfig.load(a.config).delta_spec if a.config else None
    fits, verdicts = harness.evaluate(records, rules, a.tolerance, strict=not a.no_strict)
    doc = {"schema_version": harness.SCHEMA_VERSION, "fits": fits, "verdicts": verdicts}
    with _open_out(a.out) as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_report(a):
    records = harness.read_records(a.records)
    cfg = harness.ExperimentConfig.load(a.config) if a.config else None
    paths = harness.emit_report(a.out or ".", records, config=cfg, tolerance=a.tolerance,
                                strict=not a.no_strict)
    for k, v in paths.items():
        print(f"{k}: {v}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smoothmax", description="Maxima of smoothed L_p ball samples.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="draw points, CSV x,y")
    _common(sp, "p", "q", "delta", "delta_power", "n", "seed", "out")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("maxima", help="maximal points of a CSV point file")
    sp.add_argument("input", nargs="?", default="-", help="CSV with x,y rows (default: stdin)")
    _common(sp, "out")
    sp.set_defaults(func=cmd_maxima)

    sp = sub.add_parser("density", help="evaluate a density family, CSV x,y,f")
    _common(sp, "p", "q", "delta", "out")
    sp.add_argument("--family", choices=_FAMILIES, default="numeric")
    sp.add_argument("--point", default=None, help="single point 'x,y'")
    sp.add_argument("--grid", type=int, default=20, help="grid points per axis when no --point is given")
    sp.add_argument("--m", type=int, default=1024, help="polygon resolution for the numeric density")
    sp.add_argument("--t", type=int, default=8, help="number of sectors for --family sector")
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("witness", help="build and verify a lower-bound witness, JSON")
    _common(sp, "p", "q", "delta", "delta_power", "n", "seed", "out")
    sp.add_argument("--mc-samples", type=int, default=200_000)
    sp.set_defaults(func=cmd_witness)

    sp = sub.add_parser("experiment", help="run a grid of cells and write a report")
    _common(sp, "p", "q", "delta", "delta_power", "n", "reps", "seed", "out", "config")
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--timing", action="store_true", help="record wall time (output is then not reproducible)")
    sp.add_argument("--no-strict", action="store_true", help="fit groups below the minimum grid sizes too")
    sp.set_defaults(func=cmd_experiment)

    for name, fn, text in (("fit", cmd_fit, "fit exponents from a records CSV, JSON"),
                           ("report", cmd_report, "write fits, verdicts and plot CSVs from records")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("records", help="records CSV")
        _common(sp, "out", "config")
        sp.add_argument("--tolerance", type=float, default=harness.DEFAULT_TOLERANCE)
        sp.add_argument("--no-strict", action="store_true")
        sp.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args) or 0)
    except (ValueError, OSError) as e:
        print(f"smoothmax {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
