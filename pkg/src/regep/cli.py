"""Command-line front end: figure data, the two-arm analysis, a streaming monitor
and Monte Carlo checks.

Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 a check failed.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .calibration import beta_mixture_calibrator
from .eprocess import (CMT, ECMO, Counts, Dataset, RegularizedEProcess, confidence_region,
                       fixed, horizon, median_quasi_eprocess, regularize, savage_dickey_gaussian,
                       threshold, ware_binomial)
from .im import IMContour, optimal_action, squared_error
from .possibility import Grid, Grid2D, make_prior, normal_sampler, point_mass
from .regularization import regularizer_from_contour, vacuous
from .two_arm import two_arm_analysis
from .validity_sim import (SimConfig, run_contraction_check, run_decision_bound_check,
                           run_expectation_check, run_growth_curve, run_ville_check)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CHECK = 0, 1, 2, 3

DEFAULTS = """\
[prior]
# gaussian_surprise | mean_bound | event_bound | median_prior | vacuous
kind = gaussian_surprise
K = 0.1

[calibrator]
kappa = 1.0

[eprocess]
# savage_dickey_gaussian | median_quasi | ware_binomial
family = savage_dickey_gaussian
v = 10
eta = 0.2
theta_hat_0 = 0
beta = 0.18

[grid]
lower = -4
upper = 4
nodes = 4001

[data]
n = 5
zbars = 0.25, 0.5, 1
Ks = 0.1, 0.2, 0.4, 0.8

[figure]
median_sample_size = 25
median_shifts = -0.5, 0, 0.5
actions_lower = -3
actions_upper = 3
actions_nodes = 601
ware_grid_nodes = 201

[growth]
theta_star = 0.7
truth = 0
n_max = 50
reps = 500

[monitor]
# a point "0" or an interval "lo, hi"
hypothesis = 0
threshold = 20

[simulate]
reps = 10000
prior = normal(0, 0.1)
regularizer = prior
rules = fixed(5); fixed(20); threshold(20, 100)
alphas = 0.01, 0.05, 0.1
decision_reps = 1000
decision_grid_nodes = 2001
contraction_hypotheses = 50
contraction_K = 0.2

[ware]
survivals_cmt = 6
deaths_cmt = 4
survivals_ecmo = 9
deaths_ecmo = 0
beta = 0.18
grid_nodes = 401
delta_nodes = 801
"""


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# ---------------------------------------------------------------- config

def load_config(path: Optional[str]) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cfg.optionxform = str
    cfg.read_string(DEFAULTS)
    if path:
        if not os.path.exists(path):
            raise UsageError(f"config file {path} does not exist")
        try:
            with open(path) as fh:
                cfg.read_file(fh)
        except configparser.Error as exc:
            raise UsageError(f"cannot parse config: {exc}") from exc
    return cfg


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a list of numbers, got {text!r}") from exc


def _get(cfg, section, key, kind=float):
    try:
        return kind(cfg.get(section, key))
    except (ValueError, configparser.Error) as exc:
        raise UsageError(f"[{section}] {key}: {exc}") from exc


def _config_hash(cfg: configparser.ConfigParser, extra: dict) -> str:
    buf = io.StringIO()
    cfg.write(buf)
    blob = buf.getvalue() + json.dumps(extra, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _grid(cfg, nodes: Optional[int]) -> Grid:
    lo, hi = _get(cfg, "grid", "lower"), _get(cfg, "grid", "upper")
    n = nodes if nodes is not None else _get(cfg, "grid", "nodes", int)
    try:
        return Grid(lo, hi, n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _regularizer(cfg, grid, kind: Optional[str] = None, K: Optional[float] = None):
    kind = kind or cfg.get("prior", "kind")
    if kind == "vacuous":
        return vacuous()
    K = K if K is not None else _get(cfg, "prior", "K")
    kappa = _get(cfg, "calibrator", "kappa")
    try:
        needs_k = kind in ("gaussian_surprise", "mean_bound", "event_bound")
        prior = make_prior(kind, grid, K=K if needs_k else None)
        return regularizer_from_contour(prior, beta_mixture_calibrator(kappa))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _base(cfg):
    family = cfg.get("eprocess", "family")
    if family == "savage_dickey_gaussian":
        return savage_dickey_gaussian(_get(cfg, "eprocess", "v"))
    if family == "median_quasi":
        return median_quasi_eprocess(_get(cfg, "eprocess", "eta"), _get(cfg, "eprocess", "theta_hat_0"))
    if family == "ware_binomial":
        return ware_binomial(_get(cfg, "eprocess", "beta"))
    raise UsageError(f"unknown e-process family {family!r}")


def _rules(text: str):
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        name, _, args = part.partition("(")
        vals = _floats(args.rstrip(")"))
        try:
            if name == "fixed" and len(vals) == 1:
                out.append(fixed(int(vals[0])))
            elif name == "threshold" and len(vals) == 2:
                out.append(threshold(vals[0], int(vals[1])))
            elif name == "horizon" and len(vals) == 1:
                out.append(horizon(int(vals[0])))
            else:
                raise UsageError(f"bad stopping rule {part!r}")
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if not out:
        raise UsageError("no stopping rules configured")
    return tuple(out)


def _prior_sampler(text: str):
    name, _, args = text.strip().partition("(")
    vals = _floats(args.rstrip(")"))
    if name == "normal" and len(vals) == 2:
        return normal_sampler(vals[0], vals[1])
    if name == "point" and len(vals) == 1:
        return point_mass(vals[0])
    raise UsageError(f"bad prior sampler {text!r}; use normal(mean, var) or point(x)")


# ---------------------------------------------------------------- output helpers

def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(r)


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _ensure_dir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path} is not writable")


# ---------------------------------------------------------------- figures

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "appD")


def _gaussian_curves(cfg, grid, kinds_K, zbars, n):
    """log e_reg over theta for each data set (n copies of zbar) and regularizer."""
    base = savage_dickey_gaussian(_get(cfg, "eprocess", "v"))
    rows = []
    theta = grid.nodes
    for zbar in zbars:
        data = np.full(n, zbar)
        for label, rho in kinds_K:
            loge = regularize(base, rho).log_value(data, theta)
            rows += [(_fmt(t), _fmt(v), f"{label};zbar={zbar:g}") for t, v in zip(theta, loge)]
    return rows


def _figure(fig: str, cfg, args, out_dir: str) -> dict:
    grid = _grid(cfg, args.grid_nodes)
    n = _get(cfg, "data", "n", int)
    zbars = _floats(cfg.get("data", "zbars"))
    Ks = _floats(cfg.get("data", "Ks"))
    files = {}
    params: dict = {"kappa": _get(cfg, "calibrator", "kappa"), "kappa_note": "default; not stated in the source analysis"}
    if fig in ("fig2", "appD"):
        kinds = ["gaussian_surprise"] if fig == "fig2" else ["mean_bound", "event_bound"]
        for kind in kinds:
            regs = [("vacuous", vacuous())] + [(f"K={K:g}", _regularizer(cfg, grid, kind, K)) for K in Ks]
            rows = _gaussian_curves(cfg, grid, regs, zbars, n)
            name = f"{fig}_{kind}.csv"
            _write_rows(os.path.join(out_dir, name), ["x", "y", "series"], rows)
            files[kind] = name
        params.update(n=n, zbars=zbars, Ks=Ks, y="log e_reg")
    elif fig == "fig3":
        base = savage_dickey_gaussian(_get(cfg, "eprocess", "v"))
        regs = {f"K={K:g}": _regularizer(cfg, grid, "gaussian_surprise", K) for K in Ks}
        regs["vacuous"] = vacuous()
        table = run_growth_curve(base, regs, _get(cfg, "growth", "theta_star"),
                                 truth=_get(cfg, "growth", "truth"),
                                 n_max=_get(cfg, "growth", "n_max", int),
                                 reps=_get(cfg, "growth", "reps", int), seed=args.seed)
        table.write_csv(os.path.join(out_dir, "fig3_growth.csv"))
        files["growth"] = "fig3_growth.csv"
        params.update(theta_star=_get(cfg, "growth", "theta_star"), reps=_get(cfg, "growth", "reps", int),
                      n_max=_get(cfg, "growth", "n_max", int), seed=args.seed)
    elif fig == "fig4":
        size = _get(cfg, "figure", "median_sample_size", int)
        raw = np.random.default_rng(args.seed).standard_t(2, size)
        base = median_quasi_eprocess(_get(cfg, "eprocess", "eta"), _get(cfg, "eprocess", "theta_hat_0"))
        prior = make_prior("median_prior", grid)
        rho = regularizer_from_contour(prior, beta_mixture_calibrator(_get(cfg, "calibrator", "kappa")))
        theta = grid.nodes
        rows = [(_fmt(t), _fmt(v), "prior") for t, v in zip(theta, prior.values)]
        for shift in _floats(cfg.get("figure", "median_shifts")):
            data = raw - np.median(raw) + shift
            for label, r in (("unregularized", vacuous()), ("regularized", rho)):
                pi = IMContour(regularize(base, r), data, grid).values
                rows += [(_fmt(t), _fmt(v), f"{label};median={shift:g}") for t, v in zip(theta, pi)]
        _write_rows(os.path.join(out_dir, "fig4_median_contours.csv"), ["x", "y", "series"], rows)
        files["contours"] = "fig4_median_contours.csv"
        params.update(sample_size=size, distribution="student_t(2)", seed=args.seed,
                      eta=_get(cfg, "eprocess", "eta"))
    elif fig in ("fig5", "fig6"):
        base = savage_dickey_gaussian(_get(cfg, "eprocess", "v"))
        zbar = 0.5
        data = np.full(n, zbar)
        actions = np.linspace(_get(cfg, "figure", "actions_lower"), _get(cfg, "figure", "actions_upper"),
                              _get(cfg, "figure", "actions_nodes", int))
        loss = squared_error(actions)
        regs = [("vacuous", vacuous())]
        if fig == "fig6":
            regs += [(f"K={K:g}", _regularizer(cfg, grid, "gaussian_surprise", K)) for K in Ks]
        theta = grid.nodes
        contour_rows, risk_rows, best = [], [], {}
        for label, rho in regs:
            contour = IMContour(regularize(base, rho), data, grid)
            contour_rows += [(_fmt(t), _fmt(v), label) for t, v in zip(theta, contour.values)]
            rep = optimal_action(contour, loss)
            risk_rows += [(_fmt(a), _fmt(r), label) for a, r in zip(rep.actions, rep.risks)]
            best[label] = {"action": rep.action, "upper_risk": rep.upper_risk, "lower_risk": rep.lower_risk}
        _write_rows(os.path.join(out_dir, f"{fig}_contours.csv"), ["x", "y", "series"], contour_rows)
        _write_rows(os.path.join(out_dir, f"{fig}_risk.csv"), ["x", "y", "series"], risk_rows)
        files.update(contours=f"{fig}_contours.csv", risk=f"{fig}_risk.csv")
        params.update(n=n, zbar=zbar, optimal_actions=best)
    elif fig in ("fig7", "fig8"):
        nodes = args.grid_nodes or (_get(cfg, "figure", "ware_grid_nodes", int) if fig == "fig7"
                                    else _get(cfg, "ware", "grid_nodes", int))
        res = two_arm_analysis(_ware_counts(cfg), beta=_get(cfg, "ware", "beta"),
                               kappa=_get(cfg, "calibrator", "kappa"), grid_nodes=nodes,
                               delta_nodes=_delta_nodes(cfg, nodes), alpha=args.alpha)
        if fig == "fig7":
            rows = []
            for label, v in res.variants.items():
                pts = v.contour.grid.points
                loge = v.contour.log_e(pts)
                rows += [(_fmt(a), _fmt(b), _fmt(e), int(m), label)
                         for (a, b), e, m in zip(pts, loge, v.region.mask)]
            _write_rows(os.path.join(out_dir, "fig7_two_arm_log_e.csv"),
                        ["theta_cmt", "theta_ecmo", "log_e", "in_region", "series"], rows)
            files["log_e"] = "fig7_two_arm_log_e.csv"
        else:
            rows = []
            for label, v in res.variants.items():
                phi = v.interval.marginal
                rows += [(_fmt(d), _fmt(p), label) for d, p in zip(phi.grid.nodes, phi.values)]
            _write_rows(os.path.join(out_dir, "fig8_delta_marginal.csv"), ["x", "y", "series"], rows)
            files["marginal"] = "fig8_delta_marginal.csv"
            params["intervals"] = {k: [v.interval.lower, v.interval.upper] for k, v in res.variants.items()}
        params.update(grid_nodes=nodes, alpha=args.alpha)
    return {"files": files, "parameters": params}


def cmd_figure(args, cfg) -> int:
    if args.figure_id not in FIGURES:
        raise UsageError(f"unknown figure {args.figure_id!r}; choose from {', '.join(FIGURES)}")
    _ensure_dir(args.out_dir)
    info = _figure(args.figure_id, cfg, args, args.out_dir)
    manifest = {"figure": args.figure_id, "seed": args.seed,
                "config_hash": _config_hash(cfg, {"figure": args.figure_id, "seed": args.seed,
                                                  "alpha": args.alpha, "grid_nodes": args.grid_nodes}),
                **info}
    _write_json(os.path.join(args.out_dir, f"{args.figure_id}_manifest.json"), manifest)
    print(json.dumps({"figure": args.figure_id, "files": info["files"]}, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------- two-arm analysis

def _ware_counts(cfg) -> Counts:
    c = Counts(*(_get(cfg, "ware", k, int) for k in Counts._fields))
    if any(x < 0 for x in c):
        raise DataError("counts must be non-negative")
    return c


def _delta_nodes(cfg, grid_nodes: int) -> int:
    # a delta grid finer than the axis spacing leaves bands with no preimage
    return min(_get(cfg, "ware", "delta_nodes", int), 2 * (grid_nodes - 1) + 1)


def cmd_ware(args, cfg) -> int:
    nodes = args.grid_nodes or _get(cfg, "ware", "grid_nodes", int)
    res = two_arm_analysis(_ware_counts(cfg), beta=_get(cfg, "ware", "beta"),
                           kappa=_get(cfg, "calibrator", "kappa"), grid_nodes=nodes,
                           delta_nodes=_delta_nodes(cfg, nodes), alpha=args.alpha)
    report = res.to_dict()
    report["config_hash"] = _config_hash(cfg, {"alpha": args.alpha, "grid_nodes": nodes})
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default)
    if args.out_dir:
        _ensure_dir(args.out_dir)
        with open(os.path.join(args.out_dir, "ware_report.json"), "w") as fh:
            fh.write(text + "\n")
        summary = {k: {"delta_interval": v["delta_interval"],
                       "test": v["test_ecmo_not_better"]["decision"]}
                   for k, v in report["variants"].items()}
        print(json.dumps(summary, sort_keys=True))
    else:
        print(text)
    return EXIT_OK


# ---------------------------------------------------------------- monitor

def _parse_observation(line: str, records: bool):
    parts = [p.strip() for p in line.replace(";", ",").split(",") if p.strip()]
    if records:
        if len(parts) != 2:
            raise ValueError("expected arm,survived")
        arm = {"cmt": CMT, "ecmo": ECMO, "0": CMT, "1": ECMO}.get(parts[0].lower())
        ok = int(parts[1])
        if arm is None or ok not in (0, 1):
            raise ValueError("arm must be cmt/ecmo (or 0/1) and survived 0/1")
        return (arm, ok)
    if len(parts) != 1:
        raise ValueError("expected one number per line")
    x = float(parts[0])
    if not math.isfinite(x):
        raise ValueError("non-finite value")
    return x


def cmd_monitor(args, cfg) -> int:
    base = _base(cfg)
    records = base.param_dim == 2
    if records:
        axis = Grid(0.0, 1.0, args.grid_nodes or _get(cfg, "ware", "grid_nodes", int))
        grid = Grid2D(axis, axis)
        kind = cfg.get("prior", "kind")
        if kind == "vacuous":
            rho = vacuous()
        else:
            rho = regularizer_from_contour(make_prior("ware_joint", grid),
                                           beta_mixture_calibrator(_get(cfg, "calibrator", "kappa")))
        hyp_pts = grid.points[grid.points[:, 1] <= grid.points[:, 0]]
    else:
        grid = _grid(cfg, args.grid_nodes)
        rho = _regularizer(cfg, grid)
        h = _floats(cfg.get("monitor", "hypothesis"))
        if len(h) == 1:
            hyp_pts = np.array(h)
        elif len(h) == 2 and h[0] <= h[1]:
            nodes = grid.nodes
            hyp_pts = np.concatenate([[h[0]], nodes[(nodes > h[0]) & (nodes < h[1])], [h[1]]])
        else:
            raise UsageError("monitor hypothesis must be a point or an interval lo, hi")
    ereg: RegularizedEProcess = regularize(base, rho)
    c = _get(cfg, "monitor", "threshold")
    log_c = math.log(c)
    data = Dataset(record_width=2 if records else 0)
    skipped = 0
    source = sys.stdin if args.input in (None, "-") else None
    if source is None:
        try:
            source = open(args.input)
        except OSError as exc:
            raise DataError(f"cannot read {args.input}: {exc}") from exc
    try:
        for lineno, line in enumerate(source, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                data.append(_parse_observation(line, records))
            except ValueError as exc:
                skipped += 1
                print(f"warning: line {lineno} skipped: {exc}", file=sys.stderr)
                continue
            snap = data.prefix()
            min_log = float(np.min(ereg.log_value(snap, hyp_pts)))
            region = _quiet_region(ereg, snap, args.alpha, grid)
            if records:
                where = f"region_nodes={int(region.mask.sum())}"
            elif region.hull is None:
                where = "hull=empty"
            else:
                where = f"hull=[{region.hull[0]:.6g},{region.hull[1]:.6g}]"
            status = "STOP" if min_log >= log_c else "CONTINUE"
            print(f"n={len(snap)} min_log_e={min_log:.6g} {where} {status}", flush=True)
    finally:
        if source is not sys.stdin:
            source.close()
    return EXIT_DATA if skipped else EXIT_OK


def _quiet_region(ereg, data, alpha, grid):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return confidence_region(ereg, data, alpha, grid)


# ---------------------------------------------------------------- simulate

CHECKS = ("ville", "expectation", "decision", "contraction")


def cmd_simulate(args, cfg) -> int:
    if args.check not in CHECKS:
        raise UsageError(f"unknown check {args.check!r}; choose from {', '.join(CHECKS)}")
    base = savage_dickey_gaussian(_get(cfg, "eprocess", "v"))
    grid = _grid(cfg, args.grid_nodes)
    if args.check == "contraction":
        K = _get(cfg, "simulate", "contraction_K")
        prior = make_prior("gaussian_surprise", grid, K=K)
        rho = regularizer_from_contour(prior, beta_mixture_calibrator(_get(cfg, "calibrator", "kappa")))
        rng = np.random.default_rng(args.seed)
        hyps = []
        for _ in range(_get(cfg, "simulate", "contraction_hypotheses", int)):
            lo, hi = np.sort(rng.uniform(grid.lower, grid.upper, 2))
            hyps.append((lambda a, b: (lambda t: (t >= a) & (t <= b)))(lo, hi))
        n = _get(cfg, "data", "n", int)
        datasets = [np.full(n, z) for z in np.linspace(-4, 4, 161)]
        report = run_contraction_check(prior, regularize(base, rho), datasets, hyps)
    else:
        rho_kind = cfg.get("simulate", "regularizer")
        rho = vacuous() if rho_kind == "vacuous" else _regularizer(cfg, grid)
        alphas = tuple(args.alpha_list or _floats(cfg.get("simulate", "alphas")))
        reps = _get(cfg, "simulate", "decision_reps" if args.check == "decision" else "reps", int)
        try:
            config = SimConfig(regularize(base, rho), _prior_sampler(cfg.get("simulate", "prior")),
                               _rules(cfg.get("simulate", "rules")), alphas=alphas, reps=reps,
                               seed=args.seed, label=args.check)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        try:
            if args.check == "ville":
                report = run_ville_check(config)
            elif args.check == "expectation":
                report = run_expectation_check(config)
            else:
                dgrid = Grid(grid.lower, grid.upper, _get(cfg, "simulate", "decision_grid_nodes", int))
                actions = np.linspace(_get(cfg, "figure", "actions_lower"),
                                      _get(cfg, "figure", "actions_upper"), 61)
                report = run_decision_bound_check(config, squared_error(actions), dgrid)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    text = report.to_json()
    if args.out_dir:
        _ensure_dir(args.out_dir)
        with open(os.path.join(args.out_dir, f"simulate_{args.check}.json"), "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK if report.passed else EXIT_CHECK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file with [sections]")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--alpha", type=float, default=0.05)
    common.add_argument("--grid-nodes", dest="grid_nodes", type=int)

    parser = argparse.ArgumentParser(prog="regep", parents=[common],
                                     description="Regularized e-processes and e-possibilistic inference")
    parser.add_argument("--print-defaults", action="store_true", help="print the default config and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("figure", parents=[common], help="emit figure data as CSV plus a JSON manifest")
    p.add_argument("figure_id", help=", ".join(FIGURES))
    p.set_defaults(func=cmd_figure, out_dir_default="figures")

    p = sub.add_parser("ware", parents=[common], help="two-arm CMT/ECMO analysis as JSON")
    p.set_defaults(func=cmd_ware)

    p = sub.add_parser("monitor", parents=[common], help="stream observations and report evidence")
    p.add_argument("input", nargs="?", default="-", help="file with one observation per line, or - for stdin")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo validity checks")
    p.add_argument("check", help=", ".join(CHECKS))
    p.add_argument("--alphas", dest="alpha_list", type=_floats, help="comma-separated alpha grid")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.print_defaults:
        sys.stdout.write(DEFAULTS)
        return EXIT_OK
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if not 0 < args.alpha <= 1:
        print("error: --alpha must lie in (0, 1]", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "figure" and not args.out_dir:
        args.out_dir = "figures"
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
