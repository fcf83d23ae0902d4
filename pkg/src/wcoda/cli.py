"""Command-line front end.

Every subcommand writes its CSV outputs plus ``config.json`` and
``manifest.json`` into ``--out``. Exit codes: 2 usage, 3 parse error,
4 domain or structural error, 5 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from dataclasses import fields
from pathlib import Path

import numpy as np

from .annuity import annuity_table, format_price_table
from .clr import clr_forward
from .config import RunConfig, write_manifest
from .errors import DomainError, ParseError, StructuralError, WcodaError
from .evaluation import (
    BacktestPlan,
    ErrorReport,
    MethodConfig,
    expanding_window_backtest,
    format_report,
    select_kappa,
)
from .fixtures import bundled_path
from .forecast import forecast_death_counts
from .lifetable import gini_coefficient, life_expectancy_at_birth, load_series, write_counts_csv
from .uncertainty import bootstrap_paths, prediction_band
from .weighting import make_weights, parse_grid
from .wfpca import fit_wfpca

EXIT_USAGE, EXIT_PARSE, EXIT_DOMAIN, EXIT_IO = 2, 3, 4, 5
DATA_DIR_ENV = "WCODA_DATA_DIR"
COMMANDS = (
    "ingest", "transform", "fit", "select-kappa", "forecast",
    "intervals", "backtest", "annuity", "report",
)


def _range(text: str) -> list[int]:
    lo, hi, step = (int(p) for p in text.split(":"))
    return list(range(lo, hi + 1, step))


def _csv_writer(path: Path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def _fmt(v: float) -> str:
    return f"{v:.6f}"


# --------------------------------------------------------------------------
# input resolution


def _resolve_input(path: str) -> Path:
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    base = os.environ.get(DATA_DIR_ENV)
    if base and (Path(base) / p).exists():
        return Path(base) / p
    return p


def _load(cfg: RunConfig):
    if cfg.fixture:
        path = bundled_path(cfg.fixture)
        fmt = "csv"
    elif cfg.input:
        path = _resolve_input(cfg.input[0])
        fmt = cfg.format
    else:
        raise DomainError("no input: pass --input PATH or --fixture NAME")
    with open(path, "rb") as fh:
        series = load_series(fh, fmt, cfg.sex, cfg.radix)
    if cfg.start is not None or cfg.end is not None:
        series = series.select_years(cfg.start, cfg.end)
    return series, {"input": path}


def _fit(cfg: RunConfig, series, kappa=None):
    kappa = cfg.kappa if kappa is None else kappa
    decomp = clr_forward(series, make_weights(kappa, series.n_years))
    model = fit_wfpca(decomp, cfg.k_rule(), cfg.max_k, cfg.score_on)
    return decomp, model


def _kappa_by_horizon(cfg: RunConfig):
    if not cfg.kappa_file:
        return cfg.kappa
    with open(cfg.kappa_file, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return {int(r["h"]): float(r["kappa"]) for r in rows}


# --------------------------------------------------------------------------
# subcommands


def cmd_ingest(cfg, out):
    series, inputs = _load(cfg)
    with open(out / "counts.csv", "w", newline="\n", encoding="utf-8") as fh:
        write_counts_csv(series, fh)
    fh, w = _csv_writer(out / "summary.csv")
    with fh:
        w.writerow(["year", "gini", "e0"])
        for i, y in enumerate(series.years):
            d = series.counts[i]
            w.writerow([int(y), _fmt(gini_coefficient(d)), _fmt(life_expectancy_at_birth(d, series.radix))])
    print(f"{series.n_years} years x {series.n_ages} ages, {series.repairs} repaired cells")
    return inputs


def cmd_transform(cfg, out):
    series, inputs = _load(cfg)
    decomp = clr_forward(series, make_weights(cfg.kappa, series.n_years))
    fh, w = _csv_writer(out / "beta.csv")
    with fh:
        w.writerow(["year", "age", "beta"])
        for i, y in enumerate(series.years):
            for j, a in enumerate(series.ages):
                w.writerow([int(y), int(a), f"{decomp.beta[i, j]:.10f}"])
    fh, w = _csv_writer(out / "alpha.csv")
    with fh:
        w.writerow(["age", "alpha", "weight_last_year"])
        for j, a in enumerate(series.ages):
            w.writerow([int(a), _fmt(decomp.alpha[j]), f"{decomp.scheme.weights[-1]:.10f}"])
    return inputs


def cmd_fit(cfg, out):
    series, inputs = _load(cfg)
    _, model = _fit(cfg, series)
    fh, w = _csv_writer(out / "eigenvalues.csv")
    with fh:
        w.writerow(["k", "eigenvalue", "retained"])
        for k, lam in enumerate(model.eigenvalues, start=1):
            w.writerow([k, f"{lam:.10e}", int(k <= model.K)])
    fh, w = _csv_writer(out / "eigenfunctions.csv")
    with fh:
        w.writerow(["k", "age", "phi"])
        for k in range(model.K):
            for j, a in enumerate(series.ages):
                w.writerow([k + 1, int(a), f"{model.phi[k, j]:.10f}"])
    fh, w = _csv_writer(out / "scores.csv")
    with fh:
        w.writerow(["year", "k", "score"])
        for i, y in enumerate(series.years):
            for k in range(model.K):
                w.writerow([int(y), k + 1, f"{model.scores[i, k]:.10f}"])
    print(f"K = {model.K}")
    return inputs


def cmd_select_kappa(cfg, out):
    series, inputs = _load(cfg)
    plan = BacktestPlan.parse(cfg.plan)
    grid = parse_grid(cfg.kappa_grid) if cfg.kappa_grid else None
    nu = cfg.nu[0] if cfg.nu else None
    method = MethodConfig(
        k=cfg.k_rule(), max_k=cfg.max_k, score_on=cfg.score_on,
        fit_start=cfg.fit_start, B=cfg.B, seed=cfg.seed,
    )
    sel = select_kappa(series, plan, cfg.criterion, grid, method, nu, cfg.threads)
    fh, w = _csv_writer(out / "kappa.csv")
    with fh:
        w.writerow(["h", "kappa", cfg.criterion])
        for h, kappa in sel.kappas.items():
            i = sel.grid.index(kappa)
            w.writerow([h, f"{kappa:.3f}", f"{sel.values[i, h - 1]:.10e}"])
    fh, w = _csv_writer(out / "kappa_surface.csv")
    with fh:
        w.writerow(["kappa", "h", cfg.criterion])
        for i, kappa in enumerate(sel.grid):
            for h in range(1, sel.values.shape[1] + 1):
                w.writerow([f"{kappa:.3f}", h, f"{sel.values[i, h - 1]:.10e}"])
    print("\n".join(f"h={h:>2}  kappa={k:.3f}" for h, k in sel.kappas.items()))
    return inputs


def cmd_forecast(cfg, out):
    series, inputs = _load(cfg)
    decomp, model = _fit(cfg, series)
    fc = forecast_death_counts(model, decomp, cfg.horizons, cfg.close)
    fh, w = _csv_writer(out / "forecast.csv")
    with fh:
        w.writerow(["horizon", "age", "count"])
        for h in fc.horizons:
            for j, a in enumerate(fc.ages):
                w.writerow([int(h), int(a), _fmt(fc.curves[h - 1, j])])
    return inputs


def cmd_intervals(cfg, out):
    series, inputs = _load(cfg)
    decomp, model = _fit(cfg, series)
    nus = cfg.nu or [0.2]
    ens = bootstrap_paths(model, decomp, cfg.horizons, cfg.B, cfg.seed, cfg.threads)
    for nu in nus:
        band = prediction_band(ens, nu)
        name = "intervals.csv" if len(nus) == 1 else f"intervals_nu{nu:g}.csv"
        fh, w = _csv_writer(out / name)
        with fh:
            w.writerow(["horizon", "age", "lower", "upper"])
            for h in range(ens.H):
                for j, a in enumerate(ens.ages):
                    w.writerow([h + 1, int(a), _fmt(band.lower[h, j]), _fmt(band.upper[h, j])])
    return inputs


def _write_errors(report: ErrorReport, out: Path):
    nus = sorted(report.cpd)
    fh, w = _csv_writer(out / "errors.csv")
    with fh:
        w.writerow(
            ["h", "count", "kld", "jsd_s", "jsd_g"]
            + [c for nu in nus for c in (f"ecp_{nu:g}", f"cpd_{nu:g}")]
        )
        for i, h in enumerate(report.horizons):
            row = [int(h), int(report.counts[i])]
            row += [f"{getattr(report, m)[i]:.10e}" for m in ("kld", "jsd_s", "jsd_g")]
            row += [f"{v:.10f}" for nu in nus for v in (report.ecp[nu][i], report.cpd[nu][i])]
            w.writerow(row)
    fh, w = _csv_writer(out / "per_origin.csv")
    with fh:
        keys = list(report.per_origin[0].keys())
        w.writerow(keys)
        for row in report.per_origin:
            w.writerow([f"{row[k]:.10e}" if isinstance(row[k], float) else row[k] for k in keys])


def cmd_backtest(cfg, out):
    series, inputs = _load(cfg)
    plan = BacktestPlan.parse(cfg.plan)
    method = MethodConfig(
        kappa=_kappa_by_horizon(cfg), k=cfg.k_rule(), max_k=cfg.max_k,
        score_on=cfg.score_on, fit_start=cfg.fit_start, nus=tuple(cfg.nu),
        B=cfg.B, seed=cfg.seed, threads=cfg.threads,
    )
    report = expanding_window_backtest(series, plan, method, cfg.segment)
    _write_errors(report, out)
    text = format_report(report)
    (out / "report.txt").write_text(text + "\n", encoding="utf-8")
    print(text)
    if cfg.kappa_file:
        inputs["kappa_file"] = Path(cfg.kappa_file)
    return inputs


def cmd_annuity(cfg, out):
    series, inputs = _load(cfg)
    ages, mats = _range(cfg.ages), _range(cfg.maturities)
    terminal = series.n_ages - 1
    valid = [T for x in ages for T in mats if x + T <= terminal]
    if not valid:
        raise DomainError(f"no age/maturity pair satisfies age + maturity <= {terminal}")
    H = max(valid)
    decomp, model = _fit(cfg, series)
    fc = forecast_death_counts(model, decomp, H)
    point = annuity_table(fc.curves, ages, mats, cfg.rate)
    lower = upper = None
    if cfg.nu:
        nu = cfg.nu[0]
        ens = bootstrap_paths(model, decomp, H, cfg.B, cfg.seed, cfg.threads)
        reps = annuity_table(ens.paths, ages, mats, cfg.rate)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN blank cells
            lower, upper = np.nanquantile(reps, [nu / 2, 1 - nu / 2], axis=0, method="linear")
    fh, w = _csv_writer(out / "annuity.csv")
    with fh:
        w.writerow(["age", "maturity", "rate", "price"] + (["lower", "upper"] if cfg.nu else []))
        for i, x in enumerate(ages):
            for j, T in enumerate(mats):
                if np.isnan(point[i, j]):
                    continue
                row = [x, T, f"{cfg.rate:g}", _fmt(point[i, j])]
                if cfg.nu:
                    row += [_fmt(lower[i, j]), _fmt(upper[i, j])]
                w.writerow(row)
    text = format_price_table(point, ages, mats)
    if cfg.nu:
        text += "\n\n" + format_price_table(point, ages, mats, lower, upper)
    (out / "annuity.txt").write_text(text + "\n", encoding="utf-8")
    print(text)
    return inputs


def _read_errors(path: Path) -> ErrorReport:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DomainError(f"{path} has no rows")
    col = lambda k: np.array([float(r[k]) for r in rows])  # noqa: E731
    nus = sorted({float(k[4:]) for k in rows[0] if k.startswith("cpd_")})
    return ErrorReport(
        col("h").astype(int), col("count").astype(int), col("kld"), col("jsd_s"), col("jsd_g"),
        {nu: col(f"ecp_{nu:g}") for nu in nus}, {nu: col(f"cpd_{nu:g}") for nu in nus},
    )


def cmd_report(cfg, out, run_dir: Path, plot_data: bool, sqrt: bool):
    inputs = {}
    errors = run_dir / "errors.csv"
    if errors.exists():
        report = _read_errors(errors)
        text = "Point forecast errors (x100)\n" + format_report(report, 100.0, sqrt)
        (out / "report.txt").write_text(text + "\n", encoding="utf-8")
        print(text)
        inputs["errors"] = errors
    if plot_data:
        fh, w = _csv_writer(out / "plot_data.csv")
        with fh:
            w.writerow(["series", "x", "age", "value"])
            if errors.exists():
                for m in ("kld", "jsd_s", "jsd_g"):
                    for h, v in zip(report.horizons, getattr(report, m)):
                        w.writerow([m, int(h), "", f"{v * 100:.10e}"])
            for name, value in (("forecast.csv", "count"), ("counts.csv", "count")):
                src = run_dir / name
                if src.exists():
                    inputs[name] = src
                    with open(src, newline="", encoding="utf-8") as sfh:
                        for r in csv.DictReader(sfh):
                            x = r.get("horizon", r.get("year"))
                            w.writerow([name[:-4], x, r["age"], r[value]])
    if not inputs:
        raise DomainError(f"nothing to report in {run_dir}")
    return inputs


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("input and model")
    g.add_argument("--config", help="JSON run config; explicit flags override it")
    g.add_argument("--input", action="append", help="life-table file (repeatable)")
    g.add_argument("--fixture", choices=["stationary", "regime", "gaussian"])
    g.add_argument("--format", choices=["csv", "hmd_qx", "hmd_deaths"])
    g.add_argument("--sex", choices=["female", "male", "total"])
    g.add_argument("--radix", type=float)
    g.add_argument("--start", type=int, help="first year used")
    g.add_argument("--end", type=int, help="last year used")
    g.add_argument("--kappa", type=float)
    g.add_argument("--kappa-grid", dest="kappa_grid", metavar="LO:HI:STEP")
    g.add_argument("--kappa-file", dest="kappa_file", help="per-horizon kappa CSV (h,kappa)")
    g.add_argument("--k", help="number of components or 'evr'")
    g.add_argument("--max-k", dest="max_k", type=int)
    g.add_argument("--score-on", dest="score_on", choices=["unweighted", "weighted"])
    g.add_argument("--horizons", type=int)
    g.add_argument("--no-closure", dest="close", action="store_const", const=False,
                   help="leave forecast curves unscaled instead of closing them to the radix")
    g.add_argument("--B", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--nu", type=float, action="append")
    g.add_argument("--plan", metavar="TRAIN:VALID:TEST")
    g.add_argument("--segment", choices=["validation", "test"])
    g.add_argument("--criterion", choices=["kld", "jsd_s", "jsd_g", "cpd"])
    g.add_argument("--fit-start", dest="fit_start", type=int)
    g.add_argument("--ages", metavar="LO:HI:STEP")
    g.add_argument("--maturities", metavar="LO:HI:STEP")
    g.add_argument("--rate", type=float)
    g.add_argument("--threads", type=int)
    g.add_argument("--out", "-o")

    parser = argparse.ArgumentParser(prog="wcoda", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "report":
            p.add_argument("--run", required=True, help="output directory of an earlier run")
            p.add_argument("--plot-data", action="store_true")
            p.add_argument("--sqrt", action="store_true", help="report sqrt of the JSD")
    return parser


def resolve_config(args) -> RunConfig:
    base = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            base = json.load(fh)
    cfg = RunConfig.from_dict(base)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    return cfg


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "report":
            inputs = cmd_report(cfg, out, Path(args.run), args.plot_data, args.sqrt)
        else:
            handler = globals()["cmd_" + args.command.replace("-", "_")]
            inputs = handler(cfg, out)
        write_manifest(out, args.command, cfg, inputs)
        return 0
    except ParseError as exc:
        return _fail(exc, EXIT_PARSE)
    except (DomainError, StructuralError, WcodaError, ValueError) as exc:
        return _fail(exc, EXIT_DOMAIN)
    except OSError as exc:
        return _fail(exc, EXIT_IO)


def _fail(exc, code) -> int:
    kind = getattr(exc, "kind", "io" if isinstance(exc, OSError) else "domain")
    print(f"wcoda: {kind} error: {exc}", file=sys.stderr)
    print("wcoda-error " + json.dumps({"kind": kind, "code": code, "message": str(exc)}), file=sys.stderr)
    return code


def main():  # pragma: no cover - console entry point
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
