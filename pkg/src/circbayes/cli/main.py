"""``circbayes`` command line.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 config error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..bayes import Grid
from ..errors import ConfigError, InputError, NumericalError
from ..fosreg import fit_fos
from . import pipeline as pl
from . import svg
from .config import RunConfig, load_config
from .data import MonthlyHistogram
from .synth import synthetic_csv

log = logging.getLogger("circbayes")

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_CONFIG = 0, 2, 3, 4

# flag -> config key; every flag is accepted before or after the subcommand
_GLOBAL = [
    ("--seed", "seed", int, "bootstrap / simulation seed (u64)"),
    ("--out-dir", "out_dir", str, "output directory"),
    ("--bins", "bins", int, "histogram bins per month"),
    ("--knots", "knots", str, "number of uniform inner knots, or comma list of knots in radians"),
    ("--degree", "degree", int, "spline degree k"),
    ("--variant", "variant", str, "fit variant a|b|c|d|all"),
    ("--param", "param", str, "alpha (a, b), rho (c, d) or auto"),
    ("--bootstrap", "bootstrap", int, "bootstrap replicates"),
    ("--level", "level", float, "band coverage level"),
    ("--grid", "grid", int, "evaluation grid size"),
    ("--zero-strategy", "zero_strategy", str, "additive | multiplicative | reject"),
    ("--pseudo-count", "pseudo_count", float, "pseudo-count for zero bins"),
    ("--covariate", "covariate", str, "time or mean:<column>"),
    ("--at", "predict_at", str, "comma separated covariate values for predict"),
    ("--malformed-threshold", "malformed_threshold", float, "tolerated malformed row fraction"),
    ("--timestamp-col", "timestamp_col", str, "timestamp column name"),
    ("--direction-col", "direction_col", str, "direction column name (degrees, clockwise from north)"),
    ("--speed-col", "speed_col", str, "speed column name"),
]


def _parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", dest="config", default=argparse.SUPPRESS, help="TOML config file")
    for flag, key, typ, text in _GLOBAL:
        p.add_argument(flag, dest=key, type=typ, default=argparse.SUPPRESS, help=text)
    p.add_argument("--cyclic", dest="cyclic", action="store_true", default=argparse.SUPPRESS,
                   help="cyclic difference penalty for P-splines")
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _parent()
    parser = argparse.ArgumentParser(
        prog="circbayes", parents=[parent],
        description="Periodic clr splines for circular densities: fit, summarize, regress, plot.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("ingest", "read a wind CSV and bin it into monthly histograms"),
        ("fit", "fit every month with variants a-d"),
        ("stats", "circular statistics and functional mean/SD"),
        ("regress", "function-on-scalar regression with bootstrap bands"),
        ("predict", "predicted densities at given covariate values"),
    ):
        sp = sub.add_parser(name, parents=[parent], help=text)
        sp.add_argument("input", nargs="?", default=argparse.SUPPRESS, help="input CSV")
    sp = sub.add_parser("plot", parents=[parent], help="render an artifact as SVG")
    sp.add_argument("artifact", help="JSON artifact written by another command")
    sp.add_argument("--style", required=True, choices=svg.STYLES)
    sp.add_argument("--month", default=None, help="month label for single-month styles")
    sp.add_argument("--output", default=None, help="SVG path (default: <out-dir>/<artifact>_<style>.svg)")
    sp = sub.add_parser("simulate", parents=[parent], help="write a synthetic wind CSV")
    sp.add_argument("output", help="CSV path")
    sp.add_argument("--months", type=int, default=120)
    sp.add_argument("--per-month", type=int, default=240)
    return parser


def _config(ns: argparse.Namespace) -> RunConfig:
    d = vars(ns)
    overrides = {key: d[key] for _, key, _, _ in _GLOBAL if key in d}
    if "cyclic" in d:
        overrides["cyclic"] = True
    if "input" in d:
        overrides["input"] = d["input"]
    return load_config(d.get("config"), overrides)


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pl.write_text(out / "effective_config.toml", cfg.to_toml())
    return out


def _month_table(prep: pl.Prepared) -> List[dict]:
    return [{"month": h.label, "observations": h.total, "zero_bins": h.zero_bins} for h in prep.histograms]


def run_ingest(cfg: RunConfig) -> None:
    prep = pl.prepare(cfg)
    out = _out(cfg)
    pl.write_text(out / "ingest.json", pl.dump_json({
        "kind": "ingest",
        "input": cfg.input,
        "accounting": prep.ingest.accounting(),
        "problems": prep.ingest.problems,
        "months": _month_table(prep),
    }))
    pl.write_text(out / "histograms.json", pl.dump_json({
        "kind": "histograms",
        "angle_convention": pl.ANGLE_CONVENTION,
        "preprocessing": {"bins": cfg.bins, "zero_strategy": cfg.zero_strategy, "pseudo_count": cfg.pseudo_count},
        "histograms": [h.to_dict() for h in prep.histograms],
    }))
    acc = prep.ingest.accounting()
    print(f"{acc['total_rows']} rows: {acc['retained']} retained, {acc['calm_excluded']} calm, "
          f"{acc['malformed']} malformed; {len(prep.histograms)} months")


def run_fit(cfg: RunConfig) -> None:
    prep = pl.prepare(cfg)
    fits = pl.cmd_fit(prep.histograms, cfg)
    out = _out(cfg)
    for v, per in fits.items():
        for month, f in per.items():
            pl.write_text(out / "fits" / f"{month}_{v}.json", pl.dump_json(dict(month=month, **f.to_dict())))
    pl.write_text(out / "fits.json", pl.dump_json(pl.fits_artifact(fits, prep.histograms, cfg)))
    pl.write_text(out / "summary.csv", pl.rows_to_csv(
        pl.summary_rows(fits), ["month", "variant", "param", "sse", "gcv", "hat_trace"]))
    extremes = pl.sse_extremes(fits)
    pl.write_text(out / "sse_summary.csv", pl.rows_to_csv(
        extremes, ["variant", "max_sse", "max_month", "min_sse", "min_month", "mean_sse", "mean_param"]))
    for row in extremes:
        print(f"variant ({row['variant']}): max SSE {row['max_sse']:.4g} ({row['max_month']}), "
              f"min SSE {row['min_sse']:.4g} ({row['min_month']}), mean SSE {row['mean_sse']:.4g}")


def _single_variant_fits(cfg: RunConfig, prep: pl.Prepared):
    v = cfg.variants()[0]
    if len(cfg.variants()) > 1:
        log.warning("using variant (%s) for this command", v)
    single = RunConfig(**{**vars(cfg), "variant": v})
    return pl.cmd_fit(prep.histograms, single)[v]


def run_stats(cfg: RunConfig) -> None:
    prep = pl.prepare(cfg)
    fits = _single_variant_fits(cfg, prep)
    grid = Grid.uniform(cfg.grid)
    report = pl.cmd_stats(prep, fits, grid)
    out = _out(cfg)
    pl.write_text(out / "stats.json", pl.dump_json(report))
    pl.write_text(out / "stats_months.csv", pl.rows_to_csv(report["months"], [
        "month", "n", "mean_direction_deg", "mean_direction_math_deg", "mean_resultant_length",
        "circ_variance", "circ_sd", "mean_angular_deviation"]))
    rows = [{"x": x, "mean_clr": m, "sd_clr": s, "mean_density": d} for x, m, s, d in
            zip(report["grid"], report["mean_clr"], report["sd_clr"], report["mean_density"])]
    pl.write_text(out / "mean_curves.csv", pl.rows_to_csv(rows, ["x", "mean_clr", "sd_clr", "mean_density"]))
    print(f"{len(report['months'])} months; mean density integral {report['mean_density_integral']:.12f}")


def _regression(cfg: RunConfig, prep: pl.Prepared):
    fits = _single_variant_fits(cfg, prep)
    months = list(fits)
    cov = pl.covariate_values(prep, months, cfg)
    name = "time" if cfg.covariate == "time" else cfg.covariate.split(":", 1)[1]
    return pl.cmd_regress(fits, cov, cfg, name)


def run_regress(cfg: RunConfig) -> None:
    prep = pl.prepare(cfg)
    _, _, bands, report = _regression(cfg, prep)
    out = _out(cfg)
    pl.write_text(out / "regression.json", pl.dump_json(report))
    x = bands.grid.points
    for j, name in enumerate(report["parameter_names"]):
        pl.write_text(out / f"regression_{j}.svg", svg.band_svg(
            x, bands.estimate[j], bands.sim_lower[j], bands.sim_upper[j],
            f"clr(beta_{j}) [{name}], {bands.level:.0%} bands", "clr",
            extra_band=(bands.lower[j], bands.upper[j])))
    for s in report["significance"]:
        verdict = "significant" if s["significant"] else "not significant"
        print(f"{s['parameter']}: {verdict} ({s['band']} band)")


def _predict_values(cfg: RunConfig) -> List[float]:
    try:
        vals = [float(t) for t in cfg.predict_at.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"--at must be a comma separated list of numbers, got {cfg.predict_at!r}") from None
    if not vals:
        raise ConfigError("predict needs covariate values (--at or predict_at)")
    return vals


def run_predict(cfg: RunConfig) -> None:
    values = _predict_values(cfg)
    prep = pl.prepare(cfg)
    fits = _single_variant_fits(cfg, prep)
    months = list(fits)
    cov = pl.covariate_values(prep, months, cfg)
    coeffs = np.vstack([fits[m].spline.coeffs_reduced for m in months])
    from ..fosreg import RegressionDataset

    try:
        ds = RegressionDataset.from_covariates(coeffs, cov, cfg.knot_config())
    except (InputError, NumericalError) as exc:
        raise type(exc)(f"regression on covariate {cfg.covariate!r}: {exc}") from exc
    grid = Grid.uniform(cfg.grid)
    report = pl.cmd_predict(fit_fos(ds), values, grid)
    report["covariate"] = cfg.covariate
    out = _out(cfg)
    pl.write_text(out / "predictions.json", pl.dump_json(report))
    cols = ["x"] + [f"density@{v:g}" for v in values]
    rows = [dict(zip(cols, [x] + [p["density"][i] for p in report["predictions"]]))
            for i, x in enumerate(report["grid"])]
    pl.write_text(out / "predictions.csv", pl.rows_to_csv(rows, cols))
    pl.write_text(out / "predictions.svg", svg.polar_svg(
        [(report["grid"], p["density"], f"{cfg.covariate}={p['covariate']:g}") for p in report["predictions"]],
        "Predicted densities"))
    print(f"{len(values)} predictions written to {out / 'predictions.json'}")


# ---- plot ----------------------------------------------------------------

def _pick_month(labels: List[str], month: Optional[str]) -> str:
    if month is None:
        return labels[0]
    if month not in labels:
        raise InputError(f"month {month!r} not in artifact")
    return month


def render(artifact: dict, style: str, month: Optional[str] = None, grid_size: int = 360) -> str:
    """SVG text for ``artifact`` (a parsed JSON output) in the given style."""
    kind = artifact.get("kind")
    if style not in svg.STYLES:
        raise InputError(f"unknown plot style {style!r}; choose from {', '.join(svg.STYLES)}")
    grid = Grid.uniform(grid_size)
    x = grid.points
    if kind == "histograms":
        hists = [MonthlyHistogram.from_dict(h) for h in artifact["histograms"]]
        if not hists:
            raise InputError("nothing to plot: empty curve list")
        h = hists[[g.label for g in hists].index(_pick_month([g.label for g in hists], month))]
        if style == "rose":
            return svg.rose_svg(h.rel_freq, f"Rose diagram {h.label}")
        if style == "histogram":
            return svg.histogram_svg(h.rel_freq, f"Histogram {h.label}")
        if style == "linear-curve":
            return svg.curves_svg([(h.midpoints, h.clr_values, h.label)], f"Discrete clr {h.label}", ylabel="clr")
        if style == "multi-curve":
            return svg.curves_svg([(g.midpoints, g.clr_values, g.label) for g in hists], "Discrete clr", ylabel="clr")
    elif kind == "fits":
        variant = next(iter(artifact["variants"]))
        per = artifact["variants"][variant]
        if not per:
            raise InputError("nothing to plot: empty curve list")
        labels = list(per)
        if style == "linear-curve":
            m = _pick_month(labels, month)
            data = artifact["data"][m]
            return svg.curves_svg([(x, pl.spline_values(per[m], grid), f"{m} ({variant})")],
                                  f"Fitted clr spline {m}", ylabel="clr", points=(data["x"], data["clr"]))
        if style == "multi-curve":
            return svg.curves_svg([(x, pl.spline_values(per[m], grid), m) for m in labels],
                                  f"Fitted clr splines, variant ({variant})", ylabel="clr")
        if style == "polar-curve":
            from ..bayes import ClrCurve, clr_inverse

            sel = [_pick_month(labels, month)] if month else labels
            series = [(x, clr_inverse(ClrCurve.project(grid, pl.spline_values(per[m], grid))).values, m)
                      for m in sel]
            return svg.polar_svg(series, f"Fitted densities, variant ({variant})")
    elif kind == "stats":
        mean, sd = np.asarray(artifact["mean_clr"]), np.asarray(artifact["sd_clr"])
        gx = artifact["grid"]
        if style == "band-plot":
            return svg.band_svg(gx, mean, mean - sd, mean + sd, "Mean clr curve +/- SD", "clr")
        if style == "multi-curve":
            return svg.curves_svg([(gx, c, m) for m, c in artifact["curves"].items()], "Fitted clr curves",
                                  ylabel="clr")
        if style == "linear-curve":
            return svg.curves_svg([(gx, artifact["mean_density"], "mean")], "Mean density", ylabel="density")
        if style == "polar-curve":
            return svg.polar_svg([(gx, artifact["mean_density"], "mean")], "Mean density")
    elif kind == "regression":
        b = artifact["bands"]
        est = np.asarray(b["estimate"])
        j = 1 if est.shape[0] > 1 else 0
        if style == "band-plot":
            return svg.band_svg(b["grid"], est[j], b["simultaneous_lower"][j], b["simultaneous_upper"][j],
                                f"clr(beta_{j}) with {b['level']:.0%} bands", "clr",
                                extra_band=(b["lower"][j], b["upper"][j]))
        if style == "multi-curve":
            return svg.curves_svg([(b["grid"], est[i], artifact["parameter_names"][i]) for i in range(est.shape[0])],
                                  "Regression parameter curves", ylabel="clr")
    elif kind == "predictions":
        preds = artifact["predictions"]
        series = [(artifact["grid"], p["density"], f"{p['covariate']:g}") for p in preds]
        if style == "multi-curve":
            return svg.curves_svg(series, "Predicted densities", ylabel="density")
        if style == "polar-curve":
            return svg.polar_svg(series, "Predicted densities")
    else:
        raise InputError(f"unrecognised artifact kind {kind!r}")
    raise InputError(f"style {style!r} is not available for {kind} artifacts")


def run_plot(cfg: RunConfig, ns: argparse.Namespace) -> None:
    import json

    path = Path(ns.artifact)
    try:
        artifact = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read artifact {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    text = render(artifact, ns.style, ns.month, cfg.grid)
    target = Path(ns.output) if ns.output else Path(cfg.out_dir) / f"{path.stem}_{ns.style}.svg"
    _out(cfg)
    pl.write_text(target, text)
    print(f"wrote {target}")


def run_simulate(cfg: RunConfig, ns: argparse.Namespace) -> None:
    if ns.months < 1 or ns.per_month < 1:
        raise ConfigError("--months and --per-month must be positive")
    pl.write_text(Path(ns.output), synthetic_csv(ns.months, cfg.seed, ns.per_month))
    print(f"wrote {ns.months} synthetic months to {ns.output}")


_COMMANDS = {
    "ingest": run_ingest,
    "fit": run_fit,
    "stats": run_stats,
    "regress": run_regress,
    "predict": run_predict,
}


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    ns = build_parser().parse_args(argv)
    try:
        cfg = _config(ns)
        if ns.command == "plot":
            run_plot(cfg, ns)
        elif ns.command == "simulate":
            run_simulate(cfg, ns)
        else:
            _COMMANDS[ns.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
