"""End-to-end steps behind the command line: bin, fit, summarize, regress, predict."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..bayes import ClrCurve, Grid, clr_inverse, functional_sd, sample_mean_clr
from ..circstats import CircularSample, stats_report
from ..errors import CircBayesError, InputError
from ..fosreg import (
    RegressionDataset,
    bootstrap_bands,
    fit_fos,
    predict_clr,
    significance_summary,
    spline_curve,
)
from ..smoothfit import (
    FitProblem,
    FitResult,
    PSplineConfig,
    SmoothingConfig,
    optimize_alpha,
    optimize_rho,
    solve_pspline,
    solve_smoothing,
)
from ..splinecore import KnotConfig
from .config import VARIANTS, RunConfig
from .data import (
    IngestResult,
    MonthlyHistogram,
    WindRecord,
    group_by_month,
    histogram_from_angles,
    ingest,
    monthly_column_mean,
)

ANGLE_CONVENTION = "radians clockwise from north"


@dataclass
class Prepared:
    ingest: IngestResult
    by_month: Dict[str, List[WindRecord]]
    histograms: List[MonthlyHistogram]


def prepare(cfg: RunConfig) -> Prepared:
    if not cfg.input:
        raise InputError("no input file given")
    res = ingest(cfg.input, cfg.timestamp_col, cfg.direction_col, cfg.speed_col, cfg.malformed_threshold)
    by_month = group_by_month(res.records)
    if not by_month:
        raise InputError(f"{cfg.input}: no directional observations after excluding calm records")
    hists = [
        histogram_from_angles(
            label, [r.direction_rad for r in recs], cfg.bins, cfg.zero_strategy, cfg.pseudo_count
        )
        for label, recs in by_month.items()
    ]
    return Prepared(res, by_month, hists)


def fit_histogram(hist: MonthlyHistogram, knots: KnotConfig, variant: str,
                  param: Optional[float] = None, cyclic: bool = False) -> FitResult:
    """Fit one month's clr histogram with variant a-d; ``param=None`` selects by GCV."""
    kind, order = VARIANTS[variant]
    problem = FitProblem(hist.midpoints, hist.clr_values, knots)
    if kind == "smoothing":
        if param is None:
            return optimize_alpha(problem, order)[1]
        return solve_smoothing(problem, SmoothingConfig(param, order))
    if param is None:
        return optimize_rho(problem, order, cyclic)[1]
    return solve_pspline(problem, PSplineConfig(param, order, cyclic))


def cmd_fit(histograms: Sequence[MonthlyHistogram], cfg: RunConfig) -> Dict[str, Dict[str, FitResult]]:
    """``{variant: {month: FitResult}}`` with months in chronological order."""
    knots = cfg.knot_config()
    out: Dict[str, Dict[str, FitResult]] = {}
    for v in cfg.variants():
        out[v] = {}
        for hist in sorted(histograms, key=lambda h: h.label):
            try:
                out[v][hist.label] = fit_histogram(hist, knots, v, cfg.param_value(), cfg.cyclic)
            except CircBayesError as exc:
                raise type(exc)(f"month {hist.label}, variant ({v}): {exc}") from exc
    return out


def summary_rows(fits: Dict[str, Dict[str, FitResult]]) -> List[dict]:
    rows = []
    months = sorted({m for per in fits.values() for m in per})
    for month in months:
        for v, per in fits.items():
            if month in per:
                f = per[month]
                rows.append({
                    "month": month, "variant": v, "param": f.parameter,
                    "sse": f.sse, "gcv": f.gcv, "hat_trace": f.hat_trace,
                })
    return rows


def sse_extremes(fits: Dict[str, Dict[str, FitResult]]) -> List[dict]:
    """Per variant: maximum and minimum SSE with their months, and the mean SSE."""
    out = []
    for v, per in fits.items():
        months = list(per)
        sses = np.array([per[m].sse for m in months])
        params = np.array([per[m].parameter for m in months])
        imax, imin = int(np.argmax(sses)), int(np.argmin(sses))
        out.append({
            "variant": v,
            "max_sse": float(sses[imax]), "max_month": months[imax],
            "min_sse": float(sses[imin]), "min_month": months[imin],
            "mean_sse": float(sses.mean()),
            "mean_param": float(params.mean()),
        })
    return out


def rows_to_csv(rows: List[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "inf"
    return v


def fit_curves(fits: Dict[str, FitResult], grid: Grid) -> Dict[str, ClrCurve]:
    out = {}
    for month, f in fits.items():
        out[month] = ClrCurve.project(grid, f.spline(grid.points))
    return out


def cmd_stats(prep: Prepared, fits: Dict[str, FitResult], grid: Grid) -> dict:
    """Circular statistics per month and functional mean/SD of the fitted clr curves."""
    months = []
    for label, recs in prep.by_month.items():
        sample = CircularSample([r.direction_rad for r in recs])
        rep = stats_report(sample)
        rep["month"] = label
        md = rep["mean_direction_deg"]
        # compass (clockwise from north) -> mathematical (counterclockwise from east)
        rep["mean_direction_math_deg"] = None if md is None else (90.0 - md) % 360.0
        months.append(rep)
    curves = list(fit_curves(fits, grid).values())
    mean = sample_mean_clr(curves)
    sd = functional_sd(curves)
    dens = clr_inverse(mean)
    return {
        "kind": "stats",
        "angle_convention": ANGLE_CONVENTION,
        "months": months,
        "grid": grid.points.tolist(),
        "mean_clr": mean.values.tolist(),
        "sd_clr": sd.tolist(),
        "mean_density": dens.values.tolist(),
        "mean_density_integral": dens.integral(),
        "curves": {m: c.values.tolist() for m, c in fit_curves(fits, grid).items()},
    }


def covariate_values(prep: Prepared, months: Sequence[str], cfg: RunConfig) -> np.ndarray:
    """``time`` gives the month index 1..n; ``mean:<column>`` the monthly mean of a column."""
    spec = cfg.covariate.strip()
    if spec == "time":
        return np.arange(1, len(months) + 1, dtype=float)
    if spec.startswith("mean:"):
        column = spec[5:]
        means = monthly_column_mean(
            [r for m in months for r in prep.by_month[m]], column, cfg.speed_col
        )
        missing = [m for m in months if m not in means]
        if missing:
            raise InputError(f"covariate {spec!r} unavailable for month(s) {', '.join(missing[:5])}")
        return np.array([means[m] for m in months])
    raise InputError(f"unknown covariate {spec!r}; use 'time' or 'mean:<column>'")


def cmd_regress(fits: Dict[str, FitResult], covariates: np.ndarray, cfg: RunConfig, name: str):
    months = list(fits)
    knots = cfg.knot_config()
    coeffs = np.vstack([fits[m].spline.coeffs_reduced for m in months])
    try:
        ds = RegressionDataset.from_covariates(coeffs, covariates, knots)
    except CircBayesError as exc:
        raise type(exc)(f"regression on covariate {cfg.covariate!r}: {exc}") from exc
    model = fit_fos(ds)
    grid = Grid.uniform(cfg.grid)
    bands = bootstrap_bands(model, ds, cfg.bootstrap, cfg.level, cfg.seed, grid)
    names = ["intercept", name]
    report = {
        "kind": "regression",
        "angle_convention": ANGLE_CONVENTION,
        "covariate": cfg.covariate,
        "months": months,
        "covariate_values": [float(v) for v in covariates],
        "coefficients": [model.parameter_spline(j).to_dict() for j in range(model.n_params)],
        "parameter_names": names,
        "bands": {
            "grid": grid.points.tolist(),
            "estimate": bands.estimate.tolist(),
            "lower": bands.lower.tolist(),
            "upper": bands.upper.tolist(),
            "simultaneous_lower": bands.sim_lower.tolist(),
            "simultaneous_upper": bands.sim_upper.tolist(),
            "level": bands.level,
        },
        "replicates": bands.replicates,
        "discarded": bands.discarded,
        "seed": bands.seed,
        "significance": significance_summary(bands, names=names),
        "significance_pointwise": significance_summary(bands, simultaneous=False, names=names),
    }
    return model, ds, bands, report


def cmd_predict(model, values: Sequence[float], grid: Grid) -> dict:
    preds = []
    for v in values:
        z = predict_clr(model, [v], grid)
        preds.append({
            "covariate": float(v),
            "clr": z.values.tolist(),
            "density": clr_inverse(z).values.tolist(),
        })
    return {"kind": "predictions", "angle_convention": ANGLE_CONVENTION,
            "grid": grid.points.tolist(), "predictions": preds}


def dump_json(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def fits_artifact(fits: Dict[str, Dict[str, FitResult]], hists: Sequence[MonthlyHistogram], cfg: RunConfig) -> dict:
    by_label = {h.label: h for h in hists}
    return {
        "kind": "fits",
        "angle_convention": ANGLE_CONVENTION,
        "preprocessing": {
            "bins": cfg.bins,
            "zero_strategy": cfg.zero_strategy,
            "pseudo_count": cfg.pseudo_count,
            "months_with_zero_bins": sum(1 for h in hists if h.zero_bins),
        },
        "variants": {
            v: {m: f.to_dict() for m, f in per.items()} for v, per in fits.items()
        },
        "data": {
            m: {"x": by_label[m].midpoints.tolist(), "clr": by_label[m].clr_values.tolist()}
            for m in sorted(by_label)
        },
    }


def spline_values(fit_dict: dict, grid: Grid) -> np.ndarray:
    from ..splinecore import PeriodicSplineZ

    s = PeriodicSplineZ.from_dict(fit_dict["spline"])
    return spline_curve(s.knots, s.coeffs_reduced, grid)[0]
