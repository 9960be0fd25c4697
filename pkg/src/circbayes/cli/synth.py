"""Synthetic wind records: monthly von Mises mixtures with speed-dependent weights."""

from __future__ import annotations

import csv
import io
import math
from datetime import datetime, timedelta

import numpy as np

from ..circstats import von_mises_sample

# compass degrees of the two prevailing directions
WEST, SOUTHEAST = 265.0, 140.0


def synthetic_csv(months: int = 120, seed: int = 0, per_month: int = 240, calm_fraction: float = 0.02,
                  start: str = "2010-01-01") -> str:
    """CSV text with ``timestamp,wind_dir_deg,wind_speed_kmh,pressure_hpa`` rows.

    Each month mixes a westerly and a south-easterly von Mises component.  The
    westerly weight grows with wind speed, so a speed regression has a real
    signal while a time regression has none beyond the seasonal wobble.
    """
    if months < 1 or per_month < 1:
        raise ValueError("months and per_month must be positive")
    rng = np.random.default_rng(seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["timestamp", "wind_dir_deg", "wind_speed_kmh", "pressure_hpa"])
    t0 = datetime.fromisoformat(start)
    step = timedelta(hours=3)
    year, month = t0.year, t0.month
    for i in range(months):
        first = datetime(year, month, 1)
        season = math.cos(2 * math.pi * (month - 1) / 12)
        speed_level = 12.0 + 4.0 * season + rng.normal(0.0, 2.0)
        speeds = rng.gamma(4.0, max(speed_level, 2.0) / 4.0, size=per_month)
        p_west = 1.0 / (1.0 + np.exp(-(speeds - 12.0) / 4.0))
        west = rng.random(per_month) < p_west
        n_w = int(west.sum())
        child = int(rng.integers(0, 2**63))
        th_w = von_mises_sample(child, math.radians(WEST), 3.0, n_w).angles if n_w else np.empty(0)
        th_s = von_mises_sample(child + 1, math.radians(SOUTHEAST + 15 * season), 2.0, per_month - n_w).angles \
            if per_month - n_w else np.empty(0)
        dirs = np.empty(per_month)
        dirs[west] = th_w
        dirs[~west] = th_s
        deg = np.round(np.degrees(np.mod(dirs, 2 * math.pi)), 1) % 360.0
        calm = rng.random(per_month) < calm_fraction
        pressure = 1013.0 - 0.4 * speeds + rng.normal(0.0, 3.0, per_month)
        for j in range(per_month):
            stamp = (first + j * step).strftime("%Y-%m-%dT%H:%M:%S")
            if calm[j]:
                w.writerow([stamp, "", "0", f"{pressure[j]:.1f}"])
            else:
                w.writerow([stamp, f"{deg[j]:.1f}", f"{speeds[j]:.1f}", f"{pressure[j]:.1f}"])
        month += 1
        if month > 12:
            year, month = year + 1, 1
    return buf.getvalue()
