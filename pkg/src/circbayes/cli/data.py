"""Wind record ingestion and monthly circular histograms."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..bayes import ClrCurve, Grid
from ..errors import InputError

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
ZERO_STRATEGIES = ("additive", "multiplicative", "reject")


@dataclass(frozen=True)
class WindRecord:
    """One measurement row; ``direction_deg`` is clockwise from north, ``None`` if undefined."""

    timestamp: str
    direction_deg: Optional[float]
    speed: Optional[float]
    extra: Dict[str, str] = field(default_factory=dict)

    @property
    def direction_rad(self) -> Optional[float]:
        if self.direction_deg is None:
            return None
        return math.radians(self.direction_deg) % TWO_PI

    @property
    def month(self) -> str:
        return parse_timestamp(self.timestamp).strftime("%Y-%m")

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "direction_deg": self.direction_deg,
            "speed": self.speed,
            "extra": dict(self.extra),
        }


@dataclass
class IngestResult:
    records: List[WindRecord]
    total: int
    calm: int
    malformed: int
    problems: List[str] = field(default_factory=list)

    @property
    def retained(self) -> int:
        return len(self.records)

    def accounting(self) -> dict:
        return {
            "total_rows": self.total,
            "retained": self.retained,
            "calm_excluded": self.calm,
            "malformed": self.malformed,
        }


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text)


def _parse_float(text: str, what: str) -> Optional[float]:
    text = text.strip()
    if not text:
        return None
    try:
        val = float(text)
    except ValueError:
        raise ValueError(f"{what} {text!r} is not a number") from None
    if not math.isfinite(val):
        raise ValueError(f"{what} {text!r} is not finite")
    return val


def ingest(
    path,
    timestamp_col: str = "timestamp",
    direction_col: str = "wind_dir_deg",
    speed_col: str = "wind_speed_kmh",
    malformed_threshold: float = 0.01,
) -> IngestResult:
    """Read a CSV of wind observations.

    Calm rows (undefined direction or zero speed) are dropped and counted.
    Unparseable rows are counted as malformed; exceeding
    ``malformed_threshold`` as a fraction of all rows is an error.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in (timestamp_col, direction_col, speed_col) if c not in header]
        if missing:
            raise InputError(f"{path}: missing required column(s) {', '.join(missing)}")
        records, problems = [], []
        total = calm = malformed = 0
        for lineno, row in enumerate(reader, start=2):
            total += 1
            try:
                if None in row or any(v is None for v in row.values()):
                    raise ValueError("wrong number of fields")
                stamp = row[timestamp_col].strip()
                parse_timestamp(stamp)
                direction = _parse_float(row[direction_col], "direction")
                speed = _parse_float(row[speed_col], "speed")
                if speed is not None and speed < 0:
                    raise ValueError(f"negative speed {speed}")
                if direction is not None:
                    if not 0.0 <= direction <= 360.0:
                        raise ValueError(f"direction {direction} outside [0, 360]")
                    if direction == 360.0:
                        direction = 0.0
            except ValueError as exc:
                malformed += 1
                if len(problems) < 50:
                    problems.append(f"line {lineno}: {exc}")
                continue
            if direction is None or speed == 0.0:
                calm += 1
                continue
            extra = {
                k: v for k, v in row.items() if k not in (timestamp_col, direction_col, speed_col)
            }
            records.append(WindRecord(stamp, direction, speed, extra))
    if total and malformed > malformed_threshold * total:
        raise InputError(
            f"{path}: {malformed} of {total} rows malformed (threshold {malformed_threshold:.2%}); "
            + "; ".join(problems[:5])
        )
    for msg in problems:
        log.warning("%s: %s", path, msg)
    return IngestResult(records, total, calm, malformed, problems)


def group_by_month(records: Iterable[WindRecord]) -> Dict[str, List[WindRecord]]:
    out: Dict[str, List[WindRecord]] = {}
    for rec in records:
        out.setdefault(rec.month, []).append(rec)
    return dict(sorted(out.items()))


@dataclass(frozen=True, eq=False)
class MonthlyHistogram:
    """Equal-width circular histogram starting at north, with its discrete clr.

    ``clr_values`` are the clr of ``rel_freq`` at the bin midpoints (compass
    radians).
    """

    label: str
    bin_edges: np.ndarray
    counts: np.ndarray
    rel_freq: np.ndarray
    clr_values: np.ndarray
    zero_strategy: str
    zero_bins: int

    @property
    def m(self) -> int:
        return self.counts.size

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def grid(self) -> Grid:
        return Grid(0.0, TWO_PI, self.midpoints)

    @property
    def clr_curve(self) -> ClrCurve:
        return ClrCurve(self.grid, self.clr_values)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "bin_edges": self.bin_edges.tolist(),
            "counts": self.counts.tolist(),
            "rel_freq": self.rel_freq.tolist(),
            "clr_values": self.clr_values.tolist(),
            "zero_strategy": self.zero_strategy,
            "zero_bins": self.zero_bins,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MonthlyHistogram":
        return cls(
            d["label"],
            np.asarray(d["bin_edges"], dtype=float),
            np.asarray(d["counts"], dtype=int),
            np.asarray(d["rel_freq"], dtype=float),
            np.asarray(d["clr_values"], dtype=float),
            d["zero_strategy"],
            int(d["zero_bins"]),
        )


def histogram_from_angles(
    label: str,
    angles: Sequence[float],
    m_bins: int = 36,
    zero_strategy: str = "additive",
    pseudo_count: float = 0.5,
) -> MonthlyHistogram:
    """Bin angles (radians, already reduced to ``[0, 2 pi)``) into ``m_bins`` sectors.

    Zero counts are handled before the clr: ``additive`` adds ``pseudo_count``
    to every bin, ``multiplicative`` replaces zeros by
    ``delta = pseudo_count / total`` and shrinks the other proportions by
    ``1 - sum(delta)``, ``reject`` raises.
    """
    if m_bins < 4:
        raise InputError(f"need at least 4 bins, got {m_bins}")
    if zero_strategy not in ZERO_STRATEGIES:
        raise InputError(f"unknown zero strategy {zero_strategy!r}; choose from {ZERO_STRATEGIES}")
    th = np.asarray(angles, dtype=float)
    if th.size == 0:
        raise InputError(f"month {label} has no directional observations")
    if th.size < m_bins:
        log.warning("month %s: only %d observations for %d bins", label, th.size, m_bins)
    h = TWO_PI / m_bins
    idx = np.minimum((np.mod(th, TWO_PI) / h).astype(int), m_bins - 1)
    counts = np.bincount(idx, minlength=m_bins)
    total = counts.sum()
    zeros = int(np.sum(counts == 0))

    if zero_strategy == "additive":
        adj = counts + pseudo_count
        rel = adj / adj.sum()
    elif zero_strategy == "multiplicative":
        rel = counts / total
        delta = pseudo_count / total
        rel = np.where(counts == 0, delta, rel * (1.0 - delta * zeros))
    else:
        if zeros:
            raise InputError(f"month {label}: {zeros} empty bin(s) with zero strategy 'reject'")
        rel = counts / total
    if np.any(rel <= 0):
        raise InputError(f"month {label}: zero handling left non-positive frequencies")
    logp = np.log(rel)
    clr = logp - logp.mean()
    return MonthlyHistogram(
        label=label,
        bin_edges=h * np.arange(m_bins + 1),
        counts=counts,
        rel_freq=rel,
        clr_values=clr,
        zero_strategy=zero_strategy,
        zero_bins=zeros,
    )


def bin_month(
    records: Sequence[WindRecord],
    year_month: str,
    m_bins: int = 36,
    zero_strategy: str = "additive",
    pseudo_count: float = 0.5,
) -> MonthlyHistogram:
    angles = [r.direction_rad for r in records if r.month == year_month and r.direction_deg is not None]
    if not angles:
        raise InputError(f"month {year_month} has no directional observations")
    return histogram_from_angles(year_month, angles, m_bins, zero_strategy, pseudo_count)


def monthly_column_mean(records: Sequence[WindRecord], column: str, speed_col: str = "wind_speed_kmh") -> Dict[str, float]:
    """Per-month mean of the speed field or of a preserved extra column."""
    sums: Dict[str, List[float]] = {}
    for rec in records:
        if column in (speed_col, "speed"):
            val = rec.speed
        else:
            raw = rec.extra.get(column)
            if raw is None:
                raise InputError(f"column {column!r} is not present in the input")
            try:
                val = float(raw) if raw.strip() else None
            except ValueError:
                val = None
        if val is not None and math.isfinite(val):
            sums.setdefault(rec.month, []).append(val)
    return {k: float(np.mean(v)) for k, v in sorted(sums.items())}
