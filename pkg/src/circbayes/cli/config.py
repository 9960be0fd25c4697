"""Run configuration: defaults, TOML file loading, flag overrides, persistence."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import tomli

from ..errors import ConfigError
from ..splinecore import KnotConfig

VARIANTS = {
    "a": ("smoothing", 1),
    "b": ("smoothing", 2),
    "c": ("pspline", 1),
    "d": ("pspline", 2),
}


@dataclass
class RunConfig:
    input: str = ""
    out_dir: str = "out"
    seed: int = 0
    bins: int = 36
    knots: str = "9"
    degree: int = 3
    variant: str = "a"
    param: str = "auto"
    cyclic: bool = False
    bootstrap: int = 500
    level: float = 0.95
    grid: int = 360
    zero_strategy: str = "additive"
    pseudo_count: float = 0.5
    covariate: str = "time"
    predict_at: str = ""
    malformed_threshold: float = 0.01
    timestamp_col: str = "timestamp"
    direction_col: str = "wind_dir_deg"
    speed_col: str = "wind_speed_kmh"

    def validate(self) -> "RunConfig":
        if self.bins < 4:
            raise ConfigError(f"bins must be >= 4, got {self.bins}")
        if self.degree < 1:
            raise ConfigError(f"degree must be >= 1, got {self.degree}")
        for v in self.variants():
            kind, order = VARIANTS[v]
            if kind == "smoothing" and not 1 <= order <= self.degree - 1:
                raise ConfigError(f"variant ({v}) needs degree >= {order + 1}, got {self.degree}")
        if self.param != "auto":
            try:
                val = float(self.param)
            except ValueError:
                raise ConfigError(f"param must be 'auto' or a number, got {self.param!r}") from None
            if not math.isfinite(val) or val <= 0:
                raise ConfigError(f"param must be positive, got {self.param!r}")
        if self.bootstrap < 100:
            raise ConfigError(f"bootstrap must be >= 100, got {self.bootstrap}")
        if not 0 < self.level < 1:
            raise ConfigError(f"level must lie in (0, 1), got {self.level}")
        if self.grid < 8:
            raise ConfigError(f"grid must have at least 8 points, got {self.grid}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        self.knot_config()
        if self.knot_config().g + 1 > self.bins:
            raise ConfigError(f"{self.bins} bins cannot support {self.knot_config().g} inner knots (need bins >= g + 1)")
        return self

    def variants(self):
        names = ["a", "b", "c", "d"] if self.variant == "all" else [self.variant]
        for v in names:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}; choose a, b, c, d or all")
        return names

    def param_value(self) -> Optional[float]:
        return None if self.param == "auto" else float(self.param)

    def knot_config(self) -> KnotConfig:
        text = str(self.knots).strip()
        try:
            if "," in text:
                inner = tuple(float(t) for t in text.split(",") if t.strip())
                return KnotConfig(0.0, 2 * math.pi, self.degree, inner)
            return KnotConfig.uniform(int(text), self.degree)
        except ValueError as exc:
            raise ConfigError(f"invalid knots {self.knots!r}: {exc}") from exc

    def to_toml(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                lines.append(f"{f.name} = {'true' if v else 'false'}")
            elif isinstance(v, (int, float)):
                lines.append(f"{f.name} = {v!r}")
            else:
                esc = str(v).replace("\\", "\\\\").replace('"', '\\"')
                lines.append(f'{f.name} = "{esc}"')
        return "\n".join(lines) + "\n"


def _coerce(name: str, value, target):
    if isinstance(target, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false")
        return value
    try:
        if isinstance(target, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(target, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} has an invalid value {value!r}") from None


def load_config(path: Optional[str], overrides: dict) -> RunConfig:
    """Defaults, then the TOML file, then command-line overrides."""
    cfg = RunConfig()
    defaults = asdict(cfg)
    merged = {}
    if path:
        try:
            data = tomli.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
        unknown = sorted(set(data) - set(defaults))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        merged.update(data)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    for key, value in merged.items():
        setattr(cfg, key, _coerce(key, value, defaults[key]))
    return cfg.validate()
