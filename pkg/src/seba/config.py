"""Run configuration: defaults, config-file parsing, flag overrides."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .basis import DEFAULT_RATIO, RectGeometry
from .errors import ConfigError
from .localization import LOCALIZED_THRESHOLDS, auto_cutoff


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved, deterministic run parameters (no RNG anywhere)."""

    E: float = 10.0 * math.pi
    x0_ratio: float = DEFAULT_RATIO
    y0_ratio: float = DEFAULT_RATIO
    alpha: float = math.inf
    count: int = 500
    basis_cutoff: float | str = "auto"       # positive real or "auto"
    amplitude_cutoff: float | str = "basis"  # positive real or "basis"
    threshold_lo: float = LOCALIZED_THRESHOLDS[0]
    threshold_hi: float = LOCALIZED_THRESHOLDS[1]
    nx: int = 256
    ny: int = 256

    def validate(self) -> "RunConfig":
        if not (math.isfinite(self.E) and self.E > 0):
            raise ConfigError(f"E: must be a positive finite real, got {self.E!r}")
        for key in ("x0_ratio", "y0_ratio"):
            v = getattr(self, key)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{key}: must lie strictly inside (0, 1), got {v!r}")
        if math.isnan(self.alpha) or self.alpha == -math.inf:
            raise ConfigError(f"alpha: must lie in (-inf, +inf], got {self.alpha!r}")
        if self.count < 1:
            raise ConfigError(f"count: must be >= 1, got {self.count!r}")
        if self.basis_cutoff != "auto" and not (
                isinstance(self.basis_cutoff, float) and self.basis_cutoff > 0):
            raise ConfigError(f"cutoff: must be a positive real or 'auto', "
                              f"got {self.basis_cutoff!r}")
        if self.amplitude_cutoff != "basis" and not (
                isinstance(self.amplitude_cutoff, float) and self.amplitude_cutoff > 0):
            raise ConfigError(f"amplitude_cutoff: must be a positive real or 'basis', "
                              f"got {self.amplitude_cutoff!r}")
        if not 0.0 <= self.threshold_lo < self.threshold_hi <= 1.0:
            raise ConfigError(f"thresholds: need 0 <= lo < hi <= 1, got "
                              f"({self.threshold_lo!r}, {self.threshold_hi!r})")
        if self.nx < 2 or self.ny < 2:
            raise ConfigError(f"grid: both sizes must be >= 2, got {self.nx}x{self.ny}")
        return self

    @property
    def thresholds(self) -> tuple[float, float]:
        return (self.threshold_lo, self.threshold_hi)

    def geometry(self) -> RectGeometry:
        return RectGeometry.from_ratios(self.E, self.x0_ratio, self.y0_ratio)

    def resolved_basis_cutoff(self) -> float:
        if self.basis_cutoff == "auto":
            return auto_cutoff(self.geometry(), self.count)
        return float(self.basis_cutoff)

    def resolved_amplitude_cutoff(self) -> float | None:
        # None means "use the basis cutoff" downstream.
        return None if self.amplitude_cutoff == "basis" else float(self.amplitude_cutoff)


def _parse_float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: malformed value {raw!r}")


def _parse_alpha(key, raw):
    text = raw.strip().lower()
    if text in ("inf", "+inf", "infinity"):
        return math.inf
    return _parse_float(key, raw)


def _parse_int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: malformed value {raw!r}")


def _parse_cutoff(key, raw, sentinel):
    if raw.strip().lower() == sentinel:
        return sentinel
    return _parse_float(key, raw)


def _parse_grid(key, raw):
    parts = raw.lower().split("x")
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected NXxNY, got {raw!r}")
    return _parse_int(key, parts[0]), _parse_int(key, parts[1])


# key -> (setter taking (config, raw_string) -> config)
_SETTERS = {
    "E": lambda c, v: replace(c, E=_parse_float("E", v)),
    "alpha": lambda c, v: replace(c, alpha=_parse_alpha("alpha", v)),
    "count": lambda c, v: replace(c, count=_parse_int("count", v)),
    "x0_ratio": lambda c, v: replace(c, x0_ratio=_parse_float("x0_ratio", v)),
    "y0_ratio": lambda c, v: replace(c, y0_ratio=_parse_float("y0_ratio", v)),
    "cutoff": lambda c, v: replace(c, basis_cutoff=_parse_cutoff("cutoff", v, "auto")),
    "amplitude_cutoff": lambda c, v: replace(
        c, amplitude_cutoff=_parse_cutoff("amplitude_cutoff", v, "basis")),
    "threshold_lo": lambda c, v: replace(c, threshold_lo=_parse_float("threshold_lo", v)),
    "threshold_hi": lambda c, v: replace(c, threshold_hi=_parse_float("threshold_hi", v)),
    "grid": lambda c, v: replace(c, nx=_parse_grid("grid", v)[0],
                                 ny=_parse_grid("grid", v)[1]),
}


def parse_config_text(text: str) -> dict[str, str]:
    """Flat key=value lines; blank lines and # comments allowed."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _SETTERS:
            raise ConfigError(f"{key}: unknown configuration key")
        out[key] = value.strip()
    return out


def parse_config(flags: dict[str, str], config_text: str | None = None) -> RunConfig:
    """Resolve a RunConfig: flags override file values override defaults.

    ``flags`` maps config keys to raw string values (only keys the user
    actually supplied).  Unknown keys are hard errors.
    """
    cfg = RunConfig()
    if config_text is not None:
        for key, value in parse_config_text(config_text).items():
            cfg = _SETTERS[key](cfg, value)
    for key, value in flags.items():
        if key not in _SETTERS:
            raise ConfigError(f"{key}: unknown configuration key")
        cfg = _SETTERS[key](cfg, value)
    return cfg.validate()


def _emit_value(value) -> str:
    if isinstance(value, float):
        return repr(value)  # shortest round-trip representation
    return str(value)


def emit_config(cfg: RunConfig) -> str:
    """Render the resolved config in the config-file format (round-trips)."""
    lines = [
        f"E={_emit_value(cfg.E)}",
        f"alpha={'inf' if cfg.alpha == math.inf else _emit_value(cfg.alpha)}",
        f"count={cfg.count}",
        f"x0_ratio={_emit_value(cfg.x0_ratio)}",
        f"y0_ratio={_emit_value(cfg.y0_ratio)}",
        f"cutoff={_emit_value(cfg.basis_cutoff)}",
        f"amplitude_cutoff={_emit_value(cfg.amplitude_cutoff)}",
        f"threshold_lo={_emit_value(cfg.threshold_lo)}",
        f"threshold_hi={_emit_value(cfg.threshold_hi)}",
        f"grid={cfg.nx}x{cfg.ny}",
    ]
    return "\n".join(lines) + "\n"
