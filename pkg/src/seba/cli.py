"""Command-line harness.

Subcommands: spectrum, field, table, sweep-alpha, sweep-ecc, amp-curve.
Exit codes: 0 success, 1 usage/config, 2 numerical, 3 IO.
Identical configuration yields byte-identical output regardless of
SEBA_THREADS; the resolved configuration is echoed to stderr.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import output
from .basis import build_basis
from .config import RunConfig, emit_config, parse_config
from .errors import ConfigError, NumericalError, SebaError
from .localization import (amplitude_curve, default_alpha_grid,
                           localization_table, scan_alpha, sweep_eccentricity)
from .scatterer import ScattererConfig, compute_spectrum, mode_field


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract reserves 2 for numerics.
    def error(self, message):
        raise UsageError(message)


_CONFIG_FLAGS = [
    ("--E", "E"),
    ("--alpha", "alpha"),
    ("--count", "count"),
    ("--x0-ratio", "x0_ratio"),
    ("--y0-ratio", "y0_ratio"),
    ("--cutoff", "cutoff"),
    ("--amplitude-cutoff", "amplitude_cutoff"),
    ("--threshold-lo", "threshold_lo"),
    ("--threshold-hi", "threshold_hi"),
    ("--grid", "grid"),
]


def _add_common(parser):
    for flag, _ in _CONFIG_FLAGS:
        parser.add_argument(flag, type=str, default=None)
    parser.add_argument("--config", type=str, default=None,
                        help="flat key=value config file")
    parser.add_argument("--out", type=str, default=None,
                        help="output path (default: stdout)")


def build_parser() -> _Parser:
    parser = _Parser(prog="seba",
                     description="Point-scatterer spectra and localization "
                                 "metrics on unit-area rectangles")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalues with interlacing brackets")
    _add_common(p)

    p = sub.add_parser("field", help="|psi|^2 of one mode on a grid")
    _add_common(p)
    p.add_argument("--mode", type=int, default=1)
    p.add_argument("--pgm", type=str, default=None,
                   help="also write a binary P5 graymap here")

    p = sub.add_parser("table", help="per-mode localization table")
    _add_common(p)

    p = sub.add_parser("sweep-alpha", help="localized counts over a coupling grid")
    _add_common(p)
    p.add_argument("--alphas", type=str, default=None,
                   help="comma-separated couplings (default: tan-spaced grid)")
    p.add_argument("--count-unperturbed", action="store_true")

    p = sub.add_parser("sweep-ecc", help="best-alpha localized counts over eccentricities")
    _add_common(p)
    p.add_argument("--e-grid", type=str, required=True,
                   help="comma-separated eccentricities")
    p.add_argument("--alphas", type=str, default=None)
    p.add_argument("--count-unperturbed", action="store_true")

    p = sub.add_parser("amp-curve", help="scatterer amplitude vs coupling")
    _add_common(p)
    p.add_argument("--modes", type=str, default="1,2,3,4")
    p.add_argument("--alpha-min", type=float, default=-5.0)
    p.add_argument("--alpha-max", type=float, default=5.0)
    p.add_argument("--samples", type=int, default=41)

    return parser


def _resolve_config(ns) -> RunConfig:
    flags = {}
    for _, key in _CONFIG_FLAGS:
        value = getattr(ns, key)
        if value is not None:
            flags[key] = value
    text = None
    if ns.config is not None:
        with open(ns.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_config(flags, text)


def _parse_list(raw: str, what: str) -> list[float]:
    items = [piece.strip() for piece in raw.split(",") if piece.strip()]
    if not items:
        raise UsageError(f"empty {what} grid")
    try:
        return [float(piece) for piece in items]
    except ValueError:
        raise UsageError(f"malformed {what} grid: {raw!r}")


def _scatterer_config(cfg: RunConfig) -> ScattererConfig:
    geometry = cfg.geometry()
    basis = build_basis(geometry, cfg.resolved_basis_cutoff())
    return ScattererConfig(geometry=geometry, alpha=cfg.alpha, basis=basis)


def cmd_spectrum(cfg: RunConfig) -> str:
    sc = _scatterer_config(cfg)
    spectrum = compute_spectrum(sc, cfg.count)
    dirichlet = sc.basis.eigenvalues
    rows = []
    for m in spectrum.modes:
        e_below = -math.inf if m.n == 1 else float(dirichlet[m.n - 2])
        e_above = float(dirichlet[m.n - 1])
        rows.append((m.n, m.z, m.kind, e_below, e_above))
    return output.spectrum_csv(rows)


def cmd_field(cfg: RunConfig, mode_index: int, pgm_path: str | None) -> str:
    if mode_index < 1:
        raise UsageError(f"--mode must be >= 1, got {mode_index}")
    sc = _scatterer_config(cfg)
    spectrum = compute_spectrum(sc, mode_index)
    field = mode_field(spectrum.modes[mode_index - 1], cfg.geometry(),
                       (cfg.nx, cfg.ny))
    intensity = field ** 2
    if pgm_path is not None:
        with open(pgm_path, "wb") as fh:
            fh.write(output.pgm_bytes(intensity))
    return output.field_csv(intensity)


def cmd_table(cfg: RunConfig) -> str:
    sc = _scatterer_config(cfg)
    records = localization_table(sc, cfg.count, cfg.resolved_amplitude_cutoff(),
                                 cfg.thresholds)
    return output.table_csv(records)


def cmd_sweep(cfg: RunConfig, ns) -> str:
    if ns.command == "sweep-alpha":
        grid = (default_alpha_grid() if ns.alphas is None
                else _parse_list(ns.alphas, "alpha"))
        result = scan_alpha(cfg.geometry(), grid, cfg.count,
                            cfg.resolved_amplitude_cutoff(),
                            thresholds=cfg.thresholds,
                            include_unperturbed=ns.count_unperturbed)
        return output.alpha_sweep_csv(result)
    if ns.command == "sweep-ecc":
        e_grid = _parse_list(ns.e_grid, "eccentricity")
        grid = (default_alpha_grid() if ns.alphas is None
                else _parse_list(ns.alphas, "alpha"))
        result = sweep_eccentricity(e_grid, grid, cfg.count,
                                    cfg.resolved_amplitude_cutoff(),
                                    x0_ratio=cfg.x0_ratio, y0_ratio=cfg.y0_ratio,
                                    thresholds=cfg.thresholds,
                                    include_unperturbed=ns.count_unperturbed)
        return output.ecc_sweep_csv(result)
    # amp-curve
    indices = [int(v) for v in _parse_list(ns.modes, "mode")]
    rows = amplitude_curve(cfg.geometry(), indices,
                           (ns.alpha_min, ns.alpha_max), ns.samples,
                           cfg.resolved_amplitude_cutoff())
    return output.amp_curve_csv(rows)


def _write_out(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        cfg = _resolve_config(ns)
        sys.stderr.write(emit_config(cfg))
        if ns.command == "spectrum":
            text = cmd_spectrum(cfg)
        elif ns.command == "field":
            text = cmd_field(cfg, ns.mode, ns.pgm)
        elif ns.command == "table":
            text = cmd_table(cfg)
        else:
            text = cmd_sweep(cfg, ns)
        _write_out(text, ns.out)
    except (UsageError, ConfigError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (NumericalError, ValueError) as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"io error: {exc}\n")
        return 3
    except SebaError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
