"""Localization metrics and parameter sweeps.

Two per-mode measurements quantify how the scatterer reshapes a mode:

* R1, the square root of the mode's L2 mass on the left sub-rectangle
  [0, x0] x [0, b].  A unit-norm mode counts as localized when R1 < 0.1
  or R1 > 0.9 (essentially all mass on one side of the scatterer line).
* A, the absolute mode amplitude at the scatterer.  The exact series for
  the amplitude diverges logarithmically at the scatterer, so A is always
  reported at an explicit spectral cutoff and is only comparable between
  runs sharing that cutoff.

R1 is evaluated in closed form: the y-integral is a Kronecker delta in k,
and the partial x-integrals of sine products have elementary antiderivatives,
making grid quadrature an independent cross-check rather than the workhorse.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .basis import RectGeometry, SpectralBasis, build_basis
from .errors import ConfigError, CutoffError, NormalizationError
from .scatterer import (PERTURBED, UNPERTURBED, PerturbedMode, ScattererConfig,
                        compute_spectrum)

LOCALIZED_THRESHOLDS = (0.1, 0.9)

ALPHA_GRID_POINTS = 101
ALPHA_GRID_CLIP = 50.0

# Auto basis cutoff: 8x the Weyl prediction for the requested mode count,
# at least 3x the ground eigenvalue, and a floor that keeps the spectral
# fluctuation of the renormalization constant small for tiny counts.
_CUTOFF_PER_MODE = 32.0 * math.pi
_CUTOFF_FLOOR = 4000.0


def auto_cutoff(geometry: RectGeometry, count: int) -> float:
    return max(_CUTOFF_PER_MODE * count, 3.0 * geometry.ground_eigenvalue(),
               _CUTOFF_FLOOR)


def thread_count() -> int:
    """Worker cap from SEBA_THREADS (0 or unset means auto)."""
    raw = os.environ.get("SEBA_THREADS", "0").strip()
    if raw.lower() in ("", "auto"):
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"SEBA_THREADS must be an integer or 'auto', got {raw!r}")
    if n < 0:
        raise ConfigError(f"SEBA_THREADS must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def _map_ordered(fn, items):
    """Map preserving order; parallel when allowed, identical output either way."""
    items = list(items)
    workers = min(thread_count(), len(items)) or 1
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class LocalizationRecord:
    """Per-mode localization metrics."""

    n: int
    z: float
    kind: str
    r1: float
    amplitude: float
    localized: bool


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Localization tables across an alpha grid or an eccentricity grid.

    For an alpha sweep ``axis`` is the alpha grid, ``records`` holds one
    table per alpha and ``best_alpha`` is a single float.  For an
    eccentricity sweep ``axis`` is the E grid, ``records`` holds the table
    at the per-E best alpha and ``best_alpha`` is a list aligned with the
    axis.  ``localized_count`` is aligned with the axis in both cases.
    """

    sweep_kind: str                  # "AlphaSweep" or "EccentricitySweep"
    axis: list
    records: list
    localized_count: list
    best_alpha: object


# ---------------------------------------------------------------------------
# closed-form overlap integrals


def overlap_integral(j: int, j_prime: int, x0: float, a: float) -> float:
    """(2/a) * integral_0^x0 sin(j pi x / a) sin(j' pi x / a) dx."""
    if j < 1 or j_prime < 1:
        raise ValueError("mode indices must be >= 1")
    if not 0.0 < x0 <= a:
        raise ValueError(f"x0={x0!r} must lie in (0, a={a!r}]")
    r = x0 / a
    if j == j_prime:
        return r - math.sin(2.0 * j * math.pi * r) / (2.0 * j * math.pi)
    d = j - j_prime
    s = j + j_prime
    return (math.sin(d * math.pi * r) / (d * math.pi)
            - math.sin(s * math.pi * r) / (s * math.pi))


def _overlap_matrix(jmax: int, ratio: float) -> np.ndarray:
    jj = np.arange(1, jmax + 1, dtype=float)
    d = jj[:, None] - jj[None, :]
    s = jj[:, None] + jj[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.sin(d * math.pi * ratio) / (d * math.pi)
    off -= np.sin(s * math.pi * ratio) / (s * math.pi)
    diag = ratio - np.sin(2.0 * jj * math.pi * ratio) / (2.0 * jj * math.pi)
    out = np.where(np.eye(jmax, dtype=bool), diag[:, None], off)
    return out


def _basis_k_groups(basis: SpectralBasis):
    """Indices of basis modes grouped by transverse index k (cached)."""
    hit = basis._cache.get("kgroups")
    if hit is not None:
        return hit
    groups = []
    for k in np.unique(basis.k):
        idx = np.nonzero(basis.k == k)[0]
        groups.append((idx, basis.j[idx].astype(np.intp) - 1))
    basis._cache["kgroups"] = groups
    return groups


def _cached_overlap(basis: SpectralBasis, ratio: float) -> np.ndarray:
    key = ("overlap", float(ratio))
    hit = basis._cache.get(key)
    if hit is None:
        hit = _overlap_matrix(int(basis.j.max()), ratio)
        basis._cache[key] = hit
    return hit


def _l2_ratios_batch(coeff_rows: np.ndarray, basis: SpectralBasis,
                     ratio: float, complement: bool = False) -> np.ndarray:
    """R1 for a (n_modes, n_basis) coefficient matrix."""
    O = _cached_overlap(basis, ratio)
    if complement:
        O = np.eye(O.shape[0]) - O
    mass = np.zeros(coeff_rows.shape[0])
    for idx, jidx in _basis_k_groups(basis):
        Ck = coeff_rows[:, idx]
        Ok = O[np.ix_(jidx, jidx)]
        mass += np.einsum("ij,ij->i", Ck @ Ok, Ck)
    return np.sqrt(np.clip(mass, 0.0, 1.0))


def l2_ratio(mode: PerturbedMode, geometry: RectGeometry,
             x_cut: float | None = None, complement: bool = False) -> float:
    """Square root of the mode's L2 mass on [0, x_cut] x [0, b].

    ``x_cut`` defaults to the scatterer abscissa; ``complement`` integrates
    over the mirrored sub-domain [x_cut, a] x [0, b] instead.
    """
    total = float(mode.coeffs @ mode.coeffs)
    if abs(total - 1.0) > 1e-9:
        raise NormalizationError(
            f"coefficients have squared norm {total!r}, expected 1 within 1e-9")
    if x_cut is None:
        x_cut = geometry.x0
    if not 0.0 < x_cut <= geometry.a:
        raise ValueError(f"x_cut={x_cut!r} must lie in (0, a]")
    row = mode.coeffs[None, :]
    return float(_l2_ratios_batch(row, mode.basis, x_cut / geometry.a,
                                  complement=complement)[0])


# ---------------------------------------------------------------------------
# scatterer amplitude


def _amplitudes_batch(coeff_rows: np.ndarray, basis: SpectralBasis,
                      cutoff: float) -> np.ndarray:
    mask = basis.eigenvalues <= cutoff
    return np.abs(coeff_rows[:, mask] @ basis.values_at_scatterer[mask])


def _resolve_amp_cutoff(basis: SpectralBasis, cutoff: float | None) -> float:
    if cutoff is None:
        return basis.cutoff
    if cutoff > basis.cutoff * (1.0 + 1e-12):
        raise CutoffError(f"amplitude cutoff {cutoff!r} exceeds the basis cutoff "
                          f"{basis.cutoff!r}")
    return float(cutoff)


def amplitude_at_scatterer(mode: PerturbedMode, geometry: RectGeometry,
                           cutoff: float | None = None) -> float:
    """|psi(x0)| summed over basis modes with eigenvalue <= cutoff.

    Cutoff-dependent by construction: the full series diverges
    logarithmically at the scatterer, so absolute values are only
    meaningful at a fixed cutoff (defaults to the basis cutoff).
    """
    cutoff = _resolve_amp_cutoff(mode.basis, cutoff)
    return float(_amplitudes_batch(mode.coeffs[None, :], mode.basis, cutoff)[0])


# ---------------------------------------------------------------------------
# tables and sweeps


def localization_table(config: ScattererConfig, count: int,
                       amplitude_cutoff: float | None = None,
                       thresholds: tuple[float, float] = LOCALIZED_THRESHOLDS,
                       ) -> list[LocalizationRecord]:
    """Spectrum plus per-mode (R1, A, localized) for modes 1..count."""
    lo, hi = thresholds
    if not lo < hi:
        raise ValueError(f"thresholds must be ordered, got {thresholds!r}")
    amp_cut = _resolve_amp_cutoff(config.basis, amplitude_cutoff)
    spectrum = compute_spectrum(config, count)
    C = np.stack([m.coeffs for m in spectrum.modes])
    ratio = config.geometry.x0 / config.geometry.a
    r1 = _l2_ratios_batch(C, config.basis, ratio)
    amp = _amplitudes_batch(C, config.basis, amp_cut)
    return [
        LocalizationRecord(n=m.n, z=m.z, kind=m.kind, r1=float(r1[i]),
                           amplitude=float(amp[i]),
                           localized=bool(r1[i] < lo or r1[i] > hi))
        for i, m in enumerate(spectrum.modes)
    ]


def localized_count(records, include_unperturbed: bool = False) -> int:
    """Number of localized modes, excluding the ground mode.

    Mode 1 behaves as an attractor rather than a barrier mode, so it never
    enters the count that alpha scans maximize.
    """
    return sum(1 for r in records
               if r.localized and r.n >= 2
               and (include_unperturbed or r.kind == PERTURBED))


def default_alpha_grid(points: int = ALPHA_GRID_POINTS,
                       clip: float = ALPHA_GRID_CLIP) -> list[float]:
    """Tangent-spaced coupling grid, clipped to [-clip, clip].

    F maps every interlacing interval onto all of R, so a uniform alpha grid
    oversamples weak coupling; tan spacing matches the natural compactified
    parametrization.
    """
    theta = -math.pi / 2.0 + math.pi * (np.arange(points) + 0.5) / points
    grid = np.clip(np.tan(theta), -clip, clip)
    return [float(g) for g in grid]


def scan_alpha(geometry: RectGeometry, alpha_grid, count: int,
               amplitude_cutoff: float | None = None,
               basis: SpectralBasis | None = None,
               thresholds: tuple[float, float] = LOCALIZED_THRESHOLDS,
               include_unperturbed: bool = False) -> SweepResult:
    """Localization tables on a coupling grid; best alpha maximizes the count.

    Ties prefer the smallest |alpha|.  Evaluation may be parallel across the
    grid but results are assembled in grid order, so output is deterministic.
    """
    alphas = [float(x) for x in alpha_grid]
    if not alphas:
        raise ConfigError("alpha grid must be nonempty")
    if any(not math.isfinite(x) for x in alphas):
        raise ConfigError("alpha grid values must be finite")
    if basis is None:
        basis = build_basis(geometry, auto_cutoff(geometry, count))

    def table_at(alpha):
        cfg = ScattererConfig(geometry=geometry, alpha=alpha, basis=basis)
        return localization_table(cfg, count, amplitude_cutoff, thresholds)

    tables = _map_ordered(table_at, alphas)
    counts = [localized_count(t, include_unperturbed) for t in tables]
    best_i = min(range(len(alphas)),
                 key=lambda i: (-counts[i], abs(alphas[i]), alphas[i]))
    return SweepResult(sweep_kind="AlphaSweep", axis=alphas, records=tables,
                       localized_count=counts, best_alpha=alphas[best_i])


def sweep_eccentricity(e_grid, alpha_grid, count: int,
                       amplitude_cutoff: float | None = None,
                       x0_ratio: float | None = None,
                       y0_ratio: float | None = None,
                       thresholds: tuple[float, float] = LOCALIZED_THRESHOLDS,
                       include_unperturbed: bool = False) -> SweepResult:
    """Best-alpha localized counts across plate eccentricities."""
    es = [float(e) for e in e_grid]
    if not es:
        raise ConfigError("eccentricity grid must be nonempty")
    if any(not (math.isfinite(e) and e > 0) for e in es):
        raise ConfigError("eccentricity grid values must be positive and finite")
    kwargs = {}
    if x0_ratio is not None:
        kwargs["x0_ratio"] = x0_ratio
    if y0_ratio is not None:
        kwargs["y0_ratio"] = y0_ratio
    best_alphas = []
    best_tables = []
    best_counts = []
    for e in es:
        geometry = RectGeometry.from_ratios(e, **kwargs)
        scan = scan_alpha(geometry, alpha_grid, count, amplitude_cutoff,
                          thresholds=thresholds,
                          include_unperturbed=include_unperturbed)
        i = scan.axis.index(scan.best_alpha)
        best_alphas.append(scan.best_alpha)
        best_tables.append(scan.records[i])
        best_counts.append(scan.localized_count[i])
    return SweepResult(sweep_kind="EccentricitySweep", axis=es,
                       records=best_tables, localized_count=best_counts,
                       best_alpha=best_alphas)


def amplitude_curve(geometry: RectGeometry, mode_indices, alpha_range,
                    samples: int, amplitude_cutoff: float | None = None,
                    basis: SpectralBasis | None = None,
                    ) -> list[tuple[float, int, float]]:
    """A(n, alpha) for the requested modes on a uniform alpha grid.

    Returns (alpha, n, A) rows sorted by alpha then n.
    """
    indices = sorted(set(int(n) for n in mode_indices))
    if not indices or indices[0] < 1:
        raise ConfigError("mode indices must be a nonempty set of integers >= 1")
    if samples < 2:
        raise ConfigError(f"samples must be >= 2, got {samples!r}")
    lo, hi = float(alpha_range[0]), float(alpha_range[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ConfigError(f"alpha range must be finite with lo < hi, got {alpha_range!r}")
    count = indices[-1]
    if basis is None:
        basis = build_basis(geometry, auto_cutoff(geometry, count))
    amp_cut = _resolve_amp_cutoff(basis, amplitude_cutoff)

    def rows_at(alpha):
        cfg = ScattererConfig(geometry=geometry, alpha=alpha, basis=basis)
        spectrum = compute_spectrum(cfg, count)
        return [(alpha, n, amplitude_at_scatterer(spectrum.modes[n - 1],
                                                  geometry, amp_cut))
                for n in indices]

    grid = np.linspace(lo, hi, samples)
    out = []
    for chunk in _map_ordered(rows_at, [float(g) for g in grid]):
        out.extend(chunk)
    return out
