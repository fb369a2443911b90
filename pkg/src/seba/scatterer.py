"""Point-scatterer spectra on the rectangle.

The self-adjoint operator is parametrized by a coupling constant
alpha in (-inf, +inf]; alpha = +inf is the plain Dirichlet Laplacian.
Eigenvalues split into two families:

* perturbed: solutions z of the secular equation alpha = F(z), exactly one
  per open interval between consecutive poles of F (and one on the
  unbounded interval below the spectrum), with eigenfunction proportional
  to the resolvent kernel pinned at the scatterer;
* unperturbed: Dirichlet eigenvalues whose eigenspace contains functions
  vanishing at the scatterer; they survive for every alpha.

F(z) is the renormalized diagonal resolvent

    F(z) = sum_n phi_n(x0)^2 (1/(E_n - z) - E_n/(E_n^2 + 1)),

evaluated by truncating at the basis cutoff and adding the closed-form
Weyl-tail continuation of the summand (the raw truncated series converges
far too slowly for deeply negative z).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import RectGeometry, SpectralBasis
from .errors import (InsufficientBasisError, NoRootError, NumericalError,
                     PoleProximityError)

PERTURBED = "Perturbed"
UNPERTURBED = "Unperturbed"

# Two eigenvalues closer than this (relative) form a degenerate cluster.
DEGENERACY_RTOL = 1e-9
# Bisection target width, relative to max(1, |z|).
ROOT_RTOL = 1e-10
# Bracket expansion below the spectrum stops here; roots this deep mean the
# coupling is far outside the numerically representable regime.
DEEP_Z_LIMIT = -1e290

_FOUR_PI = 4.0 * math.pi
_EPS = float(np.finfo(float).eps)


def default_null_tolerance(geometry: RectGeometry) -> float:
    """|phi(x0)| below this is treated as an exact zero.

    Scaled by the sup of the basis functions, 2/sqrt(ab); floating sine
    evaluations never land exactly on zero for generic scatterer locations.
    """
    return 1e-8 * 2.0 / math.sqrt(geometry.a * geometry.b)


@dataclass(frozen=True)
class Cluster:
    """A maximal group of numerically degenerate Dirichlet eigenvalues."""

    start: int            # basis index of the first member
    stop: int             # one past the last member
    eigenvalue: float     # representative (lowest member)
    mu: int               # multiplicity
    mu_null: int          # members with phi(x0) = 0 (within tolerance)
    weight: float         # sum of phi(x0)^2 over non-null members

    @property
    def retained_multiplicity(self) -> int:
        # The scatterer removes one dimension unless the whole eigenspace
        # already vanishes at x0.
        return self.mu if self.mu_null == self.mu else self.mu - 1

    @property
    def is_pole(self) -> bool:
        return self.weight > 0.0


@dataclass(frozen=True, eq=False)
class SpectralStructure:
    """Per-basis arrays derived once and shared by every coupling value."""

    null_tolerance: float
    weights: np.ndarray          # thresholded phi(x0)^2, nulls zeroed
    active_eigenvalues: np.ndarray
    active_weights: np.ndarray
    renorm_const: float          # sum w E/(E^2+1) over active modes
    clusters: tuple
    pole_eigenvalues: np.ndarray  # representative eigenvalue of each pole cluster


def spectral_structure(basis: SpectralBasis, null_tolerance: float) -> SpectralStructure:
    """Cluster the basis spectrum and threshold the scatterer weights (cached)."""
    key = ("structure", float(null_tolerance))
    hit = basis._cache.get(key)
    if hit is not None:
        return hit
    ev = basis.eigenvalues
    phi = basis.values_at_scatterer
    null = np.abs(phi) < null_tolerance
    weights = np.where(null, 0.0, phi ** 2)

    clusters = []
    n = len(ev)
    start = 0
    for i in range(1, n + 1):
        if i == n or (ev[i] - ev[i - 1]) >= DEGENERACY_RTOL * max(1.0, ev[i]):
            mu = i - start
            mu_null = int(null[start:i].sum())
            clusters.append(Cluster(start=start, stop=i,
                                    eigenvalue=float(ev[start]),
                                    mu=mu, mu_null=mu_null,
                                    weight=float(weights[start:i].sum())))
            start = i
    poles = np.array([c.eigenvalue for c in clusters if c.is_pole])
    active = weights > 0.0
    aw = weights[active]
    ae = ev[active]
    out = SpectralStructure(
        null_tolerance=float(null_tolerance),
        weights=weights,
        active_eigenvalues=ae,
        active_weights=aw,
        renorm_const=float(np.dot(aw, ae / (ae ** 2 + 1.0))),
        clusters=tuple(clusters),
        pole_eigenvalues=poles,
    )
    basis._cache[key] = out
    return out


@dataclass(frozen=True, eq=False)
class ScattererConfig:
    """Geometry + coupling + truncated basis for one scatterer problem.

    alpha = +inf is the no-scatterer sentinel (Dirichlet limit).
    ``tail_correction`` switches the Weyl-tail continuation of the spectral
    function; it exists so the effect of the correction can be measured.
    """

    geometry: RectGeometry
    alpha: float
    basis: SpectralBasis
    null_tolerance: float | None = None
    tail_correction: bool = True
    deep_z_limit: float = DEEP_Z_LIMIT

    def __post_init__(self):
        if math.isnan(self.alpha) or self.alpha == -math.inf:
            raise ValueError(f"alpha must lie in (-inf, +inf], got {self.alpha!r}")
        if self.basis.geometry != self.geometry:
            raise ValueError("basis was built for a different geometry")
        if self.null_tolerance is None:
            object.__setattr__(self, "null_tolerance",
                               default_null_tolerance(self.geometry))
        if not self.null_tolerance > 0:
            raise ValueError("null_tolerance must be positive")

    @property
    def structure(self) -> SpectralStructure:
        return spectral_structure(self.basis, self.null_tolerance)


@dataclass(frozen=True)
class EigenvalueClass:
    """How one Dirichlet eigenvalue behaves under the scatterer.

    retained_multiplicity is its multiplicity in the perturbed spectrum
    (0 means it leaves the spectrum entirely); ``pole`` says whether the
    spectral function has a pole there, i.e. whether a perturbed eigenvalue
    branch attaches to it.
    """

    eigenvalue: float
    mu: int
    mu_null: int
    retained_multiplicity: int
    pole: bool

    @property
    def kind(self) -> str:
        return UNPERTURBED if self.retained_multiplicity >= 1 else "PerturbedPole"


@dataclass(frozen=True, eq=False)
class PerturbedMode:
    """One eigenpair, as unit-norm coefficients over the Dirichlet basis."""

    n: int                      # 1-based position in the ordered spectrum
    z: float
    kind: str                   # PERTURBED or UNPERTURBED
    coeffs: np.ndarray          # aligned with basis arrays, sum c^2 = 1
    normalization: float        # L2 norm of the raw resolvent series (1 for unperturbed)
    basis: SpectralBasis = field(repr=False)

    @property
    def coefficients(self) -> list[tuple[int, int, float]]:
        b = self.basis
        return [(int(b.j[i]), int(b.k[i]), float(self.coeffs[i]))
                for i in range(len(b))]


@dataclass(frozen=True, eq=False)
class ScattererSpectrum:
    """The first modes of the scatterer operator, ascending in z."""

    config: ScattererConfig
    modes: tuple

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([m.z for m in self.modes])

    def __len__(self) -> int:
        return len(self.modes)


# ---------------------------------------------------------------------------
# spectral function


def _tail(cutoff: float, z, on: bool):
    # Weyl continuation of the summand past the cutoff: the spectral sum is
    # replaced by the density-1/(4 pi) integral of (1/(E-z) - E/(E^2+1)).
    if not on:
        return 0.0
    return -np.log((cutoff - z) / math.sqrt(cutoff ** 2 + 1.0)) / _FOUR_PI


def _f_many(config: ScattererConfig, z: np.ndarray) -> np.ndarray:
    """Spectral function at an array of non-pole points (no validation)."""
    s = config.structure
    recip = 1.0 / (s.active_eigenvalues[:, None] - z[None, :])
    out = s.active_weights @ recip - s.renorm_const
    return out + _tail(config.basis.cutoff, z, config.tail_correction)


def _fprime_many(config: ScattererConfig, z: np.ndarray) -> np.ndarray:
    # Two divisions keep (E - z)^2 from overflowing for very deep z.
    s = config.structure
    diff = s.active_eigenvalues[:, None] - z[None, :]
    out = s.active_weights @ ((1.0 / diff) / diff)
    if config.tail_correction:
        out = out + (1.0 / _FOUR_PI) / (config.basis.cutoff - z)
    return out


def _check_not_pole(config: ScattererConfig, z: float) -> None:
    poles = config.structure.pole_eigenvalues
    if poles.size == 0:
        return
    i = np.searchsorted(poles, z)
    for idx in (i - 1, i):
        if 0 <= idx < poles.size:
            p = float(poles[idx])
            if abs(z - p) < 1e-9 * max(1.0, abs(p)):
                raise PoleProximityError(z, p)


def f_eval(z: float, config: ScattererConfig) -> float:
    """Renormalized spectral function F(z); strictly increasing between poles."""
    if z >= config.basis.cutoff:
        raise NumericalError(f"z={z!r} is not below the basis cutoff "
                             f"{config.basis.cutoff!r}")
    _check_not_pole(config, z)
    return float(_f_many(config, np.array([z]))[0])


def f_derivative(z: float, config: ScattererConfig) -> float:
    """dF/dz, a sum of squares plus the Weyl-tail term; strictly positive."""
    if z >= config.basis.cutoff:
        raise NumericalError(f"z={z!r} is not below the basis cutoff "
                             f"{config.basis.cutoff!r}")
    _check_not_pole(config, z)
    return float(_fprime_many(config, np.array([z]))[0])


# ---------------------------------------------------------------------------
# secular equation


class _Workspace:
    """Preallocated scratch for repeated spectral-function evaluations.

    The secular solvers evaluate F at O(50) batches of points; reusing one
    (modes x points) buffer avoids churning tens of MB of temporaries per
    bisection step.
    """

    def __init__(self, config: ScattererConfig, capacity: int):
        s = config.structure
        self.E = s.active_eigenvalues
        self.w = s.active_weights
        self.renorm = s.renorm_const
        self.cutoff = config.basis.cutoff
        self.tail_on = config.tail_correction
        self.buf = np.empty((self.E.size, max(capacity, 1)))

    def f(self, z: np.ndarray) -> np.ndarray:
        work = self.buf[:, :z.size]
        np.subtract(self.E[:, None], z[None, :], out=work)
        np.divide(1.0, work, out=work)
        out = self.w @ work
        out -= self.renorm
        if self.tail_on:
            out -= np.log((self.cutoff - z) / math.sqrt(self.cutoff ** 2 + 1.0)) / _FOUR_PI
        return out

    def fprime(self, z: np.ndarray) -> np.ndarray:
        # square after the reciprocal: underflows to 0 instead of overflowing
        work = self.buf[:, :z.size]
        np.subtract(self.E[:, None], z[None, :], out=work)
        np.divide(1.0, work, out=work)
        np.multiply(work, work, out=work)
        out = self.w @ work
        if self.tail_on:
            out += (1.0 / _FOUR_PI) / (self.cutoff - z)
        return out


def _newton_polish(ws, z, lo, hi, alpha, steps=5):
    """Safeguarded Newton; steps leaving the bracket are rejected."""
    for _ in range(steps):
        fz = ws.f(z)
        dz = ws.fprime(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = (fz - alpha) / dz
        cand = z - step
        ok = np.isfinite(cand) & (cand > lo) & (cand < hi)
        z = np.where(ok, cand, z)
    return z


def _bisect(ws, a, b, alpha, max_iter=2500):
    """Vector bisection of F(z) = alpha on brackets with F(a) <= alpha <= F(b).

    Converged brackets drop out of the evaluation set each iteration.
    """
    a = a.copy()
    b = b.copy()
    idx = np.arange(a.size)
    for _ in range(max_iter):
        mid = 0.5 * (a[idx] + b[idx])
        below = ws.f(mid) < alpha
        a[idx[below]] = mid[below]
        b[idx[~below]] = mid[~below]
        live = (b[idx] - a[idx]) > ROOT_RTOL * np.maximum(1.0, np.abs(mid))
        idx = idx[live]
        if idx.size == 0:
            break
    return a, b


def _shrink_to_sign(ws, pole, offsets, alpha, want_below, max_iter=220):
    """Move bracket endpoints toward a pole until F has the wanted side of alpha.

    ``pole`` and ``offsets`` are arrays; the endpoint is pole - offsets for the
    upper side (want_below=False) and pole + offsets for the lower side.
    The offset is floored near the spacing of representable doubles.
    """
    sign = 1.0 if want_below else -1.0
    offsets = offsets.copy()
    floor = 16.0 * _EPS * np.maximum(1.0, np.abs(pole))
    idx = np.arange(pole.size)
    for _ in range(max_iter):
        f = ws.f(pole[idx] + sign * offsets[idx])
        bad = (f >= alpha) if want_below else (f <= alpha)
        bad &= offsets[idx] > floor[idx]
        idx = idx[bad]
        if idx.size == 0:
            break
        offsets[idx] = np.maximum(offsets[idx] * 0.25, floor[idx])
    return offsets


def _solve_bounded_many(config, lo_poles, hi_poles, alpha, ws=None):
    """One secular root strictly inside each (lo_poles[i], hi_poles[i])."""
    if ws is None:
        ws = _Workspace(config, lo_poles.size)
    gap = hi_poles - lo_poles
    off_lo = _shrink_to_sign(ws, lo_poles, gap * 0.25, alpha, want_below=True)
    off_hi = _shrink_to_sign(ws, hi_poles, gap * 0.25, alpha, want_below=False)
    a = lo_poles + off_lo
    b = hi_poles - off_hi
    a, b = _bisect(ws, a, b, alpha)
    z = 0.5 * (a + b)
    return _newton_polish(ws, z, a, b, alpha)


def _solve_unbounded(config, first_pole: float, gap_hint: float, alpha: float,
                     ws=None) -> float:
    """The secular root on (-inf, first_pole)."""
    if ws is None:
        ws = _Workspace(config, 1)
    p1 = np.array([first_pole])
    off = _shrink_to_sign(ws, p1, np.array([gap_hint * 0.25]), alpha,
                          want_below=False)
    b = float(p1[0] - off[0])
    # Geometric expansion: F -> -inf only logarithmically, so powers of two
    # reach any representable root in ~1000 evaluations.
    m = 0
    while True:
        cand = first_pole - 2.0 ** m
        if cand < config.deep_z_limit:
            raise NoRootError(
                f"no secular root above z={config.deep_z_limit!r} for "
                f"alpha={alpha!r}; coupling is outside the representable regime"
            )
        if cand < b and float(ws.f(np.array([cand]))[0]) < alpha:
            break
        m += 1
    a = cand
    aa, bb = _bisect(ws, np.array([a]), np.array([b]), alpha)
    z = 0.5 * (aa + bb)
    z = _newton_polish(ws, z, aa, bb, alpha)
    return float(z[0])


def solve_secular_on_interval(lo: float, hi: float, alpha: float,
                              config: ScattererConfig) -> float:
    """Unique z in (lo, hi) with F(z) = alpha.

    (lo, hi) must be the unbounded interval (-inf, first pole) or an open
    interval between consecutive poles of F.  F is strictly increasing on
    every such interval, so the root exists and is unique.
    """
    if not math.isfinite(alpha):
        raise ValueError(f"alpha must be finite for secular solving, got {alpha!r}")
    poles = config.structure.pole_eigenvalues
    if poles.size == 0:
        raise NumericalError("basis has no non-null eigenvalues: F has no poles")
    ih = int(np.searchsorted(poles, hi))
    match = None
    for idx in (ih - 1, ih):
        if 0 <= idx < poles.size and abs(poles[idx] - hi) <= 1e-9 * max(1.0, abs(hi)):
            match = idx
    if match is None:
        raise ValueError(f"hi={hi!r} is not a pole of the spectral function")
    if lo == -math.inf:
        if match != 0:
            raise ValueError("the unbounded interval must end at the first pole")
        gap_hint = float(poles[1] - poles[0]) if poles.size > 1 else 1.0
        return _solve_unbounded(config, float(poles[0]), gap_hint, alpha)
    if match == 0 or abs(poles[match - 1] - lo) > 1e-9 * max(1.0, abs(lo)):
        raise ValueError(f"(lo, hi)=({lo!r}, {hi!r}) is not an interval between "
                         "consecutive poles")
    z = _solve_bounded_many(config, np.array([lo]), np.array([hi]), alpha)
    return float(z[0])


# ---------------------------------------------------------------------------
# classification and full spectra


def classify_eigenvalue(eigenvalue: float, config: ScattererConfig) -> EigenvalueClass:
    """Apply the multiplicity rule to one Dirichlet eigenvalue.

    The eigenvalue stays in the perturbed spectrum iff some eigenspace
    member vanishes at the scatterer (mu_null >= 1) or the eigenspace is
    degenerate (mu >= 2); it keeps multiplicity mu when the whole eigenspace
    vanishes there and mu - 1 otherwise.
    """
    for c in config.structure.clusters:
        if abs(c.eigenvalue - eigenvalue) <= DEGENERACY_RTOL * max(1.0, abs(eigenvalue)):
            return EigenvalueClass(eigenvalue=c.eigenvalue, mu=c.mu,
                                   mu_null=c.mu_null,
                                   retained_multiplicity=c.retained_multiplicity,
                                   pole=c.is_pole)
    raise ValueError(f"{eigenvalue!r} is not a basis eigenvalue")


def _vanishing_basis(values: np.ndarray, null_tolerance: float) -> np.ndarray:
    """Orthonormal rows spanning {c : c . values = 0} within a cluster.

    For an all-null cluster this is the identity (every member survives
    untouched); otherwise Gram-Schmidt against the unit normal yields the
    (mu - 1)-dimensional complement, deterministically.
    """
    mu = values.size
    if np.all(np.abs(values) < null_tolerance):
        return np.eye(mu)
    v = values / np.linalg.norm(values)
    rows = []
    for i in range(mu):
        w = np.zeros(mu)
        w[i] = 1.0
        w -= (w @ v) * v
        for r in rows:
            w -= (w @ r) * r
        norm = np.linalg.norm(w)
        if norm > 1e-10:
            rows.append(w / norm)
        if len(rows) == mu - 1:
            break
    return np.array(rows).reshape(len(rows), mu)


def _normalized(raw: np.ndarray) -> tuple[np.ndarray, float]:
    # Scale before the norm so deep-z coefficient vectors (entries ~ 1/|z|)
    # do not underflow in the sum of squares.
    scale = float(np.max(np.abs(raw)))
    if scale == 0.0:
        raise NumericalError("degenerate resolvent series: all coefficients vanish")
    scaled = raw / scale
    norm = float(np.linalg.norm(scaled))
    return scaled / norm, norm * scale


def _perturbed_mode_coeffs(config: ScattererConfig, z: float):
    phi = config.basis.values_at_scatterer
    if z == -math.inf:
        coeffs, _ = _normalized(phi)
        return coeffs, 0.0
    raw = phi / (config.basis.eigenvalues - z)
    return _normalized(raw)


def compute_spectrum(config: ScattererConfig, count: int) -> ScattererSpectrum:
    """First ``count`` eigenpairs of the scatterer operator, ascending in z.

    Merges the secular roots (one per interlacing interval, plus the
    unbounded interval below the spectrum) with the surviving Dirichlet
    eigenvalues at their retained multiplicities.  With alpha = +inf the
    Dirichlet modes pass through unchanged.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count!r}")
    basis = config.basis

    if config.alpha == math.inf:
        if count > len(basis):
            raise InsufficientBasisError(
                f"basis holds {len(basis)} modes, requested {count}")
        modes = []
        for i in range(count):
            c = np.zeros(len(basis))
            c[i] = 1.0
            modes.append(PerturbedMode(n=i + 1, z=float(basis.eigenvalues[i]),
                                       kind=UNPERTURBED, coeffs=c,
                                       normalization=1.0, basis=basis))
        return ScattererSpectrum(config=config, modes=tuple(modes))

    s = config.structure
    poles = s.pole_eigenvalues
    usable = int(np.searchsorted(poles, basis.cutoff / 2.0, side="right"))
    if usable < count + 1:
        raise InsufficientBasisError(
            f"only {usable} non-null eigenvalues below cutoff/2; need {count + 1} "
            f"for {count} modes (raise the basis cutoff)")

    ws = _Workspace(config, count - 1)
    roots = np.empty(count)
    gap_hint = float(poles[1] - poles[0])
    try:
        roots[0] = _solve_unbounded(config, float(poles[0]), gap_hint,
                                    config.alpha, ws=ws)
    except NoRootError:
        # The ground root sits below the representable range (extremely
        # negative coupling); report its alpha -> -inf limit, where the
        # coefficient vector tends to the normalized scatterer values.
        roots[0] = -math.inf
    if count > 1:
        roots[1:] = _solve_bounded_many(config, poles[:count - 1],
                                        poles[1:count], config.alpha, ws=ws)

    # (z, tie rank, insertion seq, builder) -- perturbed first on exact ties
    entries = []
    for r in roots:
        entries.append((float(r), 0, len(entries), None))
    top = float(poles[count - 1])
    for c in s.clusters:
        if c.eigenvalue > top:
            break
        kept = c.retained_multiplicity
        if kept < 1:
            continue
        vecs = _vanishing_basis(basis.values_at_scatterer[c.start:c.stop],
                                s.null_tolerance)
        for row in vecs[:kept]:
            entries.append((c.eigenvalue, 1, len(entries), (c, row)))
    entries.sort(key=lambda e: (e[0], e[1], e[2]))

    modes = []
    for n, (z, _, _, extra) in enumerate(entries[:count], start=1):
        if extra is None:
            coeffs, norm = _perturbed_mode_coeffs(config, z)
            modes.append(PerturbedMode(n=n, z=z, kind=PERTURBED, coeffs=coeffs,
                                       normalization=norm, basis=basis))
        else:
            cluster, row = extra
            c = np.zeros(len(basis))
            c[cluster.start:cluster.stop] = row
            modes.append(PerturbedMode(n=n, z=z, kind=UNPERTURBED, coeffs=c,
                                       normalization=1.0, basis=basis))
    return ScattererSpectrum(config=config, modes=tuple(modes))


def mode_field(mode: PerturbedMode, geometry: RectGeometry,
               grid: tuple[int, int]) -> np.ndarray:
    """Synthesize the mode on a uniform closed (ny, nx) grid.

    Returns psi(y_i, x_j) with boundary rows and columns exactly zero.
    """
    nx, ny = grid
    if nx < 2 or ny < 2:
        raise ValueError(f"grid must be at least 2x2, got {grid!r}")
    a, b = geometry.a, geometry.b
    basis = mode.basis
    x = np.linspace(0.0, a, nx)
    y = np.linspace(0.0, b, ny)
    jmax = int(basis.j.max())
    kmax = int(basis.k.max())
    C = np.zeros((kmax, jmax))
    C[basis.k - 1, basis.j - 1] = mode.coeffs
    Sx = np.sin(np.outer(x, np.arange(1, jmax + 1)) * (math.pi / a))
    Sy = np.sin(np.outer(y, np.arange(1, kmax + 1)) * (math.pi / b))
    field = (2.0 / math.sqrt(a * b)) * (Sy @ C @ Sx.T)
    field[0, :] = 0.0
    field[-1, :] = 0.0
    field[:, 0] = 0.0
    field[:, -1] = 0.0
    return field
