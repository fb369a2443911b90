"""Dirichlet eigensystem of the unit-area rectangle up to a spectral cutoff."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BasisSizeError, DomainError, EmptyBasisError

# Bounds memory at desk scale; build_basis refuses anything larger.
HARD_MODE_LIMIT = 5_000_000

DEFAULT_RATIO = 1.0 / (2.0 * math.pi)


@dataclass(frozen=True)
class RectGeometry:
    """Unit-area rectangle [0,a]x[0,b] with an interior marked point.

    The aspect is a single eccentricity parameter E: a = sqrt(E) and
    b = 1/sqrt(E), so a*b = 1 for every E > 0.  (x0, y0) is the scatterer
    location and must be strictly interior.
    """

    eccentricity: float
    x0: float
    y0: float

    def __post_init__(self):
        E = self.eccentricity
        if not (isinstance(E, (int, float)) and math.isfinite(E) and E > 0):
            raise ValueError(f"eccentricity must be a positive finite real, got {E!r}")
        if not 0.0 < self.x0 < self.a:
            raise ValueError(f"x0={self.x0!r} must lie strictly inside (0, a={self.a!r})")
        if not 0.0 < self.y0 < self.b:
            raise ValueError(f"y0={self.y0!r} must lie strictly inside (0, b={self.b!r})")

    @property
    def a(self) -> float:
        return math.sqrt(self.eccentricity)

    @property
    def b(self) -> float:
        return 1.0 / math.sqrt(self.eccentricity)

    @classmethod
    def from_ratios(cls, eccentricity: float,
                    x0_ratio: float = DEFAULT_RATIO,
                    y0_ratio: float = DEFAULT_RATIO) -> "RectGeometry":
        """Build a geometry placing the scatterer at fractional coordinates."""
        if not 0.0 < x0_ratio < 1.0:
            raise ValueError(f"x0_ratio={x0_ratio!r} must lie strictly inside (0, 1)")
        if not 0.0 < y0_ratio < 1.0:
            raise ValueError(f"y0_ratio={y0_ratio!r} must lie strictly inside (0, 1)")
        a = math.sqrt(eccentricity)
        b = 1.0 / a
        return cls(eccentricity, x0_ratio * a, y0_ratio * b)

    def ground_eigenvalue(self) -> float:
        """Lowest Dirichlet eigenvalue pi^2 (1/a^2 + 1/b^2)."""
        E = self.eccentricity
        return math.pi ** 2 * (1.0 / E + E)


@dataclass(frozen=True)
class BasisMode:
    """One Dirichlet mode: indices, energy, and value at the scatterer."""

    j: int
    k: int
    eigenvalue: float
    value_at_scatterer: float


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """All Dirichlet modes with eigenvalue <= cutoff, sorted ascending.

    Mode data is stored as parallel arrays (index i is the i-th mode in
    ascending eigenvalue order, ties broken lexicographically by (j, k)).
    Instances are immutable and safe to share across threads.
    """

    geometry: RectGeometry
    cutoff: float
    j: np.ndarray
    k: np.ndarray
    eigenvalues: np.ndarray
    values_at_scatterer: np.ndarray
    # scratch for derived, basis-wide structures (keyed caches; see scatterer)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self) -> int:
        return self.eigenvalues.shape[0]

    def mode(self, i: int) -> BasisMode:
        return BasisMode(int(self.j[i]), int(self.k[i]),
                         float(self.eigenvalues[i]),
                         float(self.values_at_scatterer[i]))

    @property
    def modes(self) -> list[BasisMode]:
        return [self.mode(i) for i in range(len(self))]


def weyl_count_estimate(cutoff: float) -> float:
    """Leading-order count of Dirichlet eigenvalues below ``cutoff``.

    For a unit-area domain the counting function grows like cutoff/(4 pi).
    """
    if not cutoff > 0:
        raise ValueError(f"cutoff must be positive, got {cutoff!r}")
    return cutoff / (4.0 * math.pi)


def build_basis(geometry: RectGeometry, cutoff: float,
                hard_limit: int = HARD_MODE_LIMIT) -> SpectralBasis:
    """Enumerate every Dirichlet mode with eigenvalue <= cutoff.

    Eigenvalues are pi^2 (j^2/a^2 + k^2/b^2) for j, k >= 1.  The returned
    basis is exhaustive under the cutoff and sorted ascending by eigenvalue
    with deterministic (j, k) tie-breaking.
    """
    a, b = geometry.a, geometry.b
    if not (math.isfinite(cutoff) and cutoff > geometry.ground_eigenvalue()):
        raise EmptyBasisError(
            f"cutoff {cutoff!r} admits no mode (ground eigenvalue is "
            f"{geometry.ground_eigenvalue()!r})"
        )
    if weyl_count_estimate(cutoff) > 1.5 * hard_limit:
        raise BasisSizeError(
            f"cutoff {cutoff!r} implies ~{weyl_count_estimate(cutoff):.3g} modes, "
            f"above the hard cap {hard_limit}"
        )
    root = math.sqrt(cutoff)
    # One extra index on each axis; the eigenvalue mask trims the overshoot.
    jmax = int(a * root / math.pi) + 1
    kmax = int(b * root / math.pi) + 1
    jj = np.arange(1, jmax + 1, dtype=np.int64)
    kk = np.arange(1, kmax + 1, dtype=np.int64)
    ev = (math.pi ** 2) * (jj[:, None].astype(float) ** 2 / a ** 2
                           + kk[None, :].astype(float) ** 2 / b ** 2)
    keep = ev <= cutoff
    j_flat = np.broadcast_to(jj[:, None], ev.shape)[keep]
    k_flat = np.broadcast_to(kk[None, :], ev.shape)[keep]
    ev_flat = ev[keep]
    if ev_flat.size == 0:
        raise EmptyBasisError(f"cutoff {cutoff!r} admits no mode")
    if ev_flat.size > hard_limit:
        raise BasisSizeError(
            f"{ev_flat.size} modes below cutoff {cutoff!r}, above the hard cap {hard_limit}"
        )
    order = np.lexsort((k_flat, j_flat, ev_flat))
    j_s = j_flat[order]
    k_s = k_flat[order]
    ev_s = ev_flat[order]
    norm = 2.0 / math.sqrt(a * b)
    vals = norm * np.sin(j_s * (math.pi * geometry.x0 / a)) \
                * np.sin(k_s * (math.pi * geometry.y0 / b))
    for arr in (j_s, k_s, ev_s, vals):
        arr.setflags(write=False)
    return SpectralBasis(geometry=geometry, cutoff=float(cutoff),
                         j=j_s, k=k_s, eigenvalues=ev_s, values_at_scatterer=vals)


def eigenfunction_value(mode: BasisMode, geometry: RectGeometry,
                        x: float, y: float) -> float:
    """L2-normalized Dirichlet eigenfunction (2/sqrt(ab)) sin(j pi x/a) sin(k pi y/b)."""
    a, b = geometry.a, geometry.b
    if not (0.0 <= x <= a and 0.0 <= y <= b):
        raise DomainError(f"point ({x!r}, {y!r}) outside the closed rectangle "
                          f"[0, {a!r}] x [0, {b!r}]")
    norm = 2.0 / math.sqrt(a * b)
    return norm * math.sin(mode.j * math.pi * x / a) * math.sin(mode.k * math.pi * y / b)
