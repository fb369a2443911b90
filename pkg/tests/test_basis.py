import math

import numpy as np
import pytest
from scipy import integrate

from seba import (BasisMode, DomainError, EmptyBasisError, RectGeometry,
                  build_basis, eigenfunction_value, weyl_count_estimate)
from seba.errors import BasisSizeError


def brute_force_modes(geometry, cutoff, jkmax=400):
    """Independent double-loop enumeration of (j, k, eigenvalue)."""
    a, b = geometry.a, geometry.b
    out = []
    for j in range(1, jkmax + 1):
        for k in range(1, jkmax + 1):
            ev = math.pi ** 2 * (j ** 2 / a ** 2 + k ** 2 / b ** 2)
            if ev <= cutoff:
                out.append((j, k, ev))
    assert math.pi ** 2 * (jkmax + 1) ** 2 / a ** 2 > cutoff, "jkmax too small"
    assert math.pi ** 2 * (jkmax + 1) ** 2 / b ** 2 > cutoff, "jkmax too small"
    return out


class TestRectGeometry:
    def test_unit_area(self):
        for E in (0.2, 1.0, math.pi / 3, 10 * math.pi):
            g = RectGeometry.from_ratios(E)
            assert g.a * g.b == pytest.approx(1.0, abs=1e-14)

    def test_scatterer_strictly_interior(self):
        with pytest.raises(ValueError):
            RectGeometry(1.0, 0.0, 0.5)
        with pytest.raises(ValueError):
            RectGeometry(1.0, 0.5, 1.0)
        with pytest.raises(ValueError):
            RectGeometry(-2.0, 0.1, 0.1)
        with pytest.raises(ValueError):
            RectGeometry.from_ratios(1.0, x0_ratio=0.0)

    def test_default_ratios(self):
        g = RectGeometry.from_ratios(math.pi / 3)
        assert g.x0 == pytest.approx(g.a / (2 * math.pi), rel=1e-15)
        assert g.y0 == pytest.approx(g.b / (2 * math.pi), rel=1e-15)


class TestBuildBasis:
    def test_square_lowest_mode(self):
        basis = build_basis(RectGeometry(1.0, 0.3, 0.4), 25.0)
        assert len(basis) == 1
        m = basis.mode(0)
        assert (m.j, m.k) == (1, 1)
        assert m.eigenvalue == pytest.approx(2 * math.pi ** 2, rel=1e-14)

    def test_pi3_lowest_eigenvalue(self):
        # independent scalar evaluation of the closed form at (1, 1)
        expected = 3 * math.pi + math.pi ** 3 / 3
        basis = build_basis(RectGeometry.from_ratios(math.pi / 3), 25.0)
        assert basis.eigenvalues[0] == pytest.approx(expected, rel=1e-13)
        assert (basis.mode(0).j, basis.mode(0).k) == (1, 1)

    def test_count_matches_weyl_square(self):
        geometry = RectGeometry(1.0, 0.3, 0.4)
        basis = build_basis(geometry, 4000.0)
        oracle = brute_force_modes(geometry, 4000.0)
        assert len(basis) == len(oracle)
        estimate = 4000.0 / (4 * math.pi)
        assert abs(len(basis) / estimate - 1.0) < 0.2

    @pytest.mark.parametrize("seed", range(5))
    def test_exhaustive_random(self, seed):
        rng = np.random.default_rng(seed)
        E = float(rng.uniform(0.3, 40.0))
        cutoff = float(rng.uniform(200.0, 3000.0))
        geometry = RectGeometry.from_ratios(E, 0.37, 0.61)
        basis = build_basis(geometry, cutoff)
        got = {(int(j), int(k)) for j, k in zip(basis.j, basis.k)}
        want = {(j, k) for j, k, _ in brute_force_modes(geometry, cutoff)}
        assert got == want

    def test_sorted_with_lexicographic_ties(self):
        basis = build_basis(RectGeometry(1.0, 0.3, 0.4), 500.0)
        ev = basis.eigenvalues
        assert np.all(np.diff(ev) >= 0)
        # the square is full of exact degeneracies: (1,2)/(2,1) etc.
        pairs = list(zip(basis.j, basis.k))
        i12 = pairs.index((1, 2))
        i21 = pairs.index((2, 1))
        assert i21 == i12 + 1

    def test_nondegenerate_for_irrational_eccentricity(self):
        for E in (math.pi / 3, 10 * math.pi):
            basis = build_basis(RectGeometry.from_ratios(E), 4000.0)
            assert np.min(np.diff(basis.eigenvalues)) > 1e-9

    def test_value_at_scatterer(self):
        geometry = RectGeometry.from_ratios(math.pi / 3, 0.23, 0.71)
        basis = build_basis(geometry, 2000.0)
        for i in (0, 5, len(basis) - 1):
            m = basis.mode(i)
            direct = eigenfunction_value(m, geometry, geometry.x0, geometry.y0)
            assert m.value_at_scatterer == pytest.approx(direct, abs=1e-14)
            assert abs(m.value_at_scatterer) <= 2.0 / math.sqrt(geometry.a * geometry.b)

    def test_empty_basis_error(self):
        with pytest.raises(EmptyBasisError):
            build_basis(RectGeometry(1.0, 0.3, 0.4), 10.0)

    def test_hard_cap(self):
        with pytest.raises(BasisSizeError):
            build_basis(RectGeometry(1.0, 0.3, 0.4), 5000.0, hard_limit=100)


class TestEigenfunctionValue:
    def test_square_center(self):
        g = RectGeometry(1.0, 0.3, 0.4)
        m = BasisMode(1, 1, 2 * math.pi ** 2, 0.0)
        assert eigenfunction_value(m, g, 0.5, 0.5) == pytest.approx(2.0, rel=1e-14)

    def test_dirichlet_boundary(self):
        g = RectGeometry.from_ratios(2.0)
        m = BasisMode(3, 2, 0.0, 0.0)
        assert eigenfunction_value(m, g, 0.0, 0.3) == 0.0
        assert eigenfunction_value(m, g, 0.2, 0.0) == 0.0

    def test_domain_error(self):
        g = RectGeometry(1.0, 0.3, 0.4)
        m = BasisMode(1, 1, 0.0, 0.0)
        with pytest.raises(DomainError):
            eigenfunction_value(m, g, 1.5, 0.5)
        with pytest.raises(DomainError):
            eigenfunction_value(m, g, 0.5, -0.1)

    def test_unit_norm_by_quadrature(self):
        g = RectGeometry(1.0, 0.3, 0.4)
        m = BasisMode(2, 3, 0.0, 0.0)
        val, _ = integrate.dblquad(
            lambda y, x: eigenfunction_value(m, g, x, y) ** 2,
            0.0, g.a, 0.0, g.b, epsabs=1e-10)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_orthonormality_random_pairs(self):
        g = RectGeometry.from_ratios(math.pi / 3, 0.3, 0.3)
        rng = np.random.default_rng(7)
        for _ in range(10):
            j1, k1, j2, k2 = (int(v) for v in rng.integers(1, 7, size=4))
            m1 = BasisMode(j1, k1, 0.0, 0.0)
            m2 = BasisMode(j2, k2, 0.0, 0.0)
            val, _ = integrate.dblquad(
                lambda y, x: (eigenfunction_value(m1, g, x, y)
                              * eigenfunction_value(m2, g, x, y)),
                0.0, g.a, 0.0, g.b, epsabs=1e-10)
            expected = 1.0 if (j1, k1) == (j2, k2) else 0.0
            assert val == pytest.approx(expected, abs=1e-6)


class TestWeylEstimate:
    def test_definition(self):
        assert weyl_count_estimate(4 * math.pi) == pytest.approx(1.0, rel=1e-15)

    def test_arithmetic(self):
        assert weyl_count_estimate(4000.0) == pytest.approx(318.3098, abs=1e-3)

    def test_against_exact_count(self):
        geometry = RectGeometry.from_ratios(math.pi / 3)
        basis = build_basis(geometry, 10000.0)
        est = weyl_count_estimate(10000.0)
        assert abs(len(basis) - est) / est < 0.15

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            weyl_count_estimate(0.0)
