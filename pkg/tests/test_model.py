import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from dipmirror.model import (
    IMAGE_REFLECTION,
    SUBLEVELS,
    DomainError,
    dipole_vector,
    free_space_coupling,
    image_coupling,
    scalar_coefficients,
    single_atom_rate,
)

HEIGHTS = (0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0)


def far_field_rate(z, m):
    """Decay rate from the power radiated by dipole + image into z > 0.

    Half of the pair's full-sphere power, normalised to a free dipole.
    """
    u = dipole_vector(m)
    mu = IMAGE_REFLECTION @ u

    def transverse_power(ct, ph, vec_of):
        s = np.sqrt(1.0 - ct * ct)
        n = np.array([s * np.cos(ph), s * np.sin(ph), ct])
        e = vec_of(ct)
        tr = e - n * (n @ e)
        return np.vdot(tr, tr).real

    pair = integrate.dblquad(
        lambda ph, ct: transverse_power(ct, ph, lambda c: u + np.exp(2j * z * c) * mu),
        -1, 1, 0, 2 * np.pi, epsabs=1e-13, epsrel=1e-12,
    )[0]
    free = integrate.dblquad(
        lambda ph, ct: transverse_power(ct, ph, lambda c: u), -1, 1, 0, 2 * np.pi, epsabs=1e-13
    )[0]
    return pair / (2.0 * free)


def imag_p_mp(x):
    x = mpmath.mpf(x)
    return float(mpmath.sin(x) / x + mpmath.cos(x) / x**2 - mpmath.sin(x) / x**3)


class TestBasis:
    def test_orthonormal(self):
        u = np.array([dipole_vector(m) for m in SUBLEVELS])
        np.testing.assert_allclose(u.conj() @ u.T, np.eye(3), atol=1e-15)

    def test_explicit_vectors(self):
        s = np.sqrt(2.0)
        np.testing.assert_allclose(dipole_vector(0), [0, 0, 1])
        np.testing.assert_allclose(dipole_vector(1), np.array([-1, -1j, 0]) / s)
        np.testing.assert_allclose(dipole_vector(-1), np.array([1, -1j, 0]) / s)

    def test_bad_sublevel(self):
        with pytest.raises(DomainError):
            dipole_vector(2)


class TestScalarCoefficients:
    def test_value_at_two(self):
        p, _ = scalar_coefficients(2.0)
        assert p.imag == pytest.approx(0.2369, abs=1e-4)
        assert p.imag == pytest.approx(imag_p_mp(2.0), abs=1e-15)

    @pytest.mark.parametrize("x", [0.05, 0.3, 1.0, 3.7, 25.0])
    def test_against_high_precision(self, x):
        p, q = scalar_coefficients(x)
        e = mpmath.exp(1j * mpmath.mpf(x))
        xm = mpmath.mpf(x)
        p_ref = complex(e * (1 / xm + 1j / xm**2 - 1 / xm**3))
        q_ref = complex(e * (-1 / xm - 3j / xm**2 + 3 / xm**3))
        assert abs(p - p_ref) <= 1e-12 * abs(p_ref)
        assert abs(q - q_ref) <= 1e-12 * abs(q_ref)

    def test_small_x_limit(self):
        p, _ = scalar_coefficients(1e-3)
        assert p.imag == pytest.approx(2.0 / 3.0, abs=1e-5)

    def test_far_field(self):
        x = np.array([1e3, 1e4])
        p, q = scalar_coefficients(x)
        np.testing.assert_allclose(np.abs(p) * x, 1.0, rtol=2e-3)
        np.testing.assert_allclose(np.abs(q) * x, 1.0, rtol=1e-2)

    def test_array_input(self):
        p, q = scalar_coefficients([1.0, 2.0])
        assert p.shape == q.shape == (2,)

    @pytest.mark.parametrize("x", [0.0, -1.0, np.inf, np.nan])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            scalar_coefficients(x)


class TestFreeSpaceCoupling:
    def test_tangential_small_separation(self):
        sigma = free_space_coupling([1e-3, 0, 0], [0, 0, 0], 0, 0)
        assert sigma.imag == pytest.approx(-0.5, abs=1e-5)

    def test_axial_mixing_vanishes(self):
        assert free_space_coupling([0, 0, 2.0], [0, 0, 0.5], 1, 0) == 0

    def test_coincident(self):
        with pytest.raises(DomainError):
            free_space_coupling([1, 2, 3], [1, 2, 3], 0, 0)

    @given(
        st.lists(st.floats(-5, 5), min_size=3, max_size=3),
        st.sampled_from(SUBLEVELS),
        st.sampled_from(SUBLEVELS),
    )
    def test_reciprocity(self, r, m, mp):
        r = np.array(r)
        if np.linalg.norm(r) < 1e-2:
            return
        a, b = r, np.zeros(3)
        # in the spherical basis time reversal maps m -> -m with a sign
        lhs = free_space_coupling(a, b, m, mp)
        rhs = (-1) ** (m + mp) * free_space_coupling(b, a, -mp, -m)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_plain_swap_only_for_real_geometry(self):
        # atoms in the xz plane: the naive swap symmetry holds
        a, b = np.array([0.3, 0.0, 0.4]), np.zeros(3)
        assert free_space_coupling(a, b, 1, 0) == pytest.approx(free_space_coupling(b, a, 0, 1))

    @pytest.mark.parametrize("x", [10.0, 30.0, 100.0])
    def test_far_field_bound(self, x):
        r = np.array([x / np.sqrt(3)] * 3)
        for m in SUBLEVELS:
            for mp in SUBLEVELS:
                # |P| + |Q| <= 2/x (1 + 3/x + 3/x^2) bounds the 3/4 prefactor term
                bound = 0.75 * 2.0 / x * (1 + 3 / x + 3 / x**2)
                assert abs(free_space_coupling(r, np.zeros(3), m, mp)) <= bound


class TestImageCoupling:
    def test_tangential_rate_at_unit_height(self):
        sig = image_coupling([0, 0, 1.0], [0, 0, 1.0], 1, 1)
        assert 1.0 - 2 * sig.imag == pytest.approx(0.6446, abs=1e-4)

    def test_surface_limits(self):
        z = 1e-4
        g0 = 1.0 - 2 * image_coupling([0, 0, z], [0, 0, z], 0, 0).imag
        g1 = 1.0 - 2 * image_coupling([0, 0, z], [0, 0, z], -1, -1).imag
        assert g0 == pytest.approx(2.0, abs=1e-6)
        assert g1 == pytest.approx(0.0, abs=1e-6)

    @pytest.mark.parametrize("z", [0.0, -0.5])
    def test_below_mirror(self, z):
        with pytest.raises(DomainError):
            image_coupling([0, 0, z], [0, 0, 1.0], 0, 0)

    def test_axial_selection_rule(self):
        for za, zb in [(1.0, 1.0), (0.5, 2.0)]:
            for m in SUBLEVELS:
                for mp in SUBLEVELS:
                    if m != mp:
                        assert abs(image_coupling([0, 0, za], [0, 0, zb], m, mp)) < 1e-15
                        if za != zb:
                            assert abs(free_space_coupling([0, 0, za], [0, 0, zb], m, mp)) < 1e-15

    @settings(max_examples=50)
    @given(
        st.lists(st.floats(-4, 4), min_size=2, max_size=2),
        st.floats(0.05, 5),
        st.floats(0.05, 5),
        st.sampled_from(SUBLEVELS),
        st.sampled_from(SUBLEVELS),
    )
    def test_reciprocity(self, xy, za, zb, m, mp):
        a = np.array([xy[0], xy[1], za])
        b = np.array([0.0, 0.0, zb])
        lhs = image_coupling(a, b, m, mp)
        rhs = (-1) ** (m + mp) * image_coupling(b, a, -mp, -m)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


class TestSingleAtomRate:
    @pytest.mark.parametrize("z", HEIGHTS)
    @pytest.mark.parametrize("m", SUBLEVELS)
    def test_matches_image_self_term(self, z, m):
        r = [0.0, 0.0, z]
        from_image = 1.0 - 2.0 * image_coupling(r, r, m, m).imag
        assert abs(single_atom_rate(z, m) - from_image) < 1e-10

    @pytest.mark.parametrize("z", [0.1, 1.0, 5.0])
    @pytest.mark.parametrize("m", [0, 1])
    def test_matches_far_field_quadrature(self, z, m):
        assert single_atom_rate(z, m) == pytest.approx(far_field_rate(z, m), abs=1e-9)

    def test_quoted_values(self):
        assert single_atom_rate(1.0, 1) == pytest.approx(0.6446, abs=1e-4)
        assert single_atom_rate(1.0, -1) == pytest.approx(0.6446, abs=1e-4)
        assert single_atom_rate(1.0, 0) == pytest.approx(1.653, abs=1e-3)

    @pytest.mark.parametrize("z", HEIGHTS)
    def test_degenerate_pair(self, z):
        assert single_atom_rate(z, 1) == single_atom_rate(z, -1)

    def test_far_from_surface(self):
        assert abs(single_atom_rate(10.0, 0) - 1.0) < 0.05
        for z in (10.0, 30.0, 100.0):
            x = 2 * z
            # the tangential correction decays only as 1/z
            envelope = 1.5 * (1 / x + 1 / x**2 + 1 / x**3)
            for m in (-1, 1):
                assert abs(single_atom_rate(z, m) - 1.0) <= envelope
        assert abs(single_atom_rate(100.0, 1) - 1.0) < 0.01
        # still oscillating around gamma0
        zs = np.linspace(5, 10, 200)
        g = np.array([single_atom_rate(z, 1) for z in zs]) - 1.0
        assert g.max() > 0 > g.min()

    @pytest.mark.parametrize("z", [0.0, -1.0, np.nan])
    def test_domain(self, z):
        with pytest.raises(DomainError):
            single_atom_rate(z, 0)
