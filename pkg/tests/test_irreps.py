import math

import numpy as np
import pytest
import scipy.linalg as sl
from hypothesis import given, settings, strategies as st
from scipy.special import eval_legendre, sph_harm_y

from isofield import irreps
from isofield.groups import (
    NORTH_POLE,
    Circle,
    CircleGroup,
    Cyclic,
    CyclicGroup,
    Rotation,
    RotationGroup,
    Sphere,
    SpherePoint,
    mul,
)

SO3 = RotationGroup()
angle = st.floats(-7.0, 7.0, allow_nan=False)
rotations = st.builds(Rotation, angle, st.floats(0.0, math.pi), angle)


def _expm_D(ell, a, b, c):
    m = np.arange(-ell, ell + 1)
    Jp = np.diag(np.sqrt(ell * (ell + 1) - m[:-1] * (m[:-1] + 1)), -1)
    Jy = (Jp - Jp.T) / 2j
    Jz = np.diag(m)
    return sl.expm(-1j * a * Jz) @ sl.expm(-1j * b * Jy) @ sl.expm(-1j * c * Jz)


@pytest.mark.parametrize("ell", [0, 1, 2, 5, 12])
@pytest.mark.parametrize("euler", [(0.3, 1.1, -0.7), (2.0, 0.0, 1.0), (-1.0, math.pi, 0.5), (0.1, 3.0, 0.2)])
def test_wigner_D_matches_matrix_exponential(ell, euler):
    np.testing.assert_allclose(irreps.wigner_D(ell, *euler), _expm_D(ell, *euler), atol=1e-12)


def test_wigner_frozen_values():
    assert irreps.wigner_d(1, math.pi / 3)[1, 1] == pytest.approx(0.5, abs=1e-15)
    assert irreps.wigner_d(1, math.pi / 3)[2, 2] == pytest.approx((1 + 0.5) / 2, abs=1e-15)
    assert irreps.wigner_d(2, math.pi / 2)[2, 2] == pytest.approx(-0.5, abs=1e-15)
    np.testing.assert_allclose(irreps.wigner_d(4, 0.0), np.eye(9), atol=1e-15)


@pytest.mark.parametrize("ell", [32, 64])
def test_wigner_stable_at_high_degree(ell):
    for beta in [1e-3, 0.7, 1.5707963, 2.9, math.pi - 1e-3]:
        d = irreps.wigner_d(ell, beta)
        assert np.abs(d @ d.T - np.eye(2 * ell + 1)).max() < 1e-10


@settings(max_examples=40, deadline=None)
@given(rotations, rotations, st.integers(0, 6))
def test_homomorphism_and_unitarity(g, h, ell):
    Dg = irreps.matrix(ell, g).entries
    Dh = irreps.matrix(ell, h).entries
    Dgh = irreps.matrix(ell, mul(g, h)).entries
    np.testing.assert_allclose(Dg @ Dh, Dgh, atol=1e-11)
    np.testing.assert_allclose(Dg @ Dg.conj().T, np.eye(2 * ell + 1), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(rotations, st.integers(0, 8))
def test_character_from_trace_is_trace_of_matrix(g, ell):
    assert irreps.character(ell, g) == pytest.approx(np.trace(irreps.wigner_D(ell, g.alpha, g.beta, g.gamma)), abs=1e-10)
    assert irreps.matrix(ell, g).trace() == pytest.approx(irreps.character(ell, g), abs=1e-10)


def test_character_closed_form():
    g = Rotation.from_axis_angle([0, 0, 1], math.pi / 2)
    # sin(3w/2) / sin(w/2) at w = pi/2
    assert irreps.character(1, g).real == pytest.approx(1.0, abs=1e-14)
    w = 1.234
    g = Rotation.from_axis_angle([1, 1, 0], w)
    for ell in range(6):
        assert irreps.character(ell, g).real == pytest.approx(math.sin((ell + 0.5) * w) / math.sin(w / 2), abs=1e-12)


def test_abelian_irreps():
    assert irreps.character(3, Circle(0.5)) == pytest.approx(np.exp(-1.5j))
    assert irreps.character(2, Cyclic(3, 8)) == pytest.approx(np.exp(-2j * math.pi * 6 / 8))
    assert irreps.dimension(CircleGroup(), -4) == 1
    assert irreps.dimension(SO3, 3) == 7


def test_label_enumeration():
    assert irreps.enumerate_dual(CircleGroup(), 5) == [0, 1, -1, 2, -2]
    assert irreps.enumerate_dual(SO3, 3) == [0, 1, 2]
    assert irreps.labels_up_to(CyclicGroup(5), 0) == [0, 1, 2, 3, 4]
    assert irreps.conjugate_label(CyclicGroup(5), 2) == 3
    assert irreps.conjugate_label(CircleGroup(), 2) == -2
    assert irreps.conjugate_label(SO3, 2) == 2
    with pytest.raises(ValueError):
        irreps.check_label(SO3, -1)
    with pytest.raises(ValueError):
        irreps.check_label(CyclicGroup(4), 4)


@pytest.mark.parametrize("theta,phi", [(0.4, 1.3), (1.7, -2.5), (0.0, 0.0), (math.pi, 0.3)])
def test_spherical_harmonics_match_scipy(theta, phi):
    Y = irreps.sph_harmonics_all(10, np.array([theta]), np.array([phi]))[0]
    for ell in range(11):
        for m in range(-ell, ell + 1):
            ref = math.sqrt(4 * math.pi) * sph_harm_y(ell, m, theta, phi)
            assert Y[ell * ell + ell + m] == pytest.approx(ref, abs=1e-12)


def test_spherical_harmonic_frozen_values():
    assert irreps.sph_harmonic(1, 0, NORTH_POLE) == pytest.approx(math.sqrt(3))
    assert irreps.sph_harmonic(0, 0, SpherePoint(1.0, 2.0)) == pytest.approx(1.0)


def test_addition_theorem():
    rng = np.random.default_rng(3)
    x, y = Sphere().random(rng, 2)
    Y = irreps.sph_harmonics_all(6, np.array([x[0], y[0]]), np.array([x[1], y[1]]))
    cosd = Sphere.vectors(x[None]) @ Sphere.vectors(y[None]).T
    for ell in range(7):
        s = slice(ell * ell, (ell + 1) ** 2)
        assert np.sum(Y[0, s] * np.conj(Y[1, s])) == pytest.approx((2 * ell + 1) * eval_legendre(ell, cosd[0, 0]), abs=1e-12)


def test_legendre_matches_scipy():
    x = np.linspace(-1, 1, 11)
    for ell in range(9):
        np.testing.assert_allclose(irreps.legendre(ell, x), eval_legendre(ell, x), atol=1e-13)


def test_sphere_harmonics_are_lifted_wigner_entries():
    # Y_lm(g . north) = sqrt(2l+1) conj(D^l_{m0}(g)) for the carrier rotation
    g = Rotation(0.8, 1.2, 0.0)
    x = SpherePoint(1.2, 0.8)
    for ell in range(5):
        D = irreps.wigner_D(ell, g.alpha, g.beta, g.gamma)
        for m in range(-ell, ell + 1):
            assert irreps.sph_harmonic(ell, m, x) == pytest.approx(math.sqrt(2 * ell + 1) * np.conj(D[m + ell, ell]), abs=1e-12)
