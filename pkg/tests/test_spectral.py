import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isofield import irreps
from isofield.groups import (
    NORTH_POLE,
    Circle,
    CircleGroup,
    Cyclic,
    CyclicGroup,
    DomainMismatchError,
    Rotation,
    RotationGroup,
    Sphere,
    SpherePoint,
    act,
    mul,
)
from isofield.spectral import (
    FieldCoefficients,
    Layout,
    PowerSpectrum,
    analyze,
    covariance_from_spectrum,
    covariance_values,
    enumeration_length,
    evaluate,
    evaluate_on_rule,
    evaluate_on_sphere,
    left_translate,
    lift,
    partial_sum,
    sample_ensemble,
    sample_gaussian,
    sphere_covariance,
    tail_variance,
)

SO3 = RotationGroup()
angle = st.floats(-7.0, 7.0, allow_nan=False)
rotations = st.builds(Rotation, angle, st.floats(0.0, math.pi), angle)
weights = st.floats(0.0, 5.0, allow_nan=False)


def test_spectrum_validation():
    with pytest.raises(ValueError):
        PowerSpectrum(SO3, {1: -0.1})
    with pytest.raises(ValueError):
        PowerSpectrum(SO3, {1: float("nan")})
    with pytest.raises(ValueError):
        PowerSpectrum(CyclicGroup(3), {3: 1.0})
    s = PowerSpectrum(CircleGroup(), {-1: 1.0, 2: 0.5, 0: 1.0})
    assert s.labels == [0, -1, 2]
    assert s.band == 2 and not s.is_conjugation_symmetric()


def test_spectrum_families():
    assert PowerSpectrum.geometric(SO3, 0.5, 3).alphas == {0: 1.0, 1: 0.5, 2: 0.25, 3: 0.125}
    assert PowerSpectrum.geometric(CyclicGroup(5), 0.5, 0).alphas == {0: 1.0, 1: 0.5, 2: 0.25, 3: 0.25, 4: 0.5}
    assert PowerSpectrum.polynomial(SO3, 2, 1).alphas == {0: 1.0, 1: 0.25}
    assert PowerSpectrum.delta(SO3, 2, 3).total_variance == 5.0
    assert PowerSpectrum.zero(SO3, 2).total_variance == 0.0
    assert PowerSpectrum.geometric(CircleGroup(), 0.3, 4).is_conjugation_symmetric()


def test_cyclic_covariance_against_dft():
    s = PowerSpectrum(CyclicGroup(4), {0: 1.0, 1: 0.5, 3: 0.5})
    np.testing.assert_allclose(covariance_values(s, np.arange(4)), [2, 1, 0, 1], atol=1e-15)
    alpha = np.array([s.alpha(n) for n in range(4)])
    np.testing.assert_allclose(covariance_values(s, np.arange(4)), 4 * np.fft.ifft(alpha), atol=1e-15)
    assert covariance_from_spectrum(s, Cyclic(2, 4)) == pytest.approx(0.0, abs=1e-15)


def test_so3_covariance_closed_form():
    s = PowerSpectrum.delta(SO3, 1, 1)
    g = Rotation.from_axis_angle([0, 1, 1], 0.9)
    assert covariance_from_spectrum(s, g).real == pytest.approx(1 + 2 * math.cos(0.9), abs=1e-12)
    with pytest.raises(DomainMismatchError):
        covariance_from_spectrum(s, Circle(0.1))


def test_sphere_covariance_closed_form():
    s = PowerSpectrum(Sphere(), {0: 1.0, 1: 2.0})
    d = np.array([0.0, 0.4, math.pi])
    np.testing.assert_allclose(sphere_covariance(s, d), 1 + 6 * np.cos(d), atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(weights, min_size=4, max_size=4), st.integers(0, 2**32 - 1))
def test_covariance_is_positive_definite(alphas, seed):
    s = PowerSpectrum(SO3, dict(enumerate(alphas)))
    pts = SO3.random(np.random.default_rng(seed), 6)
    rel = SO3.mul_params(np.repeat(pts, 6, axis=0), SO3.inv_params(np.tile(pts, (6, 1))))
    K = covariance_values(s, rel).reshape(6, 6)
    np.testing.assert_allclose(K, K.conj().T, atol=1e-10)
    assert np.linalg.eigvalsh(K).min() > -1e-9 * (1 + s.total_variance)


def test_coefficient_variance_convention():
    # E|That^pi_ij|^2 = alpha / d^2: average over many replicates
    s = PowerSpectrum(SO3, {2: 3.0})
    layout, C = sample_ensemble(s, seed=5, replicates=4000)
    assert np.mean(np.abs(C) ** 2) == pytest.approx(3.0 / 25, rel=0.05)


def test_sampling_is_deterministic_and_worker_independent():
    s = PowerSpectrum.geometric(SO3, 0.5, 3)
    _, A = sample_ensemble(s, seed=3, replicates=50, workers=1)
    _, B = sample_ensemble(s, seed=3, replicates=50, workers=4)
    _, C = sample_ensemble(s, seed=3, replicates=20, start=30)
    assert np.array_equal(A, B)
    assert np.array_equal(A[30:], C)
    one = sample_gaussian(s, seed=3, replicate=7).coefficients.flat()
    assert np.array_equal(one, A[7])


@pytest.mark.parametrize(
    "spec",
    [
        PowerSpectrum.geometric(SO3, 0.5, 4),
        PowerSpectrum.geometric(CircleGroup(), 0.5, 4),
        PowerSpectrum.geometric(CyclicGroup(6), 0.5, 0),
        PowerSpectrum.geometric(Sphere(), 0.5, 4),
    ],
    ids=["so3", "circle", "cyclic", "sphere"],
)
def test_real_sampling_gives_real_fields(spec):
    rule = spec.space.quadrature(max(spec.band, 1))
    values = evaluate_on_rule(sample_gaussian(spec, seed=1, real=True), rule)
    assert np.abs(values.imag).max() < 1e-12
    assert np.abs(values.real).max() > 1e-3


def test_real_sampling_rejects_asymmetric_spectrum():
    with pytest.raises(ValueError):
        sample_gaussian(PowerSpectrum(CircleGroup(), {1: 1.0}), seed=0, real=True)


@settings(max_examples=25, deadline=None)
@given(rotations, rotations, st.integers(0, 1000))
def test_left_translation(h, g, seed):
    coeffs = sample_gaussian(PowerSpectrum.geometric(SO3, 0.7, 3), seed).coefficients
    moved = left_translate(coeffs, h)
    assert evaluate(moved, g) == pytest.approx(evaluate(coeffs, mul(h, g)), abs=1e-10)


def test_left_translation_abelian():
    coeffs = sample_gaussian(PowerSpectrum.geometric(CyclicGroup(7), 0.5, 0), 4).coefficients
    h, g = Cyclic(3, 7), Cyclic(5, 7)
    assert evaluate(left_translate(coeffs, h), g) == pytest.approx(evaluate(coeffs, mul(h, g)), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(rotations, st.integers(0, 1000))
def test_lift_matches_sphere_field(g, seed):
    coeffs = sample_gaussian(PowerSpectrum.geometric(Sphere(), 0.7, 4), seed).coefficients
    x = SpherePoint(0.9, -1.4)
    assert evaluate(lift(coeffs), g) == pytest.approx(evaluate_on_sphere(coeffs, act(g, NORTH_POLE)), abs=1e-10)
    assert evaluate(lift(coeffs, x), g) == pytest.approx(evaluate_on_sphere(coeffs, act(g, x)), abs=1e-10)


def test_partial_sums_and_tail_variance():
    s = PowerSpectrum.geometric(CircleGroup(), 0.5, 2)
    sample = sample_gaussian(s, 0)
    assert partial_sum(sample, 0).coefficients.labels == []
    assert partial_sum(sample, 3).coefficients.labels == [0, 1, -1]
    assert tail_variance(s, 0) == pytest.approx(s.total_variance)
    assert tail_variance(s, 3) == pytest.approx(0.25 + 0.25)
    assert tail_variance(s, enumeration_length(s)) == 0.0
    with pytest.raises(ValueError):
        partial_sum(sample, -1)


def test_under_banded_rule_is_flagged():
    s = PowerSpectrum.geometric(SO3, 0.5, 5)
    coarse = SO3.quadrature(3)
    back = analyze(evaluate_on_rule(sample_gaussian(s, 0), coarse), coarse, s.labels)
    assert back.aliased and "aliasing" in back.warnings[0]
    with pytest.raises(ValueError):
        analyze(np.zeros(5), coarse, s.labels)


def test_layout_round_trip_and_conjugation():
    lay = Layout(SO3, [0, 1, 2])
    vec = np.arange(lay.size) + 0j
    assert np.array_equal(lay.flatten(lay.unflatten(vec)), vec)
    perm, sign = lay.conjugation()
    assert np.array_equal(perm[perm], np.arange(lay.size))
    assert set(np.unique(sign)) <= {-1.0, 1.0}


def test_field_coefficients_validation():
    with pytest.raises(ValueError):
        FieldCoefficients(SO3, {1: np.zeros((2, 2))})
    a = FieldCoefficients(SO3, {1: np.ones((3, 3))})
    b = FieldCoefficients(SO3, {0: np.ones((1, 1))})
    assert (a - b).labels == [0, 1]


def test_evaluate_domain_mismatch():
    coeffs = sample_gaussian(PowerSpectrum.geometric(SO3, 0.5, 2), 0).coefficients
    with pytest.raises(DomainMismatchError):
        evaluate(coeffs, Circle(0.2))
    with pytest.raises(DomainMismatchError):
        lift(coeffs)


def test_character_coefficients_evaluate_to_character():
    g = Rotation(0.4, 1.0, 2.2)
    for ell in range(4):
        d = 2 * ell + 1
        coeffs = FieldCoefficients(SO3, {ell: np.eye(d) / d})
        assert evaluate(coeffs, g) == pytest.approx(irreps.character(ell, g), abs=1e-12)
