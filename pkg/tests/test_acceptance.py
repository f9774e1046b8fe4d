"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py``; the summary lines appear in the
"acceptance criteria" section at the end of the pytest output.
"""

import time

import numpy as np
import pytest

from isofield import analysis, harness, irreps
from isofield.groups import CircleGroup, CyclicGroup, RotationGroup, Sphere, NORTH_POLE
from isofield.spectral import (
    FieldCoefficients,
    Layout,
    PowerSpectrum,
    analyze,
    evaluate_on_rule,
    l2_norm_squared,
    parseval_energy,
    project,
)

SO3 = RotationGroup()
REPS = 10_000


def test_1_orthonormality_so3_band8(record):
    t0 = time.perf_counter()
    check = harness.orthonormality_check(SO3, 8)
    elapsed = time.perf_counter() - t0
    ok = check.error < 1e-8 and elapsed < 30.0
    record("1 orthonormality", ok, f"max|G-I|={check.error:.2e} time={elapsed:.1f}s")
    assert check.detail["labels"] == 9
    assert check.detail["functions"] == sum((2 * l + 1) ** 2 for l in range(9))
    assert ok


@pytest.mark.parametrize(
    "space,band",
    [(CyclicGroup(12), 1), (CircleGroup(), 16), (SO3, 8)],
    ids=["Z12", "U1-B16", "SO3-B8"],
)
def test_2_round_trip(record, space, band):
    rng = np.random.default_rng(2024)
    rule = space.quadrature(band)
    labels = list(range(12)) if isinstance(space, CyclicGroup) else irreps.labels_up_to(space, band)
    size = Layout(space, labels).size
    vec = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    coeffs = FieldCoefficients.from_flat(space, labels, vec)
    values = evaluate_on_rule(coeffs, rule)
    back = analyze(values, rule, labels)
    err = float(np.abs(back.flat() - vec).max())
    parseval = abs(parseval_energy(coeffs) - l2_norm_squared(values, rule))
    ok = err < 1e-9 and parseval < 1e-8 and not back.aliased
    record(f"2 round trip [{space.name}]", ok, f"coef err={err:.2e} parseval={parseval:.2e}")
    assert ok


@pytest.mark.parametrize(
    "space,band",
    [(CyclicGroup(7), 1), (CircleGroup(), 6), (SO3, 3), (Sphere(), 5)],
    ids=["Z7", "U1", "SO3", "S2"],
)
def test_3_projection_laws(record, space, band):
    rng = np.random.default_rng(7)
    rule = space.quadrature(band)
    labels = list(range(7)) if isinstance(space, CyclicGroup) else irreps.labels_up_to(space, band)
    size = Layout(space, labels).size
    vec = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    values = evaluate_on_rule(FieldCoefficients.from_flat(space, labels, vec), rule)
    idem = cross = rep = 0.0
    for a in labels:
        pa = project(values, rule, a)
        idem = max(idem, float(np.abs(project(pa, rule, a) - pa).max()))
        rep = max(rep, float(np.abs(project(values, rule, a, method="coefficients") - pa).max()))
        for b in labels:
            if b != a:
                cross = max(cross, float(np.abs(project(pa, rule, b)).max()))
    ok = idem < 1e-9 and cross < 1e-9 and rep < 1e-9
    record(f"3 projection laws [{space.name}]", ok, f"idem={idem:.1e} cross={cross:.1e} char-vs-coef={rep:.1e}")
    assert ok


def test_4_variance_and_sampler_isotropy(record):
    spec = PowerSpectrum.geometric(SO3, 0.5, 6)
    var = analysis.variance_check(spec, REPS, seed=11)
    iso = analysis.sampler_isotropy_test(spec, REPS, seed=12)
    assert len(iso.comparisons) == 2 * 15
    ok = var.passed and iso.passed
    record("4 variance + sampler isotropy", ok, f"variance |z|={abs(var.worst.z):.2f}<3 isotropy max|z|={abs(iso.worst.z):.2f}<4")
    assert ok


def test_5_uncorrelated_components(record):
    spec = PowerSpectrum.geometric(SO3, 0.5, 6)
    pairs = [(a, b) for a in range(5) for b in range(a + 1, 5)]
    rep = analysis.uncorrelatedness_test(spec, pairs, REPS, seed=13)
    ok = rep.passed
    record("5 uncorrelatedness", ok, f"{len(pairs)} pairs max|z|={abs(rep.worst.z):.2f}<4")
    assert ok


def test_6_partial_sum_convergence(record):
    spec = PowerSpectrum.geometric(SO3, 0.5, 6)
    curve = analysis.convergence_curve(spec, replicates=REPS, seed=14)
    worst = max(max(abs(r.z), abs(r.pair_z)) for r in curve.rows)
    assert curve.rows[-1].analytic == 0.0
    ok = curve.passed
    record("6 L2 convergence", ok, f"{len(curve.rows)} prefixes max|z|={worst:.2f}<3")
    assert ok


def test_7_continuity_modulus(record):
    spec = PowerSpectrum.delta(SO3, 1, 1)
    deltas = [0.01, 0.1, 0.5]
    m = analysis.continuity_modulus(spec, deltas).modulus
    exact = 4 * (1 - np.cos(deltas))
    err = float(np.abs(m - exact).max())
    mono = bool(np.all(np.diff(m) >= 0))
    ratio = m[0] / m[2]
    sphere_spec = PowerSpectrum.delta(Sphere(), 1, 1)
    lift_err = float(np.abs(
        analysis.sphere_modulus(sphere_spec, deltas).modulus - analysis.lifted_modulus(sphere_spec, deltas).modulus
    ).max())
    ok = err < 1e-9 and mono and ratio < 1e-2 and lift_err < 1e-9
    record("7 modulus", ok, f"err={err:.1e} monotone={mono} ratio={ratio:.1e} lift={lift_err:.1e}")
    assert ok


def test_8_integrated_functionals(record):
    spec = PowerSpectrum.geometric(SO3, 0.5, 6)
    rng = np.random.default_rng(15)
    h = SO3.random(rng, 1)[0]
    fs = [analysis.character_function(SO3, 1), analysis.random_function(SO3, 2, rng)]
    rep = analysis.isotropy_functional_test(spec, REPS, h, fs, seed=16, max_order=4)
    ok = rep.passed
    record("8 functional moments", ok, f"{len(rep.comparisons)} moments max|z|={abs(rep.worst.z):.2f}<4")
    assert ok


@pytest.mark.parametrize("space", [CircleGroup(), SO3, Sphere()], ids=["U1", "SO3", "S2"])
def test_9_nugget(record, space):
    nug = analysis.nugget_analysis(1.0, 0.0, space, 6)
    beyond = max(abs(a) for l, a in nug.recovered.items() if l != 0)
    ctrl = analysis.nugget_analysis(0.7, 0.7, space, 6)
    ok = beyond < 1e-12 and abs(nug.defect - 1.0) < 1e-12 and not nug.realizable and ctrl.realizable
    record(f"9 nugget [{space.name}]", ok, f"max|alpha|={beyond:.1e} defect={nug.defect:.3g} control={ctrl.realizable}")
    assert ok


def test_10_determinism(record, tmp_path):
    base = dict(group="so3", band=4, spectrum="geometric 0.5", replicates=2000, seed=99)
    texts = []
    for run, workers in (("a", 1), ("b", 1), ("c", 8)):
        cfg = harness.config_from_dict(dict(base, out=str(tmp_path / run), workers=workers))
        assert harness.cmd_verify(cfg) == 0
        texts.append((tmp_path / run / "report.json").read_bytes())
    ok = texts[0] == texts[1] == texts[2]
    record("10 determinism", ok, "repeat and 1-vs-8 workers byte-identical" if ok else "reports differ")
    assert ok
