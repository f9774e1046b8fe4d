"""Mean-square continuity, covariance continuity and Monte Carlo checks.

Exact quantities (moduli, nugget spectra, covariance bounds) are computed
from the spectrum.  Monte Carlo checks sample seeded ensembles and compare
empirical moments against analytic values or against each other using
z-scores; every comparison records its standard error.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import irreps
from .groups import (
    NORTH_POLE,
    CircleGroup,
    CyclicGroup,
    DomainMismatchError,
    QuadratureRule,
    RotationGroup,
    Space,
    Sphere,
    SpherePoint,
    axis_angle_matrix,
    matrix_to_euler,
)
from .spectral import (
    FieldCoefficients,
    Layout,
    PowerSpectrum,
    analyze_flat,
    covariance_values,
    enumeration_length,
    sample_ensemble,
    sphere_covariance,
    synthesize,
    tail_variance,
)

Z_THRESHOLD = 4.0
SE_BAND = 3.0
MIN_REPLICATES = 100


# --------------------------------------------------------------------------
# report types
# --------------------------------------------------------------------------

@dataclass
class Comparison:
    """One empirical statistic against a reference (analytic or paired)."""

    name: str
    statistic: float
    reference: float
    se: float

    @property
    def z(self) -> float:
        diff = self.statistic - self.reference
        if self.se > 0:
            return diff / self.se
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "reference": self.reference,
            "se": self.se,
            "z": self.z,
        }


@dataclass
class CheckReport:
    """Outcome of a Monte Carlo or exact check: pass iff every |z| < threshold."""

    test: str
    comparisons: list[Comparison]
    threshold: float
    seed: int | None = None
    replicates: int | None = None
    detail: dict = field(default_factory=dict)

    @property
    def worst(self) -> Comparison | None:
        if not self.comparisons:
            return None
        return max(self.comparisons, key=lambda c: abs(c.z))

    @property
    def passed(self) -> bool:
        return all(abs(c.z) < self.threshold for c in self.comparisons)

    def to_dict(self) -> dict:
        w = self.worst
        return {
            "test": self.test,
            "statistic": None if w is None else w.statistic,
            "se": None if w is None else w.se,
            "z": None if w is None else w.z,
            "pass": self.passed,
            "seed": self.seed,
            "replicates": self.replicates,
            "threshold": self.threshold,
            "comparisons": [c.to_dict() for c in self.comparisons],
            "detail": self.detail,
        }


@dataclass
class CovarianceReport:
    """Empirical covariances ``E[T(x) conj T(y)]`` with standard errors."""

    pairs: list[tuple[int, int]]
    empirical: np.ndarray
    se: np.ndarray
    analytic: np.ndarray | None = None

    @property
    def z(self) -> np.ndarray:
        if self.analytic is None:
            raise ValueError("no analytic values to compare with")
        return _zscores(self.empirical - self.analytic, self.se)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("i,j,empirical_re,empirical_im,se_re,se_im,analytic_re,analytic_im,z_re,z_im\n")
        an = self.analytic if self.analytic is not None else np.full(len(self.pairs), np.nan + 0j)
        z = _zscores(self.empirical - an, self.se)
        for k, (i, j) in enumerate(self.pairs):
            e, s, a, zz = self.empirical[k], self.se[k], an[k], z[k]
            buf.write(
                f"{i},{j},{e.real:.12g},{e.imag:.12g},{s.real:.12g},{s.imag:.12g},"
                f"{a.real:.12g},{a.imag:.12g},{zz.real:.6g},{zz.imag:.6g}\n"
            )
        return buf.getvalue()


@dataclass
class ModulusCurve:
    """``m(delta) = sup over the delta-ball of E|T(g) - T(e)|^2`` on a search grid."""

    deltas: np.ndarray
    modulus: np.ndarray
    grid_size: int
    spectrum: PowerSpectrum | None = None

    def __iter__(self):
        return iter(zip(self.deltas.tolist(), self.modulus.tolist()))

    def to_csv(self) -> str:
        lines = ["delta,modulus"]
        lines += [f"{d:.17g},{m:.17g}" for d, m in self]
        return "\n".join(lines) + "\n"


@dataclass
class NuggetVerdict:
    recovered: dict[int, float]
    reconstruction: float
    claimed: float
    off_diagonal: float
    realizable: bool
    defect: float
    tolerance: float
    diagonal_nodes: int
    explanation: str

    def to_dict(self) -> dict:
        return {
            "recovered_spectrum": [{"label": l, "alpha": a} for l, a in self.recovered.items()],
            "reconstruction_at_identity": self.reconstruction,
            "claimed_at_identity": self.claimed,
            "off_diagonal": self.off_diagonal,
            "defect": self.defect,
            "realizable": self.realizable,
            "tolerance": self.tolerance,
            "diagonal_nodes": self.diagonal_nodes,
            "explanation": self.explanation,
        }


def _zscores(diff, se):
    """Elementwise z for complex or real arrays; real and imaginary parts separately."""
    diff = np.asarray(diff)
    se = np.asarray(se)

    def part(d, s):
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(s > 0, d / np.where(s > 0, s, 1.0), np.where(d == 0, 0.0, np.sign(d) * np.inf))
        return z

    if np.iscomplexobj(diff) or np.iscomplexobj(se):
        return part(diff.real, np.real(se)) + 1j * part(diff.imag, np.imag(se))
    return part(diff, se)


def mean_and_se(samples: np.ndarray, axis: int = 0):
    """Sample mean and its standard error (complex: per part)."""
    samples = np.asarray(samples)
    n = samples.shape[axis]
    if n < 2:
        raise ValueError("need at least two replicates for a standard error")
    mean = samples.mean(axis=axis)
    if np.iscomplexobj(samples):
        se = samples.real.std(axis=axis, ddof=1) / math.sqrt(n) + 1j * samples.imag.std(axis=axis, ddof=1) / math.sqrt(n)
    else:
        se = samples.std(axis=axis, ddof=1) / math.sqrt(n)
    return mean, se


def _complex_comparisons(name, samples, reference) -> list[Comparison]:
    m, s = mean_and_se(samples)
    return [
        Comparison(f"{name}.re", float(m.real), float(np.real(reference)), float(s.real)),
        Comparison(f"{name}.im", float(m.imag), float(np.imag(reference)), float(s.imag)),
    ]


def _check_replicates(replicates: int) -> None:
    if replicates < MIN_REPLICATES:
        raise ValueError(f"need at least {MIN_REPLICATES} replicates, got {replicates}")


def _group_only(spec: PowerSpectrum) -> Space:
    if not spec.space.is_group:
        raise DomainMismatchError("this check runs on a group; lift sphere fields first")
    return spec.space


# --------------------------------------------------------------------------
# mean-square increments and continuity moduli
# --------------------------------------------------------------------------

def ms_increment_values(spec: PowerSpectrum, params) -> np.ndarray:
    """``E|T(g) - T(e)|^2 = 2 (R(e) - Re R(g))`` at parameter arrays."""
    R = covariance_values(spec, params).real
    return np.maximum(2.0 * (spec.total_variance - R), 0.0) if len(R) else R


def ms_increment(spec: PowerSpectrum, g) -> float:
    space = _group_only(spec)
    if not space.owns(g):
        raise DomainMismatchError(f"{g!r} is not an element of {space!r}")
    return float(ms_increment_values(spec, space.params([g]))[0])


def _axes(n: int) -> np.ndarray:
    """Roughly uniform unit vectors (Fibonacci lattice)."""
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    r = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def _radii(deltas, resolution: int) -> np.ndarray:
    top = float(np.max(deltas)) if len(deltas) else 0.0
    return np.unique(np.concatenate([[0.0], np.linspace(0.0, top, resolution), np.asarray(deltas, float)]))


def modulus_grid(space: Space, deltas, resolution: int = 64, n_axes: int = 24) -> np.ndarray:
    """Default search grid of group elements near the identity, containing
    elements at exactly each requested radius."""
    if isinstance(space, CyclicGroup):
        return np.arange(space.N)
    radii = _radii(deltas, resolution)
    if isinstance(space, CircleGroup):
        return np.mod(np.concatenate([radii, -radii]), 2 * math.pi)
    if isinstance(space, RotationGroup):
        ax = _axes(n_axes)
        R = axis_angle_matrix(ax[None, :, :], radii[:, None])
        return matrix_to_euler(R.reshape(-1, 3, 3))
    raise DomainMismatchError(f"no modulus grid for {space!r}")


def _curve(dist, values, deltas) -> np.ndarray:
    deltas = np.asarray(deltas, float)
    if np.any(np.diff(deltas) < 0):
        raise ValueError("deltas must be sorted ascending")
    out = np.empty(len(deltas))
    for k, d in enumerate(deltas):
        inside = dist <= d + 1e-12
        out[k] = values[inside].max() if inside.any() else 0.0
    return out


def continuity_modulus(spec: PowerSpectrum, deltas: Sequence[float], grid=None) -> ModulusCurve:
    """Mean-square continuity modulus on a group, from the spectrum.

    ``grid`` is a parameter array of candidate elements; the default contains
    elements at exactly every requested radius.
    """
    space = _group_only(spec)
    deltas = np.asarray(deltas, float)
    grid = modulus_grid(space, deltas) if grid is None else np.asarray(grid)
    if len(grid) == 0:
        raise ValueError("empty search grid")
    e = space.params([space.identity()])
    dist = space.distance_params(np.repeat(e, len(grid), axis=0), grid)
    values = ms_increment_values(spec, grid)
    return ModulusCurve(deltas, _curve(dist, values, deltas), len(grid), spec)


def modulus_bound(spec: PowerSpectrum, delta: float, grid=None) -> float:
    """Term-by-term bound ``sum d alpha max_ball (2 - 2 Re chi / d)``."""
    space = _group_only(spec)
    grid = modulus_grid(space, [delta]) if grid is None else np.asarray(grid)
    e = space.params([space.identity()])
    dist = space.distance_params(np.repeat(e, len(grid), axis=0), grid)
    ball = grid[dist <= delta + 1e-12]
    total = 0.0
    for l, a in spec.alphas.items():
        if a == 0:
            continue
        d = spec.dim(l)
        chi = irreps.character_table(space, [l], ball)[:, 0].real
        total += d * a * float(np.max(2.0 - 2.0 * chi / d))
    return total


def _sphere_grid(base: SpherePoint, radii, n_azimuth: int):
    """Rotations moving ``base`` by exactly each radius, along several azimuths."""
    v = base.vector()
    helper = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(v, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(v, e1)
    psi = 2 * math.pi * np.arange(n_azimuth) / n_azimuth
    axes = np.cos(psi)[:, None] * e1 + np.sin(psi)[:, None] * e2  # perpendicular to base
    R = axis_angle_matrix(axes[None, :, :], np.asarray(radii)[:, None])
    return R.reshape(-1, 3, 3)


def sphere_modulus(
    spec: PowerSpectrum,
    deltas: Sequence[float],
    base: SpherePoint = NORTH_POLE,
    resolution: int = 64,
    n_azimuth: int = 8,
) -> ModulusCurve:
    """Modulus of a sphere field from the addition-theorem covariance."""
    if not isinstance(spec.space, Sphere):
        raise DomainMismatchError("sphere_modulus needs a sphere spectrum")
    deltas = np.asarray(deltas, float)
    R = _sphere_grid(base, _radii(deltas, resolution), n_azimuth)
    pts = Sphere.from_vectors(R @ base.vector())
    dist = Sphere().distance_params(np.repeat(Sphere().params([base]), len(pts), axis=0), pts)
    values = np.maximum(2.0 * (spec.total_variance - sphere_covariance(spec, dist)), 0.0)
    return ModulusCurve(deltas, _curve(dist, values, deltas), len(pts), spec)


def lifted_modulus(
    spec: PowerSpectrum,
    deltas: Sequence[float],
    base: SpherePoint = NORTH_POLE,
    resolution: int = 64,
    n_azimuth: int = 8,
) -> ModulusCurve:
    """Modulus of the lift ``T_x(g) = T(g . x)`` on SO(3), over rotations of the base point.

    The lifted field has coefficient covariance ``E[That That^*]`` supported on
    the column ``m' = 0`` rotated by the carrier ``r`` of ``x``, giving
    ``E|T_x(g) - T_x(e)|^2 = 2 sum_l alpha_l d_l (1 - Re D^l_00(r^-1 g r))``;
    the metric ball is taken in the rotation-angle metric of SO(3).
    """
    if not isinstance(spec.space, Sphere):
        raise DomainMismatchError("lifted_modulus needs a sphere spectrum")
    deltas = np.asarray(deltas, float)
    G = RotationGroup()
    Rg = _sphere_grid(base, _radii(deltas, resolution), n_azimuth)
    r = G.matrices(np.array([base.phi, base.theta, 0.0]))
    conj = matrix_to_euler(r.T[None] @ Rg @ r[None])
    dist = G.distance_params(np.zeros((len(Rg), 3)), matrix_to_euler(Rg))
    values = np.zeros(len(Rg))
    labels = [l for l, a in spec.alphas.items() if a > 0]
    if labels:
        B = irreps.coefficient_basis(G, labels, conj)
        lay = Layout(G, labels)
        for k, l in enumerate(labels):
            d = 2 * l + 1
            centre = lay.offsets[k] + l * d + l  # entry (m, m') = (0, 0)
            values += 2.0 * spec.alpha(l) * d * (1.0 - B[:, centre].real)
    values = np.maximum(values, 0.0)
    return ModulusCurve(deltas, _curve(dist, values, deltas), len(Rg), spec)


# --------------------------------------------------------------------------
# ensembles
# --------------------------------------------------------------------------

def _default_points(space: Space, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(2**31 - 1,)))
    return space.random(rng, k)


def variance_check(spec: PowerSpectrum, replicates: int, seed: int, real=False, workers=1, point=None) -> CheckReport:
    """Empirical ``E|T(g)|^2`` against ``sum d alpha`` (3-SE band)."""
    space = _group_only(spec)
    _check_replicates(replicates)
    point = space.params([space.identity()]) if point is None else point
    layout, C = sample_ensemble(spec, seed, replicates, real=real, workers=workers)
    v = synthesize(space, layout, C, point)[:, 0]
    m, s = mean_and_se(np.abs(v) ** 2)
    comp = Comparison("E|T(g)|^2", float(m), spec.total_variance, float(s))
    return CheckReport("variance", [comp], SE_BAND, seed, replicates)


def ms_increment_mc(spec: PowerSpectrum, g_params, replicates: int, seed: int, workers=1) -> CheckReport:
    """Monte Carlo ``E|T(g) - T(e)|^2`` against ``2 (R(e) - Re R(g))``."""
    space = _group_only(spec)
    _check_replicates(replicates)
    g_params = np.asarray(g_params)
    pts = np.concatenate([space.params([space.identity()]), g_params.reshape((-1,) + space.params([space.identity()]).shape[1:])])
    layout, C = sample_ensemble(spec, seed, replicates, workers=workers)
    V = synthesize(space, layout, C, pts)
    exact = ms_increment_values(spec, pts[1:])
    comps = []
    for k in range(1, len(pts)):
        m, s = mean_and_se(np.abs(V[:, k] - V[:, 0]) ** 2)
        comps.append(Comparison(f"increment[{k - 1}]", float(m), float(exact[k - 1]), float(s)))
    return CheckReport("ms_increment", comps, SE_BAND, seed, replicates)


def sampler_isotropy_test(
    spec: PowerSpectrum,
    replicates: int,
    seed: int,
    points=None,
    h=None,
    real=False,
    workers=1,
) -> CheckReport:
    """Covariance matrices of ``(T(g_k))`` and ``(T(h g_k))`` agree (paired z-scores)."""
    space = _group_only(spec)
    _check_replicates(replicates)
    points = _default_points(space, 5, seed) if points is None else np.asarray(points)
    h = _default_points(space, 1, seed + 1) if h is None else np.asarray(h)
    hp = space.mul_params(np.repeat(h.reshape((1,) + points.shape[1:]), len(points), axis=0), points)
    layout, C = sample_ensemble(spec, seed, replicates, real=real, workers=workers)
    V = synthesize(space, layout, C, points)
    W = synthesize(space, layout, C, hp)
    comps = []
    k = len(points)
    for i in range(k):
        for j in range(i, k):
            diff = V[:, i] * np.conj(V[:, j]) - W[:, i] * np.conj(W[:, j])
            comps += _complex_comparisons(f"cov[{i},{j}]", diff, 0.0)
    return CheckReport("sampler_isotropy", comps, Z_THRESHOLD, seed, replicates)


def empirical_covariance(spec: PowerSpectrum, points, replicates: int, seed: int, real=False, workers=1) -> CovarianceReport:
    """``E[T(g_k) conj T(g_0)]`` for each point against the exact covariance."""
    space = spec.space
    _check_replicates(replicates)
    points = np.asarray(points)
    layout, C = sample_ensemble(spec, seed, replicates, real=real, workers=workers)
    V = synthesize(space, layout, C, points)
    prods = V * np.conj(V[:, :1])
    mean, se = mean_and_se(prods)
    analytic = _gamma(spec, points, np.repeat(points[:1], len(points), axis=0))
    return CovarianceReport([(k, 0) for k in range(len(points))], mean, se, analytic)


def uncorrelatedness_test(
    spec: PowerSpectrum,
    label_pairs,
    replicates: int,
    seed: int,
    points=None,
    real=False,
    workers=1,
) -> CheckReport:
    """Components of distinct labels are uncorrelated.

    Each component ``T^pi`` is recovered from the field values on an exact
    quadrature grid (analysis then synthesis of the single label) and
    ``E[T^pi(g) conj T^pi'(h)]`` is compared with 0.
    """
    space = _group_only(spec)
    _check_replicates(replicates)
    pairs = [tuple(label_pairs)] if np.ndim(label_pairs) == 1 else [tuple(p) for p in label_pairs]
    for a, b in pairs:
        if a == b:
            raise ValueError(f"labels of a pair must differ, got {a} twice")
    points = _default_points(space, 2, seed + 2) if points is None else np.asarray(points)
    needed = irreps.sort_labels(space, {l for p in pairs for l in p})
    band = max([spec.band] + [irreps.band_of(space, l) for l in needed] + [1])
    rule = space.quadrature(band)
    layout, C = sample_ensemble(spec, seed, replicates, real=real, workers=workers)
    V = synthesize(space, layout, C, rule.params)
    comp_layout, Chat = analyze_flat(V, rule, needed)
    comps_at = {}
    for k, l in enumerate(needed):
        sub = Layout(space, [l])
        comps_at[l] = synthesize(space, sub, Chat[:, comp_layout.slice(k)], points)
    out = []
    for a, b in pairs:
        prod = comps_at[a][:, 0] * np.conj(comps_at[b][:, 1])
        out += _complex_comparisons(f"cov(T^{a}(g), T^{b}(h))", prod, 0.0)
    return CheckReport("uncorrelatedness", out, Z_THRESHOLD, seed, replicates, {"pairs": [list(p) for p in pairs]})


@dataclass
class ConvergenceRow:
    n: int
    analytic: float
    empirical: float
    se: float
    integrated: float
    integrated_se: float
    pair_diff: float
    pair_se: float

    @property
    def z(self) -> float:
        return Comparison("", self.empirical, self.analytic, self.se).z

    @property
    def pair_z(self) -> float:
        return Comparison("", self.pair_diff, 0.0, self.pair_se).z


@dataclass
class ConvergenceCurve:
    rows: list[ConvergenceRow]
    seed: int
    replicates: int

    @property
    def passed(self) -> bool:
        return all(abs(r.z) < SE_BAND and abs(r.pair_z) < SE_BAND for r in self.rows)

    def report(self) -> CheckReport:
        comps = []
        for r in self.rows:
            comps.append(Comparison(f"residual[n={r.n}]", r.empirical, r.analytic, r.se))
            comps.append(Comparison(f"fixed_minus_integrated[n={r.n}]", r.pair_diff, 0.0, r.pair_se))
        return CheckReport("convergence", comps, SE_BAND, self.seed, self.replicates)


def convergence_curve(
    spec: PowerSpectrum,
    prefixes: Sequence[int] | None = None,
    replicates: int = 10_000,
    seed: int = 0,
    point=None,
    real=False,
    workers=1,
) -> ConvergenceCurve:
    """Residual second moments of partial sums over the dual enumeration.

    For each prefix length ``n`` the fixed-point residual
    ``E|T(g0) - sum_{k<n} T^pi_k(g0)|^2`` is estimated, together with the
    integrated residual ``E int |T - sum ...|^2 dg`` (quadrature), and
    compared with the analytic tail ``sum_{k>=n} d_k alpha_k``.
    """
    space = _group_only(spec)
    _check_replicates(replicates)
    full = enumeration_length(spec)
    prefixes = list(range(full + 1)) if prefixes is None else list(prefixes)
    point = _default_points(space, 1, seed + 3) if point is None else np.asarray(point)
    rule = space.quadrature(max(spec.band, 1))
    layout, C = sample_ensemble(spec, seed, replicates, real=real, workers=workers)
    order = np.array([irreps.enumeration_index(space, l) for l in layout.label_of_coefficient()])
    rows = []
    for n in prefixes:
        tail = np.where(order >= n, 1.0, 0.0)
        Ct = C * tail
        at_point = synthesize(space, layout, Ct, point)[:, 0]
        fixed = np.abs(at_point) ** 2
        on_grid = synthesize(space, layout, Ct, rule.params)
        integrated = (np.abs(on_grid) ** 2) @ rule.weights
        m, s = mean_and_se(fixed)
        mi, si = mean_and_se(integrated)
        # a lone one-dimensional component has |T^pi(g)|^2 equal to its integral;
        # drop the rounding residue so the paired SE does not collapse onto it
        diff = fixed - integrated
        diff[np.abs(diff) <= 1e-12 * (fixed + integrated)] = 0.0
        md, sd = mean_and_se(diff)
        rows.append(
            ConvergenceRow(n, tail_variance(spec, n), float(m), float(s), float(mi), float(si), float(md), float(sd))
        )
    return ConvergenceCurve(rows, seed, replicates)


def _moment_orders(max_order: int):
    return [(p, q) for total in range(1, max_order + 1) for p in range(total + 1) for q in [total - p]]


def isotropy_functional_test(
    spec: PowerSpectrum,
    replicates: int,
    h,
    functions: Sequence[FieldCoefficients],
    seed: int,
    max_order: int = 4,
    real=False,
    workers=1,
) -> CheckReport:
    """Integrated functionals ``T(f)`` and ``T^h(f)`` share their moments.

    ``T(f) = int T(x) conj f(x) dx`` is computed by quadrature from the field
    values at the nodes and at the left-translated nodes ``h x``.  All mixed
    moments ``E[(Re)^p (Im)^q]`` with ``1 <= p + q <= max_order`` of every
    functional, and second-order cross moments between functionals, are
    compared as paired differences.
    """
    space = _group_only(spec)
    _check_replicates(replicates)
    band = max([spec.band, 1] + [f.band for f in functions])
    rule = space.quadrature(band)
    h = np.asarray(h)
    layout, C = sample_ensemble(spec, seed, replicates, real=real, workers=workers)
    V = synthesize(space, layout, C, rule.params)
    if np.all(h == space.params([space.identity()])):
        Vh = V.copy()
    else:
        hx = space.mul_params(np.repeat(h.reshape((1,) + rule.params.shape[1:]), len(rule), axis=0), rule.params)
        Vh = synthesize(space, layout, C, hx)
    del C
    F = np.stack([synthesize(space, f.layout, f.flat(), rule.params) for f in functions], axis=1)
    kernel = np.conj(F) * rule.weights[:, None]
    A = V @ kernel
    Ah = Vh @ kernel
    comps = []
    for k in range(len(functions)):
        for p, q in _moment_orders(max_order):
            diff = A[:, k].real ** p * A[:, k].imag ** q - Ah[:, k].real ** p * Ah[:, k].imag ** q
            m, s = mean_and_se(diff)
            comps.append(Comparison(f"f{k}:Re^{p}Im^{q}", float(m), 0.0, float(s)))
    parts = lambda X: {"Re": X.real, "Im": X.imag}
    for a in range(len(functions)):
        for b in range(a + 1, len(functions)):
            for na, xa in parts(A[:, a]).items():
                for nb, xb in parts(A[:, b]).items():
                    xha = parts(Ah[:, a])[na]
                    xhb = parts(Ah[:, b])[nb]
                    m, s = mean_and_se(xa * xb - xha * xhb)
                    comps.append(Comparison(f"f{a}.{na}*f{b}.{nb}", float(m), 0.0, float(s)))
    return CheckReport("isotropy_functionals", comps, Z_THRESHOLD, seed, replicates)


def character_function(space: Space, label: int) -> FieldCoefficients:
    """``chi_pi`` as a coefficient set (``That = I / d``)."""
    d = irreps.dimension(space, label)
    return FieldCoefficients(space, {label: np.eye(d) / d})


def random_function(space: Space, band: int, rng: np.random.Generator) -> FieldCoefficients:
    """A random band-limited function with standard Gaussian coefficients."""
    blocks = {}
    for l in irreps.labels_up_to(space, band):
        d = irreps.dimension(space, l)
        blocks[l] = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return FieldCoefficients(space, blocks)


# --------------------------------------------------------------------------
# spectrum recovery and the nugget covariance
# --------------------------------------------------------------------------

@dataclass
class RecoveredSpectrum:
    space: Space
    alphas: dict[int, float]
    imag_max: float

    @property
    def min_alpha(self) -> float:
        return min(self.alphas.values(), default=0.0)

    def positive_definite(self, tol: float = 1e-9) -> bool:
        return self.min_alpha >= -tol

    def variance(self) -> float:
        return math.fsum(irreps.dimension(self.space, l) * a for l, a in self.alphas.items())


def spectrum_of_covariance(values, rule: QuadratureRule, labels: Sequence[int] | None = None) -> RecoveredSpectrum:
    """``alpha_pi = int R(g) conj(chi_pi(g)) dg`` from a central function on a rule.

    On the sphere ``values`` is ``R`` at the nodes viewed as distances to the
    north pole and ``alpha_l = int R(x) P_l(cos theta_x) dx``.
    """
    space = rule.space
    labels = irreps.labels_up_to(space, rule.band_limit) if labels is None else list(labels)
    values = np.asarray(values)
    chi = irreps.character_table(space, labels, rule.params)
    if isinstance(space, Sphere):
        chi = chi / np.array([2 * l + 1 for l in labels])[None, :]
    raw = (values * rule.weights) @ np.conj(chi)
    return RecoveredSpectrum(
        space, {l: float(a.real) for l, a in zip(labels, raw)}, float(np.max(np.abs(raw.imag), initial=0.0))
    )


def nugget_analysis(
    variance_at_zero: float,
    off_diagonal_value: float,
    space: Space,
    band: int,
    tol: float = 1e-9,
) -> NuggetVerdict:
    """Test whether ``Gamma(x, x) = v``, ``Gamma(x, y) = c`` (x != y) can be an isotropic covariance.

    On a non-discrete space the diagonal has Haar measure zero, so the grid
    representation carries the off-diagonal value at every node; its
    spectrum is that of the constant ``c`` and reconstructs ``c`` at the
    identity, leaving a defect ``v - c``.  On Z_N the identity carries mass
    ``1/N`` and the covariance is recovered exactly.
    """
    if band < 1:
        raise ValueError(f"band must be >= 1, got {band}")
    rule = space.quadrature(band)
    if isinstance(space, Sphere):
        origin = Sphere().params([NORTH_POLE])
    else:
        origin = space.params([space.identity()])
    dist = space.distance_params(np.repeat(origin, len(rule), axis=0), rule.params)
    diagonal = dist < 1e-12
    values = np.full(len(rule), float(off_diagonal_value))
    if space.is_discrete:
        values[diagonal] = variance_at_zero
    rec = spectrum_of_covariance(values, rule)
    recon = rec.variance()
    defect = float(variance_at_zero) - recon
    realizable = abs(defect) <= tol and rec.positive_definite(tol)
    if realizable:
        why = "the covariance is reproduced by a nonnegative spectrum; it is continuous on this space"
    elif abs(defect) > tol:
        why = (
            f"the spectrum recovered from the covariance reconstructs {recon:.12g} at zero distance, "
            f"not the claimed variance {variance_at_zero:.12g}: the jump of {defect:.12g} at the origin "
            "is invisible to Haar integrals, so no measurable isotropic field has this covariance "
            "(its covariance would have to be continuous everywhere)"
        )
    else:
        why = f"recovered spectrum has a negative weight {rec.min_alpha:.3g}; not positive definite"
    return NuggetVerdict(
        rec.alphas, recon, float(variance_at_zero), float(off_diagonal_value), realizable, defect, tol,
        int(diagonal.sum()), why,
    )


# --------------------------------------------------------------------------
# covariance continuity
# --------------------------------------------------------------------------

@dataclass
class ContinuityRow:
    difference: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.difference <= self.bound + 1e-9


@dataclass
class ContinuityReport:
    rows: list[ContinuityRow]

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.rows)

    @property
    def bounds(self) -> np.ndarray:
        return np.array([r.bound for r in self.rows])


def _gamma(spec: PowerSpectrum, x, y) -> np.ndarray:
    """``E[T(x) conj T(y)]`` for parameter arrays."""
    space = spec.space
    if isinstance(space, Sphere):
        return sphere_covariance(spec, space.distance_params(x, y)).astype(complex)
    rel = space.mul_params(x, space.inv_params(y))
    return covariance_values(spec, rel)


def covariance_continuity_check(spec: PowerSpectrum, sequence, limit) -> ContinuityReport:
    """Check ``|Gamma(x1,y1) - Gamma(x2,y2)| <= sqrt(Gamma(x1,x1) E|T(y1)-T(y2)|^2)
    + sqrt(Gamma(y2,y2) E|T(x1)-T(x2)|^2)`` along ``sequence`` of ``(x1, y1)``
    pairs converging to ``limit = (x2, y2)``.
    """
    space = spec.space
    x2, y2 = space.params([limit[0]]), space.params([limit[1]])
    rows = []
    var = spec.total_variance
    for x1, y1 in sequence:
        px, py = space.params([x1]), space.params([y1])
        diff = abs(complex(_gamma(spec, px, py)[0] - _gamma(spec, x2, y2)[0]))
        ms_y = max(2.0 * (var - _gamma(spec, py, y2)[0].real), 0.0)
        ms_x = max(2.0 * (var - _gamma(spec, px, x2)[0].real), 0.0)
        gxx = _gamma(spec, px, px)[0].real
        gyy = _gamma(spec, y2, y2)[0].real
        rows.append(ContinuityRow(diff, math.sqrt(max(gxx, 0) * ms_y) + math.sqrt(max(gyy, 0) * ms_x)))
    return ContinuityReport(rows)
