"""Power spectra, Gaussian isotropic fields and Peter-Weyl transforms.

Synthesis convention on a group::

    T(g) = sum_pi d_pi sum_ij That^pi_ij pi_ij(g),
    That^pi_ij = int_G T(h) conj(pi_ij(h)) dh,

and on the sphere ``T(x) = sum_lm a_lm Y_lm(x)`` with unit-mass ``Y_lm``.
A spectrum ``alpha`` gives the covariance ``R(g) = sum_pi alpha_pi chi_pi(g)``
(``sum_l alpha_l (2l + 1) P_l(cos d)`` on the sphere), so the total variance
is ``sum_pi d_pi alpha_pi`` everywhere.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import irreps
from .groups import (
    CircleGroup,
    CyclicGroup,
    DomainMismatchError,
    QuadratureRule,
    Rotation,
    RotationGroup,
    Space,
    Sphere,
    SpherePoint,
    space_of,
)


# --------------------------------------------------------------------------
# spectra
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    """Nonnegative weights ``alpha_pi`` of the characters in the covariance."""

    space: Space
    alphas: Mapping[int, float]

    def __post_init__(self):
        clean = {}
        for label, a in self.alphas.items():
            label = irreps.check_label(self.space, label)
            a = float(a)
            if not math.isfinite(a) or a < 0:
                raise ValueError(f"spectrum weight for label {label} must be finite and >= 0, got {a}")
            clean[label] = a
        order = irreps.sort_labels(self.space, clean)
        object.__setattr__(self, "alphas", {l: clean[l] for l in order})

    @property
    def labels(self) -> list[int]:
        return list(self.alphas)

    @property
    def band(self) -> int:
        nz = [irreps.band_of(self.space, l) for l, a in self.alphas.items() if a > 0]
        return max(nz, default=0)

    def alpha(self, label: int) -> float:
        return self.alphas.get(label, 0.0)

    def dim(self, label: int) -> int:
        return irreps.dimension(self.space, label)

    @property
    def total_variance(self) -> float:
        return math.fsum(self.dim(l) * a for l, a in self.alphas.items())

    def is_conjugation_symmetric(self) -> bool:
        return all(
            math.isclose(a, self.alpha(irreps.conjugate_label(self.space, l)), rel_tol=1e-12, abs_tol=0)
            for l, a in self.alphas.items()
        )

    # named families ------------------------------------------------------

    @classmethod
    def from_function(cls, space: Space, band: int, weight) -> "PowerSpectrum":
        """``alpha = weight(k)`` where ``k`` is the label's band (|n| or ell)."""
        if isinstance(space, CyclicGroup):
            labels = range(space.N)
            key = lambda n: min(n, space.N - n)
        else:
            labels = irreps.labels_up_to(space, band)
            key = abs
        return cls(space, {l: weight(key(l)) for l in labels})

    @classmethod
    def geometric(cls, space: Space, r: float, band: int) -> "PowerSpectrum":
        return cls.from_function(space, band, lambda k: r**k)

    @classmethod
    def delta(cls, space: Space, ell0: int, band: int | None = None) -> "PowerSpectrum":
        band = ell0 if band is None else band
        return cls.from_function(space, band, lambda k: 1.0 if k == ell0 else 0.0)

    @classmethod
    def polynomial(cls, space: Space, p: float, band: int) -> "PowerSpectrum":
        return cls.from_function(space, band, lambda k: (1.0 + k) ** (-p))

    @classmethod
    def zero(cls, space: Space, band: int = 0) -> "PowerSpectrum":
        return cls.from_function(space, band, lambda k: 0.0)


def _check_space(space: Space, x) -> None:
    other = space_of(x)
    if other != space:
        raise DomainMismatchError(f"{x!r} does not belong to {space!r}")


def covariance_from_spectrum(spec: PowerSpectrum, g) -> complex:
    """``R(g) = sum_pi alpha_pi chi_pi(g)``.

    On the sphere ``g`` may be a :class:`SpherePoint` (distance to the north
    pole) and the Legendre form is used.
    """
    _check_space(spec.space, g)
    params = spec.space.params([g])
    return complex(covariance_values(spec, params)[0])


def covariance_values(spec: PowerSpectrum, params) -> np.ndarray:
    """Vectorised ``R`` at parameter arrays."""
    labels = spec.labels
    if not labels:
        return np.zeros(len(params), complex)
    chi = irreps.character_table(spec.space, labels, params)
    return chi @ np.array([spec.alpha(l) for l in labels], dtype=complex)


def sphere_covariance(spec: PowerSpectrum, distance) -> np.ndarray:
    """Isotropic sphere covariance ``sum_l (2l + 1) alpha_l P_l(cos distance)``."""
    if not isinstance(spec.space, Sphere):
        raise DomainMismatchError("sphere_covariance needs a sphere spectrum")
    x = np.cos(np.asarray(distance, float))
    out = np.zeros_like(x)
    for l, a in spec.alphas.items():
        out = out + (2 * l + 1) * a * irreps.legendre(l, x)
    return out


# --------------------------------------------------------------------------
# coefficient layout
# --------------------------------------------------------------------------

class Layout:
    """Flattening of per-label coefficient blocks into a single vector."""

    def __init__(self, space: Space, labels: Sequence[int]):
        self.space = space
        self.labels = list(labels)
        self.dims = [irreps.dimension(space, l) for l in self.labels]
        if isinstance(space, Sphere):
            self.shapes = [(d,) for d in self.dims]
        else:
            self.shapes = [(d, d) for d in self.dims]
        sizes = [int(np.prod(s)) for s in self.shapes]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        self.size = int(self.offsets[-1])

    def slice(self, k: int) -> slice:
        return slice(self.offsets[k], self.offsets[k + 1])

    def synthesis_weights(self) -> np.ndarray:
        """``d_pi`` per coefficient on groups, 1 on the sphere."""
        if isinstance(self.space, Sphere):
            return np.ones(self.size)
        return np.concatenate([np.full(d * d, float(d)) for d in self.dims]) if self.labels else np.zeros(0)

    def label_of_coefficient(self) -> np.ndarray:
        return np.concatenate(
            [np.full(self.offsets[k + 1] - self.offsets[k], l) for k, l in enumerate(self.labels)]
        ).astype(int) if self.labels else np.zeros(0, int)

    def flatten(self, blocks: Mapping[int, np.ndarray]) -> np.ndarray:
        out = np.zeros(self.size, complex)
        for k, l in enumerate(self.labels):
            if l in blocks:
                out[self.slice(k)] = np.asarray(blocks[l], complex).reshape(-1)
        return out

    def unflatten(self, vec: np.ndarray) -> dict[int, np.ndarray]:
        return {l: np.asarray(vec[self.slice(k)]).reshape(self.shapes[k]).copy() for k, l in enumerate(self.labels)}

    def conjugation(self) -> tuple[np.ndarray, np.ndarray]:
        """``(perm, sign)`` such that a real field has ``c = sign * conj(c[perm])``."""
        perm = np.empty(self.size, int)
        sign = np.ones(self.size)
        pos = {l: k for k, l in enumerate(self.labels)}
        for k, l in enumerate(self.labels):
            lc = irreps.conjugate_label(self.space, l)
            if lc not in pos:
                raise ValueError(f"real structure needs conjugate label {lc} of {l} in the layout")
            kc = pos[lc]
            base, base_c = self.offsets[k], self.offsets[kc]
            if isinstance(self.space, (CyclicGroup, CircleGroup)):
                perm[base] = base_c
            elif isinstance(self.space, RotationGroup):
                d = self.dims[k]
                i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
                m, mp = i - l, j - l
                perm[base : base + d * d] = (base + (d - 1 - i) * d + (d - 1 - j)).ravel()
                sign[base : base + d * d] = ((-1.0) ** (m - mp)).ravel()
            else:  # sphere: a_{l,-m} = (-1)^m conj(a_lm)
                d = self.dims[k]
                m = np.arange(d) - l
                perm[base : base + d] = base + (d - 1 - np.arange(d))
                sign[base : base + d] = (-1.0) ** m
        return perm, sign


@dataclass(frozen=True, eq=False)
class FieldCoefficients:
    """Peter-Weyl coefficients ``That^pi_ij`` (or ``a_lm`` on the sphere)."""

    space: Space
    blocks: Mapping[int, np.ndarray]
    aliased: bool = False
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        clean = {}
        for l, b in self.blocks.items():
            l = irreps.check_label(self.space, l)
            d = irreps.dimension(self.space, l)
            b = np.array(b, dtype=complex)
            want = (d,) if isinstance(self.space, Sphere) else (d, d)
            if b.shape != want:
                raise ValueError(f"label {l}: expected block shape {want}, got {b.shape}")
            b.setflags(write=False)
            clean[l] = b
        order = irreps.sort_labels(self.space, clean)
        object.__setattr__(self, "blocks", {l: clean[l] for l in order})

    @property
    def labels(self) -> list[int]:
        return list(self.blocks)

    @property
    def layout(self) -> Layout:
        return Layout(self.space, self.labels)

    @property
    def band(self) -> int:
        return max((irreps.band_of(self.space, l) for l in self.labels), default=0)

    def flat(self) -> np.ndarray:
        return self.layout.flatten(self.blocks)

    @classmethod
    def from_flat(cls, space: Space, labels: Sequence[int], vec: np.ndarray, **kw) -> "FieldCoefficients":
        return cls(space, Layout(space, labels).unflatten(vec), **kw)

    def restrict(self, labels: Sequence[int]) -> "FieldCoefficients":
        keep = set(labels)
        return FieldCoefficients(self.space, {l: b for l, b in self.blocks.items() if l in keep})

    def __sub__(self, other: "FieldCoefficients") -> "FieldCoefficients":
        if other.space != self.space:
            raise DomainMismatchError("coefficient sets from different spaces")
        labels = irreps.sort_labels(self.space, set(self.labels) | set(other.labels))
        lay = Layout(self.space, labels)
        return FieldCoefficients.from_flat(self.space, labels, lay.flatten(self.blocks) - lay.flatten(other.blocks))


@dataclass(frozen=True, eq=False)
class FieldSample:
    """One realisation of a field with its seed provenance."""

    coefficients: FieldCoefficients
    replicate: int
    seed: int
    real: bool = False

    @property
    def space(self) -> Space:
        return self.coefficients.space


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------

def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Generator for one replicate, derived from ``(seed, replicate)`` only."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(replicate),)))


def coefficient_variances(spec: PowerSpectrum, layout: Layout | None = None) -> np.ndarray:
    """``E|That_ij|^2 = alpha / d^2`` on groups, ``E|a_lm|^2 = alpha_l`` on the sphere."""
    layout = layout or Layout(spec.space, spec.labels)
    var = np.empty(layout.size)
    for k, l in enumerate(layout.labels):
        d = layout.dims[k]
        a = spec.alpha(l)
        var[layout.slice(k)] = a if isinstance(spec.space, Sphere) else a / (d * d)
    return var


def _draw(spec: PowerSpectrum, layout: Layout, seed: int, replicate: int, real: bool, conj) -> np.ndarray:
    rng = replicate_rng(seed, replicate)
    z = rng.standard_normal(layout.size) + 1j * rng.standard_normal(layout.size)
    c = z * np.sqrt(coefficient_variances(spec, layout) / 2.0)
    if real:
        perm, sign = conj
        c = (c + sign * np.conj(c[perm])) / math.sqrt(2.0)
    return c


def _check_real(spec: PowerSpectrum) -> None:
    if not spec.is_conjugation_symmetric():
        raise ValueError("a real field needs alpha equal on conjugate labels")


def sample_gaussian(spec: PowerSpectrum, seed: int, replicate: int = 0, real: bool = False) -> FieldSample:
    """Draw a centred Gaussian isotropic field with spectrum ``spec``.

    Coefficients are independent circular complex Gaussians with
    ``E|That^pi_ij|^2 = alpha_pi / d_pi^2``.  With ``real=True`` they are
    symmetrised so that the field is real (conjugate labels paired, and on
    SO(3) ``That_{-m,-m'} = (-1)^(m-m') conj(That_{m m'})``).
    """
    layout = Layout(spec.space, spec.labels)
    if real:
        _check_real(spec)
    conj = layout.conjugation() if real else None
    c = _draw(spec, layout, seed, replicate, real, conj)
    return FieldSample(FieldCoefficients.from_flat(spec.space, layout.labels, c), replicate, int(seed), real)


def sample_ensemble(
    spec: PowerSpectrum,
    seed: int,
    replicates: int,
    real: bool = False,
    workers: int = 1,
    start: int = 0,
) -> tuple[Layout, np.ndarray]:
    """Coefficient vectors of replicates ``start .. start + replicates - 1``.

    Row ``r`` is exactly the flattened coefficients of
    ``sample_gaussian(spec, seed, start + r, real)``, whatever ``workers`` is.
    """
    layout = Layout(spec.space, spec.labels)
    if real:
        _check_real(spec)
    conj = layout.conjugation() if real else None
    out = np.empty((replicates, layout.size), complex)

    def fill(rows):
        for r in rows:
            out[r] = _draw(spec, layout, seed, start + r, real, conj)

    chunks = np.array_split(np.arange(replicates), max(1, workers))
    if workers <= 1:
        fill(range(replicates))
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(fill, chunks))
    return layout, out


# --------------------------------------------------------------------------
# evaluation / analysis
# --------------------------------------------------------------------------

def _as_coefficients(obj) -> FieldCoefficients:
    return obj.coefficients if isinstance(obj, FieldSample) else obj


def synthesize(space: Space, layout: Layout, flat: np.ndarray, params) -> np.ndarray:
    """Evaluate flat coefficient vectors (last axis) at parameter arrays."""
    B = irreps.coefficient_basis(space, layout.labels, params)
    return (np.asarray(flat) * layout.synthesis_weights()) @ B.T


def evaluate(sample, g):
    """``T(g)`` for a group element (complex) or a list of them (array)."""
    coeffs = _as_coefficients(sample)
    if isinstance(coeffs.space, Sphere):
        raise DomainMismatchError("use evaluate_on_sphere for sphere fields")
    many = isinstance(g, (list, tuple))
    pts = list(g) if many else [g]
    for p in pts:
        _check_space(coeffs.space, p)
    vals = synthesize(coeffs.space, coeffs.layout, coeffs.flat(), coeffs.space.params(pts))
    return vals if many else complex(vals[0])


def evaluate_on_sphere(sample, x):
    """``T(x) = sum a_lm Y_lm(x)`` for a sphere point or a list of them."""
    coeffs = _as_coefficients(sample)
    if not isinstance(coeffs.space, Sphere):
        raise DomainMismatchError("evaluate_on_sphere needs a sphere field")
    many = isinstance(x, (list, tuple))
    pts = list(x) if many else [x]
    vals = synthesize(coeffs.space, coeffs.layout, coeffs.flat(), Sphere().params(pts))
    return vals if many else complex(vals[0])


def evaluate_on_rule(sample, rule: QuadratureRule) -> np.ndarray:
    coeffs = _as_coefficients(sample)
    if rule.space != coeffs.space:
        raise DomainMismatchError("rule and field live on different spaces")
    return synthesize(coeffs.space, coeffs.layout, coeffs.flat(), rule.params)


def _aliasing(rule: QuadratureRule, labels) -> list[str]:
    band = max((irreps.band_of(rule.space, l) for l in labels), default=0)
    if rule.covers(band):
        return []
    return [f"aliasing: labels reach band {band} but the quadrature rule is exact only to band {rule.band_limit}"]


def analyze_flat(values, rule: QuadratureRule, labels: Sequence[int]) -> tuple[Layout, np.ndarray]:
    """Vectorised analysis: ``values`` has nodes on the last axis."""
    values = np.asarray(values)
    if values.shape[-1] != len(rule):
        raise ValueError(f"got {values.shape[-1]} values for a rule with {len(rule)} nodes")
    layout = Layout(rule.space, labels)
    B = irreps.coefficient_basis(rule.space, layout.labels, rule.params)
    return layout, (np.asarray(values) * rule.weights) @ np.conj(B)


def analyze(values, rule: QuadratureRule, labels: Sequence[int]) -> FieldCoefficients:
    """Coefficients ``That^pi_ij = int T(h) conj(pi_ij(h)) dh`` by quadrature.

    If a label is beyond the rule's exactness band the result carries
    ``aliased=True`` and a warning message.
    """
    labels = irreps.sort_labels(rule.space, labels)
    warn = _aliasing(rule, labels)
    layout, flat = analyze_flat(np.asarray(values), rule, labels)
    return FieldCoefficients.from_flat(rule.space, layout.labels, flat, aliased=bool(warn), warnings=tuple(warn))


def l2_norm_squared(values, rule: QuadratureRule) -> float:
    return float(rule.integrate(np.abs(np.asarray(values)) ** 2).real)


def parseval_energy(coeffs: FieldCoefficients) -> float:
    """``sum_pi d_pi sum_ij |That_ij|^2`` (``sum |a_lm|^2`` on the sphere)."""
    lay = coeffs.layout
    return float(np.sum(lay.synthesis_weights() * np.abs(coeffs.flat()) ** 2))


def _relative_params(space: Space, h, g):
    """``h^-1 g`` for all pairs (rows ``g``, columns ``h``).

    On SO(3) only the trace of the relative rotation is returned.
    """
    if isinstance(space, RotationGroup):
        Rh = RotationGroup.matrices(h).reshape(-1, 9)
        Rg = RotationGroup.matrices(g).reshape(-1, 9)
        return Rg @ Rh.T
    hinv = space.inv_params(h)
    return space.mul_params(hinv[None, :], np.asarray(g)[:, None])


def projection_kernel(rule: QuadratureRule, label: int, out_params=None) -> np.ndarray:
    """``K[g, h] = d_pi w_h chi_pi(h^-1 g)`` so that ``T^pi = K @ T``.

    On the sphere ``K[x, y] = (2l + 1) w_y P_l(x . y)``.
    """
    space = rule.space
    out_params = rule.params if out_params is None else out_params
    label = irreps.check_label(space, label)
    if isinstance(space, Sphere):
        u, v = Sphere.vectors(out_params), Sphere.vectors(rule.params)
        K = (2 * label + 1) * irreps.legendre(label, np.clip(u @ v.T, -1.0, 1.0))
        return K * rule.weights[None, :]
    d = irreps.dimension(space, label)
    rel = _relative_params(space, rule.params, out_params)
    if isinstance(space, RotationGroup):
        chi = irreps.so3_character_from_trace(label, rel)
    elif isinstance(space, CyclicGroup):
        chi = np.exp(-2j * math.pi * label * rel / space.N)
    else:
        chi = np.exp(-1j * label * rel)
    return d * chi * rule.weights[None, :]


def project(values, rule: QuadratureRule, label: int, method: str = "character") -> np.ndarray:
    """Component ``T^pi`` on the rule's nodes.

    ``method="character"`` uses ``d_pi int T(h) chi_pi(h^-1 g) dh``;
    ``method="coefficients"`` analyses then re-synthesises the single label.
    Both agree for labels within the rule's band.
    """
    values = np.asarray(values)
    if method == "character":
        return values @ projection_kernel(rule, label).T
    if method == "coefficients":
        layout, flat = analyze_flat(values, rule, [label])
        return synthesize(rule.space, layout, flat, rule.params)
    raise ValueError(f"unknown projection method {method!r}")


def partial_sum(sample, n: int):
    """Keep the components of the first ``n`` labels of the dual enumeration."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    coeffs = _as_coefficients(sample)
    space = coeffs.space
    keep = [l for l in coeffs.labels if irreps.enumeration_index(space, l) < n]
    part = coeffs.restrict(keep)
    if isinstance(sample, FieldSample):
        return FieldSample(part, sample.replicate, sample.seed, sample.real)
    return part


def tail_variance(spec: PowerSpectrum, n: int) -> float:
    """``sum_{k > n} d_k alpha_k`` over the enumeration order (in-band labels)."""
    return math.fsum(
        spec.dim(l) * a for l, a in spec.alphas.items() if irreps.enumeration_index(spec.space, l) >= n
    )


def enumeration_length(spec: PowerSpectrum) -> int:
    """Smallest prefix length containing every label with positive weight."""
    idx = [irreps.enumeration_index(spec.space, l) for l, a in spec.alphas.items() if a > 0]
    return max(idx, default=-1) + 1


# --------------------------------------------------------------------------
# translations and the sphere lift
# --------------------------------------------------------------------------

def left_translate(coeffs: FieldCoefficients, h) -> FieldCoefficients:
    """Coefficients of ``T^h(g) = T(h g)``: ``That -> pi(h)^T That``."""
    _check_space(coeffs.space, h)
    out = {}
    for l, b in coeffs.blocks.items():
        out[l] = irreps.matrix(l, h).entries.T @ b
    return FieldCoefficients(coeffs.space, out)


def lift(coeffs: FieldCoefficients, x: SpherePoint = None) -> FieldCoefficients:
    """SO(3) coefficients of ``T_x(g) = T(g . x)`` for a sphere field.

    At the north pole only the ``m' = 0`` column is populated:
    ``That^l_{-m, 0} = (-1)^m a_lm / sqrt(2l + 1)``.
    """
    coeffs = _as_coefficients(coeffs)
    if not isinstance(coeffs.space, Sphere):
        raise DomainMismatchError("lift needs a sphere field")
    blocks = {}
    for l, a in coeffs.blocks.items():
        d = 2 * l + 1
        m = np.arange(-l, l + 1)
        col = np.zeros((d, d), complex)
        col[::-1, l] = (-1.0) ** m * a / math.sqrt(d)
        blocks[l] = col
    lifted = FieldCoefficients(RotationGroup(), blocks)
    if x is None:
        return lifted
    # T_x(g) = T_north(g r) with r . north = x, i.e. That -> That pi(r)^T
    r = Rotation(x.phi, x.theta, 0.0)
    return FieldCoefficients(
        RotationGroup(), {l: b @ irreps.matrix(l, r).entries.T for l, b in lifted.blocks.items()}
    )
