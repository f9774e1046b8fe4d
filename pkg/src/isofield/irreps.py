"""Irreducible unitary representations of Z_N, U(1) and SO(3), and Y_lm on S^2.

Labels are plain integers interpreted in the owning group: a frequency
``n`` in ``[0, N)`` for Z_N, any integer frequency for U(1), a degree
``ell >= 0`` for SO(3) (and for the sphere).  Matrix indices of an SO(3)
irrep run over ``m = -ell..ell`` in ascending order, so entry ``(i, j)``
corresponds to ``(m, m') = (i - ell, j - ell)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .groups import (
    Circle,
    CircleGroup,
    Cyclic,
    CyclicGroup,
    DomainMismatchError,
    GroupElement,
    Rotation,
    RotationGroup,
    Space,
    Sphere,
    SpherePoint,
    space_of,
)


# --------------------------------------------------------------------------
# labels and the dual
# --------------------------------------------------------------------------

def check_label(group: Space, label: int) -> int:
    label = int(label)
    if isinstance(group, CyclicGroup):
        if not 0 <= label < group.N:
            raise DomainMismatchError(f"Z_{group.N} has no irrep {label}")
    elif isinstance(group, (RotationGroup, Sphere)):
        if label < 0:
            raise DomainMismatchError(f"degree must be >= 0, got {label}")
    elif not isinstance(group, CircleGroup):
        raise DomainMismatchError(f"unknown group {group!r}")
    return label


def dimension(group: Space, label: int) -> int:
    """d_pi: 1 for the abelian groups, 2 ell + 1 for SO(3) and for sphere degrees."""
    label = check_label(group, label)
    if isinstance(group, (RotationGroup, Sphere)):
        return 2 * label + 1
    return 1


def band_of(group: Space, label: int) -> int:
    """Quadrature band needed by a label: |n| on U(1), ell on SO(3); 0 on Z_N."""
    label = check_label(group, label)
    if isinstance(group, CyclicGroup):
        return 0
    return abs(label)


def enumerate_dual(group: Space, n: int) -> list[int]:
    """First ``n`` labels in the fixed enumeration order.

    Z_N: 0, 1, ..., N-1; U(1): 0, 1, -1, 2, -2, ...; SO(3): 0, 1, 2, ...
    """
    if n < 0:
        raise ValueError(f"count must be >= 0, got {n}")
    if isinstance(group, CyclicGroup):
        if n > group.N:
            raise ValueError(f"Z_{group.N} has only {group.N} irreps, asked for {n}")
        return list(range(n))
    if isinstance(group, CircleGroup):
        return [(k + 1) // 2 if k % 2 else -(k // 2) for k in range(n)]
    if isinstance(group, (RotationGroup, Sphere)):
        return list(range(n))
    raise DomainMismatchError(f"unknown group {group!r}")


def enumeration_index(group: Space, label: int) -> int:
    """Position of ``label`` in :func:`enumerate_dual` order."""
    label = check_label(group, label)
    if isinstance(group, CircleGroup):
        return 2 * label - 1 if label > 0 else -2 * label
    return label


def sort_labels(group: Space, labels) -> list[int]:
    return sorted({check_label(group, l) for l in labels}, key=lambda l: enumeration_index(group, l))


def labels_up_to(group: Space, band: int) -> list[int]:
    """All labels of band at most ``band`` (every label for Z_N)."""
    if isinstance(group, CyclicGroup):
        return list(range(group.N))
    if isinstance(group, CircleGroup):
        return enumerate_dual(group, 2 * band + 1)
    return list(range(band + 1))


def conjugate_label(group: Space, label: int) -> int:
    """Label of the complex-conjugate representation."""
    if isinstance(group, CyclicGroup):
        return (-label) % group.N
    if isinstance(group, CircleGroup):
        return -label
    return label


# --------------------------------------------------------------------------
# Wigner d
# --------------------------------------------------------------------------

def _wigner_seed(j: int, m: np.ndarray, mp: np.ndarray, c: np.ndarray, s: np.ndarray) -> np.ndarray:
    """d^j_{m m'} at the lowest degree ``j = max(|m|, |m'|)``, closed form.

    ``m``, ``mp`` have shape (k,), ``c = cos(beta/2)``, ``s = sin(beta/2)``
    have shape (nb,).  Returns (nb, k).
    """
    out = np.empty((c.shape[0], m.shape[0]))
    for idx, (a, b) in enumerate(zip(m.tolist(), mp.tolist())):
        if a == j:
            coef, p, q, sign = math.comb(2 * j, j + b), j + b, j - b, (-1) ** (j - b)
        elif a == -j:
            coef, p, q, sign = math.comb(2 * j, j - b), j - b, j + b, 1
        elif b == j:
            coef, p, q, sign = math.comb(2 * j, j + a), j + a, j - a, 1
        else:  # b == -j
            coef, p, q, sign = math.comb(2 * j, j - a), j - a, j + a, (-1) ** (j + a)
        out[:, idx] = sign * math.sqrt(coef) * c**p * s**q
    return out


def wigner_d_all(lmax: int, beta) -> list[np.ndarray]:
    """Small Wigner matrices ``d^ell(beta)`` for every ``ell <= lmax``.

    Uses the three-term recursion in ``ell`` at fixed ``(m, m')``, seeded by
    the closed form at ``ell = max(|m|, |m'|)`` (and ``d^1_00 = cos beta``).

    Returns a list whose ``ell``-th item has shape ``(nb, 2 ell + 1, 2 ell + 1)``
    for a 1-d ``beta`` of length ``nb`` (scalars give ``nb = 1``).
    """
    beta = np.atleast_1d(np.asarray(beta, float))
    nb = beta.shape[0]
    x = np.cos(beta)
    c, s = np.cos(beta / 2.0), np.sin(beta / 2.0)
    size = 2 * lmax + 1
    mgrid = np.arange(-lmax, lmax + 1)
    M, MP = np.meshgrid(mgrid, mgrid, indexing="ij")
    M, MP = M.ravel(), MP.ravel()
    lo = np.maximum(np.abs(M), np.abs(MP))
    mm = (M * MP).astype(float)
    m2, mp2 = (M**2).astype(float), (MP**2).astype(float)

    prev = np.zeros((nb, size * size))
    cur = np.zeros((nb, size * size))
    out = []
    for ell in range(lmax + 1):
        if ell == 0:
            nxt = np.zeros_like(cur)
        else:
            # advance from ell-1 to ell for entries already seeded
            k = ell - 1
            active = lo <= k
            num_a = (2 * k + 1) * (k * (k + 1) * x[:, None] - mm[None, active])
            num_b = (k + 1) * np.sqrt(np.maximum((k * k - m2[active]) * (k * k - mp2[active]), 0.0))
            den = k * np.sqrt((ell * ell - m2[active]) * (ell * ell - mp2[active]))
            nxt = np.zeros_like(cur)
            if k == 0:
                # only m = m' = 0 is active here
                nxt[:, active] = x[:, None]
            else:
                nxt[:, active] = (num_a * cur[:, active] - num_b[None, :] * prev[:, active]) / den[None, :]
        seed = lo == ell
        nxt[:, seed] = _wigner_seed(ell, M[seed], MP[seed], c, s)
        if ell == 0:
            nxt[:, seed] = 1.0
        prev, cur = cur, nxt
        block = cur.reshape(nb, size, size)[:, lmax - ell : lmax + ell + 1, lmax - ell : lmax + ell + 1]
        out.append(block.copy())
    return out


def wigner_d(ell: int, beta) -> np.ndarray:
    """``d^ell(beta)``; shape ``(2 ell + 1, 2 ell + 1)`` for scalar beta, else batched."""
    d = wigner_d_all(ell, beta)[ell]
    return d[0] if np.ndim(beta) == 0 else d


def wigner_D(ell: int, alpha, beta, gamma) -> np.ndarray:
    """``D^ell_{m m'} = exp(-i m alpha) d^ell_{m m'}(beta) exp(-i m' gamma)``."""
    scalar = np.ndim(alpha) == 0 and np.ndim(beta) == 0 and np.ndim(gamma) == 0
    alpha, beta, gamma = (np.atleast_1d(np.asarray(v, float)) for v in (alpha, beta, gamma))
    alpha, beta, gamma = np.broadcast_arrays(alpha, beta, gamma)
    m = np.arange(-ell, ell + 1)
    d = wigner_d_all(ell, beta)[ell]
    D = np.exp(-1j * m[None, :, None] * alpha[:, None, None]) * d
    D = D * np.exp(-1j * m[None, None, :] * gamma[:, None, None])
    return D[0] if scalar else D


def so3_character_from_trace(ell: int, trace) -> np.ndarray:
    """chi_ell as a polynomial in the trace of the 3x3 rotation matrix.

    chi_ell(omega) = U_{2 ell}(cos(omega / 2)) and cos^2(omega / 2) = (trace + 1) / 4.
    """
    x = np.sqrt(np.clip((np.asarray(trace, float) + 1.0) / 4.0, 0.0, 1.0))
    u_prev, u = np.ones_like(x), 2.0 * x
    if ell == 0:
        return u_prev
    for _ in range(2 * ell - 1):
        u_prev, u = u, 2.0 * x * u - u_prev
    return u


# --------------------------------------------------------------------------
# element-level API
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IrrepMatrix:
    """The unitary matrix ``pi(g)`` of irrep ``label`` at ``element``."""

    label: int
    element: GroupElement
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.entries))


def matrix(label: int, g: GroupElement) -> IrrepMatrix:
    """Matrix coefficients ``pi_ij(g)`` of irrep ``label``."""
    G = space_of(g)
    if not G.is_group:
        raise DomainMismatchError("matrix coefficients need a group element")
    label = check_label(G, label)
    if isinstance(g, Cyclic):
        entries = np.array([[np.exp(-2j * math.pi * label * g.index / g.N)]])
    elif isinstance(g, Circle):
        entries = np.array([[np.exp(-1j * label * g.theta)]])
    else:
        entries = wigner_D(label, g.alpha, g.beta, g.gamma)
    return IrrepMatrix(label, g, entries)


def character(label: int, g: GroupElement) -> complex:
    """chi_pi(g) = Trace pi(g)."""
    return matrix(label, g).trace()


# --------------------------------------------------------------------------
# spherical harmonics
# --------------------------------------------------------------------------

def _normalized_legendre(lmax: int, x: np.ndarray) -> np.ndarray:
    """``P[l, m, :]`` for ``0 <= m <= l <= lmax`` such that
    ``Y_lm = P[l, m] exp(i m phi)`` has unit norm under the unit-mass measure.
    Condon-Shortley phase included.
    """
    x = np.asarray(x, float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    P = np.zeros((lmax + 1, lmax + 1) + x.shape)
    pmm = np.ones_like(x)
    for m in range(lmax + 1):
        if m > 0:
            pmm = -pmm * s * math.sqrt((2 * m - 1) / (2 * m))
        P[m, m] = pmm * math.sqrt(2 * m + 1)
        if m < lmax:
            P[m + 1, m] = x * math.sqrt(2 * m + 3) * P[m, m]
        for ell in range(m + 2, lmax + 1):
            a = math.sqrt((4 * ell * ell - 1) / (ell * ell - m * m))
            b = math.sqrt(((ell - 1) ** 2 - m * m) / (4 * (ell - 1) ** 2 - 1))
            P[ell, m] = a * (x * P[ell - 1, m] - b * P[ell - 2, m])
    return P


def sph_harmonics_all(lmax: int, theta, phi) -> np.ndarray:
    """All ``Y_lm`` with ``l <= lmax`` at the given points.

    Returns shape ``(npts, (lmax + 1)**2)``; column ``l*l + l + m`` is ``Y_lm``.
    """
    theta = np.atleast_1d(np.asarray(theta, float))
    phi = np.atleast_1d(np.asarray(phi, float))
    P = _normalized_legendre(lmax, np.cos(theta))
    out = np.empty(theta.shape + ((lmax + 1) ** 2,), dtype=complex)
    for ell in range(lmax + 1):
        for m in range(0, ell + 1):
            y = P[ell, m] * np.exp(1j * m * phi)
            out[..., ell * ell + ell + m] = y
            if m:
                out[..., ell * ell + ell - m] = (-1) ** m * np.conj(y)
    return out


def sph_harmonic(ell: int, m: int, x: SpherePoint) -> complex:
    """``Y_lm(x)`` normalised to unit L^2 norm under the unit-mass measure (Y_00 = 1)."""
    if ell < 0 or abs(m) > ell:
        raise ValueError(f"need |m| <= ell, got ell={ell}, m={m}")
    return complex(sph_harmonics_all(ell, x.theta, x.phi)[0, ell * ell + ell + m])


# --------------------------------------------------------------------------
# vectorised bases over parameter arrays
# --------------------------------------------------------------------------

def coefficient_basis(space: Space, labels: Sequence[int], params) -> np.ndarray:
    """Matrix of basis functions at ``params``.

    For groups the columns are ``pi_ij(g)`` for every label, ``(i, j)`` in
    row-major order; for the sphere they are ``Y_lm`` with ``m`` ascending.
    Shape ``(npts, ncoef)``.
    """
    labels = [check_label(space, l) for l in labels]
    params = np.asarray(params)
    if isinstance(space, CyclicGroup):
        k = params.reshape(-1)
        n = np.asarray(labels)
        return np.exp(-2j * math.pi * np.outer(k, n) / space.N)
    if isinstance(space, CircleGroup):
        t = params.reshape(-1)
        return np.exp(-1j * np.outer(t, np.asarray(labels, float)))
    if isinstance(space, RotationGroup):
        p = params.reshape(-1, 3)
        if not labels:
            return np.zeros((p.shape[0], 0), complex)
        lmax = max(labels)
        ds = wigner_d_all(lmax, p[:, 1])
        m = np.arange(-lmax, lmax + 1)
        ea = np.exp(-1j * p[:, 0:1] * m[None, :])
        eg = np.exp(-1j * p[:, 2:3] * m[None, :])
        cols = []
        for ell in labels:
            sl = slice(lmax - ell, lmax + ell + 1)
            D = ea[:, sl, None] * ds[ell] * eg[:, None, sl]
            cols.append(D.reshape(p.shape[0], -1))
        return np.concatenate(cols, axis=1)
    if isinstance(space, Sphere):
        p = params.reshape(-1, 2)
        if not labels:
            return np.zeros((p.shape[0], 0), complex)
        Y = sph_harmonics_all(max(labels), p[:, 0], p[:, 1])
        return np.concatenate([Y[:, l * l : (l + 1) ** 2] for l in labels], axis=1)
    raise DomainMismatchError(f"unknown space {space!r}")


def character_table(space: Space, labels: Sequence[int], params) -> np.ndarray:
    """``chi_pi(g)`` for each label (columns) at each point (rows).

    On the sphere the column for degree ``ell`` is the zonal function
    ``(2 ell + 1) P_ell(cos theta)`` about the north pole.
    """
    labels = [check_label(space, l) for l in labels]
    params = np.asarray(params)
    if isinstance(space, (CyclicGroup, CircleGroup)):
        return coefficient_basis(space, labels, params)
    if isinstance(space, RotationGroup):
        tr = np.trace(RotationGroup.matrices(params.reshape(-1, 3)), axis1=-2, axis2=-1)
        return np.stack([so3_character_from_trace(l, tr) for l in labels], axis=1).astype(complex)
    if isinstance(space, Sphere):
        x = np.cos(params.reshape(-1, 2)[:, 0])
        return np.stack([(2 * l + 1) * legendre(l, x) for l in labels], axis=1).astype(complex)
    raise DomainMismatchError(f"unknown space {space!r}")


def legendre(ell: int, x) -> np.ndarray:
    """Legendre polynomial P_ell by Bonnet's recursion."""
    x = np.asarray(x, float)
    p_prev, p = np.ones_like(x), x.copy()
    if ell == 0:
        return p_prev
    for k in range(1, ell):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p
