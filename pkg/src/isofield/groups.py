"""Concrete compact groups, Haar quadrature and the rotation action on S^2.

Three groups are supported: the cyclic group Z_N, the circle U(1) and the
rotation group SO(3).  Elements are small frozen dataclasses whose
parameters are canonicalised on construction.  Every group also works on
plain parameter arrays (``int`` indices, angles, or ``(n, 3)`` Euler
triples) so that quadrature grids and Monte Carlo ensembles can be handled
without materialising thousands of element objects.

SO(3) uses the ZYZ Euler convention ``R = Rz(alpha) Ry(beta) Rz(gamma)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

TWO_PI = 2.0 * math.pi
# below this sin(beta) an Euler triple is treated as gimbal-degenerate
_GIMBAL_EPS = 1e-12
EQUALITY_TOL = 1e-9


class DomainMismatchError(ValueError):
    """Raised when objects from different groups (or spaces) are combined."""


def _wrap(x):
    """Reduce angles to [0, 2pi); works on scalars and arrays."""
    y = np.mod(x, TWO_PI)
    y = np.where(y >= TWO_PI, 0.0, y)
    if np.ndim(y) == 0:
        return float(y)
    return y


# --------------------------------------------------------------------------
# rotation matrices
# --------------------------------------------------------------------------

def euler_to_matrix(alpha, beta, gamma) -> np.ndarray:
    """Rotation matrices ``Rz(alpha) Ry(beta) Rz(gamma)``; shape ``(..., 3, 3)``."""
    alpha, beta, gamma = np.broadcast_arrays(
        np.asarray(alpha, float), np.asarray(beta, float), np.asarray(gamma, float)
    )
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    cg, sg = np.cos(gamma), np.sin(gamma)
    R = np.empty(alpha.shape + (3, 3))
    R[..., 0, 0] = ca * cb * cg - sa * sg
    R[..., 0, 1] = -ca * cb * sg - sa * cg
    R[..., 0, 2] = ca * sb
    R[..., 1, 0] = sa * cb * cg + ca * sg
    R[..., 1, 1] = -sa * cb * sg + ca * cg
    R[..., 1, 2] = sa * sb
    R[..., 2, 0] = -sb * cg
    R[..., 2, 1] = sb * sg
    R[..., 2, 2] = cb
    return R


def matrix_to_euler(R: np.ndarray) -> np.ndarray:
    """Canonical ZYZ Euler angles of rotation matrices ``(..., 3, 3)``.

    Returns an array ``(..., 3)`` with alpha, gamma in [0, 2pi) and beta in
    [0, pi].  When beta is 0 or pi the gamma angle is folded into alpha.
    """
    R = np.asarray(R, float)
    sb = np.hypot(R[..., 0, 2], R[..., 1, 2])
    beta = np.arctan2(sb, R[..., 2, 2])
    alpha = np.arctan2(R[..., 1, 2], R[..., 0, 2])
    gamma = np.arctan2(R[..., 2, 1], -R[..., 2, 0])

    degenerate = sb < _GIMBAL_EPS
    north = degenerate & (R[..., 2, 2] > 0)
    south = degenerate & (R[..., 2, 2] <= 0)
    alpha = np.where(north, np.arctan2(R[..., 1, 0], R[..., 0, 0]), alpha)
    alpha = np.where(south, np.arctan2(-R[..., 1, 0], R[..., 1, 1]), alpha)
    beta = np.where(north, 0.0, np.where(south, math.pi, beta))
    gamma = np.where(degenerate, 0.0, gamma)
    return np.stack([_wrap(alpha), beta, _wrap(gamma)], axis=-1)


def rotation_angle(R: np.ndarray) -> np.ndarray:
    """Rotation angle in [0, pi] of rotation matrices, accurate near 0 and pi."""
    R = np.asarray(R, float)
    v = np.stack(
        [R[..., 2, 1] - R[..., 1, 2], R[..., 0, 2] - R[..., 2, 0], R[..., 1, 0] - R[..., 0, 1]],
        axis=-1,
    )
    s = 0.5 * np.linalg.norm(v, axis=-1)
    c = 0.5 * (np.trace(R, axis1=-2, axis2=-1) - 1.0)
    return np.arctan2(s, c)


def axis_angle_matrix(axis, angle) -> np.ndarray:
    """Rodrigues formula; ``axis`` is ``(..., 3)``, need not be normalised."""
    axis = np.asarray(axis, float)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    angle = np.asarray(angle, float)[..., None, None]
    K = np.zeros(axis.shape[:-1] + (3, 3))
    K[..., 0, 1], K[..., 0, 2] = -axis[..., 2], axis[..., 1]
    K[..., 1, 0], K[..., 1, 2] = axis[..., 2], -axis[..., 0]
    K[..., 2, 0], K[..., 2, 1] = -axis[..., 1], axis[..., 0]
    eye = np.broadcast_to(np.eye(3), K.shape)
    return eye + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


# --------------------------------------------------------------------------
# elements
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Cyclic:
    """Element ``index`` of Z_N."""

    index: int
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"cyclic group order must be >= 1, got {self.N}")
        object.__setattr__(self, "index", int(self.index) % int(self.N))

    @property
    def group(self) -> "CyclicGroup":
        return CyclicGroup(self.N)


@dataclass(frozen=True)
class Circle:
    """Element ``exp(i theta)`` of U(1)."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _wrap(float(self.theta)))

    @property
    def group(self) -> "CircleGroup":
        return CircleGroup()


@dataclass(frozen=True)
class Rotation:
    """Element of SO(3) as ZYZ Euler angles."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        a, b, c = float(self.alpha), float(self.beta), float(self.gamma)
        if 0.0 <= b <= math.pi and math.sin(b) >= _GIMBAL_EPS:
            a, c = _wrap(a), _wrap(c)
        else:
            a, b, c = matrix_to_euler(euler_to_matrix(a, b, c))
        object.__setattr__(self, "alpha", float(a))
        object.__setattr__(self, "beta", float(b))
        object.__setattr__(self, "gamma", float(c))

    @property
    def group(self) -> "RotationGroup":
        return RotationGroup()

    def matrix(self) -> np.ndarray:
        return euler_to_matrix(self.alpha, self.beta, self.gamma)

    @classmethod
    def from_matrix(cls, R: np.ndarray) -> "Rotation":
        a, b, c = matrix_to_euler(R)
        return cls(a, b, c)

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> "Rotation":
        return cls.from_matrix(axis_angle_matrix(axis, angle))


GroupElement = Union[Cyclic, Circle, Rotation]


@dataclass(frozen=True)
class SpherePoint:
    """Point on S^2 given by colatitude ``theta`` and longitude ``phi``."""

    theta: float
    phi: float

    def __post_init__(self):
        t, p = float(self.theta), float(self.phi)
        if not 0.0 <= t <= math.pi:
            t, p = _vector_to_angles(_angles_to_vector(t, p))
        object.__setattr__(self, "theta", float(t))
        object.__setattr__(self, "phi", _wrap(p))

    def vector(self) -> np.ndarray:
        return _angles_to_vector(self.theta, self.phi)

    @classmethod
    def from_vector(cls, v) -> "SpherePoint":
        v = np.asarray(v, float)
        t, p = _vector_to_angles(v / np.linalg.norm(v))
        return cls(float(t), float(p))


NORTH_POLE = SpherePoint(0.0, 0.0)


def _angles_to_vector(theta, phi) -> np.ndarray:
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def _vector_to_angles(v):
    v = np.asarray(v, float)
    rho = np.hypot(v[..., 0], v[..., 1])
    theta = np.arctan2(rho, v[..., 2])
    phi = np.where(rho < 1e-15, 0.0, np.arctan2(v[..., 1], v[..., 0]))
    return theta, _wrap(phi)


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights of a normalised quadrature rule.

    ``params`` holds the nodes in the owning space's parameter format; the
    ``nodes`` property materialises them as element objects.
    """

    space: "Space"
    params: np.ndarray
    weights: np.ndarray
    band_limit: int
    domain: str  # "group" or "sphere"

    @property
    def nodes(self) -> list:
        return self.space.elements(self.params)

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values) -> complex:
        """Quadrature of ``values`` sampled at the nodes (last axis)."""
        return np.asarray(values) @ self.weights

    def covers(self, band: int) -> bool:
        """Whether products of two functions of band ``band`` are integrated exactly."""
        return self.space.exact_for(self, band)


def _gauss_legendre_cos(n: int):
    """Gauss-Legendre nodes in ``cos(angle)`` returned as angles, weights summing to 1."""
    x, w = np.polynomial.legendre.leggauss(n)
    # ascending angle order
    return np.arccos(x)[::-1].copy(), (w / 2.0)[::-1].copy()


# --------------------------------------------------------------------------
# groups and the sphere
# --------------------------------------------------------------------------

class Space:
    """Common interface of the groups and of S^2."""

    name: str
    is_group = True
    is_discrete = False

    def elements(self, params) -> list:
        raise NotImplementedError

    def params(self, elements: Sequence) -> np.ndarray:
        raise NotImplementedError

    def exact_for(self, rule: QuadratureRule, band: int) -> bool:
        return band <= rule.band_limit

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.__dict__.items()))))

    def __repr__(self):
        extra = ", ".join(f"{k}={v}" for k, v in self.__dict__.items())
        return f"{type(self).__name__}({extra})"


class CyclicGroup(Space):
    name = "cyclic"
    is_discrete = True

    def __init__(self, N: int):
        if int(N) < 1:
            raise ValueError(f"cyclic group order must be >= 1, got {N}")
        self.N = int(N)

    def identity(self) -> Cyclic:
        return Cyclic(0, self.N)

    def owns(self, g) -> bool:
        return isinstance(g, Cyclic) and g.N == self.N

    def elements(self, params) -> list:
        return [Cyclic(int(k), self.N) for k in np.asarray(params).ravel()]

    def params(self, elements) -> np.ndarray:
        return np.array([g.index for g in elements], dtype=np.int64)

    def random(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.integers(0, self.N, size=size)

    def mul_params(self, g, h):
        return np.mod(np.asarray(g) + np.asarray(h), self.N)

    def inv_params(self, g):
        return np.mod(-np.asarray(g), self.N)

    def distance_params(self, g, h):
        k = np.mod(np.asarray(h) - np.asarray(g), self.N)
        return TWO_PI * np.minimum(k, self.N - k) / self.N

    def quadrature(self, band_limit: int) -> QuadratureRule:
        _check_band(band_limit)
        params = np.arange(self.N, dtype=np.int64)
        return QuadratureRule(self, params, np.full(self.N, 1.0 / self.N), band_limit, "group")

    def exact_for(self, rule, band):
        # counting measure on all N points is exact for every function
        return True


class CircleGroup(Space):
    name = "circle"

    def identity(self) -> Circle:
        return Circle(0.0)

    def owns(self, g) -> bool:
        return isinstance(g, Circle)

    def elements(self, params) -> list:
        return [Circle(float(t)) for t in np.asarray(params).ravel()]

    def params(self, elements) -> np.ndarray:
        return np.array([g.theta for g in elements], dtype=float)

    def random(self, rng, size):
        return rng.uniform(0.0, TWO_PI, size=size)

    def mul_params(self, g, h):
        return _wrap(np.asarray(g, float) + np.asarray(h, float))

    def inv_params(self, g):
        return _wrap(-np.asarray(g, float))

    def distance_params(self, g, h):
        d = np.mod(np.asarray(h, float) - np.asarray(g, float), TWO_PI)
        return np.minimum(d, TWO_PI - d)

    def quadrature(self, band_limit: int) -> QuadratureRule:
        _check_band(band_limit)
        n = 2 * band_limit + 1
        return QuadratureRule(self, TWO_PI * np.arange(n) / n, np.full(n, 1.0 / n), band_limit, "group")


class RotationGroup(Space):
    name = "so3"

    def identity(self) -> Rotation:
        return Rotation(0.0, 0.0, 0.0)

    def owns(self, g) -> bool:
        return isinstance(g, Rotation)

    def elements(self, params) -> list:
        return [Rotation(*row) for row in np.asarray(params, float).reshape(-1, 3)]

    def params(self, elements) -> np.ndarray:
        return np.array([[g.alpha, g.beta, g.gamma] for g in elements], dtype=float).reshape(-1, 3)

    def random(self, rng, size):
        a = rng.uniform(0.0, TWO_PI, size)
        b = np.arccos(rng.uniform(-1.0, 1.0, size))
        c = rng.uniform(0.0, TWO_PI, size)
        return np.stack([a, b, c], axis=-1)

    @staticmethod
    def matrices(params) -> np.ndarray:
        p = np.asarray(params, float)
        return euler_to_matrix(p[..., 0], p[..., 1], p[..., 2])

    def mul_params(self, g, h):
        return matrix_to_euler(self.matrices(g) @ self.matrices(h))

    def inv_params(self, g):
        return matrix_to_euler(np.swapaxes(self.matrices(g), -1, -2))

    def distance_params(self, g, h):
        Rg, Rh = self.matrices(g), self.matrices(h)
        return rotation_angle(np.swapaxes(Rg, -1, -2) @ Rh)

    def quadrature(self, band_limit: int) -> QuadratureRule:
        _check_band(band_limit)
        n = 2 * band_limit + 1
        angles = TWO_PI * np.arange(n) / n
        beta, wb = _gauss_legendre_cos(band_limit + 1)
        A, Bt, C = np.meshgrid(angles, beta, angles, indexing="ij")
        W = np.broadcast_to(wb[None, :, None], A.shape) / (n * n)
        params = np.stack([A.ravel(), Bt.ravel(), C.ravel()], axis=-1)
        w = W.ravel().copy()
        return QuadratureRule(self, params, w / w.sum(), band_limit, "group")


class Sphere(Space):
    """S^2 as the SO(3)-homogeneous space SO(3)/SO(2)."""

    name = "sphere"
    is_group = False

    def owns(self, x) -> bool:
        return isinstance(x, SpherePoint)

    def elements(self, params) -> list:
        return [SpherePoint(*row) for row in np.asarray(params, float).reshape(-1, 2)]

    def params(self, points) -> np.ndarray:
        return np.array([[x.theta, x.phi] for x in points], dtype=float).reshape(-1, 2)

    def random(self, rng, size):
        t = np.arccos(rng.uniform(-1.0, 1.0, size))
        p = rng.uniform(0.0, TWO_PI, size)
        return np.stack([t, p], axis=-1)

    @staticmethod
    def vectors(params) -> np.ndarray:
        p = np.asarray(params, float)
        return _angles_to_vector(p[..., 0], p[..., 1])

    @staticmethod
    def from_vectors(v) -> np.ndarray:
        t, p = _vector_to_angles(v)
        return np.stack([t, p], axis=-1)

    def distance_params(self, x, y):
        """Great-circle distance."""
        u, v = self.vectors(x), self.vectors(y)
        cross = np.linalg.norm(np.cross(u, v), axis=-1)
        return np.arctan2(cross, np.sum(u * v, axis=-1))

    def act_params(self, g, x):
        """``g . x`` for Euler parameters ``g`` and sphere parameters ``x``."""
        R = RotationGroup.matrices(g)
        v = self.vectors(x)
        return self.from_vectors(np.einsum("...ij,...j->...i", R, v))

    def quadrature(self, band_limit: int) -> QuadratureRule:
        if band_limit < 0:
            raise ValueError(f"band limit must be >= 0, got {band_limit}")
        n = 2 * band_limit + 1
        theta, wt = _gauss_legendre_cos(band_limit + 1)
        T, P = np.meshgrid(theta, TWO_PI * np.arange(n) / n, indexing="ij")
        w = np.broadcast_to(wt[:, None], T.shape).ravel() / n
        params = np.stack([T.ravel(), P.ravel()], axis=-1)
        return QuadratureRule(self, params, w / w.sum(), band_limit, "sphere")


def _check_band(band_limit: int) -> None:
    if band_limit < 1:
        raise ValueError(f"band limit must be >= 1, got {band_limit}")


def space_of(x) -> Space:
    """The group or space an element belongs to."""
    if isinstance(x, SpherePoint):
        return Sphere()
    if isinstance(x, (Cyclic, Circle, Rotation)):
        return x.group
    raise TypeError(f"not a group element or sphere point: {x!r}")


def make_space(name: str, N: int | None = None) -> Space:
    """Build a group or space from its short name."""
    if name == "cyclic":
        if N is None:
            raise ValueError("cyclic group needs an order N")
        return CyclicGroup(N)
    if name == "circle":
        return CircleGroup()
    if name == "so3":
        return RotationGroup()
    if name == "sphere":
        return Sphere()
    raise ValueError(f"unknown group or space {name!r}")


# --------------------------------------------------------------------------
# element-level operations
# --------------------------------------------------------------------------

def _same_group(g, h) -> Space:
    G = space_of(g)
    if not G.is_group or space_of(h) != G:
        raise DomainMismatchError(f"cannot combine {g!r} and {h!r}")
    return G


def mul(g: GroupElement, h: GroupElement) -> GroupElement:
    """Group product ``g h``."""
    G = _same_group(g, h)
    if isinstance(g, Rotation):
        return Rotation.from_matrix(g.matrix() @ h.matrix())
    p = G.mul_params(G.params([g]), G.params([h]))
    return G.elements(p)[0]


def inv(g: GroupElement) -> GroupElement:
    """Group inverse."""
    if isinstance(g, Rotation):
        return Rotation(math.pi - g.gamma, g.beta, math.pi - g.alpha)
    G = space_of(g)
    return G.elements(G.inv_params(G.params([g])))[0]


def identity(group: Space) -> GroupElement:
    return group.identity()


def metric(g, h) -> float:
    """Bi-invariant distance: arc length on Z_N and U(1), rotation angle of ``g^-1 h`` on SO(3).

    Also accepts two sphere points (great-circle distance).
    """
    if isinstance(g, SpherePoint) and isinstance(h, SpherePoint):
        S = Sphere()
        return float(S.distance_params(S.params([g]), S.params([h]))[0])
    G = _same_group(g, h)
    return float(G.distance_params(G.params([g]), G.params([h]))[0])


def equal(g, h, tol: float = EQUALITY_TOL) -> bool:
    """Equality up to ``tol`` in the metric."""
    return metric(g, h) <= tol


def act(g: Rotation, x: SpherePoint) -> SpherePoint:
    """Left action of a rotation on a sphere point."""
    if not isinstance(g, Rotation) or not isinstance(x, SpherePoint):
        raise DomainMismatchError("act needs a Rotation and a SpherePoint")
    return SpherePoint.from_vector(g.matrix() @ x.vector())


def carrier(x: SpherePoint) -> Rotation:
    """A rotation taking the north pole to ``x`` (demonstrates transitivity)."""
    return Rotation(x.phi, x.theta, 0.0)


def haar_quadrature(group: Space, band_limit: int) -> QuadratureRule:
    """Normalised Haar quadrature, exact for products of coefficients up to ``band_limit``."""
    if not group.is_group:
        raise DomainMismatchError("haar_quadrature needs a group; use sphere_quadrature")
    return group.quadrature(band_limit)


def sphere_quadrature(band_limit: int) -> QuadratureRule:
    """Normalised (unit-mass) quadrature on S^2, exact for ``Y_lm conj(Y_l'm')`` with l, l' <= band."""
    return Sphere().quadrature(band_limit)
