"""Hyperbolic geometry inside the quadratic space (R^{n+1}, f).

Two scalar regimes, matching how the objects are used:

* exact: vectors/matrices with QuadFieldElement entries, for everything
  that is k-rational (reflections, orthogonality of k-hyperplanes,
  isometry verification).  These computations never round.
* floating: numpy binary64 with tolerance EPS = 1e-9 for the metric side
  (distances, bisectors, ball-model output, nesting of halfspaces).

A point of H^n satisfies f(x) = -1 on the upper sheet; a space-like
vector satisfies f(v) > 0 and cuts out the hyperplane H_v = v-perp.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .numfield import Embedding, QuadFieldElement
from .qforms import DiagonalForm

EPS = 1e-9


# -- scalars and dispatch ------------------------------------------------------


def _is_exact_vector(v) -> bool:
    return (
        isinstance(v, (tuple, list))
        and len(v) > 0
        and isinstance(v[0], QuadFieldElement)
    )


def float_coefficients(form: DiagonalForm) -> np.ndarray:
    return np.array([c.embed(Embedding.IDENTITY) for c in form.coefficients])


def form_matrix(form: DiagonalForm) -> np.ndarray:
    return np.diag(float_coefficients(form))


def as_float_vector(form: DiagonalForm, v) -> np.ndarray:
    if _is_exact_vector(v):
        return np.array([x.embed(Embedding.IDENTITY) for x in v])
    return np.asarray(v, dtype=float)


def bilinear(form: DiagonalForm, u, w):
    """b_f(u, w) = sum_i c_i u_i w_i; exact when both vectors are exact."""
    if _is_exact_vector(u) and _is_exact_vector(w):
        if len(u) != form.dimension or len(w) != form.dimension:
            raise ValueError("vector dimension does not match form")
        acc = QuadFieldElement.zero(form.field)
        for c, x, y in zip(form.coefficients, u, w):
            acc = acc + c * x * y
        return acc
    uf = as_float_vector(form, u)
    wf = as_float_vector(form, w)
    if uf.shape[-1] != form.dimension or wf.shape[-1] != form.dimension:
        raise ValueError("vector dimension does not match form")
    return float(np.dot(uf * float_coefficients(form), wf))


def quadratic(form: DiagonalForm, v):
    return bilinear(form, v, v)


# -- exact matrices ------------------------------------------------------------


def exact_identity(form: DiagonalForm) -> list[list[QuadFieldElement]]:
    n = form.dimension
    zero = QuadFieldElement.zero(form.field)
    one = QuadFieldElement.one(form.field)
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def exact_mat_mul(a, b):
    n = len(a)
    zero = a[0][0] - a[0][0]
    out = [[zero for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for k in range(n):
            aik = a[i][k]
            if not aik:
                continue
            for j in range(n):
                out[i][j] = out[i][j] + aik * b[k][j]
    return out


def exact_mat_vec(a, v):
    n = len(a)
    zero = v[0] - v[0]
    return tuple(
        sum((a[i][j] * v[j] for j in range(n)), zero) for i in range(n)
    )


def reflection(form: DiagonalForm, v):
    """Matrix of r_v(w) = w - 2 b(w,v)/f(v) * v; exact for exact v.

    Requires f(v) > 0 at the identity embedding (space-like mirror).
    """
    if _is_exact_vector(v):
        fv = quadratic(form, v)
        if fv.sign_at(Embedding.IDENTITY) <= 0:
            raise ValueError("reflection mirror must be space-like")
        n = form.dimension
        mat = exact_identity(form)
        two = QuadFieldElement.rational(2, form.field)
        for i in range(n):
            for j in range(n):
                mat[i][j] = mat[i][j] - two * v[i] * form.coefficients[j] * v[j] / fv
        return mat
    vf = as_float_vector(form, v)
    fv = float(np.dot(vf * float_coefficients(form), vf))
    if fv <= 0:
        raise ValueError("reflection mirror must be space-like")
    n = form.dimension
    return np.eye(n) - 2.0 * np.outer(vf, vf * float_coefficients(form)) / fv


def is_isometry(form: DiagonalForm, mat, tol: float = EPS) -> bool:
    """Check A^t F A = F; exact equality for exact matrices, sup-norm <= tol otherwise."""
    if isinstance(mat, (list, tuple)) and _is_exact_vector(mat[0]):
        n = form.dimension
        for i in range(n):
            for j in range(n):
                acc = QuadFieldElement.zero(form.field)
                for k in range(n):
                    acc = acc + mat[k][i] * form.coefficients[k] * mat[k][j]
                expected = (
                    form.coefficients[i]
                    if i == j
                    else QuadFieldElement.zero(form.field)
                )
                if acc != expected:
                    return False
        return True
    a = np.asarray(mat, dtype=float)
    f = form_matrix(form)
    scale = max(1.0, float(np.max(np.abs(a))) ** 2)
    return bool(np.max(np.abs(a.T @ f @ a - f)) <= tol * scale)


def exact_matrix_to_float(mat) -> np.ndarray:
    return np.array([[x.embed(Embedding.IDENTITY) for x in row] for row in mat])


def isometry_inverse(form: DiagonalForm, mat: np.ndarray) -> np.ndarray:
    """Inverse of A in O(f): F^{-1} A^t F (numerically cleaner than a solve)."""
    c = float_coefficients(form)
    return (mat.T * c[None, :]) / c[:, None]


def translation_length(mat: np.ndarray) -> float:
    """Translation length of a loxodromic element: log of the spectral radius."""
    eigs = np.linalg.eigvals(mat)
    return float(max(0.0, math.log(float(np.max(np.abs(eigs))))))


# -- the J_n chart and sheet bookkeeping ---------------------------------------


def jn_chart(form: DiagonalForm) -> tuple[np.ndarray, np.ndarray]:
    """Matrices (T, T^-1) with b_f(x, y) = b_J(Tx, Ty), J = diag(-1, 1, ..., 1).

    The unique identity-negative coefficient is routed to slot 0.
    """
    c = float_coefficients(form)
    neg = np.where(c < 0)[0]
    if len(neg) != 1:
        raise ValueError("form must have hyperbolic signature (n, 1)")
    order = [int(neg[0])] + [i for i in range(len(c)) if i != neg[0]]
    t = np.zeros((len(c), len(c)))
    for slot, src in enumerate(order):
        t[slot, src] = math.sqrt(abs(c[src]))
    tinv = np.zeros_like(t)
    for slot, src in enumerate(order):
        tinv[src, slot] = 1.0 / math.sqrt(abs(c[src]))
    return t, tinv


def time_coordinate(form: DiagonalForm, x) -> float:
    """The J-chart 0-th coordinate; positive on the upper sheet."""
    c = float_coefficients(form)
    neg = int(np.where(c < 0)[0][0])
    xf = as_float_vector(form, x)
    return float(xf[neg] * math.sqrt(-c[neg]))


def _quad_scale(form: DiagonalForm, xf: np.ndarray) -> float:
    """Magnitude of the quadratic evaluation, for relative tolerances.

    Far sheet points have coordinates ~cosh(d), so f(x) = -1 is computed
    with absolute cancellation error ~ eps * cosh(d)^2; membership tests
    must scale their tolerance accordingly.
    """
    c = np.abs(float_coefficients(form))
    return max(1.0, float(np.dot(c * xf, xf)))


def is_point(form: DiagonalForm, x, tol: float = EPS) -> bool:
    xf = as_float_vector(form, x)
    scale = _quad_scale(form, xf)
    return (
        abs(quadratic(form, xf) + 1.0) <= tol * scale
        and time_coordinate(form, xf) > 0
    )


def normalize_point(form: DiagonalForm, x) -> np.ndarray:
    """Scale a time-like upper vector onto the sheet f = -1.

    Vectors already on the sheet up to relative roundoff are returned
    unchanged: rescaling a far point by its noisy quadratic value would
    amplify the cancellation error.
    """
    xf = as_float_vector(form, x)
    q = quadratic(form, xf)
    scale = _quad_scale(form, xf)
    if abs(q + 1.0) <= 1e-7 * scale:
        if time_coordinate(form, xf) <= 0:
            raise ValueError("vector lies on the lower sheet")
        return xf
    if q >= -EPS * scale:
        raise ValueError("vector is not time-like")
    xf = xf / math.sqrt(-q)
    if time_coordinate(form, xf) <= 0:
        raise ValueError("vector lies on the lower sheet")
    return xf


def basepoint(form: DiagonalForm) -> np.ndarray:
    """The sheet point mapping to (1, 0, ..., 0) in the J chart."""
    _, tinv = jn_chart(form)
    e0 = np.zeros(form.dimension)
    e0[0] = 1.0
    return tinv @ e0


def distance(form: DiagonalForm, x, y) -> float:
    """Hyperbolic distance via cosh d = -b_f(x, y) for sheet points."""
    xf = as_float_vector(form, x)
    yf = as_float_vector(form, y)
    for p in (xf, yf):
        if not is_point(form, p, tol=1e-7):
            raise ValueError("distance requires points on the upper sheet")
    return math.acosh(max(1.0, -bilinear(form, xf, yf)))


# -- hyperplanes and halfspaces -------------------------------------------------


class Hyperplane:
    """H_v = v-perp intersected with the sheet, for a space-like normal v.

    Floating normals are canonicalized to f(v) = 1 with the first
    coordinate of absolute value > EPS made positive, so structurally
    equal hyperplanes compare equal under `same_as`.  The exact normal is
    kept alongside when the input was exact.
    """

    __slots__ = ("form", "normal", "exact_normal")

    def __init__(self, form: DiagonalForm, normal, exact_normal=None):
        if _is_exact_vector(normal) and exact_normal is None:
            exact_normal = tuple(normal)
        vf = as_float_vector(form, normal)
        q = float(np.dot(vf * float_coefficients(form), vf))
        if q <= EPS:
            raise ValueError("hyperplane normal must be space-like")
        vf = vf / math.sqrt(q)
        lead = next(i for i, x in enumerate(vf) if abs(x) > EPS)
        if vf[lead] < 0:
            vf = -vf
            if exact_normal is not None:
                exact_normal = tuple(-x for x in exact_normal)
        if exact_normal is not None:
            lead_sign = exact_normal[lead].sign_at(Embedding.IDENTITY)
            if lead_sign < 0:
                exact_normal = tuple(-x for x in exact_normal)
        self.form = form
        self.normal = vf
        self.exact_normal = exact_normal

    def same_as(self, other: "Hyperplane", tol: float = 1e-7) -> bool:
        return bool(np.allclose(self.normal, other.normal, atol=tol))

    def contains_point(self, x, tol: float = EPS) -> bool:
        return abs(bilinear(self.form, x, self.normal)) <= tol

    def apply(self, mat: np.ndarray) -> "Hyperplane":
        return Hyperplane(self.form, mat @ self.normal)

    def __repr__(self):
        return f"Hyperplane({np.array2string(self.normal, precision=6)})"


@dataclass(frozen=True)
class HalfSpace:
    """One side of a hyperplane: {x : side * b_f(x, normal) >= 0}."""

    hyperplane: Hyperplane
    side: int

    def __post_init__(self):
        if self.side not in (-1, 1):
            raise ValueError("side must be +1 or -1")

    @classmethod
    def containing(cls, hyperplane: Hyperplane, x) -> "HalfSpace":
        value = bilinear(hyperplane.form, x, hyperplane.normal)
        if abs(value) <= EPS:
            raise ValueError("point lies on the boundary hyperplane")
        return cls(hyperplane, 1 if value > 0 else -1)

    def margin(self, x) -> float:
        """Signed membership margin; >= 0 inside."""
        return self.side * bilinear(self.hyperplane.form, x, self.hyperplane.normal)

    def contains(self, x, tol: float = EPS) -> bool:
        return self.margin(x) >= -tol

    def inward_normal(self) -> np.ndarray:
        return self.side * self.hyperplane.normal


def bisector(form: DiagonalForm, x, y) -> Hyperplane:
    """Hyperplane of points equidistant from sheet points x and y (normal x - y)."""
    xf = as_float_vector(form, x)
    yf = as_float_vector(form, y)
    if np.allclose(xf, yf, atol=EPS):
        raise ValueError("bisector requires two distinct points")
    for p in (xf, yf):
        if not is_point(form, p, tol=1e-7):
            raise ValueError("bisector requires points on the upper sheet")
    return Hyperplane(form, xf - yf)


def are_orthogonal(form: DiagonalForm, h1: Hyperplane, h2: Hyperplane) -> bool:
    """True iff b_f(u, v) = 0 and the hyperplanes meet in H^n.

    The span form Gram([u,v]) must be positive definite for the
    hyperplanes to intersect; with b = 0 that reduces to both normals
    being space-like, which they are by construction.
    """
    if h1.exact_normal is not None and h2.exact_normal is not None:
        b = bilinear(form, h1.exact_normal, h2.exact_normal)
        if b:
            return False
        fu = quadratic(form, h1.exact_normal)
        fv = quadratic(form, h2.exact_normal)
        return (fu * fv).sign_at(Embedding.IDENTITY) > 0
    b = bilinear(form, h1.normal, h2.normal)
    if abs(b) > EPS:
        return False
    det = 1.0 - b * b  # normals are scaled to f = 1
    return det > EPS


def hyperplane_distance(form: DiagonalForm, h1: Hyperplane, h2: Hyperplane) -> float:
    """Distance between two hyperplanes: arccosh |b| when ultraparallel, else 0."""
    b = abs(bilinear(form, h1.normal, h2.normal))
    if b <= 1.0:
        return 0.0
    return math.acosh(b)


# -- ball model ------------------------------------------------------------------


def ball_coordinates(form: DiagonalForm, x) -> np.ndarray:
    """Conformal ball-model coordinates of a sheet point or light-cone vector.

    Sheet points land strictly inside the unit ball, light-cone rays on
    the unit sphere.  Space-like or lower-sheet input is rejected.
    """
    t, _ = jn_chart(form)
    y = t @ as_float_vector(form, x)
    q = -y[0] * y[0] + float(np.dot(y[1:], y[1:]))
    scale = float(np.dot(y, y))
    if scale <= EPS * EPS:
        raise ValueError("cannot project the zero vector")
    if q > EPS * max(1.0, scale):
        raise ValueError("space-like vectors have no ball image")
    if y[0] <= 0:
        raise ValueError("vector lies on the lower sheet")
    if abs(q) <= EPS * max(1.0, scale):
        return y[1:] / y[0]
    y = y / math.sqrt(-q)
    return y[1:] / (1.0 + y[0])


@dataclass(frozen=True)
class BoundarySphere:
    """The sphere at infinity of a hyperplane, drawn in the ball model.

    For a normal with nonzero time component this is the Euclidean sphere
    (orthogonal to the unit sphere) meeting it in the hyperplane's ideal
    boundary; a normal with zero time component gives a plane through the
    ball's center, reported with radius = inf.
    """

    center: np.ndarray
    radius: float

    @property
    def is_plane(self) -> bool:
        return math.isinf(self.radius)


def boundary_sphere(form: DiagonalForm, h: Hyperplane) -> BoundarySphere:
    t, _ = jn_chart(form)
    v = t @ h.normal
    v = v / math.sqrt(abs(-v[0] * v[0] + float(np.dot(v[1:], v[1:]))))
    if abs(v[0]) <= EPS:
        unit = v[1:] / np.linalg.norm(v[1:])
        return BoundarySphere(unit, math.inf)
    return BoundarySphere(v[1:] / v[0], 1.0 / abs(v[0]))


# -- isometries ------------------------------------------------------------------


def translation_along(form: DiagonalForm, point, tangent, length: float) -> np.ndarray:
    """Hyperbolic translation with the given axis and translation length.

    The axis passes through `point` with direction `tangent` (projected
    into the tangent space and normalized); positive length translates in
    the tangent direction.
    """
    if length <= 0:
        raise ValueError("translation length must be positive")
    p = normalize_point(form, point)
    u = as_float_vector(form, tangent)
    u = u + bilinear(form, u, p) * p  # project onto tangent space (f(p) = -1)
    q = quadratic(form, u)
    if q <= EPS:
        raise ValueError("tangent vector is degenerate")
    u = u / math.sqrt(q)
    c = float_coefficients(form)
    fp = p * c
    fu = u * c
    ch, sh = math.cosh(length), math.sinh(length)
    n = form.dimension
    return (
        np.eye(n)
        + (ch - 1.0) * (np.outer(u, fu) - np.outer(p, fp))
        + sh * (np.outer(p, fu) - np.outer(u, fp))
    )


def rotation_in_plane(form: DiagonalForm, i: int, j: int, angle: float) -> np.ndarray:
    """Rotation by `angle` in the (i, j) coordinate plane (both space-like, equal weight)."""
    c = float_coefficients(form)
    if c[i] <= 0 or c[j] <= 0 or abs(c[i] - c[j]) > EPS:
        raise ValueError("rotation plane must have two equal positive coefficients")
    n = form.dimension
    mat = np.eye(n)
    mat[i, i] = math.cos(angle)
    mat[j, j] = math.cos(angle)
    mat[i, j] = -math.sin(angle)
    mat[j, i] = math.sin(angle)
    return mat


# -- nesting ---------------------------------------------------------------------


class NestingVerdict(enum.Enum):
    NESTED = "nested"
    CROSSING = "crossing"
    DISJOINT_NOT_NESTED = "disjoint-not-nested"
    EQUAL = "equal"


def are_nested(
    form: DiagonalForm, hs1: HalfSpace, hs2: HalfSpace, x, tol: float = EPS
) -> NestingVerdict:
    """Classify two halfspaces that both contain the basepoint x.

    With both normals scaled to f = 1 and oriented toward x, the product
    s = b_f(u, u') decides everything: |s| < 1 means the boundary
    hyperplanes cross, s >= 1 means one halfspace contains the other
    (nested), s <= -1 means disjoint boundaries facing away from each
    other.  Tangency at infinity (|s| = 1) is classified with its closure.
    """
    xf = as_float_vector(form, x)
    if hs1.margin(xf) <= tol or hs2.margin(xf) <= tol:
        raise ValueError("basepoint must be interior to both halfspaces")
    if hs1.hyperplane.same_as(hs2.hyperplane):
        return NestingVerdict.EQUAL
    u1 = hs1.inward_normal()
    u2 = hs2.inward_normal()
    s = bilinear(form, u1, u2)
    if abs(s) < 1.0 - tol:
        return NestingVerdict.CROSSING
    if s > 0:
        return NestingVerdict.NESTED
    return NestingVerdict.DISJOINT_NOT_NESTED
