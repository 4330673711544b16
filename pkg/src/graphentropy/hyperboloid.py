"""Hyperbolic plane primitives in the hyperboloid model, plus H^2 x R products.

Points are numpy vectors x = (x0, x1, x2) on the sheet <x,x> = -1, x0 > 0,
where <a,b> = -a0*b0 + a1*b1 + a2*b2 is the Minkowski form.  Geodesic lines
are stored by their unit spacelike polar vector p (<p,p> = +1); the line is
{x : <x,p> = 0} and the positive side is {x : <x,p> > 0}.

All operations are pure functions of their arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MINK = np.diag([-1.0, 1.0, 1.0])

POINT_TOL = 1e-9


def mdot(a, b):
    """Minkowski inner product; broadcasts over leading axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    return -a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def normalize_point(x):
    """Rescale x onto the sheet <x,x> = -1, x0 > 0."""
    x = np.asarray(x, dtype=float)
    nrm = np.sqrt(-mdot(x, x))
    y = x / nrm[..., None] if x.ndim > 1 else x / nrm
    return np.where(y[..., 0:1] < 0, -y, y) if x.ndim > 1 else (-y if y[0] < 0 else y)


def normalize_spacelike(v):
    v = np.asarray(v, dtype=float)
    return v / np.sqrt(mdot(v, v))


def assert_point(x, tol=POINT_TOL):
    x = np.asarray(x, dtype=float)
    if abs(mdot(x, x) + 1.0) > tol or x[0] <= 0:
        raise ValueError("not a hyperboloid point: %r" % (x,))
    return x


def from_half_plane(z):
    """Map a point of the upper half-plane (complex or (x, y)) to the hyperboloid."""
    if isinstance(z, complex):
        x, y = z.real, z.imag
    else:
        x, y = z
    if y <= 0:
        raise ValueError("upper half-plane requires y > 0")
    s = x * x + y * y
    return np.array([(s + 1.0) / (2.0 * y), (s - 1.0) / (2.0 * y), x / y])


def _acosh_clamped(c):
    """arccosh with the argument clamped to [1, inf) against round-off."""
    return np.arccosh(np.maximum(np.asarray(c, dtype=float), 1.0))


def dist_h2(p, q):
    """Distance in H^2: arccosh(-<p,q>), clamped to 0 near coincident points."""
    c = -mdot(p, q)
    return np.where(c < 1.0 + 1e-12, 0.0, _acosh_clamped(c))


@dataclass(frozen=True)
class HLine:
    """Geodesic line by its unit spacelike polar vector.

    The sign of p is an orientation: the positive side is {x : <x,p> > 0}
    and the tangent convention below turns the line by the frame rule
    det[x, tangent, p] = +1.
    """

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        # the unit-norm check is a cancellation of terms ~|p|^2, so the
        # achievable accuracy for far lines is only relative to that scale
        scale = max(1.0, float(np.max(np.abs(p))) ** 2)
        if abs(mdot(p, p) - 1.0) > POINT_TOL * scale:
            raise ValueError("polar vector is not Minkowski-unit spacelike")
        object.__setattr__(self, "p", p)

    def side(self, x):
        return mdot(x, self.p)

    def contains(self, x, tol=POINT_TOL):
        return abs(self.side(x)) < tol

    def reversed(self):
        return HLine(-self.p)


def mink_cross(a, b):
    """Vector Minkowski-orthogonal to both a and b: J (a x b)."""
    return MINK @ np.cross(a, b)


def tangent_at(line: HLine, x):
    """Unit tangent of the oriented line at a point x on it."""
    return normalize_spacelike(mink_cross(line.p, x))


def foot_and_dist(o, line: HLine):
    """Foot of the perpendicular from o onto the line, and the distance.

    sinh(d) = |<o,p>|; the foot is the Minkowski projection of o onto the
    polar hyperplane, renormalized.
    """
    s = mdot(o, line.p)
    foot = (o - s * line.p) / np.sqrt(1.0 + s * s)
    return foot, float(np.arcsinh(abs(s)))

def dist_to_line(o, line: HLine):
    return float(np.arcsinh(abs(mdot(o, line.p))))


def erect_perpendicular(line: HLine, foot, l, side=1):
    """Point at distance l from the line, on the requested side, over the foot."""
    if l < 0:
        raise ValueError("perpendicular length must be >= 0")
    if side not in (-1, 1):
        raise ValueError("side must be +1 or -1")
    return np.cosh(l) * np.asarray(foot, dtype=float) + side * np.sinh(l) * line.p


def point_at_arclength(line: HLine, origin, s):
    """Unit-speed point on the line at signed arc-length s from origin."""
    t = tangent_at(line, origin)
    return np.cosh(s) * np.asarray(origin, dtype=float) + np.sinh(s) * t


def arc_coordinate(line: HLine, origin, x):
    """Signed arc-length of a point x on the line, measured from origin."""
    return float(np.arcsinh(mdot(x, tangent_at(line, origin))))


def visual_angle(d):
    """Full angle under which a geodesic at distance d is seen: 4*arctan(e^-d)."""
    return 4.0 * np.arctan(np.exp(-np.asarray(d, dtype=float)))


def right_hypotenuse(a, b):
    """Hypotenuse of a right hyperbolic triangle with legs a, b."""
    return _acosh_clamped(np.cosh(a) * np.cosh(b))


@dataclass(frozen=True)
class PrismPoint:
    """Point of the product H^2 x R."""

    base: np.ndarray
    height: float


def prism_dist(P: PrismPoint, Q: PrismPoint):
    d = dist_h2(P.base, Q.base)
    return float(np.sqrt(d * d + (P.height - Q.height) ** 2))


def delta_correction(l, d, alpha):
    """Gain of the product-metric shortcut over the in-plane right triangle.

    Compares the H^2 hypotenuse over legs (l, d) with the H^2 x R distance to
    the point reached by sliding d along a wall line tilted by alpha.
    Clamped at 0 from below; zero exactly when l = 0 or d = 0.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0) or np.any(alpha > np.pi / 2 + 1e-15):
        raise ValueError("wall angle must lie in (0, pi/2]")
    planar = right_hypotenuse(l, d)
    horiz = right_hypotenuse(l, np.asarray(d) * np.cos(alpha))
    tilted = np.sqrt(horiz * horiz + (np.asarray(d) * np.sin(alpha)) ** 2)
    return np.maximum(planar - tilted, 0.0)


def intersect_lines(l1: HLine, l2: HLine):
    """Intersection point of two crossing lines, or None if they are disjoint."""
    v = mink_cross(l1.p, l2.p)
    q = mdot(v, v)
    if q >= 0:
        return None
    v = v / np.sqrt(-q)
    return v if v[0] > 0 else -v


def common_perpendicular(l1: HLine, l2: HLine):
    """Common perpendicular line of two disjoint geodesics."""
    v = mink_cross(l1.p, l2.p)
    q = mdot(v, v)
    if q <= 0:
        raise ValueError("lines intersect; no common perpendicular")
    return HLine(v / np.sqrt(q))


def line_pair_distance(l1: HLine, l2: HLine):
    """Distance between two disjoint lines (0 if they meet)."""
    c = abs(mdot(l1.p, l2.p))
    return float(_acosh_clamped(c)) if c > 1.0 else 0.0


def ideal_endpoints(line: HLine, origin):
    """The two null directions spanning the line, ordered against/along tangent."""
    t = tangent_at(line, origin)
    o = np.asarray(origin, dtype=float)
    return o - t, o + t


def direction_angle(q, frame_t, frame_p, n):
    """Angle at q of the ideal point n, in the orthonormal frame (frame_t, frame_p)."""
    v = n + mdot(n, q) * q
    return float(np.arctan2(mdot(v, frame_p), mdot(v, frame_t)))


_RENORM_PERIOD = 16


@dataclass
class HIsometry:
    """Isometry of H^2 as a matrix preserving the Minkowski form.

    Drift control: the matrix is re-orthonormalized against the form after
    every 16 compositions.
    """

    m: np.ndarray
    orientation_preserving: bool = True
    _age: int = field(default=0, repr=False, compare=False)

    @staticmethod
    def identity():
        return HIsometry(np.eye(3))

    @staticmethod
    def translation_along(line: HLine, length, origin=None):
        """Hyperbolic translation by `length` along the oriented line."""
        if origin is None:
            origin = _some_point_on(line)
        t = tangent_at(line, origin)
        basis = np.stack([origin, t, line.p], axis=1)
        block = np.array(
            [
                [np.cosh(length), np.sinh(length), 0.0],
                [np.sinh(length), np.cosh(length), 0.0],
                [0.0, 0.0, 1.0],
            ]
        )
        inv = MINK @ basis.T @ MINK
        return HIsometry(basis @ block @ inv)

    def __matmul__(self, other: "HIsometry") -> "HIsometry":
        out = HIsometry(
            self.m @ other.m,
            self.orientation_preserving == other.orientation_preserving,
            _age=max(self._age, other._age) + 1,
        )
        if out._age >= _RENORM_PERIOD:
            out.renormalize()
        return out

    def inverse(self):
        return HIsometry(MINK @ self.m.T @ MINK, self.orientation_preserving)

    def apply(self, x):
        return np.asarray(x, dtype=float) @ self.m.T

    def apply_line(self, line: HLine):
        return HLine(self.m @ line.p)

    def form_defect(self):
        """Deviation from m^T J m = J, relative to the matrix scale.

        Entries of deep-word isometries grow like e^(displacement); an
        absolute defect bound is meaningless at that scale, so the defect is
        normalized by max(1, |m|_max^2).
        """
        raw = float(np.max(np.abs(self.m.T @ MINK @ self.m - MINK)))
        return raw / max(1.0, float(np.max(np.abs(self.m))) ** 2)

    def renormalize(self):
        """Minkowski Gram-Schmidt on the columns (timelike first).

        Skipped for large-scale matrices: their raw Gram products cancel
        catastrophically, while their relative form defect already sits at
        machine precision without correction.
        """
        self._age = 0
        if float(np.max(np.abs(self.m))) > 1e4:
            return
        c0, c1, c2 = self.m[:, 0], self.m[:, 1], self.m[:, 2]
        c0 = c0 / np.sqrt(-mdot(c0, c0))
        c1 = c1 + mdot(c1, c0) * c0
        c1 = c1 / np.sqrt(mdot(c1, c1))
        c2 = c2 + mdot(c2, c0) * c0 - mdot(c2, c1) * c1
        c2 = c2 / np.sqrt(mdot(c2, c2))
        self.m = np.stack([c0, c1, c2], axis=1)
        self._age = 0

    def translation_length(self):
        """Translation length of a hyperbolic isometry (0 for elliptic/parabolic)."""
        c = (np.trace(self.m) - 1.0) / 2.0
        return float(np.arccosh(c)) if c > 1.0 else 0.0

    def axis(self):
        """Axis of a hyperbolic isometry, as the polar eigenvector with eigenvalue 1."""
        w, v = np.linalg.eig(self.m)
        k = int(np.argmin(np.abs(w - 1.0)))
        p = np.real(v[:, k])
        q = mdot(p, p)
        if q <= 0:
            raise ValueError("isometry has no spacelike fixed polar (not hyperbolic)")
        return HLine(p / np.sqrt(q))


def _some_point_on(line: HLine):
    p = line.p
    # project the standard origin onto the line
    o = np.array([1.0, 0.0, 0.0])
    s = mdot(o, p)
    return normalize_point(o - s * p)
