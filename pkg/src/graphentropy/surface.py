"""Compact hyperbolic surfaces with geodesic boundary and their wall views.

A surface is held through its universal cover: a convex region F of H^2
bounded by countably many disjoint geodesic lines, the translates of the
boundary axes under the (free) holonomy group.  Pairs of pants are built
explicitly from right-angled hexagon trigonometry; other surfaces can be
supplied as generator matrices plus boundary words.

The enumeration core answers: which boundary lines of F are seen from an
observer erected outside F over a point of one boundary line, and under
which visual angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hyperboloid as hyp
from .hyperboloid import HLine, HIsometry, mdot

LN4 = math.log(4.0)

# extra BFS radius absorbing non-monotone orbit-distance along word prefixes
_BFS_MARGIN = 2.0


# ---------------------------------------------------------------------------
# free-group words as tuples of nonzero ints (sign = inverse)

def word_inv(w):
    return tuple(-x for x in reversed(w))


def word_mul(w1, w2):
    """Concatenate and freely reduce."""
    w1 = list(w1)
    i = 0
    n = len(w2)
    while w1 and i < n and w1[-1] == -w2[i]:
        w1.pop()
        i += 1
    return tuple(w1) + tuple(w2[i:])


def word_str(w):
    out = []
    for x in w:
        c = chr(ord("a") + abs(x) - 1)
        out.append(c if x > 0 else c.upper())
    return "".join(out)


def _canonical_coset(word, stab):
    """Shortest (then lexicographically least) element of word * <stab>."""
    best = tuple(word)
    for step in (stab, word_inv(stab)):
        cur = tuple(word)
        for _ in range(200):
            nxt = word_mul(cur, step)
            if (len(nxt), nxt) < (len(best), best):
                best = nxt
                cur = nxt
            elif len(nxt) <= len(cur):
                cur = nxt  # walk through a plateau
            else:
                break
    return best


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PantsParams:
    L1: float
    L2: float
    L3: float

    def __post_init__(self):
        for L in (self.L1, self.L2, self.L3):
            if not (np.isfinite(L) and L > 0):
                raise ValueError("pants boundary lengths must be positive and finite")

    @property
    def lengths(self):
        return (self.L1, self.L2, self.L3)


def seam_distance(Li, Lj, Lk):
    """Distance between boundary geodesics i and j of a pair of pants.

    Right-angled hexagon identity on the half-lengths.
    """
    li, lj, lk = Li / 2.0, Lj / 2.0, Lk / 2.0
    arg = (np.cosh(lk) + np.cosh(li) * np.cosh(lj)) / (np.sinh(li) * np.sinh(lj))
    if arg <= 1.0 + 1e-12:
        raise ValueError("degenerate pants parameters (seam collapses)")
    return float(np.arccosh(arg))


@dataclass
class BoundaryClass:
    class_id: int
    word: tuple                 # representative in the holonomy free group
    rep: HIsometry              # the representative isometry
    axis: HLine                 # oriented so the surface interior is on the positive side
    translation_length: float
    arc_origin: np.ndarray      # foot of the common perpendicular to the next axis
    interior_side: int = 1


@dataclass
class FuchsianSurface:
    generators: list            # list of HIsometry, a free basis of the holonomy
    boundary_classes: list      # list of BoundaryClass
    interior_point: np.ndarray  # a reference point inside F
    label: str = "surface"
    _cache: "_LineCache | None" = field(default=None, repr=False)

    @property
    def boundary_lengths(self):
        return tuple(c.translation_length for c in self.boundary_classes)

    def boundary_class(self, class_id):
        for c in self.boundary_classes:
            if c.class_id == class_id:
                return c
        raise KeyError("no boundary class %r" % (class_id,))

    def cache(self):
        if self._cache is None:
            self._cache = _LineCache(self)
        return self._cache

    def validate(self, tol=1e-9):
        """Check the boundary-class invariants; raises on violation."""
        for c in self.boundary_classes:
            got = c.rep.translation_length()
            if abs(got - c.translation_length) > tol:
                raise ValueError(
                    "class %r: translation length %.12g != declared %.12g"
                    % (c.class_id, got, c.translation_length)
                )
            moved = c.rep.apply(c.arc_origin)
            if abs(hyp.dist_to_line(moved, c.axis)) > 1e-7:
                raise ValueError("class %r: representative does not preserve its axis" % (c.class_id,))
            if c.axis.side(self.interior_point) <= 0:
                raise ValueError("class %r: interior point on the wrong side" % (c.class_id,))
        for i, ci in enumerate(self.boundary_classes):
            for cj in self.boundary_classes[i + 1 :]:
                if hyp.line_pair_distance(ci.axis, cj.axis) <= 0:
                    raise ValueError(
                        "boundary axes %r and %r are not disjoint" % (ci.class_id, cj.class_id)
                    )
        return self


def _fix_polar_sign(p, x_ref):
    return p if mdot(x_ref, p) > 0 else -p


def build_pants(params: PantsParams) -> FuchsianSurface:
    """Pair of pants with boundary lengths (L1, L2, L3).

    Axis 1 and axis 2 are placed perpendicular to a common seam geodesic at
    the hexagon seam distance; the third boundary class is the inverse of the
    product generator and its axis is recovered from the matrix.
    """
    L1, L2, L3 = params.lengths
    s3 = seam_distance(L1, L2, L3)
    # seam along {x2 = 0}; axes perpendicular to it at arc 0 and s3
    f1 = np.array([1.0, 0.0, 0.0])
    f2 = np.array([np.cosh(s3), np.sinh(s3), 0.0])
    axis1 = HLine(np.array([0.0, 1.0, 0.0]))
    axis2 = HLine(np.array([np.sinh(s3), np.cosh(s3), 0.0]))
    # hexagon vertices over the feet, on the same side of the seam
    h1, h2 = L1 / 2.0, L2 / 2.0
    v1 = np.array([np.cosh(h1), 0.0, np.sinh(h1)])
    v2 = np.array([np.cosh(h2) * np.cosh(s3), np.cosh(h2) * np.sinh(s3), np.sinh(h2)])
    x_ref = hyp.normalize_point(f1 + f2 + v1 + v2)

    # orient the generator translations so the product closes up to length L3
    best = None
    for sa in (1.0, -1.0):
        for sb in (1.0, -1.0):
            a = HIsometry.translation_along(axis1, sa * L1, origin=f1)
            b = HIsometry.translation_along(axis2, sb * L2, origin=f2)
            err = abs((a @ b).translation_length() - L3)
            if best is None or err < best[0]:
                best = (err, a, b)
    err, a, b = best
    if err > 1e-9:
        raise ValueError("pants construction failed to close up (defect %.3g)" % err)
    c = (a @ b).inverse()
    axis3 = c.axis()

    axes = [
        HLine(_fix_polar_sign(axis1.p, x_ref)),
        HLine(_fix_polar_sign(axis2.p, x_ref)),
        HLine(_fix_polar_sign(axis3.p, x_ref)),
    ]
    reps = [a, b, c]
    words = [(1,), (2,), (-2, -1)]
    lengths = [L1, L2, L3]
    classes = []
    for i in range(3):
        nxt = axes[(i + 1) % 3]
        perp = hyp.common_perpendicular(axes[i], nxt)
        origin = hyp.intersect_lines(axes[i], perp)
        classes.append(
            BoundaryClass(
                class_id=i + 1,
                word=words[i],
                rep=reps[i],
                axis=axes[i],
                translation_length=lengths[i],
                arc_origin=origin,
            )
        )
    surf = FuchsianSurface(
        generators=[a, b],
        boundary_classes=classes,
        interior_point=x_ref,
        label="pants(%g,%g,%g)" % (L1, L2, L3),
    )
    return surf.validate()


def surface_from_generators(matrices, boundary_words, interior_point=None, label="surface"):
    """Generic surface input: free-group generator matrices + boundary words.

    boundary_words are tuples of nonzero ints over the generators (sign =
    inverse).  Only the FuchsianSurface invariants are validated.
    """
    gens = [HIsometry(np.asarray(m, dtype=float)) for m in matrices]
    inv = [g.inverse() for g in gens]

    def realize(word):
        g = HIsometry.identity()
        for x in word:
            g = g @ (gens[x - 1] if x > 0 else inv[-x - 1])
        return g

    reps = [realize(w) for w in boundary_words]
    axes = [r.axis() for r in reps]
    if interior_point is None:
        feet = []
        for i in range(len(axes)):
            for j in range(i + 1, len(axes)):
                perp = hyp.common_perpendicular(axes[i], axes[j])
                feet.append(hyp.intersect_lines(axes[i], perp))
        interior_point = hyp.normalize_point(np.sum(feet, axis=0))
    x_ref = np.asarray(interior_point, dtype=float)
    axes = [HLine(_fix_polar_sign(ax.p, x_ref)) for ax in axes]
    classes = []
    for i, (w, r, ax) in enumerate(zip(boundary_words, reps, axes)):
        nxt = axes[(i + 1) % len(axes)]
        perp = hyp.common_perpendicular(ax, nxt)
        origin = hyp.intersect_lines(ax, perp)
        classes.append(
            BoundaryClass(
                class_id=i + 1,
                word=tuple(w),
                rep=r,
                axis=ax,
                translation_length=r.translation_length(),
                arc_origin=origin,
            )
        )
    return FuchsianSurface(gens, classes, x_ref, label=label).validate()


# ---------------------------------------------------------------------------
# line cache: all boundary lines of F within a radius of the interior point


class _LineCache:
    """Boundary lines of the universal cover, deduplicated exactly.

    A line is a holonomy translate g*axis_j; its identity is the coset
    g<rep_j> in the free group, so deduplication is by canonical coset word
    instead of floating-point polar comparison.
    """

    def __init__(self, surface: FuchsianSurface):
        self.surface = surface
        self.radius = -1.0
        self.depth_cap = 0
        self.stabilized = True
        self.n = 0
        self.polars = np.zeros((0, 3))
        self.origins = np.zeros((0, 3))
        self.tangents = np.zeros((0, 3))
        self.class_ids = np.zeros(0, dtype=int)
        self.lengths = np.zeros(0)
        self.words: list = []

    def ensure(self, radius, depth_cap=64):
        if radius <= self.radius and depth_cap <= self.depth_cap and self.stabilized:
            return
        self._build(max(radius, self.radius), max(depth_cap, self.depth_cap))

    def _build(self, radius, depth_cap):
        surf = self.surface
        x_ref = surf.interior_point
        gens = surf.generators + [g.inverse() for g in surf.generators]
        r = len(surf.generators)
        gmats = [g.m for g in gens]
        letters = list(range(1, r + 1)) + list(range(-1, -r - 1, -1))
        step = max(float(hyp.dist_h2(x_ref, g.apply(x_ref))) for g in gens[:r])
        a0 = max(hyp.dist_to_line(x_ref, c.axis) for c in surf.boundary_classes)
        r_ext = radius + a0 + step + _BFS_MARGIN
        cosh_ext = np.cosh(r_ext)
        sinh_rad = np.sinh(radius)

        seen: dict = {}
        rows = []  # (polar, origin, class_id, length, word)
        cboxes = [
            (c.class_id, c.word, c.axis.p, c.arc_origin, c.translation_length)
            for c in surf.boundary_classes
        ]

        def visit(words, mats):
            for cid, cword, p_j, o_j, len_j in cboxes:
                polars = mats @ p_j
                s = mdot(x_ref, polars)
                for k in np.nonzero(np.abs(s) <= sinh_rad)[0]:
                    key = (cid, _canonical_coset(words[k], cword))
                    if key in seen:
                        continue
                    seen[key] = True
                    p = polars[k] if s[k] > 0 else -polars[k]
                    rows.append((p, mats[k] @ o_j, cid, len_j, words[k]))

        words = [()]
        mats = np.eye(3)[None]
        last = np.zeros(1, dtype=np.int8)
        visit(words, mats)
        depth = 0
        stabilized = True
        while len(words):
            depth += 1
            if depth > depth_cap:
                stabilized = False
                break
            w_nxt, m_nxt, l_nxt = [], [], []
            for x, gm in zip(letters, gmats):
                ok = last != -x
                if not ok.any():
                    continue
                m2 = mats[ok] @ gm
                keep = -mdot(x_ref, m2 @ x_ref) <= cosh_ext
                if not keep.any():
                    continue
                m2 = m2[keep]
                kept_words = [w + (x,) for w, k in zip(
                    (words[i] for i in np.nonzero(ok)[0]), keep) if k]
                w_nxt.extend(kept_words)
                m_nxt.append(m2)
                l_nxt.append(np.full(len(m2), x, dtype=np.int8))
            if not w_nxt:
                break
            words = w_nxt
            mats = np.concatenate(m_nxt)
            last = np.concatenate(l_nxt)
            visit(words, mats)

        self.radius = radius
        self.depth_cap = depth_cap
        self.stabilized = stabilized
        self.n = len(rows)
        self.polars = np.array([r0[0] for r0 in rows]).reshape(self.n, 3)
        self.origins = np.array([r0[1] for r0 in rows]).reshape(self.n, 3)
        # J(p x o) is automatically Minkowski-unit for unit inputs; renormalizing
        # would only re-introduce cancellation noise at large scales
        self.tangents = np.cross(self.polars, self.origins) @ hyp.MINK
        self.class_ids = np.array([r0[2] for r0 in rows], dtype=int)
        self.lengths = np.array([r0[3] for r0 in rows])
        self.words = [r0[4] for r0 in rows]


# ---------------------------------------------------------------------------


@dataclass
class WallSight:
    """One boundary line seen from the observer."""

    class_id: int
    word: tuple
    line: HLine
    dist: float
    foot: np.ndarray
    psi: float
    foot_offset: float
    interval: tuple  # ideal-boundary interval angles on the attaching arc


@dataclass
class SightBatch:
    """Vectorized enumeration output, in canonical interval order."""

    observer: np.ndarray
    observer_foot: np.ndarray
    frame_t: np.ndarray
    frame_p: np.ndarray
    attach_length: float
    class_ids: np.ndarray
    l_tilde: np.ndarray
    psi: np.ndarray
    feet: np.ndarray
    foot_offsets: np.ndarray
    theta_lo: np.ndarray
    theta_hi: np.ndarray
    cache_index: np.ndarray
    stabilized: bool

    def __len__(self):
        return len(self.l_tilde)


def observer_frame(surface, attach_class, u, l):
    """Observer erected at arc u over the attaching axis, on the exterior side."""
    cls = surface.boundary_class(attach_class)
    o0 = hyp.point_at_arclength(cls.axis, cls.arc_origin, u)
    t0 = hyp.tangent_at(cls.axis, o0)
    o = hyp.erect_perpendicular(cls.axis, o0, l, side=-1)
    return o, o0, t0, cls


def psi_cutoff(eps):
    """Distance beyond which a line is seen under angle < eps."""
    return -math.log(math.tan(eps / 4.0))


def sight_batch(surface, attach_class, u, l, eps, depth_cap=64) -> SightBatch:
    if eps <= 0:
        raise ValueError("eps must be positive")
    if l < 0:
        raise ValueError("observer distance must be >= 0")
    o, o0, t0, cls = observer_frame(surface, attach_class, u, l)
    cutoff = psi_cutoff(eps)
    cache = surface.cache()
    # coverage: a qualifying line satisfies dist(x_ref, line) <=
    # dist(x_ref, o0) + dist(o0, line) <= rho + cutoff + ln 4
    half = cls.translation_length / 2.0
    d_mid = hyp.dist_h2(
        surface.interior_point, hyp.point_at_arclength(cls.axis, cls.arc_origin, half)
    )
    d_org = hyp.dist_h2(surface.interior_point, cls.arc_origin)
    rho = float(min(d_mid + abs(u - half), d_org + abs(u)))
    need = cutoff + rho + LN4 + 0.75
    # quantize upward so nearby queries share one cache build
    cache.ensure(2.0 * math.ceil(need / 2.0), depth_cap)

    s = mdot(cache.polars, o)
    l_tilde = np.arcsinh(np.maximum(s, 0.0))
    mask = (s > 1e-12) & (l_tilde <= cutoff)
    idx = np.nonzero(mask)[0]
    s = s[idx]
    l_tilde = l_tilde[idx]
    feet = (o - s[:, None] * cache.polars[idx]) / np.sqrt(1.0 + s * s)[:, None]
    foot_offsets = np.arcsinh(mdot(feet, cache.tangents[idx]))
    lengths = cache.lengths[idx]
    foot_offsets = np.mod(foot_offsets, lengths)
    # ideal intervals seen on the attaching arc, measured at the observer foot
    n1 = cache.origins[idx] - cache.tangents[idx]
    n2 = cache.origins[idx] + cache.tangents[idx]

    def angles(n):
        v = n + mdot(n, o0)[:, None] * o0
        return np.arctan2(mdot(v, cls.axis.p), mdot(v, t0))

    th1, th2 = angles(n1), angles(n2)
    theta_lo = np.minimum(th1, th2)
    theta_hi = np.maximum(th1, th2)
    order = np.lexsort((idx, theta_lo + theta_hi))
    return SightBatch(
        observer=o,
        observer_foot=o0,
        frame_t=t0,
        frame_p=cls.axis.p,
        attach_length=cls.translation_length,
        class_ids=cache.class_ids[idx][order],
        l_tilde=l_tilde[order],
        psi=hyp.visual_angle(l_tilde[order]),
        feet=feet[order],
        foot_offsets=foot_offsets[order],
        theta_lo=theta_lo[order],
        theta_hi=theta_hi[order],
        cache_index=idx[order],
        stabilized=cache.stabilized,
    )


def sight_rows(surface, attach_class, u, l, cutoff, depth_cap=64):
    """Batched sight query: many observers over one attaching class.

    u, l, cutoff are arrays of shape (M,); observers are erected on the
    exterior side like in sight_batch, each with its own angular cutoff.
    Returns a dict of flat arrays over all (observer, visible line) pairs:
    rows (observer index), class_ids, l_tilde, feet, foot_offsets, psi,
    plus the per-observer frames (o, o0, t0) and the cache stabilized flag.
    Pair order is deterministic: by observer, then by cache index.
    """
    u = np.asarray(u, dtype=float)
    l = np.asarray(l, dtype=float)
    cutoff = np.asarray(cutoff, dtype=float)
    if np.any(l < 0):
        raise ValueError("observer distance must be >= 0")
    cls = surface.boundary_class(attach_class)
    half = cls.translation_length / 2.0
    d_mid = hyp.dist_h2(
        surface.interior_point, hyp.point_at_arclength(cls.axis, cls.arc_origin, half)
    )
    d_org = hyp.dist_h2(surface.interior_point, cls.arc_origin)
    rho = np.minimum(d_mid + np.abs(u - half), d_org + np.abs(u))
    need = float(np.max(cutoff + rho)) + LN4 + 0.75
    cache = surface.cache()
    cache.ensure(2.0 * math.ceil(need / 2.0), depth_cap)

    # observer frames, all rows at once
    a0 = cls.arc_origin
    ta = hyp.tangent_at(cls.axis, a0)
    p0 = cls.axis.p
    o0 = np.cosh(u)[:, None] * a0 + np.sinh(u)[:, None] * ta
    t0 = np.cross(np.broadcast_to(p0, o0.shape), o0) @ hyp.MINK
    o = np.cosh(l)[:, None] * o0 - np.sinh(l)[:, None] * p0

    # A line visible under the cutoff from the observer over o0 has
    # dist(o0, line) <= cutoff + ln 4 (same coverage bound as the cache
    # radius above), so dist(mid, line) <= |u - half| + cutoff + ln 4
    # independently of the observer height l.
    mid = hyp.point_at_arclength(cls.axis, cls.arc_origin, half)
    du = np.abs(u - half)
    reach = float(np.max(cutoff + du)) + LN4 + 0.75
    a = np.abs(hyp.mdot(cache.polars, mid))
    sub = np.nonzero(a <= math.sinh(min(reach, 700.0)))[0]
    # sort candidates by distance from mid: rows with a smaller cutoff
    # then only ever touch a prefix of the candidate list
    sub = sub[np.argsort(a[sub], kind="stable")]
    a = a[sub]
    jp = cache.polars[sub] @ hyp.MINK  # so s = o . jp^T is the Minkowski product

    # process rows in cutoff order so each chunk shares a tight prefix
    rord = np.argsort(cutoff, kind="stable")
    rows_parts, cols_parts, s_parts = [], [], []
    sinh_cut = np.sinh(cutoff)
    chunk = max(1, 4_000_000 // max(1, len(sub)))
    for lo in range(0, len(u), chunk):
        ri = rord[lo : lo + chunk]
        creach = float(np.max(cutoff[ri] + du[ri])) + LN4 + 0.75
        k = int(np.searchsorted(a, math.sinh(min(creach, 700.0)), side="right"))
        s = o[ri] @ jp[:k].T
        m = (s > 1e-12) & (s <= sinh_cut[ri, None])
        r, c = np.nonzero(m)
        rows_parts.append(ri[r])
        cols_parts.append(c)
        s_parts.append(s[r, c])
    rows = np.concatenate(rows_parts) if rows_parts else np.zeros(0, dtype=int)
    cols = np.concatenate(cols_parts) if cols_parts else np.zeros(0, dtype=int)
    s = np.concatenate(s_parts) if s_parts else np.zeros(0)
    idx = sub[cols]
    # restore the documented pair order: by observer, then by cache index
    order = np.lexsort((idx, rows))
    rows, idx, s = rows[order], idx[order], s[order]
    l_tilde = np.arcsinh(s)
    feet = (o[rows] - s[:, None] * cache.polars[idx]) / np.sqrt(1.0 + s * s)[:, None]
    foot_offsets = np.mod(
        np.arcsinh(hyp.mdot(feet, cache.tangents[idx])), cache.lengths[idx]
    )
    return {
        "rows": rows,
        "cache_index": idx,
        "class_ids": cache.class_ids[idx],
        "l_tilde": l_tilde,
        "feet": feet,
        "foot_offsets": foot_offsets,
        "psi": hyp.visual_angle(l_tilde),
        "observer": o,
        "observer_foot": o0,
        "frame_t": t0,
        "frame_p": p0,
        "stabilized": cache.stabilized,
    }


@dataclass
class WallEnumeration:
    sights: list
    stabilized: bool

    def __iter__(self):
        return iter(self.sights)

    def __len__(self):
        return len(self.sights)

    def __getitem__(self, k):
        return self.sights[k]


def enumerate_walls(surface, attach_class, u, l, eps, depth_cap=64) -> WallEnumeration:
    """All boundary lines of F, other than the attaching one, with psi >= eps."""
    batch = sight_batch(surface, attach_class, u, l, eps, depth_cap)
    cache = surface.cache()
    sights = [
        WallSight(
            class_id=int(batch.class_ids[k]),
            word=cache.words[batch.cache_index[k]],
            line=HLine(cache.polars[batch.cache_index[k]]),
            dist=float(batch.l_tilde[k]),
            foot=batch.feet[k],
            psi=float(batch.psi[k]),
            foot_offset=float(batch.foot_offsets[k]),
            interval=(float(batch.theta_lo[k]), float(batch.theta_hi[k])),
        )
        for k in range(len(batch))
    ]
    return WallEnumeration(sights, batch.stabilized)


def min_boundary_gap(surface, radius=8.0, depth_cap=64):
    """Empirical minimum distance between distinct boundary lines of F.

    A lower-bound proxy for the separation constant: the minimum over the
    enumerated pairs within the cache radius, nonincreasing in the radius.
    """
    cache = surface.cache()
    cache.ensure(radius, depth_cap)
    keep = np.arcsinh(np.abs(mdot(cache.polars, surface.interior_point))) <= radius
    P = cache.polars[keep]
    g = np.abs(-np.outer(P[:, 0], P[:, 0]) + np.outer(P[:, 1], P[:, 1]) + np.outer(P[:, 2], P[:, 2]))
    np.fill_diagonal(g, np.inf)
    best = g.min()
    if best <= 1.0:
        raise ValueError("enumerated boundary lines are not disjoint")
    return float(np.arccosh(best))
