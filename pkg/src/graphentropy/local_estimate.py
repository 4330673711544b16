"""Per-wall expansion records and the local gain functional.

Given an observer erected at distance l over a boundary line, each visible
wall w contributes a child record: the crossing point of the sight segment
with the attaching line, the split l~ = l~' + l'' of the sight distance, the
shortening correction delta, and the multiplicative weight e^{l - l~ + delta}.
The gain functional lambda = sum of weights exceeding 1 is what makes the
level sums of the wall tree grow.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import hyperboloid as hyp
from . import surface as sf


@dataclass
class ExpansionState:
    """Observer configuration over one boundary line of a block surface."""

    surface: sf.FuchsianSurface
    attach_class: int
    u: float            # foot offset along the attaching line
    r: float = 0.0      # slice height in the block's line factor
    l: float = 0.0      # incoming last-segment length
    alpha: float = math.pi / 2.0  # wall angle at the attaching wall (unused at l = 0)
    L: float = None     # accumulated broken-geodesic length (defaults to l)
    depth: int = 0

    def __post_init__(self):
        if self.l < 0:
            raise ValueError("incoming segment length must be >= 0")
        if self.l > 0 and not (0.0 < self.alpha <= math.pi / 2.0 + 1e-12):
            raise ValueError("wall angle must lie in (0, pi/2]")
        if self.L is None:
            self.L = self.l
        if self.L < self.l - 1e-12:
            raise ValueError("accumulated length cannot be below the last segment")


@dataclass
class ChildRecord:
    """All derived quantities of one visible wall."""

    sight: sf.WallSight
    t_offset: float       # signed arc of the crossing point from the foot
    d: float              # |t_offset|
    l_tilde_prime: float  # observer -> crossing point
    l_second: float       # crossing point -> foot on the child wall
    l_tilde: float        # observer -> child wall (= prime + second)
    delta: float          # shortening gained by straightening at the crossing
    tau: float            # e^{l - l_tilde}
    weight_factor: float  # e^{l - l_tilde + delta}


@dataclass
class ChildBatch:
    """Vectorized expansion output plus the records' enumeration batch."""

    batch: sf.SightBatch
    t_offset: np.ndarray
    d: np.ndarray
    l_tilde_prime: np.ndarray
    l_second: np.ndarray
    l_tilde: np.ndarray
    delta: np.ndarray
    tau: np.ndarray
    weight_factor: np.ndarray
    stabilized: bool

    def __len__(self):
        return len(self.t_offset)


def expand_arrays(state: ExpansionState, eps, depth_cap=64) -> ChildBatch:
    """Vector core of expand_children; one row per visible wall."""
    s = state
    batch = sf.sight_batch(s.surface, s.attach_class, s.u, s.l, eps, depth_cap)
    l_tilde = batch.l_tilde
    if s.l == 0.0:
        # the observer sits on the attaching line: degenerate crossing
        zero = np.zeros_like(l_tilde)
        return ChildBatch(
            batch=batch,
            t_offset=zero,
            d=zero,
            l_tilde_prime=zero,
            l_second=l_tilde.copy(),
            l_tilde=l_tilde,
            delta=zero,
            tau=np.exp(-l_tilde),
            weight_factor=np.exp(-l_tilde),
            stabilized=batch.stabilized,
        )
    o = batch.observer
    # unit tangent at o toward each wall foot, then the crossing parameter
    # sigma with the attaching line: <x(sigma), p0> = 0
    v = (batch.feet - np.cosh(l_tilde)[:, None] * o) / np.sinh(l_tilde)[:, None]
    vp = hyp.mdot(v, batch.frame_p)
    # <o, p0> = -sinh(l) on the exterior side, so tanh(sigma) = sinh(l)/vp
    sigma = np.arctanh(np.sinh(s.l) / vp)
    t_w = np.cosh(sigma)[:, None] * o + np.sinh(sigma)[:, None] * v
    t0 = hyp.tangent_at(hyp.HLine(batch.frame_p), batch.observer_foot)
    t_offset = np.arcsinh(hyp.mdot(t_w, t0))
    d = np.abs(t_offset)
    l_second = l_tilde - sigma
    delta = hyp.delta_correction(s.l, d, s.alpha)
    tau = np.exp(s.l - l_tilde)
    return ChildBatch(
        batch=batch,
        t_offset=t_offset,
        d=d,
        l_tilde_prime=sigma,
        l_second=l_second,
        l_tilde=l_tilde,
        delta=delta,
        tau=tau,
        weight_factor=tau * np.exp(delta),
        stabilized=batch.stabilized,
    )


def expand_children(state: ExpansionState, eps, depth_cap=64):
    """One ChildRecord per visible wall, in canonical interval order.

    Returns (records, stabilized).
    """
    cb = expand_arrays(state, eps, depth_cap)
    cache = state.surface.cache()
    b = cb.batch
    records = []
    for k in range(len(cb)):
        i = b.cache_index[k]
        sight = sf.WallSight(
            class_id=int(b.class_ids[k]),
            word=cache.words[i],
            line=hyp.HLine(cache.polars[i]),
            dist=float(b.l_tilde[k]),
            foot=b.feet[k],
            psi=float(b.psi[k]),
            foot_offset=float(b.foot_offsets[k]),
            interval=(float(b.theta_lo[k]), float(b.theta_hi[k])),
        )
        records.append(
            ChildRecord(
                sight=sight,
                t_offset=float(cb.t_offset[k]),
                d=float(cb.d[k]),
                l_tilde_prime=float(cb.l_tilde_prime[k]),
                l_second=float(cb.l_second[k]),
                l_tilde=float(cb.l_tilde[k]),
                delta=float(cb.delta[k]),
                tau=float(cb.tau[k]),
                weight_factor=float(cb.weight_factor[k]),
            )
        )
    return records, cb.stabilized


def lambda_value(state: ExpansionState, eps, depth_cap=64) -> float:
    """Truncated gain functional: e^l * sum over walls of e^{delta - l~}.

    A lower bound of the true value (positive terms are dropped by the
    angular cutoff eps).
    """
    if state.l <= 0:
        raise ValueError("the gain functional requires l > 0")
    cb = expand_arrays(state, eps, depth_cap)
    return float(np.sum(cb.weight_factor))


# ---------------------------------------------------------------------------
# parameter sweep


SWEEP_COLUMNS = ("l", "alpha", "u", "lambda", "sum_tau", "m0_hat", "delta0_hat")


@dataclass
class SweepRow:
    attach_class: int
    l: float
    alpha: float
    u: float
    lam: float
    sum_tau: float
    m0_hat: float
    delta0_hat: float
    stabilized: bool = True


@dataclass
class SweepTable:
    rows: list
    lambda0_hat: float = field(init=False)

    def __post_init__(self):
        self.lambda0_hat = min(r.lam for r in self.rows) if self.rows else float("nan")

    def to_csv(self):
        out = io.StringIO()
        out.write(",".join(SWEEP_COLUMNS) + "\n")
        for r in self.rows:
            out.write(
                ",".join(
                    "%.17g" % x
                    for x in (r.l, r.alpha, r.u, r.lam, r.sum_tau, r.m0_hat, r.delta0_hat)
                )
                + "\n"
            )
        return out.getvalue()


def default_grids(surface, alpha0=None, n_l=12, n_alpha=8, n_u=8):
    """Sweep grids: log-spaced l from the empirical gap, linear alpha, u per class."""
    l0 = sf.min_boundary_gap(surface)
    lo = max(0.25, l0)
    l_grid = np.geomspace(lo, max(6.0, lo * 1.5), n_l)
    a_lo = alpha0 if alpha0 is not None else math.pi / 2.0
    alpha_grid = np.linspace(a_lo, math.pi / 2.0, n_alpha) if a_lo < math.pi / 2.0 else np.array(
        [math.pi / 2.0] * 1
    )
    if a_lo < math.pi / 2.0 and len(alpha_grid) < n_alpha:
        alpha_grid = np.linspace(a_lo, math.pi / 2.0, n_alpha)
    u_fracs = (np.arange(n_u) + 0.5) / n_u
    return l_grid, alpha_grid, u_fracs


def lemma_sweep(
    surface,
    l_grid,
    alpha_grid,
    u_samples,
    eps,
    depth_cap=64,
    a0_threshold=1.0,
) -> SweepTable:
    """Evaluate the gain functional over a grid of observer configurations.

    u_samples may be absolute offsets or fractions in [0,1) of each class
    translation length (fractions when all samples are < 1).

    The angular cutoff is scaled per row by visual_angle(l)/pi: the walls
    carrying the weight mass at height l subtend angles of order e^{-l}, so a
    fixed cutoff would starve the large-l rows.  The scaling gives every row
    the same relative tail, and each lambda-hat stays a lower bound.
    """
    l_grid = np.atleast_1d(np.asarray(l_grid, dtype=float))
    alpha_grid = np.atleast_1d(np.asarray(alpha_grid, dtype=float))
    u_samples = np.atleast_1d(np.asarray(u_samples, dtype=float))
    if len(l_grid) == 0 or len(alpha_grid) == 0 or len(u_samples) == 0:
        raise ValueError("sweep grids must be nonempty")
    if l_grid.min() <= 0:
        raise ValueError("l grid must be strictly positive")
    fractional = bool(np.all((u_samples >= 0) & (u_samples < 1)))
    rows = []
    for cls in surface.boundary_classes:
        us = u_samples * cls.translation_length if fractional else u_samples
        for u in us:
            for l in l_grid:
                cb = None
                eps_row = eps * hyp.visual_angle(l) / math.pi
                for alpha in alpha_grid:
                    state = ExpansionState(
                        surface, cls.class_id, u=float(u), l=float(l), alpha=float(alpha)
                    )
                    if cb is None:
                        cb = expand_arrays(state, eps_row, depth_cap)
                    # only delta depends on alpha; reuse the geometric part
                    delta = hyp.delta_correction(l, cb.d, alpha)
                    w = cb.tau * np.exp(delta)
                    far = cb.d >= a0_threshold
                    rows.append(
                        SweepRow(
                            attach_class=cls.class_id,
                            l=float(l),
                            alpha=float(alpha),
                            u=float(u),
                            lam=float(np.sum(w)),
                            sum_tau=float(np.sum(cb.tau)),
                            m0_hat=float(np.sum(cb.tau[far])),
                            delta0_hat=float(np.min(delta[far])) if far.any() else 0.0,
                            stabilized=cb.stabilized,
                        )
                    )
    rows.sort(key=lambda r: (r.attach_class, r.u, r.l, r.alpha))
    return SweepTable(rows)
