"""Child-record geometry and gain-functional tests.

The main oracle rebuilds every child quantity from raw kernel calls: feet by
projection, the crossing point by bisection along the sight segment, and the
correction by the closed form, with no shared code path.
"""

import math

import numpy as np
import pytest

from graphentropy import hyperboloid as hyp
from graphentropy import local_estimate as le
from graphentropy import surface as sf


@pytest.fixture(scope="module")
def pants222():
    return sf.build_pants(sf.PantsParams(2, 2, 2))


def test_root_children_are_single_segments(pants222):
    state = le.ExpansionState(pants222, 1, u=0.3)
    records, stabilized = le.expand_children(state, 1e-3)
    assert stabilized and records
    for r in records:
        assert r.delta == 0.0
        assert r.d == 0.0
        assert r.l_tilde_prime == 0.0
        assert abs(r.l_second - r.sight.dist) < 1e-12
        assert abs(r.l_tilde - r.sight.dist) < 1e-12
        assert abs(r.tau - math.exp(-r.sight.dist)) < 1e-15


def test_child_record_invariants(pants222):
    state = le.ExpansionState(pants222, 2, u=0.6, l=1.3, alpha=1.1)
    records, _ = le.expand_children(state, 1e-3)
    for r in records:
        assert abs(r.l_tilde - (r.l_tilde_prime + r.l_second)) < 1e-10
        assert abs(r.l_tilde_prime - hyp.right_hypotenuse(state.l, r.d)) < 1e-9
        assert abs(r.delta - hyp.delta_correction(state.l, r.d, state.alpha)) < 1e-10
        assert abs(r.d - abs(r.t_offset)) < 1e-15
        assert abs(r.tau - math.exp(state.l - r.l_tilde)) < 1e-12
        assert abs(r.weight_factor - r.tau * math.exp(r.delta)) < 1e-12
        assert (r.delta > 0) == (r.d > 1e-9) or r.d <= 1e-9


def _crossing_by_bisection(o, v, axis):
    """Crossing of the ray x(s) = cosh(s) o + sinh(s) v with a line, by bisection."""

    def side(s):
        return hyp.mdot(np.cosh(s) * o + np.sinh(s) * v, axis.p)

    lo, hi = 0.0, 1.0
    while side(hi) < 0:
        hi *= 2.0
        assert hi < 1e3
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if side(mid) < 0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    return hyp.normalize_point(np.cosh(s) * o + np.sinh(s) * v)


def test_end_to_end_rebuild_oracle(pants222):
    """Three angle-largest children at l = 1, alpha = pi/2, u = 0, eps = 1e-3."""
    l, alpha, u = 1.0, math.pi / 2.0, 0.0
    state = le.ExpansionState(pants222, 1, u=u, l=l, alpha=alpha)
    records, _ = le.expand_children(state, 1e-3)
    top3 = sorted(records, key=lambda r: -r.sight.psi)[:3]

    cls = pants222.boundary_class(1)
    o0 = hyp.point_at_arclength(cls.axis, cls.arc_origin, u)
    o = hyp.erect_perpendicular(cls.axis, o0, l, side=-1)
    for r in top3:
        o_w, l_tilde = hyp.foot_and_dist(o, r.sight.line)
        assert abs(l_tilde - r.l_tilde) < 1e-10
        # unit initial direction of the geodesic o -> o_w
        v = (o_w - math.cosh(l_tilde) * o) / math.sinh(l_tilde)
        t_w = _crossing_by_bisection(o, v, cls.axis)
        assert abs(hyp.dist_to_line(t_w, cls.axis)) < 1e-10
        d = hyp.dist_h2(t_w, o0)
        assert abs(d - r.d) < 1e-10
        assert abs(hyp.dist_h2(o, t_w) - r.l_tilde_prime) < 1e-10
        assert abs(hyp.dist_h2(t_w, o_w) - r.l_second) < 1e-10
        sign = 1.0 if hyp.arc_coordinate(cls.axis, o0, t_w) >= 0 else -1.0
        assert abs(sign * d - r.t_offset) < 1e-10
        delta = hyp.delta_correction(l, d, alpha)
        assert abs(delta - r.delta) < 1e-10
        assert abs(r.weight_factor - math.exp(l - r.l_tilde + delta)) < 1e-12


def test_lambda_two_ways_and_above_one(pants222):
    state = le.ExpansionState(pants222, 1, u=0.0, l=1.0, alpha=math.pi / 2.0)
    lam = le.lambda_value(state, 1e-3)
    records, _ = le.expand_children(state, 1e-3)
    assert abs(lam - sum(r.weight_factor for r in records)) < 1e-12
    assert abs(lam - sum(r.tau * math.exp(r.delta) for r in records)) < 1e-12
    # the correction gains push the full value above 1; a fine cutoff is
    # needed before the truncated lower bound itself crosses 1 at l = 1
    assert le.lambda_value(state, 1e-5) > 1.0
    assert sum(r.tau for r in records) > 0.85


def test_lambda_monotone_in_eps(pants222):
    state = le.ExpansionState(pants222, 3, u=0.4, l=0.8, alpha=1.0)
    vals = [le.lambda_value(state, e) for e in (1e-2, 3e-3, 1e-3, 3e-4)]
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))


def test_lambda_invariant_under_full_period(pants222):
    L = pants222.boundary_lengths[0]
    s1 = le.ExpansionState(pants222, 1, u=0.2, l=1.1, alpha=1.2)
    s2 = le.ExpansionState(pants222, 1, u=0.2 + L, l=1.1, alpha=1.2)
    assert abs(le.lambda_value(s1, 1e-3) - le.lambda_value(s2, 1e-3)) < 1e-8


def test_lambda_requires_positive_l(pants222):
    with pytest.raises(ValueError):
        le.lambda_value(le.ExpansionState(pants222, 1, u=0.0, l=0.0), 1e-3)
    with pytest.raises(ValueError):
        le.ExpansionState(pants222, 1, u=0.0, l=1.0, alpha=0.0)


def test_sweep_rows_and_chain(pants222):
    l_grid, alpha_grid, u_fracs = le.default_grids(pants222)
    table = le.lemma_sweep(pants222, l_grid, alpha_grid, u_fracs, eps=1e-3)
    assert len(table.rows) == len(l_grid) * len(alpha_grid) * len(u_fracs) * 3
    for r in table.rows:
        assert r.lam >= r.sum_tau - 1e-12
        assert r.lam >= (math.exp(r.delta0_hat) - 1.0) * r.m0_hat + r.sum_tau - 1e-9
    assert table.lambda0_hat > 1.0


def test_sweep_chain_holds_below_default_grid(pants222):
    # smaller l and steeper alphas: the chain inequality still holds row-wise
    # even where the truncated gain functional itself drops below 1
    table = le.lemma_sweep(
        pants222,
        l_grid=[0.5, 1.0],
        alpha_grid=np.linspace(0.4, math.pi / 2, 3),
        u_samples=[0.25, 0.75],
        eps=1e-3,
    )
    for r in table.rows:
        assert r.lam >= (math.exp(r.delta0_hat) - 1.0) * r.m0_hat + r.sum_tau - 1e-9


def test_sweep_csv_shape_and_determinism(pants222):
    kw = dict(
        l_grid=[1.0, 2.0],
        alpha_grid=[1.0, math.pi / 2],
        u_samples=[0.25, 0.75],
        eps=3e-3,
    )
    t1 = le.lemma_sweep(pants222, **kw)
    t2 = le.lemma_sweep(pants222, **kw)
    csv1, csv2 = t1.to_csv(), t2.to_csv()
    assert csv1 == csv2
    lines = csv1.strip().split("\n")
    assert lines[0] == "l,alpha,u,lambda,sum_tau,m0_hat,delta0_hat"
    assert len(lines) == 1 + len(t1.rows)
    assert all(len(line.split(",")) == 7 for line in lines[1:])
