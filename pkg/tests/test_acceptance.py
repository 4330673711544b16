"""Acceptance gate: the ten criteria the artifact must meet.

Each test prints an explicit [PASS]/[FAIL] line on the real stdout (past
pytest capture) so the acceptance record is visible in any run log.
Criterion 4's lower clause at eps = 1e-4 is a documented honest failure:
the enumeration is provably complete at that cutoff and the angle-sum
deficit (about 0.049) is intrinsic to the cutoff, not a bug; see the
companion decisions ledger.  The same clause passes at eps = 1e-5.
"""
import json
import math
import os
import sys
import time

import numpy as np
import pytest

from graphentropy import cli
from graphentropy import entropy as en
from graphentropy import hyperboloid as hyp
from graphentropy import local_estimate as le
from graphentropy import manifold as mf
from graphentropy import surface as sf
from graphentropy import walltree as wt

RNG = np.random.default_rng(20260826)
SAMPLE = os.path.join(os.path.dirname(__file__), os.pardir, "demos", "two_pants.json")


_CAPMAN = [None]


@pytest.fixture(scope="session", autouse=True)
def _grab_capture_manager(request):
    _CAPMAN[0] = request.config.pluginmanager.getplugin("capturemanager")


def report(criterion, ok, detail):
    line = "[%s] criterion %s: %s" % ("PASS" if ok else "FAIL", criterion, detail)
    capman = _CAPMAN[0]
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print(line, file=sys.__stdout__)
            sys.__stdout__.flush()
    else:
        print(line, file=sys.__stdout__)
        sys.__stdout__.flush()
    assert ok, line


@pytest.fixture(scope="module")
def spec():
    return mf.load_manifold(mf.two_pants_example())


@pytest.fixture(scope="module")
def pants222(spec):
    return spec.block("P").surface


def test_criterion_01_parallelism_identity():
    t0 = time.monotonic()
    d = RNG.uniform(0.01, 12.0, size=10_000)
    psi = hyp.visual_angle(d)
    err = np.max(np.abs(np.exp(d) * np.tan(psi / 4.0) - 1.0))
    dt = time.monotonic() - t0
    report(1, err < 1e-12 and dt < 1.0,
           "angle-of-parallelism identity max err %.3g in %.2fs" % (err, dt))


def _delta_oracle(l, d, alpha):
    """Explicit product-space construction on the standard line {x2 = 0}."""
    line = hyp.HLine(np.array([0.0, 0.0, 1.0]))
    foot = np.array([1.0, 0.0, 0.0])
    o = hyp.erect_perpendicular(line, foot, l)
    q_full = hyp.point_at_arclength(line, foot, d)
    q_part = hyp.point_at_arclength(line, foot, d * math.cos(alpha))
    full = hyp.dist_h2(o, q_full)
    tilted = math.hypot(hyp.dist_h2(o, q_part), d * math.sin(alpha))
    return max(0.0, full - tilted)


def test_criterion_02_delta_oracle():
    t0 = time.monotonic()
    ls = RNG.uniform(0.05, 5.0, size=1000)
    ds = RNG.uniform(0.05, 8.0, size=1000)
    als = RNG.uniform(0.05, math.pi / 2.0, size=1000)
    worst = 0.0
    for l, d, a in zip(ls, ds, als):
        got = float(hyp.delta_correction(l, d, a))
        worst = max(worst, abs(got - _delta_oracle(l, d, a)))
    degenerate = [
        float(hyp.delta_correction(0.0, 3.0, 1.0)),
        float(hyp.delta_correction(2.0, 0.0, 1.0)),
        float(hyp.delta_correction(0.0, 0.0, math.pi / 2.0)),
    ]
    dt = time.monotonic() - t0
    report(2, worst < 1e-10 and all(v == 0.0 for v in degenerate) and dt < 5.0,
           "delta oracle max err %.3g, degenerate cases exactly 0, %.1fs"
           % (worst, dt))


def test_criterion_03_pants_construction():
    t0 = time.monotonic()
    worst_len, worst_seam = 0.0, 0.0
    for lengths in ((2.0, 2.0, 2.0), (1.0, 2.0, 3.0), (4.0, 4.0, 1.0)):
        surface = sf.build_pants(sf.PantsParams(*lengths))
        third = surface.boundary_class(3)
        worst_len = max(worst_len, abs(third.translation_length - lengths[2]))
        axes = [surface.boundary_class(k).axis for k in (1, 2, 3)]
        for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            li, lj, lk = lengths[i] / 2, lengths[j] / 2, lengths[k] / 2
            # right-angled hexagon: side between the i and j boundary sides
            want = math.acosh(
                (math.cosh(lk) + math.cosh(li) * math.cosh(lj))
                / (math.sinh(li) * math.sinh(lj))
            )
            got = hyp.line_pair_distance(axes[i], axes[j])
            worst_seam = max(worst_seam, abs(got - want))
    dt = time.monotonic() - t0
    report(3, worst_len < 1e-9 and worst_seam < 1e-9 and dt < 1.0,
           "closing length err %.3g, seam err %.3g, %.2fs"
           % (worst_len, worst_seam, dt))


def test_criterion_04_angle_sum_upper_and_convergence(pants222):
    t0 = time.monotonic()
    sums = {}
    for eps in (1e-4, 1e-5):
        batch = sf.sight_batch(pants222, 1, u=0.0, l=0.0, eps=eps)
        sums[eps] = float(np.sum(batch.psi))
    dt = time.monotonic() - t0
    ok = (
        all(s <= math.pi + 1e-6 for s in sums.values())
        and sums[1e-5] > sums[1e-4]
        and sums[1e-5] >= math.pi - 0.02
        and dt < 60.0
    )
    report("4 (upper + convergence)", ok,
           "angle sums %.6f (1e-4), %.6f (1e-5) vs pi = %.6f, %.1fs"
           % (sums[1e-4], sums[1e-5], math.pi, dt))


def test_criterion_04_angle_sum_lower_at_1e4_documented_red(pants222):
    """Honest failure: the criterion's eps = 1e-4 lower clause is unattainable.

    The wall enumeration at this cutoff is complete (verified against an
    unpruned word search), and the missing angle mass ~0.049 belongs to
    walls each seen under less than eps; it scales like eps^0.44 and the
    clause holds one decade later (eps = 1e-5, tested above).
    """
    batch = sf.sight_batch(pants222, 1, u=0.0, l=0.0, eps=1e-4)
    total = float(np.sum(batch.psi))
    report("4 (lower at eps=1e-4, documented red)", total >= math.pi - 0.02,
           "angle sum %.6f vs required >= %.6f; intrinsic cutoff deficit, "
           "see decisions ledger" % (total, math.pi - 0.02))


@pytest.fixture(scope="module")
def sweep(pants222):
    grids = le.default_grids(pants222)
    t0 = time.monotonic()
    table = le.lemma_sweep(pants222, *grids, eps=1e-3)
    return table, time.monotonic() - t0


def test_criterion_05_gain_functional(sweep):
    table, dt = sweep
    worst = 0.0
    for row in table.rows:
        chain = (math.exp(row.delta0_hat) - 1.0) * row.m0_hat + row.sum_tau
        worst = max(worst, chain - row.lam)
    ok = table.lambda0_hat > 1.0 and worst < 1e-9 and dt < 300.0
    report(5, ok,
           "lambda0_hat = %.6f > 1, chain slack %.3g over %d rows, %.1fs"
           % (table.lambda0_hat, worst, len(table.rows), dt))


def test_criterion_06_level_sum_consistency(spec):
    t0 = time.monotonic()
    summaries, _ = wt.build_levels(
        spec, "P", 1, n_max=4, eps=1e-3, beam=None, max_nodes=30_000_000
    )
    dt = time.monotonic() - t0
    assert not summaries[-1].truncated
    worst = 0.0
    for prev, cur in zip(summaries, summaries[1:]):
        if math.isnan(cur.lambda_min_observed):
            continue
        worst = max(
            worst, prev.p_hat[1.0] * cur.lambda_min_observed - cur.p_hat[1.0]
        )
    root_ok = summaries[0].p_hat[1.0] >= math.pi / 4.0 - summaries[0].psi_tail
    report(6, worst < 1e-9 and root_ok and dt < 300.0,
           "chain slack %.3g over %d levels, P0 = %.4f >= pi/4 - %.4f, %.1fs"
           % (worst, len(summaries), summaries[0].p_hat[1.0],
              summaries[0].psi_tail, dt))


def test_criterion_07_soundness_oracles(spec):
    t0 = time.monotonic()
    root = wt.make_root_node(spec, "P", 1)
    children, _ = wt.expand_node(root, spec, eps=1e-3)
    surface = spec.block("P").surface
    cls = surface.boundary_class(1)
    observer = hyp.point_at_arclength(cls.axis, cls.arc_origin, 0.0)
    worst1 = max(
        abs(c.state.L - hyp.dist_to_line(observer, c.own_line)) for c in children
    )
    children.sort(key=lambda w: w.state.L)
    pool = []
    for child in children[:12]:
        grand, _ = wt.expand_node(child, spec, eps=1e-3)
        pool.extend(grand)
    step = max(1, len(pool) // 100)
    sampled = pool[::step][:100]
    worst2 = -float("inf")
    count = 0
    for g in sampled:
        d = wt.distance_lower_bound_check(g, spec, samples=2)
        worst2 = max(worst2, d - g.state.L)
        count += 1
    dt = time.monotonic() - t0
    ok = worst1 < 1e-8 and worst2 <= 1e-6 and count >= 100 and dt < 120.0
    report(7, ok,
           "depth-1 err %.3g, depth-2 oracle excess %.3g over %d nodes, %.1fs"
           % (worst1, worst2, count, dt))


@pytest.fixture(scope="module")
def headline(tmp_path_factory):
    out = tmp_path_factory.mktemp("entropy") / "report.json"
    t0 = time.monotonic()
    code = cli.main(
        ["entropy-bound", SAMPLE, "--out", str(out)]
    )
    dt = time.monotonic() - t0
    return code, json.loads(out.read_text()), dt


def test_criterion_08_entropy_headline(spec, headline):
    code, rep, dt = headline
    h_bar, n = rep["h_bar"], rep["n"]
    recheck, _ = en.certify(
        spec, n, h_bar, eps=rep["epsilon"], beam=rep["beam"],
        config_budget=len(rep["configs_tested"]),
    )
    ok = (
        code == cli.EXIT_OK
        and 1.0 < h_bar <= 2.0
        and rep["min_margin"] >= 1.0
        and recheck >= 1.0
        and dt < 900.0
    )
    report(8, ok,
           "h_bar = %.6f at n = %d, min margin %.6f, recheck %.6f, %.0fs"
           % (h_bar, n, rep["min_margin"], recheck, dt))


def test_criterion_09_monotone_certification(spec, headline):
    _, rep, _ = headline
    t0 = time.monotonic()
    finer = en.best_bound(
        spec, eps=rep["epsilon"] / 2.0, beam=rep["beam"] * 2,
        config_budget=len(rep["configs_tested"]),
    )
    dt = time.monotonic() - t0
    ok = finer.h_bar >= rep["h_bar"] - 1e-9 and dt < 1800.0
    report(9, ok,
           "h_bar %.6f (eps/2, beam*2) vs %.6f, %.0fs"
           % (finer.h_bar, rep["h_bar"], dt))


def test_criterion_10_determinism(spec, tmp_path):
    t0 = time.monotonic()
    outputs = {}
    for kind, argv in {
        "series": ["series", SAMPLE, "--n", "2", "--eps",
                   "1e-2", "--beam", "500"],
        "sweep": ["lemma-sweep", SAMPLE],
        "entropy": ["entropy-bound", SAMPLE, "--eps", "1e-2",
                    "--beam", "100", "--n-list", "1", "2",
                    "--config-budget", "2"],
    }.items():
        pair = []
        for run in (0, 1):
            out = tmp_path / ("%s_%d" % (kind, run))
            assert cli.main(argv + ["--out", str(out)]) in (
                cli.EXIT_OK, cli.EXIT_TOO_COARSE
            )
            pair.append(out.read_bytes())
        outputs[kind] = pair[0] == pair[1]
    dt = time.monotonic() - t0
    report(10, all(outputs.values()),
           "byte-identical reruns: %s, %.0fs" % (outputs, dt))
