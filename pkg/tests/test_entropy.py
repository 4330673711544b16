import json
import math

import numpy as np
import pytest

from graphentropy import entropy as en
from graphentropy import manifold as mf
from graphentropy import walltree as wt


@pytest.fixture(scope="module")
def spec():
    return mf.load_manifold(mf.two_pants_example())


CONFIG = ("P", 1, 0.0, 0.0)


def test_pn_decreasing_in_t(spec):
    values = [en.pn_at(spec, CONFIG, 1, t, eps=1e-2) for t in (0.8, 1.0, 1.3)]
    assert values[0] > values[1] > values[2]


def test_p0_against_angle_tail(spec):
    summaries, _ = wt.build_levels(spec, "P", 1, n_max=0, eps=1e-4)
    tail = summaries[0].psi_tail
    p0 = en.pn_at(spec, CONFIG, 0, 1.0, eps=1e-4)
    assert p0 >= math.pi / 4.0 - tail - 1e-12


def test_pn_against_observed_rate(spec):
    summaries, _, level_L = wt.build_levels(
        spec, "P", 1, n_max=2, eps=1e-3, beam=None, scale_eps=True,
        return_level_L=True
    )
    tail = summaries[0].psi_tail
    lam = min(
        s.lambda_min_observed
        for s in summaries
        if not math.isnan(s.lambda_min_observed)
    )
    p2 = float(np.sum(np.exp(-level_L)))
    assert p2 >= (math.pi / 4.0 - tail) * lam**2 - 1e-9


def test_sample_configs_deterministic_and_budgeted(spec):
    a = en.sample_configs(spec, 1, config_budget=8)
    b = en.sample_configs(spec, 1, config_budget=8)
    assert a == b
    assert len(a) <= 8
    pairs = {(c[0], c[1]) for c in a}
    assert pairs == {
        (blk.block_id, cls.class_id)
        for blk in spec.blocks
        for cls in blk.surface.boundary_classes
    }
    assert len(en.sample_configs(spec, 1, config_budget=3)) == 3


def test_certify_monotone_in_h(spec):
    lo, tested_lo = en.certify(spec, 1, 1.0, eps=1e-2, config_budget=4)
    hi, tested_hi = en.certify(spec, 1, 1.3, eps=1e-2, config_budget=4)
    assert hi <= lo
    assert len(tested_lo) == len(tested_hi) == 4
    for t in tested_lo:
        assert t["margin"] >= lo
        assert set(t) >= {"block", "class", "u", "r", "margin"}


def test_certify_rejects_bad_exponent(spec):
    with pytest.raises(ValueError):
        en.certify(spec, 1, 0.0, eps=1e-2)
    with pytest.raises(ValueError):
        en.pn_at(spec, CONFIG, -1, 1.0, eps=1e-2)


def test_coarse_truncation_reports_floor(spec):
    report = en.best_bound(
        spec, n_list=(1, 2), eps=0.5, beam=50, config_budget=2
    )
    assert report.h_bar == 1.0
    assert any("truncation too coarse" in c for c in report.caveats)
    parsed = json.loads(report.to_json())
    assert parsed["schema"] == 1
    assert parsed["h_bar"] == 1.0
    assert "truncation too coarse" in report.text_summary()


def test_report_invariants():
    with pytest.raises(ValueError):
        en.EntropyReport(
            h_bar=1.1, n=2, epsilon=1e-3, beam=None, depth_cap=64,
            configs_tested=[], min_margin=0.9, lambda0_hat=1.0,
        )
    with pytest.raises(ValueError):
        en.EntropyReport(
            h_bar=2.5, n=2, epsilon=1e-3, beam=None, depth_cap=64,
            configs_tested=[], min_margin=1.5, lambda0_hat=1.0,
        )
    rep = en.EntropyReport(
        h_bar=1.05, n=2, epsilon=1e-3, beam=None, depth_cap=64,
        configs_tested=[{"block": "P", "class": 1, "u": 0.0, "r": 0.0,
                         "margin": 1.2}],
        min_margin=1.2, lambda0_hat=1.06, caveats=["sampled"], n_list=(2,),
    )
    parsed = json.loads(rep.to_json())
    assert parsed["min_margin"] == 1.2
    assert parsed["configs_tested"][0]["block"] == "P"
    assert "h >= 1.05" in rep.text_summary()


def test_best_bound_validates_levels(spec):
    with pytest.raises(ValueError):
        en.best_bound(spec, n_list=(0,), eps=1e-2)
    with pytest.raises(ValueError):
        en.best_bound(spec, h_lo=1.5, h_hi=1.0, eps=1e-2)
