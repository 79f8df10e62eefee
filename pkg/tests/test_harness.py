import itertools
import math
import random
from fractions import Fraction
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbexp.channel import ZeroNoise
from fbexp.codec import q_function
from fbexp.errors import InvalidParameterError
from fbexp.harness import (
    CLASS_NAMES,
    CountRecord,
    ErrorBreakdown,
    branch_estimate,
    estimate,
    exact_sum,
    feedback_audit,
    iter_outcomes,
    power_audit,
    simulate_trial,
    wilson_interval,
)
from fbexp.schemes import SchemeConfig, Variant, resolve_config

ANTIPODAL = SchemeConfig(variant=Variant.NO_FEEDBACK, n=1, num_messages=2, P=4.0, codebook="antipodal")
SMALL = SchemeConfig(variant=Variant.TWO_PHASE, n=10, num_messages=8, P=1.0, epsilon=0.3, gamma=0.4)
COMP = SchemeConfig(variant=Variant.COMPRESSED_FB, n=12, num_messages=16, P=1.0, epsilon=0.25,
                    gamma=0.5, num_bins=4)
MULTI = SchemeConfig(variant=Variant.MULTI_PHASE, n=30, num_messages=16, P=1.0, epsilon=0.12, L=3,
                     gammas=(0.05, 0.3))
BM = SchemeConfig(variant=Variant.BLOCK_MARKOV, n=60, num_messages=256, P=1.0, R_FB=0.7, k=3,
                  epsilon=0.2, gamma=0.2)
ALL = [ANTIPODAL, SMALL, COMP, MULTI, BM]


class ShapeFault:
    """Noise source that returns the wrong shape, so every batch fails."""

    def draw(self, shape):
        return np.zeros(3)


def test_wilson_interval_basics():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and (lo + hi) / 2 == pytest.approx(0.5)
    assert wilson_interval(0, 0) == (0.0, 1.0)


@given(st.lists(st.floats(-1e300, 1e300, allow_nan=False) | st.floats(-1e-300, 1e-300), max_size=60))
def test_exact_sum_is_exact_and_order_free(values):
    expected = sum((Fraction(v) for v in values), Fraction(0))
    assert exact_sum(values) == expected
    shuffled = list(values)
    random.Random(0).shuffle(shuffled)
    assert exact_sum(shuffled) == expected


def test_exact_sum_rejects_nonfinite():
    with pytest.raises(InvalidParameterError):
        exact_sum([1.0, math.inf])


@pytest.mark.parametrize("cfg", ALL, ids=lambda c: c.variant.value)
def test_zero_noise_gives_no_errors(cfg):
    b = estimate(cfg, 5000, 1, noise=ZeroNoise())
    assert b.total_error == 0 and b.counts["OK"] == 5000 and b.failed == 0


def test_failed_trials_are_counted():
    b = estimate(SMALL, 5000, 1, noise=ShapeFault())
    assert b.failed == 5000 and b.valid_trials == 0


@pytest.mark.parametrize("cfg", ALL, ids=lambda c: c.variant.value)
def test_breakdown_invariants(cfg):
    b = estimate(cfg, 6000, 3)
    assert sum(b.counts.values()) == b.trials == 6000
    assert b.total_error == pytest.approx(1 - b.frequency("OK"))
    lo, hi = b.total_error_interval
    assert lo <= b.total_error <= hi
    assert sum(int(c) for c in b.subblock_counts.values()) == b.counts["SUBBLOCK_ERROR"]


def test_intervals_shrink_like_inverse_sqrt():
    small = estimate(SMALL, 4000, 5)
    large = estimate(SMALL, 64000, 5)
    w_small = np.diff(small.total_error_interval)[0]
    w_large = np.diff(large.total_error_interval)[0]
    assert w_large / w_small == pytest.approx(0.25, rel=0.15)


def test_determinism_and_seed_variation():
    a = estimate(COMP, 9000, 42)
    b = estimate(COMP, 9000, 42)
    assert a.to_json() == b.to_json()
    c = estimate(COMP, 9000, 43)
    assert c.counts != a.counts
    for name in CLASS_NAMES:
        p = (a.counts[name] + c.counts[name]) / 18000
        sd = math.sqrt(2 * p * (1 - p) / 9000)
        assert abs(a.frequency(name) - c.frequency(name)) <= 4 * sd + 1e-12


def test_worker_count_does_not_change_result():
    a = estimate(MULTI, 10000, 7, workers=1)
    b = estimate(MULTI, 10000, 7, workers=3)
    assert a == b


@pytest.mark.parametrize("cfg", [COMP, BM], ids=lambda c: c.variant.value)
def test_single_trial_reproduces_batch(cfg):
    outcomes = list(iter_outcomes(cfg, 11, 4100))
    for t in (0, 17, 4095, 4099):
        single = simulate_trial(cfg, 11, t)
        assert single.transcript == outcomes[t].transcript
        assert single.transcript.trial == t


def test_count_records_merge_in_any_order():
    outcomes = list(iter_outcomes(COMP, 2, 300))
    per_trial = [CountRecord.from_outcomes([o]) for o in outcomes]
    reference = reduce(CountRecord.merge, per_trial, CountRecord())
    rng = random.Random(1)
    for _ in range(5):
        rng.shuffle(per_trial)
        assert reduce(CountRecord.merge, per_trial, CountRecord()) == reference
    # a tree-shaped merge (as parallel workers would do) gives the same record
    halves = [reduce(CountRecord.merge, per_trial[i::3], CountRecord()) for i in range(3)]
    assert reduce(CountRecord.merge, halves[::-1], CountRecord()) == reference
    assert reference.classes == tuple(
        estimate(COMP, 300, 2).counts[name] for name in CLASS_NAMES
    )


def test_breakdown_json_round_trip_and_nonfinite_tags():
    b = estimate(COMP, 3000, 4)
    extra = branch_estimate(COMP, 200, 4, noise=ZeroNoise()).to_dict()
    b = ErrorBreakdown(**{**b.__dict__, "branch_estimate": extra})
    text = b.to_json()
    assert "NaN" not in text and "Infinity" not in text
    assert '"nonfinite": "nan"' in text
    back = ErrorBreakdown.from_json(text)
    assert back.to_json() == text
    assert math.isnan(back.branch_estimate["factors"]["alarm_miss_given_sent"]["value"])


def test_csv_row_matches_columns():
    b = estimate(MULTI, 2000, 1)
    row = b.csv_row()
    assert len(row) == len(ErrorBreakdown.CSV_COLUMNS)
    assert row[0] == "MULTI_PHASE" and row[5] == "0.05;0.3"


def test_wilson_coverage_antipodal():
    p = q_function(2.0)
    covered = 0
    for seed in range(100):
        b = estimate(ANTIPODAL, 10_000, 1000 + seed)
        lo, hi = b.total_error_interval
        covered += lo <= p <= hi
    assert covered >= 93


def test_branch_estimate_zero_noise_flags_starvation():
    be = branch_estimate(SMALL, 500, 1, noise=ZeroNoise(), max_trials=2000)
    f = be.factors
    assert f["initial_error"].value == 0.0
    assert f["false_alarm_given_correct"].value == 0.0
    assert f["error_given_correct"].value == 0.0
    assert "collision_given_wrong" in be.flagged and f["collision_given_wrong"].starved
    assert be.products["FALSE_NEGATIVE"][0] == 0.0


def test_branch_estimate_rejects_other_variants():
    with pytest.raises(InvalidParameterError):
        branch_estimate(MULTI, 100, 0)


@pytest.mark.parametrize("cfg", [SMALL, COMP], ids=lambda c: c.variant.value)
def test_product_form_agrees_with_direct(cfg):
    direct = estimate(cfg, 200_000, 21)
    be = branch_estimate(cfg, 50_000, 22)
    for name, (value, se) in be.products.items():
        if name == "TOTAL":
            freq, count = direct.total_error, direct.error_count
        else:
            freq, count = direct.frequency(name), direct.counts[name]
        if count < 100:
            continue
        se_direct = math.sqrt(freq * (1 - freq) / direct.valid_trials)
        assert abs(freq - value) <= 3 * math.hypot(se, se_direct), name


def test_power_audit_sphere_code_margin():
    cfg = SchemeConfig(variant=Variant.NO_FEEDBACK, n=8, num_messages=16, P=1.5)
    b = estimate(cfg, 5000, 0)
    audit = power_audit(b, cfg)
    assert audit.passed
    assert b.mean_power == pytest.approx(1.5, rel=1e-14)
    assert audit.margin == pytest.approx(3 * b.power_se, abs=1e-12)


def test_power_audit_detects_undersized_gamma():
    good = resolve_config(SMALL.replace(gamma="pilot", pilot_trials=20000))
    assert power_audit(estimate(good, 20000, 1), good).passed
    bad = good.replace(gamma=good.gamma / 10)
    audit = power_audit(estimate(bad, 20000, 1), bad)
    assert not audit.passed and audit.margin < 0


def test_power_audit_needs_enough_trials():
    b = estimate(SMALL, 999, 0)
    with pytest.raises(InvalidParameterError):
        power_audit(b, SMALL)


def test_feedback_audits():
    for cfg in (SMALL, COMP, MULTI):
        audits = feedback_audit(estimate(cfg, 2000, 0), cfg)
        assert [a.name for a in audits] == ["feedback-total"] and audits[0].passed
    audits = feedback_audit(estimate(BM, 2000, 0), BM)
    assert [a.name for a in audits] == ["feedback-total", "feedback-per-use"]
    assert all(a.passed for a in audits)
    assert audits[1].value == pytest.approx(math.log(2))
