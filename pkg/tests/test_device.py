import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from immsim.device import (DeviceState, Logic, MemristorParams, Transition, TransistorParams,
                           sample_device, switching_decision, switching_decisions)

P = MemristorParams()
volts = st.floats(-10, 10, allow_nan=False)


def hrs(r_on=4e3, r_off=67.5e3):
    return DeviceState(Logic.HRS, r_on, r_off)


def test_defaults_and_midpoints():
    assert (P.r_on_mid, P.r_off_mid) == (4e3, 67.5e3)
    nom = P.nominal()
    assert nom.r_on_min == nom.r_on_max == 4e3
    assert nom.v_set == P.v_set


@pytest.mark.parametrize("kw", [
    dict(r_on_min=0), dict(r_on_min=5e3), dict(r_off_max=60e3), dict(r_on_max=70e3),
    dict(v_set=2.5), dict(v_set=0), dict(t_switch=1.0),
])
def test_param_validation(kw):
    with pytest.raises(ValueError):
        MemristorParams(**kw)


def test_threshold_examples():
    assert switching_decision(hrs(), 1.0, P) is Transition.TO_LRS
    assert switching_decision(hrs(), 0.999, P) is None
    lrs = hrs().with_logic(Logic.LRS)
    assert switching_decision(lrs, -2.0, P) is Transition.TO_HRS
    assert switching_decision(lrs, -1.99, P) is None
    assert switching_decision(lrs, 5.0, P) is None   # already LRS
    assert switching_decision(hrs(), -5.0, P) is None  # already HRS


def test_nan_rejected():
    with pytest.raises(ValueError):
        switching_decision(hrs(), math.nan, P)


@given(volts)
def test_polarity(v):
    # SET only from positive drops, RESET only from negative ones
    if switching_decision(hrs(), v, P) is not None:
        assert v > 0
    if switching_decision(hrs().with_logic(Logic.LRS), v, P) is not None:
        assert v < 0


@given(st.floats(-P.v_reset + 1e-9, P.v_set - 1e-9))
def test_retention_inside_window(v):
    for logic in Logic:
        assert switching_decision(hrs().with_logic(logic), v, P) is None


@given(volts, volts)
def test_monotone_in_voltage(a, b):
    lo, hi = sorted((a, b))
    if switching_decision(hrs(), lo, P) is Transition.TO_LRS:
        assert switching_decision(hrs(), hi, P) is Transition.TO_LRS
    lrs = hrs().with_logic(Logic.LRS)
    if switching_decision(lrs, hi, P) is Transition.TO_HRS:
        assert switching_decision(lrs, lo, P) is Transition.TO_HRS


@given(st.lists(st.tuples(st.booleans(), volts), min_size=1, max_size=20))
def test_vectorized_matches_scalar(cells):
    lrs = np.array([c[0] for c in cells])
    v = np.array([c[1] for c in cells])
    got = switching_decisions(lrs, v, P)
    for (is_lrs, vi), code in zip(cells, got):
        d = switching_decision(hrs().with_logic(Logic(int(is_lrs))), vi, P)
        assert code == (0 if d is None else int(d))


def test_sampling_reproducible_and_in_range():
    a, b = sample_device(P, 11), sample_device(P, 11)
    assert a == b
    assert a.logic is Logic.HRS
    draws = [sample_device(P, s) for s in range(200)]
    assert all(3.5e3 <= d.r_on <= 4.5e3 and 65e3 <= d.r_off <= 70e3 for d in draws)
    assert len({d.r_on for d in draws}) == 200


def test_resistance_follows_logic():
    d = hrs(3.9e3, 66e3)
    assert d.resistance() == 66e3
    assert d.with_logic(Logic.LRS).resistance() == 3.9e3


def test_transistor_gate():
    t = TransistorParams()
    assert t.resistance(2.5) == 100 and t.resistance(2.0) == 1e9
    assert list(t.is_on([0, 2.0, 2.01])) == [False, False, True]
    assert TransistorParams(r_fet_on=0).resistance(3) == 0
    with pytest.raises(ValueError):
        TransistorParams(r_fet_on=-1)
