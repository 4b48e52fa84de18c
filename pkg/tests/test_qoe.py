import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qoeplan.curve import ModelMeta, SynthCurveSpec, TrainingTrace, synth_trace
from qoeplan.errors import NonpositiveScale, WeightsNotNormalized
from qoeplan.qoe import (
    DEFAULT_SCALES,
    W1,
    W2,
    W3,
    FactorScale,
    FactorVector,
    QoeScales,
    QoeWeights,
    dump_weights_scales,
    experience_curve,
    factor_experience,
    load_weights_scales,
    model_experience,
    total_experience,
)

BL = ModelMeta("BL", 14.0, t_load=15.0, t_test=0.2335)


def test_factor_examples():
    assert factor_experience(5.0, 5.0, 2.0) == 1.0
    assert factor_experience(7.0, 5.0, 2.0) == pytest.approx(0.367879, abs=1e-6)
    assert factor_experience(1.0, 5.0, 2.0) == 1.0


def test_factor_rejects_bad_scale():
    for s in (0.0, -1.0):
        with pytest.raises(NonpositiveScale):
            factor_experience(1.0, 0.0, s)
    with pytest.raises(NonpositiveScale):
        FactorScale(0.0, 0.0)


def test_factor_stays_positive_far_out():
    assert factor_experience(1e9, 0.0, 1.0) > 0


def test_weights_must_sum_to_one():
    with pytest.raises(WeightsNotNormalized):
        QoeWeights(0.2, 0.2, 0.2, 0.2, 0.3)
    with pytest.raises(WeightsNotNormalized):
        QoeWeights(-0.1, 0.3, 0.3, 0.3, 0.2)
    QoeWeights(0.2, 0.2, 0.2, 0.2, 0.2 + 5e-10)


def test_bundled_weight_vectors_are_valid():
    for w in (W1, W2, W3):
        assert math.fsum(w.as_array()) == pytest.approx(1.0, abs=1e-12)


def test_total_examples():
    ones = FactorVector(1, 1, 1, 1, 1)
    halves = FactorVector(0.5, 0.5, 0.5, 0.5, 0.5)
    for w in (W1, W2, W3):
        assert total_experience(ones, w) == pytest.approx(1.0, abs=1e-15)
        assert total_experience(halves, w) == pytest.approx(0.5, abs=1e-15)


def test_hand_dot_product():
    factors = FactorVector(0.8, 0.7, 0.5, 0.9, 0.6)
    assert total_experience(factors, W1) == pytest.approx(0.595, abs=1e-12)
    assert total_experience(factors, [0.1, 0.1, 0.5, 0.05, 0.25]) == pytest.approx(0.595, abs=1e-12)


def test_factor_vector_bounds():
    with pytest.raises(ValueError):
        FactorVector(0.0, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        FactorVector(1.1, 1, 1, 1, 1)


def _flat_trace(mae, mse, n=1000):
    return TrainingTrace.from_arrays([0.1] * n, [mae] * n, [mse] * n, meta=BL)


def test_bl_at_full_training():
    factors, e_all = model_experience(_flat_trace(89.38, 161.67), BL, 1000, W1, DEFAULT_SCALES)
    expected = [
        math.exp(-9.38 / 50),
        math.exp(-11.67 / 100),
        math.exp(-4 / 20),
        math.exp(-5 / 20),
        math.exp(-0.1335 / 0.5),
    ]
    assert factors.as_array() == pytest.approx(expected, abs=1e-12)
    assert [round(x, 4) for x in expected] == [0.8289, 0.8899, 0.8187, 0.7788, 0.7657]
    oracle = math.fsum(w * e for w, e in zip(W1.as_array(), expected))
    assert e_all == pytest.approx(oracle, abs=1e-12)
    assert e_all == pytest.approx(0.811604, abs=1e-6)


def test_everything_within_reference_gives_one():
    meta = ModelMeta("tiny", 5.0, t_load=1.0, t_test=0.05)
    _, e_all = model_experience(_flat_trace(50.0, 100.0), meta, 1000, W2, DEFAULT_SCALES)
    assert e_all == 1.0


def test_epoch_monotonicity_of_factors():
    trace = synth_trace(SynthCurveSpec(400, 60, 200, noise_sigma=8.0, seed=3), BL)
    rows = [model_experience(trace, BL, e, W2)[0] for e in range(1, 1001, 7)]
    mae = [f.e_mae for f in rows]
    mse = [f.e_mse for f in rows]
    train = [f.e_train for f in rows]
    assert all(b >= a for a, b in zip(mae, mae[1:]))
    assert all(b >= a for a, b in zip(mse, mse[1:]))
    assert all(b <= a for a, b in zip(train, train[1:]))


def test_experience_curve_matches_pointwise():
    trace = synth_trace(SynthCurveSpec(300, 100, 100, length=1000), BL)
    epochs = [1, 250, 500, 1000]
    curve = experience_curve(trace, BL, W3, epochs=epochs)
    assert curve.tolist() == [model_experience(trace, BL, e, W3)[1] for e in epochs]


def test_json_round_trip(tmp_path):
    path = tmp_path / "ws.json"
    path.write_text(dump_weights_scales(W2, DEFAULT_SCALES))
    weights, scales = load_weights_scales(path)
    assert weights == W2 and scales == DEFAULT_SCALES
    doc = json.loads(path.read_text())
    assert set(doc["weights"]) == {"mae", "mse", "train", "load", "test"}
    assert doc["scales"]["train"] == {"v0": 10.0, "s": 20.0}


def test_bundled_files_match_constants():
    from qoeplan.problem_io import data_path

    for name, w in (("w1", W1), ("w2", W2), ("w3", W3)):
        assert load_weights_scales(data_path(f"weights_{name}.json"))[0] == w
    assert load_weights_scales(data_path("default_scales.json"))[1] == DEFAULT_SCALES


# ---- properties -----------------------------------------------------------

values = st.floats(0, 1e4, allow_nan=False)
refs = st.floats(0, 1e3, allow_nan=False)
widths = st.floats(1e-3, 1e3, allow_nan=False)
unit = st.floats(1e-6, 1.0)


@st.composite
def weight_vectors(draw):
    raw = np.array([draw(st.floats(0, 1)) for _ in range(5)]) + 1e-9
    w = raw / raw.sum()
    w[-1] = 1.0 - math.fsum(w[:-1])
    return QoeWeights.from_sequence(np.maximum(w, 0.0))


@settings(max_examples=500, deadline=None)
@given(values, values, refs, widths)
def test_factor_monotone_in_value(a, b, v0, s):
    lo, hi = min(a, b), max(a, b)
    assert 0 < factor_experience(hi, v0, s) <= factor_experience(lo, v0, s) <= 1


@settings(max_examples=500, deadline=None)
@given(values, refs, widths, widths)
def test_factor_monotone_in_scale(v, v0, s1, s2):
    lo, hi = min(s1, s2), max(s1, s2)
    assert factor_experience(v, v0, lo) <= factor_experience(v, v0, hi)


@settings(max_examples=300, deadline=None)
@given(weight_vectors(), st.lists(unit, min_size=5, max_size=5), st.lists(unit, min_size=5, max_size=5),
       st.floats(0, 1))
def test_total_is_linear_and_bounded(w, fa, fb, t):
    a, b = FactorVector(*fa), FactorVector(*fb)
    mixed = FactorVector(*(t * x + (1 - t) * y for x, y in zip(fa, fb)))
    ea, eb = total_experience(a, w), total_experience(b, w)
    assert 0 < ea <= 1 + 1e-12
    assert total_experience(mixed, w) == pytest.approx(t * ea + (1 - t) * eb, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(values, values, refs, widths, st.floats(0.01, 100))
def test_common_rescale_preserves_order(m1, m2, v0, s, k):
    before = factor_experience(m1, v0, s) - factor_experience(m2, v0, s)
    after = factor_experience(m1, v0, s * k) - factor_experience(m2, v0, s * k)
    if before != 0 and after != 0:
        assert (before > 0) == (after > 0)


def test_scaled_scales():
    doubled = DEFAULT_SCALES.scaled(2.0)
    assert doubled.mae == FactorScale(80.0, 100.0)
    assert isinstance(doubled, QoeScales)
