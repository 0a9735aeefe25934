import numpy as np
import pytest

from rotquant import DataError, MassiveMask, ShapeError, detect_massive, ground_truth_mask


def unit_rows_with_spikes(seed=0, tokens=200, dim=64, spikes=(3, 50, 171)):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((tokens, dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x[list(spikes)] *= 100.0
    return x


def test_detects_scaled_rows_at_default_threshold():
    x = unit_rows_with_spikes()
    mask = detect_massive(x)  # tau_rel 15
    assert sorted(mask.indices) == [3, 50, 171]
    assert mask.count == 3
    assert mask.tau_rel == 15.0


def test_scale_equivariance():
    x = unit_rows_with_spikes(seed=4)
    a = detect_massive(x, tau_rel=10.0)
    b = detect_massive(x * 1234.5, tau_rel=10.0)
    assert np.array_equal(a.flags, b.flags)


def test_tau_abs_floor():
    x = unit_rows_with_spikes(seed=5)
    relaxed = detect_massive(x, tau_rel=10.0)
    floored = detect_massive(x, tau_rel=10.0, tau_abs=1e6)
    assert relaxed.count == 3
    assert floored.count == 0
    assert floored.tau_abs == 1e6


def test_tau_rel_must_exceed_one():
    with pytest.raises(ValueError):
        detect_massive(np.ones((4, 2)), tau_rel=1.0)


def test_rejects_bad_shape():
    with pytest.raises(ShapeError):
        detect_massive(np.ones(8))


def test_mask_json_round_trip():
    x = unit_rows_with_spikes(seed=6)
    mask = detect_massive(x, tau_rel=12.0, tau_abs=0.5)
    back = MassiveMask.from_json(mask.to_json())
    assert np.array_equal(back.flags, mask.flags)
    assert back.tau_rel == 12.0
    assert back.tau_abs == 0.5
    assert back.median_linf == mask.median_linf


def test_mask_json_rejects_out_of_range_index():
    with pytest.raises(DataError):
        MassiveMask.from_json('{"tokens": 4, "flagged": [9]}')


def test_mask_json_rejects_garbage():
    with pytest.raises(DataError):
        MassiveMask.from_json("not json at all")
    with pytest.raises(DataError):
        MassiveMask.from_json('{"flagged": [0]}')


def test_ground_truth_mask():
    x = np.ones((6, 3))
    mask = ground_truth_mask(x, [1, 4])
    assert sorted(mask.indices) == [1, 4]
    assert mask.tau_rel is None
    assert mask.count == 2
