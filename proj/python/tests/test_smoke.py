import math

import numpy as np
import pytest

import normscale as ns


def test_fit_and_norm_scale():
    logits = np.array([[1.0, 2.0], [3.0, 2.0], [5.0, 2.0]])
    stats = ns.fit_class_stats(logits)
    assert stats.num_classes == 2
    assert stats.mu == pytest.approx([3.0, 2.0])
    assert stats.sigma[0] == pytest.approx(math.sqrt(8.0 / 3.0))
    assert stats.sigma[1] == 0.0
    assert ns.norm_scale([5.0, 2.0], stats)[1] == 0.0
    assert ns.tau_norm_scale([5.0, 2.0], stats, 1.0) == ns.norm_scale([5.0, 2.0], stats)
    assert ns.temperature_scale([2.0, -4.0], 2.0) == [1.0, -2.0]


def test_fit_rejects_empty_input():
    with pytest.raises(ns.NormscaleError):
        ns.fit_class_stats(np.zeros((0, 3)))


def test_streaming_state():
    stats = ns.fit_class_stats(np.array([[0.0, 1.0], [2.0, 3.0]]))
    state = ns.stream_init(stats, ns.StreamMode.literal)
    assert state.t == 0
    state = ns.stream_update(state, [4.0, 4.0])
    assert state.t == 1
    assert state.mu_t[0] == pytest.approx((1.0 + 4.0) / 2.0)


def test_scores():
    cls, score = ns.msp_score([10.0, 0.0])
    assert cls == 0
    assert score == pytest.approx(0.9999546021312976, abs=1e-15)
    assert ns.softmax([0.0, 0.0]) == [0.5, 0.5]
    assert ns.energy_score([0.0, 0.0]) == pytest.approx(math.log(2.0))


def test_metrics_examples():
    assert ns.auroc([0.9, 0.8], [0.1, 0.2]) == 1.0
    assert ns.auroc([0.5], [0.5]) == 0.5
    assert ns.aupr([0.9, 0.8], [0.1, 0.2]) == 1.0
    assert ns.fpr_at_tpr([0.9, 0.8], [0.1, 0.2]) == 0.0
    roc = ns.roc_points([0.9, 0.8], [0.1, 0.2])
    assert roc[0] == (0.0, 0.0)
    assert roc[-1] == (1.0, 1.0)
    assert ns.expected_calibration_error([0.5, 0.5], [True, False]) == 0.0


def test_score_stream_on_synthetic_data(tmp_path):
    (train, _), (in_x, _), (ood_x, _) = ns.generate_fig1_like(seed=1)
    assert train.shape == (5000, 3)
    stats = ns.fit_class_stats(train)
    logits = np.vstack([in_x[:200], ood_x[:200]])
    origins = ["in_test"] * 200 + ["ood_test"] * 200
    cls, score = ns.score_stream(logits, origins, stats, scaling="norm", stats_mode="running-standard")
    assert cls.shape == (400,)
    assert np.all((score > 1.0 / 3.0) & (score <= 1.0))
    value = ns.auroc(score[:200].tolist(), score[200:].tolist())
    assert 0.5 < value <= 1.0
    with pytest.raises(ns.NormscaleError):
        ns.score_stream(logits, origins, stats, scaling="bogus")


def test_logit_file_round_trip(tmp_path):
    logits = np.array([[1.5, -2.25, 3.0], [0.0, 7.0, -1.0]], dtype=np.float32)
    labels = [2, -1]
    for name in ("a.bin", "a.csv"):
        path = tmp_path / name
        ns.write_logits(path, logits, labels)
        back, back_labels = ns.read_logits(path)
        assert np.array_equal(back, logits.astype(np.float64))
        assert back_labels.tolist() == labels
    with pytest.raises(ns.NormscaleError):
        ns.read_logits(tmp_path / "missing.bin")
