import math

import numpy as np
import pytest

import cmaudit


def sine(freq, amp, seconds, fs=16000):
    t = np.arange(int(round(seconds * fs))) / fs
    return amp * np.sin(2 * np.pi * freq * t)


def test_reference_sine_loudness():
    assert abs(cmaudit.measure_loudness(sine(997.0, 1.0, 5.0)) + 3.01) <= 0.1


def test_interventions_keep_length_and_range():
    rng = np.random.default_rng(0)
    x = np.clip(0.1 * rng.standard_normal(16000), -1, 1)
    outs = [
        cmaudit.mu_law(x),
        cmaudit.add_white_noise(x, 10.0, seed=3),
        cmaudit.loudness_normalize(x, -23.0),
        cmaudit.zero_nonspeech(x, 1.0, seed=1),
        cmaudit.codec_degrade(x, 64),
    ]
    for y in outs:
        assert y.shape == x.shape
        assert np.all(np.abs(y) <= 1.0)
    assert np.array_equal(cmaudit.add_white_noise(x, 10.0, seed=3), outs[1])


def test_wav_round_trip(tmp_path):
    x = np.arange(-100, 100) / 32768.0
    cmaudit.write_pcm(x, 16000, tmp_path / "a.wav")
    y, fs = cmaudit.read_pcm(tmp_path / "a.wav")
    assert fs == 16000
    assert np.array_equal(x, y)


def test_eer_and_errors():
    assert cmaudit.eer([0, 1, 2, 3], [0, 0, 1, 1]) == 0.0
    assert cmaudit.eer([0, 1, 2, 3], [1, 1, 0, 0]) == 1.0
    with pytest.raises(cmaudit.Error):
        cmaudit.eer([0.0, 1.0], [1, 1])


def test_lfcc_and_gmm():
    rng = np.random.default_rng(1)
    feats = cmaudit.lfcc(0.1 * rng.standard_normal(16000))
    assert feats.shape == (99, 60)
    model, history = cmaudit.train_gmm(feats, num_components=2, seed=4)
    assert np.isclose(model.weights.sum(), 1.0)
    assert all(b >= a - 1e-9 for a, b in zip(history, history[1:]))
    assert cmaudit.llr_score(feats, model, model) == 0.0


def test_regression_recovers_planted_model():
    data = cmaudit.gen_scores(0.0, 1.0, -0.5, 0.5, 0.0, trials_per_cell=20)
    fit = cmaudit.fit_full(data["scores"], data["labels"], data["delta_bona"], data["delta_spf"])
    assert abs(fit["beta_spf"]["estimate"] - 0.5) < 1e-12
    assert abs(fit["beta_bona"]["estimate"] + 0.5) < 1e-12
    c = cmaudit.fit_constrained(data["scores"], data["labels"], data["delta_bona"], data["delta_spf"])
    assert abs(c["beta_spf"]["estimate"] - 0.5) < 1e-12
    assert cmaudit.deltas(1, "A") == (0.0, 1.0)


def test_seed_is_stable():
    assert cmaudit.derive_seed(0, "", "", "") == 0xB866C305C9207E99


def test_tiny_pipeline(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        """{"master_seed": 3,
            "corpus": {"synthetic": {"train_bona": 3, "train_spoof": 3, "eval_bona": 3, "eval_spoof": 3,
                                     "speech_min_s": 0.3, "speech_max_s": 0.4}},
            "interventions": ["mu_law"], "configurations": ["O", "A"],
            "cm": {"components": 2, "max_iterations": 5}}"""
    )
    out = tmp_path / "out"
    cmaudit.run(cfg, output_dir=out)
    rows = cmaudit.eer_table(cfg, output_dir=out)
    assert [r[:2] for r in rows] == [("baseline", "O"), ("mu_law", "O"), ("mu_law", "A")]
    assert all(0.0 <= r[2] <= 1.0 for r in rows)
    assert (out / "results" / "report.md").exists()
    with pytest.raises(cmaudit.ParseError):
        bad = tmp_path / "bad.json"
        bad.write_text('{"master_seed": 1, "corpus": {"synthetic": {}}, "typo": 1}')
        cmaudit.run(bad)
