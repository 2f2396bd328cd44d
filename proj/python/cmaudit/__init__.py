"""Shortcut-learning audit toolkit for audio anti-spoofing countermeasures."""

from ._core import (
    Error,
    GmmModel,
    ParseError,
    add_white_noise,
    codec_bitrates,
    codec_degrade,
    deltas,
    derive_seed,
    detect_nonspeech,
    eer,
    eer_table,
    example_config,
    fit_constrained,
    fit_full,
    gen_scores,
    lfcc,
    llr_score,
    loudness_normalize,
    measure_loudness,
    mu_law,
    perturb,
    read_pcm,
    report,
    run,
    score,
    synth_data,
    train,
    train_gmm,
    write_pcm,
    zero_nonspeech,
)

__version__ = "0.1.0"
