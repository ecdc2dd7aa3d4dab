"""Emotion embedding pipeline: per-class disentangled autoencoder blocks,
multiblock PLS alignment, and the surrounding evaluation machinery."""

from ._edrlmea import (  # noqa: F401
    EdrlmeaError,
    EdrlModel,
    MbplsModel,
    RandomForestModel,
    __version__,
    binarize_rating,
    f1_binary,
    fit_forest,
    fit_mbpls,
    load_edrl,
    load_forest,
    load_mbpls,
    map_categorical_to_av,
    measure_snr,
    mix_at_snr,
    train_edrl,
    undersample_majority,
)
