"""Neuromorphic fabric simulator and Gallager-B decoder compiler."""

from .compiler import (
    DecoderLayout,
    Variant,
    compile,
    decode_words,
    iteration_threshold,
    make_word_schedule,
    predicted_ticks,
)
from .engine import kernel_name
from .fabric import CapacityError, ConfigError, GridConfig
from .gab import DecoderParams, HMatrix, gab_decode, make_dataset, make_example8

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ConfigError",
    "DecoderLayout",
    "DecoderParams",
    "GridConfig",
    "HMatrix",
    "Variant",
    "compile",
    "decode_words",
    "gab_decode",
    "iteration_threshold",
    "kernel_name",
    "make_dataset",
    "make_example8",
    "make_word_schedule",
    "predicted_ticks",
]
