"""Input validation helpers used across the estimators and filter functions."""

from __future__ import annotations

import zlib

import numpy as np


def as_vector(x, name: str = "x") -> np.ndarray:
    """Coerce `x` to a 1-D float array and check it is non-empty and finite.

    Objects exposing a `.values` attribute (e.g. the TimeSeries container)
    are unwrapped first.
    """
    x = getattr(x, "values", x)
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_matrix(x, name: str = "X") -> np.ndarray:
    """Coerce `x` to a 2-D float array with finite entries."""
    x = getattr(x, "matrix", x)
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_aligned(*arrays, names=None):
    """Raise if the given 1-D arrays do not all share the same length."""
    lengths = [len(a) for a in arrays]
    if len(set(lengths)) > 1:
        labels = names or [f"arg{i}" for i in range(len(arrays))]
        detail = ", ".join(f"{n}={l}" for n, l in zip(labels, lengths))
        raise ValueError(f"series are not aligned: {detail}")


def check_positive(x: np.ndarray, name: str = "x"):
    if np.any(np.asarray(x) <= 0):
        raise ValueError(f"{name} must be strictly positive")


def check_in_range(value, low, high, name: str):
    if not (low < value < high):
        raise ValueError(f"{name} must lie in ({low}, {high}), got {value}")


def derive_seed(base_seed: int, *parts) -> int:
    """Derive a child seed from a base seed and a path of labels/indices.

    String parts are hashed with CRC-32 so the derivation is stable across
    platforms and sessions. Used so that every source of randomness in an
    experiment flows from the single top-level seed.
    """
    words = [int(base_seed) & 0xFFFFFFFF]
    for part in parts:
        if isinstance(part, str):
            words.append(zlib.crc32(part.encode("utf-8")))
        else:
            words.append(int(part) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(words).generate_state(1)[0])
