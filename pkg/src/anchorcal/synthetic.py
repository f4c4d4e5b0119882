"""Synthetic score/label fixtures with known correctness posteriors."""

from __future__ import annotations

import numpy as np

from .core import rng_for
from .ingest import dataset_from_arrays


def logistic_posterior(s, slope: float = 2.0, offset: float = -1.0):
    """P(C=1 | s) = sigmoid(slope * s + offset)."""
    return 1.0 / (1.0 + np.exp(-(slope * np.asarray(s) + offset)))


def sample_logistic(n: int, seed: int, lo: float = -2.0, hi: float = 2.0, slope: float = 2.0, offset: float = -1.0, stream: str = "logistic"):
    """``(scores, labels)`` with s ~ Uniform(lo, hi) and C ~ Bernoulli(sigmoid(slope * s + offset))."""
    rng = rng_for(seed, stream)
    s = rng.uniform(lo, hi, size=n)
    c = (rng.random(n) < logistic_posterior(s, slope, offset)).astype(np.int64)
    return s, c


def sample_bump(n: int, seed: int, stream: str = "bump"):
    """Non-monotone posterior: correct is likely only for mid-range scores."""
    rng = rng_for(seed, stream)
    s = rng.uniform(-3.0, 3.0, size=n)
    p = 0.1 + 0.8 * np.exp(-(s**2))
    c = (rng.random(n) < p).astype(np.int64)
    return s, c


def sample_xor(n: int, seed: int, stream: str = "xor"):
    """Two scores, each uninformative alone, whose sign pattern fixes the label.

    C = 1 exactly when both scores fall on the same side of zero.
    """
    rng = rng_for(seed, stream)
    a = rng.uniform(-1.0, 1.0, size=n)
    b = rng.uniform(-1.0, 1.0, size=n)
    c = ((a > 0) == (b > 0)).astype(np.int64)
    return a, b, c


def logistic_dataset(n: int, seed: int, name: str = "score", **kw):
    s, c = sample_logistic(n, seed, **kw)
    return dataset_from_arrays({name: s}, c, seed=seed)
