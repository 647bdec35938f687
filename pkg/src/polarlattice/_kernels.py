"""Numeric primitives shared by the channel and decoder modules."""
from __future__ import annotations

import numpy as np


def boxplus(a, b):
    """Exact check-node combination ``2 atanh(tanh(a/2) tanh(b/2))``.

    The tanh form is used when either input is small (it keeps relative
    accuracy for tiny outputs); otherwise ``sign(a) sign(b) min(|a|, |b|)``
    plus two log1p corrections, which never overflow even for LLRs of order
    1e12.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    small = np.minimum(np.abs(a), np.abs(b)) < 1.0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        tanh_form = 2.0 * np.arctanh(np.tanh(0.5 * a) * np.tanh(0.5 * b))
    log_form = (np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
                + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b))))
    return np.where(small, tanh_form, log_form)


def softplus(x):
    """``log(1 + exp(x))`` without overflow."""
    return np.logaddexp(0.0, x)


def centered_mod(y, m):
    """Reduce ``y`` modulo ``m`` into the half-open interval ``(-m/2, m/2]``."""
    y = np.asarray(y, dtype=float)
    r = y - m * np.ceil((y - m / 2) / m)
    # guard against rounding just outside the interval
    r = np.where(r <= -m / 2, r + m, r)
    return np.where(r > m / 2, r - m, r)
