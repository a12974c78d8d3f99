"""Vectorized draws from truncated Poisson and binomial laws."""

from __future__ import annotations

import math

import numpy as np

from .analytic import poisson_tail

__all__ = ["poisson_trunc", "binomial_trunc", "EmptySupportError"]

REJECTION_MIN_PROB = 0.1


class EmptySupportError(ValueError):
    pass


def _table_draw(rng: np.random.Generator, support: np.ndarray, logw: np.ndarray, size: int) -> np.ndarray:
    w = np.exp(logw - logw.max())
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return support[np.minimum(idx, len(support) - 1)]


def poisson_trunc(rng: np.random.Generator, mu: float, size: int, lo: int = 0, hi: int | None = None) -> np.ndarray:
    """``size`` draws of ``Po(mu)`` conditioned on ``lo <= X < hi`` (``hi=None``: no upper bound)."""
    if size == 0:
        return np.zeros(0, dtype=np.int64)
    lo = max(lo, 0)
    if hi is not None and hi <= lo:
        raise EmptySupportError(f"Po({mu}) conditioned on [{lo}, {hi}) has empty support")
    if mu == 0:
        if lo > 0:
            raise EmptySupportError(f"Po(0) conditioned on >= {lo} is impossible")
        return np.zeros(size, dtype=np.int64)
    if hi is None:
        if lo == 0:
            return rng.poisson(mu, size).astype(np.int64)
        if poisson_tail(mu, lo) >= REJECTION_MIN_PROB:
            out = rng.poisson(mu, size).astype(np.int64)
            bad = out < lo
            while bad.any():
                out[bad] = rng.poisson(mu, int(bad.sum()))
                bad = out < lo
            return out
        hi = lo + int(math.ceil(mu + 12.0 * math.sqrt(mu))) + 12
    support = np.arange(lo, hi, dtype=np.int64)
    logw = support * math.log(mu) - np.array([math.lgamma(x + 1) for x in support.tolist()])
    return _table_draw(rng, support, logw, size)


def binomial_trunc(rng: np.random.Generator, n: int, p: float, size: int, lo: int = 0, hi: int | None = None) -> np.ndarray:
    """``size`` draws of ``Bin(n, p)`` conditioned on ``lo <= X < hi``."""
    if size == 0:
        return np.zeros(0, dtype=np.int64)
    hi = n + 1 if hi is None else min(hi, n + 1)
    lo = max(lo, 0)
    support = np.arange(lo, hi, dtype=np.int64)
    pmf = np.array([math.comb(n, x) * p**x * (1.0 - p) ** (n - x) for x in support.tolist()])
    if len(support) == 0 or pmf.sum() <= 0.0:
        raise EmptySupportError(f"Bin({n}, {p}) conditioned on [{lo}, {hi}) has zero mass")
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return support[np.minimum(idx, len(support) - 1)]
