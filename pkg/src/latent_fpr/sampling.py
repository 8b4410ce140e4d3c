"""Seedable random primitives used by the simulator.

Every stream is a Philox (counter-based) generator keyed by a master seed and
a stream id, so a given ``(seed, stream_id)`` pair always produces the same
draws no matter which thread or in which order it is consumed.

Binomial variates come from numpy's ``Generator.binomial`` (inversion for
small ``n*p``, BTPE otherwise). Multinomial variates are built on top of it
as a chain of conditional binomials.
"""

from __future__ import annotations

import numpy as np

UINT64_MAX = 2**64 - 1
PROB_SUM_TOLERANCE = 1e-9


class SamplingError(ValueError):
    pass


class RngStream:
    """Independent random stream identified by ``(seed, stream_id)``."""

    __slots__ = ("seed", "stream_id", "generator")

    def __init__(self, seed: int, stream_id: int = 0):
        for name, v in (("seed", seed), ("stream_id", stream_id)):
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or not 0 <= v <= UINT64_MAX:
                raise SamplingError(f"{name} must be an integer in [0, 2**64)")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def draw_binomial(rng, n, p, size=None):
    """Binomial(n, p) draw(s). ``n`` may be an integer array."""
    n_arr = np.asarray(n)
    if not np.issubdtype(n_arr.dtype, np.integer) or (n_arr < 0).any():
        raise SamplingError("n must be a non-negative integer")
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise SamplingError(f"p={p} outside [0, 1]")
    out = _gen(rng).binomial(n_arr, p, size=size)
    if np.ndim(out) == 0:
        return int(out)
    return out


def _check_probs(probs) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise SamplingError("probs must be a non-empty vector")
    if (probs < 0).any() or not np.isfinite(probs).all():
        raise SamplingError("probs must be non-negative")
    if abs(probs.sum() - 1.0) > PROB_SUM_TOLERANCE:
        raise SamplingError(f"probs sum to {probs.sum():.12g}, not 1")
    return probs


def draw_multinomial(rng, n, probs) -> np.ndarray:
    """Multinomial draw by sequential conditional binomials.

    ``n`` may be a scalar or an integer array of trial counts; the result has
    shape ``np.shape(n) + (len(probs),)``. Zero-probability cells always
    receive zero, and the last positive cell takes the remainder so rows
    sum to ``n`` exactly.
    """
    probs = _check_probs(probs)
    n_arr = np.asarray(n)
    if not np.issubdtype(n_arr.dtype, np.integer) or (n_arr < 0).any():
        raise SamplingError("n must be a non-negative integer")
    gen = _gen(rng)
    out = np.zeros(n_arr.shape + (probs.size,), dtype=np.int64)
    positive = np.flatnonzero(probs)
    last = positive[-1]
    remaining = n_arr.astype(np.int64)
    mass_left = 1.0
    for k in positive[:-1]:
        cond = min(1.0, probs[k] / mass_left) if mass_left > 0 else 1.0
        draw = gen.binomial(remaining, cond)
        out[..., k] = draw
        remaining = remaining - draw
        mass_left -= probs[k]
    out[..., last] = remaining
    return out


def draw_subset(rng, pool, k: int) -> np.ndarray:
    """``k`` distinct elements of ``pool``, uniformly without replacement (sorted)."""
    pool = np.asarray(pool)
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 0:
        raise SamplingError("k must be a non-negative integer")
    if k > pool.size:
        raise SamplingError(f"cannot draw {k} items from a pool of {pool.size}")
    return np.sort(_gen(rng).choice(pool, size=k, replace=False))


def draw_subsets(rng, pool, ks) -> np.ndarray:
    """Vectorised :func:`draw_subset`: one independent subset per entry of ``ks``.

    Returns a boolean array of shape ``(len(ks), len(pool))`` marking the
    selected pool members of each subset.
    """
    pool = np.asarray(pool)
    ks = np.asarray(ks)
    if ks.ndim != 1:
        raise SamplingError("ks must be a vector")
    if (ks < 0).any() or (ks > pool.size).any():
        raise SamplingError(f"subset sizes must lie in [0, {pool.size}]")
    # random permutation per row; the first k positions of row i form subset i
    order = _gen(rng).permuted(np.tile(np.arange(pool.size), (ks.size, 1)), axis=1)
    chosen_pos = np.arange(pool.size)[None, :] < ks[:, None]
    mask = np.zeros((ks.size, pool.size), dtype=bool)
    np.put_along_axis(mask, order, chosen_pos, axis=1)
    return mask
