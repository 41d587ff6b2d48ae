"""Seeded, block-parallel sampling of Markov log-likelihoods and i.i.d. information densities.

Randomness comes from numpy's Philox counter-based generator.  A run with
seed ``s`` is cut into fixed-size blocks of samples; block ``b`` of stream
``r`` draws from ``Philox(SeedSequence(s, spawn_key=(r, b)))``, where the
stream separates independent roles such as source and channel noise.  Blocks are independent of how
many workers evaluate them and are concatenated in block order, so results
depend only on ``(seed, samples)`` and never on ``workers``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from . import markov_info as mi
from .errors import DomainError

BLOCK_SIZE = 4096


def block_rng(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    """Generator for ``block`` of the run seeded with ``seed``; ``stream`` separates independent roles."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(stream), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def block_sizes(samples: int, block_size: int = BLOCK_SIZE) -> list[int]:
    if samples < 1:
        raise DomainError(f"samples must be at least 1, got {samples}")
    full, rest = divmod(samples, block_size)
    return [block_size] * full + ([rest] if rest else [])


def run_blocks(fn: Callable, samples: int, workers: int = 1, block_size: int = BLOCK_SIZE) -> list:
    """Call ``fn(block_index, block_len)`` for every block, in block order.

    ``fn`` must be picklable (a module-level function or a ``functools.partial``
    of one) when ``workers > 1``.
    """
    sizes = block_sizes(samples, block_size)
    idx = list(range(len(sizes)))
    if workers <= 1 or len(sizes) == 1:
        return [fn(i, m) for i, m in zip(idx, sizes)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, idx, sizes))


def _checkpoints(lengths: Sequence[int] | int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(lengths, dtype=np.int64))
    if arr.size == 0 or np.any(arr < 0) or np.any(np.diff(arr) < 0):
        raise DomainError("checkpoint lengths must be nonnegative and non-decreasing")
    return arr


@dataclass(frozen=True)
class TrajectorySampler:
    """Draws trajectories of a non-hidden chain and accumulates ``-log P(X^n | Z^n)``.

    ``stream`` distinguishes samplers that share a seed (e.g. source and noise).
    The initial state is drawn from ``initial`` (stationary by default).
    """

    chain: mi.NonHiddenChain
    seed: int
    initial: np.ndarray | None = field(default=None, repr=False)
    stream: int = 0

    def __post_init__(self):
        chain = mi.as_non_hidden(self.chain)
        object.__setattr__(self, "chain", chain)
        init = mi.stationary_distribution(chain.base) if self.initial is None else np.asarray(self.initial, float)
        if init.shape != (chain.base.size,) or np.any(init < 0) or abs(init.sum() - 1) > 1e-12:
            raise DomainError("initial distribution does not match the chain")
        object.__setattr__(self, "initial", init)

    # --- per-block work -------------------------------------------------
    def _cond_logs(self):
        base = self.chain.base
        nx, nz = base.states_x, base.states_z
        w = base.probs
        wz = np.broadcast_to(self.chain.marginal_z[None, :, None, :], (nx, nz, nx, nz)).reshape(w.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(w > 0, -np.log(np.where(w > 0, w, 1.0) / np.where(w > 0, wz, 1.0)), 0.0)
        pi = self.initial.reshape(nx, nz)
        pz = pi.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            first = np.where(pi > 0, -np.log(np.where(pi > 0, pi, 1.0) / pz[None, :]), 0.0).reshape(-1)
        return step, first

    def block_loglik(self, block: int, count: int, lengths) -> np.ndarray:
        """``-log P(X^t | Z^t)`` at every checkpoint ``t``; shape ``(count, len(lengths))``."""
        lengths = _checkpoints(lengths)
        rng = block_rng(self.seed, block, self.stream)
        n_max = int(lengths[-1])
        out = np.zeros((count, lengths.size))
        if n_max == 0:
            return out
        base = self.chain.base
        if base.states_z == 1 and base.is_iid() and np.allclose(self.initial, base.probs[:, 0], atol=1e-15):
            return self._iid_block(rng, count, lengths)
        step, first = self._cond_logs()
        cum = np.cumsum(base.probs, axis=0)  # cum[i, j] = P(dest <= i | src j)
        cum[-1, :] = 1.0
        cum_t = np.ascontiguousarray(cum.T)
        state = np.searchsorted(np.cumsum(self.initial), rng.random(count), side="right")
        state = np.minimum(state, base.size - 1)
        acc = first[state].copy()
        ci = 0
        while ci < lengths.size and lengths[ci] <= 1:
            out[:, ci] = acc if lengths[ci] == 1 else 0.0
            ci += 1
        for t in range(2, n_max + 1):
            u = rng.random(count)
            nxt = (u[:, None] >= cum_t[state]).sum(axis=1)
            nxt = np.minimum(nxt, base.size - 1)
            acc += step[nxt, state]
            state = nxt
            while ci < lengths.size and lengths[ci] == t:
                out[:, ci] = acc
                ci += 1
        return out

    def _iid_block(self, rng, count: int, lengths: np.ndarray) -> np.ndarray:
        p = self.chain.base.probs[:, 0]
        with np.errstate(divide="ignore"):
            surprisal = np.where(p > 0, -np.log(np.where(p > 0, p, 1.0)), 0.0)
        out = np.zeros((count, lengths.size))
        acc = np.zeros(count)
        prev = 0
        for ci, t in enumerate(lengths):
            if t > prev:
                acc = acc + rng.multinomial(int(t - prev), p, size=count) @ surprisal
                prev = int(t)
            out[:, ci] = acc
        return out


def _loglik_block(sampler: TrajectorySampler, lengths, block: int, count: int) -> np.ndarray:
    return sampler.block_loglik(block, count, lengths)


def sample_loglik(sampler: TrajectorySampler, lengths, samples: int, workers: int = 1) -> np.ndarray:
    """Stack of ``-log P(X^t|Z^t)`` over all samples; shape ``(samples, len(lengths))``."""
    lengths = _checkpoints(lengths)
    parts = run_blocks(partial(_loglik_block, sampler, lengths), samples, workers)
    return np.vstack(parts)


def iid_pair_info_density(
    rng: np.random.Generator, p_x: np.ndarray, w: np.ndarray, q: np.ndarray, n: int, count: int
) -> np.ndarray:
    """Sum over ``n`` i.i.d. uses of ``log W(y|x)/q(y)`` with ``x ~ p_x``; one value per sample.

    The sum only depends on the counts of each ``(x, y)`` pair, so it is
    drawn from a single multinomial over the joint alphabet.
    """
    joint = (p_x[:, None] * w).reshape(-1)
    joint = np.clip(joint, 0.0, None)
    joint /= joint.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.where(w > 0, np.log(np.where(w > 0, w, 1.0) / np.where(q > 0, q, 1.0)[None, :]), 0.0).reshape(-1)
    return rng.multinomial(n, joint, size=count) @ lr


def normal_ks_distance(values: np.ndarray, variance: float) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of ``values`` and ``Phi_variance``."""
    from scipy import special

    x = np.sort(np.asarray(values, dtype=float))
    m = x.size
    if variance == 0:
        f = (x >= 0).astype(float)
    else:
        f = special.ndtr(x / math.sqrt(variance))
    hi = np.arange(1, m + 1) / m
    lo = np.arange(0, m) / m
    return float(max(np.max(hi - f), np.max(f - lo)))
