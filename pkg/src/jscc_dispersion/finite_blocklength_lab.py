"""Exact single-shot bounds on tiny instances and Monte Carlo checks of the asymptotics.

Single-shot instances use a row-stochastic channel ``W[x, y] = W(y|x)`` and
a message distribution ``P_M``.  Monte Carlo routines draw from the block
streams of :mod:`jscc_dispersion.sampling`, so their output depends only on
the seed and the sample count, not on the number of workers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np

from . import dmc_analysis as dmc
from . import markov_info as mi
from .errors import DomainError, TooLargeError
from .sampling import TrajectorySampler, block_rng, iid_pair_info_density, run_blocks, sample_loglik
from .special_dists import star

MAX_MESSAGES = 8
MAX_LETTERS = 4
MAX_INTERMEDIATE = 4
Z95 = 1.959963984540054


def _prob_vector(p, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
        raise DomainError(f"{name} must be a probability vector")
    return p


@dataclass(frozen=True)
class SingleShotInstance:
    p_m: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        p = _prob_vector(self.p_m, "P_M")
        w = dmc.as_channel(self.w).probs
        if p.size > MAX_MESSAGES or w.shape[0] > MAX_LETTERS or w.shape[1] > MAX_LETTERS:
            raise TooLargeError(
                f"instance |M|={p.size}, |X|={w.shape[0]}, |Y|={w.shape[1]} exceeds caps "
                f"({MAX_MESSAGES}, {MAX_LETTERS}, {MAX_LETTERS})"
            )
        object.__setattr__(self, "p_m", p)
        object.__setattr__(self, "w", w)

    @property
    def messages(self) -> int:
        return self.p_m.size


def map_error(inst: SingleShotInstance, encoder: Sequence[int]) -> float:
    """Error of ``encoder`` followed by the MAP decoder."""
    joint = inst.p_m[:, None] * inst.w[np.asarray(encoder)]
    return float(1.0 - joint.max(axis=0).sum())


def exact_single_shot_detail(inst: SingleShotInstance) -> tuple[float, tuple[int, ...]]:
    """Minimum error over all encoders ``M -> X`` with MAP decoding, and one optimal encoder."""
    nx = inst.w.shape[0]
    encoders = np.array(list(itertools.product(range(nx), repeat=inst.messages)), dtype=np.intp)
    # joint[e, m, y] = P_M(m) W(y | e(m))
    joint = inst.p_m[None, :, None] * inst.w[encoders]
    errors = 1.0 - joint.max(axis=1).sum(axis=1)
    best = int(np.argmin(errors))
    return float(errors[best]), tuple(int(x) for x in encoders[best])


def exact_single_shot(inst: SingleShotInstance) -> float:
    return exact_single_shot_detail(inst)[0]


def achievability_rhs(inst: SingleShotInstance, p_x, c: float, clip: bool = True) -> float:
    """``(P_M x P_X x W){P_M P_X W <= c P_X Wbar} + 1/c``."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    p_x = _prob_vector(p_x, "P_X")
    w = inst.w
    wbar = p_x @ w
    # lhs[m, x, y] = P_M(m) P_X(x) W(y|x); rhs[x, y] = c P_X(x) Wbar(y)
    lhs = inst.p_m[:, None, None] * (p_x[:, None] * w)[None, :, :]
    rhs = c * (p_x[:, None] * wbar[None, :])
    val = float(lhs[lhs <= rhs[None, :, :]].sum() + 1.0 / c)
    return min(max(val, 0.0), 1.0) if clip else val


def converse_rhs(inst: SingleShotInstance, encoder: Sequence[int], q_y, c: float) -> float:
    """``sum_m P_M(m) W_{e(m)}{P_M(m) W_{e(m)}(Y) <= c Q_Y(Y)} - c``."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    q_y = _prob_vector(q_y, "Q_Y")
    enc = np.asarray(encoder, dtype=np.intp)
    if enc.shape != (inst.messages,) or np.any(enc < 0) or np.any(enc >= inst.w.shape[0]):
        raise DomainError("encoder must map every message to a channel input")
    rows = inst.w[enc]
    scaled = inst.p_m[:, None] * rows
    mass = np.where(scaled <= c * q_y[None, :], rows, 0.0).sum(axis=1)
    return float(inst.p_m @ mass - c)


@dataclass(frozen=True)
class BoundSandwich:
    achievability_rhs: float
    converse_rhs: float
    exact: float | None
    k: int
    n: int
    c: float
    half_width: float = 0.0
    central: float | None = None

    def holds(self) -> bool:
        if self.exact is None:
            return self.converse_rhs <= self.achievability_rhs
        return self.converse_rhs <= self.exact <= self.achievability_rhs


def _half_width(p: float, m: int) -> float:
    return Z95 * math.sqrt(max(p * (1 - p), 0.0) / m)


def message_length(H: float, C: float, n: int, R: float) -> int:
    """Integer block length nearest to ``(C/H) n + (R/H) sqrt(n)``."""
    return max(1, int(round((C * n + R * math.sqrt(n)) / H)))


def ca_bound_pair(
    source: mi.TransitionMatrix,
    noise,
    k: int,
    n: int,
    samples: int,
    seed: int,
    workers: int = 1,
) -> BoundSandwich:
    """Monte Carlo evaluation of the conditional-additive bound pair with ``c = exp(+-n**0.25)``.

    With ``T = -log P(M^k) - log P(X^n|Z^n)``:
    achievability ``P{T >= n log|X| - n**0.25} + exp(-n**0.25)``,
    converse ``P{T >= n log|X| + n**0.25} - exp(-n**0.25)``.
    ``central`` is ``P{T >= n log|X|}``.  ``half_width`` is the 95% normal
    half-width of the widest of the three proportions.
    """
    if k < 1 or n < 1:
        raise DomainError("k and n must be positive")
    src = TrajectorySampler(mi.as_non_hidden(source), seed=seed, stream=0)
    noi = TrajectorySampler(mi.as_non_hidden(noise), seed=seed, stream=1)
    ls = sample_loglik(src, [k], samples, workers)[:, 0]
    ln = sample_loglik(noi, [n], samples, workers)[:, 0]
    total = ls + ln
    level = n * math.log(noi.chain.states_x)
    shift = n**0.25
    p_ach = float(np.mean(total >= level - shift))
    p_conv = float(np.mean(total >= level + shift))
    p_mid = float(np.mean(total >= level))
    hw = max(_half_width(p, samples) for p in (p_ach, p_conv, p_mid))
    pen = math.exp(-shift)
    return BoundSandwich(
        achievability_rhs=p_ach + pen,
        converse_rhs=p_conv - pen,
        exact=None,
        k=k,
        n=n,
        c=math.exp(shift),
        half_width=hw,
        central=p_mid,
    )


@dataclass(frozen=True)
class TwoRegimeResult:
    R: np.ndarray
    estimate: np.ndarray
    half_width: np.ndarray
    k: np.ndarray
    n: int
    samples: int
    plus_fraction: np.ndarray = field(repr=False)


def _two_regime_block(source_sampler, ks, p_plus, p_minus, w, q, n, seed, block, count):
    src = source_sampler.block_loglik(block, count, ks)
    rng = block_rng(seed, block, stream=2)
    i_plus = iid_pair_info_density(rng, p_plus, w, q, n, count)
    i_minus = iid_pair_info_density(rng, p_minus, w, q, n, count)
    return src, i_plus, i_minus


def two_regime_curve(
    source: mi.TransitionMatrix,
    channel,
    R_grid: Sequence[float],
    n: int,
    samples: int,
    seed: int,
    workers: int = 1,
) -> TwoRegimeResult:
    """Empirical error of the two-regime joint scheme at every offset in ``R_grid``.

    Per sample, ``S = (log P(M^k) + k H) / sqrt(n)`` with ``k`` the integer
    nearest to ``(C/H) n + (R/H) sqrt(n)``.  When ``S <= R`` the channel sum
    uses ``P_+`` inputs, otherwise ``P_-``, and
    ``C(X, Y) = (n C - sum log W(Y|X)/Q_M(Y)) / sqrt(n)``.  The estimate is the
    frequency of ``S - C(X, Y) <= R``.  The regime flag is taken as error-free.
    All offsets share the same source trajectories and channel draws.
    """
    ch = dmc.as_channel(channel)
    cap = dmc.capacity(ch)
    ext = dmc.dispersion_extremes(ch, cap)
    rates = mi.info_rates(source)
    H, C = rates.entropy, cap.capacity
    R_grid = np.atleast_1d(np.asarray(R_grid, dtype=float))
    ks = np.array([message_length(H, C, n, r) for r in R_grid], dtype=np.int64)
    uniq = np.unique(ks)
    sampler = TrajectorySampler(mi.as_non_hidden(source), seed=seed, stream=0)
    fn = partial(
        _two_regime_block, sampler, uniq, ext.p_plus, ext.p_minus, ch.probs, cap.saddle_output, n, seed
    )
    parts = run_blocks(fn, samples, workers)
    src = np.vstack([p[0] for p in parts])
    i_plus = np.concatenate([p[1] for p in parts])
    i_minus = np.concatenate([p[2] for p in parts])
    rn = math.sqrt(n)
    est = np.empty(R_grid.size)
    plus = np.empty(R_grid.size)
    for j, (r, k) in enumerate(zip(R_grid, ks)):
        col = int(np.searchsorted(uniq, k))
        s = (k * H - src[:, col]) / rn
        use_plus = s <= r
        i = np.where(use_plus, i_plus, i_minus)
        c_xy = (n * C - i) / rn
        est[j] = float(np.mean(s - c_xy <= r))
        plus[j] = float(np.mean(use_plus))
    hw = np.array([_half_width(p, samples) for p in est])
    return TwoRegimeResult(R=R_grid, estimate=est, half_width=hw, k=ks, n=n, samples=samples, plus_fraction=plus)


def two_regime_estimate(
    source: mi.TransitionMatrix, channel, R: float, n: int, samples: int, seed: int, workers: int = 1
) -> float:
    return float(two_regime_curve(source, channel, [R], n, samples, seed, workers).estimate[0])


def sample_info_density(chain, n: int, samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """Sorted values of ``(-log P(X^n|Z^n) - n H) / sqrt(n)``."""
    chain = mi.as_non_hidden(chain)
    H = mi.entropy_rate(chain)
    ll = sample_loglik(TrajectorySampler(chain, seed=seed), [n], samples, workers)[:, 0]
    return np.sort((ll - n * H) / math.sqrt(n))


def product_channel(w, n: int) -> np.ndarray:
    """``n`` memoryless uses of ``w`` as one channel on tuples (lexicographic indices)."""
    w = dmc.as_channel(w).probs
    out = np.ones((1, 1))
    for _ in range(n):
        out = np.kron(out, w)
    return out


@dataclass(frozen=True)
class SeparationCheck:
    averaged: float
    predicted: float
    source_error: float
    channel_error: float


def separation_product_check(p_m, e_s, d_s, w, e_c, d_c) -> SeparationCheck:
    """Average the separation-scheme error over every permutation of the intermediate set.

    ``e_s: M -> A``, ``d_s: A -> M``, ``e_c: A -> X``, ``d_c: Y -> A`` are
    integer arrays.  An error is counted when the source code fails or the
    channel decoder returns a different intermediate index.
    """
    p_m = _prob_vector(p_m, "P_M")
    w = dmc.as_channel(w).probs
    e_s, d_s, e_c, d_c = (np.asarray(a, dtype=np.intp) for a in (e_s, d_s, e_c, d_c))
    A = d_s.size
    if A > MAX_INTERMEDIATE:
        raise TooLargeError(f"intermediate set of size {A} exceeds {MAX_INTERMEDIATE}")
    if e_s.shape != p_m.shape or e_c.size != A or d_c.size != w.shape[1]:
        raise DomainError("code maps do not match the alphabets")
    if np.any((e_s < 0) | (e_s >= A)) or np.any((d_c < 0) | (d_c >= A)) or np.any((d_s < 0) | (d_s >= p_m.size)):
        raise DomainError("code map values out of range")
    src_ok = d_s[e_s] == np.arange(p_m.size)
    # chan_err[a] = W({y : d_c(y) != a} | e_c(a))
    chan_err = np.array([w[e_c[a]][d_c != a].sum() for a in range(A)])
    p_s = float(p_m[~src_ok].sum())
    p_c = float(chan_err.mean())
    total = 0.0
    perms = list(itertools.permutations(range(A)))
    for f in perms:
        f = np.asarray(f)
        idx = f[e_s]
        total += float(p_m[~src_ok].sum() + (p_m[src_ok] * chan_err[idx[src_ok]]).sum())
    return SeparationCheck(averaged=total / len(perms), predicted=float(star(p_s, p_c)), source_error=p_s, channel_error=p_c)
