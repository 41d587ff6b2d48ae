"""Information rates of finite ergodic Markov chains.

Chains are stored column-stochastic: ``probs[i, j] = W(i | j)``, the
probability of moving *to* state ``i`` *from* state ``j``.  On a product
alphabet X x Z the state index of the pair ``(x, z)`` is ``x * |Z| + z``.

All logarithms are natural.  The conditional Renyi entropy, entropy rate and
varentropy rate are read off the logarithm of the Perron-Frobenius eigenvalue
of the tilted matrix ``W(x,z|x',z')**(1+t) * W_Z(z|z')**(-t)``::

    log lambda_t = -t H + (V / 2) t**2 + O(t**3)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import (
    DomainError,
    HiddenMarginalError,
    NegativeVarianceError,
    NonConvergenceError,
    NonStochasticError,
    PeriodicError,
    ReducibleError,
)

STOCHASTIC_TOL = 1e-12
THETA_RANGE = 0.5
# Richardson ladder for the derivatives of log lambda_t at t = 0.
DERIVATIVE_STEPS = (1e-2, 5e-3, 2.5e-3)
POWER_ITER_CAP = 1_000_000
POWER_ITER_RTOL = 1e-13


@dataclass(frozen=True)
class TransitionMatrix:
    states_x: int
    states_z: int
    probs: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.states_x * self.states_z

    def is_iid(self) -> bool:
        """True when every column is the same distribution (memoryless source)."""
        return bool(np.all(np.abs(self.probs - self.probs[:, :1]) <= STOCHASTIC_TOL))


@dataclass(frozen=True)
class NonHiddenChain:
    base: TransitionMatrix
    marginal_z: np.ndarray = field(repr=False)

    @property
    def states_x(self) -> int:
        return self.base.states_x

    @property
    def states_z(self) -> int:
        return self.base.states_z


@dataclass(frozen=True)
class InfoRates:
    entropy: float
    varentropy: float
    theta_samples: list[tuple[float, float, float]]


def _period(adj: np.ndarray) -> int:
    # BFS levels from state 0; the period is the gcd of level(u) + 1 - level(v)
    # over all edges u -> v of a strongly connected graph.
    n = adj.shape[0]
    level = np.full(n, -1)
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(adj[:, u]):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(int(v))
        frontier = nxt
    dest, src = np.nonzero(adj)
    diffs = np.abs(level[src] + 1 - level[dest])
    return int(reduce(math.gcd, diffs.tolist(), 0))


def validate_chain(probs, states_x: int | None = None, states_z: int = 1) -> TransitionMatrix:
    """Check that ``probs`` is an ergodic column-stochastic matrix.

    Raises NonStochasticError, ReducibleError or PeriodicError (the latter
    carries the detected period).
    """
    w = np.array(probs, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] == 0:
        raise NonStochasticError(f"transition matrix must be square, got shape {w.shape}")
    n = w.shape[0]
    if states_x is None:
        states_x = n // states_z
    if states_x * states_z != n:
        raise NonStochasticError(f"|X|*|Z| = {states_x}*{states_z} does not match {n} states")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise NonStochasticError("transition matrix has negative or non-finite entries")
    col = w.sum(axis=0)
    bad = np.flatnonzero(np.abs(col - 1.0) > STOCHASTIC_TOL)
    if bad.size:
        raise NonStochasticError(
            f"column {int(bad[0])} sums to {col[bad[0]]!r}, expected 1 (substochastic)"
        )
    adj = w > 0
    reach = adj | np.eye(n, dtype=bool)
    for _ in range(max(1, math.ceil(math.log2(n)) + 1)):
        reach = reach | ((reach.astype(np.int64) @ reach.astype(np.int64)) > 0)
    if not reach.all():
        dest, src = np.argwhere(~reach)[0]
        raise ReducibleError(f"state {int(dest)} is unreachable from state {int(src)}")
    period = _period(adj)
    if period != 1:
        raise PeriodicError(f"chain is periodic with period {period}", period)
    w.setflags(write=False)
    return TransitionMatrix(states_x=states_x, states_z=states_z, probs=w)


def check_non_hidden(chain: TransitionMatrix, split: tuple[int, int] | None = None) -> NonHiddenChain:
    """Verify that the Z-marginal of ``chain`` does not depend on the previous x.

    ``split`` overrides the (|X|, |Z|) factorisation stored on the chain.
    """
    nx, nz = split if split is not None else (chain.states_x, chain.states_z)
    if nx * nz != chain.size:
        raise DomainError(f"split {nx}x{nz} does not match {chain.size} states")
    if (nx, nz) != (chain.states_x, chain.states_z):
        chain = TransitionMatrix(states_x=nx, states_z=nz, probs=chain.probs)
    # w4[x, z, x', z']
    w4 = chain.probs.reshape(nx, nz, nx, nz)
    marg = w4.sum(axis=0)  # [z, x', z']
    ref = marg[:, 0, :]
    for xp in range(1, nx):
        diff = np.abs(marg[:, xp, :] - ref)
        if np.any(diff > STOCHASTIC_TOL):
            z, zp = np.unravel_index(int(np.argmax(diff)), diff.shape)
            raise HiddenMarginalError(
                f"sum_x W(x,{z}|x',{zp}) differs between x'=0 and x'={xp}",
                (0, xp, int(z), int(zp)),
            )
    wz = marg.mean(axis=1)
    wz.setflags(write=False)
    return NonHiddenChain(base=chain, marginal_z=wz)


def as_non_hidden(chain) -> NonHiddenChain:
    if isinstance(chain, NonHiddenChain):
        return chain
    return check_non_hidden(chain)


def stationary_distribution(chain: TransitionMatrix) -> np.ndarray:
    """Stationary vector pi with W pi = pi and sum(pi) = 1."""
    w = chain.probs
    n = w.shape[0]
    a = np.vstack([w - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    # one polishing step pulls the residual to rounding level
    pi = w @ pi
    pi /= pi.sum()
    resid = np.abs(w @ pi - pi).max()
    if resid > 1e-12:
        raise NonConvergenceError(f"stationary residual {resid:.3e} exceeds 1e-12")
    return pi


def tilted_matrix(chain: NonHiddenChain, theta: float) -> np.ndarray:
    base = chain.base
    nx, nz = base.states_x, base.states_z
    w = base.probs
    # W_Z[z, z'] broadcast over destination x and source x'
    wz = np.broadcast_to(chain.marginal_z[None, :, None, :], (nx, nz, nx, nz)).reshape(w.shape)
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = w[pos] ** (1.0 + theta) * wz[pos] ** (-theta)
    return out


def perron_eigenvalue(chain: NonHiddenChain, theta: float) -> float:
    """Dominant eigenvalue of the tilted matrix by power iteration."""
    chain = as_non_hidden(chain)
    t = tilted_matrix(chain, theta)
    n = t.shape[0]
    v = np.full(n, 1.0 / n)
    lam = 1.0
    floor = max(1e-15, 8 * n * np.finfo(float).eps)
    diff = math.inf
    for _ in range(POWER_ITER_CAP):
        w = t @ v
        lam = float(w.sum())
        w /= lam
        diff = float(np.abs(w - v).sum())
        v = w
        if diff <= floor:
            break
    if diff > POWER_ITER_RTOL:
        raise NonConvergenceError(f"power iteration stalled at residual {diff:.3e}")
    return lam


def _check_theta(theta: float) -> None:
    if theta == 0 or not (-THETA_RANGE <= theta <= THETA_RANGE):
        raise DomainError(f"theta must lie in [-{THETA_RANGE}, {THETA_RANGE}] without 0, got {theta}")


def conditional_renyi_entropy(chain: NonHiddenChain, theta: float) -> float:
    _check_theta(theta)
    return -math.log(perron_eigenvalue(chain, theta)) / theta


def _log_lambda_ladder(chain: NonHiddenChain):
    f0 = math.log(perron_eigenvalue(chain, 0.0))
    samples = []
    values = {}
    for h in DERIVATIVE_STEPS:
        for t in (h, -h):
            lam = perron_eigenvalue(chain, t)
            values[t] = math.log(lam)
            samples.append((t, lam, -values[t] / t))
    return f0, values, sorted(samples)


def _richardson(d: list[float]) -> float:
    # d[i] computed with step h / 2**i, error series in even powers of h
    r1 = [(4 * d[i + 1] - d[i]) / 3 for i in range(len(d) - 1)]
    return (16 * r1[1] - r1[0]) / 15


def info_rates(chain) -> InfoRates:
    chain = as_non_hidden(chain)
    f0, f, samples = _log_lambda_ladder(chain)
    d1 = [(f[h] - f[-h]) / (2 * h) for h in DERIVATIVE_STEPS]
    d2 = [(f[h] - 2 * f0 + f[-h]) / h**2 for h in DERIVATIVE_STEPS]
    entropy = -_richardson(d1)
    var = _richardson(d2)
    if var < -1e-9:
        raise NegativeVarianceError(f"varentropy estimate {var:.3e} is negative; step too coarse")
    return InfoRates(entropy=entropy, varentropy=max(var, 0.0), theta_samples=samples)


def entropy_rate(chain) -> float:
    """H^W(X|Z) in nats."""
    return info_rates(chain).entropy


def varentropy_rate(chain) -> float:
    """V^W(X|Z) in nats squared."""
    return info_rates(chain).varentropy


def iid_chain(p) -> TransitionMatrix:
    """Memoryless source with symbol distribution ``p`` as a chain."""
    p = np.asarray(p, dtype=float)
    return validate_chain(np.tile(p[:, None], (1, p.size)))


def binary_symmetric_chain(flip: float) -> TransitionMatrix:
    return validate_chain([[1 - flip, flip], [flip, 1 - flip]])
