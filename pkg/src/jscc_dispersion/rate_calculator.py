"""Second-order error curves of joint and separate source-channel coding.

Throughout, ``R`` is the second-order rate offset in nats per sqrt(n): a
block of ``k = (C/H) n + (R/H) sqrt(n)`` source symbols is sent over ``n``
channel uses and the curves give the limiting error probability.  The
message length at fixed error ``eps`` is ``k = (n C + sqrt(n) Q(eps)) / H``
with ``Q`` the quantile of the relevant curve.

The source enters every curve only through ``source_term = (C/H) V_s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import dmc_analysis as dmc
from . import markov_info as mi
from .errors import DegenerateSourceError, DomainError, KindMismatchError
from .special_dists import (
    StarProductSpec,
    SwitchedConvSpec,
    _phi,
    gaussian_quantile,
    star_cdf,
    star_quantile,
    switched_cdf,
    switched_quantile,
)

Kind = Literal["conditional_additive", "dmc"]
SCHEMES = ("joint_ca", "joint_dmc", "sep_ca", "sep_dmc")


@dataclass(frozen=True)
class SourceSummary:
    H: float
    V: float

    def __post_init__(self):
        if not self.H > 0 or self.V < 0:
            raise DomainError(f"source needs H > 0 and V >= 0, got H={self.H}, V={self.V}")

    @classmethod
    def from_chain(cls, chain) -> "SourceSummary":
        rates = mi.info_rates(chain)
        return cls(H=rates.entropy, V=rates.varentropy)


@dataclass(frozen=True)
class ChannelSummary:
    kind: Kind
    C: float
    V_c: float = 0.0
    v_plus: float = 0.0
    v_minus: float = 0.0

    def __post_init__(self):
        if self.kind not in ("conditional_additive", "dmc"):
            raise DomainError(f"unknown channel kind {self.kind!r}")
        if not self.C > 0:
            raise DomainError(f"channel capacity must be positive, got {self.C}")
        if min(self.V_c, self.v_plus, self.v_minus) < 0:
            raise DomainError("channel variances must be nonnegative")
        if self.kind == "dmc" and self.v_minus > self.v_plus:
            raise DomainError("v_minus exceeds v_plus")

    @classmethod
    def from_dmc(cls, w) -> "ChannelSummary":
        cap = dmc.capacity(w)
        ext = dmc.dispersion_extremes(w, cap)
        return cls(kind="dmc", C=cap.capacity, v_plus=ext.v_plus, v_minus=ext.v_minus)

    @classmethod
    def from_conditional_additive(cls, noise) -> "ChannelSummary":
        """Channel ``Y = X + noise`` on an X-ary group, with Markov noise on X x Z."""
        noise = mi.as_non_hidden(noise)
        rates = mi.info_rates(noise)
        return cls(
            kind="conditional_additive",
            C=math.log(noise.states_x) - rates.entropy,
            V_c=rates.varentropy,
        )

    def as_dmc(self) -> "ChannelSummary":
        """A conditional additive channel viewed as a DMC-type summary (unique dispersion)."""
        if self.kind == "dmc":
            return self
        return ChannelSummary(kind="dmc", C=self.C, v_plus=self.V_c, v_minus=self.V_c)


@dataclass(frozen=True)
class RateProblem:
    source: SourceSummary
    channel: ChannelSummary

    @property
    def source_term(self) -> float:
        return self.channel.C / self.source.H * self.source.V

    @classmethod
    def from_terms(cls, source_term: float, v_minus: float, v_plus: float, C: float = 1.0) -> "RateProblem":
        """DMC problem with ``H = C`` so that ``V_s`` equals the source term."""
        return cls(SourceSummary(H=C, V=source_term), ChannelSummary("dmc", C=C, v_plus=v_plus, v_minus=v_minus))


def _need(p: RateProblem, kind: Kind) -> ChannelSummary:
    if p.channel.kind != kind:
        raise KindMismatchError(f"operation needs a {kind} channel, got {p.channel.kind}")
    return p.channel


def _star_spec(a: float, b: float) -> StarProductSpec:
    # Phi~ is symmetric in its two variances; put the positive one first
    return StarProductSpec(max(a, b), min(a, b))


def joint_ca_error(p: RateProblem, R: float) -> float:
    ch = _need(p, "conditional_additive")
    return _phi(p.source_term + ch.V_c, R)


def _switched_spec(p: RateProblem) -> SwitchedConvSpec:
    ch = _need(p, "dmc")
    return SwitchedConvSpec(p.source_term, ch.v_plus, ch.v_minus)


def joint_dmc_error(p: RateProblem, R: float) -> float:
    ch = _need(p, "dmc")
    if ch.v_plus == ch.v_minus:
        # a single dispersion: the switched convolution is exactly Gaussian
        return _phi(p.source_term + ch.v_plus, R)
    return switched_cdf(_switched_spec(p), R)


def kv_bound(p: RateProblem, R: float) -> float:
    ch = _need(p, "dmc")
    v = ch.v_minus if R <= 0 else ch.v_plus
    return _phi(p.source_term + v, R)


def kv_ratio_upper(p: RateProblem, R: float) -> float:
    _need(p, "dmc")
    if R < 0:
        return 2.0
    return 1.0 / _phi(p.source_term, R)


def sep_ca_error(p: RateProblem, R: float) -> float:
    ch = _need(p, "conditional_additive")
    return star_cdf(_star_spec(p.source_term, ch.V_c), R)


def sep_dmc_error(p: RateProblem, R: float) -> float:
    ch = _need(p, "dmc")
    s = p.source_term
    return min(star_cdf(_star_spec(s, ch.v_plus), R), star_cdf(_star_spec(s, ch.v_minus), R))


def _r_lower(p: RateProblem, R: float) -> float:
    ch = p.channel
    v = p.source_term + (ch.v_minus if R <= 0 else ch.v_plus)
    if v == 0:
        raise DegenerateSourceError("source term and channel variance are both zero")
    return R / math.sqrt(v)


def _std_phi(x: float) -> float:
    return _phi(1.0, x)


def sep_kv_ratio_upper(p: RateProblem, R: float) -> float:
    """``(2 Phi(R_*) - Phi(R_*)**2) / Phi(R_*)`` taken literally.

    This does not bound ``eps_sep / eps_KV`` for clearly negative ``R``; see
    :func:`sep_kv_ratio_upper_proven`.
    """
    _need(p, "dmc")
    f = _std_phi(_r_lower(p, R))
    # (2f - f**2) / f with the common factor cancelled, so the tail limit is exact
    return 2.0 - f


def sep_joint_ratio_bounds(p: RateProblem, R: float) -> tuple[float, float]:
    """``(1, upper)`` with the piecewise upper bound taken literally."""
    _need(p, "dmc")
    f = _std_phi(_r_lower(p, R))
    if R < 0:
        return 1.0, 4.0 - 2.0 * f
    s = p.source_term
    if s == 0:
        raise DegenerateSourceError("the R >= 0 branch needs a positive source term")
    g = _std_phi(R / math.sqrt(s))
    return 1.0, (2.0 - f) / g


def sep_kv_ratio_upper_proven(p: RateProblem, R: float) -> float:
    """Bound on ``eps_sep / eps_KV`` from ``Phi~[a, b] <= 2u - u**2``, ``u = Phi_{2(a+b)}``.

    Same as :func:`sep_kv_ratio_upper` with ``Phi(R_*)`` in the numerator
    replaced by ``Phi(R_* / sqrt 2)``.
    """
    _need(p, "dmc")
    r = _r_lower(p, R)
    f, u = _std_phi(r), _std_phi(r / math.sqrt(2))
    return (2 * u - u * u) / f


def sep_joint_ratio_upper_proven(p: RateProblem, R: float) -> float:
    """Product of :func:`sep_kv_ratio_upper_proven` and :func:`kv_ratio_upper`."""
    return sep_kv_ratio_upper_proven(p, R) * kv_ratio_upper(p, R)


def joint_quantile(p: RateProblem, eps: float) -> float:
    if p.channel.kind == "conditional_additive":
        return gaussian_quantile(p.source_term + p.channel.V_c, eps)
    return switched_quantile(_switched_spec(p), eps)


def sep_quantile(p: RateProblem, eps: float) -> float:
    s = p.source_term
    if p.channel.kind == "conditional_additive":
        return star_quantile(_star_spec(s, p.channel.V_c), eps)
    ch = p.channel
    return max(star_quantile(_star_spec(s, ch.v_plus), eps), star_quantile(_star_spec(s, ch.v_minus), eps))


def k_expansion(p: RateProblem, n: int, eps: float, scheme: str) -> float:
    """Second-order estimate ``(n C + sqrt(n) Q(eps)) / H`` of the message length."""
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    if scheme not in SCHEMES:
        raise DomainError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    kind: Kind = "conditional_additive" if scheme.endswith("_ca") else "dmc"
    _need(p, kind)
    q = joint_quantile(p, eps) if scheme.startswith("joint") else sep_quantile(p, eps)
    return (n * p.channel.C + math.sqrt(n) * q) / p.source.H


CURVE_COLUMNS = (
    "R",
    "eps_joint",
    "eps_kv",
    "eps_sep",
    "ratio_kv",
    "ratio_sep",
    "bound_kv",
    "bound_sep",
    "bound_sep_proven",
)


def curve_row(p: RateProblem, R: float) -> tuple[float, ...]:
    """One row of the rate curve table for a DMC-type problem.

    A conditional additive problem is evaluated through its DMC view, where
    ``eps_kv`` collapses to ``eps_joint``.
    """
    q = RateProblem(p.source, p.channel.as_dmc())
    e = joint_dmc_error(q, R)
    kv = kv_bound(q, R)
    sep = sep_dmc_error(q, R)
    ratio_kv = kv / e if e > 0 else math.nan
    ratio_sep = sep / e if e > 0 else math.nan
    try:
        bound_sep = sep_joint_ratio_bounds(q, R)[1]
    except DegenerateSourceError:
        bound_sep = math.nan
    return (
        R, e, kv, sep, ratio_kv, ratio_sep,
        kv_ratio_upper(q, R), bound_sep, sep_joint_ratio_upper_proven(q, R),
    )


def curve_table(p: RateProblem, grid) -> np.ndarray:
    return np.array([curve_row(p, float(r)) for r in grid])
