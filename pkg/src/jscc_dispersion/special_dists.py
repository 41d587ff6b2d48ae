"""Gaussian, switched Gaussian convolution and *-product distributions.

``Phi_v`` is the centred Gaussian CDF with variance ``v``.  Two derived CDFs:

* switched convolution ``Psi[v1, v2, v3](R) = E_{Y ~ N(0, v1)} min(Phi_v2(R - Y), Phi_v3(R - Y))``;
  the second variance is max(v2, v3) for ``Y < R`` and min(v2, v3) for ``Y > R``.
* *-product ``Phi~[v1, v2](R) = min_a Phi_v1(a) * Phi_v2(R - a)`` with ``a * b = a + b - ab``.

Degenerate variances follow the limits: ``Phi_0`` is the right-continuous step
at 0 and ``Phi_inf`` is the constant 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, OptimizationFailureError, QuadratureFailureError

QUAD_EPSABS = 1e-13
TAIL_SIGMAS = 12.0
STAR_GRID = 512


def star(a, b):
    """The *-product ``a + b - ab``: probability that at least one of two independent events occurs."""
    return a + b - a * b


def _check_eps(eps: float) -> None:
    if not (0.0 < eps < 1.0):
        raise DomainError(f"probability must lie in (0, 1), got {eps}")


def _phi(v: float, r: float) -> float:
    if v == 0:
        return 1.0 if r >= 0 else 0.0
    if math.isinf(v):
        return 0.5
    return float(special.ndtr(r / math.sqrt(v)))


def _pdf(v: float, x: float) -> float:
    return math.exp(-0.5 * x * x / v) / math.sqrt(2 * math.pi * v)


@dataclass(frozen=True)
class GaussianSpec:
    v: float

    def __post_init__(self):
        if not self.v > 0:
            raise DomainError(f"Gaussian variance must be positive, got {self.v}")

    def cdf(self, r: float) -> float:
        return gaussian_cdf(self, r)

    def quantile(self, eps: float) -> float:
        return gaussian_quantile(self, eps)


def _variance(spec) -> float:
    return spec.v if isinstance(spec, GaussianSpec) else GaussianSpec(float(spec)).v


def gaussian_cdf(spec: GaussianSpec | float, r: float) -> float:
    return _phi(_variance(spec), r)


def gaussian_quantile(spec: GaussianSpec | float, eps: float) -> float:
    v = _variance(spec)
    _check_eps(eps)
    return math.sqrt(v) * float(special.ndtri(eps))


@dataclass(frozen=True)
class SwitchedConvSpec:
    v1: float
    v2: float
    v3: float

    def __post_init__(self):
        if self.v1 < 0 or self.v2 < 0 or self.v3 < 0 or math.isinf(self.v1):
            raise DomainError(f"invalid switched convolution variances {self!r}")

    @property
    def v_plus(self) -> float:
        return max(self.v2, self.v3)

    @property
    def v_minus(self) -> float:
        return min(self.v2, self.v3)

    def cdf(self, r: float) -> float:
        return switched_cdf(self, r)

    def pdf(self, x: float) -> float:
        return switched_density(self, x)

    def quantile(self, eps: float) -> float:
        return switched_quantile(self, eps)


def _quad(f, a: float, b: float) -> float:
    if b <= a:
        return 0.0
    val, err = integrate.quad(f, a, b, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)
    if not math.isfinite(val) or err > 1e-10:
        raise QuadratureFailureError(f"quadrature on [{a}, {b}] reported error {err:.2e}")
    return val


def _std_pdf(t):
    return math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)


def _split_point(r: float, v1: float) -> float:
    # switch point of the second variance in the standardised variable t = y / sqrt(v1)
    t = r / math.sqrt(v1)
    return min(max(t, -TAIL_SIGMAS), TAIL_SIGMAS)


def switched_density(spec: SwitchedConvSpec, x: float) -> float:
    v1, vp, vm = spec.v1, spec.v_plus, spec.v_minus
    if v1 == 0 or vm == 0 or math.isinf(vp):
        raise DomainError("density needs 0 < v1 and finite positive v2, v3")
    s1 = math.sqrt(v1)
    t0 = _split_point(x, v1)
    left = _quad(lambda t: _std_pdf(t) * _pdf(vp, x - s1 * t), -TAIL_SIGMAS, t0)
    right = _quad(lambda t: _std_pdf(t) * _pdf(vm, x - s1 * t), t0, TAIL_SIGMAS)
    return left + right


def switched_cdf(spec: SwitchedConvSpec, r: float) -> float:
    v1, vp, vm = spec.v1, spec.v_plus, spec.v_minus
    if math.isinf(r):
        return 1.0 if r > 0 else 0.0
    if v1 == 0:
        return min(_phi(vp, r), _phi(vm, r))
    # Integrate over t = y / sqrt(v1) on [-12, 12] (outside mass < 1e-32), split
    # where the second variance switches so each piece is smooth.
    s1 = math.sqrt(v1)
    t0 = _split_point(r, v1)
    left = _quad(lambda t: _std_pdf(t) * _phi(vp, r - s1 * t), -TAIL_SIGMAS, t0)
    right = _quad(lambda t: _std_pdf(t) * _phi(vm, r - s1 * t), t0, TAIL_SIGMAS)
    return min(max(left + right, 0.0), 1.0)


def _bisect(f, eps: float, start: float, scale: float, tol: float = 1e-13) -> float:
    """Root of the non-decreasing ``f(x) = eps`` by bracket expansion and bisection."""
    lo, hi = start - scale, start + scale
    for _ in range(200):
        if f(lo) < eps:
            break
        lo -= 2 * (hi - lo)
    for _ in range(200):
        if f(hi) >= eps:
            break
        hi += 2 * (hi - lo)
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) < eps:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def switched_quantile(spec: SwitchedConvSpec, eps: float) -> float:
    _check_eps(eps)
    scale = math.sqrt(spec.v1 + spec.v_minus) or 1.0
    guess = scale * float(special.ndtri(eps))
    return _bisect(lambda r: switched_cdf(spec, r), eps, guess, scale)


@dataclass(frozen=True)
class StarProductSpec:
    v1: float
    v2: float

    def __post_init__(self):
        if not self.v1 > 0 or self.v2 < 0 or math.isinf(self.v2):
            raise DomainError(f"invalid *-product variances {self!r}")

    def cdf(self, r: float) -> float:
        return star_cdf(self, r)

    def quantile(self, eps: float) -> float:
        return star_quantile(self, eps)


def _star_objective(v1: float, v2: float, r: float):
    s1, s2 = math.sqrt(v1), math.sqrt(v2)

    def f(a):
        return star(special.ndtr(a / s1), special.ndtr((r - a) / s2))

    return f


def star_minimizer(spec: StarProductSpec, r: float) -> tuple[float, float]:
    """Return ``(a*, value)`` minimising ``Phi_v1(a) * Phi_v2(r - a)``."""
    v1, v2 = spec.v1, spec.v2
    if v2 == 0:
        # infimum approached as a -> r from above
        return r, _phi(v1, r)
    f = _star_objective(v1, v2, r)
    width = 10 * math.sqrt(v1 + v2)
    centre = r * v1 / (v1 + v2)
    grid = np.linspace(centre - width, centre + width, STAR_GRID)
    vals = f(grid)
    i = int(np.argmin(vals))
    if i in (0, STAR_GRID - 1):
        if vals.max() - vals.min() <= 1e-15:
            # objective is flat to double precision (value 0 or 1 far in the tails)
            return float(centre), float(vals.min())
        raise OptimizationFailureError(f"*-product minimiser left the search window at R={r}")
    res = optimize.minimize_scalar(
        lambda a: float(f(a)),
        bounds=(grid[i - 1], grid[i + 1]),
        method="bounded",
        options={"xatol": 1e-12},
    )
    a_star, best = float(res.x), float(res.fun)
    if best > vals[i]:
        a_star, best = float(grid[i]), float(vals[i])
    return a_star, best


def star_cdf(spec: StarProductSpec, r: float) -> float:
    if math.isinf(r):
        return 1.0 if r > 0 else 0.0
    return star_minimizer(spec, r)[1]


def _logit_to_split(t: float, eps: float) -> tuple[float, float]:
    eps_s = eps * special.expit(t)
    eps_c = (eps - eps_s) / (1.0 - eps_s)
    return float(eps_s), float(eps_c)


def star_quantile_detail(spec: StarProductSpec, eps: float) -> tuple[float, float, float]:
    """Return ``(quantile, eps_s, eps_c)`` with ``eps = eps_s * eps_c`` at the optimum."""
    _check_eps(eps)
    s1, s2 = math.sqrt(spec.v1), math.sqrt(spec.v2)
    if spec.v2 == 0:
        return s1 * float(special.ndtri(eps)), eps, 0.0

    def g(t):
        eps_s, eps_c = _logit_to_split(t, eps)
        if eps_s <= 0 or eps_c <= 0:
            return -math.inf
        return s1 * float(special.ndtri(eps_s)) + s2 * float(special.ndtri(eps_c))

    grid = np.linspace(-40.0, 40.0, STAR_GRID)
    vals = np.array([g(t) for t in grid])
    i = int(np.argmax(vals))
    if i in (0, STAR_GRID - 1):
        raise OptimizationFailureError(f"*-quantile maximiser left the search window at eps={eps}")
    res = optimize.minimize_scalar(
        lambda t: -g(t),
        bounds=(grid[i - 1], grid[i + 1]),
        method="bounded",
        options={"xatol": 1e-12},
    )
    t_star, best = float(res.x), -float(res.fun)
    if best < vals[i]:
        t_star, best = float(grid[i]), float(vals[i])
    eps_s, eps_c = _logit_to_split(t_star, eps)
    return best, eps_s, eps_c


def star_quantile(spec: StarProductSpec, eps: float) -> float:
    return star_quantile_detail(spec, eps)[0]


def sandwich_bounds(v1: float, v2: float, r: float) -> tuple[float, float]:
    if not (v1 > 0 and v2 > 0):
        raise DomainError("sandwich bounds need v1, v2 > 0")
    lower = _phi(v1 + v2, r)
    u = _phi(2 * (v1 + v2), r)
    return lower, 2 * u - u * u


def star_quantile_lower_bound(eps: float) -> float:
    """``sqrt(2) Phi^{-1}(1 - sqrt(1 - eps))``, a lower bound on ``Phi~^{-1}(eps) / sqrt(v1 + v2)``."""
    _check_eps(eps)
    return math.sqrt(2) * float(special.ndtri(1 - math.sqrt(1 - eps)))


# name kept for callers of the original interface
appendixB_lower_bound = star_quantile_lower_bound
