"""Confidence bounds for pass/fail verification data and their inversion.

All divergences are in nats, so that with every trial passing the bound
e^{-N D(1 || 1 - eps nu)} = (1 - eps nu)^N sits below e^{-eps N nu}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import stats

EPS_TOL = 1e-9


class DomainError(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class EpsilonTooSmall(ValueError):
    pass


class NotCertifiable(ValueError):
    pass


class InsufficientPoints(ValueError):
    pass


@dataclass(frozen=True)
class VerificationResult:
    n_trials: int
    n_passed: int
    delta: float
    nu: float
    epsilon: float

    @property
    def fidelity_lower_bound(self) -> float:
        return 1.0 - self.epsilon

    def as_dict(self) -> dict:
        return {"N": self.n_trials, "M": self.n_passed, "delta": self.delta, "nu": self.nu, "epsilon": self.epsilon}


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    slope_stderr: float
    fit_range: tuple
    n_points: int

    def predict(self, n) -> np.ndarray:
        return np.exp(self.intercept) * np.asarray(n, dtype=float) ** self.slope

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "stderr": self.slope_stderr,
            "intercept": self.intercept,
            "range": list(self.fit_range),
            "n_points": self.n_points,
        }


def _xlogy_ratio(a: float, b: float) -> float:
    """a * ln(a / b) with 0 ln 0 = 0."""
    if a == 0:
        return 0.0
    if b <= 0:
        raise DomainError(f"log of {a}/{b}")
    return a * math.log(a / b)


def kl_divergence(x: float, y: float) -> float:
    """Binary relative entropy D(x || y) in nats."""
    if not 0 <= x <= 1:
        raise DomainError(f"x={x} outside [0, 1]")
    if not 0 <= y <= 1:
        raise DomainError(f"y={y} outside [0, 1]")
    return max(_xlogy_ratio(x, y) + _xlogy_ratio(1 - x, 1 - y), 0.0)


def _check_nu(nu):
    if not 0 < nu <= 1:
        raise OutOfRange(f"nu={nu} outside (0, 1]")


def delta_bound_perfect(epsilon: float, n: int, nu: float) -> float:
    """e^{-eps N nu}: failure probability bound when all N trials pass."""
    _check_nu(nu)
    if not 0 <= epsilon <= 1 / nu or n < 1:
        raise OutOfRange(f"epsilon={epsilon}, N={n}")
    return math.exp(-epsilon * n * nu)


def log_delta_bound(m: int, n: int, epsilon: float, nu: float) -> float:
    """Natural log of the bound e^{-N D(M/N || 1 - eps nu)}."""
    _check_nu(nu)
    if not 0 <= m <= n or n < 1:
        raise OutOfRange(f"need 0 <= M <= N, got M={m}, N={n}")
    x = m / n
    if epsilon > 1 / nu + 1e-15:
        raise OutOfRange(f"epsilon={epsilon} exceeds 1/nu")
    if epsilon < (1 - x) / nu - 1e-15:
        raise EpsilonTooSmall(f"epsilon={epsilon} below (1 - M/N)/nu = {(1 - x) / nu}")
    y = min(max(1 - epsilon * nu, 0.0), x)
    if y == 0.0:
        return -math.inf if x > 0 else 0.0
    return -n * kl_divergence(x, y)


def delta_bound(m: int, n: int, epsilon: float, nu: float) -> float:
    """Confidence-failure bound when M of N trials passed (valid for eps >= (1 - M/N)/nu)."""
    return math.exp(log_delta_bound(m, n, epsilon, nu))


def epsilon_at_confidence(m: int, n: int, delta: float, nu: float, eps_max: float = 1.0) -> float:
    """Smallest certified infidelity eps with delta_bound(M, N, eps, nu) <= delta.

    Bisection on [(1 - M/N)/nu, eps_max]; the returned value always satisfies
    the bound. Raises NotCertifiable when eps_max itself fails, since an
    infidelity bound at or above 1 says nothing.
    """
    if not 0 < delta < 1:
        raise OutOfRange(f"delta={delta} outside (0, 1)")
    _check_nu(nu)
    eps_max = min(eps_max, 1 / nu)
    lo = (1 - m / n) / nu
    log_delta = math.log(delta)
    if lo >= eps_max or log_delta_bound(m, n, eps_max, nu) > log_delta:
        raise NotCertifiable(f"M={m}, N={n}: no eps <= {eps_max} reaches delta={delta}")
    hi = eps_max
    while hi - lo > EPS_TOL / 4:
        mid = 0.5 * (lo + hi)
        if log_delta_bound(m, n, mid, nu) <= log_delta:
            hi = mid
        else:
            lo = mid
    return hi


def certify(m: int, n: int, delta: float, nu: float) -> VerificationResult:
    return VerificationResult(n, m, delta, nu, epsilon_at_confidence(m, n, delta, nu))


def epsilon_perfect_closed_form(n: int, delta: float, nu: float) -> float:
    """(1 - delta^{1/N}) / nu, the exact inversion when every trial passes."""
    return (1 - delta ** (1 / n)) / nu


def min_samples_perfect(epsilon: float, delta: float, nu: float) -> int:
    """ceil(ln(1/delta) / (eps nu))."""
    _check_nu(nu)
    if not 0 < epsilon <= 1 / nu or not 0 < delta < 1:
        raise OutOfRange(f"epsilon={epsilon}, delta={delta}")
    return math.ceil(math.log(1 / delta) / (epsilon * nu) - 1e-12)


def loglog_fit(points: Iterable, fit_range: tuple = (0, math.inf)) -> ScalingFit:
    """OLS fit of ln(eps) = r ln(N) + c over points with N_min <= N < N_max."""
    pts = np.array([(float(n), float(e)) for n, e in points], dtype=float).reshape(-1, 2)
    lo, hi = fit_range
    keep = (pts[:, 0] >= lo) & (pts[:, 0] < hi) & (pts[:, 1] > 0)
    pts = pts[keep]
    if len(pts) < 3:
        raise InsufficientPoints(f"{len(pts)} usable points in range {fit_range}")
    res = stats.linregress(np.log(pts[:, 0]), np.log(pts[:, 1]))
    return ScalingFit(
        slope=float(res.slope),
        intercept=float(res.intercept),
        slope_stderr=float(res.stderr),
        fit_range=(float(pts[:, 0].min()), float(pts[:, 0].max())),
        n_points=len(pts),
    )
