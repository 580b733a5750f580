"""Outage analysis of the single-antenna (N = 1) Rayleigh scenario.

With unit-variance direct and cascaded coefficients, the received power is
``X = |chi_0 + sum_{k in I} chi_k|^2``.  Under optimal phases every term is
co-phased, so ``X = (sum |chi_k|)^2`` (square of a sum of ``Kbar+1`` Rayleigh
variables); with unit phases ``X`` is ``|CN(0, Kbar+1)|^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from .numkit import ValidationError, complex_normal, gamma_fn

PHASE_MODES = ("optimal", "unit")
MC_CHUNK = 200_000


@dataclass(frozen=True)
class GammaApprox:
    k_x: float
    theta_x: float
    EX: float
    EX2: float


@dataclass(frozen=True)
class OutageQuery:
    Kbar: int
    R: float
    gamma: float
    phase_mode: str = "optimal"

    def __post_init__(self):
        if self.Kbar < 0 or int(self.Kbar) != self.Kbar:
            raise ValidationError("Kbar must be a non-negative integer")
        if not self.R > 0 or not self.gamma > 0:
            raise ValidationError("need R > 0 and gamma > 0")
        if self.phase_mode not in PHASE_MODES:
            raise ValidationError(f"phase_mode must be one of {PHASE_MODES}")

    @property
    def threshold(self) -> float:
        """Outage occurs when ``X < (2^R - 1) / gamma``."""
        return (2.0**self.R - 1.0) / self.gamma


class ClampedProbability(NamedTuple):
    p: float
    clamped: bool


def _clamp(p: float) -> ClampedProbability:
    if p > 1.0:
        return ClampedProbability(1.0, True)
    if p < 0.0:
        return ClampedProbability(0.0, True)
    return ClampedProbability(p, False)


def gamma_approx_params(Kbar: int) -> GammaApprox:
    """Moment-matched Gamma law for ``X = (sum of Kbar+1 unit Rayleigh)^2``."""
    if Kbar < 0:
        raise ValidationError("Kbar must be non-negative")
    k = float(Kbar)
    n = k + 1.0
    pi = math.pi
    ex = n * (1.0 + pi / 4.0 * k)
    ex2 = (
        2.0 * n
        + (1.5 * pi + 3.0) * n * k
        + 1.5 * pi * n * k * (k - 1.0)
        + pi**2 / 16.0 * n * k * (k - 1.0) * (k - 2.0)
    )
    var = ex2 - ex**2
    return GammaApprox(ex**2 / var, var / ex, ex, ex2)


def outage_closed_form(q: OutageQuery) -> ClampedProbability:
    """High-SNR Gamma approximation ``(delta/theta)^k / Gamma(k+1)``, ``delta = (2^R-1)/gamma``."""
    if q.phase_mode != "optimal":
        raise ValidationError("closed form applies to optimal phases; use outage_unit_phase")
    g = gamma_approx_params(q.Kbar)
    p = (q.threshold / g.theta_x) ** g.k_x / gamma_fn(g.k_x + 1.0)
    return _clamp(p)


def outage_unit_phase(q: OutageQuery) -> ClampedProbability:
    if q.phase_mode != "unit":
        raise ValidationError("unit-phase approximation needs phase_mode='unit'")
    return _clamp(q.threshold / (q.Kbar + 1.0))


def outage_exact_unit(Kbar: int, R: float, gamma: float) -> float:
    """Exact unit-phase outage: ``X`` is exponential with mean ``Kbar + 1``."""
    return -math.expm1(-(2.0**R - 1.0) / ((Kbar + 1.0) * gamma))


def _indicator_chunk(q: OutageQuery, n: int, rng) -> np.ndarray:
    chi = complex_normal(rng, (n, q.Kbar + 1))
    if q.phase_mode == "optimal":
        x = np.sum(np.abs(chi), axis=1) ** 2
    else:
        x = np.abs(np.sum(chi, axis=1)) ** 2
    return (x < q.threshold).astype(float)


def _conditional_chunk(q: OutageQuery, n: int, rng) -> np.ndarray:
    # integrate the direct-link term out analytically given the reflected ones
    chi = complex_normal(rng, (n, q.Kbar))
    delta = q.threshold
    if q.phase_mode == "optimal":
        gap = np.clip(math.sqrt(delta) - np.sum(np.abs(chi), axis=1), 0.0, None)
        return -np.expm1(-(gap**2))
    z = np.sum(chi, axis=1)
    # |CN(z, 1)|^2 * 2 is noncentral chi-square with 2 dof and noncentrality 2|z|^2
    return stats.ncx2.cdf(2.0 * delta, 2, 2.0 * np.abs(z) ** 2) if q.Kbar else np.full(n, -math.expm1(-delta))


def outage_monte_carlo(
    q: OutageQuery,
    G: int,
    trials: int,
    rng: np.random.Generator,
    method: str = "indicator",
) -> tuple[float, float]:
    """Monte-Carlo outage estimate and its standard error.

    ``method="indicator"`` counts outage events directly, with standard error
    ``sqrt(p(1-p)/trials)``.  ``method="conditional"`` averages the exact
    outage probability given the reflected terms (the direct term is
    integrated out), which keeps the estimator unbiased while resolving
    probabilities far below ``1/trials``; its standard error is the sample
    standard deviation over ``sqrt(trials)``.
    """
    if trials < 1:
        raise ValidationError("trials must be positive")
    if q.Kbar > G:
        raise ValidationError(f"Kbar = {q.Kbar} exceeds G = {G}")
    chunk = _indicator_chunk if method == "indicator" else _conditional_chunk
    if method not in ("indicator", "conditional"):
        raise ValidationError(f"unknown method {method!r}")
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        n = min(MC_CHUNK, trials - done)
        v = chunk(q, n, rng)
        total += float(np.sum(v))
        total_sq += float(np.sum(v * v))
        done += n
    p = total / trials
    if method == "indicator":
        se = math.sqrt(p * (1.0 - p) / trials)
    else:
        var = max(total_sq / trials - p * p, 0.0) * trials / max(trials - 1, 1)
        se = math.sqrt(var / trials)
    return p, se


def diversity_slope(gammas, probs) -> float:
    """Least-squares slope of ``log p`` against ``log gamma`` (zero estimates dropped)."""
    g = np.asarray(gammas, dtype=float)
    p = np.asarray(probs, dtype=float)
    keep = p > 0
    if keep.sum() < 2:
        raise ValidationError("need at least two positive outage estimates to fit a slope")
    return float(np.polyfit(np.log(g[keep]), np.log(p[keep]), 1)[0])
