"""Finite-alphabet achievable rate with reflection pattern modulation.

The user decodes the pair (ON set, symbol).  Given effective noiseless
constellation points ``z_{j,m} = c_j a_m`` (``c_j`` the combined channel
under ON set ``S_j``) and ``u ~ CN(0, 1)``, the conditional mutual
information is

    log2(J M) - 1/(J M) sum_{j,m} E_u log2 sum_{j',m'}
        exp(-|u + snr^(1/2) (z_{j,m} - z_{j',m'})|^2 + |u|^2)

which equals the ``log2 J + log2 M - log2 e - ...`` form with
``E|u|^2 = 1`` taken exactly instead of by sampling.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import comb, logsumexp

from .beamform import alternating_optimize_instantaneous
from .channel import ChannelSet
from .numkit import ValidationError, complex_normal

DEFAULT_NOISE_SAMPLES = 200
_PAIR_BUDGET = 2_000_000
LOG2E = 1.0 / math.log(2.0)


@dataclass(frozen=True)
class ComboIndex:
    """Equiprobable ON sets, 0-based, in lexicographic order."""

    G: int
    Kbar: int | None
    sets: tuple[tuple[int, ...], ...]

    @property
    def J(self) -> int:
        return len(self.sets)

    def masks(self) -> np.ndarray:
        """J x G 0/1 matrix of ON/OFF vectors."""
        s = np.zeros((self.J, self.G))
        for j, idx in enumerate(self.sets):
            s[j, list(idx)] = 1.0
        return s


def combo_index_set(G: int, Kbar: int) -> ComboIndex:
    if not 0 <= Kbar <= G:
        raise ValidationError(f"Kbar = {Kbar} must lie in [0, G = {G}]")
    return ComboIndex(G, Kbar, tuple(itertools.combinations(range(G), Kbar)))


def all_onoff_states(G: int) -> ComboIndex:
    """All 2^G ON/OFF patterns (independent fair coins per group)."""
    sets = tuple(idx for k in range(G + 1) for idx in itertools.combinations(range(G), k))
    return ComboIndex(G, None, sets)


def combo_rank(idx: Sequence[int], G: int) -> int:
    """Lexicographic rank of a sorted K-subset of ``range(G)``."""
    idx = sorted(idx)
    k = len(idx)
    rank, prev = 0, -1
    for i, c in enumerate(idx):
        for v in range(prev + 1, c):
            rank += math.comb(G - v - 1, k - i - 1)
        prev = c
    return rank


def combo_unrank(rank: int, G: int, Kbar: int) -> tuple[int, ...]:
    if not 0 <= rank < math.comb(G, Kbar):
        raise ValidationError("rank out of range")
    out, v = [], 0
    for i in range(Kbar):
        while True:
            c = math.comb(G - v - 1, Kbar - i - 1)
            if rank < c:
                break
            rank -= c
            v += 1
        out.append(v)
        v += 1
    return tuple(out)


def bits_per_pattern(G: int, Kbar: int) -> int:
    return int(math.floor(math.log2(comb(G, Kbar, exact=True))))


def bits_to_combo(bits: str, G: int, Kbar: int) -> tuple[int, ...]:
    """Map ``floor(log2 C(G, Kbar))`` bits to an ON set by lexicographic rank."""
    nb = bits_per_pattern(G, Kbar)
    if len(bits) != nb or set(bits) - {"0", "1"}:
        raise ValidationError(f"expected a {nb}-bit binary string")
    return combo_unrank(int(bits, 2) if nb else 0, G, Kbar)


@dataclass(frozen=True)
class Constellation:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        if pts.size == 0:
            raise ValidationError("empty constellation")
        if abs(np.mean(np.abs(pts) ** 2) - 1.0) > 1e-12:
            raise ValidationError("constellation must have unit average power")
        if np.unique(np.round(pts, 12)).size != pts.size:
            raise ValidationError("constellation points must be distinct")
        object.__setattr__(self, "points", pts)

    @property
    def M(self) -> int:
        return self.points.size

    @classmethod
    def qpsk(cls) -> "Constellation":
        # Gray labels 00, 01, 10, 11 -> bits (b0, b1) map to (1-2*b0) + j(1-2*b1)
        labels = [(0, 0), (0, 1), (1, 0), (1, 1)]
        return cls(np.array([(1 - 2 * b0) + 1j * (1 - 2 * b1) for b0, b1 in labels]) / math.sqrt(2))

    @classmethod
    def psk(cls, M: int) -> "Constellation":
        if M == 4:
            return cls.qpsk()
        return cls(np.exp(2j * np.pi * np.arange(M) / M))


@dataclass(frozen=True)
class EffectiveChannels:
    g_r: np.ndarray
    g_d: complex


@dataclass(frozen=True)
class RateEstimate:
    mean_bits: float
    stderr: float
    noise_samples: int
    channel_samples: int = 1


def effective_channels(w, phi, H, hd) -> EffectiveChannels:
    """Per-group effective channels ``Phi H w`` and the direct term ``hd^H w``."""
    return EffectiveChannels(np.asarray(phi) * (np.asarray(H) @ w), complex(np.vdot(hd, w)))


def combined_gains(eff: EffectiveChannels, combos: ComboIndex) -> np.ndarray:
    return combos.masks() @ eff.g_r + eff.g_d if combos.G else np.full(combos.J, eff.g_d)


def mutual_information(gains, constellation: Constellation, snr: float, noise: np.ndarray) -> RateEstimate:
    """MI (bits) of equiprobable points ``gains[j] * a_m`` in CN(0, 1/snr) noise.

    ``noise`` holds standard CN(0, 1) samples used for the expectation.
    """
    if not snr > 0:
        raise ValidationError("snr must be positive")
    z = (np.asarray(gains)[:, None] * constellation.points[None, :]).ravel()
    P = z.size
    diff = math.sqrt(snr) * (z[:, None] - z[None, :])
    u = np.asarray(noise, dtype=complex)
    per_sample = np.empty(u.size)
    step = max(1, _PAIR_BUDGET // (P * P))
    for s0 in range(0, u.size, step):
        uu = u[s0:s0 + step][:, None, None]
        expo = -np.abs(uu + diff[None]) ** 2 + np.abs(uu) ** 2
        per_sample[s0:s0 + step] = np.mean(logsumexp(expo, axis=2), axis=1) * LOG2E
    n = u.size
    mean = math.log2(P) - float(np.mean(per_sample))
    se = float(np.std(per_sample, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return RateEstimate(max(mean, 0.0), se, n)


def _noise(noise, noise_samples, rng):
    if noise is not None:
        return np.asarray(noise)
    if noise_samples < 1:
        raise ValidationError("noise_samples must be positive")
    if rng is None:
        raise ValidationError("need rng or pre-drawn noise")
    return complex_normal(rng, noise_samples)


def rate_practical(
    eff: EffectiveChannels,
    combos: ComboIndex,
    constellation: Constellation,
    Pt: float,
    sigma2: float,
    noise_samples: int = DEFAULT_NOISE_SAMPLES,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> RateEstimate:
    """Conditional rate for one channel realization with a fixed (w, Phi) design."""
    if not sigma2 > 0:
        raise ValidationError("sigma2 must be positive")
    u = _noise(noise, noise_samples, rng)
    return mutual_information(combined_gains(eff, combos), constellation, Pt / sigma2, u)


def instantaneous_gains(H_true, hd_true, combos: ComboIndex, H_design=None, hd_design=None) -> np.ndarray:
    """``f(S_j) = (theta_S^T H_S + hd^H) w`` with (w, theta) optimised per ON set.

    The design uses ``H_design``/``hd_design`` (estimates) when given; the
    returned gains are evaluated on the true channels.
    """
    H_true = np.asarray(H_true)
    hd_true = np.asarray(hd_true)
    H_d = H_true if H_design is None else np.asarray(H_design)
    hd_d = hd_true if hd_design is None else np.asarray(hd_design)
    out = np.empty(combos.J, dtype=complex)
    for j, idx in enumerate(combos.sets):
        idx = list(idx)
        sol = alternating_optimize_instantaneous(H_d[idx], hd_d)
        out[j] = (sol.theta_I @ H_true[idx] + hd_true.conj()) @ sol.w
    return out


def rate_upper_bound(
    chset: ChannelSet,
    combos: ComboIndex,
    constellation: Constellation,
    Pt: float,
    sigma2: float,
    noise_samples: int = DEFAULT_NOISE_SAMPLES,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
    estimate=None,
) -> RateEstimate:
    """Rate when (w, theta) are re-optimised for every ON set (instantaneous knowledge)."""
    if not sigma2 > 0:
        raise ValidationError("sigma2 must be positive")
    u = _noise(noise, noise_samples, rng)
    H_d = None if estimate is None else estimate.H_hat
    hd_d = None if estimate is None else estimate.hd_hat
    gains = instantaneous_gains(chset.H, chset.hd, combos, H_d, hd_d)
    return mutual_information(gains, constellation, Pt / sigma2, u)


def overhead_ratio(G: int, Tc: float) -> float:
    if Tc <= G + 1:
        raise ValidationError(f"Tc = {Tc} must exceed G + 1 = {G + 1}")
    return (G + 1) / Tc


def effective_rate_with_overhead(rate: float, G: int, Tc: float) -> float:
    """Scale a rate by the data fraction ``1 - (G+1)/Tc`` of the coherence block."""
    if math.isinf(Tc):
        return rate
    return (1.0 - overhead_ratio(G, Tc)) * rate


def average(estimates: Sequence[RateEstimate]) -> RateEstimate:
    """Average per-realization rates; stderr is across realizations."""
    vals = np.array([e.mean_bits for e in estimates])
    n = vals.size
    se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return RateEstimate(float(vals.mean()), se, estimates[0].noise_samples, n)
