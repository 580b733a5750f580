"""Uplink training with DFT reflection patterns and the LS channel estimator."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, ScenarioConfig
from .numkit import ValidationError, complex_normal, dft_matrix


@dataclass(frozen=True)
class PilotBlock:
    xp: np.ndarray
    Psi: np.ndarray
    Yp: np.ndarray


@dataclass(frozen=True)
class ChannelEstimate:
    hd_hat: np.ndarray
    H_hat: np.ndarray

    @property
    def augmented(self) -> np.ndarray:
        """``[hd_hat, H_hat^H]`` (N x (G+1))."""
        return np.column_stack([self.hd_hat, self.H_hat.conj().T])


def zadoff_chu(length: int, root: int = 1) -> np.ndarray:
    if length < 1:
        raise ValidationError("sequence length must be positive")
    if math.gcd(root, length) != 1:
        raise ValidationError(f"root {root} is not coprime to length {length}")
    n = np.arange(length)
    # keep the integer part exact before scaling to a phase
    if length % 2:
        k = (root * n * (n + 1)) % (2 * length)
    else:
        k = (root * n * n) % (2 * length)
    return np.exp(-1j * np.pi * k / length)


def augmented_channel(chset: ChannelSet) -> np.ndarray:
    return np.column_stack([chset.hd, chset.H.conj().T])


def run_pilot_phase(
    chset: ChannelSet,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    root: int = 1,
) -> PilotBlock:
    """Simulate ``G+1`` pilot symbols sent by the user under DFT reflection patterns.

    Column ``i`` of ``Yp`` is ``sqrt(Pp) * (H^H psi_i + hd) * xp_i + noise``
    with the pilot noise variance equal to the downlink ``sigma2``.
    """
    n_pil = chset.G + 1
    xp = zadoff_chu(n_pil, root)
    psi = dft_matrix(n_pil)
    noise = complex_normal(rng, (chset.N, n_pil), cfg.sigma2)
    yp = math.sqrt(cfg.Pp) * augmented_channel(chset) @ psi * xp[None, :] + noise
    return PilotBlock(xp, psi, yp)


def estimate_channels(block: PilotBlock, Pp: float) -> ChannelEstimate:
    """LS estimate ``Yp diag(xp)^-1 F^H / (sqrt(Pp) (G+1))``."""
    n_pil = block.xp.shape[0]
    if np.any(np.abs(block.xp) == 0):
        raise ValidationError("pilot sequence has a zero entry")
    f = dft_matrix(n_pil)
    if block.Psi.shape != f.shape or not np.allclose(block.Psi, f, rtol=0, atol=1e-12):
        raise ValidationError("estimator requires the DFT reflection pattern")
    est = (block.Yp / block.xp[None, :]) @ f.conj().T / (math.sqrt(Pp) * n_pil)
    return ChannelEstimate(est[:, 0].copy(), est[:, 1:].conj().T.copy())
