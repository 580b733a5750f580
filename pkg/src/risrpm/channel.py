"""Scenario geometry and fading-channel synthesis.

Conventions used throughout the package:

* ``hd`` is the AP-user channel vector; the direct path contributes ``hd^H w``.
* ``hr`` is the RIS-user channel vector; element ``l`` contributes ``conj(hr[l])``.
* ``Gmat`` (L x N) holds the AP-RIS coefficients, row ``l`` for RIS element ``l``.
* ``H`` (G x N) is the grouped cascaded matrix; the reflected path is ``theta^T H w``.

Inside a ``ChannelSet`` the RIS elements are stored in group-major order, so
group ``g`` is the contiguous slice ``[g*Lbar, (g+1)*Lbar)``.  Groups are
rectangular tiles of the ``ris_nx x ris_nz`` array.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numkit import ValidationError, complex_normal, db_to_linear, dbm_to_watts

UNIT_TOL = 1e-9


def tile_grid(nx: int, nz: int, groups: int) -> tuple[int, int]:
    """Number of tiles along (x, z) for ``groups`` rectangular groups.

    Picks the most square factorisation ``gx * gz = groups`` with ``gx <= gz``
    whose factors divide the array sides (so 2 -> 1x2, 4 -> 2x2, 6 -> 2x3
    on a 12x12 surface, i.e. tiles of 12x6, 6x6 and 6x4 elements).
    """
    best = None
    for gx in range(1, groups + 1):
        if groups % gx:
            continue
        gz = groups // gx
        if nx % gx or nz % gz:
            continue
        key = (gx > gz, abs(gz - gx))
        if best is None or key < best[0]:
            best = (key, (gx, gz))
    if best is None:
        raise ValidationError(f"cannot tile a {nx}x{nz} surface into {groups} rectangular groups")
    return best[1]


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical and protocol parameters, stored in configuration units.

    Powers are given in dBm and the reference path loss in dB (as a loss);
    the linear-scale values used by all computations are derived once in
    ``__post_init__`` (``Pt``, ``Pp``, ``sigma2`` in watts, ``C0`` as a gain).
    """

    N: int = 4
    ris_nx: int = 12
    ris_nz: int = 12
    G: int = 4
    Kbar: int = 3
    pt_dbm: float = 20.0
    pp_dbm: float = 10.0
    sigma2_dbm: float = -80.0
    d0: float = 50.0
    dy: float = 45.0
    dz: float = 2.0
    wavelength: float = 0.1
    alpha_au: float = 3.8
    alpha_ar: float = 2.2
    alpha_ru: float = 2.4
    c0_db: float = 30.0
    kappa_au: float = 0.0
    kappa_ar: float = math.inf
    kappa_ru: float = 0.0
    Tc: int = 150
    M: int = 4

    Pt: float = field(init=False, repr=False)
    Pp: float = field(init=False, repr=False)
    sigma2: float = field(init=False, repr=False)
    C0: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 1 or self.ris_nx < 1 or self.ris_nz < 1:
            raise ValidationError("array sizes must be positive")
        if self.G < 1 or self.L % self.G:
            raise ValidationError(
                f"L = {self.L} is not divisible by G = {self.G} (grouping size must be an integer)"
            )
        if not 0 <= self.Kbar <= self.G:
            raise ValidationError(f"Kbar = {self.Kbar} must lie in [0, G = {self.G}]")
        if self.Tc <= self.G + 1:
            raise ValidationError(f"coherence length Tc = {self.Tc} must exceed G + 1 = {self.G + 1}")
        if min(self.d0, self.wavelength) <= 0 or self.dy < 0:
            raise ValidationError("distances and wavelength must be positive")
        if min(self.kappa_au, self.kappa_ar, self.kappa_ru) < 0:
            raise ValidationError("Rician factors must be non-negative")
        if not all(math.isfinite(x) for x in (self.pt_dbm, self.pp_dbm, self.sigma2_dbm, self.c0_db)):
            raise ValidationError("powers and C0 must be finite in dBm / dB (linear values > 0)")
        if self.M < 1:
            raise ValidationError("constellation order must be positive")
        tile_grid(self.ris_nx, self.ris_nz, self.G)
        object.__setattr__(self, "Pt", dbm_to_watts(self.pt_dbm))
        object.__setattr__(self, "Pp", dbm_to_watts(self.pp_dbm))
        object.__setattr__(self, "sigma2", dbm_to_watts(self.sigma2_dbm))
        object.__setattr__(self, "C0", db_to_linear(-self.c0_db))

    @property
    def L(self) -> int:
        return self.ris_nx * self.ris_nz

    @property
    def Lbar(self) -> int:
        return self.L // self.G

    @property
    def tile_shape(self) -> tuple[int, int]:
        gx, gz = tile_grid(self.ris_nx, self.ris_nz, self.G)
        return self.ris_nx // gx, self.ris_nz // gz

    def group_permutation(self) -> np.ndarray:
        """Raster indices (x fastest) of the RIS elements in group-major order."""
        gx, gz = tile_grid(self.ris_nx, self.ris_nz, self.G)
        lx, lz = self.ris_nx // gx, self.ris_nz // gz
        order = []
        for tx in range(gx):
            for tz in range(gz):
                for jz in range(lz):
                    for jx in range(lx):
                        order.append((tz * lz + jz) * self.ris_nx + tx * lx + jx)
        return np.asarray(order)

    def positions(self) -> dict[str, np.ndarray]:
        """Element coordinates; RIS elements in raster order (x fastest)."""
        half = self.wavelength / 2.0
        ap = np.zeros((self.N, 3))
        ap[:, 0] = (np.arange(self.N) - (self.N - 1) / 2.0) * half
        iz, ix = np.divmod(np.arange(self.L), self.ris_nx)
        ris = np.zeros((self.L, 3))
        ris[:, 0] = (ix - (self.ris_nx - 1) / 2.0) * half
        ris[:, 1] = self.d0
        ris[:, 2] = (iz - (self.ris_nz - 1) / 2.0) * half
        return {
            "ap": ap,
            "ris": ris,
            "ap_center": np.zeros(3),
            "ris_center": np.array([0.0, self.d0, 0.0]),
            "user": np.array([0.0, self.dy, self.dz]),
        }

    def distances(self) -> dict[str, float]:
        return {
            "au": math.hypot(self.dy, self.dz),
            "ar": self.d0,
            "ru": math.hypot(self.dy - self.d0, self.dz),
        }


@dataclass(frozen=True)
class ChannelSet:
    Gmat: np.ndarray
    hr: np.ndarray
    hd: np.ndarray
    H: np.ndarray
    tile: tuple[int, int] | None = None

    def __post_init__(self):
        for name in ("Gmat", "hr", "hd", "H"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def from_parts(cls, Gmat, hr, hd, G: int, tile=None) -> "ChannelSet":
        return cls(Gmat, hr, hd, group_cascade_parts(Gmat, hr, G), tile)

    @property
    def G(self) -> int:
        return self.H.shape[0]

    @property
    def N(self) -> int:
        return self.hd.shape[0]


def path_loss(C0: float, d: float, alpha: float) -> float:
    if d <= 0:
        raise ValidationError(f"distance must be positive, got {d}")
    return C0 * d ** (-alpha)


def rician(los: np.ndarray, kappa: float, pl: float, rng: np.random.Generator) -> np.ndarray:
    """``sqrt(k*pl/(k+1)) * los + sqrt(pl/(k+1)) * CN(0, 1)`` elementwise.

    The scattered part is always drawn so that the number of variates taken
    from ``rng`` does not depend on ``kappa``.
    """
    los = np.asarray(los, dtype=complex)
    nlos = complex_normal(rng, los.shape)
    if math.isinf(kappa):
        return math.sqrt(pl) * los
    return math.sqrt(kappa * pl / (kappa + 1.0)) * los + math.sqrt(pl / (kappa + 1.0)) * nlos


def rician_link(d, alpha, kappa, C0, wavelength, rng, size=()) -> np.ndarray:
    """Scalar link coefficients with LoS phase ``exp(-2j*pi*d/wavelength)``."""
    los = np.full(size, np.exp(-2j * np.pi * d / wavelength))
    return rician(los, kappa, path_loss(C0, d, alpha), rng)


def _far_field_phase(wavelength, d, offsets):
    return np.exp(-2j * np.pi * (d + offsets) / wavelength)


def los_components(cfg: ScenarioConfig) -> dict[str, np.ndarray]:
    """Unit-modulus far-field LoS terms for the three links."""
    pos = cfg.positions()
    dist = cfg.distances()
    ca, cr, user = pos["ap_center"], pos["ris_center"], pos["user"]

    u_ar = (cr - ca) / dist["ar"]
    ris_off = (pos["ris"] - cr) @ u_ar
    ap_off = (pos["ap"] - ca) @ u_ar
    g_los = _far_field_phase(cfg.wavelength, dist["ar"], ris_off[:, None] - ap_off[None, :])

    u_ru = (user - cr) / dist["ru"]
    ru_los = _far_field_phase(cfg.wavelength, dist["ru"], -((pos["ris"] - cr) @ u_ru))

    u_au = (user - ca) / dist["au"]
    au_los = _far_field_phase(cfg.wavelength, dist["au"], -((pos["ap"] - ca) @ u_au))
    return {"ar": g_los, "ru": ru_los, "au": au_los}


def sample_channels(cfg: ScenarioConfig, rng: np.random.Generator) -> ChannelSet:
    """One realization of all links.

    Draws are made in raster element order and only then permuted into
    group-major order, so a given ``rng`` state yields the same physical
    channel for every grouping ``cfg.G``.
    """
    dist = cfg.distances()
    los = los_components(cfg)
    Gmat = rician(los["ar"], cfg.kappa_ar, path_loss(cfg.C0, dist["ar"], cfg.alpha_ar), rng)
    c_ru = rician(los["ru"], cfg.kappa_ru, path_loss(cfg.C0, dist["ru"], cfg.alpha_ru), rng)
    c_au = rician(los["au"], cfg.kappa_au, path_loss(cfg.C0, dist["au"], cfg.alpha_au), rng)
    perm = cfg.group_permutation()
    return ChannelSet.from_parts(Gmat[perm], c_ru.conj()[perm], c_au.conj(), cfg.G, cfg.tile_shape)


def group_cascade_parts(Gmat: np.ndarray, hr: np.ndarray, G: int) -> np.ndarray:
    Gmat = np.asarray(Gmat, dtype=complex)
    hr = np.asarray(hr, dtype=complex)
    L, N = Gmat.shape
    if hr.shape != (L,):
        raise ValidationError(f"hr must have length {L}, got shape {hr.shape}")
    if G < 1 or L % G:
        raise ValidationError(f"L = {L} is not divisible by G = {G}")
    return (hr.conj()[:, None] * Gmat).reshape(G, L // G, N).sum(axis=1)


def group_cascade(chset: ChannelSet, G: int) -> np.ndarray:
    """Regroup the ungrouped channels of ``chset`` into ``G`` contiguous groups."""
    return group_cascade_parts(chset.Gmat, chset.hr, G)


def combined_channel(H: np.ndarray, hd: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Row vector ``theta^T H + hd^H``."""
    return np.asarray(theta) @ H + np.asarray(hd).conj()


def received_power(H, hd, theta, w) -> float:
    """``|(theta^T H + hd^H) w|^2`` (normalised by transmit power)."""
    return float(abs(combined_channel(H, hd, theta) @ w) ** 2)


def received_signal(chset: ChannelSet, theta, w, x, Pt: float, noise=0.0) -> complex:
    theta = np.asarray(theta, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if theta.shape != (chset.G,):
        raise ValidationError(f"theta must have length {chset.G}, got shape {theta.shape}")
    if w.shape != (chset.N,):
        raise ValidationError(f"w must have length {chset.N}, got shape {w.shape}")
    if np.linalg.norm(w) > 1 + 1e-12:
        raise ValidationError("beamformer norm exceeds 1")
    mags = np.abs(theta)
    if np.any((np.abs(mags) > UNIT_TOL) & (np.abs(mags - 1) > UNIT_TOL)):
        raise ValidationError("reflection coefficients must have modulus 0 or 1")
    return complex(math.sqrt(Pt) * (combined_channel(chset.H, chset.hd, theta) @ w) * x + noise)
