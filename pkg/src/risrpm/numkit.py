"""Small dense numerical kernels shared across the package.

Everything here works on matrices of dimension at most a few dozen, so the
routines favour clarity and tight tolerances over speed.
"""
from __future__ import annotations

import math
from typing import Sequence, Union

import numpy as np

HERMITIAN_RTOL = 1e-12
EIG_RESIDUAL_RTOL = 1e-9
UNIT_NORM_TOL = 1e-12
DFT_ORTHO_TOL = 1e-12

StreamId = Union[int, Sequence[int]]


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


def check_hermitian(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    scale = np.max(np.abs(m))
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_RTOL * scale:
        raise ValidationError(f"{name} is not Hermitian within {HERMITIAN_RTOL:g} relative")
    return m


def hermitian_eig_max(m: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of a Hermitian matrix and a unit-norm eigenvector."""
    m = check_hermitian(m, "M")
    # symmetrize away the rounding-level skew part before handing to LAPACK
    herm = 0.5 * (m + m.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    v = vecs[:, -1]
    v = v / np.linalg.norm(v)
    return float(vals[-1]), v


def dft_matrix(n: int) -> np.ndarray:
    """``F[i, k] = exp(-2j*pi*i*k/n)`` for ``i, k = 0..n-1``."""
    if int(n) != n or n < 1:
        raise ValidationError(f"DFT size must be a positive integer, got {n!r}")
    n = int(n)
    idx = np.arange(n)
    # reduce the exponent modulo n so entries stay exactly periodic
    return np.exp(-2j * np.pi * (np.outer(idx, idx) % n) / n)


def gamma_fn(x: float) -> float:
    if not x > 0:
        raise ValidationError(f"gamma_fn is defined here for x > 0 only, got {x!r}")
    return math.gamma(x)


def substream(master_seed: int, stream_id: StreamId = 0) -> np.random.Generator:
    """Independent generator for ``(master_seed, stream_id)``.

    ``stream_id`` may be a tuple of non-negative ints, which is how the harness
    keys streams by (trial, purpose, ...).
    """
    key = (int(stream_id),) if np.isscalar(stream_id) else tuple(int(s) for s in stream_id)
    if any(k < 0 for k in key):
        raise ValidationError("stream ids must be non-negative")
    seq = np.random.SeedSequence(entropy=int(master_seed) & ((1 << 64) - 1), spawn_key=key)
    return np.random.Generator(np.random.PCG64(seq))


def complex_normal(rng: np.random.Generator, shape=(), var: float = 1.0) -> np.ndarray:
    """Circularly symmetric CN(0, var) draws."""
    scale = math.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def unit_modulus(x: np.ndarray) -> np.ndarray:
    """Project entries onto the unit circle; exact zeros map to 1."""
    x = np.asarray(x, dtype=complex)
    mag = np.abs(x)
    out = np.ones_like(x)
    nz = mag > 0
    out[nz] = x[nz] / mag[nz]
    return out


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w) + 30.0
