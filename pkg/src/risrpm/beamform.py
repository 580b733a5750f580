"""Active/passive beamforming designs.

Group indices are 0-based throughout (``Iset = (0, 2)`` means groups 1 and 3
are ON).  Phase vectors ``phi`` hold the unit-modulus diagonal of ``Phi``;
the reflection vector for an ON/OFF state ``s`` is ``theta = phi * s``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import sdp
from .numkit import ValidationError, hermitian_eig_max

ALG1_EPS = 1e-4
ALG1_MAX_ITER = 5
INST_EPS = 1e-6
INST_MAX_ITER = 50
SCHEMES = ("rpm_statistical", "rpm_instantaneous", "no_it_full_on", "no_ris_mrt", "random_phase", "pbit")


@dataclass(frozen=True)
class OnOffStatistics:
    """Second-order statistics ``A = E[s s^T]`` and ``a = E[s]`` of the ON/OFF vector."""

    A: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        a = np.asarray(self.a, dtype=float)
        if A.shape != (a.size, a.size) or not np.allclose(A, A.T, atol=0):
            raise ValidationError("A must be a symmetric G x G matrix matching a")
        if np.any(np.diag(A) < 0) or np.any(np.diag(A) > 1):
            raise ValidationError("diagonal of A must lie in [0, 1]")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "a", a)

    @property
    def G(self) -> int:
        return self.a.size

    @property
    def Atilde(self) -> np.ndarray:
        g = self.G
        out = np.empty((g + 1, g + 1))
        out[:g, :g] = self.A
        out[:g, g] = self.a
        out[g, :g] = self.a
        out[g, g] = 1.0
        return out

    @property
    def mean_on(self) -> float:
        """``E[s^T s]``, the average number of ON groups."""
        return float(np.trace(self.A))


def onoff_stats_rpm(G: int, Kbar: int) -> OnOffStatistics:
    """Statistics when every size-``Kbar`` subset of groups is equally likely."""
    if G < 1:
        raise ValidationError("G must be positive")
    if not 0 <= Kbar <= G:
        raise ValidationError(f"Kbar = {Kbar} must lie in [0, G = {G}]")
    off = Kbar * (Kbar - 1) / (G * (G - 1)) if G > 1 else 0.0
    A = np.full((G, G), off)
    np.fill_diagonal(A, Kbar / G)
    return OnOffStatistics(A, np.full(G, Kbar / G))


def onoff_stats_pbit(G: int) -> OnOffStatistics:
    """Statistics of i.i.d. fair ON/OFF coins: ``A = (11^T + I)/4``, ``a = 1/2``."""
    if G < 1:
        raise ValidationError("G must be positive")
    return OnOffStatistics(0.25 * (np.ones((G, G)) + np.eye(G)), np.full(G, 0.5))


def apply_onoff(phi: np.ndarray, Iset: Sequence[int]) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex)
    idx = np.asarray(sorted(Iset), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= phi.size):
        raise ValidationError(f"ON indices {list(Iset)} out of range for G = {phi.size}")
    theta = np.zeros_like(phi)
    theta[idx] = phi[idx]
    return theta


@dataclass
class ReflectionState:
    phi: np.ndarray
    Iset: tuple[int, ...]

    @property
    def s(self) -> np.ndarray:
        s = np.zeros(len(self.phi))
        s[list(self.Iset)] = 1.0
        return s

    @property
    def theta(self) -> np.ndarray:
        return apply_onoff(self.phi, self.Iset)


@dataclass
class BeamformSolution:
    w: np.ndarray
    phi: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = True
    theta: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else float("nan")


class PhaseSubproblem(NamedTuple):
    Lambda: np.ndarray
    gd: complex


def _check_dims(w, phi, H_hat, hd_hat):
    H_hat = np.asarray(H_hat, dtype=complex)
    hd_hat = np.asarray(hd_hat, dtype=complex)
    G, N = H_hat.shape
    if hd_hat.shape != (N,):
        raise ValidationError(f"hd_hat must have length {N}")
    if w is not None and np.shape(w) != (N,):
        raise ValidationError(f"w must have length {N}")
    if phi is not None and np.shape(phi) != (G,):
        raise ValidationError(f"phi must have length {G}")
    return H_hat, hd_hat


def _stacked(phi, H_hat, hd_hat) -> np.ndarray:
    return np.vstack([np.asarray(phi)[:, None] * H_hat, hd_hat.conj()[None, :]])


def avg_power_objective(w, phi, H_hat, hd_hat, stats: OnOffStatistics) -> float:
    """``E_s |(s^T Phi H + hd^H) w|^2`` for the ON/OFF statistics ``stats``."""
    H_hat, hd_hat = _check_dims(w, phi, H_hat, hd_hat)
    v = _stacked(phi, H_hat, hd_hat) @ np.asarray(w)
    return max(float(np.real(np.vdot(v, stats.Atilde @ v))), 0.0)


def solve_w_given_phi(phi, H_hat, hd_hat, stats: OnOffStatistics) -> tuple[np.ndarray, float]:
    """Dominant eigenvector of ``R = B^H Atilde B`` with ``B = [Phi H; hd^H]``."""
    H_hat, hd_hat = _check_dims(None, phi, H_hat, hd_hat)
    B = _stacked(phi, H_hat, hd_hat)
    R = B.conj().T @ stats.Atilde @ B
    R = 0.5 * (R + R.conj().T)
    lam, v = hermitian_eig_max(R)
    return v, max(lam, 0.0)


def phase_subproblem(w, H_hat, hd_hat) -> PhaseSubproblem:
    return PhaseSubproblem(np.asarray(H_hat) @ w, complex(np.vdot(hd_hat, w)))


def phase_objective(phi, sub: PhaseSubproblem, stats: OnOffStatistics) -> float:
    """Phase-dependent part of the average power for fixed ``w`` (drops ``|gd|^2``)."""
    u = sub.Lambda * phi
    quad = np.real(np.vdot(u, stats.A @ u))
    cross = 2.0 * np.real(sub.gd * np.vdot(u, stats.a))
    return float(quad + cross)


def build_xi(sub: PhaseSubproblem, stats: OnOffStatistics) -> np.ndarray:
    lam = sub.Lambda
    G = lam.size
    xi = np.zeros((G + 1, G + 1), dtype=complex)
    xi[:G, :G] = lam.conj()[:, None] * stats.A * lam[None, :]
    col = sub.gd * lam.conj() * stats.a
    xi[:G, G] = col
    xi[G, :G] = col.conj()
    return xi


def solve_phi_given_w(
    w,
    H_hat,
    hd_hat,
    stats: OnOffStatistics,
    rng: np.random.Generator | None = None,
    prev_phi=None,
    num_samples: int = sdp.DEFAULT_RANDOMIZATION_SAMPLES,
) -> np.ndarray:
    """Passive beamforming for fixed ``w`` via SDR and Gaussian randomization.

    If ``prev_phi`` is given and scores strictly better than the recovered
    vector, it is returned instead, so the phase step never loses ground.
    """
    H_hat, hd_hat = _check_dims(w, prev_phi, H_hat, hd_hat)
    if rng is None:
        rng = np.random.default_rng(0)
    sub = phase_subproblem(w, H_hat, hd_hat)
    problem = sdp.SdrProblem(build_xi(sub, stats))
    sol = sdp.solve_unit_diag_sdp(problem)
    phi = sdp.extract_phases(sdp.gaussian_randomize(sol, problem, num_samples, rng))
    if prev_phi is not None:
        prev_phi = np.asarray(prev_phi, dtype=complex)
        if phase_objective(prev_phi, sub, stats) > phase_objective(phi, sub, stats):
            return prev_phi
    return phi


def alternating_optimize_statistical(
    H_hat,
    hd_hat,
    stats: OnOffStatistics,
    eps: float = ALG1_EPS,
    max_iter: int = ALG1_MAX_ITER,
    rng: np.random.Generator | None = None,
    num_samples: int = sdp.DEFAULT_RANDOMIZATION_SAMPLES,
) -> BeamformSolution:
    """Alternate the eigenvector ``w`` step and the SDR phase step from ``Phi = I``.

    ``objective_trace[0]`` is the objective after the initial ``w`` step; each
    further entry follows one phase step plus one ``w`` step.  Stops when the
    fractional increase drops below ``eps`` or after ``max_iter`` iterations.
    """
    if eps <= 0 or max_iter < 1:
        raise ValidationError("need eps > 0 and max_iter >= 1")
    H_hat, hd_hat = _check_dims(None, None, H_hat, hd_hat)
    if rng is None:
        rng = np.random.default_rng(0)
    phi = np.ones(H_hat.shape[0], dtype=complex)
    w, obj = solve_w_given_phi(phi, H_hat, hd_hat, stats)
    trace = [obj]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        phi = solve_phi_given_w(w, H_hat, hd_hat, stats, rng, prev_phi=phi, num_samples=num_samples)
        w, new = solve_w_given_phi(phi, H_hat, hd_hat, stats)
        trace.append(new)
        if new - obj <= eps * obj:
            converged = True
            break
        obj = new
    return BeamformSolution(
        w, phi, trace, it, converged,
        meta={"randomization_samples": num_samples, "mean_on_groups": stats.mean_on},
    )


class InstantaneousSolution(NamedTuple):
    w: np.ndarray
    theta_I: np.ndarray
    objective: float
    trace: list
    iterations: int


def _initial_w(H_I: np.ndarray, hd: np.ndarray) -> np.ndarray:
    n = hd.size
    if np.linalg.norm(hd) > 0:
        return hd / np.linalg.norm(hd)
    if H_I.size and np.linalg.norm(H_I) > 0:
        return np.linalg.svd(H_I)[2][0].conj()
    w = np.zeros(n, dtype=complex)
    w[0] = 1.0
    return w


def alternating_optimize_instantaneous(
    H_I, hd_hat, eps: float = INST_EPS, max_iter: int = INST_MAX_ITER
) -> InstantaneousSolution:
    """Co-phase the ON groups with the direct path, then MRT; repeat.

    ``H_I`` holds the rows of the estimated cascaded matrix for the ON groups.
    When the direct term vanishes the reflected terms are aligned to phase 0.
    """
    hd = np.asarray(hd_hat, dtype=complex)
    H_I = np.asarray(H_I, dtype=complex).reshape(-1, hd.size)
    w = _initial_w(H_I, hd)
    theta = np.ones(H_I.shape[0], dtype=complex)
    trace: list[float] = []
    it = 0
    for it in range(1, max_iter + 1):
        theta = _cophase(H_I, hd, w)
        c = theta @ H_I + hd.conj()
        nc = np.linalg.norm(c)
        if nc > 0:
            w = c.conj() / nc
        obj = float(nc**2)
        trace.append(obj)
        if len(trace) > 1 and obj - trace[-2] <= eps * trace[-2]:
            break
    # realign to the final w so the co-phasing condition holds exactly;
    # for fixed w this step cannot lower |(theta^T H_I + hd^H) w|
    theta = _cophase(H_I, hd, w)
    trace.append(max(float(abs((theta @ H_I + hd.conj()) @ w) ** 2), trace[-1]))
    return InstantaneousSolution(w, theta, trace[-1], trace, it)


def _cophase(H_I: np.ndarray, hd: np.ndarray, w: np.ndarray) -> np.ndarray:
    a = H_I @ w
    d = np.vdot(hd, w)
    scale = np.sum(np.abs(a)) + abs(d)
    ref = np.angle(d) if abs(d) > 1e-15 * scale else 0.0
    return np.exp(1j * (ref - np.angle(a)))


def instantaneous_for_set(H_hat, hd_hat, Iset, **kw) -> BeamformSolution:
    """Wrap :func:`alternating_optimize_instantaneous` for an ON set of a G-group surface."""
    H_hat = np.asarray(H_hat, dtype=complex)
    idx = sorted(Iset)
    sol = alternating_optimize_instantaneous(H_hat[idx], hd_hat, **kw)
    phi = np.ones(H_hat.shape[0], dtype=complex)
    phi[idx] = sol.theta_I
    return BeamformSolution(
        sol.w, phi, list(sol.trace), sol.iterations, True, theta=apply_onoff(phi, idx)
    )


def random_phases(G: int, rng: np.random.Generator) -> np.ndarray:
    # phase drawn on (0, 2*pi]
    return np.exp(-1j * (2 * np.pi - rng.uniform(0.0, 2 * np.pi, G)))


def scheme_select(
    name: str,
    H_hat,
    hd_hat,
    *,
    Kbar: int | None = None,
    Iset: Sequence[int] | None = None,
    rng: np.random.Generator | None = None,
    eps: float = ALG1_EPS,
    max_iter: int = ALG1_MAX_ITER,
    num_samples: int = sdp.DEFAULT_RANDOMIZATION_SAMPLES,
) -> BeamformSolution:
    """Dispatch to one of the designs listed in ``SCHEMES``."""
    H_hat, hd_hat = _check_dims(None, None, H_hat, hd_hat)
    G = H_hat.shape[0]
    if rng is None:
        rng = np.random.default_rng(0)
    if name == "rpm_statistical":
        if Kbar is None:
            raise ValidationError("rpm_statistical needs Kbar")
        return alternating_optimize_statistical(
            H_hat, hd_hat, onoff_stats_rpm(G, Kbar), eps, max_iter, rng, num_samples
        )
    if name == "pbit":
        sol = alternating_optimize_statistical(
            H_hat, hd_hat, onoff_stats_pbit(G), eps, max_iter, rng, num_samples
        )
        sol.meta["mean_on_groups"] = G / 2
        return sol
    if name == "rpm_instantaneous":
        if Iset is None:
            raise ValidationError("rpm_instantaneous needs the ON set Iset")
        return instantaneous_for_set(H_hat, hd_hat, Iset)
    if name == "no_it_full_on":
        return instantaneous_for_set(H_hat, hd_hat, range(G))
    if name == "no_ris_mrt":
        nd = np.linalg.norm(hd_hat)
        w = hd_hat / nd if nd > 0 else _initial_w(np.zeros((0, hd_hat.size)), hd_hat)
        obj = float(abs(np.vdot(hd_hat, w)) ** 2)
        return BeamformSolution(w, np.ones(G, dtype=complex), [obj], 0, True, theta=np.zeros(G, dtype=complex))
    if name == "random_phase":
        if Kbar is None:
            raise ValidationError("random_phase needs Kbar")
        stats = onoff_stats_rpm(G, Kbar)
        phi = random_phases(G, rng)
        w, obj = solve_w_given_phi(phi, H_hat, hd_hat, stats)
        return BeamformSolution(w, phi, [obj], 0, True)
    raise ValidationError(f"unknown scheme {name!r}; expected one of {SCHEMES}")
