"""Unit-diagonal complex SDP and rank-one recovery.

Solves

    max  tr(Xi Q)   s.t.  diag(Q) = 1,  Q >= 0

for a small Hermitian ``Xi`` with a primal-dual path-following method
(HKM search direction) applied to the real symmetric embedding
``[[Re Xi, -Im Xi], [Im Xi, Re Xi]]``.  The dual is

    min  sum(y)   s.t.  Z = Diag(y) - C >= 0

Starting from ``X = I`` the primal iterate stays exactly feasible, so the
duality gap is simply ``<Z, X>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numkit import ValidationError, check_hermitian, complex_normal, unit_modulus

MAX_ITER = 200
CENTERING = 0.1
GAP_TOL = 1e-7
STEP_FRACTION = 0.95
DIAG_TOL = 1e-7
PSD_TOL = 1e-7
DEGENERATE_TOL = 1e-12
DEFAULT_RANDOMIZATION_SAMPLES = 100


class SdpConvergenceError(RuntimeError):
    def __init__(self, msg: str, last: "SdrSolution"):
        super().__init__(msg)
        self.last = last


class DegenerateInputError(ValidationError):
    pass


@dataclass(frozen=True)
class SdrProblem:
    xi: np.ndarray

    def __post_init__(self):
        xi = check_hermitian(np.asarray(self.xi, dtype=complex), "Xi")
        object.__setattr__(self, "xi", 0.5 * (xi + xi.conj().T))

    @property
    def n(self) -> int:
        return self.xi.shape[0]

    def value(self, v: np.ndarray) -> float:
        """``v^H Xi v`` (real part)."""
        return float(np.real(np.vdot(v, self.xi @ v)))


@dataclass
class SdrSolution:
    """Relaxation optimum.  ``objective`` is the certified dual bound; the
    value ``tr(Xi Q)`` of the returned iterate is in ``meta["primal_objective"]``
    and falls short of it by at most ``duality_gap``."""

    Q: np.ndarray
    objective: float
    duality_gap: float
    iterations: int = 0
    meta: dict = field(default_factory=dict)


def _as_problem(problem) -> SdrProblem:
    return problem if isinstance(problem, SdrProblem) else SdrProblem(problem)


def real_embedding(m: np.ndarray) -> np.ndarray:
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


def _complex_from_embedding(x: np.ndarray, n: int) -> np.ndarray:
    # average the two diagonal blocks; the averaged matrix is the
    # rotation-invariant (hence complex-structured) part of x
    re = 0.5 * (x[:n, :n] + x[n:, n:])
    im = 0.5 * (x[n:, :n] - x[:n, n:])
    q = re + 1j * im
    return 0.5 * (q + q.conj().T)


def _max_step(m_chol: np.ndarray, d: np.ndarray) -> float:
    """Largest a with L L^T + a d still PSD (inf if d is PSD)."""
    li = np.linalg.solve(m_chol, np.eye(m_chol.shape[0]))
    w = np.linalg.eigvalsh(li @ d @ li.T)
    lo = w[0]
    return np.inf if lo >= 0 else -1.0 / lo


def solve_unit_diag_sdp(
    problem,
    max_iter: int = MAX_ITER,
    centering: float = CENTERING,
    gap_tol: float = GAP_TOL,
) -> SdrSolution:
    prob = _as_problem(problem)
    n = prob.n
    scale = float(np.max(np.abs(prob.xi)))
    if scale == 0.0:
        return SdrSolution(np.eye(n, dtype=complex), 0.0, 0.0, 0)

    c = real_embedding(prob.xi / scale)
    m = 2 * n
    eye = np.eye(m)
    x = eye.copy()
    y = np.sum(np.abs(c), axis=1) + 1.0
    z = np.diag(y) - c

    def pack(x, y, z, it):
        # report the dual value: by weak duality it bounds tr(Xi Q) for
        # every feasible Q, so the relaxation-bound property is exact
        q = _complex_from_embedding(x, n)
        primal = float(np.real(np.sum(prob.xi.T * q)))
        dual = 0.5 * float(np.sum(y)) * scale
        return SdrSolution(q, dual, max(dual - primal, 0.0), it, {"primal_objective": primal})

    for it in range(max_iter + 1):
        gap = float(np.sum(z * x))
        pobj = float(np.sum(c * x))
        if gap <= gap_tol * max(1.0, abs(pobj)):
            return pack(x, y, z, it)
        if it == max_iter:
            break

        mu = centering * gap / m
        lz = np.linalg.cholesky(z)
        zi = np.linalg.solve(lz.T, np.linalg.solve(lz, eye))
        schur = zi * x
        rhs = mu * np.diag(zi) - 1.0
        dy = np.linalg.solve(schur, rhs)
        dx = mu * zi - x - (zi * dy[None, :]) @ x
        dx = 0.5 * (dx + dx.T)
        dz = np.diag(dy)

        ap = min(1.0, STEP_FRACTION * _max_step(np.linalg.cholesky(x), dx))
        ad = min(1.0, STEP_FRACTION * _max_step(lz, dz))
        x = x + ap * dx
        x = 0.5 * (x + x.T)
        y = y + ad * dy
        z = np.diag(y) - c

    raise SdpConvergenceError(
        f"SDP did not reach duality gap {gap_tol:g} in {max_iter} iterations", pack(x, y, z, max_iter)
    )


def gaussian_randomize(
    sol: SdrSolution,
    problem,
    num_samples: int = DEFAULT_RANDOMIZATION_SAMPLES,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Best unit-modulus vector among the eigen-factor candidate and random draws.

    Candidates are ``U D^{1/2} 1`` and ``U D^{1/2} k`` with ``k ~ CN(0, I)``,
    each projected entrywise onto the unit circle.  The deterministic
    candidate wins ties.
    """
    if num_samples < 1:
        raise ValidationError("num_samples must be positive")
    prob = _as_problem(problem)
    if rng is None:
        rng = np.random.default_rng()
    vals, vecs = np.linalg.eigh(0.5 * (sol.Q + sol.Q.conj().T))
    factor = vecs * np.sqrt(np.clip(vals, 0.0, None))[None, :]
    n = prob.n

    best = unit_modulus(factor @ np.ones(n))
    best_val = prob.value(best)

    cands = unit_modulus(factor @ complex_normal(rng, (n, num_samples)))
    cvals = np.real(np.einsum("is,ij,js->s", cands.conj(), prob.xi, cands))
    k = int(np.argmax(cvals))
    if cvals[k] > best_val + 1e-12 * max(abs(best_val), np.finfo(float).tiny):
        best = cands[:, k]
    return best


def extract_phases(phi_tilde: np.ndarray) -> np.ndarray:
    """Strip the auxiliary last coordinate: ``phi_g = unit(phi_tilde_g / phi_tilde_last)``."""
    phi_tilde = np.asarray(phi_tilde, dtype=complex)
    ref = phi_tilde[-1]
    if abs(ref) < DEGENERATE_TOL:
        raise DegenerateInputError("auxiliary coordinate is (numerically) zero")
    return unit_modulus(phi_tilde[:-1] / ref)
