import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import grid_search_2, quad_form
from risrpm.numkit import ValidationError, complex_normal, substream, unit_modulus
from risrpm.sdp import (
    DegenerateInputError,
    SdpConvergenceError,
    SdrProblem,
    extract_phases,
    gaussian_randomize,
    solve_unit_diag_sdp,
)


def random_xi(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


def check_feasible(sol, n):
    assert np.max(np.abs(np.diag(sol.Q) - 1)) <= 1e-7
    assert np.linalg.eigvalsh(sol.Q).min() >= -1e-7
    assert sol.duality_gap <= 1e-6 * max(1.0, abs(sol.objective))


def test_zero_objective():
    sol = solve_unit_diag_sdp(SdrProblem(np.zeros((3, 3))))
    assert sol.objective == 0.0
    check_feasible(sol, 3)


def test_rank_one_unit_modulus_xi():
    u = np.exp(1j * np.array([0.3, -1.2, 2.0]))
    sol = solve_unit_diag_sdp(SdrProblem(np.outer(u, u.conj())))
    assert sol.objective == pytest.approx(9.0, rel=1e-6)
    ev = np.linalg.eigvalsh(sol.Q)
    assert ev[-1] == pytest.approx(3.0, rel=1e-6)
    assert np.all(ev[:-1] < 1e-5)


@pytest.mark.parametrize("seed", range(5))
def test_n2_matches_phase_grid(seed):
    xi = random_xi(2, seed)
    ref = grid_search_2(xi)
    sol = solve_unit_diag_sdp(SdrProblem(xi))
    assert sol.objective >= ref - 1e-9 * abs(ref)
    assert sol.objective == pytest.approx(ref, rel=1e-5)


def test_rejects_non_hermitian():
    xi = random_xi(3, 0)
    xi[0, 2] += 0.1
    with pytest.raises(ValidationError):
        SdrProblem(xi)


def test_iteration_cap_raises_with_last_iterate():
    with pytest.raises(SdpConvergenceError) as info:
        solve_unit_diag_sdp(SdrProblem(random_xi(5, 1)), max_iter=2)
    assert info.value.last.Q.shape == (5, 5)


@pytest.mark.parametrize("n", [3, 6, 11])
def test_matches_cvxpy(n):
    cp = pytest.importorskip("cvxpy")
    xi = random_xi(n, 100 + n)
    Q = cp.Variable((n, n), hermitian=True)
    prob = cp.Problem(cp.Maximize(cp.real(cp.trace(xi @ Q))), [cp.diag(Q) == 1, Q >> 0])
    prob.solve(solver=cp.SCS, eps=1e-9, max_iters=200_000)
    sol = solve_unit_diag_sdp(SdrProblem(xi))
    assert sol.objective == pytest.approx(prob.value, rel=1e-5)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 2**32 - 1))
def test_relaxation_bounds_rank_one_points(n, seed):
    xi = random_xi(n, seed)
    prob = SdrProblem(xi)
    sol = solve_unit_diag_sdp(prob)
    check_feasible(sol, n)
    v = unit_modulus(complex_normal(substream(seed, 1), (n, 1000)))
    vals = np.real(np.einsum("is,ij,js->s", v.conj(), prob.xi, v))
    assert vals.max() <= sol.objective + 1e-6 * abs(sol.objective) + 1e-12


def test_randomize_rank_one_passthrough():
    v = np.exp(1j * np.array([0.1, 1.0, -2.0, 2.5]))
    xi = np.outer(v, v.conj())
    prob = SdrProblem(xi)
    sol = solve_unit_diag_sdp(prob)
    out = gaussian_randomize(sol, prob, 10, substream(0, 0))
    assert np.allclose(np.abs(out), 1.0)
    assert prob.value(out) == pytest.approx(16.0, rel=1e-5)
    assert abs(np.vdot(v, out)) / 4 == pytest.approx(1.0, rel=1e-5)


def test_randomize_scalar():
    prob = SdrProblem(np.array([[2.5]]))
    out = gaussian_randomize(solve_unit_diag_sdp(prob), prob, 5, substream(0, 0))
    assert abs(out[0]) == pytest.approx(1.0)
    assert prob.value(out) == pytest.approx(2.5)


def test_randomize_needs_samples():
    prob = SdrProblem(random_xi(3, 0))
    with pytest.raises(ValidationError):
        gaussian_randomize(solve_unit_diag_sdp(prob), prob, 0)


def test_randomize_beats_random_median():
    for seed in range(50):
        prob = SdrProblem(random_xi(4, seed))
        sol = solve_unit_diag_sdp(prob)
        best = gaussian_randomize(sol, prob, 100, substream(seed, 0))
        v = unit_modulus(complex_normal(substream(seed, 1), (4, 1000)))
        med = np.median(np.real(np.einsum("is,ij,js->s", v.conj(), prob.xi, v)))
        assert prob.value(best) >= med


def test_randomize_deterministic():
    prob = SdrProblem(random_xi(5, 9))
    sol = solve_unit_diag_sdp(prob)
    a = gaussian_randomize(sol, prob, 50, substream(3, 0))
    b = gaussian_randomize(sol, prob, 50, substream(3, 0))
    assert np.array_equal(a, b)


def test_extract_phases_examples():
    np.testing.assert_allclose(extract_phases(np.array([np.exp(1j * np.pi / 4), 1])), [np.exp(1j * np.pi / 4)])
    tilde = np.exp(1j * np.pi * np.array([1 / 3, 1 / 6, 1 / 6]))
    np.testing.assert_allclose(extract_phases(tilde), [np.exp(1j * np.pi / 6), 1], atol=1e-15)
    with pytest.raises(DegenerateInputError):
        extract_phases(np.array([1.0, 0.0]))


@given(alpha=st.floats(0, 2 * np.pi), seed=st.integers(0, 1000))
def test_extract_phases_global_phase_invariant(alpha, seed):
    tilde = unit_modulus(complex_normal(substream(seed, 0), 5))
    a = extract_phases(tilde)
    b = extract_phases(np.exp(1j * alpha) * tilde)
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert np.all(np.abs(np.abs(a) - 1) <= 1e-15)
