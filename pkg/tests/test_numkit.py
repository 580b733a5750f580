import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import lanczos_gamma, power_iteration
from risrpm.numkit import (
    DFT_ORTHO_TOL,
    EIG_RESIDUAL_RTOL,
    UNIT_NORM_TOL,
    ValidationError,
    complex_normal,
    dft_matrix,
    gamma_fn,
    hermitian_eig_max,
    substream,
    unit_modulus,
)

# Gamma(4.7373), 30-digit reference (mpmath), agrees with the Lanczos oracle
GAMMA_47373 = 16.2840391546747626860592812363


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


def test_eig_identity_and_diagonal():
    lam, v = hermitian_eig_max(np.eye(3))
    assert lam == pytest.approx(1.0)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=UNIT_NORM_TOL)
    lam, v = hermitian_eig_max(np.diag([1.0, 2.0, 3.0]))
    assert lam == pytest.approx(3.0)
    assert abs(v[2]) == pytest.approx(1.0, abs=1e-12)


def test_eig_matches_power_iteration():
    m = random_hermitian(4, 3)
    lam_ref, v_ref = power_iteration(m)
    lam, v = hermitian_eig_max(m)
    assert lam == pytest.approx(lam_ref, rel=1e-10)
    assert abs(np.vdot(v_ref, v)) == pytest.approx(1.0, abs=1e-10)


def test_eig_rejects_non_hermitian():
    m = random_hermitian(3, 0)
    m[0, 1] += 1e-3
    with pytest.raises(ValidationError):
        hermitian_eig_max(m)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_eig_residual_and_rayleigh_bound(n, seed):
    m = random_hermitian(n, seed)
    lam, v = hermitian_eig_max(m)
    assert np.linalg.norm(m @ v - lam * v) <= EIG_RESIDUAL_RTOL * np.linalg.norm(m, 2)
    assert abs(np.linalg.norm(v) - 1) <= UNIT_NORM_TOL
    rng = np.random.default_rng(seed + 1)
    w = complex_normal(rng, n)
    w /= np.linalg.norm(w)
    assert np.real(np.vdot(w, m @ w)) <= lam + 1e-9 * np.linalg.norm(m, 2)


def test_dft_small_cases():
    np.testing.assert_allclose(dft_matrix(1), [[1]])
    np.testing.assert_allclose(dft_matrix(2), [[1, 1], [1, -1]], atol=1e-15)
    f = dft_matrix(5)
    gram = f.conj().T @ f
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) <= DFT_ORTHO_TOL


@given(n=st.integers(1, 40))
def test_dft_scaled_unitary(n):
    f = dft_matrix(n)
    assert np.allclose(np.abs(f), 1.0, atol=1e-15)
    assert np.max(np.abs(f @ f.conj().T - n * np.eye(n))) <= DFT_ORTHO_TOL * n


@pytest.mark.parametrize("n", [0, -1, 2.5])
def test_dft_rejects_bad_size(n):
    with pytest.raises(ValidationError):
        dft_matrix(n)


def test_gamma_values():
    assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-15)
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert lanczos_gamma(4.7373) == pytest.approx(GAMMA_47373, rel=1e-12)
    assert gamma_fn(4.7373) == pytest.approx(GAMMA_47373, rel=1e-10)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_gamma_domain(x):
    with pytest.raises(ValidationError):
        gamma_fn(x)


@given(x=st.floats(0.05, 30.0))
def test_gamma_recurrence(x):
    assert gamma_fn(x + 1) == pytest.approx(x * gamma_fn(x), rel=1e-12)


def test_substream_deterministic_and_independent():
    a = substream(42, 0).standard_normal(1000)
    b = substream(42, 0).standard_normal(1000)
    assert np.array_equal(a, b)
    x = substream(42, 0).standard_normal(100_000)
    y = substream(42, 1).standard_normal(100_000)
    assert abs(np.corrcoef(x, y)[0, 1]) <= 0.02
    # tuple ids are distinct streams too
    assert not np.array_equal(substream(42, (1, 0)).standard_normal(8), substream(42, (0, 1)).standard_normal(8))


def test_complex_normal_variance():
    z = complex_normal(substream(7, 0), 10**6)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)
    z = complex_normal(substream(7, 1), 10**5, var=4.0)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(4.0, rel=0.02)


def test_unit_modulus_zero_maps_to_one():
    out = unit_modulus(np.array([0.0, 3j, -2.0]))
    np.testing.assert_allclose(out, [1.0, 1j, -1.0])
