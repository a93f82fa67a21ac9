import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import given, strategies as st

from spinboson.bath import QubitSpec
from spinboson.qcore import (SIGMA_X, SIGMA_Z, PropagationConfig, eigendecompose, fock_ops,
                             is_hermitian, kron_embed, liouvillian, partial_trace, propagate,
                             qubit_ground_state, qubit_hamiltonian, spost, spre, steady_state,
                             trace_distance, unvec, vec)


def _random_state(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    r = a @ a.conj().T
    return r / np.trace(r)


def test_fock_ops_commutator():
    a, ad, n = fock_ops(6)
    comm = a @ ad - ad @ a
    np.testing.assert_allclose(np.diag(comm)[:-1], 1.0)
    np.testing.assert_allclose(n, ad @ a)


def test_vec_column_stacking():
    rho = np.array([[1, 2], [3, 4]])
    np.testing.assert_array_equal(vec(rho), [1, 3, 2, 4])
    np.testing.assert_array_equal(unvec(vec(rho)), rho)


@given(st.integers(0, 2**31 - 1))
def test_spre_spost_act_as_products(seed):
    rng = np.random.default_rng(seed)
    A, B, X = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
    np.testing.assert_allclose(spre(A) @ vec(X), vec(A @ X), atol=1e-12)
    np.testing.assert_allclose(spost(B) @ vec(X), vec(X @ B), atol=1e-12)


def test_liouvillian_preserves_trace_and_matches_expm():
    H = 0.5 * SIGMA_X + 0.2 * SIGMA_Z
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    L = liouvillian(H, [(sm, 0.3)])
    np.testing.assert_allclose(vec(np.eye(2)).conj() @ L, 0, atol=1e-14)
    rho0 = np.array([[0.3, 0.2], [0.2, 0.7]], dtype=complex)
    t = np.linspace(0, 5, 6)
    out = propagate(L, rho0, PropagationConfig(t, rtol=1e-10, atol=1e-12))
    ref = unvec(sla.expm(np.asarray(L) * 5) @ vec(rho0))
    np.testing.assert_allclose(out[-1], ref, atol=1e-8)


def test_expm_method_agrees():
    H = 0.5 * SIGMA_X
    L = liouvillian(H, [(SIGMA_Z, 0.1)])
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    t = np.linspace(0, 8, 17)
    a = propagate(L, rho0, PropagationConfig(t, rtol=1e-10, atol=1e-12))
    b = propagate(L, rho0, PropagationConfig(t, method="expm"))
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_thermal_lindbladian_steady_state_is_gibbs():
    # detailed-balance jump rates give the Gibbs state as kernel
    beta, w = 1.3, 1.0
    H = 0.5 * w * SIGMA_Z
    sm = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|: lowers energy with H = diag(+,-)
    g = 0.2
    L = liouvillian(H, [(sm, g), (sm.conj().T, g * np.exp(-beta * w))])
    rho = steady_state(L)
    gibbs = sla.expm(-beta * H)
    gibbs /= np.trace(gibbs)
    np.testing.assert_allclose(rho, gibbs, atol=1e-12)


def test_steady_state_detects_degenerate_kernel():
    from spinboson.qcore import SteadyStateError
    L = liouvillian(0.5 * SIGMA_Z)
    with pytest.raises(SteadyStateError):
        steady_state(L)


def test_partial_trace_of_product():
    rng = np.random.default_rng(0)
    a, b = _random_state(rng, 2), _random_state(rng, 3)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), [2, 3], [0]), a, atol=1e-14)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), [2, 3], [1]), b, atol=1e-14)


@given(st.integers(0, 2**31 - 1))
def test_trace_distance_metric(seed):
    rng = np.random.default_rng(seed)
    r, s = _random_state(rng, 2), _random_state(rng, 2)
    d = trace_distance(r, s)
    assert 0 <= d <= 1 + 1e-12
    assert trace_distance(r, r) == pytest.approx(0, abs=1e-14)
    assert d == pytest.approx(trace_distance(s, r), abs=1e-14)


def test_qubit_ground_state():
    q = QubitSpec(0.0, 1.0)
    rho = qubit_ground_state(q)
    E, _ = eigendecompose(qubit_hamiltonian(q))
    assert np.trace(qubit_hamiltonian(q) @ rho).real == pytest.approx(E[0])
    assert E[1] - E[0] == pytest.approx(q.splitting)
    assert is_hermitian(rho)


def test_kron_embed_dimension():
    a, _, _ = fock_ops(4)
    assert kron_embed([np.eye(2), a]).shape == (8, 8)
