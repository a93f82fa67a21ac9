import numpy as np
import pytest

from spinboson.bath import BathSpec, QubitSpec
from spinboson.dephasing import dephasing_from_decomposition
from spinboson.fitting import assemble_decomposition
from spinboson.heom import (HeomConfig, HierarchyTooLarge, build_hierarchy, convergence_scan,
                            enumerate_indices, heom_steady_state, hierarchy_size, run_heom)
from spinboson.qcore import PropagationConfig, trace_distance

T = np.linspace(0, 20, 201)


def test_hierarchy_size_binomial():
    assert hierarchy_size(4, 8) == 495
    assert len(enumerate_indices(4, 8)) == 495
    assert len(enumerate_indices(2, 3)) == 10
    assert enumerate_indices(2, 3)[0] == (0, 0)


def test_memory_guard():
    dec = assemble_decomposition(BathSpec(0.2, 0.05), include_matsubara=False)
    with pytest.raises(HierarchyTooLarge):
        build_hierarchy(HeomConfig(dec, 400, False, memory_budget=1e6), QubitSpec())


def test_zero_coupling_is_free_qubit():
    q = QubitSpec(0.3, 1.0)
    dec = assemble_decomposition(BathSpec(0.0, 0.3), include_matsubara=False)
    rho0 = np.array([[1, 0], [0, 0]], dtype=complex)
    run = run_heom(HeomConfig(dec, 3, False, PropagationConfig(T)), q, rho0=rho0)
    H = np.array([[0.15, 0.5], [0.5, -0.15]])
    E, V = np.linalg.eigh(H)
    U = V @ np.diag(np.exp(-1j * E * 20)) @ V.conj().T
    np.testing.assert_allclose(run.rho[-1], U @ rho0 @ U.conj().T, atol=1e-7)


def test_pure_dephasing_matches_closed_form(fits):
    b = BathSpec(0.4, 0.4)
    q = QubitSpec(0.0, 0.0)
    dec = assemble_decomposition(b, fits[(0.4, 0.4)])
    plus = np.full((2, 2), 0.5, dtype=complex)
    run = run_heom(HeomConfig(dec, 10, True, PropagationConfig(T, rtol=1e-10, atol=1e-12)), q, rho0=plus)
    ref = 0.5 * dephasing_from_decomposition(dec, 0.0, T).coherence
    assert np.max(np.abs(run.rho[:, 0, 1] - ref)) < 1e-6


def test_trace_and_hermiticity():
    b = BathSpec(0.4, 0.4)
    dec = assemble_decomposition(b, include_matsubara=False)
    run = run_heom(HeomConfig(dec, 8, False, PropagationConfig(T)), QubitSpec(), b)
    assert np.max(run.trace_deviation) < 1e-8
    assert np.max(np.abs(run.rho - run.rho.conj().transpose(0, 2, 1))) < 1e-10
    assert np.min(np.linalg.eigvalsh(run.rho)) > -1e-6


def test_mode_occupation_real_and_positive():
    b = BathSpec(0.4, 0.4)
    dec = assemble_decomposition(b, include_matsubara=False)
    run = run_heom(HeomConfig(dec, 8, False, PropagationConfig(T)), QubitSpec(), b)
    assert run.mode_occ[0] == 0
    assert np.all(run.mode_occ[1:] > 0)
    assert np.max(np.abs(run.mode_occ_imag)) < 1e-8


def test_steady_state_matches_long_time_limit():
    b = BathSpec(0.4, 0.4)
    dec = assemble_decomposition(b, include_matsubara=False)
    cfg = HeomConfig(dec, 8, False, PropagationConfig(np.linspace(0, 150, 4)))
    ss, res = heom_steady_state(cfg, QubitSpec(), b)
    run = run_heom(cfg, QubitSpec(), b)
    assert res < 1e-10
    assert trace_distance(ss.rho[0], run.rho[-1]) < 1e-6


def test_convergence_scan_reports_decreasing_differences(fits):
    b = BathSpec(0.4, 0.4)
    dec = assemble_decomposition(b, fits[(0.4, 0.4)])
    rep = convergence_scan(HeomConfig(dec, 4, True, PropagationConfig(T)), QubitSpec(), [4, 6, 8])
    assert rep.max_differences[0] > rep.max_differences[1]
    assert rep.converged
