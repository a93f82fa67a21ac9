import warnings

import numpy as np
import pytest

from spinboson.bath import BathSpec, QubitSpec
from spinboson.pseudomode import (FockTruncationWarning, PseudoMode, PseudoModeModel,
                                  effective_beta_from_steady_state, free_correlation_check,
                                  pseudomode_steady_state, run_pseudomode)
from spinboson.qcore import PropagationConfig

T = np.linspace(0, 20, 201)


def test_branch_of_negative_coupling(fits):
    b = BathSpec(0.4, 0.4)
    m = PseudoModeModel.from_bath(b, QubitSpec(), fits[(0.4, 0.4)], cutoffs=(4, 3, 3))
    assert m.dims == [2, 4, 3, 3]
    c = m.modes[1].coupling
    assert c.real == 0 and c.imag > 0
    assert (c * c).real == pytest.approx(fits[(0.4, 0.4)].c1)


def test_invalid_mode():
    with pytest.raises(ValueError):
        PseudoMode(1.0, 0.1, 0.0, 4)
    with pytest.raises(ValueError):
        PseudoMode(1.0, 0.1, 0.2, 1)


def test_single_mode_correlation():
    b = BathSpec(0.4, 0.4)
    m = PseudoModeModel.from_bath(b, QubitSpec(), include_matsubara=False, cutoffs=(6,))
    assert free_correlation_check(m, b, np.linspace(0, 20, 41)) < 1e-8


def test_three_mode_correlation(fits):
    b = BathSpec(0.4, 0.4)
    m = PseudoModeModel.from_bath(b, QubitSpec(), fits[(0.4, 0.4)], cutoffs=(4, 3, 3))
    assert free_correlation_check(m, b, np.linspace(0, 20, 41), fits[(0.4, 0.4)]) < 1e-8


def test_run_invariants():
    b = BathSpec(0.4, 0.4)
    m = PseudoModeModel.from_bath(b, QubitSpec(), include_matsubara=False, cutoffs=(10,))
    run = run_pseudomode(m, PropagationConfig(T))
    assert np.max(run.trace_dev) < 1e-8
    assert np.max(run.herm_dev) < 1e-6
    assert np.min(run.min_eig) > -1e-6
    assert run.max_top_fock_pop < 1e-6


def test_truncation_warning():
    b = BathSpec(1.0, 1.0)
    m = PseudoModeModel.from_bath(b, QubitSpec(), include_matsubara=False, cutoffs=(2,))
    with pytest.warns(FockTruncationWarning):
        run_pseudomode(m, PropagationConfig(np.linspace(0, 5, 11)))


def test_relaxation_matches_direct():
    b = BathSpec(0.4, 0.4)
    m = PseudoModeModel.from_bath(b, QubitSpec(), include_matsubara=False, cutoffs=(8,))
    d, _ = pseudomode_steady_state(m, method="direct")
    r, res = pseudomode_steady_state(m, method="relax", tol=1e-9)
    assert res < 1e-9
    np.testing.assert_allclose(r.rho[0], d.rho[0], atol=1e-7)
    assert r.mode_occ[0, 0] == pytest.approx(d.mode_occ[0, 0], abs=1e-7)


def test_effective_beta_weak_coupling_limit():
    # golden-rule populations at vanishing coupling: p_e = (1 - Omega) / 2
    b = BathSpec(0.001, 0.5)
    q = QubitSpec()
    m = PseudoModeModel.from_bath(b, q, include_matsubara=False, cutoffs=(3,))
    run, _ = pseudomode_steady_state(m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        beta = effective_beta_from_steady_state(run.rho[0], q)
    pe = (1 - b.Omega) / 2
    assert beta == pytest.approx(np.log((1 - pe) / pe), rel=1e-4)


def test_effective_beta_infinite_for_ground_state():
    from spinboson.qcore import qubit_ground_state
    assert effective_beta_from_steady_state(qubit_ground_state(QubitSpec()), QubitSpec()) == np.inf
