import warnings

import numpy as np
import pytest

from spinboson.bath import BathSpec, QubitSpec
from spinboson.qcore import PropagationConfig, is_hermitian
from spinboson.rc import (DegenerateGapWarning, RcModel, bms_dissipator, build_hrc, emission_rate,
                          ground_state_occupation, rc_generator, rc_steady_state,
                          renormalized_rc_ground_occupation, run_rc)


def test_hamiltonian_hermitian():
    assert is_hermitian(build_hrc(RcModel(QubitSpec(0.2, 1.0), BathSpec(0.5, 0.3), 8)))


def test_frozen_ground_state_occupations():
    m = RcModel(QubitSpec(), BathSpec(0.2, 0.05), 16)
    assert ground_state_occupation(m) == pytest.approx(0.005126316121627522, rel=1e-10)
    m = RcModel(QubitSpec(), BathSpec(1.0, 1.0), 16)
    assert ground_state_occupation(m) == pytest.approx(0.2232751210517932, rel=1e-10)
    assert renormalized_rc_ground_occupation(m) == pytest.approx(0.40072580596298557, rel=1e-10)


def test_weak_coupling_second_order():
    # g^2 / (1 + 1)^2 with g^2 = lam^2 / 2 and the first excited pair at energy 2
    m = RcModel(QubitSpec(), BathSpec(0.02, 0.05), 8)
    assert ground_state_occupation(m) == pytest.approx(0.02**2 / 8, rel=1e-3)


@pytest.mark.parametrize("variant", ["bms", "rwa_flat"])
def test_generator_trace_preserving(variant):
    m = RcModel(QubitSpec(), BathSpec(0.4, 0.4), 8)
    L = rc_generator(m, variant)
    w = np.eye(m.dim).reshape(-1, order="F")
    assert np.max(np.abs(w @ L)) < 1e-12


def test_bms_steady_state_is_ground_state():
    m = RcModel(QubitSpec(), BathSpec(0.4, 0.4), 12)
    run, res = rc_steady_state(m, "bms")
    assert run.mode_occ[0] == pytest.approx(ground_state_occupation(m), rel=1e-8)
    assert abs(run.emission[0]) < 1e-10


def test_rwa_flat_steady_state_emits():
    m = RcModel(QubitSpec(), BathSpec(0.4, 0.4), 12)
    run, _ = rc_steady_state(m, "rwa_flat")
    assert run.emission[0] > 0
    assert run.mode_occ[0] > ground_state_occupation(m)


def test_degenerate_gap_warning():
    # free RC and a degenerate qubit give exactly degenerate gaps
    m = RcModel(QubitSpec(0.0, 1.0), BathSpec(0.0, 0.4), 4)
    with pytest.warns(DegenerateGapWarning):
        bms_dissipator(m)


def test_run_starts_in_vacuum():
    m = RcModel(QubitSpec(), BathSpec(0.2, 0.05), 8)
    run = run_rc(m, "rwa_flat", PropagationConfig(np.linspace(0, 10, 11)))
    assert run.mode_occ[0] == 0
    assert np.max(np.abs(np.trace(run.rho, axis1=1, axis2=2) - 1)) < 1e-8


def test_invalid_variant():
    with pytest.raises(ValueError):
        rc_generator(RcModel(QubitSpec(), BathSpec(0.2, 0.05), 4), "redfield")
