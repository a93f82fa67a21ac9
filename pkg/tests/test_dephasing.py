import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from spinboson.bath import BathSpec, matsubara_exact
from spinboson.dephasing import (dephasing_exact, dephasing_from_decomposition,
                                 dephasing_matsubara_exact, dephasing_nonmats_exact,
                                 double_integral, error_bound)
from spinboson.fitting import ExpDecomposition, ExpTerm, assemble_decomposition


def _nested(f, t):
    return integrate.quad(lambda tau: integrate.quad(f, 0, tau, epsabs=1e-13, epsrel=1e-12)[0],
                          0, t, epsabs=1e-13, epsrel=1e-12)[0]


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_closed_form_against_nested_quadrature(t):
    terms = (ExpTerm(-0.02, 0.0, 0.5, "matsubara"), ExpTerm(0.04, -0.04, 0.2 - 0.98j),
             ExpTerm(0.04, 0.04, 0.2 + 0.98j))
    dec = ExpDecomposition(terms)
    phi = dephasing_from_decomposition(dec, 0.0, np.array([t])).decoherence_exponent[0]
    ref = 4 * _nested(lambda s: dec.correlation(s).real, t)
    assert phi.real == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("t", [0.5, 3.0])
def test_exact_matsubara_exponent_against_nested_quadrature(t):
    b = BathSpec(0.4, 0.4)
    ref = 4 * _nested(lambda s: matsubara_exact(s, b), t)
    assert dephasing_matsubara_exact(b, np.array([t]))[0] == pytest.approx(ref, rel=1e-7)


def test_nonmats_exponent_consistent_with_decomposition():
    b = BathSpec(0.4, 0.4)
    t = np.linspace(0, 10, 11)
    dec = assemble_decomposition(b, include_matsubara=False)
    fitted = dephasing_from_decomposition(dec, 0.0, t).decoherence_exponent
    np.testing.assert_allclose(fitted.real, dephasing_nonmats_exact(b, t), atol=1e-14)
    np.testing.assert_allclose(fitted.imag, 0, atol=1e-14)


def test_exact_coherence_magnitude_bounded():
    b = BathSpec(1.0, 1.0)
    res = dephasing_exact(b, 0.2, np.linspace(0, 10, 21))
    assert res.coherence[0] == 1
    assert np.all(np.abs(res.coherence) <= 1 + 1e-14)
    assert np.all(np.diff(res.magnitude) < 0)


def test_phase_rotation():
    b = BathSpec(0.0, 0.4)
    t = np.linspace(0, 3, 4)
    dec = assemble_decomposition(b, include_matsubara=False)
    np.testing.assert_allclose(dephasing_from_decomposition(dec, 0.7, t).coherence,
                               np.exp(-0.7j * t), atol=1e-15)


@given(st.floats(0.1, 3.0))
def test_double_integral_polynomial(c):
    t = np.linspace(0, 2, 2001)
    # f = c: I = c t^2 / 2
    np.testing.assert_allclose(double_integral(t, np.full_like(t, c)), c * t**2 / 2, rtol=1e-12)


def test_double_integral_needs_origin():
    with pytest.raises(ValueError):
        double_integral(np.array([0.5, 1.0]), np.ones(2))


def test_error_bound_zero_for_exact_fit():
    t = np.linspace(0, 5, 11)
    np.testing.assert_array_equal(error_bound(t, np.zeros_like(t)), 0)
    with pytest.raises(ValueError):
        error_bound(t, -np.ones_like(t))
