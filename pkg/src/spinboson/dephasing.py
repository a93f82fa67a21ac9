"""
Pure-dephasing (``delta = 0``) reference solutions and the fit error bound.

With ``Q = sigma_z`` the off-diagonal element evolves as
``rho_01(t) = rho_01(0) exp(-i omega_q t - Phi(t))`` where

    Phi(t) = 4 int_0^t dtau int_0^tau ds Re C(s).

For ``Re C(t) = sum_k a_k exp(-nu_k t)`` (the ``a`` weights of an
:class:`~spinboson.fitting.ExpDecomposition`) this integrates to
``4 sum_k a_k [t/nu_k + (exp(-nu_k t) - 1)/nu_k^2]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .bath import BathSpec, QuadratureError, _matsubara_denominator, _quad
from .fitting import ExpDecomposition

__all__ = [
    "DephasingResult", "dephasing_from_decomposition", "dephasing_exact",
    "dephasing_matsubara_exact", "dephasing_nonmats_exact", "error_bound",
    "double_integral",
]


@dataclass
class DephasingResult:
    t_grid: np.ndarray
    coherence: np.ndarray
    decoherence_exponent: np.ndarray

    @property
    def magnitude(self):
        return np.exp(-self.decoherence_exponent.real)

    def to_rows(self, bound=None):
        b = np.full(self.t_grid.shape, np.nan) if bound is None else bound
        return np.column_stack([self.t_grid, self.coherence.real, self.coherence.imag,
                                self.decoherence_exponent.real, b])


def _phase(omega_q, t, phi):
    # magnitude and phase kept apart to avoid cancellation in exp of a complex sum
    return np.exp(-phi.real) * np.exp(-1j * (omega_q * t + phi.imag))


def _exp_terms_exponent(terms, t):
    phi = np.zeros(t.shape, dtype=complex)
    for term in terms:
        nu = complex(term.nu)
        if not nu.real > 0:
            raise ValueError(f"non-decaying exponent {nu}")
        # expm1 keeps small-t accuracy where t/nu and (e^{-nu t}-1)/nu^2 cancel
        phi += 4 * term.a * (t / nu + np.expm1(-nu * t) / nu**2)
    return phi


def dephasing_from_decomposition(decomp: ExpDecomposition, omega_q: float, t_grid) -> DephasingResult:
    """Closed-form coherence for a sum of decaying exponentials."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be nonnegative")
    phi = _exp_terms_exponent(decomp.terms, t)
    return DephasingResult(t, _phase(omega_q, t, phi), phi)


def dephasing_nonmats_exact(bath: BathSpec, t_grid):
    """Exponent contributed by the resonant part ``C_0`` at zero temperature."""
    if not bath.zero_temperature:
        raise ValueError("zero temperature only")
    t = np.asarray(t_grid, dtype=float)
    A = bath.lam**2 / (4 * bath.Omega)
    nu = complex(bath.Gamma, bath.Omega)
    val = 4 * A * (t / nu + np.expm1(-nu * t) / nu**2)
    return 2 * val.real


def dephasing_matsubara_exact(bath: BathSpec, t_grid, epsabs=1e-13, epsrel=1e-11):
    """Exponent contributed by the full Matsubara integral at zero temperature.

    ``-(4 lam^2 gamma / pi) int_0^inf dx (t + (exp(-x t) - 1)/x) / D(x)``.
    """
    if not bath.zero_temperature:
        raise ValueError("zero temperature only")
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    pref = -4 * bath.lam**2 * bath.gamma / np.pi
    out = np.empty(t.shape)
    for i, s in enumerate(t):
        if s == 0 or pref == 0:
            out[i] = 0.0
            continue

        def f(x, s=s):
            # t + expm1(-x t)/x, series for tiny x t
            xt = x * s
            g = s + math.expm1(-xt) / x if xt > 1e-8 else s * xt / 2
            return g / _matsubara_denominator(x, bath)

        out[i] = pref * _quad(f, 0.0, np.inf, epsabs, epsrel, "Matsubara dephasing")[0]
    return out.reshape(np.shape(t_grid))


def dephasing_exact(bath: BathSpec, omega_q: float, t_grid) -> DephasingResult:
    """Coherence with the exact (unfitted) correlation function."""
    t = np.asarray(t_grid, dtype=float)
    phi = dephasing_nonmats_exact(bath, t) + dephasing_matsubara_exact(bath, t)
    phi = phi.astype(complex)
    return DephasingResult(t, _phase(omega_q, t, phi), phi)


def double_integral(t_grid, f):
    """``I(t) = int_0^t dt' int_0^t' ds f(t' - s) = int_0^t (t - s) f(s) ds`` on the grid.

    Uses ``t int_0^t f - int_0^t s f`` with cumulative trapezoid, exact for
    piecewise-linear ``f``.
    """
    t = np.asarray(t_grid, dtype=float)
    f = np.asarray(f, dtype=float)
    if t.size == 1:
        return np.zeros(1)
    if t[0] != 0:
        raise ValueError("the grid must start at t = 0")
    F0 = integrate.cumulative_trapezoid(f, t, initial=0.0)
    F1 = integrate.cumulative_trapezoid(t * f, t, initial=0.0)
    return t * F0 - F1


def error_bound(t_grid, delta_c_abs, op_norm: float = 1.0):
    """``op_norm (exp(I(t)) - 1)`` with ``I`` the double integral of ``|dC|``."""
    delta_c_abs = np.asarray(delta_c_abs, dtype=float)
    if np.any(delta_c_abs < 0):
        raise ValueError("|dC| samples must be nonnegative")
    return op_norm * np.expm1(double_integral(t_grid, delta_c_abs))
