"""
Closed-form and quadrature bath quantities for the underdamped Brownian
motion spectral density

.. math:: J(\\omega) = \\frac{\\gamma\\lambda^2\\omega}
          {(\\omega^2-\\omega_0^2)^2 + \\gamma^2\\omega^2}

All quantities are in units with :math:`\\hbar = 1`; the figures and tests
use :math:`\\omega_0 = 1`. The correlation function is split as
``C(t) = C0(t) + M(t)`` into the resonant (non-Matsubara) part and the
Matsubara part.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate

__all__ = [
    "Beta",
    "BathSpec",
    "QubitSpec",
    "ComplexCorrelationSample",
    "QuadratureError",
    "spectral_density",
    "lorentzian_split",
    "correlation_nonmats",
    "matsubara_exact",
    "matsubara_exact_substituted",
    "matsubara_sum",
    "correlation_exact",
    "power_spectrum",
    "power_spectrum_nonmats",
    "effective_beta",
    "effective_beta_closed_form",
    "rwa_markov_correlation",
]


class Beta(enum.Enum):
    """Distinguished inverse-temperature values."""

    INFINITE = "inf"


BetaLike = Union[float, Beta]


class QuadratureError(RuntimeError):
    """Raised when an adaptive quadrature does not reach its tolerance."""


@dataclass(frozen=True)
class BathSpec:
    """Underdamped bath parameters.

    Parameters
    ----------
    lam : float
        Coupling strength lambda.
    gamma : float
        Width of the resonance. Must satisfy ``0 < gamma < 2 * omega0``.
    omega0 : float
        Resonance frequency.
    beta : float or Beta
        Inverse temperature. ``Beta.INFINITE`` is zero temperature.
    """

    lam: float
    gamma: float
    omega0: float = 1.0
    beta: BetaLike = Beta.INFINITE

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.lam < 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if not self.gamma < 2 * self.omega0:
            raise ValueError(
                "only the underdamped regime gamma < 2*omega0 is supported "
                f"(gamma={self.gamma}, omega0={self.omega0})"
            )
        if not isinstance(self.beta, Beta) and not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @property
    def Gamma(self) -> float:
        return self.gamma / 2

    @property
    def Omega(self) -> float:
        return math.sqrt(self.omega0**2 - self.Gamma**2)

    @property
    def zero_temperature(self) -> bool:
        return self.beta is Beta.INFINITE

    def with_lambda(self, lam: float) -> "BathSpec":
        return BathSpec(lam, self.gamma, self.omega0, self.beta)


@dataclass(frozen=True)
class QubitSpec:
    """Qubit ``H_S = omega_q/2 sigma_z + delta/2 sigma_x``."""

    omega_q: float = 0.0
    delta: float = 1.0

    @property
    def omega_bar(self) -> float:
        """Half the level splitting of ``H_S``."""
        return math.hypot(self.omega_q, self.delta) / 2

    @property
    def splitting(self) -> float:
        """Transition frequency between the two eigenstates of ``H_S``."""
        return 2 * self.omega_bar


@dataclass(frozen=True)
class ComplexCorrelationSample:
    t: float
    value: complex

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("correlation samples require t >= 0")


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("correlation functions are only defined here for t >= 0")
    return t


def _matsubara_denominator(x, bath: BathSpec):
    # [(Omega + i Gamma)^2 + x^2][(Omega - i Gamma)^2 + x^2], real for real x
    W, G = bath.Omega, bath.Gamma
    return (x * x + W * W - G * G) ** 2 + 4 * W * W * G * G


def spectral_density(omega, bath: BathSpec):
    """Underdamped Brownian motion spectral density ``J(omega)``."""
    w = np.asarray(omega, dtype=float)
    lam, g, w0 = bath.lam, bath.gamma, bath.omega0
    out = g * lam**2 * w / ((w * w - w0 * w0) ** 2 + g * g * w * w)
    return out if out.ndim else float(out)


def lorentzian_split(omega, bath: BathSpec):
    """``J(omega)`` written as the difference of two Lorentzians at ``+-Omega``."""
    w = np.asarray(omega, dtype=float)
    W, G = bath.Omega, bath.Gamma
    pref = bath.gamma * bath.lam**2 / (4 * W)
    out = pref * (1 / ((w - W) ** 2 + G * G) - 1 / ((w + W) ** 2 + G * G))
    return out if out.ndim else float(out)


def correlation_nonmats(t, bath: BathSpec):
    """Resonant part ``C0(t)`` of the bath correlation function.

    At zero temperature this is ``lam^2/(2 Omega) exp(-(Gamma + i Omega) t)``.
    """
    t = _check_time(t)
    W, G, lam = bath.Omega, bath.Gamma, bath.lam
    if bath.zero_temperature:
        out = lam**2 / (2 * W) * np.exp(-(G + 1j * W) * t)
    else:
        z = bath.beta * (W + 1j * G) / 2
        coth = 1 / np.tanh(z)
        real_part = coth * np.exp(1j * W * t)
        real_part = real_part + np.conj(real_part)
        imag_part = np.exp(-1j * W * t) - np.exp(1j * W * t)
        out = lam**2 * np.exp(-G * t) / (4 * W) * (real_part + imag_part)
    return out if out.ndim else complex(out)


def rwa_markov_correlation(t, bath: BathSpec):
    """Correlation obtained from the RWA + Markov treatment of the Lorentzian split.

    Identical in closed form to the zero-temperature ``C0(t)``.
    """
    if not bath.zero_temperature:
        raise ValueError("the RWA/Markov correlation is derived at zero temperature")
    t = _check_time(t)
    out = bath.lam**2 / (2 * bath.Omega) * np.exp(-bath.Gamma * t) * np.exp(-1j * bath.Omega * t)
    return out if out.ndim else complex(out)


def _quad(f, a, b, epsabs, epsrel, what, **kw):
    val, err, *rest = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel,
                                     limit=kw.pop("limit", 400), full_output=1, **kw)
    info = rest[0] if rest else {}
    tol = max(epsabs, epsrel * abs(val))
    if len(rest) > 1 or err > 10 * tol:
        msg = rest[1] if len(rest) > 1 else ""
        raise QuadratureError(
            f"{what}: quadrature did not converge (value={val:.3e}, "
            f"error estimate={err:.3e}, tolerance={tol:.3e}) {msg}".strip()
        )
    return val, err


def matsubara_exact(t, bath: BathSpec, epsabs: float = 1e-13, epsrel: float = 1e-11):
    """Zero-temperature Matsubara correlation ``M(t)`` by adaptive quadrature.

    Evaluates ``-(gamma lam^2/pi) int_0^inf x e^{-xt} / D(x) dx`` where ``D`` is
    real and positive on the integration path.

    Raises
    ------
    QuadratureError
        If any point fails to meet the requested tolerance.
    """
    if not bath.zero_temperature:
        raise ValueError("matsubara_exact is the zero-temperature integral; use matsubara_sum")
    t = _check_time(t)
    scale = bath.gamma * bath.lam**2 / np.pi
    if scale == 0:
        out = np.zeros_like(t)
        return out if out.ndim else 0.0

    def one(s):
        f = lambda x: x * math.exp(-x * s) / _matsubara_denominator(x, bath)
        v, _ = _quad(f, 0, np.inf, epsabs, epsrel, f"M({s})")
        return -scale * v

    out = np.array([one(s) for s in t.ravel()]).reshape(t.shape)
    return out if out.ndim else float(out)


def matsubara_exact_substituted(t, bath: BathSpec, epsabs: float = 1e-13, epsrel: float = 1e-11):
    """``M(t)`` through the substitution ``x = Omega u / (1 - u)`` on ``[0, 1)``.

    Independent route to :func:`matsubara_exact`, used as a cross-check.
    """
    t = _check_time(t)
    W = bath.Omega
    scale = bath.gamma * bath.lam**2 / np.pi

    def one(s):
        def f(u):
            if u >= 1.0:
                return 0.0
            x = W * u / (1 - u)
            jac = W / (1 - u) ** 2
            return x * math.exp(-x * s) / _matsubara_denominator(x, bath) * jac

        v, _ = _quad(f, 0, 1, epsabs, epsrel, f"M_sub({s})")
        return -scale * v

    out = np.array([one(s) for s in t.ravel()]).reshape(t.shape)
    return out if out.ndim else float(out)


def matsubara_sum(t, bath: BathSpec, k_max: int):
    """Finite-temperature Matsubara correlation truncated after ``k_max`` terms."""
    if bath.zero_temperature:
        raise ValueError("matsubara_sum needs a finite beta")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    t = _check_time(t)
    beta = bath.beta
    wk = 2 * np.pi * np.arange(1, k_max + 1) / beta
    den = _matsubara_denominator(wk, bath)
    terms = wk / den
    e = np.exp(-np.multiply.outer(t, wk))
    out = -2 * bath.lam**2 * bath.gamma / beta * (e @ terms)
    return out if np.ndim(out) else float(out)


def _bose_weight(w, beta):
    # coth(beta w / 2), with the w -> 0 singularity cancelled by J(w) ~ w
    return 1 / np.tanh(beta * w / 2)


def correlation_exact(t, bath: BathSpec, epsabs: float = 1e-13, epsrel: float = 1e-11):
    """Full correlation ``C(t)`` by adaptive Fourier quadrature over ``J``.

    The resonance at ``omega0`` is isolated with breakpoints; the tail beyond
    a few widths is handled by the QAWF routine for oscillatory integrals.
    """
    t = _check_time(t)
    lam = bath.lam
    if lam == 0:
        out = np.zeros(t.shape, dtype=complex)
        return out if out.ndim else 0j

    w0, g = bath.omega0, bath.gamma
    edges = [0.0, max(w0 - 8 * g, w0 / 2), w0, w0 + 8 * g, 4 * w0 + 40 * g]

    def jw(w):
        return spectral_density(w, bath)

    if bath.zero_temperature:
        jr = jw
    else:
        beta = bath.beta

        def jr(w):
            if w == 0:
                return 2 * g * lam**2 / (beta * w0**4)
            return jw(w) * _bose_weight(w, beta)

    def piece(f, weight, s):
        total = 0.0
        if s == 0:
            if weight == "sin":
                return 0.0
            for a, b in zip(edges[:-1], edges[1:]):
                total += _quad(f, a, b, epsabs, epsrel, "C(0)")[0]
            total += _quad(f, edges[-1], np.inf, epsabs, epsrel, "C(0) tail")[0]
            return total
        for a, b in zip(edges[:-1], edges[1:]):
            total += _quad(f, a, b, epsabs, epsrel, f"C({s})", weight=weight, wvar=s)[0]
        # QAWF only takes an absolute tolerance
        v, err, *rest = integrate.quad(f, edges[-1], np.inf, weight=weight, wvar=s,
                                       epsabs=epsabs, limlst=200, full_output=1)
        if len(rest) > 1 and err > 10 * epsabs:
            raise QuadratureError(f"C({s}) tail did not converge: error estimate {err:.3e}")
        return total + v

    def one(s):
        re = piece(jr, "cos", s) / np.pi
        im = -piece(jw, "sin", s) / np.pi
        return complex(re, im)

    out = np.array([one(s) for s in t.ravel()]).reshape(t.shape)
    return out if out.ndim else complex(out)


def power_spectrum(omega, bath: BathSpec):
    """``S(omega) = J(omega) [1 + coth(beta omega / 2)]``.

    At zero temperature this is ``2 J(omega)`` for positive frequencies and
    zero otherwise; at finite temperature ``S(0) = 2 J'(0)/beta``.
    """
    w = np.asarray(omega, dtype=float)
    j = np.asarray(spectral_density(w, bath), dtype=float)
    if bath.zero_temperature:
        out = np.where(w > 0, 2 * j, 0.0)
    else:
        beta = bath.beta
        with np.errstate(divide="ignore", invalid="ignore"):
            coth = 1 / np.tanh(beta * w / 2)
            out = j * (1 + coth)
        dj0 = bath.gamma * bath.lam**2 / bath.omega0**4
        out = np.where(w == 0, 2 * dj0 / beta, out)
    return out if out.ndim else float(out)


def power_spectrum_nonmats(omega, bath: BathSpec):
    """Fourier transform of the zero-temperature ``C0`` extended by ``C0(-t) = C0(t)*``.

    A single Lorentzian centred at ``+Omega``.
    """
    if not bath.zero_temperature:
        raise ValueError("power_spectrum_nonmats is defined at zero temperature")
    w = np.asarray(omega, dtype=float)
    W, G = bath.Omega, bath.Gamma
    out = bath.lam**2 * G / (W * ((w - W) ** 2 + G * G))
    return out if out.ndim else float(out)


def effective_beta(qubit: QubitSpec, bath: BathSpec) -> float:
    """Inverse temperature set by the detailed-balance violation of ``S0``.

    The qubit exchanges energy with the bath at its transition frequency
    ``eps = 2 * omega_bar``, so ``beta_eff = ln[S0(eps)/S0(-eps)] / eps``.
    Returns ``inf`` when the absorption rate vanishes.
    """
    eps = qubit.splitting
    if eps <= 0:
        raise ValueError("effective_beta needs a non-degenerate qubit")
    up = power_spectrum_nonmats(-eps, bath)
    if up == 0:
        return math.inf
    return math.log(power_spectrum_nonmats(eps, bath) / up) / eps


def effective_beta_closed_form(qubit: QubitSpec, bath: BathSpec) -> float:
    """``ln[((eps+Omega)^2 + Gamma^2)/((eps-Omega)^2 + Gamma^2)] / eps``."""
    eps = qubit.splitting
    W, G = bath.Omega, bath.Gamma
    return math.log(((eps + W) ** 2 + G * G) / ((eps - W) ** 2 + G * G)) / eps
