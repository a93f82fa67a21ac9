"""
Reaction-coordinate (RC) models.

The collective mode is kept explicitly,

    H_RC = H_S + sigma_z g (a + a^+) + w a^+ a,   g = lam / sqrt(2 w),

with ``w = omega_0``; the residual Ohmic bath ``J_res(w) = gamma w`` is
treated either in the zero-temperature Born-Markov-secular (BMS) form in the
``H_RC`` eigenbasis, or by the RWA + flat-bath approximation, which is plain
bare-mode damping at rate ``gamma/2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .bath import BathSpec, QubitSpec
from .qcore import (SIGMA_Z, PropagationConfig, eigendecompose, fock_ops, kron_embed,
                    liouvillian, partial_trace, propagate, qubit_ground_state,
                    qubit_hamiltonian, steady_state)

__all__ = [
    "RcModel", "RcRun", "DegenerateGapWarning", "build_hrc", "bms_dissipator",
    "bms_generator", "rwa_flat_dissipator", "rwa_flat_generator", "rc_generator",
    "emission_rate", "emission_operator", "ground_state_occupation", "renormalized_rc_ground_occupation",
    "run_rc", "rc_steady_state",
]

DEGENERATE_GAP = 1e-10
VARIANTS = ("bms", "rwa_flat")


class DegenerateGapWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RcModel:
    """Qubit plus reaction coordinate.

    ``renormalized`` sets the RC frequency to ``Omega`` instead of
    ``omega_0``; ``rescale_coupling`` then decides whether the coupling
    normalisation follows (``lam/sqrt(2 Omega)``) or stays at
    ``lam/sqrt(2 omega_0)``.
    """

    qubit: QubitSpec
    bath: BathSpec
    cutoff: int = 16
    renormalized: bool = False
    rescale_coupling: bool = True

    def __post_init__(self):
        if self.cutoff < 2:
            raise ValueError("Fock cutoff must be at least 2")

    @property
    def frequency(self) -> float:
        return self.bath.Omega if self.renormalized else self.bath.omega0

    @property
    def coupling(self) -> float:
        w = self.frequency if self.rescale_coupling else self.bath.omega0
        return self.bath.lam / math.sqrt(2 * w)

    @property
    def dim(self) -> int:
        return 2 * self.cutoff

    def operators(self):
        a, ad, n = fock_ops(self.cutoff)
        I2 = np.eye(2)
        return kron_embed([I2, a]), kron_embed([I2, n])

    def position(self):
        """``(a + a^+) / sqrt(2 w)`` on the joint space."""
        a, _ = self.operators()
        return (a + a.conj().T) / math.sqrt(2 * self.frequency)


@dataclass
class RcRun:
    t: np.ndarray
    rho: np.ndarray
    mode_occ: np.ndarray
    emission: np.ndarray
    variant: str


def build_hrc(model: RcModel) -> np.ndarray:
    a, n = model.operators()
    Hs = kron_embed([qubit_hamiltonian(model.qubit), np.eye(model.cutoff)])
    sz = kron_embed([SIGMA_Z, np.eye(model.cutoff)])
    return Hs + model.coupling * sz @ (a + a.conj().T) + model.frequency * n


def _bms_rates(model: RcModel, E, V):
    """Downward rates ``J_res(D_ij) |<psi_j|X|psi_i>|^2`` for ``E_j > E_i``."""
    X = V.conj().T @ model.position() @ V
    gaps = E[None, :] - E[:, None]  # gaps[i, j] = E_j - E_i
    upper = np.triu(np.ones_like(gaps, dtype=bool), k=1)
    degenerate = upper & (np.abs(gaps) < DEGENERATE_GAP)
    if np.any(degenerate & (np.abs(X) ** 2 > 0)):
        warnings.warn(f"{int(degenerate.sum())} degenerate eigenpairs skipped in the "
                      "secular dissipator", DegenerateGapWarning, stacklevel=3)
    mask = upper & ~degenerate
    rates = np.where(mask, model.bath.gamma * gaps * np.abs(X) ** 2, 0.0)
    return rates, gaps


def _to_bare_basis(L_eig, V):
    T = np.kron(V.conj(), V)
    return T @ L_eig @ np.kron(V.T, V.conj().T)


def bms_dissipator(model: RcModel, return_eig=False):
    """Zero-temperature secular dissipator, returned in the bare product basis.

    Each pair ``E_j > E_i`` contributes the jump ``|psi_i><psi_j|`` with rate
    ``J_res(E_j - E_i) X_ij``; pairs closer than ``DEGENERATE_GAP`` are
    skipped with a warning.
    """
    E, V = eigendecompose(build_hrc(model))
    d = E.size
    rates, _ = _bms_rates(model, E, V)
    out_rate = rates.sum(axis=0)  # total decay out of each level j
    idx = lambda r, c: r + c * d
    L = np.zeros((d * d, d * d), dtype=complex)
    a_, b_ = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    L[idx(a_, b_), idx(a_, b_)] = -(out_rate[a_] + out_rate[b_])
    i_, j_ = np.nonzero(rates)
    np.add.at(L, (idx(i_, i_), idx(j_, j_)), 2 * rates[i_, j_])
    if return_eig:
        return L, E, V
    return _to_bare_basis(L, V)


def bms_generator(model: RcModel):
    H = build_hrc(model)
    return liouvillian(H) + bms_dissipator(model)


def rwa_flat_dissipator(model: RcModel):
    """``(gamma/2)(2 a rho a^+ - a^+ a rho - rho a^+ a)`` on the bare mode."""
    a, _ = model.operators()
    return liouvillian(np.zeros_like(a), [(a, model.bath.gamma / 2)])


def rwa_flat_generator(model: RcModel):
    a, _ = model.operators()
    return liouvillian(build_hrc(model), [(a, model.bath.gamma / 2)])


def rc_generator(model: RcModel, variant: str):
    if variant == "bms":
        L = bms_generator(model)
    elif variant == "rwa_flat":
        L = rwa_flat_generator(model)
    else:
        raise ValueError(f"unknown RC variant {variant!r}; expected one of {VARIANTS}")
    return sp.csr_matrix(L)


def emission_operator(model: RcModel, variant: str) -> np.ndarray:
    """Hermitian ``O`` with ``J = tr(O rho)`` for the chosen variant."""
    if variant == "rwa_flat":
        _, n = model.operators()
        return model.bath.gamma * model.frequency * n
    if variant == "bms":
        E, V = eigendecompose(build_hrc(model))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateGapWarning)
            rates, gaps = _bms_rates(model, E, V)
        w = np.sum(gaps * rates, axis=0)
        return (V * w) @ V.conj().T
    raise ValueError(f"unknown RC variant {variant!r}; expected one of {VARIANTS}")


def emission_rate(rho, model: RcModel, variant: str) -> float:
    """Power emitted into the residual bath.

    ``rwa_flat``: ``gamma w <a^+ a>``. ``bms``:
    ``sum_{E_j > E_i} D_ij J_res(D_ij) X_ij <psi_j|rho|psi_j>``.
    """
    return float(np.trace(emission_operator(model, variant) @ np.asarray(rho)).real)


def ground_state_occupation(model: RcModel) -> float:
    """``<psi_0| a^+ a |psi_0>`` for the ground state of ``H_RC``."""
    _, V = eigendecompose(build_hrc(model))
    _, n = model.operators()
    g = V[:, 0]
    return float((g.conj() @ n @ g).real)


def renormalized_rc_ground_occupation(model: RcModel) -> float:
    """Ground-state occupation with the RC frequency set to ``Omega``."""
    m = RcModel(model.qubit, model.bath, model.cutoff, True, model.rescale_coupling)
    return ground_state_occupation(m)


def _initial(model, rho0):
    rho_s = qubit_ground_state(model.qubit) if rho0 is None else np.asarray(rho0, dtype=complex)
    vac = np.zeros((model.cutoff, model.cutoff))
    vac[0, 0] = 1.0
    return np.kron(rho_s, vac)


def _observe(states, model, variant, t):
    _, n = model.operators()
    rho = np.stack([partial_trace(s, [2, model.cutoff], [0]) for s in states])
    occ = np.einsum("ij,tji->t", n, states).real
    O = emission_operator(model, variant)
    em = np.einsum("ij,tji->t", O, states).real
    return RcRun(t, rho, occ, em, variant)


def run_rc(model: RcModel, variant: str, cfg: PropagationConfig, rho0=None) -> RcRun:
    """Propagate from the qubit ground state with the RC in vacuum."""
    L = rc_generator(model, variant)
    states = propagate(L, _initial(model, rho0), cfg)
    return _observe(states, model, variant, cfg.t_grid)


def rc_steady_state(model: RcModel, variant: str):
    """Stationary joint state; returns an :class:`RcRun` at ``t = inf`` and the residual."""
    L = rc_generator(model, variant)
    rho, res = steady_state(L, return_residual=True, dense_check_max=0)
    return _observe(rho[None], model, variant, np.array([np.inf])), res
