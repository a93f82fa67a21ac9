"""
Pseudo-mode model: the qubit coupled to damped fictitious modes.

    H = H_S + sigma_z sum_i lam_i (a_i + a_i^+) + sum_i zeta_i a_i^+ a_i

Mode 1 reproduces the resonant part of the correlation function
(``zeta = Omega``, ``lam = lam/sqrt(2 Omega)``, loss ``Gamma``); modes 2 and 3
are zero-frequency modes with ``lam_i^2 = c_i`` and loss ``mu_i``. Since the
fitted ``c_i`` are negative the couplings are imaginary and ``H`` is not
Hermitian; the generator uses ``H`` unconjugated on both sides, so the full
density matrix is a general complex matrix. Only its reduction to the qubit
is physical.
"""
from __future__ import annotations

import cmath
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .bath import BathSpec, QubitSpec, correlation_nonmats
from .fitting import FitResult
from .qcore import (SIGMA_Z, PropagationConfig, SteadyStateError, eigendecompose, fock_ops,
                    liouvillian, propagate_observables, qubit_ground_state,
                    qubit_hamiltonian, steady_state, vec)

__all__ = [
    "PseudoMode", "PseudoModeModel", "PseudoModeRun", "FockTruncationWarning",
    "build_pseudomode_generator", "run_pseudomode", "pseudomode_steady_state",
    "free_correlation", "free_correlation_check", "effective_beta_from_steady_state",
]

log = logging.getLogger(__name__)

TOP_FOCK_TOL = 1e-6


class FockTruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PseudoMode:
    frequency: float
    coupling: complex
    rate: float
    cutoff: int

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("pseudo-mode loss rates must be positive")
        if self.cutoff < 2:
            raise ValueError("Fock cutoff must be at least 2")


@dataclass
class PseudoModeModel:
    qubit: QubitSpec
    modes: tuple

    @classmethod
    def from_bath(cls, bath: BathSpec, qubit: QubitSpec, fit: FitResult | None = None,
                  include_matsubara: bool = True, cutoffs=(12, 5, 5)):
        """Resonant mode plus, optionally, the two fitted Matsubara modes.

        ``sqrt(c)`` is taken on the principal branch, so ``c < 0`` gives
        ``i sqrt(|c|)``; only ``lam^2 = c`` enters the generator.
        """
        if not bath.zero_temperature:
            raise ValueError("the pseudo-mode construction here is zero temperature")
        modes = [PseudoMode(bath.Omega, bath.lam / math.sqrt(2 * bath.Omega), bath.Gamma,
                            cutoffs[0])]
        if include_matsubara:
            if fit is None:
                raise ValueError("Matsubara modes need a fit")
            for c, mu, nc in ((fit.c1, fit.mu1, cutoffs[1]), (fit.c2, fit.mu2, cutoffs[2])):
                modes.append(PseudoMode(0.0, cmath.sqrt(c), mu, nc))
        return cls(qubit, tuple(modes))

    @property
    def dims(self):
        return [2] + [m.cutoff for m in self.modes]

    @property
    def hilbert_dim(self):
        return math.prod(self.dims)


@dataclass
class PseudoModeRun:
    t: np.ndarray
    rho: np.ndarray
    mode_occ: np.ndarray
    mode_occ_imag: np.ndarray
    trace_dev: np.ndarray
    herm_dev: np.ndarray
    top_fock_pop: np.ndarray
    min_eig: np.ndarray = field(default=None)
    top_fock_pop_modes: np.ndarray = field(default=None)
    final_state: np.ndarray = field(default=None, repr=False)

    @property
    def max_top_fock_pop(self):
        return float(np.max(self.top_fock_pop))


def _mode_operators(model: PseudoModeModel):
    dims = model.dims
    out = []
    for i, m in enumerate(model.modes, start=1):
        a, _, n = fock_ops(m.cutoff)
        left = math.prod(dims[:i])
        right = math.prod(dims[i + 1:])
        emb = lambda op: sp.kron(sp.kron(sp.identity(left), sp.csr_matrix(op)),
                                 sp.identity(right), format="csr")
        out.append((emb(a), emb(n)))
    return out


def build_pseudomode_generator(model: PseudoModeModel):
    """Sparse generator ``-i(H rho - rho H) + sum_i G_i D[a_i]``."""
    D = model.hilbert_dim
    if D > 20_000:
        raise ValueError(f"pseudo-mode Hilbert dimension {D} exceeds limit")
    M = D // 2
    Hs = sp.kron(sp.csr_matrix(qubit_hamiltonian(model.qubit)), sp.identity(M), format="csr")
    sz = sp.kron(sp.csr_matrix(SIGMA_Z), sp.identity(M), format="csr")
    H = Hs.astype(complex)
    jumps = []
    for mode, (a, n) in zip(model.modes, _mode_operators(model)):
        H = H + mode.coupling * (sz @ (a + a.conj().T)) + mode.frequency * n
        jumps.append((a, mode.rate))
    L = liouvillian(H, jumps)
    return sp.csr_matrix(L)


def _functionals(model: PseudoModeModel):
    """Rows: reduced qubit state (column-stacked), trace, occupations, top-level populations."""
    dims = model.dims
    D = math.prod(dims)
    M = D // 2
    rows, cols, vals = [], [], []
    # rho_S[i, j] = sum_m rho[i M + m, j M + m]; column-stacked index r + c D
    m = np.arange(M)
    for k, (i, j) in enumerate([(0, 0), (1, 0), (0, 1), (1, 1)]):
        rows.append(np.full(M, k))
        cols.append((i * M + m) + (j * M + m) * D)
        vals.append(np.ones(M))
    diag_cols = np.arange(D) * (D + 1)
    rows.append(np.full(D, 4))
    cols.append(diag_cols)
    vals.append(np.ones(D))
    levels = np.indices(dims).reshape(len(dims), -1)
    nm = len(model.modes)
    for i, mode in enumerate(model.modes, start=1):
        rows.append(np.full(D, 4 + i))
        cols.append(diag_cols)
        vals.append(levels[i].astype(float))
        top = np.nonzero(levels[i] == mode.cutoff - 1)[0]
        rows.append(np.full(top.size, 4 + nm + i))
        cols.append(diag_cols[top])
        vals.append(np.ones(top.size))
    W = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(5 + 2 * nm, D * D))
    return W


def _unpack(obs, nm):
    rho = obs[:, :4].reshape(-1, 2, 2).transpose(0, 2, 1)
    trace = obs[:, 4]
    occ = obs[:, 5:5 + nm]
    top = obs[:, 5 + nm:5 + 2 * nm]
    return rho, trace, occ, top


def _diagnose(t, rho, trace, occ, top, check_fock=True):
    herm = np.max(np.abs(rho - rho.conj().transpose(0, 2, 1)), axis=(1, 2))
    min_eig = np.array([np.linalg.eigvalsh((r + r.conj().T) / 2)[0] for r in rho])
    top_abs = np.abs(top)
    worst = float(np.max(top_abs)) if top_abs.size else 0.0
    if check_fock and worst > TOP_FOCK_TOL:
        warnings.warn(f"top Fock level population {worst:.3e} exceeds {TOP_FOCK_TOL:g}; "
                      "increase the pseudo-mode cutoff", FockTruncationWarning, stacklevel=3)
    if occ.size:
        log.debug("max |Im occupation| %.3e", float(np.max(np.abs(occ.imag))))
    return PseudoModeRun(t, rho, occ.real, occ.imag, np.abs(trace - 1), herm,
                         np.max(top_abs, axis=1), min_eig, np.max(top_abs, axis=0))


def _initial_vector(model, rho0):
    rho_s = qubit_ground_state(model.qubit) if rho0 is None else np.asarray(rho0, dtype=complex)
    if abs(np.trace(rho_s) - 1) > 1e-12:
        raise ValueError("initial state must have unit trace")
    vac = np.zeros(model.hilbert_dim // 2)
    vac[0] = 1.0
    return vec(np.kron(rho_s, np.diag(vac)))


def run_pseudomode(model: PseudoModeModel, cfg: PropagationConfig, rho0=None,
                   initial_vector=None) -> PseudoModeRun:
    """Evolve qubit state ``rho0`` (default: ground state) with every mode in vacuum.

    ``initial_vector`` continues from a full (vectorised) pseudo-mode state
    instead, e.g. the ``final_state`` of an earlier run.
    """
    L = build_pseudomode_generator(model)
    W = _functionals(model)
    y0 = _initial_vector(model, rho0) if initial_vector is None else initial_vector
    obs, y = propagate_observables(L, y0, cfg, W, return_final=True)
    run = _diagnose(cfg.t_grid, *_unpack(obs, len(model.modes)))
    run.final_state = y
    return run


DIRECT_STEADY_MAX = 4096


def pseudomode_steady_state(model: PseudoModeModel, method: str = "auto", tol: float = 1e-7,
                            chunk: float | None = None, t_max: float = 2000.0,
                            initial_vector=None, propagation: PropagationConfig | None = None):
    """Stationary state of the pseudo-mode generator.

    ``method="direct"`` solves for the kernel by sparse LU; the multi-mode
    generator is an 8-index lattice operator whose factorisation fill grows
    very fast, so ``"auto"`` uses it only up to ``DIRECT_STEADY_MAX``
    unknowns. Otherwise (``"relax"``) the state is propagated in chunks until
    the reduced state and occupations change by less than ``tol`` over one
    chunk.

    Returns
    -------
    run : PseudoModeRun
        Single time point (``t = inf`` for direct, the stopping time for relax).
    residual : float
        ``||L x||`` (direct) or the last chunk change (relax).
    """
    L = build_pseudomode_generator(model)
    D = model.hilbert_dim
    W = _functionals(model)
    nm = len(model.modes)
    n = L.shape[0]
    if method == "auto":
        method = "direct" if n <= DIRECT_STEADY_MAX else "relax"
    if method == "direct":
        x, res = steady_state(L, trace_vector=vec(np.eye(D)), return_residual=True,
                              dense_check_max=1024)
        obs = np.asarray(W @ x).reshape(1, -1)
        run = _diagnose(np.array([np.inf]), *_unpack(obs, nm))
        run.final_state = x
        return run, res
    if method != "relax":
        raise ValueError(f"unknown steady-state method {method!r}")

    slowest = min(min(m.rate for m in model.modes), 1.0)
    chunk = chunk or 5.0 / slowest
    base = propagation or PropagationConfig()
    y = _initial_vector(model, None) if initial_vector is None else initial_vector
    t0, prev = 0.0, np.asarray(W @ y).ravel()
    while True:
        cfg = PropagationConfig(t_grid=np.array([t0, t0 + chunk]), method=base.method,
                                rtol=base.rtol, atol=base.atol, max_step=base.max_step)
        obs, y = propagate_observables(L, y, cfg, W, return_final=True)
        t0 += chunk
        change = float(np.max(np.abs(obs[-1] - prev)))
        prev = obs[-1]
        if change < tol:
            break
        if t0 >= t_max:
            raise SteadyStateError(f"no stationarity by t={t0:g} (last change {change:.3e})")
    run = _diagnose(np.array([t0]), *_unpack(prev.reshape(1, -1), nm))
    run.final_state = y
    return run, change


def free_correlation(model: PseudoModeModel, t_grid, cfg: PropagationConfig | None = None):
    """``<F(t) F(0)>`` of ``F = sum_i lam_i (a_i + a_i^+)`` under the free mode generator.

    Quantum regression: propagate ``F rho_vac`` with the mode-only generator
    and take ``tr[F sigma(t)]``.
    """
    modes_only = PseudoModeModel(model.qubit, model.modes)
    dims = [m.cutoff for m in model.modes]
    D = math.prod(dims)
    H = sp.csr_matrix((D, D), dtype=complex)
    F = sp.csr_matrix((D, D), dtype=complex)
    jumps = []
    for i, mode in enumerate(modes_only.modes):
        a, _, n = fock_ops(mode.cutoff)
        left, right = math.prod(dims[:i]), math.prod(dims[i + 1:])
        emb = lambda op: sp.kron(sp.kron(sp.identity(left), sp.csr_matrix(op)),
                                 sp.identity(right), format="csr")
        H = H + mode.frequency * emb(n)
        F = F + mode.coupling * emb(a + a.conj().T)
        jumps.append((emb(a), mode.rate))
    L = sp.csr_matrix(liouvillian(H, jumps))
    vac = np.zeros((D, D), dtype=complex)
    vac[0, 0] = 1.0
    sigma0 = vec(F @ vac)
    t = np.asarray(t_grid, dtype=float)
    cfg = cfg or PropagationConfig(t_grid=t, method="DOP853", rtol=1e-12, atol=1e-14)
    W = sp.csr_matrix(vec(F.toarray().T).reshape(1, -1))
    return propagate_observables(L, sigma0, cfg, W)[:, 0]


def free_correlation_check(model: PseudoModeModel, bath: BathSpec, t_grid,
                           fit: FitResult | None = None) -> float:
    """``max_t |C_pm(t) - (C_0(t) + M_biexp(t))|``; ``fit`` may be omitted for one mode."""
    t = np.asarray(t_grid, dtype=float)
    target = correlation_nonmats(t, bath)
    if len(model.modes) > 1:
        if fit is None:
            raise ValueError("a fit is needed to compare the Matsubara modes")
        target = target + fit(t)
    return float(np.max(np.abs(free_correlation(model, t) - target)))


def effective_beta_from_steady_state(rho_s, qubit: QubitSpec, tol: float = 1e-6) -> float:
    """``ln(p_ground / p_excited) / (2 omega_bar)`` from eigenbasis populations.

    A warning is issued when the state has eigenbasis coherences above
    ``tol``; ``inf`` is returned when the excited population vanishes (to rounding).
    """
    _, V = eigendecompose(qubit_hamiltonian(qubit))
    r = V.conj().T @ np.asarray(rho_s) @ V
    if abs(r[0, 1]) > tol:
        warnings.warn(f"steady state has eigenbasis coherence {abs(r[0, 1]):.3e}", stacklevel=2)
    pg, pe = r[0, 0].real, r[1, 1].real
    # populations at rounding level count as zero
    if pe <= 10 * np.finfo(float).eps:
        return math.inf
    return math.log(pg / pe) / (2 * qubit.omega_bar)
