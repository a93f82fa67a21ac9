"""
Hierarchical equations of motion for a qubit coupled through ``sigma_z``.

The auxiliary density operators (ADOs) are indexed by multi-indices over the
exponents of an :class:`~spinboson.fitting.ExpDecomposition` and obey

    d rho_n/dt = (-i L_S - sum_k n_k nu_k) rho_n
                 - i sum_k [Q, rho_{n+e_k}]
                 - i sum_k n_k (a_k [Q, rho_{n-e_k}] + b_k {Q, rho_{n-e_k}})

with bare (unscaled) ADOs and the hierarchy truncated at ``sum n_k <= N_c``
by dropping every ADO beyond it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .bath import BathSpec, QubitSpec
from .fitting import ExpDecomposition
from .qcore import (SIGMA_Z, PropagationConfig, propagate, qubit_ground_state,
                    qubit_hamiltonian, spost, spre, steady_state, trace_distance,
                    vec)

__all__ = [
    "HeomConfig", "HierarchyState", "HeomRun", "HierarchyTooLarge",
    "hierarchy_size", "enumerate_indices", "build_hierarchy", "run_heom",
    "heom_steady_state", "mode_occupation_from_ados", "convergence_scan",
    "ConvergenceReport",
]


class HierarchyTooLarge(MemoryError):
    pass


def hierarchy_size(K: int, N_c: int) -> int:
    """Number of multi-indices of length ``K`` with total at most ``N_c``."""
    if K < 0 or N_c < 0:
        raise ValueError("K and N_c must be nonnegative")
    return math.comb(N_c + K, K)


def enumerate_indices(K: int, N_c: int):
    """All multi-indices in order of increasing level, lexicographic within a level."""
    out = []
    for level in range(N_c + 1):
        for combo in itertools.combinations_with_replacement(range(K), level):
            n = [0] * K
            for k in combo:
                n[k] += 1
            out.append(tuple(n))
    out.sort(key=lambda n: (sum(n), tuple(-x for x in n)))
    return out


@dataclass
class HeomConfig:
    decomposition: ExpDecomposition
    cutoff: int = 8
    include_matsubara: bool = True
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    memory_budget: float = 2e9

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError("hierarchy cutoff must be at least 1")
        if len(self.active_terms) not in (2, 4):
            raise ValueError("the hierarchy expects 2 or 4 exponential terms")

    @property
    def active_terms(self):
        if self.include_matsubara:
            return tuple(self.decomposition.terms)
        return tuple(t for t in self.decomposition.terms if t.kind != "matsubara")


@dataclass
class HierarchyState:
    """ADOs at one time, ``ados[j]`` belonging to ``indices[j]``."""

    indices: list
    ados: np.ndarray
    t: float = 0.0
    _lookup: dict = field(default=None, repr=False)

    def __post_init__(self):
        if self._lookup is None:
            self._lookup = {n: j for j, n in enumerate(self.indices)}

    @classmethod
    def from_vector(cls, indices, y, t=0.0, lookup=None):
        ados = np.asarray(y).reshape(len(indices), 2, 2).transpose(0, 2, 1)
        return cls(indices, ados, t, lookup)

    def ado(self, n):
        return self.ados[self._lookup[tuple(n)]]

    def extract_system(self):
        """The physical reduced density matrix ``rho_0``."""
        return self.ados[0]


@dataclass
class HeomRun:
    t: np.ndarray
    rho: np.ndarray
    mode_occ: np.ndarray | None
    mode_occ_imag: np.ndarray | None
    indices: list
    cutoff: int
    n_terms: int

    @property
    def trace_deviation(self):
        return np.abs(np.trace(self.rho, axis1=1, axis2=2) - 1)


def _commutator(Q):
    return (spre(Q) - spost(Q)).tocsr()


def _anticommutator(Q):
    return (spre(Q) + spost(Q)).tocsr()


def build_hierarchy(cfg: HeomConfig, qubit: QubitSpec):
    """Sparse generator over the stacked, column-vectorised ADOs.

    Returns
    -------
    L : scipy.sparse.csr_matrix
    indices : list of tuple
        Multi-index of each 4-entry block, the physical one first.
    """
    terms = cfg.active_terms
    K = len(terms)
    n_ado = hierarchy_size(K, cfg.cutoff)
    est = n_ado * 4 * 16 * (2 + 4 * K) * 3
    if est > cfg.memory_budget:
        raise HierarchyTooLarge(
            f"{n_ado} ADOs (K={K}, N_c={cfg.cutoff}) need about {est / 1e9:.2f} GB, "
            f"budget {cfg.memory_budget / 1e9:.2f} GB")
    indices = enumerate_indices(K, cfg.cutoff)
    lookup = {n: j for j, n in enumerate(indices)}

    H = qubit_hamiltonian(qubit)
    Ls = (-1j * (spre(H) - spost(H))).toarray()
    comm = _commutator(SIGMA_Z).toarray()
    anti = _anticommutator(SIGMA_Z).toarray()
    nus = np.array([t.nu for t in terms], dtype=complex)
    down = [-1j * (t.a * comm + t.b * anti) for t in terms]
    up = -1j * comm

    rows, cols, vals = [], [], []
    blk_r, blk_c = np.meshgrid(np.arange(4), np.arange(4), indexing="ij")
    blk_r, blk_c = blk_r.ravel(), blk_c.ravel()

    def add(i, j, block):
        rows.append(4 * i + blk_r)
        cols.append(4 * j + blk_c)
        vals.append(block.ravel())

    eye4 = np.eye(4)
    for i, n in enumerate(indices):
        add(i, i, Ls - np.dot(n, nus) * eye4)
        for k in range(K):
            m = list(n)
            m[k] += 1
            j = lookup.get(tuple(m))
            if j is not None:
                add(i, j, up)
            if n[k] > 0:
                m[k] -= 2
                add(i, lookup[tuple(m)], n[k] * down[k])
    N = 4 * n_ado
    L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N))
    L.eliminate_zeros()
    return L, indices


def _occupation_index(K):
    if K == 4:
        return (0, 0, 1, 1)
    return (1, 1)


def mode_occupation_from_ados(state: HierarchyState, lambda1: float, return_imag=False):
    """Occupation of the resonant effective mode, ``tr(rho_n*) / lambda1^2``.

    ``n*`` carries one quantum on each of the two resonant slots, i.e.
    ``[0, 0, 1, 1]`` with Matsubara terms and ``[1, 1]`` without.
    """
    K = len(state.indices[0])
    n_star = _occupation_index(K)
    if n_star not in state._lookup:
        raise ValueError("mode occupation needs a hierarchy cutoff of at least 2")
    val = np.trace(state.ado(n_star)) / lambda1**2
    return (float(val.real), float(val.imag)) if return_imag else float(val.real)


def run_heom(cfg: HeomConfig, qubit: QubitSpec, bath: BathSpec | None = None, rho0=None) -> HeomRun:
    """Propagate from a product state (default: qubit ground state, all ADOs zero).

    When ``bath`` is given and the cutoff allows it, the resonant-mode
    occupation is extracted at every output time.
    """
    L, indices = build_hierarchy(cfg, qubit)
    y0 = np.zeros(L.shape[0], dtype=complex)
    rho0 = qubit_ground_state(qubit) if rho0 is None else np.asarray(rho0, dtype=complex)
    y0[:4] = vec(rho0)
    ys = propagate(L, y0, cfg.propagation)
    return _collect(ys, indices, cfg, bath)


def _collect(ys, indices, cfg, bath):
    ys = np.atleast_2d(ys)
    K = len(indices[0])
    lookup = {n: j for j, n in enumerate(indices)}
    rho = ys[:, :4].reshape(-1, 2, 2).transpose(0, 2, 1)
    occ = occ_im = None
    n_star = _occupation_index(K)
    if bath is not None and n_star in lookup:
        lam1_sq = bath.lam**2 / (2 * bath.Omega)
        j = lookup[n_star]
        tr = ys[:, 4 * j] + ys[:, 4 * j + 3]
        if lam1_sq > 0:
            occ, occ_im = tr.real / lam1_sq, tr.imag / lam1_sq
        else:
            occ, occ_im = np.zeros(len(ys)), np.zeros(len(ys))
    return HeomRun(cfg.propagation.t_grid, rho, occ, occ_im, indices, cfg.cutoff, K)


def heom_steady_state(cfg: HeomConfig, qubit: QubitSpec, bath: BathSpec | None = None):
    """Stationary hierarchy normalised by the trace of the physical block.

    Returns a :class:`HeomRun` holding a single time point (``t = inf``) and
    the generator residual.
    """
    L, indices = build_hierarchy(cfg, qubit)
    w = np.zeros(L.shape[0], dtype=complex)
    w[:4] = vec(np.eye(2))
    y, res = steady_state(L, trace_vector=w, return_residual=True, dense_check_max=0)
    run = _collect(y[None, :], indices, cfg, bath)
    run.t = np.array([np.inf])
    return run, res


@dataclass
class ConvergenceReport:
    cutoffs: list
    max_differences: list
    converged_at: int | None
    tol: float

    @property
    def converged(self):
        return self.converged_at is not None


def convergence_scan(cfg: HeomConfig, qubit: QubitSpec, cutoffs, tol: float = 1e-4) -> ConvergenceReport:
    """Max-over-time trace distance of ``rho_0`` between consecutive cutoffs.

    ``converged_at`` is the smaller cutoff of the first consecutive pair whose
    difference falls below ``tol``.
    """
    cutoffs = list(cutoffs)
    if len(cutoffs) < 2:
        raise ValueError("need at least two cutoffs")
    runs = []
    for nc in cutoffs:
        c = HeomConfig(cfg.decomposition, nc, cfg.include_matsubara, cfg.propagation,
                       cfg.memory_budget)
        runs.append(run_heom(c, qubit).rho)
    diffs = []
    for r1, r2 in zip(runs, runs[1:]):
        diffs.append(max(trace_distance(x, y) for x, y in zip(r1, r2)))
    conv = next((nc for nc, d in zip(cutoffs, diffs) if d < tol), None)
    return ConvergenceReport(cutoffs, diffs, conv, tol)
