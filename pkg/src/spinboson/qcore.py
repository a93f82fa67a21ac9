"""
Operator and superoperator utilities shared by all solvers.

Density matrices are vectorised by stacking columns, so
``vec(A rho B) = (B^T kron A) vec(rho)``. Operators are dense ``ndarray``;
superoperators are ``scipy.sparse`` CSR matrices once the Hilbert dimension
exceeds 8 (superoperator dimension 64) and dense below.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import DOP853, RK23, RK45, solve_ivp

__all__ = [
    "SIGMA_X", "SIGMA_Y", "SIGMA_Z", "IDENTITY2",
    "PropagationConfig", "PropagationError", "SteadyStateError",
    "fock_ops", "kron_embed", "vec", "unvec", "spre", "spost",
    "liouvillian", "propagate", "steady_state", "eigendecompose",
    "partial_trace", "trace_distance", "is_hermitian",
    "qubit_hamiltonian", "qubit_ground_state", "propagate_observables",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)

MAX_HILBERT_DIM = 20_000
DENSE_SUPEROP_MAX = 64


class PropagationError(RuntimeError):
    pass


class SteadyStateError(RuntimeError):
    pass


@dataclass
class PropagationConfig:
    """Integrator settings.

    ``method`` is any explicit ``solve_ivp`` method (``"RK45"`` by default,
    ``"DOP853"`` for tight tolerances) or ``"expm"`` for Krylov action of the
    matrix exponential on a uniform grid.
    """

    t_grid: np.ndarray = field(default_factory=lambda: np.linspace(0, 10, 101))
    method: str = "RK45"
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = np.inf

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if self.t_grid.ndim != 1 or self.t_grid.size < 1 or np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be strictly increasing")


def fock_ops(cutoff: int):
    """Truncated ``(a, a_dag, n)`` on ``cutoff`` Fock levels."""
    if cutoff < 2:
        raise ValueError("Fock cutoff must be at least 2")
    a = np.diag(np.sqrt(np.arange(1, cutoff)), 1).astype(complex)
    ad = a.conj().T
    return a, ad, np.diag(np.arange(cutoff)).astype(complex)


def kron_embed(ops):
    """Tensor product in the given factor order (system first, then modes)."""
    if not ops:
        raise ValueError("need at least one factor")
    dim = math.prod(op.shape[0] for op in ops)
    if dim > MAX_HILBERT_DIM:
        raise ValueError(f"product dimension {dim} exceeds limit {MAX_HILBERT_DIM}")
    return reduce(np.kron, [np.asarray(op, dtype=complex) for op in ops])


def vec(rho):
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim=None):
    v = np.asarray(v)
    dim = dim or math.isqrt(v.shape[0])
    return v.reshape((dim, dim) + v.shape[1:], order="F")


def spre(A):
    A = sp.csr_matrix(A)
    return sp.kron(sp.identity(A.shape[0], format="csr"), A, format="csr")


def spost(B):
    B = sp.csr_matrix(B)
    return sp.kron(B.T, sp.identity(B.shape[0], format="csr"), format="csr")


def _finish(L, dim):
    if dim * dim <= DENSE_SUPEROP_MAX:
        return L.toarray()
    L = L.tocsr()
    L.eliminate_zeros()
    return L


def liouvillian(H, dissipators=()):
    """Generator ``-i(H rho - rho H) + sum_i G_i (2 A rho A^+ - A^+A rho - rho A^+A)``.

    ``H`` is used on both sides as given, so a non-Hermitian ``H`` yields the
    pseudo-Schrodinger generator rather than the usual ``H rho - rho H^+``.

    Parameters
    ----------
    H : array_like
        Square (possibly non-Hermitian) Hamiltonian.
    dissipators : sequence of (A, rate)
        Jump operators with their rates.
    """
    H = np.asarray(H) if not sp.issparse(H) else H
    d = H.shape[0]
    if H.shape != (d, d):
        raise ValueError("H must be square")
    L = -1j * (spre(H) - spost(H))
    for A, rate in dissipators:
        if A.shape != (d, d):
            raise ValueError(f"jump operator shape {A.shape} does not match H {H.shape}")
        A = sp.csr_matrix(A)
        Ad = A.conj().T.tocsr()
        AdA = (Ad @ A).tocsr()
        L = L + rate * (2 * sp.kron(A.conj(), A) - spre(AdA) - spost(AdA))
    return _finish(L, d)


def propagate(L, rho0, cfg: PropagationConfig, check_trace=True):
    """Integrate ``d vec(rho)/dt = L vec(rho)`` and return states on ``cfg.t_grid``.

    ``rho0`` may be a density matrix or an already vectorised state (used by
    the hierarchy solver). The returned array has shape ``(len(t_grid),) +
    rho0.shape``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 2 and check_trace and abs(np.trace(rho0) - 1) > 1e-12:
        raise ValueError("initial state must have unit trace")
    y0 = vec(rho0) if rho0.ndim == 2 else rho0.copy()
    t = cfg.t_grid

    if cfg.method == "expm":
        ys = _propagate_expm(L, y0, t)
    else:
        def rhs(_, y):
            return L @ y

        sol = solve_ivp(rhs, (t[0], t[-1]), y0, method=cfg.method, t_eval=t,
                        rtol=cfg.rtol, atol=cfg.atol, max_step=cfg.max_step)
        if not sol.success:
            t_fail = sol.t[-1] if sol.t.size else t[0]
            raise PropagationError(f"integration failed at t={t_fail:.6g}: {sol.message}")
        ys = sol.y.T
    if rho0.ndim == 2:
        d = rho0.shape[0]
        return np.stack([unvec(y, d) for y in ys])
    return ys


_STEPPERS = {"RK45": RK45, "DOP853": DOP853, "RK23": RK23}


def propagate_observables(L, y0, cfg: PropagationConfig, W, return_final=False):
    """Propagate and return only ``W @ y(t)`` on ``cfg.t_grid``.

    Intended for generators too large to store the full trajectory. ``W``
    is a (sparse or dense) matrix of linear functionals acting on the state
    vector.
    """
    y0 = np.asarray(y0, dtype=complex)
    t = cfg.t_grid
    out = np.empty((t.size, W.shape[0]), dtype=complex)

    def measure(y):
        return np.asarray(W @ y).ravel()

    out[0] = measure(y0)
    if t.size == 1:
        return (out, y0) if return_final else out
    if cfg.method == "expm":
        y = y0
        A = sp.csr_matrix(L) if not sp.issparse(L) else L
        for i, h in enumerate(np.diff(t), start=1):
            y = spla.expm_multiply(A * h, y)
            out[i] = measure(y)
        return (out, y) if return_final else out
    try:
        stepper = _STEPPERS[cfg.method]
    except KeyError:
        raise ValueError(f"unknown propagation method {cfg.method!r}") from None
    solver = stepper(lambda _, y: L @ y, t[0], y0, t[-1], rtol=cfg.rtol, atol=cfg.atol,
                     max_step=cfg.max_step)
    k = 1
    while k < t.size:
        msg = solver.step()
        if solver.status == "failed":
            raise PropagationError(f"integration failed at t={solver.t:.6g}: {msg}")
        if k < t.size and t[k] <= solver.t:
            interp = solver.dense_output()
            while k < t.size and t[k] <= solver.t:
                out[k] = measure(solver.y if t[k] == solver.t else interp(t[k]))
                k += 1
    return (out, solver.y) if return_final else out


def _propagate_expm(L, y0, t):
    dt = np.diff(t)
    A = sp.csr_matrix(L) if not sp.issparse(L) else L
    if t.size > 1 and np.allclose(dt, dt[0], rtol=1e-10, atol=0):
        out = spla.expm_multiply(A, y0, start=t[0], stop=t[-1], num=t.size, endpoint=True)
        return np.asarray(out)
    ys = [y0]
    for h in dt:
        ys.append(spla.expm_multiply(A * h, ys[-1]))
    return np.array(ys)


def steady_state(L, dim=None, trace_vector=None, return_residual=False, dense_check_max=1024,
                 rank_tol=None):
    """Normalised kernel vector of ``L``.

    The trace functional (by default ``tr(rho)``; the hierarchy passes one
    acting on the physical block only) replaces one row of ``L``. For
    ``L`` up to ``dense_check_max`` the kernel dimension is checked with an
    SVD, counting singular values below ``rank_tol`` (default
    ``10 n eps s_max``, the usual numerical-rank cut, which still resolves
    physically slow relaxation); above that a singular factorisation signals
    an ambiguous kernel.

    Raises
    ------
    SteadyStateError
        If the kernel is not one dimensional.
    """
    n = L.shape[0]
    as_matrix = trace_vector is None or dim is not None
    if trace_vector is None:
        dim = dim or math.isqrt(n)
        trace_vector = vec(np.eye(dim))
    w = np.asarray(trace_vector, dtype=complex)

    if n <= dense_check_max:
        Ld = L.toarray() if sp.issparse(L) else np.asarray(L)
        s = la.svdvals(Ld)
        cut = rank_tol if rank_tol is not None else 10 * n * np.finfo(float).eps * s[0]
        if n > 1 and s[-2] <= cut:
            raise SteadyStateError(
                f"generator kernel is not one dimensional (two smallest singular values "
                f"{s[-1]:.3e}, {s[-2]:.3e})")

    # replace the row where the trace functional has its largest weight
    row = int(np.argmax(np.abs(w)))
    A = sp.lil_matrix(L) if not sp.issparse(L) else L.tolil(copy=True)
    A[row, :] = w.reshape(1, -1)
    rhs = np.zeros(n, dtype=complex)
    rhs[row] = 1.0
    A = A.tocsc()
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            x = spla.splu(A, permc_spec="COLAMD").solve(rhs)
        except (RuntimeError, spla.MatrixRankWarning) as exc:
            raise SteadyStateError(f"generator kernel is not one dimensional: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SteadyStateError("steady-state solve produced non-finite values")
    x = x / (w @ x)
    residual = float(np.linalg.norm(L @ x))
    out = unvec(x, dim) if as_matrix else x
    return (out, residual) if return_residual else out


def is_hermitian(A, tol=1e-10):
    A = np.asarray(A)
    return np.max(np.abs(A - A.conj().T)) <= tol * max(1.0, np.max(np.abs(A)))


def eigendecompose(H, tol=1e-10):
    """Ascending eigenvalues and eigenvectors of a Hermitian ``H``.

    Each eigenvector is rotated so its largest-magnitude component is real
    and positive.
    """
    H = np.asarray(H)
    if not is_hermitian(H, tol):
        raise ValueError("eigendecompose requires a Hermitian operator")
    evals, evecs = la.eigh(H)
    idx = np.argmax(np.abs(evecs), axis=0)
    phase = evecs[idx, np.arange(evecs.shape[1])]
    evecs = evecs * (np.abs(phase) / phase)
    return evals, evecs


def partial_trace(rho, dims, keep):
    """Trace out every factor not listed in ``keep``."""
    dims = list(dims)
    keep = sorted(set(keep))
    if not keep or any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"bad subsystem index set {keep} for dims {dims}")
    n = len(dims)
    rho = np.asarray(rho).reshape(dims + dims)
    drop = [k for k in range(n) if k not in keep]
    # contract each dropped ket index with its bra index, highest first
    for k in sorted(drop, reverse=True):
        m = rho.ndim // 2
        rho = np.trace(rho, axis1=k, axis2=k + m)
    dk = math.prod(dims[k] for k in keep)
    return rho.reshape(dk, dk)


def trace_distance(rho, sigma):
    """Half the trace norm of ``rho - sigma`` (Hermitian part for safety)."""
    d = np.asarray(rho) - np.asarray(sigma)
    d = (d + d.conj().T) / 2
    return 0.5 * float(np.sum(np.abs(la.eigvalsh(d))))


def qubit_hamiltonian(qubit):
    """``omega_q/2 sigma_z + delta/2 sigma_x`` for a :class:`~spinboson.bath.QubitSpec`."""
    return 0.5 * qubit.omega_q * SIGMA_Z + 0.5 * qubit.delta * SIGMA_X


def qubit_ground_state(qubit):
    """Projector onto the lower eigenstate of the free qubit Hamiltonian."""
    _, v = eigendecompose(qubit_hamiltonian(qubit))
    g = v[:, 0]
    return np.outer(g, g.conj())
