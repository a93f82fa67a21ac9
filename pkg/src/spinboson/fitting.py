"""
Exponential decompositions of the bath correlation function.

The zero-temperature Matsubara correlation has no finite exponential
expansion, so it is fitted with two real decaying exponentials and combined
with the two exact resonant exponents.

Sign convention
---------------
Each :class:`ExpTerm` carries a commutator weight ``a``, an anticommutator
weight ``b`` and a decay exponent ``nu`` with ``Re(nu) > 0``. Writing
``C(t) = sum_k alpha_k exp(-nu_k t)`` and
``C(t)* = sum_k alphabar_k exp(-nu_k t)`` over the same exponents,

    a = (alpha + alphabar) / 2,   b = (alpha - alphabar) / 2,

so that ``C(t) = sum_k (a_k + b_k) exp(-nu_k t)`` and the HEOM lowering term
is ``-i n_k (a_k [Q, rho] + b_k {Q, rho})``. The resonant pair then has
``a = lam^2/(4 Omega)`` for both exponents ``Gamma -+ i Omega`` and
``b = -+ lam^2/(4 Omega)``; fitted Matsubara terms are real with ``b = 0``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from .bath import BathSpec, correlation_nonmats, matsubara_exact

__all__ = [
    "ExpTerm",
    "ExpDecomposition",
    "FitResult",
    "FitError",
    "default_fit_grid",
    "fit_biexponential",
    "fit_matsubara",
    "assemble_decomposition",
    "fit_error_functional",
]


@dataclass(frozen=True)
class ExpTerm:
    a: float
    b: float
    nu: complex
    kind: str = "nonmats"

    def __post_init__(self):
        if not np.real(self.nu) > 0:
            raise ValueError(f"exponent must decay, got nu={self.nu}")
        if self.kind == "matsubara" and (np.imag(self.nu) != 0 or self.b != 0):
            raise ValueError("Matsubara terms are real with b = 0")

    @property
    def alpha(self) -> complex:
        """Coefficient of ``exp(-nu t)`` in ``C(t)``."""
        return self.a + self.b

    @property
    def alpha_bar(self) -> complex:
        """Coefficient of ``exp(-nu t)`` in ``C(t)*``."""
        return self.a - self.b


@dataclass(frozen=True)
class ExpDecomposition:
    terms: tuple

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __getitem__(self, k):
        return self.terms[k]

    def correlation(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for term in self.terms:
            out += term.alpha * np.exp(-term.nu * t)
        return out

    def conj_correlation(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for term in self.terms:
            out += term.alpha_bar * np.exp(-term.nu * t)
        return out

    @property
    def matsubara_terms(self):
        return [t for t in self.terms if t.kind == "matsubara"]

    def to_dict(self):
        return [
            {"a": t.a, "b": t.b, "nu_re": float(np.real(t.nu)),
             "nu_im": float(np.imag(t.nu)), "kind": t.kind}
            for t in self.terms
        ]


class FitError(RuntimeError):
    """Every multi-start failed to converge; ``best`` holds the best attempt."""

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


@dataclass
class FitResult:
    c1: float
    mu1: float
    c2: float
    mu2: float
    residual_max: float
    residual_l2: float
    grid: np.ndarray = field(repr=False)
    seed: int = 0
    grid_spec: dict = field(default_factory=dict)
    start_residuals: list = field(default_factory=list, repr=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.c1 * np.exp(-self.mu1 * t) + self.c2 * np.exp(-self.mu2 * t)

    @property
    def terms(self):
        return (ExpTerm(self.c1, 0.0, self.mu1, "matsubara"),
                ExpTerm(self.c2, 0.0, self.mu2, "matsubara"))

    def perturbed(self, deltas: Sequence[float]) -> "FitResult":
        """Copy with ``c_i -> c_i(1+d)``, ``mu_i -> mu_i(1+d)``; order (c1, c2, mu1, mu2)."""
        d1, d2, d3, d4 = deltas
        return FitResult(self.c1 * (1 + d1), self.mu1 * (1 + d3),
                         self.c2 * (1 + d2), self.mu2 * (1 + d4),
                         np.nan, np.nan, self.grid, self.seed, dict(self.grid_spec))

    def to_json(self) -> str:
        d = {k: v for k, v in asdict(self).items() if k not in ("grid", "start_residuals")}
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FitResult":
        d = json.loads(text)
        spec = d.get("grid_spec", {})
        grid = default_fit_grid(**spec) if spec else np.array([])
        return cls(grid=grid, **d)


def default_fit_grid(t_max: float = 15.0, n_log: int = 100, n_lin: int = 300,
                     t_split: float = 1.0, t_min: float = 1e-3) -> np.ndarray:
    """Zero, then log-spaced points up to ``t_split``, then linear to ``t_max``."""
    log_part = np.geomspace(t_min, t_split, n_log - 1)
    lin_part = np.linspace(t_split, t_max, n_lin + 1)[1:]
    return np.concatenate([[0.0], log_part, lin_part])


def _model(p, t):
    c1, l1, c2, l2 = p
    return c1 * np.exp(-np.exp(l1) * t) + c2 * np.exp(-np.exp(l2) * t)


def _linear_amplitudes(mu, t, y):
    basis = np.exp(-np.multiply.outer(t, mu))
    c, *_ = np.linalg.lstsq(basis, y, rcond=None)
    return c


def fit_biexponential(t, y, seed: int = 0, n_starts: int = 16,
                      mu_range=(0.01, 10.0), initial_guesses=None) -> FitResult:
    """Fit ``y(t) = c1 exp(-mu1 t) + c2 exp(-mu2 t)`` by multi-start least squares.

    Starts draw exponent pairs log-uniformly in ``mu_range`` from a
    Philox generator seeded by ``seed``; amplitudes start from the linear
    least-squares solution for those exponents. The best local optimum
    (uniform absolute residuals) is returned, ties going to the earliest
    start. Results are ordered so that ``mu1 <= mu2``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 8:
        raise ValueError("need at least 8 samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")

    if not np.any(y):
        mu = initial_guesses or (1.0, 2.0)
        return FitResult(0.0, float(mu[0]), 0.0, float(mu[1]), 0.0, 0.0, t, seed)

    rng = np.random.Generator(np.random.Philox(seed))
    lo, hi = np.log(mu_range[0]), np.log(mu_range[1])
    starts = []
    if initial_guesses is not None:
        starts.append(np.asarray(initial_guesses, dtype=float))
    while len(starts) < n_starts:
        starts.append(np.exp(np.sort(rng.uniform(lo, hi, size=2))))

    best, best_cost = None, np.inf
    fallback, fallback_cost = None, np.inf
    start_rms = []
    for mu0 in starts:
        if len(mu0) == 4:
            p0 = np.array([mu0[0], np.log(mu0[1]), mu0[2], np.log(mu0[3])])
        else:
            c0 = _linear_amplitudes(mu0, t, y)
            p0 = np.array([c0[0], np.log(mu0[0]), c0[1], np.log(mu0[1])])
        with np.errstate(over="ignore", invalid="ignore"):
            res = optimize.least_squares(lambda p: _model(p, t) - y, p0, method="lm",
                                         xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
        if not np.all(np.isfinite(res.x)) or not np.isfinite(res.cost):
            start_rms.append(np.inf)
            continue
        start_rms.append(float(np.sqrt(2 * res.cost / t.size)))
        # strict < keeps the earliest start on ties
        if res.status > 0 and res.cost < best_cost:
            best, best_cost = res, res.cost
        elif res.status <= 0 and res.cost < fallback_cost:
            fallback, fallback_cost = res, res.cost

    if best is None:
        raise FitError(f"all {n_starts} starts failed to converge",
                       best=None if fallback is None else fallback.x)

    c1, l1, c2, l2 = best.x
    if l1 > l2:
        c1, l1, c2, l2 = c2, l2, c1, l1
    r = _model((c1, l1, c2, l2), t) - y
    return FitResult(float(c1), float(np.exp(l1)), float(c2), float(np.exp(l2)),
                     float(np.max(np.abs(r))), float(np.sqrt(np.mean(r * r))), t, seed,
                     start_residuals=start_rms)


def fit_matsubara(bath: BathSpec, grid=None, seed: int = 0, **grid_kw) -> FitResult:
    """Sample the exact ``M(t)`` on the fit grid and fit two exponentials."""
    spec = dict(grid_kw)
    t = default_fit_grid(**grid_kw) if grid is None else np.asarray(grid, dtype=float)
    res = fit_biexponential(t, matsubara_exact(t, bath), seed=seed)
    res.grid_spec = spec if grid is None else {}
    return res


def assemble_decomposition(bath: BathSpec, fit: FitResult | None = None,
                           include_matsubara: bool = True) -> ExpDecomposition:
    """Exponents in the fixed order ``[mats1, mats2, nonmats-, nonmats+]``.

    ``nonmats-`` has ``nu = Gamma - i Omega`` and ``nonmats+`` has
    ``nu = Gamma + i Omega``. Without Matsubara terms only the last two are
    returned.
    """
    if not bath.zero_temperature:
        raise ValueError("the decomposition is built at zero temperature")
    A = bath.lam**2 / (4 * bath.Omega)
    G, W = bath.Gamma, bath.Omega
    resonant = (ExpTerm(A, -A, complex(G, -W)), ExpTerm(A, A, complex(G, W)))
    if not include_matsubara:
        return ExpDecomposition(resonant)
    if fit is None:
        raise ValueError("a fit is required when include_matsubara is set")
    return ExpDecomposition(fit.terms + resonant)


def fit_error_functional(fit: FitResult, bath: BathSpec, horizon: float,
                         n_grid: int = 2001, return_integral: bool = False):
    """Error-bound factor ``exp(I) - 1`` for a unit-norm observable.

    ``I = int_0^T dt' int_0^t' dt'' |M_biexp - M|(t' - t'')``, evaluated as
    ``int_0^T (T - s) |dC(s)| ds`` with composite Simpson on ``n_grid``
    points.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    s = np.linspace(0.0, horizon, n_grid)
    dc = np.abs(fit(s) - matsubara_exact(s, bath))
    I = float(integrate.simpson((horizon - s) * dc, x=s))
    bound = float(np.expm1(I))
    return (bound, I) if return_integral else bound
