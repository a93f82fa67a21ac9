"""
Experiment orchestration and file I/O.

Every solver run is written as a JSON header (full configuration, fit,
decomposition, truncation, seed) next to a CSV body with 17 significant
digits. The same seed and configuration reproduce byte-identical files.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bath import (BathSpec, QubitSpec, correlation_exact, correlation_nonmats,
                   effective_beta_closed_form, matsubara_exact)
from .dephasing import dephasing_exact, dephasing_from_decomposition, error_bound
from .fitting import FitResult, assemble_decomposition, fit_matsubara
from .heom import HeomConfig, heom_steady_state, run_heom
from .pseudomode import (PseudoModeModel, effective_beta_from_steady_state,
                         pseudomode_steady_state, run_pseudomode)
from .qcore import (PropagationConfig, eigendecompose, qubit_hamiltonian, trace_distance)
from .rc import (RcModel, ground_state_occupation, rc_steady_state,
                 renormalized_rc_ground_occupation, run_rc)

__all__ = [
    "ExperimentConfig", "SolverSeries", "SensitivityReport", "FIGURES", "RNG_NAME",
    "run_solver", "run_experiment", "sensitivity_mc", "steady_state_sweep",
    "compare_runs", "write_artifact", "read_artifact", "excited_population",
    "time_grid", "DELTA_GRID",
]

log = logging.getLogger(__name__)

RNG_NAME = "numpy.random.Philox"
DELTA_GRID = (0.1, 0.05, 0.02, 0.01)
SOLVERS = ("heom", "pseudomode", "rc")
BASE_COLUMNS = ["t", "rho00", "rho01_re", "rho01_im", "rho11", "mode_occ", "p_excited"]


def time_grid(tmax: float, dt: float) -> np.ndarray:
    if not (tmax > 0 and dt > 0):
        raise ValueError("tmax and dt must be positive")
    n = int(round(tmax / dt))
    return np.linspace(0.0, n * dt, n + 1)


@dataclass
class ExperimentConfig:
    experiment: str = "custom"
    solvers: tuple = SOLVERS
    lam: float = 0.2
    gamma: float = 0.05
    omega_q: float = 0.0
    delta: float = 1.0
    matsubara: tuple = (False, True)
    heom_cutoff: int = 8
    fock: tuple = (12, 5, 5)
    rc_cutoff: int = 16
    tmax: float = 100.0
    dt: float = 0.1
    seed: int = 0
    out: str = "runs"
    method: str = "RK45"
    rtol: float = 1e-8
    atol: float = 1e-10

    def __post_init__(self):
        valid = {f"fig{i}" for i in range(1, 9)} | {"custom"}
        if self.experiment not in valid:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        bad = set(self.solvers) - set(SOLVERS)
        if bad:
            raise ValueError(f"unknown solvers {sorted(bad)}")
        self.solvers = tuple(self.solvers)
        self.matsubara = tuple(bool(m) for m in self.matsubara)
        self.fock = tuple(int(c) for c in self.fock)

    @property
    def bath(self) -> BathSpec:
        return BathSpec(self.lam, self.gamma)

    @property
    def qubit(self) -> QubitSpec:
        return QubitSpec(self.omega_q, self.delta)

    @property
    def propagation(self) -> PropagationConfig:
        return PropagationConfig(t_grid=time_grid(self.tmax, self.dt), method=self.method,
                                 rtol=self.rtol, atol=self.atol)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["solvers"] = list(self.solvers)
        d["matsubara"] = list(self.matsubara)
        d["fock"] = list(self.fock)
        return d

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


@dataclass
class SolverSeries:
    solver: str
    matsubara: bool
    t: np.ndarray
    rho: np.ndarray
    mode_occ: np.ndarray
    p_excited: np.ndarray
    extra: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def label(self):
        return f"{self.solver}_{'mats' if self.matsubara else 'nomats'}"

    def columns(self):
        cols = {"t": self.t, "rho00": self.rho[:, 0, 0].real, "rho01_re": self.rho[:, 0, 1].real,
                "rho01_im": self.rho[:, 0, 1].imag, "rho11": self.rho[:, 1, 1].real,
                "mode_occ": self.mode_occ, "p_excited": self.p_excited}
        cols.update(self.extra)
        return cols


def excited_population(rho, qubit: QubitSpec):
    """Population of the upper eigenstate of the free qubit Hamiltonian."""
    _, V = eigendecompose(qubit_hamiltonian(qubit))
    e = V[:, 1]
    rho = np.asarray(rho)
    return np.einsum("i,...ij,j->...", e.conj(), rho, e).real


def _fit_for(cfg: ExperimentConfig, cache: dict):
    key = (cfg.lam, cfg.gamma, cfg.seed)
    if key not in cache:
        cache[key] = fit_matsubara(cfg.bath, seed=cfg.seed) if cfg.lam > 0 else None
    return cache[key]


def run_solver(cfg: ExperimentConfig, solver: str, matsubara: bool, fit: FitResult | None = None,
               steady: bool = False) -> SolverSeries:
    """Run one solver for one Matsubara setting and return a uniform series.

    With ``steady=True`` a single stationary point is returned instead of
    the time series.
    """
    bath, qubit = cfg.bath, cfg.qubit
    if matsubara and fit is None and bath.lam > 0:
        fit = fit_matsubara(bath, seed=cfg.seed)
    meta = {"solver": solver, "matsubara": matsubara}
    if fit is not None and matsubara:
        meta["fit"] = json.loads(fit.to_json())
    if solver == "heom":
        use_m = matsubara and fit is not None
        dec = assemble_decomposition(bath, fit if use_m else None, include_matsubara=use_m)
        hc = HeomConfig(dec, cfg.heom_cutoff, use_m, cfg.propagation)
        meta.update(decomposition=dec.to_dict(), cutoff=cfg.heom_cutoff)
        if steady:
            run, res = heom_steady_state(hc, qubit, bath)
            meta["residual"] = res
        else:
            run = run_heom(hc, qubit, bath)
        occ = run.mode_occ if run.mode_occ is not None else np.full(len(run.t), np.nan)
        return SolverSeries(solver, matsubara, np.asarray(run.t), run.rho, occ,
                            excited_population(run.rho, qubit), {}, meta)
    if solver == "pseudomode":
        use_m = matsubara and fit is not None
        cut = cfg.fock if use_m else cfg.fock[:1]
        model = PseudoModeModel.from_bath(bath, qubit, fit, include_matsubara=use_m, cutoffs=cut)
        meta.update(fock=list(cut), modes=[{"frequency": m.frequency, "coupling_re": m.coupling.real
                                            if isinstance(m.coupling, complex) else m.coupling,
                                            "coupling_im": complex(m.coupling).imag, "rate": m.rate}
                                           for m in model.modes])
        if steady:
            run, res = pseudomode_steady_state(model)
            meta["residual"] = res
        else:
            run = run_pseudomode(model, cfg.propagation)
        extra = {f"mode{i + 1}_occ": run.mode_occ[:, i] for i in range(len(model.modes))}
        extra.update(trace_dev=run.trace_dev, herm_dev=run.herm_dev, top_fock_pop=run.top_fock_pop)
        return SolverSeries(solver, matsubara, np.asarray(run.t), run.rho, run.mode_occ[:, 0],
                            excited_population(run.rho, qubit), extra, meta)
    if solver == "rc":
        variant = "bms" if matsubara else "rwa_flat"
        model = RcModel(qubit, bath, cfg.rc_cutoff)
        meta.update(variant=variant, cutoff=cfg.rc_cutoff)
        if steady:
            run, res = rc_steady_state(model, variant)
            meta["residual"] = res
        else:
            run = run_rc(model, variant, cfg.propagation)
        return SolverSeries(solver, matsubara, np.asarray(run.t), run.rho, run.mode_occ,
                            excited_population(run.rho, qubit), {"emission_rate": run.emission}, meta)
    raise ValueError(f"unknown solver {solver!r}")


# ---------------------------------------------------------------- file I/O

def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_csv(path: Path, cols: dict):
    names = list(cols)
    n = len(next(iter(cols.values())))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for i in range(n):
        w.writerow([_fmt(np.asarray(cols[k])[i]) for k in names])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_artifact(out_dir, name: str, header: dict, cols: dict):
    """Write ``name.json`` (header) and ``name.csv`` (columns); returns the CSV path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.json").write_text(json.dumps(_jsonable(header), indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    path = out / f"{name}.csv"
    _write_csv(path, cols)
    return path


def read_artifact(path):
    """Columns of a CSV artifact as float arrays (and its JSON header when present)."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    names, body = rows[0], rows[1:]
    data = {}
    for j, k in enumerate(names):
        try:
            data[k] = np.array([float(r[j]) for r in body])
        except ValueError:
            data[k] = np.array([r[j] for r in body])
    hdr = path.with_suffix(".json")
    header = json.loads(hdr.read_text(encoding="utf-8")) if hdr.exists() else {}
    return data, header


def _header(cfg: ExperimentConfig, extra=None):
    h = {"config": cfg.to_dict(), "rng": RNG_NAME, "seed": cfg.seed,
         "units": "omega_0 = hbar = 1", "temperature": "zero"}
    if extra:
        h.update(extra)
    return h


def _save_series(cfg, s: SolverSeries, prefix):
    return write_artifact(cfg.out, f"{prefix}_{s.label}", _header(cfg, s.meta), s.columns())


# -------------------------------------------------------------- experiments

FIGURES = {
    "fig1": dict(lam=0.4, gamma=0.4),
    "fig2": dict(lam=0.2, gamma=0.05, heom_cutoff=8, fock=(6, 3, 3)),
    "fig3": dict(solvers=("pseudomode",), matsubara=(False,)),
    "fig4": dict(lam=1.0, gamma=1.0, heom_cutoff=14, fock=(10, 10, 5)),
    "fig5": dict(),
    "fig6": dict(delta=0.0, tmax=25.0),
    "fig7": dict(lam=0.4, gamma=0.4),
    "fig8": dict(gamma=1.0, solvers=("heom", "rc")),
}
FIG3_GAMMAS = (0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0)
FIG3_LAMBDAS = (0.01, 0.2)
FIG6_PARAMS = ((0.2, 0.05), (0.4, 0.4), (1.0, 1.0))
FIG7_PARAMS = ((0.2, 0.05), (0.4, 0.4), (1.0, 1.0))
FIG8_LAMBDAS = (1e-5, 1e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


def _dynamics(cfg: ExperimentConfig, prefix: str, failures: list):
    """All requested solvers and Matsubara settings; writes one artifact each plus a comparison CSV."""
    cache = {}
    series, written = [], []
    for mats in cfg.matsubara:
        for solver in cfg.solvers:
            t0 = time.perf_counter()
            try:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    s = run_solver(cfg, solver, mats, _fit_for(cfg, cache) if mats else None)
                s.meta["warnings"] = [str(w.message) for w in caught]
                s.meta["runtime_s"] = round(time.perf_counter() - t0, 3)
                series.append(s)
                written.append(_save_series(cfg, s, prefix))
            except Exception as exc:  # recorded per solver, other runs continue
                log.error("%s (matsubara=%s) failed: %s", solver, mats, exc)
                failures.append({"solver": solver, "matsubara": mats, "error": repr(exc)})
    if series:
        cols = {"t": series[0].t}
        for s in series:
            if s.t.shape == series[0].t.shape:
                cols[f"{s.label}_mode_occ"] = s.mode_occ
                cols[f"{s.label}_p_excited"] = s.p_excited
        written.append(write_artifact(cfg.out, f"{prefix}_comparison", _header(cfg), cols))
    return series, written


def _fig1(cfg, failures):
    bath = cfg.bath
    fit = fit_matsubara(bath, seed=cfg.seed)
    dec = assemble_decomposition(bath, fit)
    t = time_grid(min(cfg.tmax, 20.0), 0.05)
    c_ex = correlation_exact(t, bath)
    c_fit = dec.correlation(t)
    m_ex = matsubara_exact(t, bath)
    cols = {"t": t, "c_exact_re": c_ex.real, "c_exact_im": c_ex.imag, "c_fit_re": c_fit.real,
            "c_fit_im": c_fit.imag, "m_exact": m_ex, "m_fit": fit(t),
            "c0_re": correlation_nonmats(t, bath).real}
    hdr = _header(cfg, {"fit": json.loads(fit.to_json()), "decomposition": dec.to_dict()})
    return [write_artifact(cfg.out, "fig1_correlation", hdr, cols)]


def _fig3(cfg, failures):
    rows = {"lam": [], "gamma": [], "beta_eff": [], "beta_closed_form": [], "p_excited": []}
    for lam in FIG3_LAMBDAS:
        for g in FIG3_GAMMAS:
            c = cfg.replace(lam=lam, gamma=g)
            try:
                s = run_solver(c, "pseudomode", False, steady=True)
                rows["beta_eff"].append(effective_beta_from_steady_state(s.rho[0], c.qubit))
                rows["p_excited"].append(s.p_excited[0])
            except Exception as exc:
                failures.append({"lam": lam, "gamma": g, "error": repr(exc)})
                rows["beta_eff"].append(math.nan)
                rows["p_excited"].append(math.nan)
            rows["lam"].append(lam)
            rows["gamma"].append(g)
            rows["beta_closed_form"].append(effective_beta_closed_form(c.qubit, c.bath))
    return [write_artifact(cfg.out, "fig3_beta_eff", _header(cfg), rows)]


def _fig6(cfg, failures):
    out = []
    t = time_grid(cfg.tmax, min(cfg.dt, 0.05))
    for lam, g in FIG6_PARAMS:
        c = cfg.replace(lam=lam, gamma=g, delta=0.0)
        bath = c.bath
        fit = fit_matsubara(bath, seed=c.seed)
        dec = assemble_decomposition(bath, fit)
        fitted = dephasing_from_decomposition(dec, c.omega_q, t)
        exact = dephasing_exact(bath, c.omega_q, t)
        dc = np.abs(fit(t) - matsubara_exact(t, bath))
        bound = error_bound(t, dc, 1.0)
        # rho_01 of the |+> state: half the normalised coherence
        err = 0.5 * np.abs(exact.coherence - fitted.coherence)
        cols = {"t": t, "coherence_re": fitted.coherence.real, "coherence_im": fitted.coherence.imag,
                "exponent": fitted.decoherence_exponent.real, "bound": bound,
                "exact_coherence_re": exact.coherence.real, "exact_coherence_im": exact.coherence.imag,
                "exact_exponent": exact.decoherence_exponent.real, "rho01_error": err}
        hdr = _header(c, {"fit": json.loads(fit.to_json()), "decomposition": dec.to_dict()})
        out.append(write_artifact(c.out, f"fig6_dephasing_lam{lam:g}_gamma{g:g}", hdr, cols))
    return out


def _fig7(cfg, failures, params=FIG7_PARAMS, n_runs=200):
    out = []
    for lam, g in params:
        c = cfg.replace(lam=lam, gamma=g)
        fit = fit_matsubara(c.bath, seed=c.seed)
        rows = {"delta_max": [], "n_ok": [], "mean": [], "std": [], "cv": []}
        for dmax in DELTA_GRID:
            rep = sensitivity_mc(fit, c.bath, c.qubit, dmax, n_runs, c.seed, heom_cutoff=c.heom_cutoff)
            rows["delta_max"].append(dmax)
            rows["n_ok"].append(rep.n_runs - rep.n_failed)
            rows["mean"].append(rep.mean)
            rows["std"].append(rep.std)
            rows["cv"].append(rep.cv)
            if rep.n_failed:
                failures.append({"lam": lam, "gamma": g, "delta_max": dmax, "failed": rep.n_failed})
        out.append(write_artifact(c.out, f"fig7_sensitivity_lam{lam:g}_gamma{g:g}",
                                  _header(c, {"fit": json.loads(fit.to_json()),
                                              "delta_grid": list(DELTA_GRID)}), rows))
    return out


def _fig8(cfg, failures):
    table = steady_state_sweep(FIG8_LAMBDAS, cfg)
    failures.extend(r for r in table["errors"] if r)
    cols = {k: v for k, v in table.items() if k != "errors"}
    return [write_artifact(cfg.out, "fig8_steady_state_sweep", _header(cfg), cols)]


def _references(cfg):
    m = RcModel(cfg.qubit, cfg.bath, cfg.rc_cutoff)
    return {"hrc_ground_occupation": ground_state_occupation(m),
            "renormalized_rc_ground_occupation": renormalized_rc_ground_occupation(m)}


def run_experiment(cfg: ExperimentConfig):
    """Execute a figure recipe (or ``custom``) and write all artifacts under ``cfg.out``.

    Returns a summary dict with the written paths and per-run failures; a
    run is successful when ``summary["failures"]`` is empty.
    """
    exp = cfg.experiment
    if exp in FIGURES and exp != "fig5":
        cfg = cfg.replace(**{k: v for k, v in FIGURES[exp].items()})
    failures, written = [], []
    t0 = time.perf_counter()
    if exp in ("fig2", "fig4", "custom"):
        _, written = _dynamics(cfg, exp, failures)
        ref = _references(cfg)
        written.append(write_artifact(cfg.out, f"{exp}_references", _header(cfg, ref),
                                      {k: [v] for k, v in ref.items()}))
    elif exp == "fig5":
        for sub in ("fig2", "fig4"):
            c = cfg.replace(**FIGURES[sub])
            _, w = _dynamics(c, f"fig5_{sub}", failures)
            written += w
    elif exp == "fig1":
        written = _fig1(cfg, failures)
    elif exp == "fig3":
        written = _fig3(cfg, failures)
    elif exp == "fig6":
        written = _fig6(cfg, failures)
    elif exp == "fig7":
        written = _fig7(cfg, failures)
    elif exp == "fig8":
        written = _fig8(cfg, failures)
    return {"experiment": exp, "written": [str(p) for p in written], "failures": failures,
            "runtime_s": round(time.perf_counter() - t0, 3)}


# ------------------------------------------------------------ sensitivity

@dataclass
class SensitivityReport:
    delta_max: float
    n_runs: int
    mean: float
    std: float
    cv: float
    populations: np.ndarray
    n_failed: int = 0
    seed: int = 0
    shared_delta: bool = False


def sensitivity_mc(base_fit: FitResult, bath: BathSpec, qubit: QubitSpec, delta_max: float,
                   n_runs: int = 200, seed: int = 0, heom_cutoff: int = 8,
                   shared_delta: bool = False) -> SensitivityReport:
    """Steady excited population under random fit perturbations.

    Each run multiplies ``c1, c2, mu1, mu2`` by ``1 + delta`` with ``delta``
    uniform in ``[-delta_max, delta_max]``, drawn independently per parameter
    (or once per run when ``shared_delta``), then solves the hierarchy for
    its stationary state.
    """
    if n_runs < 2:
        raise ValueError("need at least two runs")
    if delta_max < 0:
        raise ValueError("delta_max must be nonnegative")
    rng = np.random.Generator(np.random.Philox(seed))
    draws = rng.uniform(-delta_max, delta_max, size=(n_runs, 1 if shared_delta else 4))
    if shared_delta:
        draws = np.repeat(draws, 4, axis=1)
    pops = np.full(n_runs, np.nan)
    for k in range(n_runs):
        try:
            fit = base_fit.perturbed(draws[k])
            dec = assemble_decomposition(bath, fit)
            run, _ = heom_steady_state(HeomConfig(dec, heom_cutoff), qubit)
            pops[k] = excited_population(run.rho[0], qubit)
        except Exception as exc:
            log.warning("sensitivity run %d failed: %s", k, exc)
    ok = pops[np.isfinite(pops)]
    n_failed = n_runs - ok.size
    if ok.size < 2:
        raise RuntimeError(f"only {ok.size} of {n_runs} sensitivity runs succeeded")
    mean = float(np.mean(ok))
    std = float(np.std(ok, ddof=1))
    return SensitivityReport(delta_max, n_runs, mean, std, std / mean if mean else math.inf,
                             pops, n_failed, seed, shared_delta)


# ----------------------------------------------------------------- sweeps

def steady_state_sweep(lambdas, cfg: ExperimentConfig):
    """Stationary mode occupation and excited population against ``lam``.

    Every requested solver runs with and without Matsubara terms (the RC
    model maps these to BMS and RWA-flat). Failures are recorded per point.
    """
    lambdas = [float(x) for x in lambdas]
    if any(x <= 0 for x in lambdas) or lambdas != sorted(lambdas):
        raise ValueError("lambda values must be positive and ascending")
    table = {"lam": [], "solver": [], "matsubara": [], "mode_occ": [], "p_excited": [],
             "errors": []}
    for lam in lambdas:
        c = cfg.replace(lam=lam)
        fit = fit_matsubara(c.bath, seed=c.seed)
        for mats in cfg.matsubara:
            for solver in cfg.solvers:
                occ = pe = math.nan
                err = None
                try:
                    s = run_solver(c, solver, mats, fit if mats else None, steady=True)
                    occ, pe = float(s.mode_occ[-1]), float(s.p_excited[-1])
                except Exception as exc:
                    err = {"lam": lam, "solver": solver, "matsubara": mats, "error": repr(exc)}
                table["lam"].append(lam)
                table["solver"].append(solver)
                table["matsubara"].append(int(mats))
                table["mode_occ"].append(occ)
                table["p_excited"].append(pe)
                table["errors"].append(err)
    return table


# ---------------------------------------------------------------- compare

def _rho_from_columns(d):
    rho = np.zeros((d["t"].size, 2, 2), dtype=complex)
    rho[:, 0, 0] = d["rho00"]
    rho[:, 1, 1] = d["rho11"]
    rho[:, 0, 1] = d["rho01_re"] + 1j * d["rho01_im"]
    rho[:, 1, 0] = np.conj(rho[:, 0, 1])
    return rho


def compare_runs(paths):
    """Pairwise divergence of solver artifacts on a shared time grid.

    Returns, for each pair, the per-time trace distance of the qubit states
    and the max-abs difference of every shared numeric column.
    """
    paths = [Path(p) for p in paths]
    if len(paths) < 2:
        raise ValueError("need at least two artifacts")
    data = [read_artifact(p)[0] for p in paths]
    t0 = data[0]["t"]
    for p, d in zip(paths, data):
        if d["t"].shape != t0.shape or np.max(np.abs(d["t"] - t0)) > 1e-12:
            raise ValueError(f"time grid of {p} differs from {paths[0]}")
    report = {"t": t0, "pairs": []}
    for i in range(len(paths)):
        for j in range(i + 1, len(paths)):
            a, b = data[i], data[j]
            entry = {"a": str(paths[i]), "b": str(paths[j])}
            if all(k in a and k in b for k in BASE_COLUMNS[1:5]):
                ra, rb = _rho_from_columns(a), _rho_from_columns(b)
                td = np.array([trace_distance(x, y) for x, y in zip(ra, rb)])
                entry["trace_distance"] = td
                entry["max_trace_distance"] = float(np.max(td))
            diffs = {}
            for k in a:
                if k != "t" and k in b and a[k].dtype.kind == "f" and b[k].dtype.kind == "f":
                    with np.errstate(invalid="ignore"):
                        diffs[k] = float(np.nanmax(np.abs(a[k] - b[k]))) if a[k].size else 0.0
            entry["max_abs_diff"] = diffs
            report["pairs"].append(entry)
    return report
