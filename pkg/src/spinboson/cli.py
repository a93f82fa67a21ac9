"""Command-line entry point: ``spinboson <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .bath import BathSpec, QubitSpec, matsubara_exact
from .dephasing import dephasing_exact, dephasing_from_decomposition, error_bound
from .fitting import FitError, assemble_decomposition, default_fit_grid, fit_matsubara

log = logging.getLogger("spinboson")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--lambda", dest="lam", type=float, default=0.2, help="coupling lambda")
    p.add_argument("--gamma", type=float, default=0.05, help="bath width gamma")
    p.add_argument("--omega-q", dest="omega_q", type=float, default=0.0, help="qubit bias")
    p.add_argument("--delta", type=float, default=1.0, help="qubit tunnelling")
    p.add_argument("--cutoff", type=int, default=8, help="hierarchy depth N_c (RC: Fock cutoff)")
    p.add_argument("--fock", type=str, default="12,5,5", help="pseudo-mode Fock cutoffs, comma separated")
    p.add_argument("--no-matsubara", action="store_true", help="drop the Matsubara terms")
    p.add_argument("--tmax", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default="runs")
    p.add_argument("--method", type=str, default="RK45")
    p.add_argument("-v", "--verbose", action="store_true")


def _fock(text):
    vals = tuple(int(x) for x in text.split(",") if x.strip())
    if not vals or len(vals) > 3:
        raise argparse.ArgumentTypeError("--fock takes one to three integers")
    return vals + (vals[-1],) * (3 - len(vals))


def _config(a, experiment="custom", solvers=harness.SOLVERS, **kw) -> harness.ExperimentConfig:
    base = dict(experiment=experiment, solvers=solvers, lam=a.lam, gamma=a.gamma,
                omega_q=a.omega_q, delta=a.delta,
                matsubara=(False,) if a.no_matsubara else (True,),
                heom_cutoff=a.cutoff, fock=_fock(a.fock), tmax=a.tmax, dt=a.dt,
                seed=a.seed, out=a.out, method=a.method)
    base.update(kw)
    return harness.ExperimentConfig(**base)


def _report(summary) -> int:
    print(json.dumps(harness._jsonable(summary), indent=2))
    return 0 if not summary.get("failures") else 1


def cmd_fit(a) -> int:
    bath = BathSpec(a.lam, a.gamma)
    fit = fit_matsubara(bath, seed=a.seed)
    t = default_fit_grid()
    cols = {"t": t, "m_exact": matsubara_exact(t, bath), "m_fit": fit(t)}
    cfg = _config(a)
    path = harness.write_artifact(a.out, f"fit_lam{a.lam:g}_gamma{a.gamma:g}",
                                  harness._header(cfg, {"fit": json.loads(fit.to_json())}), cols)
    return _report({"written": [str(path)], "fit": json.loads(fit.to_json()), "failures": []})


def _single(a, solver, **kw) -> int:
    if solver == "rc":
        kw.setdefault("rc_cutoff", a.cutoff if a.cutoff_given else 16)
    cfg = _config(a, solvers=(solver,), **kw)
    return _report(harness.run_experiment(cfg))


def cmd_dephasing(a) -> int:
    bath = BathSpec(a.lam, a.gamma)
    t = harness.time_grid(a.tmax, a.dt)
    fit = fit_matsubara(bath, seed=a.seed)
    dec = assemble_decomposition(bath, fit, include_matsubara=not a.no_matsubara)
    fitted = dephasing_from_decomposition(dec, a.omega_q, t)
    exact = dephasing_exact(bath, a.omega_q, t)
    bound = error_bound(t, np.abs(fit(t) - matsubara_exact(t, bath)))
    cols = {"t": t, "coherence_re": fitted.coherence.real, "coherence_im": fitted.coherence.imag,
            "exponent": fitted.decoherence_exponent.real, "bound": bound,
            "exact_coherence_re": exact.coherence.real, "exact_coherence_im": exact.coherence.imag}
    cfg = _config(a)
    path = harness.write_artifact(a.out, f"dephasing_lam{a.lam:g}_gamma{a.gamma:g}",
                                  harness._header(cfg, {"fit": json.loads(fit.to_json())}), cols)
    return _report({"written": [str(path)], "failures": []})


def cmd_figure(a) -> int:
    cfg = _config(a, experiment=a.id)
    if a.id in ("fig2", "fig4", "fig5"):
        cfg = cfg.replace(matsubara=(False, True))
    return _report(harness.run_experiment(cfg))


def cmd_sweep(a) -> int:
    lams = [float(x) for x in a.lambdas.split(",")]
    cfg = _config(a, solvers=tuple(a.solvers.split(",")), matsubara=(False, True),
                  gamma=a.gamma)
    table = harness.steady_state_sweep(lams, cfg)
    errors = [e for e in table.pop("errors") if e]
    path = harness.write_artifact(a.out, "sweep", harness._header(cfg), table)
    return _report({"written": [str(path)], "failures": errors})


def cmd_sensitivity(a) -> int:
    bath, qubit = BathSpec(a.lam, a.gamma), QubitSpec(a.omega_q, a.delta)
    fit = fit_matsubara(bath, seed=a.seed)
    rows = {"delta_max": [], "n_ok": [], "mean": [], "std": [], "cv": []}
    failures = []
    for d in (float(x) for x in a.delta_max.split(",")):
        rep = harness.sensitivity_mc(fit, bath, qubit, d, a.runs, a.seed, a.cutoff, a.shared_delta)
        rows["delta_max"].append(d)
        rows["n_ok"].append(rep.n_runs - rep.n_failed)
        rows["mean"].append(rep.mean)
        rows["std"].append(rep.std)
        rows["cv"].append(rep.cv)
        if rep.n_failed:
            failures.append({"delta_max": d, "failed": rep.n_failed})
    cfg = _config(a)
    path = harness.write_artifact(a.out, f"sensitivity_lam{a.lam:g}_gamma{a.gamma:g}",
                                  harness._header(cfg, {"fit": json.loads(fit.to_json()),
                                                        "shared_delta": a.shared_delta}), rows)
    return _report({"written": [str(path)], "table": rows, "failures": failures})


def cmd_compare(a) -> int:
    rep = harness.compare_runs(a.paths)
    summary = {"pairs": [{k: v for k, v in p.items() if k != "trace_distance"} for p in rep["pairs"]],
               "failures": []}
    if a.out:
        Path(a.out).mkdir(parents=True, exist_ok=True)
        cols = {"t": rep["t"]}
        for k, p in enumerate(rep["pairs"]):
            if "trace_distance" in p:
                cols[f"pair{k}_trace_distance"] = p["trace_distance"]
        harness.write_artifact(a.out, "compare", {"pairs": summary["pairs"]}, cols)
    return _report(summary)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinboson", description="Zero-temperature spin-boson solvers")
    sub = p.add_subparsers(dest="command", required=True)
    specs = {
        "fit": ("biexponential fit of the Matsubara correlation", cmd_fit),
        "heom": ("hierarchy dynamics", lambda a: _single(a, "heom")),
        "pseudomode": ("pseudo-mode dynamics", lambda a: _single(a, "pseudomode")),
        "rc": ("reaction-coordinate dynamics", lambda a: _single(a, "rc")),
        "dephasing": ("pure-dephasing closed form and error bound", cmd_dephasing),
        "figure": ("reproduce a figure recipe", cmd_figure),
        "sweep": ("steady state against lambda", cmd_sweep),
        "sensitivity": ("Monte-Carlo fit sensitivity", cmd_sensitivity),
        "compare": ("trace distance between artifacts", cmd_compare),
    }
    for name, (help_, fn) in specs.items():
        sp = sub.add_parser(name, help=help_)
        if name == "compare":
            sp.add_argument("paths", nargs="+")
            sp.add_argument("--out", default=None)
            sp.add_argument("-v", "--verbose", action="store_true")
        else:
            _common(sp)
        if name == "figure":
            sp.add_argument("id", choices=[f"fig{i}" for i in range(1, 9)])
        if name == "sweep":
            sp.add_argument("--lambdas", default=",".join(str(x) for x in harness.FIG8_LAMBDAS))
            sp.add_argument("--solvers", default="heom,rc")
        if name == "sensitivity":
            sp.add_argument("--delta-max", dest="delta_max",
                            default=",".join(str(x) for x in harness.DELTA_GRID))
            sp.add_argument("--runs", type=int, default=200)
            sp.add_argument("--shared-delta", action="store_true")
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    args.cutoff_given = "--cutoff" in argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FitError, RuntimeError, MemoryError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
