"""Truncation convergence at (lam, gamma) = (1, 1) with Matsubara terms.

Steady hierarchy occupation against depth, and the pseudo-mode top-level
populations against Fock cutoffs, over a short window.

    python3 scripts/usc_convergence.py [--tmax 10]
"""
import argparse
import time
import warnings

import numpy as np

from spinboson.bath import BathSpec, QubitSpec
from spinboson.fitting import assemble_decomposition, fit_matsubara
from spinboson.heom import HeomConfig, heom_steady_state
from spinboson.pseudomode import PseudoModeModel, run_pseudomode
from spinboson.qcore import PropagationConfig


def main(argv=None):
    p = argparse.ArgumentParser()
    p.add_argument("--tmax", type=float, default=10.0)
    p.add_argument("--depths", default="8,10,12,14,16")
    p.add_argument("--fock", nargs="*", default=["8,5,5", "10,5,5", "10,10,5"])
    args = p.parse_args(argv)
    bath, qubit = BathSpec(1.0, 1.0), QubitSpec(0.0, 1.0)
    fit = fit_matsubara(bath, seed=0)
    dec = assemble_decomposition(bath, fit)
    print("depth  steady_occ  seconds")
    for nc in (int(x) for x in args.depths.split(",")):
        t0 = time.perf_counter()
        run, _ = heom_steady_state(HeomConfig(dec, nc), qubit, bath)
        print(f"{nc:5d}  {run.mode_occ[0]:.8f}  {time.perf_counter() - t0:7.2f}")
    cfg = PropagationConfig(np.linspace(0, args.tmax, int(args.tmax * 10) + 1))
    print("fock        top_pop_per_mode                 occ(tmax)  seconds")
    for spec in args.fock:
        cut = tuple(int(c) for c in spec.split(","))
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            run = run_pseudomode(PseudoModeModel.from_bath(bath, qubit, fit, cutoffs=cut), cfg)
        tops = run.top_fock_pop_modes
        print(f"{spec:10s}  {np.array2string(tops, precision=1)}  {run.mode_occ[-1, 0]:.6f}  "
              f"{time.perf_counter() - t0:7.1f}")


if __name__ == "__main__":
    main()
