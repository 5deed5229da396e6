"""One-off calibration pass for the frozen bound constants.

Runs on seeds disjoint from the acceptance suite and prints the worst observed
ratio for each constant.  The frozen values in the package are these ratios
rounded up with headroom.
"""

import argparse
import math

import numpy as np

from vtamp.bench import SpectrumSpec, gen_instance, synthetic_suite
from vtamp.solver import t_av_form, p_succ_form
from vtamp.stategen import SolverConfig, classify, vt_stategen
from vtamp.vtaa import VtaaParams, run_vtaa, vtaa_bound_form
from vtamp.vtmodel import stopping_profile


def solver_ratios(seeds, ns=(2, 4, 8), kappas=(4, 16)):
    r9, r10, rc, dbad = [], [], [], []
    for n in ns:
        for k in kappas:
            for s in seeds:
                inst, b = gen_instance(n, SpectrumSpec("log-uniform", k), s)
                cfg = SolverConfig.make(k, 0.2, seed=s)
                gen = vt_stategen(inst, b, cfg)
                prof = stopping_profile(gen.vta)
                cls = classify(inst, b, cfg)
                r9.append(prof.t_av / t_av_form(cls, cfg.k_uniq))
                r10.append(p_succ_form(cls, k) / prof.p_succ)
                rc.append(prof.t_av / math.sqrt(prof.p_succ) / (k / cfg.eps * cfg.k_uniq))
                dbad.append(cls.delta_bad / cfg.eps)
    return max(r9), max(r10), max(rc), dbad


def mean_delta_bad(seeds, shifts=64):
    """Worst (over instances) mean of delta_bad / eps over uniform random shifts."""
    worst = 0.0
    for s in seeds:
        inst, b = gen_instance(8, SpectrumSpec("log-uniform", 16), s)
        vals = []
        for t in range(shifts):
            cfg = SolverConfig.make(16, 0.2, seed=s * 1000 + t)
            vals.append(classify(inst, b, cfg).delta_bad / cfg.eps)
        worst = max(worst, float(np.mean(vals)))
    return worst


def vtaa_ratio(seeds):
    out = []
    for v in (v for s in seeds for v in synthetic_suite(20, s)):
        prof = stopping_profile(v)
        run = run_vtaa(v, VtaaParams.for_vta(v, p_floor=prof.p_succ / 2), seed=0)
        out.append(run.total_cost / vtaa_bound_form(prof))
    return max(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()
    seeds = range(1000, 1000 + args.seeds)
    r9, r10, rc, _ = solver_ratios(seeds)
    print(f"C_TAV   worst T_av / form        {r9:.3f}")
    print(f"C_PSUCC  worst form / p_succ      {r10:.3f}")
    print(f"C_ratio worst ratio / form       {rc:.3f}")
    print(f"C_delta worst mean delta_bad/eps {mean_delta_bad(seeds[:5]):.3f}")
    print(f"C_cal worst ledger / form     {vtaa_ratio(range(1000, 1010)):.3f}")


if __name__ == "__main__":
    main()
