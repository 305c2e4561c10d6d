"""Tied-means mode ratio over several seeds with MINT.

    python scripts/tied_means_ratio.py --seeds 20 --samples 200000
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from mint_mcmc.diagnostics import hitting_time, mode_ratio
from mint_mcmc.mint import MintConfig, run_mint
from mint_mcmc.models import TiedMeansMixture
from mint_mcmc.proposals import ProposalKernel


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--m", type=int, default=100)
    ap.add_argument("--lam", type=float, default=0.25)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--burn-in", type=int, default=2000)
    ap.add_argument("--radius", type=float, default=0.1)
    ap.add_argument("--out")
    a = ap.parse_args()

    model = TiedMeansMixture()
    data = model.generate(np.array([0.0, 1.0]), a.n, np.random.default_rng(0))
    ma, mb = model.true_modes()
    rows = []
    for seed in range(a.seeds):
        t0 = time.time()
        cfg = MintConfig(a.n, a.m, a.lam, ProposalKernel(0.5), burn_in=a.burn_in, n_samples=a.samples,
                         adapt=True, accept_window=(0.25, 0.35))
        run = run_mint(model, data, cfg, np.zeros(2), seed)
        row = {
            "seed": seed,
            "mode_ratio": mode_ratio(run, ma, mb, a.radius),
            "hit_a": hitting_time(run.samples, ma, a.radius),
            "hit_b": hitting_time(run.samples, mb, a.radius),
            "acceptance": float(np.mean(run.accepted)),
            "seconds": time.time() - t0,
        }
        print(json.dumps(row))
        rows.append(row)
    ratios = [r["mode_ratio"] for r in rows if np.isfinite(r["mode_ratio"])]
    summary = {"mean_ratio": float(np.mean(ratios)) if ratios else None, "finite_runs": len(ratios),
               "both_hit": sum(r["hit_a"] is not None and r["hit_b"] is not None for r in rows)}
    print(json.dumps(summary))
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            json.dump({"runs": rows, "summary": summary}, fh, indent=2)


if __name__ == "__main__":
    main()
