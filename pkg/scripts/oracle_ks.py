"""KS distance of MINT samples against the grid tempered posterior of the
Gaussian location model, for the correct and the naive exponent scale.

    python scripts/oracle_ks.py --n 50 --m 25 --lam 0.3
"""
from __future__ import annotations

import argparse
import json

import numpy as np

from mint_mcmc.diagnostics import grid_log_posterior, ks_against_grid
from mint_mcmc.mint import MintConfig, run_mint, temperature
from mint_mcmc.models import SymmetricMixture
from mint_mcmc.proposals import ProposalKernel


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--m", type=int, default=25)
    ap.add_argument("--lam", type=float, default=0.3)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seeds", type=int, default=1)
    a = ap.parse_args()

    model = SymmetricMixture(1)
    data = model.generate(np.zeros(1), a.n, np.random.default_rng(0))
    T = temperature(a.n, a.lam)
    grid = np.linspace(-6.0, 6.0, 6001)
    lg = grid_log_posterior(model, data, grid, T)
    for seed in range(a.seeds):
        for naive in (False, True):
            cfg = MintConfig(a.n, a.m, a.lam, ProposalKernel(0.5), burn_in=2000, n_samples=a.samples,
                             adapt=True, naive_scale=naive)
            run = run_mint(model, data, cfg, np.zeros(1), seed)
            ks = ks_against_grid(run.samples[:, 0], grid, lg)
            print(json.dumps({"seed": seed, "naive_scale": naive, "T": T, "ks": ks}))


if __name__ == "__main__":
    main()
