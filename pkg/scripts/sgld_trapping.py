"""SGLD on the tied-means posterior, started at one mode: first step (if
any) that enters the radius ball of the other mode.

    python scripts/sgld_trapping.py --steps 1000000
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from mint_mcmc.baselines import SgldConfig, first_hit_sgld
from mint_mcmc.models import TiedMeansMixture


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--m", type=int, default=100)
    ap.add_argument("--a", type=float, default=1e-2)
    ap.add_argument("--b", type=float, default=1.0)
    ap.add_argument("--gamma", type=float, default=1 / 3)
    ap.add_argument("--steps", type=int, default=1_000_000)
    ap.add_argument("--radius", type=float, default=0.1)
    ap.add_argument("--seeds", type=int, default=1)
    a = ap.parse_args()

    model = TiedMeansMixture()
    data = model.generate(np.array([0.0, 1.0]), a.n, np.random.default_rng(0))
    ma, mb = model.true_modes()
    cfg = SgldConfig(a.m, a.a, a.b, a.gamma, a.steps)
    for seed in range(a.seeds):
        t0 = time.time()
        hit = first_hit_sgld(model, data, cfg, ma, seed, mb, a.radius)
        print(json.dumps({"seed": seed, "steps": a.steps, "first_hit_other_mode": hit,
                          "seconds": time.time() - t0}))


if __name__ == "__main__":
    main()
