"""Test accuracy against full-data passes for MINT and full-batch MH on
synthetic logistic regression (or MNIST 1-vs-7 when MINT_DATA_DIR is set).

    python scripts/logistic_compare.py --passes 150 --seed 0
"""
from __future__ import annotations

import argparse
import json
import math

import numpy as np

from mint_mcmc.baselines import run_mh
from mint_mcmc.diagnostics import test_accuracy
from mint_mcmc.mint import MintConfig, run_mint
from mint_mcmc.models import LogisticRegressionModel, find_mnist, load_idx
from mint_mcmc.proposals import ProposalKernel


def problem(p: int, n: int, separation: float):
    train_files, test_files = find_mnist("train"), find_mnist("test")
    if train_files and test_files:
        train, test = load_idx(*train_files), load_idx(*test_files)
        return LogisticRegressionModel(train.points.shape[1] - 1), train, test
    model = LogisticRegressionModel(p + 1)
    theta = np.r_[np.full(p, 2 * separation / math.sqrt(p)), 0.0]
    train = model.generate(theta, n, np.random.default_rng(1), design="class-conditional")
    test = model.generate(theta, n, np.random.default_rng(2), design="class-conditional")
    return model, train, test


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--p", type=int, default=20)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--separation", type=float, default=3.0)
    ap.add_argument("--m", type=int, default=100)
    ap.add_argument("--alpha", type=float, default=0.99)
    ap.add_argument("--passes", type=int, default=150)
    ap.add_argument("--mint-passes", type=int, default=3)
    ap.add_argument("--step", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()

    model, train, test = problem(a.p, a.n, a.separation)
    n = train.n
    iters = a.mint_passes * n // a.m - 1
    T = MintConfig.from_alpha(n, a.m, a.alpha, ProposalKernel(a.step)).T
    cfg = MintConfig.from_alpha(n, a.m, a.alpha, ProposalKernel(a.step * math.sqrt(T)), n_samples=iters)
    mint = run_mint(model, train, cfg, np.zeros(model.dim), a.seed)
    mint_acc = test_accuracy(model, mint.samples[iters // 2:], test, thin=1)
    print(json.dumps({"sampler": "mint", "T": T, "passes": mint.evals.loglik / n, "accuracy": mint_acc}))
    mh = run_mh(model, train, np.zeros(model.dim), ProposalKernel(a.step), a.seed, a.passes - 1)
    for k in range(2, a.passes, max(1, a.passes // 30)):
        acc = test_accuracy(model, mh.samples[k // 2:k], test, thin=1)
        print(json.dumps({"sampler": "mh", "passes": k + 1, "accuracy": acc}))


if __name__ == "__main__":
    main()
