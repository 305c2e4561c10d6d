"""Mini-batch tempered MCMC (MINT) and its equi-energy ladder (MINTEE)."""
from .baselines import SgldConfig, first_hit_sgld, mh_step, run_mh, run_sgld, sgld_step, tempered_mh_step
from .chain import ChainState, init_state, log_accept_ratio, mh_kernel_step
from .core import (
    ConfigError, Dataset, EvalCounter, Model, NonFiniteError, RngStream, SampleRun,
    full_mean_loglik, log_posterior_tempered,
)
from .estimator import MiniBatch, extend_batch, mu_hat, refine_mu_hat, sample_batch, t_statistic
from .mint import MintConfig, mint_log_accept, mint_step, run_mint, tau_from_batch, temperature
from .mintee import LadderConfig, build_ladder, cost_bound, ee_jump, run_mintee
from .models import LogisticRegressionModel, SymmetricMixture, TiedMeansMixture, make_model
from .proposals import ProposalKernel, StepController

__version__ = "0.1.0"

__all__ = [
    "ChainState", "ConfigError", "Dataset", "EvalCounter", "LadderConfig", "LogisticRegressionModel",
    "MiniBatch", "MintConfig", "Model", "NonFiniteError", "ProposalKernel", "RngStream", "SampleRun",
    "SgldConfig", "StepController", "SymmetricMixture", "TiedMeansMixture", "build_ladder", "cost_bound",
    "ee_jump", "extend_batch", "first_hit_sgld", "full_mean_loglik", "init_state", "log_accept_ratio",
    "log_posterior_tempered", "make_model", "mh_kernel_step", "mh_step", "mint_log_accept", "mint_step",
    "mu_hat", "refine_mu_hat", "run_mh", "run_mint", "run_mintee", "run_sgld", "sample_batch",
    "sgld_step", "t_statistic", "tau_from_batch", "temperature", "tempered_mh_step",
]
