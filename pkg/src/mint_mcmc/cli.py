"""Command-line experiment runner.

An experiment is described by a JSON file with ``model``, ``sampler`` and
optional ``diagnostics`` sections. Every run writes ``samples.csv``,
``config.json`` (the fully resolved configuration), ``run.json`` (evaluation
counts and other facts not recoverable from the samples) and
``diagnostics.json``. ``diagnose`` rebuilds ``diagnostics.json`` from the
other three files; a run calls the same code, so the two agree byte for byte.

Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or input.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .baselines import SgldConfig, run_mh, run_sgld
from .core import ConfigError, Dataset, RngStream, SampleRun
from .mint import MintConfig, run_mint, temperature
from .mintee import build_ladder, cost_bound, pilot_energy_floor, run_mintee
from .models import ParseError, find_mnist, load_csv, load_idx, make_model, write_csv
from .proposals import KINDS, ProposalKernel, StepController

log = logging.getLogger("mint_mcmc")

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2
SAMPLERS = ("mint", "mh", "tempered-mh", "sgld", "mintee")

MODEL_DEFAULTS = {
    "tied-means": {"params": {}, "theta_star": [0.0, 1.0]},
    "symmetric-mixture": {"params": {"d": 10, "sigma_sq": 1.0}, "theta_star": None},
    "logistic": {"params": {"dim": 21}, "theta_star": None},
}

SAMPLER_DEFAULTS = {
    "mint": {"m": 100, "lambda": None, "alpha": None, "proposal": "random-walk", "step": 0.1,
             "adapt": True, "accept_window": [0.2, 0.5], "adapt_factor": 1.1, "adapt_window": 100,
             "naive_scale": False},
    "mh": {"proposal": "random-walk", "step": 0.1, "adapt": True, "accept_window": [0.2, 0.5],
           "adapt_factor": 1.1, "adapt_window": 100},
    "tempered-mh": {"T": None, "lambda": None, "proposal": "random-walk", "step": 0.1, "adapt": True,
                    "accept_window": [0.2, 0.5], "adapt_factor": 1.1, "adapt_window": 100},
    "sgld": {"m": 100, "a": 1e-3, "b": 1.0, "gamma": 1.0 / 3.0},
    "mintee": {"K": 5, "gamma": 1.4, "m_min": None, "alpha": 0.995, "c": 10.0, "p_ee": 0.1, "H0": None,
               "proposal": "langevin", "step_scale": 5e-4, "adapt": True, "accept_window": [0.2, 0.5],
               "adapt_factor": 1.1, "adapt_window": 100},
}


def _merge(defaults: dict, given: dict, where: str) -> dict:
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    out = copy.deepcopy(defaults)
    out.update(given)
    return out


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description; see :meth:`from_dict`."""

    model: dict
    data: dict
    sampler: dict
    seed: int = 0
    n_samples: int = 1000
    burn_in: int = 0
    thin: int = 1
    out: str = "run"
    init: list | None = None
    test_data: dict | None = None
    diagnostics: dict = field(default_factory=dict)
    parallel_chains: bool = False

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {"model", "data", "sampler", "seed", "n_samples", "burn_in", "thin", "out", "init",
                 "test_data", "diagnostics", "parallel_chains"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        for key in ("model", "data", "sampler"):
            if key not in raw:
                raise ConfigError(f"missing required section {key!r}")
        model = dict(raw["model"])
        kind = model.get("kind")
        if kind not in MODEL_DEFAULTS:
            raise ConfigError(f"model.kind must be one of {sorted(MODEL_DEFAULTS)}, got {kind!r}")
        model = {"kind": kind, "params": {**MODEL_DEFAULTS[kind]["params"], **model.get("params", {})}}
        sampler = dict(raw["sampler"])
        skind = sampler.pop("kind", None)
        if skind not in SAMPLERS:
            raise ConfigError(f"sampler.kind must be one of {list(SAMPLERS)}, got {skind!r}")
        sampler = {"kind": skind, **_merge(SAMPLER_DEFAULTS[skind], sampler, f"sampler ({skind})")}
        diag = {"radius": None, "modes": None, "mode_pair": [0, 1], "ks_grid_points": 4001,
                **raw.get("diagnostics", {})}
        cfg = cls(
            model=model,
            data=dict(raw["data"]),
            sampler=sampler,
            seed=int(raw.get("seed", 0)),
            n_samples=int(raw.get("n_samples", 1000)),
            burn_in=int(raw.get("burn_in", 0)),
            thin=int(raw.get("thin", 1)),
            out=str(raw.get("out", "run")),
            init=raw.get("init"),
            test_data=raw.get("test_data"),
            diagnostics=diag,
            parallel_chains=bool(raw.get("parallel_chains", False)),
        )
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {
            "model": self.model, "data": self.data, "sampler": self.sampler, "seed": self.seed,
            "n_samples": self.n_samples, "burn_in": self.burn_in, "thin": self.thin, "out": self.out,
            "init": self.init, "test_data": self.test_data, "diagnostics": self.diagnostics,
            "parallel_chains": self.parallel_chains,
        }

    @property
    def n(self) -> int | None:
        return self.data.get("n")

    def validate(self) -> None:
        """Check every cross-field constraint that does not need the data itself."""
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.n_samples < 1 or self.burn_in < 0 or self.thin < 1:
            raise ConfigError("need n_samples >= 1, burn_in >= 0 and thin >= 1")
        src = self.data.get("source", "generate")
        if src not in ("generate", "csv", "mnist"):
            raise ConfigError(f"data.source must be generate, csv or mnist, got {src!r}")
        if src == "generate" and not isinstance(self.data.get("n"), int):
            raise ConfigError("generated data needs an integer data.n")
        model = make_model(self.model["kind"], **self.model["params"])
        s = self.sampler
        kind = s["kind"]
        if s.get("proposal", "random-walk") not in KINDS:
            raise ConfigError(f"proposal must be one of {KINDS}, got {s.get('proposal')!r}")
        needs_grad = kind == "sgld" or s.get("proposal") == "langevin"
        if needs_grad and not model.has_gradient:
            raise ConfigError(f"{kind} with these settings needs a model with gradients")
        if self.init is not None and len(self.init) != model.dim:
            raise ConfigError(f"init must have {model.dim} entries")
        n = self.n
        if kind == "mint":
            if (s["lambda"] is None) == (s["alpha"] is None):
                raise ConfigError("mint needs exactly one of sampler.lambda or sampler.alpha")
            if n is not None:
                self.mint_config(n)
        elif kind == "tempered-mh":
            if (s["T"] is None) == (s["lambda"] is None):
                raise ConfigError("tempered-mh needs exactly one of sampler.T or sampler.lambda")
            if s["T"] is not None and not s["T"] >= 1:
                raise ConfigError("tempered-mh needs T >= 1")
        elif kind == "sgld":
            SgldConfig(s["m"], s["a"], s["b"], s["gamma"])
            if n is not None and not 1 <= s["m"] <= n:
                raise ConfigError(f"SGLD batch size must lie in [1, n], got {s['m']}")
        elif kind == "mintee" and n is not None:
            self.ladder(n, 0.0)

    def proposal(self) -> ProposalKernel:
        return ProposalKernel(float(self.sampler["step"]), self.sampler["proposal"])

    def controller(self) -> StepController | None:
        s = self.sampler
        if not s.get("adapt"):
            return None
        lo, hi = s["accept_window"]
        return StepController(float(s["step"]), lo, hi, s["adapt_factor"], s["adapt_window"])

    def mint_config(self, n: int) -> MintConfig:
        s = self.sampler
        if s["m"] is None or not 1 < s["m"] <= n:
            raise ConfigError(f"mint needs 1 < m <= n, got m={s['m']}, n={n}")
        kw = dict(burn_in=self.burn_in, n_samples=self.n_samples, adapt=bool(s["adapt"]),
                  accept_window=tuple(s["accept_window"]), adapt_factor=s["adapt_factor"],
                  adapt_window=s["adapt_window"], naive_scale=bool(s["naive_scale"]))
        if s["alpha"] is not None:
            return MintConfig.from_alpha(n, s["m"], s["alpha"], self.proposal(), **kw)
        return MintConfig(n, s["m"], s["lambda"], self.proposal(), **kw)

    def tempered_T(self, n: int) -> float:
        s = self.sampler
        return float(s["T"]) if s["T"] is not None else temperature(n, s["lambda"])

    def ladder(self, n: int, H0: float):
        s = self.sampler
        K, gamma = int(s["K"]), float(s["gamma"])
        m_min = s["m_min"] if s["m_min"] is not None else max(2, round(n / gamma ** (K - 1)))
        return build_ladder(
            n, K, int(m_min), gamma, s["alpha"], s["c"], H0, p_ee=s["p_ee"], burn_in=self.burn_in,
            n_samples=self.n_samples, proposal=s["proposal"], step_scale=s["step_scale"], adapt=s["adapt"],
            accept_window=tuple(s["accept_window"]), adapt_factor=s["adapt_factor"],
            adapt_window=s["adapt_window"],
        )


# ---------------------------------------------------------------- data


def _theta_star(cfg_model: dict, data_spec: dict, dim: int) -> np.ndarray:
    ts = data_spec.get("theta_star", MODEL_DEFAULTS[cfg_model["kind"]]["theta_star"])
    if ts is None:
        ts = np.zeros(dim)
        ts[0] = 2.0 if cfg_model["kind"] == "symmetric-mixture" else 1.0
    ts = np.asarray(ts, dtype=float)
    if ts.shape != (dim,):
        raise ConfigError(f"theta_star must have {dim} entries")
    return ts


def load_data(model, cfg_model: dict, dspec: dict, seed: int) -> Dataset:
    """Dataset described by a ``data`` section; generated data uses its own seed."""
    src = dspec.get("source", "generate")
    if src == "generate":
        rng = RngStream(int(dspec.get("seed", seed)), 2**32).generator()
        extra = {"feature_scale": dspec["feature_scale"]} if "feature_scale" in dspec else {}
        return model.generate(_theta_star(cfg_model, dspec, model.dim), int(dspec["n"]), rng, **extra)
    if src == "csv":
        if "path" not in dspec or "columns" not in dspec:
            raise ConfigError("csv data needs path and columns")
        return load_csv(dspec["path"], dspec["columns"])
    found = find_mnist(dspec.get("split", "train"), dspec.get("dir"))
    if found is None:
        raise ConfigError("MNIST files not found; set MINT_DATA_DIR or data.dir")
    a, b = dspec.get("digits", [1, 7])
    return load_idx(*found, digit_a=a, digit_b=b)


# ---------------------------------------------------------------- running


@dataclass
class RunResult:
    samples: np.ndarray
    accepted: np.ndarray
    iters: np.ndarray
    facts: dict


def _thin(run: SampleRun, burn_in: int, thin: int) -> RunResult:
    keep = np.arange(0, len(run), thin)
    return RunResult(run.samples[keep], np.asarray(run.accepted)[keep], burn_in + keep + 1, {
        "evaluations_total": run.evals.loglik, "gradient_evaluations": run.evals.grad,
        "burn_in_accept_rate": None if math.isnan(run.burn_in_accept_rate) else run.burn_in_accept_rate,
        "final_step": None if math.isnan(run.final_step) else run.final_step,
        "kernel_samples": len(run),
    })


def execute(cfg: ExperimentConfig, model, data: Dataset) -> RunResult:
    s = cfg.sampler
    kind = s["kind"]
    init = np.zeros(model.dim) if cfg.init is None else np.asarray(cfg.init, dtype=float)
    rng = RngStream(cfg.seed)
    n = data.n
    if kind == "mint":
        mc = cfg.mint_config(n)
        res = _thin(run_mint(model, data, mc, init, rng), cfg.burn_in, cfg.thin)
        res.facts.update(T=mc.T, m=mc.m, tau=mc.tau, **{"lambda": mc.lam})
        return res
    if kind in ("mh", "tempered-mh"):
        T = 1.0 if kind == "mh" else cfg.tempered_T(n)
        run = run_mh(model, data, init, cfg.proposal(), rng, cfg.n_samples, cfg.burn_in, T, cfg.controller())
        res = _thin(run, cfg.burn_in, cfg.thin)
        res.facts.update(T=T, m=n)
        return res
    if kind == "sgld":
        sc = SgldConfig(s["m"], s["a"], s["b"], s["gamma"], cfg.burn_in + cfg.n_samples)
        res = _thin(run_sgld(model, data, sc, init, rng, burn_in=cfg.burn_in), cfg.burn_in, cfg.thin)
        # SGLD evaluates only gradients; those are its per-datum cost
        res.facts.update(T=1.0, m=s["m"], evaluations_total=res.facts["gradient_evaluations"])
        return res
    # mintee
    H0 = s["H0"]
    if H0 is None:
        H0 = pilot_energy_floor(model, data, [init], s["c"])
    ladder = cfg.ladder(n, float(H0))
    run = run_mintee(model, data, ladder, init, rng, parallel=cfg.parallel_chains)
    keep = np.arange(0, len(run.samples[0]), cfg.thin)
    total = ladder.K * (ladder.burn_in + ladder.n_samples)
    facts = {
        "evaluations_total": run.total_evals,
        "gradient_evaluations": sum(c.grad for c in run.evals),
        "window_evaluations": run.window_total_evals,
        "cost_bound": cost_bound(ladder),
        "ring_counts": run.ring_counts.tolist(),
        "ladder": ladder.echo(),
        "final_step": run.final_steps[0],
        "kernel_samples": len(run.samples[0]),
        "T": 1.0, "m": n,
        "chain_acceptance": [st.mh_accepted / st.mh_steps if st.mh_steps else None for st in run.stats],
        "jumps": [[st.jumps, st.jumps_accepted] for st in run.stats],
    }
    iters = total - ladder.n_samples + keep + 1
    return RunResult(run.samples[0][keep], run.accepted[0][keep], iters, facts)


def write_samples(path: Path, res: RunResult) -> None:
    d = res.samples.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "accepted"] + [f"theta_{j}" for j in range(d)])
        for it, acc, row in zip(res.iters, res.accepted, res.samples):
            w.writerow([int(it), int(bool(acc))] + [f"{v:.17g}" for v in row])


def read_samples(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["iter", "accepted"]:
            raise ParseError(f"{path}: expected header starting with iter,accepted")
        rows = [r for r in reader if r]
    if not rows:
        raise ParseError(f"{path}: no samples")
    try:
        arr = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return arr[:, 0].astype(np.int64), arr[:, 1].astype(bool), arr[:, 2:]


def _dump(obj, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.generic):
        return _clean(x.item())
    return x


# ---------------------------------------------------------------- diagnostics


def _modes(cfg: ExperimentConfig, model) -> list | None:
    if cfg.diagnostics.get("modes") is not None:
        return [np.asarray(m, dtype=float) for m in cfg.diagnostics["modes"]]
    if cfg.data.get("source", "generate") != "generate":
        return None
    modes = model.true_modes(_theta_star(cfg.model, cfg.data, model.dim))
    return modes or None


def _radius(cfg: ExperimentConfig, n: int) -> float:
    r = cfg.diagnostics.get("radius")
    # ball radius shrinks like 1/sqrt(n), 0.01 at n = 10**6
    return float(r) if r is not None else 1e-2 * math.sqrt(1e6 / n)


def compute_diagnostics(cfg: ExperimentConfig, facts: dict, iters, accepted, samples, model, data,
                        test_data=None) -> tuple[dict, dict]:
    """Diagnostics dictionary plus per-diagnostic tables for CSV output."""
    tables: dict = {}
    n = data.n
    consecutive = np.concatenate([[False], np.diff(iters) == 1])
    moved = accepted & consecutive
    disp = np.linalg.norm(np.diff(samples, axis=0), axis=1) if len(samples) > 1 else np.zeros(0)
    steps = disp[moved[1:]] if len(samples) > 1 else disp
    out = {
        "acceptance_rate": float(accepted.mean()),
        "mean_accepted_step": float(steps.mean()) if len(steps) else None,
        "mode_ratio": None, "mode_occupancy": None, "hitting_iterations": None, "ring_table": None,
        "test_accuracy": None, "ks_distance": None,
        "evaluations_total": int(facts["evaluations_total"]),
        "evaluations_per_sample": facts["evaluations_total"] / facts["kernel_samples"],
    }
    modes = _modes(cfg, model)
    if modes is not None:
        r = _radius(cfg, n)
        a, b = cfg.diagnostics["mode_pair"]
        out["mode_ratio"] = dg.mode_ratio(samples, modes[a], modes[b], r)
        out["mode_occupancy"] = dg.mode_occupancy(samples, modes)
        hits = []
        for mode in modes:
            h = dg.hitting_time(samples, mode, r)
            hits.append(None if h is None else int(iters[h]))
        out["hitting_iterations"] = hits
        cps = sorted({int(k) for k in np.unique(np.geomspace(1, len(samples), 50).astype(int))})
        tables["mode_ratio_curve"] = (["samples", "mode_ratio"],
                                      list(zip(cps, dg.mode_ratio_curve(samples, modes[a], modes[b], r, cps))))
    if "ring_counts" in facts:
        counts = np.asarray(facts["ring_counts"], dtype=float)
        lad = facts["ladder"]
        tot = counts.sum(axis=1, keepdims=True)
        pct = np.divide(100.0 * counts, tot, out=np.zeros_like(counts), where=tot > 0)
        out["ring_table"] = [{"chain": k, "T": lad["T"][k], "m": lad["m"][k], "percent": pct[k].tolist()}
                             for k in range(len(pct))]
        tables["ring_table"] = (["chain", "T", "m"] + [f"ring_{j}" for j in range(pct.shape[1])],
                                [[k, lad["T"][k], lad["m"][k], *pct[k]] for k in range(len(pct))])
    if test_data is not None and hasattr(model, "predict_proba"):
        out["test_accuracy"] = dg.test_accuracy(model, samples, test_data, thin=1)
    if model.dim == 1:
        T = float(facts.get("T", 1.0))
        x = samples[:, 0]
        sd = float(x.std()) or 1.0
        grid = np.linspace(x.min() - 6 * sd, x.max() + 6 * sd, int(cfg.diagnostics["ks_grid_points"]))
        out["ks_distance"] = dg.ks_against_grid(x, grid, dg.grid_log_posterior(model, data, grid, T))
    return _clean(out), tables


def _write_tables(out_dir: Path, tables: dict) -> None:
    for name, (header, rows) in tables.items():
        with open(out_dir / f"{name}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def diagnose(out_dir: Path) -> dict:
    """Recompute diagnostics.json (and the per-diagnostic CSVs) in ``out_dir``."""
    out_dir = Path(out_dir)
    try:
        with open(out_dir / "config.json", encoding="utf-8") as fh:
            cfg = ExperimentConfig.from_dict(json.load(fh))
        with open(out_dir / "run.json", encoding="utf-8") as fh:
            facts = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read stored run in {out_dir}: {exc}") from None
    iters, accepted, samples = read_samples(out_dir / "samples.csv")
    model = make_model(cfg.model["kind"], **cfg.model["params"])
    data = load_data(model, cfg.model, cfg.data, cfg.seed)
    test = load_data(model, cfg.model, cfg.test_data, cfg.seed + 1) if cfg.test_data else None
    diag, tables = compute_diagnostics(cfg, facts, iters, accepted, samples, model, data, test)
    diag["config"] = cfg.to_dict()
    _dump(diag, out_dir / "diagnostics.json")
    _write_tables(out_dir, tables)
    return diag


def run_experiment(cfg: ExperimentConfig) -> dict:
    model = make_model(cfg.model["kind"], **cfg.model["params"])
    data = load_data(model, cfg.model, cfg.data, cfg.seed)
    if cfg.data.get("source", "generate") != "generate":
        cfg.data["n"] = data.n
    cfg.validate()
    if cfg.test_data:
        load_data(model, cfg.model, cfg.test_data, cfg.seed + 1)
    res = execute(cfg, model, data)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_samples(out_dir / "samples.csv", res)
    _dump(cfg.to_dict(), out_dir / "config.json")
    _dump(_clean(res.facts), out_dir / "run.json")
    return diagnose(out_dir)


# ---------------------------------------------------------------- entry point


def _load_config(args, kind: str | None) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if kind is not None:
        sampler = dict(raw.get("sampler", {}))
        if sampler.get("kind") != kind:
            sampler = {"kind": kind, **{k: v for k, v in sampler.items()
                                        if k in SAMPLER_DEFAULTS[kind]}}
        raw["sampler"] = sampler
    overrides = {"seed": args.seed, "out": args.out, "n_samples": args.samples, "burn_in": args.burn_in,
                 "thin": args.thin}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    if args.parallel_chains:
        raw["parallel_chains"] = True
    try:
        return ExperimentConfig.from_dict(raw)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ConfigError(f"malformed config: {exc!r}") from None


def _cmd_gen_data(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
        cfg_model = {"kind": raw["model"]["kind"],
                     "params": {**MODEL_DEFAULTS[raw["model"]["kind"]]["params"], **raw["model"].get("params", {})}}
        dspec = dict(raw["data"])
    else:
        if args.model not in MODEL_DEFAULTS:
            raise ConfigError(f"--model must be one of {sorted(MODEL_DEFAULTS)}")
        params = {**MODEL_DEFAULTS[args.model]["params"]}
        for kv in args.param or []:
            k, _, v = kv.partition("=")
            params[k] = json.loads(v)
        cfg_model = {"kind": args.model, "params": params}
        if args.n is None:
            raise ConfigError("--n is required without --config")
        dspec = {"source": "generate", "n": args.n}
        if args.theta_star:
            dspec["theta_star"] = json.loads(args.theta_star)
    if args.seed is not None:
        dspec["seed"] = args.seed
    if dspec.get("source", "generate") != "generate":
        raise ConfigError("gen-data only generates synthetic data")
    model = make_model(cfg_model["kind"], **cfg_model["params"])
    data = load_data(model, cfg_model, dspec, int(dspec.get("seed", 0)))
    target = Path(args.out or "data.csv")
    if target.suffix != ".csv":
        target.mkdir(parents=True, exist_ok=True)
        target = target / "data.csv"
    else:
        target.parent.mkdir(parents=True, exist_ok=True)
    write_csv(data, target)
    print(target)
    return EXIT_OK


def _cmd_normality(args) -> int:
    cfg = _load_config(args, None)
    model = make_model(cfg.model["kind"], **cfg.model["params"])
    data = load_data(model, cfg.model, cfg.data, cfg.seed)
    dspec = {"m": 100, "draws": 5000, "theta": None, **cfg.diagnostics.get("normality", {})}
    theta = dspec["theta"] if dspec["theta"] is not None else (cfg.init or np.zeros(model.dim))
    if args.samples is not None:
        dspec["draws"] = args.samples
    rep = dg.normality_report(model, data, np.asarray(theta, float), int(dspec["m"]), int(dspec["draws"]),
                              RngStream(cfg.seed).generator())
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rep["config"] = cfg.to_dict()
    _dump(_clean(rep), out_dir / "normality.json")
    print(json.dumps(_clean({k: rep[k] for k in ("skewness", "excess_kurtosis", "ks", "normal_ok")})))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mint-mcmc", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="experiment JSON file")
        sp.add_argument("--seed", type=int, help="global seed (unsigned 64-bit)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--samples", type=int, help="post-burn-in sample count N")
        sp.add_argument("--burn-in", type=int, dest="burn_in", help="burn-in length B")
        sp.add_argument("--thin", type=int, help="keep every k-th sample")
        sp.add_argument("--parallel-chains", action="store_true", help="run MINTEE chains on threads")
        sp.add_argument("-v", "--verbose", action="store_true")

    for name in ("run", "run-mint", "run-mh", "run-tempered", "run-sgld", "run-mintee", "normality"):
        common(sub.add_parser(name))
    g = sub.add_parser("gen-data", help="write a synthetic dataset as CSV")
    common(g, config_required=False)
    g.add_argument("--model", default="symmetric-mixture")
    g.add_argument("--n", type=int)
    g.add_argument("--theta-star", dest="theta_star", help="JSON list")
    g.add_argument("--param", action="append", help="model parameter as key=json-value")
    d = sub.add_parser("diagnose", help="recompute diagnostics.json from a stored run")
    d.add_argument("--out", required=True, help="run directory")
    d.add_argument("-v", "--verbose", action="store_true")
    return p


RUN_KINDS = {"run": None, "run-mint": "mint", "run-mh": "mh", "run-tempered": "tempered-mh",
             "run-sgld": "sgld", "run-mintee": "mintee"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gen-data":
            return _cmd_gen_data(args)
        if args.command == "diagnose":
            diagnose(Path(args.out))
            return EXIT_OK
        if args.command == "normality":
            return _cmd_normality(args)
        cfg = _load_config(args, RUN_KINDS[args.command])
        diag = run_experiment(cfg)
        summary = {k: diag[k] for k in ("acceptance_rate", "mode_ratio", "ks_distance", "test_accuracy",
                                        "evaluations_total")}
        print(json.dumps(summary))
        return EXIT_OK
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - any sampler failure is a runtime error
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
