"""Run configuration: JSON schema, validation, and resolution to run objects.

A config is five blocks (topology, problem, algorithm, sim, eval). Parsing
is strict: unknown keys and invalid values fail with the dotted field path,
and serialize-parse-serialize is the identity on the JSON form.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .experiments import (
    BarycenterProblem,
    QuadraticNetworkProblem,
    Trace,
    gaussian_preset,
    quadratic_preset,
    trace_from_snapshots,
)
from .graphs import Graph, TopologySpec, build_topology, lambda_max, laplacian
from .mnist import read_manifest
from .optim import batch_size, step_size
from .simulate import VARIANTS, CommModel, run_sim

__all__ = [
    "ConfigError",
    "ActivationBlock",
    "DelayBlock",
    "ProblemBlock",
    "AlgorithmBlock",
    "SimBlock",
    "EvalBlock",
    "RunConfig",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "save_config",
    "ResolvedRun",
    "resolve",
    "execute",
]

_PRESETS = ("gaussian", "quadratic", "mnist")


class ConfigError(ValueError):
    """Invalid configuration; carries the dotted path of the offending field."""

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


@dataclass(frozen=True)
class ActivationBlock:
    mode: str = "permutation"
    interval_s: float = 0.2


@dataclass(frozen=True)
class DelayBlock:
    support: tuple = (0.2, 0.4, 0.6, 0.8, 1.0)
    probs: Optional[tuple] = None


@dataclass(frozen=True)
class ProblemBlock:
    preset: str = "gaussian"
    beta: float = 1.0
    n: int = 50
    preset_seed: int = 0
    mu_strong: float = 1.0
    b_scale: float = 1.0
    noise_std: float = 0.0
    manifest: Optional[str] = None


@dataclass(frozen=True)
class AlgorithmBlock:
    variant: str = "a2dwb"
    gamma: Union[str, float] = "auto"
    tau_assumed: Union[str, int] = "auto"
    batch: Union[str, int] = 10
    batch_epsilon: float = 0.1


@dataclass(frozen=True)
class SimBlock:
    horizon_s: float = 200.0
    activation: ActivationBlock = field(default_factory=ActivationBlock)
    delay: DelayBlock = field(default_factory=DelayBlock)
    master_seed: int = 0


@dataclass(frozen=True)
class EvalBlock:
    eval_every_s: float = 2.0
    eval_samples: int = 200
    eval_seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    topology: TopologySpec = field(
        default_factory=lambda: TopologySpec(kind="cycle", m=20, seed=0)
    )
    problem: ProblemBlock = field(default_factory=ProblemBlock)
    algorithm: AlgorithmBlock = field(default_factory=AlgorithmBlock)
    sim: SimBlock = field(default_factory=SimBlock)
    eval: EvalBlock = field(default_factory=EvalBlock)


def _take(block: dict, path: str, key: str, default, kind):
    value = block.pop(key, default)
    if value is None and default is None:
        return None
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}.{key}", f"expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}.{key}", f"expected an integer, got {value!r}")
        return int(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}.{key}", f"expected a string, got {value!r}")
        return value
    return value


def _reject_unknown(block: dict, path: str):
    if block:
        raise ConfigError(f"{path}.{sorted(block)[0]}", "unknown field")


def _block(d: dict, name: str) -> dict:
    sub = d.pop(name, {})
    if not isinstance(sub, dict):
        raise ConfigError(name, f"expected an object, got {sub!r}")
    return dict(sub)


def config_from_dict(raw: dict) -> RunConfig:
    """Parse and validate a nested config dict; raises ConfigError."""
    if not isinstance(raw, dict):
        raise ConfigError("config", f"expected an object, got {raw!r}")
    d = dict(raw)

    topo = _block(d, "topology")
    topology = TopologySpec(
        kind=_take(topo, "topology", "kind", "cycle", str),
        m=_take(topo, "topology", "m", 20, int),
        er_edge_prob=_take(topo, "topology", "er_edge_prob", None, float),
        seed=_take(topo, "topology", "seed", 0, int),
    )
    _reject_unknown(topo, "topology")
    try:
        topology.validate()
    except ValueError as exc:
        raise ConfigError("topology", str(exc)) from exc
    if topology.seed is not None and topology.seed < 0:
        raise ConfigError("topology.seed", "seed must be nonnegative")

    prob = _block(d, "problem")
    problem = ProblemBlock(
        preset=_take(prob, "problem", "preset", "gaussian", str),
        beta=_take(prob, "problem", "beta", 1.0, float),
        n=_take(prob, "problem", "n", 50, int),
        preset_seed=_take(prob, "problem", "preset_seed", 0, int),
        mu_strong=_take(prob, "problem", "mu_strong", 1.0, float),
        b_scale=_take(prob, "problem", "b_scale", 1.0, float),
        noise_std=_take(prob, "problem", "noise_std", 0.0, float),
        manifest=_take(prob, "problem", "manifest", None, str),
    )
    _reject_unknown(prob, "problem")
    if problem.preset not in _PRESETS:
        raise ConfigError(
            "problem.preset", f"unknown preset {problem.preset!r}, expected one of {_PRESETS}"
        )
    if not problem.beta > 0:
        raise ConfigError("problem.beta", f"must be positive, got {problem.beta}")
    if problem.n < 2:
        raise ConfigError("problem.n", f"support needs at least 2 points, got {problem.n}")
    if not problem.mu_strong > 0:
        raise ConfigError("problem.mu_strong", f"must be positive, got {problem.mu_strong}")
    if problem.noise_std < 0:
        raise ConfigError("problem.noise_std", f"must be nonnegative, got {problem.noise_std}")
    if problem.preset_seed < 0:
        raise ConfigError("problem.preset_seed", "seed must be nonnegative")
    if problem.preset == "mnist" and not problem.manifest:
        raise ConfigError("problem.manifest", "mnist preset needs a measure manifest path")

    alg = _block(d, "algorithm")
    gamma = alg.pop("gamma", "auto")
    if gamma != "auto":
        if isinstance(gamma, bool) or not isinstance(gamma, (int, float)) or not gamma > 0:
            raise ConfigError("algorithm.gamma", f'expected "auto" or a positive number, got {gamma!r}')
        gamma = float(gamma)
    tau = alg.pop("tau_assumed", "auto")
    if tau != "auto":
        if isinstance(tau, bool) or not isinstance(tau, int) or tau < 0:
            raise ConfigError(
                "algorithm.tau_assumed", f'expected "auto" or a nonnegative integer, got {tau!r}'
            )
        if tau > topology.m:
            raise ConfigError(
                "algorithm.tau_assumed",
                f"staleness bound {tau} exceeds the node count {topology.m}; the "
                "step-size rule is only valid when staleness is at most the "
                "number of blocks",
            )
    batch = alg.pop("batch", 10)
    if batch not in ("auto", "exact"):
        if isinstance(batch, bool) or not isinstance(batch, int) or batch < 1:
            raise ConfigError(
                "algorithm.batch", f'expected "auto", "exact", or a positive integer, got {batch!r}'
            )
    algorithm = AlgorithmBlock(
        variant=_take(alg, "algorithm", "variant", "a2dwb", str),
        gamma=gamma,
        tau_assumed=tau,
        batch=batch,
        batch_epsilon=_take(alg, "algorithm", "batch_epsilon", 0.1, float),
    )
    _reject_unknown(alg, "algorithm")
    if algorithm.variant not in VARIANTS:
        raise ConfigError(
            "algorithm.variant",
            f"unknown variant {algorithm.variant!r}, expected one of {VARIANTS}",
        )
    if not algorithm.batch_epsilon > 0:
        raise ConfigError(
            "algorithm.batch_epsilon", f"must be positive, got {algorithm.batch_epsilon}"
        )
    if algorithm.batch == "exact":
        if problem.preset == "gaussian":
            raise ConfigError(
                "algorithm.batch",
                "exact gradients need atomic measures; the gaussian preset is continuous",
            )
        if problem.preset == "quadratic" and problem.noise_std > 0:
            raise ConfigError(
                "algorithm.batch", "exact gradients conflict with problem.noise_std > 0"
            )

    sim_d = _block(d, "sim")
    act_d = _block(sim_d, "activation")
    activation = ActivationBlock(
        mode=_take(act_d, "sim.activation", "mode", "permutation", str),
        interval_s=_take(act_d, "sim.activation", "interval_s", 0.2, float),
    )
    _reject_unknown(act_d, "sim.activation")
    if activation.mode not in ("permutation", "random"):
        raise ConfigError("sim.activation.mode", f"unknown mode {activation.mode!r}")
    if not activation.interval_s > 0:
        raise ConfigError(
            "sim.activation.interval_s", f"must be positive, got {activation.interval_s}"
        )
    delay_d = _block(sim_d, "delay")
    support = delay_d.pop("support", (0.2, 0.4, 0.6, 0.8, 1.0))
    probs = delay_d.pop("probs", None)
    _reject_unknown(delay_d, "sim.delay")
    try:
        comm = CommModel(
            support=tuple(support), probs=None if probs is None else tuple(probs)
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError("sim.delay", str(exc)) from exc
    sim = SimBlock(
        horizon_s=_take(sim_d, "sim", "horizon_s", 200.0, float),
        activation=activation,
        # a missing probs field stays None so serialization round-trips
        delay=DelayBlock(support=comm.support, probs=None if probs is None else comm.probs),
        master_seed=_take(sim_d, "sim", "master_seed", 0, int),
    )
    _reject_unknown(sim_d, "sim")
    if sim.horizon_s < 0:
        raise ConfigError("sim.horizon_s", f"must be nonnegative, got {sim.horizon_s}")
    if sim.master_seed < 0:
        raise ConfigError("sim.master_seed", "seed must be nonnegative")

    ev = _block(d, "eval")
    eval_block = EvalBlock(
        eval_every_s=_take(ev, "eval", "eval_every_s", 2.0, float),
        eval_samples=_take(ev, "eval", "eval_samples", 200, int),
        eval_seed=_take(ev, "eval", "eval_seed", 0, int),
    )
    _reject_unknown(ev, "eval")
    if not eval_block.eval_every_s > 0:
        raise ConfigError(
            "eval.eval_every_s", f"must be positive, got {eval_block.eval_every_s}"
        )
    if eval_block.eval_samples < 1:
        raise ConfigError(
            "eval.eval_samples", f"must be at least 1, got {eval_block.eval_samples}"
        )
    if eval_block.eval_seed < 0:
        raise ConfigError("eval.eval_seed", "seed must be nonnegative")

    _reject_unknown(d, "config")
    return RunConfig(
        topology=topology, problem=problem, algorithm=algorithm, sim=sim, eval=eval_block
    )


def config_to_dict(config: RunConfig) -> dict:
    """Nested JSON-ready dict; inverse of config_from_dict on valid input."""
    return {
        "topology": {
            "kind": config.topology.kind,
            "m": config.topology.m,
            "er_edge_prob": config.topology.er_edge_prob,
            "seed": config.topology.seed,
        },
        "problem": {
            "preset": config.problem.preset,
            "beta": config.problem.beta,
            "n": config.problem.n,
            "preset_seed": config.problem.preset_seed,
            "mu_strong": config.problem.mu_strong,
            "b_scale": config.problem.b_scale,
            "noise_std": config.problem.noise_std,
            "manifest": config.problem.manifest,
        },
        "algorithm": {
            "variant": config.algorithm.variant,
            "gamma": config.algorithm.gamma,
            "tau_assumed": config.algorithm.tau_assumed,
            "batch": config.algorithm.batch,
            "batch_epsilon": config.algorithm.batch_epsilon,
        },
        "sim": {
            "horizon_s": config.sim.horizon_s,
            "activation": {
                "mode": config.sim.activation.mode,
                "interval_s": config.sim.activation.interval_s,
            },
            "delay": {
                "support": list(config.sim.delay.support),
                "probs": None if config.sim.delay.probs is None else list(config.sim.delay.probs),
            },
            "master_seed": config.sim.master_seed,
        },
        "eval": {
            "eval_every_s": config.eval.eval_every_s,
            "eval_samples": config.eval.eval_samples,
            "eval_seed": config.eval.eval_seed,
        },
    }


def load_config(path) -> RunConfig:
    with open(path) as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from exc
    return config_from_dict(raw)


def save_config(config: RunConfig, path) -> None:
    with open(path, "w") as f:
        json.dump(config_to_dict(config), f, indent=2)
        f.write("\n")


@dataclass
class ResolvedRun:
    """A validated config turned into runnable objects."""

    config: RunConfig
    graph: Graph
    problem: object
    comm: CommModel
    gamma: float
    batch_fn: object
    smoothness: float
    tau: int


def resolve(config: RunConfig) -> ResolvedRun:
    """Build the graph and problem, and fix gamma, staleness, and batch size."""
    graph = build_topology(config.topology)
    lam = lambda_max(laplacian(graph))
    m = graph.m
    p = config.problem
    exact = config.algorithm.batch == "exact"

    if p.preset == "gaussian":
        preset = gaussian_preset(m, p.n, p.preset_seed)
        problem = BarycenterProblem(
            grid=preset.grid,
            measures=preset.measures,
            beta=p.beta,
            eval_samples=config.eval.eval_samples,
            eval_seed=config.eval.eval_seed,
        )
        smoothness = lam / p.beta
    elif p.preset == "quadratic":
        qp = quadratic_preset(graph, p.n, p.mu_strong, p.preset_seed, p.b_scale)
        problem = QuadraticNetworkProblem(prob=qp, noise_std=p.noise_std)
        smoothness = lam / p.mu_strong
    else:
        grid, measures, _digit = read_manifest(p.manifest)
        if len(measures) != m:
            raise ConfigError(
                "problem.manifest",
                f"manifest holds {len(measures)} measures for {m} nodes",
            )
        problem = BarycenterProblem(
            grid=grid,
            measures=measures,
            beta=p.beta,
            eval_samples=config.eval.eval_samples,
            eval_seed=config.eval.eval_seed,
            exact_gradients=exact,
        )
        smoothness = lam / p.beta

    comm = CommModel(support=config.sim.delay.support, probs=config.sim.delay.probs)
    tau = config.algorithm.tau_assumed
    if tau == "auto":
        # physically induced staleness, capped so the step-size rule applies
        induced = math.ceil(comm.max_delay / config.sim.activation.interval_s) + m
        tau = min(m, induced)
    gamma = config.algorithm.gamma
    if gamma == "auto":
        gamma = step_size(smoothness, tau, m)

    batch = config.algorithm.batch
    if batch == "auto":
        eps = config.algorithm.batch_epsilon
        batch_fn = lambda k: batch_size(k, m, sigma2=lam, epsilon=eps, L=smoothness)
    elif batch == "exact":
        batch_fn = lambda k: 1
    else:
        batch_fn = lambda k: batch

    return ResolvedRun(
        config=config,
        graph=graph,
        problem=problem,
        comm=comm,
        gamma=float(gamma),
        batch_fn=batch_fn,
        smoothness=smoothness,
        tau=tau,
    )


def execute(config: RunConfig) -> Trace:
    """Resolve and simulate one run, returning its snapshot trace."""
    r = resolve(config)
    snapshots, _eta, _stats = run_sim(
        problem=r.problem,
        graph=r.graph,
        variant=config.algorithm.variant,
        horizon_s=config.sim.horizon_s,
        gamma=r.gamma,
        batch_fn=r.batch_fn,
        master_seed=config.sim.master_seed,
        activation_mode=config.sim.activation.mode,
        interval_s=config.sim.activation.interval_s,
        comm=r.comm,
        eval_every_s=config.eval.eval_every_s,
    )
    return trace_from_snapshots(
        snapshots,
        algorithm=config.algorithm.variant,
        topology=config.topology.kind,
        seed=config.sim.master_seed,
    )
