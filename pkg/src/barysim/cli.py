"""Command-line entry point: run simulations, self-check, emit presets.

Subcommands:
    run            simulate one configured run and write its CSV trace
    diagnostics    run the built-in invariant suites, pass/fail per suite
    preset         write a filled config file for a named problem family
    mnist-prepare  turn IDX image data into a per-node measure manifest
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys

import numpy as np

from .config import (
    ConfigError,
    ProblemBlock,
    RunConfig,
    execute,
    load_config,
    save_config,
)
from .experiments import emit_csv, quadratic_preset
from .graphs import TopologySpec, build_topology, consensus_quadratic, laplacian, lambda_max, sqrt_laplacian
from .mnist import (
    image_to_measure,
    parse_idx_images,
    parse_idx_labels,
    synthetic_digit_idx,
    write_manifest,
)
from .optim import (
    DelaySchedule,
    QuadraticOracle,
    quadratic_dual_eval,
    run_asbcds,
    run_pasbcds,
    theta_next,
)
from .rng import Purpose, stream
from .simulate import VARIANTS
from .transport import DiscreteMeasure, exact_dual, grid_1d, stochastic_grad

__all__ = ["main", "run_diagnostics"]

_CONFIG_FIELDS_HELP = """\
config file fields (JSON):
  topology:   kind (complete|cycle|star|erdos_renyi), m, er_edge_prob, seed
  problem:    preset (gaussian|quadratic|mnist), beta, n, preset_seed,
              mu_strong, b_scale, noise_std, manifest
  algorithm:  variant (a2dwb|a2dwbn|sync_baseline), gamma ("auto" or number),
              tau_assumed ("auto" or integer <= m), batch ("auto", "exact",
              or integer), batch_epsilon
  sim:        horizon_s, activation {mode, interval_s},
              delay {support, probs}, master_seed
  eval:       eval_every_s, eval_samples, eval_seed
"""


def _random_discrete(rng, n_atoms: int, d: int = 1) -> DiscreteMeasure:
    w = rng.random(n_atoms)
    return DiscreteMeasure(atoms=rng.normal(0.0, 1.5, size=(n_atoms, d)), weights=w / w.sum())


def _suite_momentum(theta_fn) -> tuple:
    for m in (1, 2, 10):
        th = 1.0 / m
        for k in range(1, 2001):
            lo, hi = 1.0 / (k - 1 + 2 * m), 2.0 / (k - 1 + 2 * m)
            if not (lo - 1e-10 <= th <= hi + 1e-10):
                return False, f"coefficient {th} outside [{lo}, {hi}] at m={m}, k={k}"
            nxt = theta_fn(th)
            lhs, rhs = (1.0 - nxt) / nxt**2, 1.0 / th**2
            if abs(lhs - rhs) > 1e-10 * abs(rhs):
                return False, f"recursion identity off by {abs(lhs - rhs) / rhs:.2e} at m={m}, k={k}"
            th = nxt
    return True, "bounds and recursion identity hold for m in {1,2,10}, k <= 2000"


def _suite_equivalence() -> tuple:
    m, n, K = 6, 3, 120
    graph = build_topology(TopologySpec(kind="cycle", m=m, seed=0))
    prob = quadratic_preset(graph, n, mu_strong=1.0, seed=5)
    oracle = QuadraticOracle(prob, noise_std=0.3, seed=5)
    delays = DelaySchedule(tau=2, m=m, K=K, seed=7)
    ref = run_asbcds(oracle, m, n, K, 0.01, delays, block_seed=3, keep_history=True)
    prac = run_pasbcds(oracle, m, n, K, 0.01, delays, block_seed=3, keep_history=True)
    dev = 0.0
    for a, b in zip(ref.etas, prac.etas):
        scale = max(1.0, float(np.abs(a).max()))
        dev = max(dev, float(np.abs(a - b).max()) / scale)
    ok = dev <= 1e-9
    return ok, f"max relative trajectory deviation {dev:.2e} (tolerance 1e-9)"


def _suite_gradient(seed: int = 11) -> tuple:
    rng = stream(seed, Purpose.ORACLE_NOISE)
    worst = 0.0
    for _ in range(3):
        n = int(rng.integers(3, 6))
        grid = grid_1d(-2.0, 2.0, n)
        mu = _random_discrete(rng, int(rng.integers(3, 7)))
        eta = rng.normal(0.0, 1.0, size=n)
        _, grad = exact_dual(mu, grid, eta, beta=0.7)
        h = 1e-5
        for l in range(n):
            e = np.zeros(n)
            e[l] = h
            vp, _ = exact_dual(mu, grid, eta + e, beta=0.7)
            vm, _ = exact_dual(mu, grid, eta - e, beta=0.7)
            fd = (vp - vm) / (2 * h)
            worst = max(worst, abs(fd - grad[l]) / max(1.0, abs(grad[l])))
    if worst > 1e-6:
        return False, f"finite-difference mismatch {worst:.2e} (tolerance 1e-6)"
    # unbiasedness: batched sample mean against the closed form
    grid = grid_1d(-2.0, 2.0, 4)
    mu = _random_discrete(rng, 5)
    eta = rng.normal(0.0, 1.0, size=4)
    _, grad = exact_dual(mu, grid, eta, beta=0.7)
    M = 20000
    sample = stochastic_grad(mu, grid, eta, 0.7, M, stream(seed, Purpose.GRADIENT))
    se = 1.0 / math.sqrt(M)  # simplex coordinates have variance < 1
    gap = float(np.abs(sample.mean_gradient - grad).max())
    ok = gap <= 4 * se
    return ok, f"finite differences within {worst:.2e}; sample mean within {gap:.2e} of exact"


def _suite_noise_bound(seed: int = 13) -> tuple:
    m, M, trials = 5, 4, 1500
    graph = build_topology(TopologySpec(kind="complete", m=m, seed=0))
    L = laplacian(graph)
    lam, S = lambda_max(L), sqrt_laplacian(L)
    rng = stream(seed, Purpose.ORACLE_NOISE)
    grid = grid_1d(-2.0, 2.0, 4)
    measures = [_random_discrete(rng, 6) for _ in range(m)]
    eta = rng.normal(0.0, 0.5, size=(m, 4))
    exact = np.stack([exact_dual(measures[i], grid, eta[i], 1.0)[1] for i in range(m)])
    total = 0.0
    for t in range(trials):
        g = np.stack(
            [
                stochastic_grad(
                    measures[i], grid, eta[i], 1.0, M, stream(seed, Purpose.GRADIENT, t, i)
                ).mean_gradient
                for i in range(m)
            ]
        )
        total += float(((S @ (g - exact)) ** 2).sum())
    mean_sq = total / trials
    bound = 1.2 * float(lam) / M
    ok = mean_sq <= bound
    return ok, f"noise energy {mean_sq:.4f} vs bound {bound:.4f} (M={M})"


def _suite_gap_bounds(seed: int = 17) -> tuple:
    rng = stream(seed, Purpose.ORACLE_NOISE)
    for trial in range(20):
        m = int(rng.integers(2, 8))
        graph = build_topology(TopologySpec(kind="cycle", m=m, seed=0))
        prob = quadratic_preset(graph, n=3, mu_strong=1.0, seed=int(rng.integers(1000)), centered=False)
        eta = rng.normal(0.0, 1.0, size=(m, 3))
        phi, _, x = quadratic_dual_eval(prob, eta)
        gap = phi - prob.phi_star()
        dist = float(((x - prob.x_star()) ** 2).sum())
        cons = consensus_quadratic(graph, x)
        if dist > (2.0 / prob.mu_strong) * gap + 1e-9:
            return False, f"primal distance bound violated on trial {trial}"
        if cons > (2.0 * prob.lam_max / prob.mu_strong) * gap + 1e-9:
            return False, f"consensus bound violated on trial {trial}"
    return True, "primal-distance and consensus bounds hold on 20 random instances"


def run_diagnostics(theta_fn=None) -> list:
    """Run every suite; returns (name, passed, detail) triples."""
    theta_fn = theta_fn or theta_next
    suites = [
        ("momentum-schedule", lambda: _suite_momentum(theta_fn)),
        ("descent-form-equivalence", _suite_equivalence),
        ("gradient-oracle", _suite_gradient),
        ("gradient-noise-bound", _suite_noise_bound),
        ("gap-bounds", _suite_gap_bounds),
    ]
    results = []
    for name, fn in suites:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
    return results


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = dataclasses.replace(
                config, sim=dataclasses.replace(config.sim, master_seed=args.seed)
            )
        if args.variant is not None:
            config = dataclasses.replace(
                config, algorithm=dataclasses.replace(config.algorithm, variant=args.variant)
            )
        if args.horizon is not None:
            if args.horizon < 0:
                raise ConfigError("sim.horizon_s", f"must be nonnegative, got {args.horizon}")
            config = dataclasses.replace(
                config, sim=dataclasses.replace(config.sim, horizon_s=args.horizon)
            )
        trace = execute(config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    emit_csv(trace, args.out)
    last = trace.rows[-1]
    print(f"wrote {len(trace.rows)} rows to {args.out}")
    print(
        f"final dual_objective={last.dual_objective:.17g} "
        f"consensus_distance={last.consensus_distance:.17g}"
    )
    return 0


def cmd_diagnostics(args) -> int:
    results = run_diagnostics()
    failed = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += 0 if ok else 1
    if failed:
        print(f"{failed} of {len(results)} suites failed", file=sys.stderr)
        return 1
    return 0


def cmd_preset(args) -> int:
    if args.kind == "gaussian":
        config = RunConfig()
    elif args.kind == "quadratic":
        config = RunConfig(
            topology=TopologySpec(kind="cycle", m=8, seed=0),
            problem=ProblemBlock(preset="quadratic", n=4),
        )
    else:
        config = RunConfig(
            topology=TopologySpec(kind="cycle", m=10, seed=0),
            problem=ProblemBlock(preset="mnist", beta=0.01, n=784, manifest="manifest.json"),
        )
    save_config(config, args.out)
    print(f"wrote {args.kind} config to {args.out}")
    return 0


def cmd_mnist_prepare(args) -> int:
    try:
        if args.synthetic:
            image_bytes, label_bytes = synthetic_digit_idx(args.pool, args.seed)
        else:
            if not args.images or not args.labels:
                print("error: need --images and --labels unless --synthetic", file=sys.stderr)
                return 2
            with open(args.images, "rb") as f:
                image_bytes = f.read()
            with open(args.labels, "rb") as f:
                label_bytes = f.read()
        images = parse_idx_images(image_bytes)
        labels = parse_idx_labels(label_bytes)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if len(labels) != images.count:
        print(f"error: {images.count} images but {len(labels)} labels", file=sys.stderr)
        return 2
    candidates = np.flatnonzero(labels == args.digit)
    if len(candidates) < args.m:
        print(
            f"error: only {len(candidates)} images of digit {args.digit}, need {args.m}",
            file=sys.stderr,
        )
        return 2
    rng = stream(args.seed, Purpose.PRESET, args.digit)
    chosen = rng.choice(candidates, size=args.m, replace=False)
    measures = [image_to_measure(images.pixels[int(i)]) for i in chosen]
    write_manifest(args.out, measures, args.digit, images.rows, images.cols)
    print(f"wrote {args.m} digit-{args.digit} measures to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="barysim",
        description="Decentralized entropy-regularized barycenter simulator.",
        epilog=_CONFIG_FIELDS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser(
        "run",
        help="simulate one configured run and write its CSV trace",
        epilog=_CONFIG_FIELDS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p_run.add_argument("--config", required=True, help="JSON run configuration path")
    p_run.add_argument("--out", default="trace.csv", help="CSV trace output path")
    p_run.add_argument("--seed", type=int, default=None, help="override sim.master_seed")
    p_run.add_argument(
        "--variant", choices=VARIANTS, default=None, help="override algorithm.variant"
    )
    p_run.add_argument(
        "--horizon", type=float, default=None, help="override sim.horizon_s (virtual seconds)"
    )
    p_run.set_defaults(func=cmd_run)

    p_diag = sub.add_parser("diagnostics", help="run the built-in invariant suites")
    p_diag.set_defaults(func=cmd_diagnostics)

    p_preset = sub.add_parser("preset", help="write a filled config for a problem family")
    p_preset.add_argument(
        "--kind", required=True, choices=("gaussian", "quadratic", "mnist"),
        help="problem family to configure",
    )
    p_preset.add_argument("--out", required=True, help="where to write the JSON config")
    p_preset.set_defaults(func=cmd_preset)

    p_mnist = sub.add_parser(
        "mnist-prepare", help="build a per-node measure manifest from IDX data"
    )
    p_mnist.add_argument("--images", help="IDX image file path")
    p_mnist.add_argument("--labels", help="IDX label file path")
    p_mnist.add_argument(
        "--synthetic", action="store_true",
        help="generate deterministic synthetic digits instead of reading files",
    )
    p_mnist.add_argument("--digit", type=int, required=True, choices=range(10), help="digit to select")
    p_mnist.add_argument("--m", type=int, default=10, help="measures (nodes) to emit")
    p_mnist.add_argument("--pool", type=int, default=200, help="synthetic pool size")
    p_mnist.add_argument("--seed", type=int, default=0, help="selection / synthesis seed")
    p_mnist.add_argument("--out", required=True, help="manifest output path")
    p_mnist.set_defaults(func=cmd_mnist_prepare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
