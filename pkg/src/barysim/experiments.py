"""Experiment presets, evaluation metrics, and trace recording.

Presets pin down reproducible problem instances; adapters wrap them in the
interface the simulator consumes; traces collect snapshot rows and serialize
to CSV with round-trip-exact number formatting.

Evaluation uses common random numbers: one keyed uniform base draw is mapped
through every node's inverse CDF, so objective curves are comparable across
variants, nodes, and snapshots.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graphs import Graph, consensus_quadratic
from .optim import QuadraticConsensusProblem
from .rng import Purpose, stream
from .transport import (
    DiscreteMeasure,
    Gaussian1D,
    Measure,
    SupportGrid,
    exact_dual,
    grid_1d,
    softmax_mean_at_points,
    stochastic_grad,
    value_at_points,
)

__all__ = [
    "TRACE_COLUMNS",
    "TraceRow",
    "Trace",
    "trace_from_snapshots",
    "emit_csv",
    "read_trace",
    "primal_estimate",
    "consensus_distance",
    "Preset",
    "gaussian_preset",
    "quadratic_preset",
    "BarycenterProblem",
    "QuadraticNetworkProblem",
]

TRACE_COLUMNS = (
    "virtual_time_s",
    "global_iter",
    "algorithm",
    "topology",
    "seed",
    "dual_objective",
    "consensus_distance",
)


@dataclass(frozen=True)
class TraceRow:
    virtual_time_s: float
    global_iter: int
    algorithm: str
    topology: str
    seed: int
    dual_objective: float
    consensus_distance: float


@dataclass(frozen=True)
class Trace:
    """Snapshot rows of one run, in virtual-time order."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        times = [r.virtual_time_s for r in rows]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("trace rows must be non-decreasing in virtual time")
        object.__setattr__(self, "rows", rows)


def trace_from_snapshots(snapshots, algorithm: str, topology: str, seed: int) -> Trace:
    return Trace(
        rows=tuple(
            TraceRow(
                virtual_time_s=s.t,
                global_iter=s.iters_done,
                algorithm=algorithm,
                topology=topology,
                seed=seed,
                dual_objective=s.objective,
                consensus_distance=s.consensus,
            )
            for s in snapshots
        )
    )


def emit_csv(trace: Trace, destination) -> None:
    """Write the trace with 17-significant-digit floats (round-trip exact)."""
    lines = [",".join(TRACE_COLUMNS)]
    for r in trace.rows:
        lines.append(
            f"{r.virtual_time_s:.17g},{r.global_iter},{r.algorithm},"
            f"{r.topology},{r.seed},{r.dual_objective:.17g},{r.consensus_distance:.17g}"
        )
    with open(destination, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def read_trace(path) -> Trace:
    """Parse a trace CSV, checking the header column by column."""
    with open(path, "r", newline="") as f:
        lines = [line.rstrip("\n").rstrip("\r") for line in f if line.strip()]
    if not lines:
        raise ValueError("trace file is empty, expected a header row")
    header = tuple(lines[0].split(","))
    for pos, (got, want) in enumerate(zip(header, TRACE_COLUMNS)):
        if got != want:
            raise ValueError(f"trace column {pos} is {got!r}, expected {want!r}")
    if len(header) != len(TRACE_COLUMNS):
        raise ValueError(
            f"trace has {len(header)} columns, expected {len(TRACE_COLUMNS)}"
        )
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append(
            TraceRow(
                virtual_time_s=float(parts[0]),
                global_iter=int(parts[1]),
                algorithm=parts[2],
                topology=parts[3],
                seed=int(parts[4]),
                dual_objective=float(parts[5]),
                consensus_distance=float(parts[6]),
            )
        )
    return Trace(rows=tuple(rows))


def _eval_base(M_eval: int, eval_seed: int) -> np.ndarray:
    # one shared uniform base for every node and snapshot of a run
    return stream(eval_seed, Purpose.EVAL).random(M_eval)


def primal_estimate(
    eta: np.ndarray,
    measure: Measure,
    grid: SupportGrid,
    beta: float,
    M_eval: int,
    eval_seed: int,
) -> np.ndarray:
    """Barycenter-weight estimate: mean softmax over M_eval common draws."""
    if M_eval < 1:
        raise ValueError(f"evaluation sample count must be >= 1, got {M_eval}")
    pts = measure.ppf(_eval_base(M_eval, eval_seed))
    return softmax_mean_at_points(grid, eta, beta, pts)


def consensus_distance(g: Graph, p: np.ndarray) -> float:
    """Edge-sum of squared per-node estimate differences; zero iff agreement."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    if p.shape[0] != g.m:
        raise ValueError(f"snapshot has {p.shape[0]} rows for {g.m} nodes")
    return consensus_quadratic(g, p)


@dataclass(frozen=True)
class Preset:
    """A named problem instance: fixed support plus one measure per node."""

    name: str
    grid: SupportGrid
    measures: tuple


def gaussian_preset(m: int, n: int, seed: int) -> Preset:
    """m Gaussian measures with seeded means in [-4, 4] and scales in
    [0.1, 0.6]; support is n points equally spaced on [-5, 5]."""
    if m < 2 or n < 2:
        raise ValueError(f"need m >= 2 and n >= 2, got m={m}, n={n}")
    rng = stream(seed, Purpose.PRESET)
    means = rng.uniform(-4.0, 4.0, size=m)
    stds = rng.uniform(0.1, 0.6, size=m)
    measures = tuple(Gaussian1D(mean=float(t), std=float(s)) for t, s in zip(means, stds))
    return Preset(name="gaussian", grid=grid_1d(-5.0, 5.0, n), measures=measures)


def quadratic_preset(
    graph: Graph, n: int, mu_strong: float, seed: int, b_scale: float = 1.0,
    centered: bool = True,
) -> QuadraticConsensusProblem:
    """Random quadratic instance on the given graph.

    Centered targets (the default) keep the closed-form optimum meaningful
    for states produced in the simulator's per-node coordinates, which only
    track offsets generated by Laplacian rows.
    """
    b = stream(seed, Purpose.PRESET).normal(0.0, b_scale, size=(graph.m, n))
    if centered:
        b = b - b.mean(axis=0, keepdims=True)
    return QuadraticConsensusProblem(graph=graph, mu_strong=mu_strong, b=b)


@dataclass
class BarycenterProblem:
    """Simulator adapter for the semi-discrete barycenter dual.

    Attributes:
        grid: shared barycenter support.
        measures: one measure per node.
        beta: entropy regularization strength.
        eval_samples: Monte-Carlo size per node for snapshot evaluation.
        eval_seed: key for the shared evaluation draws.
        exact_gradients: use the closed-form gradient instead of sampling
            (discrete measures only).
    """

    grid: SupportGrid
    measures: Sequence[Measure]
    beta: float
    eval_samples: int = 200
    eval_seed: int = 0
    exact_gradients: bool = False

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.eval_samples < 1:
            raise ValueError(
                f"evaluation sample count must be >= 1, got {self.eval_samples}"
            )
        self.measures = tuple(self.measures)
        all_discrete = all(isinstance(mu, DiscreteMeasure) for mu in self.measures)
        if self.exact_gradients and not all_discrete:
            raise ValueError("exact gradients need discrete measures on every node")
        # discrete measures are evaluated in closed form; continuous ones by
        # Monte Carlo on common draws
        self._exact_eval = all_discrete
        base = _eval_base(self.eval_samples, self.eval_seed)
        self._eval_pts = tuple(mu.ppf(base) for mu in self.measures)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def m(self) -> int:
        return len(self.measures)

    def local_gradient(self, i: int, eta: np.ndarray, M: int, rng) -> np.ndarray:
        if self.exact_gradients:
            _, grad = exact_dual(self.measures[i], self.grid, eta, self.beta)
            return grad
        return stochastic_grad(
            self.measures[i], self.grid, eta, self.beta, M, rng
        ).mean_gradient

    def eval_objective(self, eta_bar: np.ndarray) -> float:
        total = 0.0
        for i, mu in enumerate(self.measures):
            if self._exact_eval:
                value, _ = exact_dual(mu, self.grid, eta_bar[i], self.beta)
                total += value
            else:
                total += value_at_points(
                    self.grid, eta_bar[i], self.beta, self._eval_pts[i]
                )
        return total

    def eval_primals(self, eta_bar: np.ndarray) -> np.ndarray:
        rows = []
        for i, mu in enumerate(self.measures):
            if self._exact_eval:
                _, grad = exact_dual(mu, self.grid, eta_bar[i], self.beta)
                rows.append(grad)
            else:
                rows.append(
                    softmax_mean_at_points(
                        self.grid, eta_bar[i], self.beta, self._eval_pts[i]
                    )
                )
        return np.stack(rows)


@dataclass
class QuadraticNetworkProblem:
    """Simulator adapter for the quadratic diagnostic in per-node coordinates.

    The dual summand of node i is ||eta_i||^2/(2 mu) + <eta_i, b_i>, whose
    gradient b_i + eta_i/mu equals the node's primal estimate, so primal
    recovery and gradient evaluation coincide.
    """

    prob: QuadraticConsensusProblem
    noise_std: float = 0.0

    @property
    def n(self) -> int:
        return self.prob.n

    def local_gradient(self, i: int, eta: np.ndarray, M: int, rng) -> np.ndarray:
        g = self.prob.b[i] + eta / self.prob.mu_strong
        if self.noise_std > 0.0:
            g = g + self.noise_std * rng.standard_normal(self.n) / np.sqrt(M)
        return g

    def eval_objective(self, eta_bar: np.ndarray) -> float:
        sq = float((eta_bar**2).sum()) / (2.0 * self.prob.mu_strong)
        return sq + float((eta_bar * self.prob.b).sum())

    def eval_primals(self, eta_bar: np.ndarray) -> np.ndarray:
        return self.prob.b + eta_bar / self.prob.mu_strong
