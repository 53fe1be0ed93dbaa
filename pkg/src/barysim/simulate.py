"""Deterministic virtual-clock simulation of asynchronous decentralized descent.

Three variants run over a delayed-message network of m nodes:

  a2dwb          block updates on activation, stale neighbor gradients
                 recompensated with the current momentum coefficient
  a2dwbn         same, except each node keeps the momentum coefficient of its
                 last own update (no recompensation)
  sync_baseline  barrier rounds in which every node updates with the same
                 coefficient, each round as long as its slowest message

All randomness (activation order, per-message delays, gradient batches) comes
from keyed streams, so a run is a pure function of its configuration.

A problem object supplies:
    n                block dimension
    local_gradient(i, eta_bar_i, M, rng) -> (n,) broadcastable local quantity
    eval_objective(eta_bar) -> float       dual objective at an (m, n) state
    eval_primals(eta_bar) -> (m, n)        per-node primal estimates
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .graphs import Graph, consensus_quadratic
from .optim import ThetaSchedule
from .rng import Purpose, stream

__all__ = [
    "VARIANTS",
    "CommModel",
    "ActivationSchedule",
    "build_schedule",
    "sample_delay",
    "NodeState",
    "Snapshot",
    "SimStats",
    "run_sim",
]

VARIANTS = ("a2dwb", "a2dwbn", "sync_baseline")

_TIME_EPS = 1e-9
_ACTIVATE, _DELIVER = 0, 1


@dataclass(frozen=True)
class CommModel:
    """Categorical per-message delay law.

    Attributes:
        support: positive delay values in seconds.
        probs: matching probabilities summing to 1.
    """

    support: tuple = (0.2, 0.4, 0.6, 0.8, 1.0)
    probs: Optional[tuple] = None

    def __post_init__(self):
        support = tuple(float(s) for s in self.support)
        if not support or any(s <= 0 for s in support):
            raise ValueError("delay support must be positive and nonempty")
        probs = self.probs
        if probs is None:
            probs = tuple(1.0 / len(support) for _ in support)
        else:
            probs = tuple(float(p) for p in probs)
            if len(probs) != len(support):
                raise ValueError("delay probs and support lengths differ")
            if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
                raise ValueError("delay probs must be nonnegative and sum to 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_cum", np.cumsum(probs))

    @property
    def max_delay(self) -> float:
        return max(self.support)


def sample_delay(comm: CommModel, seed: int, *key: int) -> float:
    """One keyed draw from the delay law; identical keys replay identically."""
    u = stream(seed, Purpose.DELAY, *key).random()
    idx = int(np.searchsorted(comm._cum, u, side="right"))
    return comm.support[min(idx, len(comm.support) - 1)]


@dataclass(frozen=True)
class ActivationSchedule:
    """Precomputed activation stream.

    Attributes:
        events: tuple of (time, node) pairs with strictly increasing times.
    """

    mode: str
    interval_s: float
    events: tuple


def build_schedule(
    mode: str, m: int, interval_s: float, horizon_s: float, seed: int
) -> ActivationSchedule:
    """Activations at t = interval, 2*interval, ... up to the horizon.

    Permutation mode emits a freshly seeded permutation of all m nodes per
    sweep; random mode draws each node uniformly.
    """
    if mode not in ("permutation", "random"):
        raise ValueError(f"unknown activation mode {mode!r}")
    if not interval_s > 0:
        raise ValueError(f"activation interval must be positive, got {interval_s}")
    if horizon_s < 0:
        raise ValueError(f"horizon must be nonnegative, got {horizon_s}")
    count = int(np.floor(horizon_s / interval_s + _TIME_EPS))
    if mode == "random":
        nodes = stream(seed, Purpose.ACTIVATION).integers(0, m, size=count)
    else:
        sweeps = -(-count // m) if count else 0
        perms = [stream(seed, Purpose.ACTIVATION, s).permutation(m) for s in range(sweeps)]
        nodes = np.concatenate(perms)[:count] if sweeps else np.empty(0, dtype=int)
    events = tuple(((k + 1) * interval_s, int(nodes[k])) for k in range(count))
    return ActivationSchedule(mode=mode, interval_s=interval_s, events=events)


@dataclass
class NodeState:
    """Per-node runtime state.

    Attributes:
        u_bar, v_bar: the node's practical iterate pair.
        neighbor_grads: neighbor id -> (gradient, send time); one entry per
            neighbor, overwritten only by strictly newer sends.
        own_last_gradient: most recent locally computed gradient.
        own_theta2: squared momentum coefficient at the last own update
            (consulted by the naive variant only).
        local_iteration_count: how many times this node has been activated.
    """

    u_bar: np.ndarray
    v_bar: np.ndarray
    neighbor_grads: dict
    own_last_gradient: np.ndarray
    own_theta2: float
    local_iteration_count: int = 0


@dataclass(frozen=True)
class Snapshot:
    """One evaluation row on the virtual clock."""

    t: float
    iters_done: int
    objective: float
    consensus: float


@dataclass
class SimStats:
    """Diagnostics accumulated during a run."""

    max_table_age_s: float = 0.0
    activations: int = 0
    rounds: int = 0


def _eta_bar(nodes: list, theta2: float) -> np.ndarray:
    return np.stack([node.u_bar + theta2 * node.v_bar for node in nodes])


def run_sim(
    problem,
    graph: Graph,
    variant: str,
    horizon_s: float,
    gamma: float,
    batch_fn: Callable[[int], int],
    master_seed: int,
    activation_mode: str = "permutation",
    interval_s: float = 0.2,
    comm: Optional[CommModel] = None,
    eval_every_s: float = 2.0,
) -> tuple:
    """Run one variant to the horizon; returns (snapshots, eta_bar, stats).

    Snapshots are taken at t = 0 and every eval_every_s of virtual time,
    reflecting all events with timestamps up to the snapshot time. Reruns
    with identical arguments reproduce the trajectory exactly.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if horizon_s < 0:
        raise ValueError(f"horizon must be nonnegative, got {horizon_s}")
    comm = comm or CommModel()
    if variant == "sync_baseline":
        return _run_sync(
            problem, graph, horizon_s, gamma, batch_fn, master_seed, comm, eval_every_s
        )
    return _run_async(
        problem,
        graph,
        variant,
        horizon_s,
        gamma,
        batch_fn,
        master_seed,
        activation_mode,
        interval_s,
        comm,
        eval_every_s,
    )


def _grad_stream(master_seed: int, node: int, k: int):
    # iteration key is offset by one so the initial exchange owns index 0
    return stream(master_seed, Purpose.GRADIENT, node, k + 1)


def _snapshot(problem, graph, t, iters, nodes, theta2) -> Snapshot:
    eta_bar = _eta_bar(nodes, theta2)
    return Snapshot(
        t=t,
        iters_done=iters,
        objective=problem.eval_objective(eta_bar),
        consensus=consensus_quadratic(graph, problem.eval_primals(eta_bar)),
    )


def _run_async(
    problem,
    graph,
    variant,
    horizon_s,
    gamma,
    batch_fn,
    master_seed,
    activation_mode,
    interval_s,
    comm,
    eval_every_s,
):
    m = graph.m
    n = problem.n
    thetas = ThetaSchedule(m)
    zeros = np.zeros(n)

    # initial exchange: every node evaluates at the zero state and the result
    # is already in every neighbor table at t = 0
    init_grads = [
        problem.local_gradient(i, zeros, batch_fn(0), _grad_stream(master_seed, i, -1))
        for i in range(m)
    ]
    nodes = [
        NodeState(
            u_bar=zeros.copy(),
            v_bar=zeros.copy(),
            neighbor_grads={j: (init_grads[j].copy(), 0.0) for j in graph.adjacency[i]},
            own_last_gradient=init_grads[i].copy(),
            own_theta2=thetas.value(1) ** 2,
        )
        for i in range(m)
    ]

    schedule = build_schedule(activation_mode, m, interval_s, horizon_s, master_seed)
    queue = []
    seq = 0
    for k, (t, node) in enumerate(schedule.events):
        heapq.heappush(queue, (t, _ACTIVATE, node, seq, k))
        seq += 1

    marks = _eval_marks(horizon_s, eval_every_s)
    snapshots = []
    stats = SimStats()
    iters_done = 0
    mark_pos = 0

    def flush_marks(up_to: float):
        nonlocal mark_pos
        theta2 = thetas.value(max(iters_done, 1)) ** 2
        while mark_pos < len(marks) and marks[mark_pos] <= up_to + _TIME_EPS:
            snapshots.append(
                _snapshot(problem, graph, marks[mark_pos], iters_done, nodes, theta2)
            )
            mark_pos += 1

    snapshots.append(_snapshot(problem, graph, 0.0, 0, nodes, thetas.value(1) ** 2))

    while queue:
        t, kind, who, _, payload = heapq.heappop(queue)
        if t > horizon_s + _TIME_EPS:
            break
        flush_marks(t - 2 * _TIME_EPS)
        if kind == _DELIVER:
            sender, grad, send_t = payload
            stored_grad, stored_t = nodes[who].neighbor_grads[sender]
            if send_t > stored_t:
                nodes[who].neighbor_grads[sender] = (grad, send_t)
            continue
        # activation of node `who` at global iteration k = payload
        k = payload
        theta = thetas.value(k + 1)
        node = nodes[who]
        theta2 = theta**2 if variant == "a2dwb" else node.own_theta2
        omega_bar = node.u_bar + theta2 * node.v_bar
        g = problem.local_gradient(
            who, omega_bar, batch_fn(k), _grad_stream(master_seed, who, k)
        )
        for j in graph.adjacency[who]:
            delay = sample_delay(comm, master_seed, k, who, j)
            heapq.heappush(queue, (t + delay, _DELIVER, j, seq, (who, g, t)))
            seq += 1
        combined = len(graph.adjacency[who]) * g
        for j in graph.adjacency[who]:
            stored_grad, stored_t = node.neighbor_grads[j]
            stats.max_table_age_s = max(stats.max_table_age_s, t - stored_t)
            combined = combined - stored_grad
        delta = (gamma / (m * theta)) * combined
        node.u_bar = node.u_bar - delta
        node.v_bar = node.v_bar + (1.0 - m * theta) / theta**2 * delta
        node.own_last_gradient = g
        node.own_theta2 = theta**2
        node.local_iteration_count += 1
        iters_done = k + 1
        stats.activations += 1

    flush_marks(horizon_s)
    eta_bar = _eta_bar(nodes, thetas.value(max(iters_done, 1)) ** 2)
    return snapshots, eta_bar, stats


def _run_sync(
    problem, graph, horizon_s, gamma, batch_fn, master_seed, comm, eval_every_s
):
    m = graph.m
    n = problem.n
    thetas = ThetaSchedule(m)
    u = np.zeros((m, n))
    v = np.zeros((m, n))
    marks = _eval_marks(horizon_s, eval_every_s)
    snapshots = []
    stats = SimStats()
    rounds_done = 0
    mark_pos = 0

    def flush_marks(up_to: float):
        nonlocal mark_pos
        theta2 = thetas.value(max(rounds_done, 1)) ** 2
        eta_bar = u + theta2 * v
        while mark_pos < len(marks) and marks[mark_pos] <= up_to + _TIME_EPS:
            snapshots.append(
                Snapshot(
                    t=marks[mark_pos],
                    iters_done=rounds_done,
                    objective=problem.eval_objective(eta_bar),
                    consensus=consensus_quadratic(graph, problem.eval_primals(eta_bar)),
                )
            )
            mark_pos += 1

    snapshots.append(
        Snapshot(
            t=0.0,
            iters_done=0,
            objective=problem.eval_objective(u),
            consensus=consensus_quadratic(graph, problem.eval_primals(u)),
        )
    )

    t = 0.0
    r = 0
    while True:
        theta = thetas.value(r + 1)
        # every node evaluates at its extrapolated state, then the barrier
        # holds the round open until the slowest message lands
        grads = np.stack(
            [
                problem.local_gradient(
                    i,
                    u[i] + theta**2 * v[i],
                    batch_fn(r),
                    _grad_stream(master_seed, i, r),
                )
                for i in range(m)
            ]
        )
        duration = 0.0
        for i in range(m):
            for j in graph.adjacency[i]:
                duration = max(duration, sample_delay(comm, master_seed, r, i, j))
        if duration == 0.0:
            # no edges, nothing to exchange: the barrier never lifts
            break
        end_t = t + duration
        if end_t > horizon_s + _TIME_EPS:
            break
        flush_marks(end_t - 2 * _TIME_EPS)
        degrees = graph.degrees
        for i in range(m):
            combined = degrees[i] * grads[i]
            for j in graph.adjacency[i]:
                combined = combined - grads[j]
            delta = (gamma / (m * theta)) * combined
            u[i] = u[i] - delta
            v[i] = v[i] + (1.0 - m * theta) / theta**2 * delta
        r += 1
        rounds_done = r
        stats.rounds = r
        t = end_t

    flush_marks(horizon_s)
    eta_bar = u + thetas.value(max(rounds_done, 1)) ** 2 * v
    return snapshots, eta_bar, stats


def _eval_marks(horizon_s: float, eval_every_s: float) -> list:
    if not eval_every_s > 0:
        raise ValueError(f"evaluation cadence must be positive, got {eval_every_s}")
    marks = []
    j = 1
    while j * eval_every_s <= horizon_s + _TIME_EPS:
        marks.append(j * eval_every_s)
        j += 1
    return marks
