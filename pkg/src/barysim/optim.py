"""Accelerated stale-gradient block coordinate descent.

Two trajectory-equivalent forms are implemented: a reference form that keeps
full iterate histories and rebuilds compensated stale iterates from them, and
a practical form that carries only a (u, v) pair per block plus the snapshots
a delay schedule can still read. The practical form is the production path;
the reference form exists so the equivalence can be tested.

Also here: the momentum schedule theta_k with theta_1 = 1/m, the step-size
and batch-size rules that keep the stale runs stable, delay schedules, and a
synthetic quadratic consensus problem with closed-form optimum used by the
diagnostics.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .graphs import Graph, consensus_quadratic, laplacian, lambda_max, sqrt_laplacian
from .rng import Purpose, stream

__all__ = [
    "ThetaSchedule",
    "theta_next",
    "step_size",
    "batch_size",
    "DelaySchedule",
    "AsbcdsState",
    "compensated_iterate",
    "PasbcdsState",
    "pasbcds_step",
    "run_asbcds",
    "run_pasbcds",
    "QuadraticConsensusProblem",
    "quadratic_dual_eval",
    "QuadraticOracle",
    "RunRecord",
]


def theta_next(theta_k: float) -> float:
    """Next momentum coefficient: the positive root of t^2 = (1-t)*theta_k^2.

    Satisfies (1 - t)/t^2 = 1/theta_k^2 exactly, which is what makes the
    per-iteration weights telescope.
    """
    if not 0.0 < theta_k <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta_k}")
    return (np.sqrt(theta_k**4 + 4.0 * theta_k**2) - theta_k**2) / 2.0


class ThetaSchedule:
    """Growable cache of theta_1, theta_2, ... with theta_1 = 1/m."""

    def __init__(self, m: int):
        if m < 1:
            raise ValueError(f"block count must be at least 1, got {m}")
        self.m = m
        self._cache = [1.0 / m]

    def value(self, k: int) -> float:
        """theta_k for k >= 1."""
        if k < 1:
            raise ValueError(f"theta index starts at 1, got {k}")
        while len(self._cache) < k:
            self._cache.append(theta_next(self._cache[-1]))
        return self._cache[k - 1]


def step_size(L: float, tau: int, m: int) -> float:
    """Largest learning rate meeting the stale-run stability condition.

    Solves 3*L*g + 12*L*g*((tau^2+tau)/m + 2*tau)^2 = 1. The condition is
    only available for tau <= m.
    """
    if not L > 0:
        raise ValueError(f"smoothness constant must be positive, got {L}")
    if m < 1:
        raise ValueError(f"block count must be at least 1, got {m}")
    if not 0 <= tau <= m:
        raise ValueError(
            f"the step-size rule assumes delay tau <= m, got tau={tau}, m={m}"
        )
    boost = ((tau**2 + tau) / m + 2.0 * tau) ** 2
    return 1.0 / (L * (3.0 + 12.0 * boost))


def batch_size(k: int, m: int, sigma2: float, epsilon: float, L: float) -> int:
    """Variance-matching batch schedule: ceil(8*sigma^2*(k+2m)/(m*L*eps)), >= 1."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not L > 0:
        raise ValueError(f"smoothness constant must be positive, got {L}")
    if sigma2 < 0:
        raise ValueError(f"variance must be nonnegative, got {sigma2}")
    return max(1, int(np.ceil(8.0 * sigma2 * (k + 2 * m) / (m * L * epsilon))))


class DelaySchedule:
    """Read indices j_p(k+1) for every block and iteration.

    j_p(k+1) is the index of the newest snapshot of block p visible when
    iterate k+1 is formed; j = k means fresh. Reads are drawn uniformly from
    the window [max(0, k+1-tau), k] (clamped so tau = 0 forces fresh reads)
    and repaired to be nondecreasing per block.
    """

    def __init__(self, tau: int, m: int, K: int, seed: int):
        if tau < 0:
            raise ValueError(f"delay bound must be nonnegative, got {tau}")
        self.tau = tau
        self.m = m
        rng = stream(seed, Purpose.DELAY_SCHEDULE)
        reads = np.zeros((K + 1, m), dtype=int)
        last = np.zeros(m, dtype=int)
        for k in range(K + 1):
            lo = min(k, max(0, k + 1 - tau))
            draw = rng.integers(lo, k + 1, size=m) if tau > 0 else np.full(m, k)
            np.maximum(draw, last, out=draw)
            reads[k] = draw
            last = draw
        self._reads = reads

    def reads(self, k: int) -> np.ndarray:
        """(m,) vector of j_p(k+1) used when forming iterate k+1."""
        return self._reads[k]


@dataclass
class AsbcdsState:
    """Reference-form state: full histories of all three sequences.

    Attributes:
        eta, zeta, lam: lists of (m, n) arrays indexed by iteration, where
            lam[k] holds the extrapolated point formed at the start of
            iteration k (lam[0] is the shared initial point).
    """

    eta: list
    zeta: list
    lam: list


def compensated_iterate(
    state: AsbcdsState, thetas: ThetaSchedule, k: int, reads: np.ndarray
) -> np.ndarray:
    """Compensate stale block reads up to the current iteration.

    For block p read at J = reads[p], replays the no-update recursion from J
    to k, which collapses to

        omega[p] = eta_J[p] + (sum of products of d_l over (J, i]) * (lam_{J+1}[p] - eta_J[p])

    with d_l = theta_{l+1}(1-theta_l)/theta_l and the i = J term contributing
    a bare 1. A fresh read (J = k) gives exactly lam_{k+1}[p].
    """
    m = reads.shape[0]
    if len(state.eta) < k + 1 or len(state.lam) < k + 2:
        raise ValueError("histories not populated through the current iteration")
    omega = np.empty_like(state.eta[0])
    factors = {}
    for p in range(m):
        J = int(reads[p])
        if not 0 <= J <= k:
            raise ValueError(f"read index {J} outside [0, {k}] for block {p}")
        if J not in factors:
            acc = 1.0
            total = 1.0
            for i in range(J + 1, k + 1):
                th_i = thetas.value(i)
                acc *= thetas.value(i + 1) * (1.0 - th_i) / th_i
                total += acc
            factors[J] = total
        omega[p] = state.eta[J][p] + factors[J] * (state.lam[J + 1][p] - state.eta[J][p])
    return omega


@dataclass
class PasbcdsState:
    """Practical-form state: one (u, v) pair per block plus read snapshots.

    Attributes:
        u, v: (m, n) arrays.
        last_write: per-block iteration index of the latest write.
        snapshots: per block, parallel lists of write indices and (u, v)
            values, kept so a delay schedule can read past states.
    """

    u: np.ndarray
    v: np.ndarray
    last_write: np.ndarray
    snapshots: list

    @classmethod
    def zeros(cls, m: int, n: int) -> "PasbcdsState":
        return cls(
            u=np.zeros((m, n)),
            v=np.zeros((m, n)),
            last_write=np.zeros(m, dtype=int),
            snapshots=[([0], [(np.zeros(n), np.zeros(n))]) for _ in range(m)],
        )

    def read(self, p: int, J: int) -> tuple:
        """(u_J[p], v_J[p]): the newest snapshot of block p with index <= J."""
        idxs, vals = self.snapshots[p]
        pos = bisect.bisect_right(idxs, J) - 1
        return vals[pos]


def pasbcds_step(
    state: PasbcdsState,
    i_k: int,
    g: np.ndarray,
    theta_next_val: float,
    gamma: float,
    m: int,
    write_index: int,
) -> None:
    """Apply one block update in place and record the block's new snapshot."""
    delta = (gamma / (m * theta_next_val)) * g
    state.u[i_k] = state.u[i_k] - delta
    state.v[i_k] = state.v[i_k] + (1.0 - m * theta_next_val) / theta_next_val**2 * delta
    state.last_write[i_k] = write_index
    idxs, vals = state.snapshots[i_k]
    idxs.append(write_index)
    vals.append((state.u[i_k].copy(), state.v[i_k].copy()))


@dataclass
class RunRecord:
    """Per-run record: iterates (when kept) and per-iteration values."""

    eta_final: np.ndarray
    etas: Optional[list]
    values: Optional[list]


def _block_picks(m: int, K: int, seed: int) -> np.ndarray:
    return stream(seed, Purpose.BLOCK).integers(0, m, size=K + 1)


def run_asbcds(
    oracle,
    m: int,
    n: int,
    K: int,
    gamma: float,
    delays: DelaySchedule,
    block_seed: int,
    initial: Optional[np.ndarray] = None,
    keep_history: bool = False,
) -> RunRecord:
    """Reference run with full histories and explicit compensation."""
    thetas = ThetaSchedule(m)
    init = np.zeros((m, n)) if initial is None else np.array(initial, dtype=float)
    state = AsbcdsState(eta=[init.copy()], zeta=[init.copy()], lam=[init.copy()])
    iks = _block_picks(m, K, block_seed)
    values = [] if getattr(oracle, "value", None) else None
    for k in range(K + 1):
        th = thetas.value(k + 1)
        state.lam.append(th * state.zeta[k] + (1.0 - th) * state.eta[k])
        omega = compensated_iterate(state, thetas, k, delays.reads(k))
        i_k = int(iks[k])
        g = oracle.grad_block(omega, i_k, k)
        zeta_new = state.zeta[k].copy()
        zeta_new[i_k] = state.zeta[k][i_k] - (gamma / (m * th)) * g
        state.zeta.append(zeta_new)
        state.eta.append(state.lam[k + 1] + m * th * (zeta_new - state.zeta[k]))
        if values is not None:
            values.append(oracle.value(state.eta[-1]))
    return RunRecord(
        eta_final=state.eta[-1],
        etas=state.eta if keep_history else None,
        values=values,
    )


def run_pasbcds(
    oracle,
    m: int,
    n: int,
    K: int,
    gamma: float,
    delays: DelaySchedule,
    block_seed: int,
    initial: Optional[np.ndarray] = None,
    keep_history: bool = False,
) -> RunRecord:
    """Practical run: O(1) per-block state, same trajectory as the reference."""
    thetas = ThetaSchedule(m)
    state = PasbcdsState.zeros(m, n)
    if initial is not None:
        state.u = np.array(initial, dtype=float)
        state.snapshots = [([0], [(state.u[p].copy(), state.v[p].copy())]) for p in range(m)]
    iks = _block_picks(m, K, block_seed)
    etas = [state.u + thetas.value(1) ** 2 * state.v] if keep_history else None
    values = [] if getattr(oracle, "value", None) else None
    omega = np.empty((m, n))
    for k in range(K + 1):
        th = thetas.value(k + 1)
        reads = delays.reads(k)
        for p in range(m):
            u_J, v_J = state.read(p, int(reads[p]))
            omega[p] = u_J + th**2 * v_J
        i_k = int(iks[k])
        g = oracle.grad_block(omega, i_k, k)
        pasbcds_step(state, i_k, g, th, gamma, m, write_index=k + 1)
        if keep_history:
            etas.append(state.u + thetas.value(k + 1) ** 2 * state.v)
        if values is not None:
            values.append(
                oracle.value(state.u + thetas.value(k + 1) ** 2 * state.v)
            )
    eta_final = state.u + thetas.value(K + 1) ** 2 * state.v
    return RunRecord(eta_final=eta_final, etas=etas, values=values)


@dataclass(frozen=True)
class QuadraticConsensusProblem:
    """Separable quadratic with a consensus constraint and closed-form dual.

    Primal: F(x) = sum_i (mu/2)||x_i - b_i||^2 subject to all blocks equal.
    Dual (in the unbarred variable): phi(eta) = (1/(2mu))||S eta||^2 +
    <S eta, b> with S the Laplacian square root; the dual optimum and the
    primal optimum (the mean of the targets) are both available in closed
    form, which is what makes this problem the diagnostic workhorse.

    Attributes:
        graph: network topology.
        mu_strong: strong convexity modulus of each local objective.
        b: (m, n) target blocks.
    """

    graph: Graph
    mu_strong: float
    b: np.ndarray

    def __post_init__(self):
        if not self.mu_strong > 0:
            raise ValueError(f"strong convexity modulus must be positive, got {self.mu_strong}")
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        if b.shape[0] != self.graph.m:
            raise ValueError(f"expected {self.graph.m} target blocks, got {b.shape[0]}")
        object.__setattr__(self, "b", b)
        L = laplacian(self.graph)
        object.__setattr__(self, "_sqrtL", sqrt_laplacian(L))
        object.__setattr__(self, "_lambda_max", lambda_max(L))

    @property
    def n(self) -> int:
        return self.b.shape[1]

    @property
    def lam_max(self) -> float:
        return self._lambda_max

    @property
    def smoothness(self) -> float:
        return self._lambda_max / self.mu_strong

    def apply_sqrt(self, x: np.ndarray) -> np.ndarray:
        """Blockwise product with the Laplacian square root."""
        return self._sqrtL @ x

    def phi_star(self) -> float:
        """Dual minimum: -(mu/2) * sum_i ||b_i - mean(b)||^2."""
        centered = self.b - self.b.mean(axis=0, keepdims=True)
        return -0.5 * self.mu_strong * float((centered**2).sum())

    def x_star(self) -> np.ndarray:
        """Primal optimum: every block equals the mean target."""
        return np.broadcast_to(self.b.mean(axis=0), self.b.shape).copy()


def quadratic_dual_eval(prob: QuadraticConsensusProblem, eta: np.ndarray) -> tuple:
    """(phi(eta), grad phi(eta), primal x at eta), all closed form."""
    eta = np.atleast_2d(np.asarray(eta, dtype=float))
    root_eta = prob.apply_sqrt(eta)
    phi = float((root_eta**2).sum() / (2.0 * prob.mu_strong) + (root_eta * prob.b).sum())
    x = prob.b + root_eta / prob.mu_strong
    grad = prob.apply_sqrt(x)
    return phi, grad, x


class QuadraticOracle:
    """Stochastic block-gradient oracle for the quadratic problem.

    Gradient noise is keyed by iteration alone, so two runs sharing block and
    delay streams also share their noise realizations.
    """

    def __init__(self, prob: QuadraticConsensusProblem, noise_std: float = 0.0, seed: int = 0):
        self.prob = prob
        self.noise_std = noise_std
        self.seed = seed
        self.sigma2 = noise_std**2 * prob.graph.m * prob.n

    def grad_block(self, omega: np.ndarray, i_k: int, k: int) -> np.ndarray:
        _, grad, _ = quadratic_dual_eval(self.prob, omega)
        if self.noise_std > 0.0:
            noise = stream(self.seed, Purpose.ORACLE_NOISE, k).normal(
                0.0, self.noise_std, size=grad.shape
            )
            grad = grad + noise
        return grad[i_k]

    def value(self, eta: np.ndarray) -> float:
        phi, _, _ = quadratic_dual_eval(self.prob, eta)
        return phi

    def gap(self, eta: np.ndarray) -> float:
        return self.value(eta) - self.prob.phi_star()
