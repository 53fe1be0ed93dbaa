"""Semi-discrete entropic transport dual oracle.

A node holds a private measure mu and a dual potential eta over the shared
barycenter support z_1..z_n. The dual value is E_y beta*logsumexp((eta -
c(y))/beta) and its gradient in eta is the expected softmax, which is also
the node's barycenter-weight estimate. Everything is stabilized with
max-subtraction so beta down to 1e-3 cannot overflow.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.random import Generator
from scipy.special import ndtri

__all__ = [
    "SupportGrid",
    "Gaussian1D",
    "DiscreteMeasure",
    "Measure",
    "grid_1d",
    "cost_column",
    "cost_matrix",
    "softmax_primal",
    "softmax_rows",
    "sample_measure",
    "stochastic_grad",
    "GradientSample",
    "exact_dual",
    "dual_value_mc",
    "value_at_points",
    "softmax_mean_at_points",
]


@dataclass(frozen=True)
class SupportGrid:
    """Fixed barycenter support.

    Attributes:
        points: (n, d) array of pairwise distinct support points.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] < 1:
            raise ValueError("support needs at least one point")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def grid_1d(lo: float, hi: float, n: int) -> SupportGrid:
    """n points equally spaced on [lo, hi], as a d=1 support."""
    return SupportGrid(points=np.linspace(lo, hi, n)[:, None])


@dataclass(frozen=True)
class Gaussian1D:
    """1-D Gaussian measure.

    Attributes:
        mean: location.
        std: scale, strictly positive.
    """

    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError(f"gaussian std must be positive, got {self.std}")

    def ppf(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF of uniforms; returns (k, 1) points."""
        # clamp away from {0, 1} so ndtri stays finite
        u = np.clip(np.asarray(u, dtype=float), 2**-53, 1.0 - 2**-53)
        return (self.mean + self.std * ndtri(u))[:, None]

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        return self.ppf(rng.random(size))

    def entropy(self) -> float:
        """Differential entropy, used for the optional dual constant."""
        return 0.5 * np.log(2.0 * np.pi * np.e * self.std**2)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Empirical measure on finitely many atoms.

    Attributes:
        atoms: (k, d) atom locations.
        weights: (k,) nonnegative weights summing to 1 within 1e-12.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if atoms.shape[0] != w.shape[0]:
            raise ValueError("atom and weight counts differ")
        if np.any(w < 0):
            raise ValueError("discrete measure has a negative weight")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"discrete weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_cdf", np.cumsum(w))

    def ppf(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF over atoms; returns (k, d) points."""
        idx = np.searchsorted(self._cdf, np.asarray(u, dtype=float), side="right")
        idx = np.minimum(idx, len(self.weights) - 1)
        return self.atoms[idx]

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        return self.ppf(rng.random(size))

    def entropy(self) -> float:
        w = self.weights[self.weights > 0]
        return float(-(w * np.log(w)).sum())


Measure = Union[Gaussian1D, DiscreteMeasure]


def sample_measure(mu: Measure, rng: Generator) -> np.ndarray:
    """One point drawn from mu through its inverse CDF."""
    return mu.sample(rng, 1)[0]


def cost_column(grid: SupportGrid, y: np.ndarray) -> np.ndarray:
    """Squared Euclidean transport cost from every support point to y."""
    y = np.asarray(y, dtype=float).reshape(1, -1)
    d = grid.points - y
    return np.einsum("ij,ij->i", d, d)


def cost_matrix(grid: SupportGrid, ys: np.ndarray) -> np.ndarray:
    """(k, n) matrix of squared distances from each of k points to the support."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    d = ys[:, None, :] - grid.points[None, :, :]
    return np.einsum("kij,kij->ki", d, d)


def softmax_primal(eta: np.ndarray, costs: np.ndarray, beta: float) -> np.ndarray:
    """Stabilized softmax of (eta - costs)/beta; a point in the simplex."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    s = (np.asarray(eta, dtype=float) - np.asarray(costs, dtype=float)) / beta
    s -= s.max()
    e = np.exp(s)
    return e / e.sum()


def softmax_rows(eta: np.ndarray, cost_rows: np.ndarray, beta: float) -> np.ndarray:
    """Row-wise stabilized softmax of (eta - c(y_r))/beta, shape (k, n)."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    s = (np.asarray(eta, dtype=float)[None, :] - cost_rows) / beta
    s -= s.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class GradientSample:
    """Batch-averaged stochastic dual gradient.

    Attributes:
        mean_gradient: (n,) simplex vector, the batch mean of per-sample
            softmax rows.
        samples_used: batch size M.
    """

    mean_gradient: np.ndarray
    samples_used: int


def stochastic_grad(
    mu: Measure,
    grid: SupportGrid,
    eta: np.ndarray,
    beta: float,
    M: int,
    rng: Generator,
) -> GradientSample:
    """M-sample stochastic gradient of the local dual at eta.

    Unbiased for the exact gradient; deterministic given the stream state.
    """
    if M < 1:
        raise ValueError(f"batch size must be at least 1, got {M}")
    ys = mu.sample(rng, M)
    rows = softmax_rows(eta, cost_matrix(grid, ys), beta)
    return GradientSample(mean_gradient=rows.mean(axis=0), samples_used=M)


def exact_dual(
    mu: DiscreteMeasure,
    grid: SupportGrid,
    eta: np.ndarray,
    beta: float,
    include_entropy_constant: bool = False,
) -> tuple:
    """Closed-form local dual value and gradient for a discrete measure.

    The measure-dependent log(1/mu(y)) term inside the dual is a constant in
    eta; it is excluded unless include_entropy_constant is set.
    """
    if not isinstance(mu, DiscreteMeasure):
        raise TypeError("exact_dual needs an empirical discrete measure")
    C = cost_matrix(grid, mu.atoms)
    s = (np.asarray(eta, dtype=float)[None, :] - C) / beta
    smax = s.max(axis=1, keepdims=True)
    lse = smax[:, 0] + np.log(np.exp(s - smax).sum(axis=1))
    value = float(beta * (mu.weights @ lse))
    if include_entropy_constant:
        value += beta * mu.entropy()
    e = np.exp(s - smax)
    rows = e / e.sum(axis=1, keepdims=True)
    grad = mu.weights @ rows
    return value, grad


def value_at_points(
    grid: SupportGrid, eta: np.ndarray, beta: float, ys: np.ndarray
) -> float:
    """Average of beta*logsumexp((eta - c(y))/beta) over the given points."""
    s = (np.asarray(eta, dtype=float)[None, :] - cost_matrix(grid, ys)) / beta
    smax = s.max(axis=1, keepdims=True)
    lse = smax[:, 0] + np.log(np.exp(s - smax).sum(axis=1))
    return float(beta * lse.mean())


def softmax_mean_at_points(
    grid: SupportGrid, eta: np.ndarray, beta: float, ys: np.ndarray
) -> np.ndarray:
    """Mean softmax row over the given points; a simplex vector."""
    return softmax_rows(eta, cost_matrix(grid, ys), beta).mean(axis=0)


def dual_value_mc(
    mu: Measure,
    grid: SupportGrid,
    eta: np.ndarray,
    beta: float,
    M_eval: int,
    rng: Generator,
    include_entropy_constant: bool = False,
) -> float:
    """Monte-Carlo local dual value over M_eval draws from mu.

    The eta-independent entropy constant is excluded by default; when
    requested it is the analytic differential entropy for Gaussians and the
    discrete entropy for empirical measures, scaled by beta.
    """
    if M_eval < 1:
        raise ValueError(f"M_eval must be at least 1, got {M_eval}")
    ys = mu.sample(rng, M_eval)
    value = value_at_points(grid, eta, beta, ys)
    if include_entropy_constant:
        value += beta * mu.entropy()
    return value
