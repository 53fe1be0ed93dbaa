"""Estimator facade: fit a decentralized barycenter from weight-matrix input.

Each row of X is one node's measure, given as nonnegative weights over a
shared support. Fitting simulates the asynchronous network to the horizon
and exposes the node estimates, their average, and the evaluation trace as
fitted attributes.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .experiments import BarycenterProblem
from .graphs import TopologySpec, build_topology, lambda_max, laplacian
from .optim import step_size
from .simulate import VARIANTS, CommModel, run_sim
from .transport import DiscreteMeasure, SupportGrid, grid_1d, softmax_mean_at_points

__all__ = ["DecentralizedBarycenter"]


class DecentralizedBarycenter(TransformerMixin, BaseEstimator):
    """Entropy-regularized barycenter of row measures via network simulation.

    Parameters:
        beta: entropy regularization strength.
        topology: network kind, one of complete, cycle, star, erdos_renyi.
        er_edge_prob: edge probability when topology is erdos_renyi.
        variant: protocol variant, one of a2dwb, a2dwbn, sync_baseline.
        horizon_s: virtual-time budget of the fit.
        interval_s: activation spacing on the virtual clock.
        batch: gradient samples per activation.
        support: optional (n,) or (n, d) shared support; defaults to n
            equally spaced points on [0, 1].
        master_seed: seed for every stream of the run.
        eval_samples: Monte-Carlo size for snapshot evaluation.
        eval_seed: seed of the shared evaluation draws.

    Attributes (after fit):
        barycenter_weights_: (n,) average of the node estimates.
        node_weights_: (m, n) per-node barycenter estimates.
        trace_: snapshot list over the run.
        dual_state_: (m, n) final per-node dual potentials.
    """

    def __init__(
        self,
        beta: float = 0.05,
        topology: str = "complete",
        er_edge_prob: float = 0.4,
        variant: str = "a2dwb",
        horizon_s: float = 50.0,
        interval_s: float = 0.2,
        batch: int = 10,
        support=None,
        master_seed: int = 0,
        eval_samples: int = 200,
        eval_seed: int = 0,
    ):
        self.beta = beta
        self.topology = topology
        self.er_edge_prob = er_edge_prob
        self.variant = variant
        self.horizon_s = horizon_s
        self.interval_s = interval_s
        self.batch = batch
        self.support = support
        self.master_seed = master_seed
        self.eval_samples = eval_samples
        self.eval_seed = eval_seed

    def _grid(self, n: int) -> SupportGrid:
        if self.support is None:
            return grid_1d(0.0, 1.0, n)
        pts = np.asarray(self.support, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[0] != n:
            raise ValueError(f"support has {pts.shape[0]} points for {n} weight columns")
        return SupportGrid(points=pts)

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[0] < 2:
            raise ValueError(f"need at least 2 row measures, got {X.shape[0]}")
        if np.any(X < 0):
            raise ValueError("weights must be nonnegative")
        sums = X.sum(axis=1)
        if np.any(sums <= 0):
            raise ValueError("every row measure needs positive total weight")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        m, n = X.shape
        self.n_features_in_ = n
        grid = self._grid(n)
        measures = tuple(
            DiscreteMeasure(atoms=grid.points, weights=row / s) for row, s in zip(X, sums)
        )
        problem = BarycenterProblem(
            grid=grid,
            measures=measures,
            beta=self.beta,
            eval_samples=self.eval_samples,
            eval_seed=self.eval_seed,
        )
        er_prob = self.er_edge_prob if self.topology == "erdos_renyi" else None
        graph = build_topology(
            TopologySpec(kind=self.topology, m=m, er_edge_prob=er_prob, seed=self.master_seed)
        )
        gamma = step_size(lambda_max(laplacian(graph)) / self.beta, m, m)
        snapshots, eta_bar, _stats = run_sim(
            problem=problem,
            graph=graph,
            variant=self.variant,
            horizon_s=self.horizon_s,
            gamma=gamma,
            batch_fn=lambda k: self.batch,
            master_seed=self.master_seed,
            interval_s=self.interval_s,
            comm=CommModel(),
        )
        self.dual_state_ = eta_bar
        self.node_weights_ = problem.eval_primals(eta_bar)
        self.barycenter_weights_ = self.node_weights_.mean(axis=0)
        self.trace_ = snapshots
        self._fit_grid = grid
        return self

    def transform(self, X):
        """Smooth row measures through the fitted average dual potential.

        Each row is re-weighted by the transport softmax at the mean fitted
        potential, so the output rows are the barycenter-coupled versions of
        the inputs (simplex vectors over the support).
        """
        check_is_fitted(self, "dual_state_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} columns, fitted support has {self.n_features_in_}"
            )
        eta_mean = self.dual_state_.mean(axis=0)
        out = np.empty_like(X)
        for r, row in enumerate(X):
            s = row.sum()
            if not s > 0:
                raise ValueError(f"row {r} has no positive weight")
            mu = DiscreteMeasure(atoms=self._fit_grid.points, weights=row / s)
            base = np.linspace(0.0, 1.0, self.eval_samples, endpoint=False) + 0.5 / self.eval_samples
            out[r] = softmax_mean_at_points(
                self._fit_grid, eta_mean, self.beta, mu.ppf(base)
            )
        return out
