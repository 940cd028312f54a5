"""Scikit-learn style front end for fitting representations to raw events."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .core import (
    EventStream,
    KernelSpec,
    MarkSpace,
    build_uniform_partition,
    select_bin_count,
)
from .infer import fit_mle, log_likelihood
from .simulate import SimConfig, simulate_mv


class HawkesRepresentation(BaseEstimator):
    """Maximum-likelihood multivariate representation of marked event data.

    Events are rows ``(time, mark)``.  The mark space is split into
    ``n_components`` equal-measure cells (one process type per cell; the
    cube-root rule picks the count when unset) and a ``2K^2 + K``-parameter
    exponential-kernel process is fitted to the typed sequence.

    Parameters
    ----------
    n_components : int or None
        Number of mark cells / process types.  None selects the smallest k
        with ``k^3 >= n``.
    kernel_convention : {"density", "unnormalized"}
        Whether excitation kernels carry unit mass (``beta e^{-beta t}``) or
        unit height (``e^{-beta t}``).
    horizon : float or None
        Observation window end.  None uses the last event time.
    mark_space : MarkSpace or None
        Mark domain.  None infers a closed interval from the data.
    init : MvParams, sequence of MvParams, or None
        Starting point(s) for the optimizer; None uses the closed-form
        background split.
    restarts : int
        Number of optimizer starts (extras are jittered from ``init``).
    tol : float
        Gradient tolerance declaring convergence.
    max_iter : int
        Optimizer iteration cap.
    random_state : int
        Seed for the jittered restarts.

    Attributes
    ----------
    params_ : MvParams
        Fitted baselines, excitations, and decays.
    partition_ : MarkPartition
        The mark cells defining the component types.
    result_ : FitResult
        Full optimizer outcome (loglik, convergence, iterations).
    n_components_ : int
        The component count actually used.
    """

    def __init__(
        self,
        n_components=None,
        kernel_convention="density",
        horizon=None,
        mark_space=None,
        init=None,
        restarts=3,
        tol=1e-6,
        max_iter=2000,
        random_state=0,
    ):
        self.n_components = n_components
        self.kernel_convention = kernel_convention
        self.horizon = horizon
        self.mark_space = mark_space
        self.init = init
        self.restarts = restarts
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def _event_matrix(self, X) -> tuple[np.ndarray, np.ndarray]:
        X = check_array(X, ensure_2d=True, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(
                f"expected an (n, 2) matrix of (time, mark) rows, got {X.shape}"
            )
        times, marks = X[:, 0], X[:, 1]
        if np.any(np.diff(times) <= 0):
            raise ValueError("event times must be strictly increasing")
        return times, marks

    def _space(self, marks: np.ndarray) -> MarkSpace:
        if self.mark_space is not None:
            return self.mark_space
        lo, hi = float(marks.min()), float(marks.max())
        if hi <= lo:
            hi = lo + 1.0
        return MarkSpace.interval(lo, hi)

    def _stream(self, X, space=None, horizon=None) -> EventStream:
        times, marks = self._event_matrix(X)
        space = space if space is not None else self._space(marks)
        if horizon is None:
            horizon = self.horizon if self.horizon is not None else float(times[-1])
        return EventStream(times, marks, float(horizon), space)

    def fit(self, X, y=None):
        """Fit the representation to an (n, 2) array of (time, mark) rows."""
        stream = self._stream(X)
        k = self.n_components
        if k is None:
            k = select_bin_count(stream.n)
        partition = build_uniform_partition(stream.space, k)
        result = fit_mle(
            partition,
            stream,
            init=self.init,
            kernel=KernelSpec(convention=self.kernel_convention),
            restarts=self.restarts,
            gtol=self.tol,
            max_iter=self.max_iter,
            seed=self.random_state,
        )
        self.params_ = result.params
        self.partition_ = partition
        self.result_ = result
        self.n_components_ = k
        self.horizon_ = stream.horizon
        return self

    def predict(self, X) -> np.ndarray:
        """In-sample ground intensity just before each event in X."""
        check_is_fitted(self, "params_")
        stream = self._stream(X, space=self.partition_.space)
        types = self.partition_.cell_indices(stream.marks)
        k = self.n_components_
        alpha, beta = self.params_.alpha, self.params_.beta
        prefactor = self.params_.kernel.value_at_zero(beta)
        measures = self.partition_.measures
        r_state = np.zeros((k, k))
        out = np.empty(stream.n)
        prev_t = 0.0
        for idx in range(stream.n):
            dt = stream.times[idx] - prev_t
            r_state *= np.exp(-beta * dt)
            lam = self.params_.lambda0 + (alpha * r_state).sum(axis=1)
            out[idx] = float(measures @ lam)
            r_state[:, types[idx]] += prefactor[:, types[idx]]
            prev_t = stream.times[idx]
        return out

    def score(self, X, y=None) -> float:
        """Log-likelihood of events X under the fitted parameters."""
        check_is_fitted(self, "params_")
        stream = self._stream(X, space=self.partition_.space)
        return log_likelihood(self.params_, self.partition_, stream)

    def sample(self, horizon=None, random_state=0) -> np.ndarray:
        """Simulate the fitted process; returns (n, 2) rows of (time, mark)."""
        check_is_fitted(self, "params_")
        horizon = float(horizon if horizon is not None else self.horizon_)
        stream = simulate_mv(
            self.params_,
            self.partition_,
            SimConfig(horizon=horizon, seed=random_state),
        )
        return np.column_stack([stream.times, stream.marks])
