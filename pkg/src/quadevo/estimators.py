"""scikit-learn style wrappers around the DGQI and QE blocks."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import WindowSpec
from .gqi import dgqi_estimate, epsilon_max, optimize_window
from .qe import build_bundle, empirical_covariances, estimate


def _check_measurements(X):
    """``check_array`` for possibly complex subcarrier blocks."""
    X = np.asarray(X)
    if np.iscomplexobj(X):
        return check_array(X.real) + 1j * check_array(X.imag)
    return check_array(X)


class QuadratureEvolution(RegressorMixin, BaseEstimator):
    """Optimal linear estimator ``x_hat = xi @ kappa`` fitted from samples.

    :param reg_eps: ridge on ``cov_kk``; ``None`` selects ``1e-9 * trace / d``

    Attributes after :meth:`fit`: ``xi_``, ``bundle_`` (covariances and the
    error covariance), ``n_features_in_``.

    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> X = rng.standard_normal((500, 3))
    >>> K = X + 0.1 * rng.standard_normal((500, 3))
    >>> qe = QuadratureEvolution().fit(K, X)
    >>> qe.predict(K).shape
    (500, 3)
    """

    def __init__(self, reg_eps: float | None = None):
        self.reg_eps = reg_eps

    def fit(self, K, X):
        """Fit from measurements ``K`` and targets ``X``, both ``trials x d``."""
        K = check_array(K, ensure_min_samples=2)
        X = check_array(X, ensure_min_samples=2)
        if K.shape != X.shape:
            raise ValueError(f"K has shape {K.shape} but X has shape {X.shape}")
        covs = empirical_covariances(X, K, self.reg_eps)
        self.bundle_ = build_bundle(*covs)
        self.xi_ = self.bundle_.xi
        self.n_features_in_ = K.shape[1]
        return self

    def predict(self, K):
        check_is_fitted(self, "xi_")
        K = check_array(K)
        if K.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {K.shape[1]}")
        return estimate(self.xi_, K)

    def score(self, K, X, sample_weight=None):
        """Negative mean squared error per element (higher is better)."""
        X = check_array(X)
        return -float(np.mean((X - self.predict(K)) ** 2))


class DGQITransformer(TransformerMixin, BaseEstimator):
    """Windowed inverse transform of measured subcarrier blocks.

    :param coefficients: window coefficients ``C_1..C_P``
    :param grid: optional iterable of candidate coefficient tuples; when given,
        :meth:`fit` picks the one minimising the worst magnitude error against
        the reference passed as ``y``
    """

    def __init__(self, coefficients=(), grid=None):
        self.coefficients = coefficients
        self.grid = grid

    def fit(self, X, y=None):
        X = _check_measurements(X)
        if self.grid is not None:
            if y is None:
                raise ValueError("window optimisation needs a reference y")
            y = _check_measurements(y)
            grid = [tuple(c) for c in self.grid]
            P = len(grid[0]) if grid else 0
            self.window_ = optimize_window(X, y, P, grid)
        else:
            self.window_ = WindowSpec.from_coefficients(tuple(self.coefficients))
        self.n_features_in_ = X.shape[1]
        if y is not None:
            self.epsilon_ = epsilon_max(_check_measurements(y),
                                        dgqi_estimate(X, self.window_).values)
        return self

    def transform(self, X):
        check_is_fitted(self, "window_")
        X = _check_measurements(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} subcarriers, got {X.shape[1]}")
        return dgqi_estimate(X, self.window_).values
