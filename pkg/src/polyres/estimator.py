"""scikit-learn compatible estimators.

``ReservoirStates`` and ``MonomialFeatures`` are transformers, so the
readout can be assembled from ordinary sklearn parts::

    Pipeline([("esn", ReservoirStates(n_reservoir=10)),
              ("poly", MonomialFeatures(degree=2)),
              ("ridge", Ridge(alpha=1e-4, fit_intercept=False))])

``PolyESN`` bundles the same thing as a forecaster and adds closed-loop
generation.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .readout import AutonomousEsn, closed_loop_orbit, feature_dim, features, predict, train
from .reservoir import EsnConfig, build_esn, drive, update

__all__ = ["ReservoirStates", "MonomialFeatures", "PolyESN"]


def _check_seq(X, estimator=None):
    return check_array(X, dtype=np.float64, ensure_min_samples=1, estimator=estimator)


class ReservoirStates(TransformerMixin, BaseEstimator):
    """Map an input sequence ``(T, K)`` to reservoir states ``(T, N)``.

    Each call to :meth:`transform` starts from the zero state; rows are
    time-ordered and must not be shuffled.
    """

    def __init__(self, n_reservoir=10, spectral_radius=0.95, sigma_b=0.1, random_state=0):
        self.n_reservoir = n_reservoir
        self.spectral_radius = spectral_radius
        self.sigma_b = sigma_b
        self.random_state = random_state

    def fit(self, X, y=None):
        X = _check_seq(X, self)
        self.n_features_in_ = X.shape[1]
        config = EsnConfig(
            int(self.n_reservoir), X.shape[1], float(self.spectral_radius),
            float(self.sigma_b), int(self.random_state),
        )
        self.esn_ = build_esn(config)
        return self

    def transform(self, X):
        check_is_fitted(self, "esn_")
        X = _check_seq(X, self)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} "
                f"was fitted with {self.n_features_in_}"
            )
        return drive(self.esn_, X, 0)


class MonomialFeatures(TransformerMixin, BaseEstimator):
    """Constant, linear and (optionally) quadratic/cubic monomials without repeats."""

    def __init__(self, degree=2):
        self.degree = degree

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, estimator=self)
        self.n_features_in_ = X.shape[1]
        self.n_output_features_ = feature_dim(X.shape[1], self.degree)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_output_features_")
        X = check_array(X, dtype=np.float64, estimator=self)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return features(X, self.degree)


class PolyESN(RegressorMixin, BaseEstimator):
    """Echo state network with a polynomial readout.

    Parameters
    ----------
    n_reservoir : int
        Reservoir size N.
    degree : {1, 2, 3}
        Highest monomial degree in the readout.
    spectral_radius, sigma_b : float
        Recurrent matrix radius and input weight half-width.
    beta : float
        Ridge parameter, unscaled by the sample count.
    washout : int
        Leading states excluded from training.
    random_state : int
        Seed for the reservoir matrices.

    ``fit(X)`` with ``y=None`` trains one-step-ahead prediction of the
    sequence itself (targets ``X[t+1]``); pass ``y`` to train on other
    targets aligned row by row with ``X``.
    """

    def __init__(
        self,
        n_reservoir=10,
        degree=2,
        spectral_radius=0.95,
        sigma_b=0.1,
        beta=1e-4,
        washout=100,
        random_state=0,
    ):
        self.n_reservoir = n_reservoir
        self.degree = degree
        self.spectral_radius = spectral_radius
        self.sigma_b = sigma_b
        self.beta = beta
        self.washout = washout
        self.random_state = random_state

    def fit(self, X, y=None):
        X = _check_seq(X, self)
        self.y_1d_ = False
        tail = None
        if y is None:
            X, y, tail = X[:-1], X[1:], X[-1]
        else:
            y = check_array(y, dtype=np.float64, ensure_2d=False)
            if y.ndim == 1:
                self.y_1d_ = True
                y = y[:, None]
            if len(y) != len(X):
                raise ValueError(f"X has {len(X)} rows but y has {len(y)}")
        if self.washout >= len(X):
            raise ValueError(f"washout={self.washout} leaves no training samples")
        self.n_features_in_ = X.shape[1]
        config = EsnConfig(
            int(self.n_reservoir), X.shape[1], float(self.spectral_radius),
            float(self.sigma_b), int(self.random_state),
        )
        self.esn_ = build_esn(config)
        states = drive(self.esn_, X, self.washout)
        self.readout_ = train(states, y[self.washout:], self.degree, float(self.beta))
        self.last_state_ = states[-1]
        if tail is not None:
            # consume the final sample so generate() continues past the data
            self.last_state_ = update(self.esn_.with_state(states[-1]), tail).state
        return self

    def transform(self, X):
        """Reservoir states for ``X``, driven from the zero state."""
        check_is_fitted(self, "readout_")
        return drive(self.esn_, _check_seq(X, self), 0)

    def predict(self, X):
        """Open-loop predictions, one row per input row (the first rows are transient)."""
        states = self.transform(X)
        out = predict(self.readout_, states)
        return out[:, 0] if self.y_1d_ else out

    def generate(self, n_steps, X_sync=None):
        """Closed-loop outputs for ``n_steps`` steps.

        The reservoir is synchronized on ``X_sync`` when given, otherwise
        it continues from the end of the training data (after a
        self-supervised fit the first output forecasts the sample following
        the training sequence).
        """
        check_is_fitted(self, "readout_")
        if self.readout_.l != self.n_features_in_:
            raise ValueError("closed loop needs outputs with the same dimension as inputs")
        state = self.last_state_ if X_sync is None else self.transform(X_sync)[-1]
        sys = AutonomousEsn(self.esn_.with_state(state), self.readout_)
        outputs, _, _ = closed_loop_orbit(sys, int(n_steps))
        return outputs
