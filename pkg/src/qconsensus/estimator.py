"""scikit-learn style wrapper around one network's quantized consensus run.

Rows of ``X`` are independent sets of initial node values on the same
network; ``transform`` returns the node values after ``horizon`` iterations.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from qconsensus.engine import codec_factory, run_consensus
from qconsensus.errors import DimensionMismatch
from qconsensus.network import WeightMatrix
from qconsensus.schedule import DEFAULT_CLAMP, exponential_params, min_bits, progressive_schedule


class QuantizedConsensus(TransformerMixin, BaseEstimator):
    """Average consensus over a fixed weight matrix with n-bit communication.

    Parameters
    ----------
    weights : array (m, m) or WeightMatrix
    codec : {"progressive", "uniform", "zoom", "adapt"} or None for exact links
    n_bits : int
    horizon : int
    schedule : {"exponential", "recursive"}, used by the progressive codec
    z0_inf : float or None. Bound on max |z0| for the schedule; None takes it from the data.
    value_range : (lo, hi) interval known to contain every initial value
    """

    def __init__(self, weights=None, codec="progressive", n_bits=4, horizon=100,
                 schedule="exponential", z0_inf=None, value_range=(0.0, 1.0),
                 clamp_delta=DEFAULT_CLAMP):
        self.weights = weights
        self.codec = codec
        self.n_bits = n_bits
        self.horizon = horizon
        self.schedule = schedule
        self.z0_inf = z0_inf
        self.value_range = value_range
        self.clamp_delta = clamp_delta

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if self.weights is None:
            raise ValueError("weights is required")
        w = self.weights if isinstance(self.weights, WeightMatrix) else WeightMatrix.from_array(self.weights)
        if X.shape[1] != w.m:
            raise DimensionMismatch(f"X has {X.shape[1]} columns but the network has {w.m} nodes")
        lo, hi = self.value_range
        z0_inf = float(np.max(np.abs(X))) if self.z0_inf is None else float(self.z0_inf)
        self.weights_ = w
        self.n_features_in_ = w.m
        self.lambda2_ = w.lambda2
        self.lambda_min_ = w.lambda_min
        self.min_bits_ = min_bits(w.lambda2, w.lambda_min)
        self.schedule_ = None
        self.alpha_ = self.gamma_ = None
        if self.codec == "progressive":
            if self.schedule == "exponential":
                self.alpha_, self.gamma_ = exponential_params(w.lambda2, w.lambda_min, self.n_bits, z0_inf)
            self.schedule_ = progressive_schedule(w, self.n_bits, z0_inf, hi - lo, self.horizon,
                                                  self.schedule, self.clamp_delta)
        return self

    def _runs(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        lo, hi = self.value_range
        factory = None if self.codec is None else codec_factory(self.codec, self.n_bits, lo, hi)
        return [run_consensus(self.weights_, row, factory, self.schedule_, self.horizon) for row in X]

    def transform(self, X):
        return np.array([tr.z[-1] for tr in self._runs(X)])

    def predict(self, X):
        """Each row's consensus estimate: the mean of its final node values."""
        return self.transform(X).mean(axis=1)

    def error_curves(self, X):
        """||z_t - mean(z_0)|| for t = 0..horizon, one row per sample."""
        return np.array([np.linalg.norm(tr.z - tr.mu, axis=1) for tr in self._runs(X)])
