"""Estimates with error bars and the small numerical tools behind them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

METHODS = ("exact", "thermo_integration", "disorder_average", "jackknife", "batch_means")


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    std_error: float
    n_samples: int
    method: str
    degenerate: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if not self.std_error >= 0:
            raise ValueError("std_error must be non-negative")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.std_error == 0 and self.method != "exact" and not self.degenerate:
            raise ValueError("zero std_error requires method='exact' or a degenerate flag")

    @classmethod
    def exact(cls, value: float) -> "EstimateWithError":
        return cls(float(value), 0.0, 1, "exact")

    @classmethod
    def of(cls, mean: float, se: float, n: int, method: str) -> "EstimateWithError":
        se = float(se)
        return cls(float(mean), se, int(n), method, degenerate=(se == 0.0 and method != "exact"))

    def __sub__(self, other: "EstimateWithError") -> "EstimateWithError":
        """Difference of independent estimates; errors add in quadrature."""
        se = math.hypot(self.std_error, other.std_error)
        n = min(self.n_samples, other.n_samples)
        return EstimateWithError.of(self.mean - other.mean, se, n, "disorder_average")

    def shifted(self, c: float) -> "EstimateWithError":
        return EstimateWithError(self.mean + c, self.std_error, self.n_samples, self.method, self.degenerate)

    def within(self, truth: float, k: float = 3.0) -> bool:
        return abs(self.mean - truth) <= k * self.std_error


def jackknife(values, estimator=None) -> tuple[float, float]:
    """Leave-one-out jackknife: returns ``(estimate, std_error)``.

    ``values`` has the sample index on axis 0. Without an estimator this is
    the sample mean, for which the jackknife error equals s / sqrt(n).
    """
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[0]
    if n < 2:
        raise DomainError("jackknife needs at least two samples")
    if estimator is None:
        total = v.sum(axis=0)
        loo = (total - v) / (n - 1)
        est = total / n
    else:
        est = estimator(v)
        loo = np.array([estimator(np.delete(v, i, axis=0)) for i in range(n)])
    loo_mean = loo.mean(axis=0)
    var = (n - 1) / n * np.sum((loo - loo_mean) ** 2, axis=0)
    return est, np.sqrt(var)


def autocorrelation(x) -> np.ndarray:
    """Normalized autocorrelation function via FFT."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    d = x - x.mean()
    f = np.fft.rfft(d, n=2 * n)
    acf = np.fft.irfft(f * np.conjugate(f))[:n]
    if acf[0] <= 0:
        return np.concatenate([[1.0], np.zeros(n - 1)])
    return acf / acf[0]


def integrated_autocorr_time(x, c: float = 5.0) -> float:
    """Integrated autocorrelation time with Sokal's automatic window.

    ``tau = 1/2 + sum_{t=1}^{W} rho(t)`` where ``W`` is the first lag with
    ``W >= c * tau(W)``. A constant series gives 0.5.
    """
    rho = autocorrelation(x)
    tau = 0.5
    for w in range(1, rho.size):
        tau += rho[w]
        if w >= c * tau:
            break
    return max(tau, 0.5)


def batch_means(x, n_batches: int = 32) -> tuple[float, float]:
    """Mean and batch-means standard error of a (possibly correlated) series.

    Leading samples that do not fill a whole batch are dropped from the
    error estimate only.
    """
    x = np.asarray(x, dtype=np.float64)
    n_batches = min(n_batches, x.size)
    if n_batches < 2:
        raise DomainError("batch means needs at least two samples")
    size = x.size // n_batches
    start = x.size - size * n_batches
    b = x[start:].reshape(n_batches, size).mean(axis=1)
    return float(x.mean()), float(b.std(ddof=1) / math.sqrt(n_batches))


def simpson_weights(nodes) -> np.ndarray:
    """Quadrature weights for composite Simpson on a possibly uneven grid.

    Pairs of intervals use the uneven three-point rule; with an odd interval
    count the last interval is integrated by the quadratic through the last
    three nodes.
    """
    x = np.asarray(nodes, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise DomainError("need at least two quadrature nodes")
    h = np.diff(x)
    if np.any(h <= 0):
        raise DomainError("quadrature nodes must be strictly increasing")
    w = np.zeros_like(x)
    if x.size == 2:
        w[:] = h[0] / 2.0
        return w
    n_int = h.size
    last = n_int - (n_int % 2)
    for k in range(0, last, 2):
        h0, h1 = h[k], h[k + 1]
        c = (h0 + h1) / 6.0
        w[k] += c * (2.0 - h1 / h0)
        w[k + 1] += c * (h0 + h1) ** 2 / (h0 * h1)
        w[k + 2] += c * (2.0 - h0 / h1)
    if n_int % 2:
        h0, h1 = h[-2], h[-1]
        w[-1] += (2 * h1**2 + 3 * h0 * h1) / (6 * (h0 + h1))
        w[-2] += (h1**2 + 3 * h0 * h1) / (6 * h0)
        w[-3] -= h1**3 / (6 * h0 * (h0 + h1))
    return w


def log_2cosh(B: float) -> float:
    B = abs(float(B))
    return B + math.log1p(math.exp(-2.0 * B))
