"""Seeded synthetic data sets used by the tests and the experiment scripts.

Forecast matrices here are built from a known future: ``u[t, k] = u_{t+k}``
plus optional forecast noise, so model-class membership is exact.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .data import DataSet, ForecastMatrix


def future_matrix(series: np.ndarray, horizons: Sequence[int], noise: float = 0.0, rng=None) -> ForecastMatrix:
    """Row t, horizon k holds series[t + k] (missing beyond the end) plus noise growing with k."""
    series = np.asarray(series, dtype=float)
    n = len(series)
    vals = np.full((n, len(horizons)), np.nan)
    for j, k in enumerate(horizons):
        vals[: n - k, j] = series[k:]
        if noise:
            vals[:, j] += noise * np.sqrt(k) * rng.standard_normal(n)
    return ForecastMatrix(tuple(horizons), vals)


def lowpass(u: np.ndarray, a: float) -> np.ndarray:
    """Reference first-order filter started at u[0]."""
    x = np.empty(len(u))
    x[0] = u[0]
    for t in range(1, len(u)):
        x[t] = a * x[t - 1] + (1 - a) * u[t]
    return x


def building_like(n: int = 1000, horizons: Sequence[int] = tuple(range(1, 7)), seed: int = 0, period: int = 24) -> DataSet:
    """Heat-load-like output driven by low-passed temperature, a daily profile and AR noise."""
    rng = np.random.default_rng(seed)
    s = np.arange(n + max(horizons))
    tod = (s % period) / period
    temp = 8 + 4 * np.sin(2 * np.pi * (tod - 0.3)) + np.cumsum(rng.normal(0, 0.3, len(s)))
    load = 40 - 2.5 * lowpass(temp, 0.9) + 3 * np.sin(2 * np.pi * tod) - 2 * np.cos(2 * np.pi * tod)
    e = np.zeros(len(s))
    for i in range(1, len(s)):
        e[i] = 0.6 * e[i - 1] + rng.normal(0, 0.5)
    y = (load + e)[:n]
    Ta = future_matrix(temp, horizons, 0.2, rng).rows(slice(0, n))
    tod_m = future_matrix(tod, horizons).rows(slice(0, n))
    return DataSet(np.arange(n, dtype=float), {"heatload": y}, {"Ta": Ta, "tod": tod_m})


def lp_recovery(n: int = 1500, a: float = 0.85, beta=(5.0, 2.0), noise_frac: float = 0.05,
                horizons: Sequence[int] = (1, 2, 3), seed: int = 0) -> DataSet:
    """y = beta0 + beta1 * lp(u; a) + noise with sd equal to ``noise_frac`` of the signal range."""
    rng = np.random.default_rng(seed)
    u = np.cumsum(rng.normal(0, 1, n)) * 0.3 + 3 * np.sin(2 * np.pi * np.arange(n) / 24)
    signal = beta[0] + beta[1] * lowpass(u, a)
    sd = noise_frac * (signal.max() - signal.min())
    y = signal + rng.normal(0, sd, n)
    return DataSet(np.arange(n, dtype=float), {"y": y}, {"u": future_matrix(u, horizons)})


def selection_case(n: int = 400, seed: int = 0, horizons: Sequence[int] = (1, 2), noise: float = 1.0) -> DataSet:
    """y = 2 + 3 u1 + noise; u2 is pure noise unrelated to y."""
    rng = np.random.default_rng(seed)
    u1 = rng.normal(0, 1, n)
    u2 = rng.normal(0, 1, n)
    y = 2 + 3 * u1 + rng.normal(0, noise, n)
    return DataSet(
        np.arange(n, dtype=float),
        {"y": y},
        {"u1": future_matrix(u1, horizons), "u2": future_matrix(u2, horizons)},
    )


def harmonic_case(n: int = 24 * 60, nharm: int = 3, seed: int = 0, period: int = 24,
                  horizons: Sequence[int] = (1,)) -> DataSet:
    """Daily profile made of ``nharm`` harmonics plus white noise."""
    rng = np.random.default_rng(seed)
    s = np.arange(n + max(horizons))
    tod = (s % period) / period
    y = 10.0 + sum((2.0 / j) * np.sin(2 * np.pi * j * tod + j) for j in range(1, nharm + 1))
    y = y[:n] + rng.normal(0, 0.3, n)
    return DataSet(np.arange(n, dtype=float), {"y": y}, {"tod": future_matrix(tod, horizons).rows(slice(0, n))})


def step_change(n: int = 600, before=(1.0, 2.0), after=(1.0, 4.0), noise: float = 0.05, seed: int = 0) -> DataSet:
    """y = b0 + b1 u + noise with the coefficients switching at n // 2."""
    rng = np.random.default_rng(seed)
    u = rng.normal(0, 1, n + 1)
    b = np.where(np.arange(n + 1)[:, None] < n // 2, before, after)
    y = b[:, 0] + b[:, 1] * u + rng.normal(0, noise, n + 1)
    return DataSet(np.arange(n, dtype=float), {"y": y[:n]}, {"u": future_matrix(u, (1,)).rows(slice(0, n))})
