"""Empirical diagnostics: PACF order selection, detrending, variance
segmentation, KS tests, kernel density estimates and simulated quantile fans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .ar import ArNigModel, TimeSeries, _as_values, simulate
from .special import DomainError

__all__ = [
    "pacf",
    "OrderSelection",
    "select_order",
    "DetrendResult",
    "detrend_polynomial",
    "SegmentationResult",
    "segment_by_variance",
    "KsResult",
    "ks_one_sample",
    "ks_two_sample",
    "silverman_bandwidth",
    "kde",
    "QuantileFan",
    "quantile_fan",
    "qq_pairs",
]


# -------------------------------------------------------------------- PACF


def _acov(x: NDArray[np.float64], max_lag: int) -> NDArray[np.float64]:
    x = x - x.mean()
    n = x.size
    return np.array([x[k:] @ x[: n - k] / n for k in range(max_lag + 1)])


def pacf(series: TimeSeries | ArrayLike, max_lag: int) -> NDArray[np.float64]:
    """Partial autocorrelations at lags ``0..max_lag`` (Durbin-Levinson).

    Index 0 holds 1.0 so that ``out[k]`` is the value at lag ``k``.
    """
    x = _as_values(series)
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if max_lag >= x.size / 4:
        raise ValueError(f"max_lag must be below n/4 = {x.size / 4}")
    r = _acov(x, max_lag)
    if not r[0] > 0:
        raise DomainError("PACF of a constant series is undefined")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    phi = np.zeros(0)
    v = r[0]
    for k in range(1, max_lag + 1):
        a = (r[k] - phi @ r[k - 1 : 0 : -1]) / v
        phi = np.r_[phi - a * phi[::-1], a]
        v *= 1.0 - a * a
        out[k] = a
    return out


class OrderSelection(NamedTuple):
    order: int
    pacf: NDArray[np.float64]
    significant: bool
    band: float


def select_order(series: TimeSeries | ArrayLike, max_lag: int) -> OrderSelection:
    """Lag ``>= 1`` of the largest ``|PACF|``, with its significance against ``1.96/sqrt(n)``."""
    x = _as_values(series)
    values = pacf(x, max_lag)
    order = int(np.argmax(np.abs(values[1:]))) + 1
    band = 1.96 / math.sqrt(x.size)
    return OrderSelection(order, values, bool(abs(values[order]) > band), band)


# --------------------------------------------------------------- detrending


@dataclass(frozen=True, eq=False)
class DetrendResult:
    """Polynomial trend on the time index mapped to ``[-1, 1]``."""

    degree: int
    coefficients: NDArray[np.float64]
    trend: TimeSeries
    residual: TimeSeries

    def evaluate(self, index: ArrayLike) -> NDArray[np.float64]:
        """Trend at (possibly fractional or out-of-sample) integer time positions."""
        n = len(self.trend)
        t = _normalized_index(np.asarray(index, dtype=float), n)
        return np.polynomial.polynomial.polyval(t, self.coefficients)


def _normalized_index(index: NDArray[np.float64], n: int) -> NDArray[np.float64]:
    return 2.0 * index / (n - 1) - 1.0 if n > 1 else np.zeros_like(index)


def detrend_polynomial(series: TimeSeries | ArrayLike, degree: int) -> DetrendResult:
    """Least-squares polynomial trend of the given degree and the residual."""
    y = _as_values(series)
    n = y.size
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if degree >= n / 10:
        raise ValueError(f"degree {degree} too high for {n} points (need degree < n/10)")
    t = _normalized_index(np.arange(n, dtype=float), n)
    basis = np.vander(t, degree + 1, increasing=True)
    coef, _, rank, _ = np.linalg.lstsq(basis, y, rcond=None)
    if rank <= degree:
        raise DomainError("polynomial design matrix is rank deficient")
    trend = basis @ coef
    label = getattr(series, "label", None)
    return DetrendResult(degree, coef, TimeSeries(trend, label), TimeSeries(y - trend, label))


# ------------------------------------------------------------- segmentation


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    """Breakpoints of the variance segmentation.

    ``breakpoints`` are start indices of every segment but the first;
    ``segments`` are half-open ``(start, stop)`` pairs covering the series.
    """

    breakpoints: list[int]
    statistic_path: NDArray[np.float64]
    segments: list[tuple[int, int]]
    gain: list[float]


def _line_sse_prefix(c: NDArray[np.float64]):
    """Closures giving the SSE of a least-squares line through ``c[a:b]`` in O(1)."""
    k = np.arange(c.size, dtype=float)
    pre = [np.r_[0.0, np.cumsum(v)] for v in (np.ones_like(c), k, k * k, c, k * c, c * c)]

    def sse(a: int, b: int) -> NDArray[np.float64] | float:
        s0, s1, s2, sy, sxy, syy = (p[b] - p[a] for p in pre)
        sxx = s2 - s1 * s1 / s0
        sxy_c = sxy - s1 * sy / s0
        syy_c = syy - sy * sy / s0
        with np.errstate(divide="ignore", invalid="ignore"):
            out = syy_c - np.where(sxx > 0, sxy_c * sxy_c / np.where(sxx > 0, sxx, 1.0), 0.0)
        return np.maximum(out, 0.0)

    return sse


def _best_split(c: NDArray[np.float64], min_size: int) -> tuple[int, float] | None:
    n = c.size
    if n < 2 * min_size:
        return None
    sse = _line_sse_prefix(c)
    ks = np.arange(min_size, n - min_size + 1)
    total = sse(np.zeros_like(ks), ks) + sse(ks, np.full_like(ks, n))
    whole = float(sse(0, n))
    baseline = float(((c - c.mean()) ** 2).sum())
    if baseline <= 0:
        return None
    i = int(np.argmin(total))
    return int(ks[i]), (whole - float(total[i])) / baseline


def segment_by_variance(
    series: TimeSeries | ArrayLike,
    threshold: float = 0.05,
    min_size: int = 20,
    max_depth: int = 0,
) -> SegmentationResult:
    """Split a series where its variance changes.

    The statistic is the cumulative sum of squares ``C_k``, piecewise linear
    under a variance change.  Every breakpoint is tried; the one whose
    two-line fit to ``C_k`` has the smallest squared error wins.  The split is
    accepted when the drop in squared error, relative to the total variation
    of ``C_k`` about its mean, exceeds ``threshold``.  ``max_depth`` allows
    that many further splitting rounds inside each accepted segment.
    """
    x = _as_values(series)
    if x.size < 50:
        raise DomainError("segmentation needs at least 50 points")
    c = np.cumsum(x * x)
    if not c[-1] > 0:
        raise DomainError("segmentation needs a series that is not identically zero")
    breaks: list[int] = []
    gains: list[float] = []

    def recurse(a: int, b: int, depth: int) -> None:
        found = _best_split(np.cumsum(x[a:b] ** 2), min_size)
        if found is None:
            return
        k, gain = found
        if gain <= threshold:
            return
        breaks.append(a + k)
        gains.append(gain)
        if depth < max_depth:
            recurse(a, a + k, depth + 1)
            recurse(a + k, b, depth + 1)

    recurse(0, x.size, 0)
    order = np.argsort(breaks)
    breaks = [breaks[i] for i in order]
    gains = [gains[i] for i in order]
    edges = [0, *breaks, x.size]
    return SegmentationResult(breaks, c, list(zip(edges[:-1], edges[1:])), gains)


# ------------------------------------------------------------------ KS tests


class KsResult(NamedTuple):
    statistic: float
    p_value: float


def ks_one_sample(series: TimeSeries | ArrayLike, cdf: Callable[[NDArray[np.float64]], ArrayLike]) -> KsResult:
    """One-sample KS test against a vectorized distribution function.

    The p-value comes from the asymptotic Kolmogorov distribution.
    """
    x = np.sort(_as_values(series))
    n = x.size
    if n < 10:
        raise ValueError("KS test needs at least 10 observations")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - f)), float(np.max(f - (i - 1) / n)))
    return KsResult(d, float(special.kolmogorov(math.sqrt(n) * d)))


def ks_two_sample(a: TimeSeries | ArrayLike, b: TimeSeries | ArrayLike) -> KsResult:
    """Two-sample KS test with the asymptotic p-value."""
    xa, xb = np.sort(_as_values(a)), np.sort(_as_values(b))
    n, m = xa.size, xb.size
    if n < 10 or m < 10:
        raise ValueError("KS test needs at least 10 observations per sample")
    pooled = np.concatenate((xa, xb))
    fa = np.searchsorted(xa, pooled, side="right") / n
    fb = np.searchsorted(xb, pooled, side="right") / m
    d = float(np.max(np.abs(fa - fb)))
    return KsResult(d, float(special.kolmogorov(math.sqrt(n * m / (n + m)) * d)))


# ----------------------------------------------------------------------- KDE


def silverman_bandwidth(x: ArrayLike) -> float:
    """``0.9 * min(sd, IQR/1.34) * n**(-1/5)``."""
    x = np.asarray(x, dtype=float)
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    return 0.9 * spread * x.size ** (-0.2)


def kde(
    series: TimeSeries | ArrayLike, grid: ArrayLike, bandwidth: float | None = None, chunk: int = 2048
) -> NDArray[np.float64]:
    """Gaussian kernel density estimate evaluated on ``grid``."""
    x = _as_values(series)
    if x.size < 2:
        raise ValueError("KDE needs at least 2 observations")
    if np.ptp(x) == 0:
        raise DomainError("KDE of a zero-variance sample is undefined")
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    g = np.asarray(grid, dtype=float)
    out = np.zeros(g.size)
    for start in range(0, x.size, chunk):
        u = (g.ravel()[:, None] - x[None, start : start + chunk]) / h
        out += np.exp(-0.5 * u * u).sum(axis=1)
    return (out / (x.size * h * math.sqrt(2 * math.pi))).reshape(g.shape)


def qq_pairs(sample: ArrayLike, reference: ArrayLike, n_points: int | None = None) -> NDArray[np.float64]:
    """Matched empirical quantiles ``(sample_q, reference_q)`` at common probabilities."""
    a, b = np.asarray(sample, dtype=float), np.asarray(reference, dtype=float)
    k = n_points or min(a.size, b.size)
    probs = (np.arange(1, k + 1) - 0.5) / k
    return np.column_stack((np.quantile(a, probs), np.quantile(b, probs)))


# -------------------------------------------------------------- quantile fan


@dataclass(frozen=True, eq=False)
class QuantileFan:
    levels: NDArray[np.float64]
    paths: NDArray[np.float64]
    n_trajectories: int


def quantile_fan(
    model: ArNigModel,
    trend: DetrendResult | ArrayLike | None,
    n_steps: int,
    n_paths: int = 1000,
    levels: Sequence[float] = tuple(np.round(np.arange(0.1, 0.91, 0.1), 10)),
    seed: int = 0,
    burn_in: int = 500,
) -> QuantileFan:
    """Per-time quantiles over simulated trajectories with the trend added back.

    Trajectory ``i`` uses the ``i``-th child of ``SeedSequence(seed)``, so
    each path is reproducible on its own.
    """
    lv = np.asarray(levels, dtype=float)
    if lv.size == 0 or np.any(lv <= 0) or np.any(lv >= 1) or np.any(np.diff(lv) <= 0):
        raise ValueError("levels must be strictly increasing inside (0, 1)")
    if not model.stationary:
        raise DomainError("quantile fan needs a stationary model")
    if trend is None:
        offset = np.zeros(n_steps)
    elif isinstance(trend, DetrendResult):
        offset = trend.evaluate(np.arange(n_steps))
    else:
        offset = np.asarray(trend, dtype=float)[:n_steps]
        if offset.size != n_steps:
            raise ValueError("trend is shorter than n_steps")
    children = np.random.SeedSequence(seed).spawn(n_paths)
    sims = np.empty((n_paths, n_steps))
    for i, child in enumerate(children):
        sims[i] = simulate(model, n_steps, burn_in, np.random.default_rng(child)).values
    paths = np.quantile(sims + offset, lv, axis=0)
    paths = np.maximum.accumulate(paths, axis=0)
    return QuantileFan(lv, paths, n_paths)
