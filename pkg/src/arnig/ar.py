"""AR(p) processes driven by i.i.d. NIG innovations.

``Y_t = rho_1 Y_{t-1} + ... + rho_p Y_{t-p} + eps_t`` with
``eps_t ~ NIG(alpha, beta, mu, delta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import signal

from .distributions import NigParams, SeedLike, as_generator, nig_log_pdf, nig_moments, sample_nig
from .special import DomainError

__all__ = [
    "TimeSeries",
    "ArNigModel",
    "AutocovarianceSet",
    "StationarityCheck",
    "check_stationarity",
    "simulate",
    "lag_matrix",
    "conditional_log_density",
    "log_likelihood",
    "theoretical_moments",
    "mean_formula",
    "ar2_variance",
    "ar3_variance",
    "ar3_variance_quartic_term",
]

STATIONARITY_MARGIN = 1e-10


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Ordered finite observations with an optional label."""

    values: NDArray[np.float64]
    label: str | None = None

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float).ravel()
        if v.size < 1:
            raise DomainError("a time series needs at least one value")
        if not np.all(np.isfinite(v)):
            raise DomainError("time series values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def _as_values(series: TimeSeries | ArrayLike) -> NDArray[np.float64]:
    if isinstance(series, TimeSeries):
        return series.values
    return TimeSeries(np.asarray(series, dtype=float)).values


class StationarityCheck(NamedTuple):
    stationary: bool
    moduli: NDArray[np.float64]
    roots: NDArray[np.complex128]


def check_stationarity(rho: ArrayLike) -> StationarityCheck:
    """Roots of ``1 - rho_1 z - ... - rho_p z**p`` and whether all lie outside the unit circle.

    Roots are the reciprocals of the nonzero companion-matrix eigenvalues;
    zero eigenvalues correspond to roots at infinity and are dropped.
    """
    rho = np.asarray(rho, dtype=float).ravel()
    if rho.size == 0:
        raise DomainError("need at least one AR coefficient")
    if not np.all(np.isfinite(rho)):
        raise DomainError("AR coefficients must be finite")
    p = rho.size
    companion = np.zeros((p, p))
    companion[0, :] = rho
    companion[1:, :-1] = np.eye(p - 1)
    eig = np.linalg.eigvals(companion)
    eig = eig[np.abs(eig) > 1e-14]
    roots = 1.0 / eig
    moduli = np.abs(roots)
    stationary = bool(np.all(moduli > 1.0 + STATIONARITY_MARGIN))
    order = np.argsort(moduli)
    return StationarityCheck(stationary, moduli[order], roots[order])


@dataclass(frozen=True, eq=False)
class ArNigModel:
    """AR coefficients ``rho`` and the NIG innovation law.

    Stationarity is verified on construction unless ``require_stationary``
    is false (fitted models from short samples may land outside the region).
    """

    rho: NDArray[np.float64]
    innovation: NigParams
    require_stationary: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        rho = np.array(self.rho, dtype=float).ravel()
        if rho.size < 1:
            raise DomainError("AR order must be at least 1")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        if self.require_stationary and not check_stationarity(rho).stationary:
            raise DomainError(f"AR coefficients {rho.tolist()} are not stationary")

    @property
    def p(self) -> int:
        return self.rho.size

    @property
    def stationary(self) -> bool:
        return check_stationarity(self.rho).stationary

    def as_dict(self) -> dict:
        return {"rho": self.rho.tolist(), **self.innovation.as_dict()}


@dataclass(frozen=True)
class AutocovarianceSet:
    """Autocovariances ``gamma_0..gamma_J`` and the innovation variance."""

    lags: NDArray[np.float64]
    sigma_eps2: float

    @property
    def variance(self) -> float:
        return float(self.lags[0])


def simulate(
    model: ArNigModel,
    n: int,
    burn_in: int = 500,
    seed: SeedLike = None,
    *,
    return_innovations: bool = False,
) -> TimeSeries | tuple[TimeSeries, NDArray[np.float64]]:
    """Simulate ``n`` observations of the model after discarding ``burn_in``.

    The first ``p`` values are plain innovation draws; the recursion starts
    from them.  With ``return_innovations`` the innovations aligned with the
    returned observations are returned too.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    if not model.stationary:
        raise DomainError("refusing to simulate a non-stationary model")
    rng = as_generator(seed)
    p = model.p
    eps = sample_nig(model.innovation, p + burn_in + n, rng)
    start = eps[:p]
    zi = signal.lfiltic([1.0], np.r_[1.0, -model.rho], start[::-1])
    tail, _ = signal.lfilter([1.0], np.r_[1.0, -model.rho], eps[p:], zi=zi)
    y = np.concatenate((start, tail))[-n:]
    ts = TimeSeries(y)
    if return_innovations:
        return ts, eps[-n:].copy()
    return ts


def lag_matrix(values: ArrayLike, p: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Targets ``y_t`` and lag rows ``(y_{t-1}, ..., y_{t-p})`` for ``t = p..n-1``."""
    y = np.asarray(values, dtype=float)
    if y.size <= p:
        raise DomainError(f"series of length {y.size} is too short for order {p}")
    x = np.column_stack([y[p - i : y.size - i] for i in range(1, p + 1)])
    return y[p:], x


def conditional_log_density(y_t: float, history: ArrayLike, model: ArNigModel) -> float:
    """Log density of ``y_t`` given ``history = (y_{t-1}, ..., y_{t-p})``.

    The conditional law is the innovation law shifted by ``rho . history``.
    """
    history = np.asarray(history, dtype=float).ravel()
    if history.size != model.p:
        raise DomainError(f"history must hold {model.p} values, got {history.size}")
    loc = float(model.rho @ history)
    inn = model.innovation
    return float(nig_log_pdf(y_t, NigParams(inn.alpha, inn.beta, inn.mu + loc, inn.delta)))


def log_likelihood(series: TimeSeries | ArrayLike, model: ArNigModel) -> float:
    """Conditional log-likelihood summed over ``t = p+1..n``."""
    y, x = lag_matrix(_as_values(series), model.p)
    return math.fsum(nig_log_pdf(y - x @ model.rho, model.innovation))


def theoretical_moments(model: ArNigModel, max_lag: int) -> AutocovarianceSet:
    """Autocovariances up to ``max_lag`` of the stationary process.

    ``gamma_0..gamma_p`` come from one linear solve of
    ``gamma_0 - sum rho_j gamma_j = sigma2`` and
    ``gamma_k - sum rho_j gamma_|k-j| = 0``, ``k = 1..p``; higher lags follow
    the recursion ``gamma_k = sum rho_j gamma_{k-j}``.
    """
    if not model.stationary:
        raise DomainError("autocovariances exist for stationary models only")
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    rho, p = model.rho, model.p
    sigma2 = nig_moments(model.innovation)[1]
    a = np.eye(p + 1)
    for k in range(p + 1):
        for j in range(1, p + 1):
            a[k, abs(k - j)] -= rho[j - 1]
    rhs = np.zeros(p + 1)
    rhs[0] = sigma2
    head = np.linalg.solve(a, rhs)
    gam = np.empty(max(max_lag, p) + 1)
    gam[: p + 1] = head
    for k in range(p + 1, gam.size):
        gam[k] = rho @ gam[k - p : k][::-1]
    return AutocovarianceSet(gam[: max_lag + 1].copy(), sigma2)


def mean_formula(model: ArNigModel) -> float:
    """Stationary mean ``(mu + delta*beta/gamma) / (1 - sum rho)``."""
    if not model.stationary:
        raise DomainError("the mean exists for stationary models only")
    return nig_moments(model.innovation)[0] / (1.0 - float(np.sum(model.rho)))


def ar2_variance(rho1: float, rho2: float, sigma2: float) -> float:
    """Closed-form stationary variance of an AR(2)."""
    den = 1 - rho2 - rho1**2 - rho2**2 - rho1**2 * rho2 + rho2**3
    return (1 - rho2) * sigma2 / den


def ar3_variance(rho1: float, rho2: float, rho3: float, sigma2: float) -> float:
    """Closed-form stationary variance of an AR(3).

    Matches the exact solution of the autocovariance equations.  It differs
    from :func:`ar3_variance_quartic_term` in one term: ``rho1*rho3**3`` where
    the variant has ``rho1*rho3**4``.
    """
    r1, r2, r3 = rho1, rho2, rho3
    num = 1 - r2 - r1 * r3 - r3**2
    den = (
        1 - r2 - r1 * r3 - r1**2 - r2**2 - 2 * r3**2 - r1**2 * r2 - r2**2 * r3**2
        - r1**2 * r3**2 - r1**3 * r3 - 4 * r1 * r2 * r3 + r2 * r3**2 + r1 * r3**3
        + r2**3 + r3**4 + r1 * r2**2 * r3
    )
    return num * sigma2 / den


def ar3_variance_quartic_term(rho1: float, rho2: float, rho3: float, sigma2: float) -> float:
    """Variant of :func:`ar3_variance` with a ``rho1*rho3**4`` denominator term (incorrect; kept for comparison)."""
    r1, r2, r3 = rho1, rho2, rho3
    num = 1 - r2 - r1 * r3 - r3**2
    den = (
        1 - r2 - r1 * r3 - r1**2 - r2**2 - 2 * r3**2 - r1**2 * r2 - r2**2 * r3**2
        - r1**2 * r3**2 - r1**3 * r3 - 4 * r1 * r2 * r3 + r2 * r3**2 + r1 * r3**4
        + r2**3 + r3**4 + r1 * r2**2 * r3
    )
    return num * sigma2 / den
