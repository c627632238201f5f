"""EM estimation of AR(p)-NIG models and the Yule-Walker / CLS baselines.

The EM treats the mixing variables ``G_t`` of the innovations as missing
data.  Given the current parameters the posterior of each ``G_t`` is
``GIG(-1, delta*sqrt(phi(eps_t)), alpha)``, whose moments ``s_t = E[G_t]``
and ``w_t = E[1/G_t]`` drive closed-form updates:

* ``rho``: weighted normal equations
  ``(sum w_t Y_{t-1} Y_{t-1}^T) rho = sum (w_t y_t - mu w_t - beta) Y_{t-1}``
* ``mu, beta``: joint stationary point of the expected log-likelihood
* ``delta = sqrt(s_bar / (s_bar w_bar - 1))``, ``gamma = delta / s_bar``,
  ``alpha = sqrt(gamma**2 + beta**2)``

Iteration stops once the largest relative change of ``alpha``, ``delta`` and
each ``rho_i`` drops below the tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .ar import ArNigModel, TimeSeries, _as_values, lag_matrix
from .distributions import NigParams, gig_posterior_moments, nig_log_pdf
from .special import DomainError

__all__ = [
    "EmConfig",
    "EmState",
    "EstimationReport",
    "EstimationError",
    "em_e_step",
    "em_m_step",
    "em_fit",
    "fit_innovations",
    "yw_coefficients",
    "yw_from_autocovariances",
    "cls_coefficients",
    "yw_fit",
    "cls_fit",
    "relative_change",
    "initial_innovation",
]

log = logging.getLogger(__name__)

Method = Literal["EM", "YW", "CLS"]


class EstimationError(ArithmeticError):
    """An update is undefined: singular normal equations or ``s_bar*w_bar <= 1``."""


@dataclass(frozen=True)
class EmConfig:
    """Settings of the EM iteration.

    ``symmetric`` fixes ``mu = beta = 0`` (the setting of all the
    reference experiments); with it off, ``mu`` and ``beta`` are updated too
    and must also settle to within ``tolerance`` in absolute terms.
    """

    tolerance: float = 1e-4
    max_iterations: int = 500
    symmetric: bool = True
    initial: ArNigModel | None = None

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True, eq=False)
class EmState:
    """Result of an E-step at parameters ``theta``."""

    theta: ArNigModel
    residuals: NDArray[np.float64]
    s: NDArray[np.float64]
    w: NDArray[np.float64]
    loglik: float

    @property
    def s_bar(self) -> float:
        return float(self.s.mean())

    @property
    def w_bar(self) -> float:
        return float(self.w.mean())

    @property
    def eps_bar(self) -> float:
        return float(self.residuals.mean())


@dataclass(frozen=True, eq=False)
class EstimationReport:
    method: Method
    fitted: ArNigModel
    iterations: int
    loglik_path: list[float]
    converged: bool
    residuals: TimeSeries
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "order": self.fitted.p,
            "params": self.fitted.as_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "loglik_path": list(self.loglik_path),
            "notes": list(self.notes),
        }


# ----------------------------------------------------------------- helpers


def relative_change(new: NDArray[np.float64], old: NDArray[np.float64], floor: float = 1e-12) -> float:
    """Largest component-wise ``|new - old| / |old|``; absolute change where ``|old| < floor``."""
    new, old = np.atleast_1d(new), np.atleast_1d(old)
    diff = np.abs(new - old)
    den = np.abs(old)
    rel = np.where(den < floor, diff, diff / np.where(den < floor, 1.0, den))
    return float(rel.max())


def _innovation_update(
    eps: NDArray[np.float64], s: NDArray[np.float64], w: NDArray[np.float64], symmetric: bool
) -> NigParams:
    """M-step for ``(alpha, beta, mu, delta)`` given residuals and posterior moments."""
    s_bar, w_bar = float(s.mean()), float(w.mean())
    sw = s_bar * w_bar
    if not sw > 1.0:
        raise EstimationError(f"s_bar*w_bar = {sw!r} <= 1, delta update undefined")
    if symmetric:
        beta = mu = 0.0
    else:
        n = eps.size
        eps_bar = float(eps.mean())
        beta = (float(w @ eps) - n * w_bar * eps_bar) / (n * (1.0 - sw))
        mu = (float(w @ eps) - n * beta) / (n * w_bar)
    delta = math.sqrt(s_bar / (sw - 1.0))
    gamma = delta / s_bar
    alpha = math.sqrt(gamma * gamma + beta * beta)
    return NigParams(alpha, beta, mu, delta)


def initial_innovation(eps: NDArray[np.float64]) -> NigParams:
    """Symmetric starting law matching the sample variance with ``delta*alpha = 1``."""
    var = float(np.var(eps))
    if not var > 0:
        raise EstimationError("residuals have zero variance")
    return NigParams(1.0 / math.sqrt(var), 0.0, 0.0, math.sqrt(var))


def _loglik(eps: NDArray[np.float64], params: NigParams) -> float:
    return math.fsum(nig_log_pdf(eps, params))


# ------------------------------------------------------------------ EM core


def em_e_step(series: TimeSeries | NDArray[np.float64], theta: ArNigModel) -> EmState:
    """Residuals ``eps_t = y_t - rho . Y_{t-1}`` (``t = p+1..n``) and their posterior moments."""
    y, x = lag_matrix(_as_values(series), theta.p)
    eps = y - x @ theta.rho
    s, w = gig_posterior_moments(eps, theta.innovation)
    return EmState(theta, eps, s, w, _loglik(eps, theta.innovation))


def em_m_step(state: EmState, series: TimeSeries | NDArray[np.float64], config: EmConfig = EmConfig()) -> ArNigModel:
    """Maximize the expected complete-data log-likelihood given ``state``.

    ``rho`` is solved first at the current ``(mu, beta)``; then the
    innovation law is updated from the new residuals.
    """
    inn = state.theta.innovation
    y, x = lag_matrix(_as_values(series), state.theta.p)
    w = state.w
    gram = (x * w[:, None]).T @ x
    rhs = x.T @ (w * y - inn.mu * w - inn.beta)
    try:
        rho = linalg.solve(gram, rhs, assume_a="pos")
    except (linalg.LinAlgError, ValueError) as exc:
        raise EstimationError("weighted Gram matrix is singular") from exc
    eps = y - x @ rho
    params = _innovation_update(eps, state.s, w, config.symmetric)
    return ArNigModel(rho, params, require_stationary=False)


def _converged(new: ArNigModel, old: ArNigModel, config: EmConfig, with_rho: bool = True) -> tuple[bool, float]:
    a, b = new.innovation, old.innovation
    parts = [relative_change(np.array([a.alpha, a.delta]), np.array([b.alpha, b.delta]))]
    if with_rho:
        parts.append(relative_change(new.rho, old.rho))
    change = max(parts)
    ok = change < config.tolerance
    if not config.symmetric:
        ok = ok and abs(a.mu - b.mu) < config.tolerance and abs(a.beta - b.beta) < config.tolerance
    return ok, change


def em_fit(series: TimeSeries | NDArray[np.float64], p: int, config: EmConfig = EmConfig()) -> EstimationReport:
    """Fit an AR(p)-NIG model by EM.

    Starts from Yule-Walker coefficients and :func:`initial_innovation` of
    their residuals unless ``config.initial`` is given.  Not converging
    within ``max_iterations`` is reported, not raised.
    """
    values = _as_values(series)
    if p < 1:
        raise ValueError("order p must be >= 1")
    if values.size <= p + 1:
        raise DomainError(f"series of length {values.size} is too short for order {p}")
    if config.initial is not None:
        theta = config.initial
        if theta.p != p:
            raise ValueError("initial model order does not match p")
    else:
        rho0 = yw_coefficients(values, p)
        y, x = lag_matrix(values, p)
        theta = ArNigModel(rho0, initial_innovation(y - x @ rho0), require_stationary=False)
    if config.symmetric and (theta.innovation.mu != 0 or theta.innovation.beta != 0):
        inn = theta.innovation
        theta = replace(theta, innovation=NigParams(inn.alpha, 0.0, 0.0, inn.delta))

    path: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        state = em_e_step(values, theta)
        path.append(state.loglik)
        new = em_m_step(state, values, config)
        done, change = _converged(new, theta, config)
        theta = new
        if done:
            converged = True
            break
    final = em_e_step(values, theta)
    path.append(final.loglik)
    if not converged:
        log.info("EM stopped after %d iterations without converging", iterations)
    fitted = ArNigModel(theta.rho, theta.innovation, require_stationary=False)
    return EstimationReport("EM", fitted, iterations, path, converged, TimeSeries(final.residuals))


def fit_innovations(
    residuals: NDArray[np.float64], config: EmConfig = EmConfig(), initial: NigParams | None = None
) -> tuple[NigParams, int, list[float], bool]:
    """EM for the NIG law alone, on fixed residuals.

    Returns ``(params, iterations, loglik_path, converged)``.
    """
    eps = np.asarray(residuals, dtype=float)
    params = initial if initial is not None else initial_innovation(eps)
    path: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        path.append(_loglik(eps, params))
        s, w = gig_posterior_moments(eps, params)
        new = _innovation_update(eps, s, w, config.symmetric)
        old_m = ArNigModel([0.0], params, require_stationary=False)
        new_m = ArNigModel([0.0], new, require_stationary=False)
        done, _ = _converged(new_m, old_m, config, with_rho=False)
        params = new
        if done:
            converged = True
            break
    path.append(_loglik(eps, params))
    return params, iterations, path, converged


# --------------------------------------------------------------- baselines


def _autocovariance(values: NDArray[np.float64], max_lag: int) -> NDArray[np.float64]:
    x = values - values.mean()
    n = x.size
    return np.array([x[k:] @ x[: n - k] / n for k in range(max_lag + 1)])


def yw_coefficients(series: TimeSeries | NDArray[np.float64], p: int) -> NDArray[np.float64]:
    """Yule-Walker coefficients from the biased sample autocovariances."""
    values = _as_values(series)
    if values.size <= p:
        raise DomainError(f"series of length {values.size} is too short for order {p}")
    return yw_from_autocovariances(_autocovariance(values, p), p)


def yw_from_autocovariances(acov: ArrayLike, p: int) -> NDArray[np.float64]:
    """Solve the Yule-Walker system given autocovariances ``gamma_0..gamma_p``."""
    acov = np.asarray(acov, dtype=float)
    if acov.size < p + 1:
        raise ValueError(f"need {p + 1} autocovariances, got {acov.size}")
    if not acov[0] > 0:
        raise EstimationError("autocovariance matrix is singular (constant series)")
    try:
        return linalg.solve_toeplitz(acov[:p], acov[1 : p + 1])
    except linalg.LinAlgError as exc:
        raise EstimationError("autocovariance matrix is singular") from exc


def cls_coefficients(series: TimeSeries | NDArray[np.float64], p: int) -> NDArray[np.float64]:
    """Least squares regression of ``y_t`` on ``(y_{t-1}, ..., y_{t-p})``, no intercept."""
    y, x = lag_matrix(_as_values(series), p)
    coef, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
    if rank < p:
        raise EstimationError("lag design matrix is rank deficient")
    return coef


def _two_stage(method: Method, values: NDArray[np.float64], rho: NDArray[np.float64], config: EmConfig) -> EstimationReport:
    y, x = lag_matrix(values, rho.size)
    eps = y - x @ rho
    params, iterations, path, converged = fit_innovations(eps, config)
    fitted = ArNigModel(rho, params, require_stationary=False)
    return EstimationReport(method, fitted, iterations, path, converged, TimeSeries(eps))


def yw_fit(series: TimeSeries | NDArray[np.float64], p: int, config: EmConfig = EmConfig()) -> EstimationReport:
    """Yule-Walker ``rho``, then EM for the innovation law on the residuals."""
    values = _as_values(series)
    return _two_stage("YW", values, yw_coefficients(values, p), config)


def cls_fit(series: TimeSeries | NDArray[np.float64], p: int, config: EmConfig = EmConfig()) -> EstimationReport:
    """Conditional least squares ``rho``, then EM for the innovation law on the residuals."""
    values = _as_values(series)
    return _two_stage("CLS", values, cls_coefficients(values, p), config)
