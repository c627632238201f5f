"""Normal inverse Gaussian, inverse Gaussian and GIG posterior laws.

Parametrization follows the usual ``NIG(alpha, beta, mu, delta)`` form with
``gamma = sqrt(alpha**2 - beta**2)``.  A NIG variable is the normal
variance-mean mixture ``mu + beta*G + sqrt(G)*Z`` with ``G ~ IG(gamma, delta)``
and ``Z`` standard normal, which is how the samplers work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from .special import DomainError, bessel_k_ratio, log_bessel_k

__all__ = [
    "NigParams",
    "IgParams",
    "GigPosterior",
    "nig_pdf",
    "nig_log_pdf",
    "nig_cdf",
    "nig_moments",
    "ig_pdf",
    "ig_log_pdf",
    "ig_cdf",
    "sample_ig",
    "sample_nig",
    "gig_posterior_moments",
    "shift",
    "scale",
    "convolve",
    "standardize",
    "nig_closure",
    "as_generator",
]

SeedLike = int | np.random.Generator | np.random.SeedSequence | None


def as_generator(seed: SeedLike) -> np.random.Generator:
    """PCG64 generator from an int/SeedSequence, or pass an existing one through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class NigParams:
    """Parameters of ``NIG(alpha, beta, mu, delta)``.

    ``|beta| < alpha`` is enforced strictly: at ``|beta| = alpha`` the mixing
    law degenerates (``gamma = 0``) and the moments do not exist.
    """

    alpha: float
    beta: float
    mu: float
    delta: float

    def __post_init__(self) -> None:
        vals = (self.alpha, self.beta, self.mu, self.delta)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError(f"NIG parameters must be finite, got {vals}")
        if self.delta <= 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if not abs(self.beta) < self.alpha:
            raise DomainError(f"need |beta| < alpha, got alpha={self.alpha}, beta={self.beta}")

    @property
    def gamma(self) -> float:
        return math.sqrt(self.alpha**2 - self.beta**2)

    @property
    def mixing(self) -> IgParams:
        """Law of the latent variance ``G``."""
        return IgParams(self.gamma, self.delta)

    def as_dict(self) -> dict[str, float]:
        return {"alpha": self.alpha, "beta": self.beta, "mu": self.mu, "delta": self.delta}


@dataclass(frozen=True)
class IgParams:
    """Inverse Gaussian ``IG(gamma, delta)`` with mean ``delta/gamma``."""

    gamma: float
    delta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and math.isfinite(self.delta)):
            raise DomainError("IG parameters must be finite")
        if self.gamma <= 0 or self.delta <= 0:
            raise DomainError(f"IG needs gamma > 0 and delta > 0, got {self.gamma}, {self.delta}")

    @property
    def mean_param(self) -> float:
        """``mu_1 = delta/gamma`` of the mean/shape parametrization."""
        return self.delta / self.gamma

    @property
    def shape_param(self) -> float:
        """``lambda_1 = delta**2`` of the mean/shape parametrization."""
        return self.delta**2

    @property
    def mean(self) -> float:
        return self.delta / self.gamma

    @property
    def variance(self) -> float:
        return self.delta / self.gamma**3


@dataclass(frozen=True)
class GigPosterior:
    """Posterior of ``G`` given one innovation: ``GIG(-1, chi, psi)``.

    ``chi = delta*sqrt(phi(eps))`` and ``psi = alpha``; the density is
    proportional to ``g**-2 * exp(-(chi**2/g + psi**2*g)/2)``.
    """

    chi: float
    psi: float
    order: float = -1.0

    def __post_init__(self) -> None:
        if self.order != -1.0:
            raise DomainError("the NIG posterior always has order -1")
        if self.chi <= 0 or self.psi <= 0:
            raise DomainError("GIG posterior needs chi > 0 and psi > 0")

    @classmethod
    def from_innovation(cls, epsilon: float, params: NigParams) -> GigPosterior:
        z = (epsilon - params.mu) / params.delta
        return cls(chi=params.delta * math.sqrt(1.0 + z * z), psi=params.alpha)

    def moments(self) -> tuple[float, float]:
        """``(E[G], E[1/G])``."""
        arg = self.chi * self.psi
        s = self.chi / self.psi * bessel_k_ratio(0, 1, arg)
        w = self.psi / self.chi * bessel_k_ratio(2, 1, arg)
        return float(s), float(w)


# ---------------------------------------------------------------- densities


def nig_log_pdf(x: ArrayLike, params: NigParams) -> float | NDArray[np.float64]:
    """Log density of ``NIG(alpha, beta, mu, delta)``."""
    x = np.asarray(x, dtype=float)
    a, b, m, d = params.alpha, params.beta, params.mu, params.delta
    z = (x - m) / d
    root = np.sqrt(1.0 + z * z)  # sqrt(phi(x))
    out = (
        math.log(a / math.pi)
        + d * params.gamma
        - b * m
        - np.log(root)
        + log_bessel_k(1, d * a * root)
        + b * x
    )
    return float(out) if out.ndim == 0 else out


def nig_pdf(x: ArrayLike, params: NigParams) -> float | NDArray[np.float64]:
    """Density of ``NIG(alpha, beta, mu, delta)``."""
    return np.exp(nig_log_pdf(x, params))


def ig_log_pdf(x: ArrayLike, params: IgParams) -> float | NDArray[np.float64]:
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("IG density is defined for x > 0 only")
    g, d = params.gamma, params.delta
    out = (
        math.log(d / math.sqrt(2 * math.pi))
        + d * g
        - 1.5 * np.log(x)
        - 0.5 * (d * d / x + g * g * x)
    )
    return float(out) if out.ndim == 0 else out


def ig_pdf(x: ArrayLike, params: IgParams) -> float | NDArray[np.float64]:
    """Density of ``IG(gamma, delta)``; ``x`` must be positive."""
    return np.exp(ig_log_pdf(x, params))


def nig_moments(params: NigParams) -> tuple[float, float, float, float]:
    """Mean, variance, skewness and excess kurtosis in closed form."""
    a, b, m, d, g = params.alpha, params.beta, params.mu, params.delta, params.gamma
    mean = m + d * b / g
    var = d * a * a / g**3
    skew = 3.0 * b / (a * math.sqrt(d * g))
    kurt = 3.0 * (1.0 + 4.0 * b * b / (a * a)) / (d * g)
    return mean, var, skew, kurt


# ---------------------------------------------------------- numerical CDFs

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _cumulative_mass(
    pdf: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    points: NDArray[np.float64],
    lower: float,
    step: float,
) -> NDArray[np.float64]:
    """Integral of ``pdf`` from ``lower`` to each of ``points`` (any order).

    Gaps between consecutive sorted points are split into panels of width at
    most ``step`` and integrated with 16-point Gauss-Legendre, all at once.
    """
    order = np.argsort(points)
    xs = points[order]
    knots = np.concatenate(([lower], xs))
    gaps = np.diff(knots)
    npanel = np.maximum(1, np.ceil(gaps / step).astype(np.int64))
    owner = np.repeat(np.arange(len(gaps)), npanel)
    local = np.arange(len(owner)) - np.repeat(np.cumsum(npanel) - npanel, npanel)
    width = gaps[owner] / npanel[owner]
    left = knots[owner] + local * width
    half = 0.5 * width
    nodes = left[:, None] + half[:, None] * (1.0 + _GL_NODES[None, :])
    panel = half * (pdf(nodes.ravel()).reshape(nodes.shape) @ _GL_WEIGHTS)
    per_gap = np.bincount(owner, weights=panel, minlength=len(gaps))
    out = np.empty_like(xs)
    out[order] = np.cumsum(per_gap)
    return out


def nig_cdf(x: ArrayLike, params: NigParams) -> float | NDArray[np.float64]:
    """Distribution function of the NIG law by quadrature of its density.

    The left tail up to ``mean - 40 sd`` is handled with adaptive quadrature;
    the rest by panelled Gauss-Legendre.  The result is normalized by the
    numerically computed total mass.
    """
    x = np.asarray(x, dtype=float)
    mean, var, _, _ = nig_moments(params)
    sd = math.sqrt(var)
    step = min(sd, params.delta) / 4.0

    def pdf(t: NDArray[np.float64]) -> NDArray[np.float64]:
        return nig_pdf(t, params)

    lo, hi = mean - 40.0 * sd, mean + 40.0 * sd
    tail_lo = integrate.quad(lambda t: nig_pdf(t, params), -np.inf, lo, epsabs=0, epsrel=1e-12)[0]
    tail_hi = integrate.quad(lambda t: nig_pdf(t, params), hi, np.inf, epsabs=0, epsrel=1e-12)[0]
    clipped = np.clip(x.ravel(), lo, hi)
    body = _cumulative_mass(pdf, np.append(clipped, hi), lo, step)
    total = tail_lo + body[-1] + tail_hi
    cdf = (tail_lo + body[:-1]) / total
    below = x.ravel() < lo
    if np.any(below):
        cdf[below] = [
            integrate.quad(lambda t: nig_pdf(t, params), -np.inf, v, epsabs=0, epsrel=1e-10)[0] / total
            for v in x.ravel()[below]
        ]
    above = x.ravel() > hi
    if np.any(above):
        cdf[above] = [
            1.0 - integrate.quad(lambda t: nig_pdf(t, params), v, np.inf, epsabs=0, epsrel=1e-10)[0] / total
            for v in x.ravel()[above]
        ]
    cdf = np.clip(cdf, 0.0, 1.0).reshape(x.shape)
    return float(cdf) if cdf.ndim == 0 else cdf


def ig_cdf(x: ArrayLike, params: IgParams) -> float | NDArray[np.float64]:
    """IG distribution function by quadrature of the density."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("IG distribution function is defined for x > 0 only")

    def pdf(t: NDArray[np.float64]) -> NDArray[np.float64]:
        return ig_pdf(t, params)

    mean, sd = params.mean, math.sqrt(params.variance)
    step = min(sd, mean) / 8.0
    hi = mean + 60.0 * sd
    tail = integrate.quad(lambda t: ig_pdf(t, params), hi, np.inf, epsabs=0, epsrel=1e-12)[0]
    body = _cumulative_mass(pdf, np.append(np.minimum(x.ravel(), hi), hi), 0.0, step)
    cdf = body[:-1] / (body[-1] + tail)
    cdf = np.clip(cdf, 0.0, 1.0).reshape(x.shape)
    return float(cdf) if cdf.ndim == 0 else cdf


# ---------------------------------------------------------------- samplers


def sample_ig(params: IgParams, n: int, seed: SeedLike = None) -> NDArray[np.float64]:
    """Draw ``n`` IG variates by the transformation-with-multiple-roots method.

    With ``mu1 = delta/gamma`` and ``lam1 = delta**2``: draw ``Y = Z**2``,
    take the smaller root ``X1`` of the quadratic, then keep ``X1`` when
    ``U <= mu1/(mu1 + X1)`` and return ``mu1**2/X1`` otherwise.  ``X1`` is
    computed as ``mu1**2 / X2`` from the larger root, which is the same
    number without the cancellation of the subtractive form.

    Draw order is ``n`` normals then ``n`` uniforms on ``[0, 1)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_generator(seed)
    mu1, lam1 = params.mean_param, params.shape_param
    y = rng.standard_normal(n) ** 2
    u = rng.random(n)
    big = mu1 + mu1 * mu1 * y / (2 * lam1) + mu1 / (2 * lam1) * np.sqrt(4 * mu1 * lam1 * y + (mu1 * y) ** 2)
    x1 = mu1 * mu1 / big
    return np.where(u <= mu1 / (mu1 + x1), x1, mu1 * mu1 / x1)


def sample_nig(params: NigParams, n: int, seed: SeedLike = None) -> NDArray[np.float64]:
    """Draw ``n`` NIG variates as ``mu + beta*G + sqrt(G)*Z``."""
    rng = as_generator(seed)
    g = sample_ig(params.mixing, n, rng)
    z = rng.standard_normal(n)
    return params.mu + params.beta * g + np.sqrt(g) * z


# ------------------------------------------------------ posterior moments


def gig_posterior_moments(
    epsilon: ArrayLike, params: NigParams
) -> tuple[float | NDArray[np.float64], float | NDArray[np.float64]]:
    """``s = E[G | eps]`` and ``w = E[1/G | eps]`` under ``GIG(-1, delta*sqrt(phi), alpha)``.

    Vectorized over ``epsilon``.
    """
    eps = np.asarray(epsilon, dtype=float)
    z = (eps - params.mu) / params.delta
    chi = params.delta * np.sqrt(1.0 + z * z)
    arg = params.alpha * chi
    # K_{-2}/K_{-1} = K_2/K_1; one log-Bessel evaluation per order
    lk0, lk1, lk2 = (log_bessel_k(order, arg) for order in (0, 1, 2))
    s = chi / params.alpha * np.exp(lk0 - lk1)
    w = params.alpha / chi * np.exp(lk2 - lk1)
    if eps.ndim == 0:
        return float(s), float(w)
    return s, w


# -------------------------------------------------------------- closure


def shift(params: NigParams, c: float) -> NigParams:
    """Law of ``X + c``."""
    return NigParams(params.alpha, params.beta, params.mu + c, params.delta)


def scale(params: NigParams, c: float) -> NigParams:
    """Law of ``c * X`` for ``c > 0``."""
    if not c > 0:
        raise DomainError(f"scale factor must be positive, got {c}")
    return NigParams(params.alpha / c, params.beta / c, c * params.mu, c * params.delta)


def convolve(a: NigParams, b: NigParams) -> NigParams:
    """Law of ``X1 + X2`` for independent NIG variables sharing ``(alpha, beta)``."""
    if a.alpha != b.alpha or a.beta != b.beta:
        raise DomainError("convolution needs equal alpha and beta")
    return NigParams(a.alpha, a.beta, a.mu + b.mu, a.delta + b.delta)


def standardize(params: NigParams) -> NigParams:
    """Law of ``(X - mu) / delta``."""
    return NigParams(params.alpha * params.delta, params.beta * params.delta, 0.0, 1.0)


def nig_closure(op: str, params: NigParams, other: NigParams | float | None = None) -> NigParams:
    """Dispatch to :func:`shift`, :func:`scale`, :func:`convolve` or :func:`standardize` by name."""
    if op == "shift":
        return shift(params, float(other))
    if op == "scale":
        return scale(params, float(other))
    if op == "convolve":
        if not isinstance(other, NigParams):
            raise DomainError("convolve needs a second NigParams")
        return convolve(params, other)
    if op == "standardize":
        return standardize(params)
    raise ValueError(f"unknown closure operation {op!r}")
