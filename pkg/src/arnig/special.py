"""Modified Bessel function of the third kind and its stable log/ratio forms.

``K_nu(x)`` enters the NIG density through ``K_1`` and the posterior moments
of the latent mixing variable through ``K_0/K_1`` and ``K_2/K_1``.  The
arguments reach several hundred for wide-scale innovations, where ``K_nu``
itself underflows while the ratios stay O(1), so everything is routed through
:func:`log_bessel_k`.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

__all__ = ["DomainError", "bessel_k", "log_bessel_k", "bessel_k_ratio"]


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a function or law."""


def _check(order: float, x: ArrayLike) -> NDArray[np.float64]:
    if not np.isfinite(order):
        raise DomainError(f"Bessel order must be finite, got {order!r}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("Bessel argument must be finite")
    if np.any(x <= 0):
        raise DomainError("Bessel argument must be strictly positive")
    return x


def log_bessel_k(order: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """Natural log of ``K_order(x)``.

    Evaluated as ``log(kve(|order|, x)) - x`` where ``kve`` is the
    exponentially scaled Bessel function, so the result stays finite for
    arguments far beyond the underflow point of ``K`` itself.  For very small
    arguments, where the scaled value overflows, the leading small-argument
    term ``Gamma(|nu|) 2^(|nu|-1) x^(-|nu|)`` (or ``-log(x/2) - euler_gamma``
    for ``nu = 0``) is used.

    Parameters
    ----------
    order : float
        Order ``nu``; only ``|nu|`` matters.
    x : float or array_like
        Strictly positive argument(s).

    Returns
    -------
    float or ndarray
        ``log K_nu(x)``, same shape as ``x``.
    """
    xs = _check(order, x)
    nu = abs(float(order))
    if nu < 1e-8:
        # K_nu - K_0 = O(nu^2); kve misbehaves for subnormal orders
        nu = 0.0
    with np.errstate(divide="ignore", over="ignore"):
        out = np.log(special.kve(nu, xs)) - xs
    bad = ~np.isfinite(out)
    if np.any(bad):
        xb = xs[bad] if out.ndim else xs
        if nu > 0:
            approx = special.gammaln(nu) + (nu - 1.0) * np.log(2.0) - nu * np.log(xb)
        else:
            approx = np.log(-np.log(xb / 2.0) - np.euler_gamma)
        if out.ndim:
            out[bad] = approx
        else:
            out = np.asarray(approx)
    return float(out) if out.ndim == 0 else out


def bessel_k(order: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """``K_order(x)``; underflows to 0 for large ``x`` and overflows to inf near 0."""
    with np.errstate(over="ignore", under="ignore"):
        return np.exp(log_bessel_k(order, x))


def bessel_k_ratio(order_num: float, order_den: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """``K_order_num(x) / K_order_den(x)`` without forming either factor."""
    if order_num == order_den or abs(order_num) == abs(order_den):
        xs = _check(order_num, x)
        _check(order_den, xs)
        return 1.0 if xs.ndim == 0 else np.ones_like(xs)
    return np.exp(log_bessel_k(order_num, x) - log_bessel_k(order_den, x))
