"""Error function, its complement and its inverse, vectorised over numpy arrays.

Everything here is plain numpy so results do not depend on which special
function library happens to be installed.
"""

import numpy as np

__all__ = ["erf", "erfc", "erf_inv", "norm_cdf", "norm_ppf"]

_TWO_OVER_SQRT_PI = 2.0 / np.sqrt(np.pi)
_ONE_OVER_SQRT_PI = 1.0 / np.sqrt(np.pi)
_SQRT2 = np.sqrt(2.0)

# below this the power series is used, above it the continued fraction
_SWITCH = 1.5
_SERIES_TERMS = 50
_CF_TERMS = 90


def _erf_series(x):
    # erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (2n+1)!!
    # every term is positive, so there is no cancellation
    x2 = x * x
    term = x.copy()
    total = x.copy()
    for n in range(_SERIES_TERMS):
        term = term * (2.0 * x2) / (2 * n + 3)
        total = total + term
        if n % 8 == 7 and np.all(term <= 1e-17 * total):
            break
    return _TWO_OVER_SQRT_PI * np.exp(-x2) * total


def _erfc_cf(x):
    # erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
    # evaluated bottom-up; only called with x >= _SWITCH
    frac = np.zeros_like(x)
    for k in range(_CF_TERMS, 0, -1):
        frac = (0.5 * k) / (x + frac)
    return _ONE_OVER_SQRT_PI * np.exp(-x * x) / (x + frac)


def erfc(x):
    """Complementary error function ``1 - erf(x)``, accurate in the right tail."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    small = ax < _SWITCH
    out = np.empty_like(ax)
    if np.any(small):
        out[small] = 1.0 - _erf_series(ax[small])
    if np.any(~small):
        big = ax[~small]
        with np.errstate(over="ignore", under="ignore"):
            out[~small] = np.where(np.isinf(big), 0.0, _erfc_cf(np.where(np.isinf(big), _SWITCH, big)))
    # erfc(-x) = 2 - erfc(x)
    out = np.where(x < 0, 2.0 - out, out)
    out = np.where(np.isnan(x), np.nan, out)
    return out if out.ndim else out[()]


def erf(x):
    """Error function.

    Absolute error is below 1e-15 on the whole real line.
    """
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    small = ax < _SWITCH
    out = np.empty_like(ax)
    if np.any(small):
        out[small] = _erf_series(ax[small])
    if np.any(~small):
        big = ax[~small]
        with np.errstate(over="ignore", under="ignore"):
            out[~small] = 1.0 - np.where(np.isinf(big), 0.0, _erfc_cf(np.where(np.isinf(big), _SWITCH, big)))
    out = np.copysign(out, x)
    out = np.where(np.isnan(x), np.nan, out)
    return out if out.ndim else out[()]


def _erf_inv_guess(p):
    # Winitzki's closed form, relative error around 2e-3
    a = 0.147
    ln = np.log1p(-p * p)
    t = 2.0 / (np.pi * a) + 0.5 * ln
    return np.copysign(np.sqrt(np.sqrt(t * t - ln / a) - t), p)


def erf_inv(p):
    """Inverse error function on the open interval (-1, 1).

    A closed-form starting guess is polished with Halley steps. In the tails
    the residual is formed with :func:`erfc` so that it keeps its relative
    precision.

    Raises
    ------
    ValueError
        If any ``|p| >= 1`` or ``p`` is NaN.
    """
    p = np.asarray(p, dtype=float)
    if np.any(~(np.abs(p) < 1.0)):
        raise ValueError("erf_inv is defined on the open interval (-1, 1)")
    y = _erf_inv_guess(p)
    q = 1.0 - np.abs(p)
    tail = np.abs(p) > 0.5
    for _ in range(3):
        ay = np.abs(y)
        # residual of the equation solved for |y|: erf(|y|) - |p|
        r = np.empty_like(ay)
        r[tail] = q[tail] - erfc(ay[tail])
        r[~tail] = erf(ay[~tail]) - np.abs(p[~tail])
        r = r * np.sign(p)
        dfdy = _TWO_OVER_SQRT_PI * np.exp(-y * y)
        step = r / dfdy
        # Halley: f'' / f' = -2y
        y = y - step / (1.0 + y * step)
    y = np.where(p == 0.0, 0.0, y)
    return y if y.ndim else y[()]


def norm_cdf(x):
    """Standard normal CDF, computed through ``erfc`` so both tails stay accurate."""
    x = np.asarray(x, dtype=float)
    return 0.5 * erfc(-x / _SQRT2)


def norm_ppf(p):
    """Standard normal quantile ``sqrt(2) * erf_inv(2p - 1)``."""
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise ValueError("normal quantile requires 0 < p < 1")
    return _SQRT2 * erf_inv(2.0 * p - 1.0)
