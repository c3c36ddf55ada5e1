"""Split normal (two-piece Gaussian) distribution and equal-weight mixtures of it.

A split normal joins the left half of N(mu, sigma1^2) to the right half of
N(mu, sigma2^2), rescaled so the density is continuous at the mode::

    f(x) = A exp(-(x - mu)^2 / (2 sigma1^2))   x < mu
    f(x) = A exp(-(x - mu)^2 / (2 sigma2^2))   x >= mu
    A = sqrt(2 / pi) / (sigma1 + sigma2)

The array functions (``sn_pdf``, ``sn_cdf``, ...) broadcast over parameters
so that thousands of per-sample fits and mixtures run as a handful of numpy
calls. The dataclasses wrap them for single-distribution use.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .special import erf_inv, erfc, norm_cdf

__all__ = [
    "IntegrityError",
    "SplitNormal",
    "SplitNormalMixture",
    "FitConfig",
    "FitResult",
    "erf_inv",
    "pdf",
    "cdf",
    "quantile",
    "analytic_init",
    "fit",
    "fit_arrays",
    "sn_pdf",
    "sn_cdf",
    "sn_quantile",
    "mixture_cdf",
    "mixture_quantile",
    "mixture_cdf_arrays",
    "mixture_quantile_arrays",
]

_SQRT2 = np.sqrt(2.0)
_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class IntegrityError(ValueError):
    """Raised when a (lower, point, upper) triple is not strictly ordered."""


# ---------------------------------------------------------------------------
# array-level primitives
# ---------------------------------------------------------------------------


def sn_pdf(x, mu, sigma1, sigma2):
    x, mu, sigma1, sigma2 = np.broadcast_arrays(*map(np.asarray, (x, mu, sigma1, sigma2)))
    scale = np.where(x < mu, sigma1, sigma2)
    amp = _SQRT_2_OVER_PI / (sigma1 + sigma2)
    return amp * np.exp(-0.5 * ((x - mu) / scale) ** 2)


def sn_cdf(x, mu, sigma1, sigma2):
    """Split normal CDF.

    The left branch is ``sigma1 * erfc(-z1) / (sigma1 + sigma2)`` and the right
    branch ``1 - sigma2 * erfc(z2) / (sigma1 + sigma2)``, with
    ``z = (x - mu) / (sqrt(2) sigma)``. Both are the textbook erf forms
    rewritten through erfc so neither tail loses precision.
    """
    x, mu, sigma1, sigma2 = np.broadcast_arrays(*map(np.asarray, (x, mu, sigma1, sigma2)))
    total = sigma1 + sigma2
    left = x < mu
    z = (x - mu) / (_SQRT2 * np.where(left, sigma1, sigma2))
    out = np.where(
        left,
        sigma1 * erfc(-z) / total,
        1.0 - sigma2 * erfc(z) / total,
    )
    return out if np.ndim(out) else out[()]


def sn_quantile(p, mu, sigma1, sigma2):
    """Closed-form inverse of :func:`sn_cdf`.

    The branch is chosen by comparing ``p`` with ``cdf(mu) = sigma1 / (sigma1 + sigma2)``.
    """
    p, mu, sigma1, sigma2 = np.broadcast_arrays(*map(np.asarray, (p, mu, sigma1, sigma2)))
    p = p.astype(float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise ValueError("quantile requires 0 < p < 1")
    total = sigma1 + sigma2
    w = sigma1 / total
    left = p < w
    # left:  p = sigma1 (1 + erf(z)) / total     -> erf(z) = p total / sigma1 - 1
    # right: p = (sigma1 + sigma2 erf(z)) / total -> erf(z) = (p total - sigma1) / sigma2
    lim = np.nextafter(1.0, 0.0)
    arg_left = np.clip(p * total / sigma1 - 1.0, -lim, lim)
    arg_right = np.clip((p * total - sigma1) / sigma2, -lim, lim)
    arg = np.where(left, arg_left, arg_right)
    z = erf_inv(arg)
    out = mu + _SQRT2 * np.where(left, sigma1, sigma2) * z
    return out if np.ndim(out) else out[()]


# ---------------------------------------------------------------------------
# distribution objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitNormal:
    """Two-piece normal with mode ``mu`` and left/right scales ``sigma1``/``sigma2``."""

    mu: float
    sigma1: float
    sigma2: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError(
                f"invalid split normal parameters mu={self.mu}, sigma1={self.sigma1}, sigma2={self.sigma2}"
            )
        if not (np.isfinite(self.sigma1) and np.isfinite(self.sigma2)):
            raise ValueError("split normal scales must be finite")

    @property
    def norm_const(self):
        return _SQRT_2_OVER_PI / (self.sigma1 + self.sigma2)

    def pdf(self, x):
        return sn_pdf(x, self.mu, self.sigma1, self.sigma2)

    def cdf(self, x):
        return sn_cdf(x, self.mu, self.sigma1, self.sigma2)

    def quantile(self, p):
        return sn_quantile(p, self.mu, self.sigma1, self.sigma2)


def pdf(sn: SplitNormal, x):
    return sn.pdf(x)


def cdf(sn: SplitNormal, x):
    return sn.cdf(x)


def quantile(sn: SplitNormal, p):
    return sn.quantile(p)


@dataclass(frozen=True)
class SplitNormalMixture:
    """Equally weighted mixture of split normals."""

    components: tuple

    def __init__(self, components: Sequence[SplitNormal]):
        components = tuple(components)
        if len(components) < 1:
            raise ValueError("a mixture needs at least one component")
        object.__setattr__(self, "components", components)

    def __len__(self):
        return len(self.components)

    @property
    def params(self):
        """Arrays ``(mu, sigma1, sigma2)``, each of shape ``(m,)``."""
        mu = np.array([c.mu for c in self.components])
        s1 = np.array([c.sigma1 for c in self.components])
        s2 = np.array([c.sigma2 for c in self.components])
        return mu, s1, s2

    def pdf(self, x):
        mu, s1, s2 = self.params
        x = np.asarray(x, dtype=float)
        return sn_pdf(x[..., None], mu, s1, s2).mean(axis=-1)

    def cdf(self, x):
        return mixture_cdf(self, x)

    def quantile(self, p, tol=1e-10):
        return mixture_quantile(self, p, tol)


# ---------------------------------------------------------------------------
# mixtures over batches of samples
# ---------------------------------------------------------------------------


def _weights(shape, mask):
    if mask is None:
        return np.full(shape, 1.0 / shape[-1])
    mask = np.asarray(mask, dtype=float)
    count = mask.sum(axis=-1, keepdims=True)
    if np.any(count == 0):
        raise ValueError("every mixture needs at least one active component")
    return mask / count


def mixture_cdf_arrays(x, mu, sigma1, sigma2, mask=None):
    """CDF of per-sample mixtures.

    Parameters
    ----------
    x : array_like, shape (n,)
    mu, sigma1, sigma2 : array_like, shape (n, m)
        Component parameters, one row per sample.
    mask : array_like of bool, shape (n, m), optional
        Inactive components are dropped and the weights renormalised.
    """
    mu = np.asarray(mu, dtype=float)
    sigma1 = np.asarray(sigma1, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    x = np.asarray(x, dtype=float)
    w = _weights(mu.shape, mask)
    # inactive components get harmless placeholder scales
    if mask is not None:
        active = np.asarray(mask, dtype=bool)
        sigma1 = np.where(active, sigma1, 1.0)
        sigma2 = np.where(active, sigma2, 1.0)
        mu = np.where(active, mu, 0.0)
    return (w * sn_cdf(x[..., None], mu, sigma1, sigma2)).sum(axis=-1)


def mixture_quantile_arrays(p, mu, sigma1, sigma2, mask=None, tol=1e-10, max_iter=200):
    """Invert per-sample mixture CDFs by bracketed bisection.

    The mixture quantile at level ``p`` lies between the smallest and the
    largest component quantile at the same level, which gives a bracket that
    cannot fail. Bisection stops once ``|F(x) - p| <= tol`` or the bracket has
    collapsed to adjacent floats.
    """
    mu = np.asarray(mu, dtype=float)
    sigma1 = np.asarray(sigma1, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    p = np.broadcast_to(np.asarray(p, dtype=float), mu.shape[:-1])
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise ValueError("mixture quantile requires 0 < p < 1")
    if mask is not None:
        active = np.asarray(mask, dtype=bool)
        s1_ = np.where(active, sigma1, 1.0)
        s2_ = np.where(active, sigma2, 1.0)
    else:
        active = np.ones(mu.shape, dtype=bool)
        s1_, s2_ = sigma1, sigma2
    comp_q = sn_quantile(p[..., None], mu, s1_, s2_)
    lo = np.where(active, comp_q, np.inf).min(axis=-1)
    hi = np.where(active, comp_q, -np.inf).max(axis=-1)

    f_lo = mixture_cdf_arrays(lo, mu, sigma1, sigma2, mask) - p
    f_hi = mixture_cdf_arrays(hi, mu, sigma1, sigma2, mask) - p
    if np.any(f_lo > tol) or np.any(f_hi < -tol):
        raise RuntimeError("mixture quantile bracket does not enclose the root")

    x = 0.5 * (lo + hi)
    done = (np.abs(f_lo) <= tol) | (np.abs(f_hi) <= tol) | (lo == hi)
    x = np.where(np.abs(f_lo) <= tol, lo, np.where(np.abs(f_hi) <= tol, hi, x))
    for _ in range(max_iter):
        if np.all(done):
            break
        mid = 0.5 * (lo + hi)
        f_mid = mixture_cdf_arrays(mid, mu, sigma1, sigma2, mask) - p
        hit = np.abs(f_mid) <= tol
        collapsed = (mid <= lo) | (mid >= hi)
        x = np.where(done, x, mid)
        newly = ~done & (hit | collapsed)
        done = done | newly
        go_right = f_mid < 0
        lo = np.where(~done & go_right, mid, lo)
        hi = np.where(~done & ~go_right, mid, hi)
    return x


def mixture_cdf(mix: SplitNormalMixture, x):
    """CDF of an equal-weight mixture; mean of the component CDFs."""
    mu, s1, s2 = mix.params
    x = np.asarray(x, dtype=float)
    out = sn_cdf(x[..., None], mu, s1, s2).mean(axis=-1)
    return out if np.ndim(out) else out[()]


def mixture_quantile(mix: SplitNormalMixture, p, tol=1e-10):
    mu, s1, s2 = mix.params
    p = np.asarray(p, dtype=float)
    shape = p.shape
    flat = p.reshape(-1)
    k = flat.size
    q = mixture_quantile_arrays(
        flat,
        np.broadcast_to(mu, (k, mu.size)),
        np.broadcast_to(s1, (k, mu.size)),
        np.broadcast_to(s2, (k, mu.size)),
        tol=tol,
    )
    q = q.reshape(shape)
    return q if q.ndim else q[()]


# ---------------------------------------------------------------------------
# fitting a split normal to a (lower, point, upper) triple
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitConfig:
    """Settings for the per-triple split normal fit.

    ``method="lm"`` runs damped Gauss-Newton (Levenberg-Marquardt) on
    ``log(sigma)``; ``learning_rate`` is then the initial damping. With
    ``method="gd"`` it is the plain gradient-descent step size.
    """

    max_iters: int = 2000
    learning_rate: float = 0.1
    tolerance: float = 1e-12
    positivity_floor: float = 1e-6
    method: str = "lm"

    def __post_init__(self):
        if self.max_iters <= 0 or self.learning_rate <= 0 or self.tolerance <= 0 or self.positivity_floor <= 0:
            raise ValueError("FitConfig fields must be strictly positive")
        if self.method not in ("lm", "gd"):
            raise ValueError(f"unknown fit method {self.method!r}")


@dataclass(frozen=True)
class FitResult:
    dist: SplitNormal
    loss: float
    iterations: int
    converged: bool
    floored: bool = False


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _check_order(lower, point, upper):
    lower, point, upper = (np.asarray(v, dtype=float) for v in (lower, point, upper))
    if np.any(~(lower < point)) or np.any(~(point < upper)):
        raise IntegrityError("fit requires lower < point < upper for every triple")
    return lower, point, upper


def analytic_init(y_lower, y_point, y_upper, alpha):
    """Scales of the normal whose alpha/2 and 1 - alpha/2 quantiles sit at the bounds.

    Each half is treated as a normal centred at the point estimate::

        sigma1 = (y_lower - y_point) / (sqrt(2) erf_inv(alpha - 1))
        sigma2 = (y_upper - y_point) / (sqrt(2) erf_inv(1 - alpha))

    Works elementwise on arrays.
    """
    _check_alpha(alpha)
    lower, point, upper = _check_order(y_lower, y_point, y_upper)
    p_lo, p_hi = alpha / 2.0, 1.0 - alpha / 2.0
    s1 = (lower - point) / (_SQRT2 * erf_inv(2.0 * p_lo - 1.0))
    s2 = (upper - point) / (_SQRT2 * erf_inv(2.0 * p_hi - 1.0))
    if s1.ndim == 0:
        return float(s1), float(s2)
    return s1, s2


def _residuals_and_jacobian(u1, u2, a, b, alpha):
    """Residuals of the two CDF conditions and their Jacobian in log-scale.

    With ``a = point - lower`` and ``b = upper - point``::

        F(lower)     = 2 s1 Phi(-a/s1) / (s1 + s2)
        1 - F(upper) = 2 s2 Phi(-b/s2) / (s1 + s2)
    """
    s1 = np.exp(u1)
    s2 = np.exp(u2)
    total = s1 + s2
    za, zb = a / s1, b / s2
    tail_a, tail_b = norm_cdf(-za), norm_cdf(-zb)
    h1, h2 = s1 * tail_a, s2 * tail_b
    # d/ds [s Phi(-c/s)] = Phi(-c/s) + (c/s) phi(c/s)
    dh1 = tail_a + za * _INV_SQRT_2PI * np.exp(-0.5 * za * za)
    dh2 = tail_b + zb * _INV_SQRT_2PI * np.exp(-0.5 * zb * zb)
    r1 = 2.0 * h1 / total - alpha / 2.0
    r2 = alpha / 2.0 - 2.0 * h2 / total
    t2 = total * total
    j11 = (2.0 * dh1 / total - 2.0 * h1 / t2) * s1
    j12 = (-2.0 * h1 / t2) * s2
    j21 = (2.0 * h2 / t2) * s1
    j22 = -(2.0 * dh2 / total - 2.0 * h2 / t2) * s2
    return r1, r2, j11, j12, j21, j22


def fit_arrays(y_lower, y_point, y_upper, alpha, cfg: FitConfig = FitConfig(), init=None):
    """Fit split normal scales to many triples at once.

    The mode is pinned to the point estimate and ``(sigma1, sigma2)`` minimise::

        [F(y_lower) - alpha/2]^2 + [F(y_upper) - (1 - alpha/2)]^2

    Parameters
    ----------
    y_lower, y_point, y_upper : array_like, shape (k,)
        Strictly ordered triples.
    alpha : float
    cfg : FitConfig
    init : tuple of arrays, optional
        Starting ``(sigma1, sigma2)``; defaults to :func:`analytic_init`.

    Returns
    -------
    dict
        ``sigma1``, ``sigma2``, ``loss``, ``iterations`` (per triple),
        ``converged`` and ``floored`` flags.
    """
    _check_alpha(alpha)
    lower, point, upper = _check_order(y_lower, y_point, y_upper)
    lower, point, upper = np.atleast_1d(lower, point, upper)
    a = point - lower
    b = upper - point
    if init is None:
        s1, s2 = analytic_init(lower, point, upper, alpha)
    else:
        s1, s2 = (np.broadcast_to(np.asarray(v, dtype=float), a.shape) for v in init)
    u1 = np.log(np.maximum(s1, cfg.positivity_floor))
    u2 = np.log(np.maximum(s2, cfg.positivity_floor))

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _fit_loop(u1, u2, a, b, alpha, cfg)


def _fit_loop(u1, u2, a, b, alpha, cfg):
    # overflowing trial steps give non-finite losses and are rejected below
    state = _residuals_and_jacobian(u1, u2, a, b, alpha)
    loss = state[0] ** 2 + state[1] ** 2
    iters = np.zeros(a.shape, dtype=int)
    done = loss <= cfg.tolerance
    damping = np.full(a.shape, cfg.learning_rate * 1e-2)

    for _ in range(cfg.max_iters):
        if np.all(done):
            break
        r1, r2, j11, j12, j21, j22 = state
        g1 = r1 * j11 + r2 * j21
        g2 = r1 * j12 + r2 * j22
        if cfg.method == "gd":
            d1 = -cfg.learning_rate * 2.0 * g1
            d2 = -cfg.learning_rate * 2.0 * g2
        else:
            a11 = j11 * j11 + j21 * j21 + damping
            a22 = j12 * j12 + j22 * j22 + damping
            a12 = j11 * j12 + j21 * j22
            det = a11 * a22 - a12 * a12
            d1 = -(a22 * g1 - a12 * g2) / det
            d2 = -(a11 * g2 - a12 * g1) / det
        n1 = np.where(done, u1, u1 + d1)
        n2 = np.where(done, u2, u2 + d2)
        new_state = _residuals_and_jacobian(n1, n2, a, b, alpha)
        new_loss = new_state[0] ** 2 + new_state[1] ** 2
        if cfg.method == "gd":
            accept = ~done & np.isfinite(new_loss)
        else:
            accept = ~done & (new_loss < loss)
            damping = np.where(accept, damping * 0.3, np.where(done, damping, damping * 10.0))
        iters = iters + (~done)
        u1 = np.where(accept, n1, u1)
        u2 = np.where(accept, n2, u2)
        state = tuple(np.where(accept, n, o) for n, o in zip(new_state, state))
        loss = np.where(accept, new_loss, loss)
        stalled = damping > 1e16
        done = done | (loss <= cfg.tolerance) | stalled

    s1 = np.exp(u1)
    s2 = np.exp(u2)
    floored = (s1 < cfg.positivity_floor) | (s2 < cfg.positivity_floor)
    return {
        "sigma1": np.maximum(s1, cfg.positivity_floor),
        "sigma2": np.maximum(s2, cfg.positivity_floor),
        "loss": loss,
        "iterations": iters,
        "converged": loss <= cfg.tolerance,
        "floored": floored,
    }


def fit(y_lower, y_point, y_upper, alpha, cfg: FitConfig = FitConfig(), init=None) -> FitResult:
    """Fit one split normal to a single triple; see :func:`fit_arrays`."""
    res = fit_arrays(y_lower, y_point, y_upper, alpha, cfg, init=init)
    dist = SplitNormal(float(y_point), float(res["sigma1"][0]), float(res["sigma2"][0]))
    return FitResult(
        dist=dist,
        loss=float(res["loss"][0]),
        iterations=int(res["iterations"][0]),
        converged=bool(res["converged"][0]),
        floored=bool(res["floored"][0]),
    )
