"""Shared numeric kernels."""

import math

import numpy as np

# Above this alpha the expm1 form risks overflow; switch to the e^-alpha form.
_LARGE_ALPHA = 30.0


def log_ratio(q, d, alpha):
    """``log((q*(e^alpha - 1) + 1) / (d*(e^alpha - 1) + 1))``, elementwise.

    Exact in the two closed-form cases: ``q == d`` gives 0 and
    ``(q, d) == (1, 0)`` gives ``alpha``.
    """
    q = np.asarray(q, dtype=float)
    d = np.asarray(d, dtype=float)
    alpha = float(alpha)
    if alpha == 0.0:
        out = np.zeros(np.broadcast(q, d).shape)
    elif alpha < _LARGE_ALPHA:
        y = np.expm1(alpha)
        out = np.log1p(q * y) - np.log1p(d * y)
    else:
        out = _log_scaled(q, alpha) - _log_scaled(d, alpha)
    out = np.where(q == d, 0.0, out)
    out = np.where((q == 1.0) & (d == 0.0), alpha, out)
    return out if out.ndim else float(out)


def _log_scaled(c, alpha):
    # log(c + (1 - c) e^-alpha), i.e. log(c(e^alpha - 1) + 1) - alpha
    r = np.exp(-alpha)
    with np.errstate(divide="ignore"):
        return np.where(c > 0, np.log(np.maximum(c, 0.0) + (1.0 - c) * r), -alpha)


def log_ratio_scalar(q: float, d: float, alpha: float) -> float:
    """Scalar twin of :func:`log_ratio` using only the math module.

    libm and numpy may differ in the last ulp, so this serves comparisons
    inside envelope construction; reported values go through :func:`log_ratio`.
    """
    if q == d or alpha == 0.0:
        return 0.0
    if q == 1.0 and d == 0.0:
        return alpha
    if alpha < _LARGE_ALPHA:
        y = math.expm1(alpha)
        return math.log1p(q * y) - math.log1p(d * y)
    r = math.exp(-alpha)
    num = math.log(q + (1.0 - q) * r) if q > 0 else -alpha
    den = math.log(d + (1.0 - d) * r) if d > 0 else -alpha
    return num - den


def format_real(x: float) -> str:
    """12 significant digits, always with a decimal point or exponent (``1.0``, not ``1``)."""
    s = f"{float(x):.12g}"
    if s.lstrip("-").isdigit():
        s += ".0"
    return s
