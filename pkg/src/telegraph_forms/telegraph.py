"""The classical Goldstein-Kac telegraph process started at an arbitrary point.

The law of ``X(t)`` has two atoms of mass ``exp(-lam t)/2`` at ``x0 +- c t``
and an absolutely continuous part on ``(x0 - c t, x0 + c t)``::

    f_ac(x, t) = exp(-lam t) / (2 c) * [lam I0(xi) + d/dt I0(xi)],
    xi = (lam / c) sqrt(c^2 t^2 - (x - x0)^2).

The modified Bessel functions are summed from their power series. Internally
the sums are carried out relative to ``exp(z)`` so that ``exp(-lam t) I0(xi)``
stays finite for large ``lam t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .model import DomainError, PrecisionError, TelegraphParams

__all__ = [
    "BesselConfig",
    "bessel_i0",
    "bessel_i1",
    "singular_weight",
    "density_ac",
    "char_fn",
    "reduced_char_fn",
    "ac_mass_quadrature",
]

# relative width of the window around |alpha| = lam/c handled by Taylor series
BRANCH_WINDOW = 1e-9


@dataclass(frozen=True)
class BesselConfig:
    rel_tolerance: float = 1e-15
    max_terms: int = 500

    def __post_init__(self):
        if not self.rel_tolerance > 0:
            raise ValueError("rel_tolerance must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_BESSEL = BesselConfig()


def _scaled_series(z, order: int, config: BesselConfig, *, divide_by_z: bool = False):
    """``exp(-z) * I_order(z)`` (or ``exp(-z) * I_order(z) / z``) by power series.

    Terms are generated by the ratio recurrence and accumulated relative to
    ``exp(z)``, which bounds every term by one.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(~np.isfinite(z)):
        raise DomainError("Bessel argument must be finite and nonnegative")
    half = 0.5 * z
    log_half = np.log(np.where(half > 0, half, 1.0))
    # log of the k = 0 term, relative to exp(z)
    power = order - 1 if divide_by_z else order
    if power > 0:
        log_term = power * log_half - math.lgamma(order + 1) - z
        if divide_by_z:
            log_term = log_term - math.log(2.0)
        term = np.where(half > 0, np.exp(log_term), 0.0)
    else:
        const = 0.5 if divide_by_z else 1.0
        term = np.exp(-z) * const / math.gamma(order + 1)
    total = term.copy()
    q = half * half
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, config.max_terms + 1):
        ratio = q / (k * (k + order))
        term = term * ratio
        total = total + term
        # past the peak (ratio < 1) the tail is bounded by a geometric series
        done = (ratio < 1.0) & (term <= config.rel_tolerance * total * (1.0 - ratio))
        active &= ~done
        if not active.any():
            return total
    raise PrecisionError(
        f"Bessel series did not converge within {config.max_terms} terms "
        f"(max argument {float(z.max()):.6g})"
    )


def _unwrap(value, like):
    return float(value) if np.ndim(like) == 0 else value


def bessel_i0(z, config: BesselConfig = DEFAULT_BESSEL):
    """Modified Bessel function ``I0(z)`` for ``z >= 0`` (scalar or array)."""
    z_arr = np.asarray(z, dtype=float)
    out = _scaled_series(z_arr, 0, config) * np.exp(z_arr)
    return _unwrap(out, z)


def bessel_i1(z, config: BesselConfig = DEFAULT_BESSEL):
    """Modified Bessel function ``I1(z) = I0'(z)`` for ``z >= 0``."""
    z_arr = np.asarray(z, dtype=float)
    out = _scaled_series(z_arr, 1, config) * np.exp(z_arr)
    return _unwrap(out, z)


def singular_weight(p: TelegraphParams, t: float) -> float:
    """Mass ``exp(-lam t)/2`` sitting at each endpoint ``x0 +- c t``."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    return 0.5 * math.exp(-float(p.rate) * t)


def density_ac(p: TelegraphParams, x, t: float, config: BesselConfig = DEFAULT_BESSEL):
    """Density of the absolutely continuous part of ``X(t)``.

    Zero outside the open interval ``|x - x0| < c t``. The time derivative of
    ``I0(xi)`` is taken analytically: ``d/dt I0(xi) = lam^2 t I1(xi)/xi``.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    lam, c, x0 = float(p.rate), float(p.speed), float(p.start)
    x_arr = np.asarray(x, dtype=float)
    y = x_arr - x0
    ct = c * t
    inside = np.abs(y) < ct
    root = np.sqrt(np.where(inside, (ct - y) * (ct + y), 0.0))
    xi = (lam / c) * root
    lt = lam * t
    # exp(-lam t) I(xi) = exp(xi - lam t) * [exp(-xi) I(xi)], and xi <= lam t
    shift = np.exp(xi - lt)
    i0 = _scaled_series(xi, 0, config) * shift
    i1_over = _scaled_series(xi, 1, config, divide_by_z=True) * shift
    val = (lam * i0 + lam * lam * t * i1_over) / (2.0 * c)
    out = np.where(inside, val, 0.0)
    return _unwrap(out, x)


def reduced_char_fn(rate: float, speed: float, xi, t: float):
    """``exp(-lam t) * H(xi, t)`` for a process started at the origin.

    Uses the hyperbolic branch for ``|xi| < lam/c``, the trigonometric branch
    above it, and a 4-term Taylor expansion in ``t^2 (lam^2 - c^2 xi^2)``
    inside a narrow window around the branch point.
    """
    lam, c = float(rate), float(speed)
    xi_arr = np.asarray(xi, dtype=float)
    disc = lam * lam - (c * xi_arr) ** 2
    out = np.empty(xi_arr.shape, dtype=float)
    near = np.abs(disc) < BRANCH_WINDOW * lam * lam
    hyp = (disc > 0) & ~near
    trig = (disc < 0) & ~near
    if hyp.any():
        d = np.sqrt(disc[hyp])
        ep = np.exp(t * (d - lam))
        em = np.exp(-t * (d + lam))
        out[hyp] = 0.5 * (ep + em) + (lam / d) * 0.5 * (ep - em)
    if trig.any():
        w = np.sqrt(-disc[trig])
        out[trig] = math.exp(-lam * t) * (np.cos(t * w) + (lam / w) * np.sin(t * w))
    if near.any():
        u = t * t * disc[near]
        cosh_part = 1 + u / 2 + u * u / 24 + u ** 3 / 720
        sinhc_part = t * (1 + u / 6 + u * u / 120 + u ** 3 / 5040)
        out[near] = math.exp(-lam * t) * (cosh_part + lam * sinhc_part)
    return _unwrap(out, xi)


def char_fn(p: TelegraphParams, alpha, t: float):
    """Characteristic function ``E exp(i alpha X(t))``."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    alpha_arr = np.asarray(alpha, dtype=float)
    phase = np.exp(1j * alpha_arr * float(p.start))
    out = phase * reduced_char_fn(p.rate, p.speed, alpha_arr, t)
    return complex(out) if np.ndim(alpha) == 0 else out


def ac_mass_quadrature(p: TelegraphParams, t: float, *, tol: float = 1e-12) -> float:
    """Integral of :func:`density_ac` over its support by adaptive quadrature.

    QUADPACK's Gauss-Kronrod rule never evaluates the interval endpoints,
    where the x-derivative of the density is unbounded.
    """
    lo = float(p.start) - float(p.speed) * t
    hi = float(p.start) + float(p.speed) * t
    mid = float(p.start)
    f = lambda x: density_ac(p, x, t)
    left, _ = integrate.quad(f, lo, mid, epsabs=tol, epsrel=tol, limit=200)
    right, _ = integrate.quad(f, mid, hi, epsabs=tol, epsrel=tol, limit=200)
    return left + right
