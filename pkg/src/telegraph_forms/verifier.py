"""Numerical certificates tying the governing operator to the probability law.

Most checks work in Fourier space, where the identities are exact:

* every exponent ``mu`` of the characteristic function, viewed as a sum of
  exponentials in ``t``, is a root in ``s`` of the operator symbol
  ``P(s, i alpha)``;
* the Fourier-transformed direction-state system, integrated as a linear
  ODE, sums to the product-formula characteristic function;
* time derivatives of the characteristic function at ``t = 0`` give the
  initial data of the fourth-order problem for ``X_1 +- X_2``.

:func:`fd_residual` is an advisory check that applies the operator with
finite differences to the continuous density away from the singular lines.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .linear_form import char_fn_L, exp_sum_representation
from .model import (
    Component,
    ModelSpec,
    NumericalError,
    SizeLimitError,
    TelegraphParams,
    enumerate_sign_sequences,
    max_sigma_speed,
    sigma_speed,
)
from .operator_algebra import OperatorPoly, build_lambda_matrix, governing_operator
from .telegraph import density_ac

__all__ = [
    "VerificationReport",
    "symbol_root_check",
    "system_cf_check",
    "conditional_char_fn",
    "initial_condition_check",
    "fd_residual",
    "apply_operator_fd",
    "fd_stencil",
    "pointwise_ac_density",
]

SYSTEM_N_CAP = 6


@dataclass
class VerificationReport:
    check_name: str
    max_residual: float
    tolerance: float
    passed: bool
    details: list = field(default_factory=list)
    status: str = ""
    advisory: bool = False
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.status:
            self.status = "passed" if self.passed else "failed"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def _report(name, residuals, tol, details, **kw) -> VerificationReport:
    worst = float(max(residuals, default=0.0))
    details = [{k: (float(v) if isinstance(v, np.floating) else v) for k, v in d.items()} for d in details]
    return VerificationReport(name, worst, tol, worst <= tol, details, **kw)


# -- symbol roots -------------------------------------------------------------------

def _symbol_poly_in_s(poly: OperatorPoly, xi: complex) -> np.ndarray:
    """Coefficients (highest power first) of ``P(s, xi)`` as a polynomial in ``s``."""
    deg = poly.degree_t()
    coeffs = np.zeros(deg + 1, dtype=complex)
    for (i, j), c in poly.coeffs.items():
        coeffs[deg - i] += float(c) * xi ** j
    return coeffs


def symbol_root_check(spec: ModelSpec, alphas: Sequence[float], tol: float = 1e-8,
                      operator: OperatorPoly | None = None) -> VerificationReport:
    """Check that every characteristic-function exponent is a root of the symbol.

    Residuals are normalised by ``1 + ||P|| max(1, |mu|)**(2**n)`` with
    ``||P|| = sum |coef| max(1, |alpha|)**dx``. Exponents that carry a
    ``t``-power (confluent roots) also have the matching ``s``-derivatives
    checked.
    """
    P = governing_operator(spec) if operator is None else operator
    order = 2 ** spec.n
    residuals, details = [], []
    for alpha in alphas:
        xi = 1j * float(alpha)
        norm = sum(abs(float(c)) * max(1.0, abs(alpha)) ** j for (_, j), c in P.coeffs.items())
        base = _symbol_poly_in_s(P, xi)
        rep = exp_sum_representation(spec, alpha)
        for mu, power in rep.exponents():
            scale = 1.0 + norm * max(1.0, abs(mu)) ** order
            poly = base
            for k in range(power + 1):
                r = abs(np.polyval(poly, mu)) / scale
                residuals.append(r)
                details.append({"alpha": float(alpha), "mu": mu, "derivative": k, "residual": r})
                poly = np.polyder(poly)
    return _report("symbol_root", residuals, tol, details, notes={"order": order})


# -- direction-state ODE -------------------------------------------------------------

def _system_generator(spec: ModelSpec, alpha: float, sign: int) -> np.ndarray:
    signs = enumerate_sign_sequences(spec.n)
    drift = np.array([float(sigma_speed(spec, s)) for s in signs])
    lam = build_lambda_matrix(spec)
    lam_f = np.array([[float(e.coeff(0, 0)) for e in row] for row in lam.entries])
    return sign * 1j * alpha * np.diag(drift) - lam_f


def _integrate_system(spec: ModelSpec, alpha: float, t: float, sign: int, rtol: float,
                      start_state: int | None = None):
    gen = _system_generator(spec, alpha, sign)
    dim = gen.shape[0]
    phase = np.exp(1j * alpha * float(spec.center()))
    if start_state is None:
        y0 = np.full(dim, phase / dim, dtype=complex)
    else:
        y0 = np.zeros(dim, dtype=complex)
        y0[start_state] = phase
    sol = integrate.solve_ivp(lambda _t, y: gen @ y, (0.0, t), y0, method="DOP853",
                              rtol=rtol, atol=rtol * 1e-3)
    if not sol.success:
        raise NumericalError(f"ODE integration failed at alpha={alpha}, t={t}: {sol.message} "
                             f"(steps: {sol.t.size}, last t: {sol.t[-1]:.6g})")
    return sol.y[:, -1], sol.t.size


def conditional_char_fn(spec: ModelSpec, alpha: float, t: float) -> complex:
    """CF of ``L(t)`` given that every component starts moving in the + direction.

    Per component ``exp(-lam t) [cosh(D t) + (lam + i a alpha c) sinh(D t)/D]``
    with ``D = sqrt(lam^2 - (a alpha c)^2)``.
    """
    out = complex(np.exp(1j * alpha * float(spec.center())))
    for lam, c, a in zip(spec.rates, spec.speeds, spec.coefs):
        drift = a * alpha * c
        d = np.sqrt(complex(lam * lam - drift * drift))
        sinhc = t if abs(d * t) < 1e-8 else np.sinh(d * t) / d
        out *= np.exp(-lam * t) * (np.cosh(d * t) + (lam + 1j * drift) * sinhc)
    return out


def system_cf_check(spec: ModelSpec, alphas: Sequence[float], t: float, tol: float = 1e-8,
                    rtol: float = 1e-10) -> VerificationReport:
    """Integrate ``d f/dt = (i alpha diag(c_sigma) - Lambda_n) f`` and compare the sum with the CF.

    The sign in front of ``i alpha`` is validated first. With the uniform
    start both signs give the same sum (the drift set is symmetric), so the
    probe starts from the all-plus direction state and compares against
    :func:`conditional_char_fn`; the matching sign is kept for the sweep.
    """
    if spec.n > SYSTEM_N_CAP:
        raise SizeLimitError(f"n={spec.n} exceeds the system check cap {SYSTEM_N_CAP}")
    probe = next((a for a in alphas if a != 0), 1.0)
    target = conditional_char_fn(spec, probe, t)
    errs = {}
    for sign in (1, -1):
        y, _ = _integrate_system(spec, probe, t, sign, rtol, start_state=2 ** spec.n - 1)
        errs[sign] = float(abs(y.sum() - target))
    sign = min(errs, key=errs.get)
    residuals, details = [], []
    for alpha in alphas:
        y, steps = _integrate_system(spec, alpha, t, sign, rtol)
        r = float(abs(y.sum() - char_fn_L(spec, alpha, t)))
        residuals.append(r)
        details.append({"alpha": float(alpha), "t": float(t), "residual": r, "steps": steps})
    notes = {"convention": "+i alpha c_sigma" if sign > 0 else "-i alpha c_sigma",
             "probe_alpha": float(probe), "probe_errors": {str(k): v for k, v in errs.items()}}
    return _report("system_cf", residuals, tol, details, notes=notes)


# -- initial data for X1 +- X2 --------------------------------------------------------

def initial_condition_check(p1: TelegraphParams, p2: TelegraphParams, sign: str = "+",
                            alphas: Sequence[float] | None = None,
                            tol: float = 1e-10) -> VerificationReport:
    """Time derivatives of the CF of ``X_1 +- X_2`` at ``t = 0``, orders 0 to 3.

    Expected values: ``phase``, ``0``, ``-(c1^2 + c2^2) alpha^2 phase`` and
    ``2 (lam1 c1^2 + lam2 c2^2) alpha^2 phase``. Each residual is divided by
    ``max(|expected|, (lam1 + lam2 + (c1 + c2)|alpha|)**k)``, the natural size
    of the k-th derivative.
    """
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    coef2 = 1 if sign == "+" else -1
    spec = ModelSpec((Component(p1, 1), Component(p2, coef2)))
    if alphas is None:
        alphas = np.linspace(-3.0, 3.0, 11)
    l1, l2 = float(p1.rate), float(p2.rate)
    c1, c2 = float(p1.speed), float(p2.speed)
    start = float(p1.start) + coef2 * float(p2.start)
    residuals, details = [], []
    for alpha in alphas:
        alpha = float(alpha)
        phase = np.exp(1j * alpha * start)
        expected = [
            phase,
            0j,
            -(c1 ** 2 + c2 ** 2) * alpha ** 2 * phase,
            2 * (l1 * c1 ** 2 + l2 * c2 ** 2) * alpha ** 2 * phase,
        ]
        rep = exp_sum_representation(spec, alpha)
        for k, want in enumerate(expected):
            got = rep.derivative_at_zero(k)
            scale = max(abs(want), (l1 + l2 + (c1 + c2) * abs(alpha)) ** k, 1e-300)
            r = abs(got - want) / scale
            residuals.append(r)
            details.append({"alpha": alpha, "k": k, "value": got, "expected": want, "residual": r})
    return _report(f"initial_condition{sign}", residuals, tol, details)


# -- finite-difference residual ---------------------------------------------------------

def fd_stencil(order: int, accuracy: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Central finite-difference weights for the ``order``-th derivative (unit spacing)."""
    half = (order + 1) // 2 - 1 + accuracy // 2
    offsets = np.arange(-half, half + 1)
    if order == 0:
        return np.array([0]), np.array([1.0])
    n = offsets.size
    A = np.array([[Fraction(int(o)) ** p for o in offsets] for p in range(n)], dtype=object)
    b = [Fraction(0)] * n
    b[order] = Fraction(math.factorial(order))
    weights = _solve_exact(A, b)
    return offsets, np.array([float(w) for w in weights])


def _solve_exact(A, b):
    n = len(b)
    M = [[Fraction(A[i][j]) for j in range(n)] + [b[i]] for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col] / M[col][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]


def apply_operator_fd(poly: OperatorPoly, func: Callable, t: float, x: float, h: float) -> float:
    """Apply ``poly(d/dt, d/dx)`` to ``func(t, x)`` at one point with 4th-order central differences."""
    cache: dict[tuple[int, int], float] = {}

    def f(it, ix):
        key = (it, ix)
        if key not in cache:
            cache[key] = float(func(t + it * h, x + ix * h))
        return cache[key]

    total = 0.0
    for (i, j), c in poly.coeffs.items():
        ot, wt = fd_stencil(i)
        ox, wx = fd_stencil(j)
        acc = 0.0
        for a, wa in zip(ot, wt):
            for b, wb in zip(ox, wx):
                if wa and wb:
                    acc += wa * wb * f(int(a), int(b))
        total += float(c) * acc / h ** (i + j)
    return total


def pointwise_ac_density(spec: ModelSpec, x: float, t: float, tol: float = 1e-14) -> float:
    """Continuous-part density of ``L(t)`` at one point, for ``n <= 2``.

    For two components the density is the sum of the two single-switch terms
    (one component's continuous density shifted by the other's atoms) and the
    convolution of the two continuous densities, computed by adaptive
    quadrature.
    """
    eff = spec.effective_params()
    if spec.n == 1:
        return float(density_ac(eff[0], x, t))
    if spec.n != 2:
        raise SizeLimitError("pointwise density available for n <= 2 only")
    p1, p2 = eff
    total = 0.0
    for pa, pb in ((p1, p2), (p2, p1)):
        w = 0.5 * math.exp(-float(pb.rate) * t)
        for s in (-1.0, 1.0):
            shift = float(pb.start) + s * float(pb.speed) * t
            total += w * float(density_ac(pa, x - shift, t))
    lo1, hi1 = float(p1.start) - float(p1.speed) * t, float(p1.start) + float(p1.speed) * t
    lo2, hi2 = float(p2.start) - float(p2.speed) * t, float(p2.start) + float(p2.speed) * t
    a, b = max(lo1, x - hi2), min(hi1, x - lo2)
    if b > a:
        g1, g2 = _scalar_density(p1, t), _scalar_density(p2, t)
        f = lambda y: g1(y) * g2(x - y)
        inner = [v for v in (float(p1.start), x - float(p2.start)) if a < v < b]
        conv, _ = integrate.quad(f, a, b, points=inner or None, epsabs=tol, epsrel=tol, limit=400)
        total += conv
    return total


def _scalar_density(p: TelegraphParams, t: float):
    """Fast scalar version of :func:`density_ac` for quadrature integrands."""
    lam, c, x0 = float(p.rate), float(p.speed), float(p.start)
    ct, lt, k = c * t, lam * t, lam / c

    def f(x):
        y = x - x0
        if abs(y) >= ct:
            return 0.0
        xi = k * math.sqrt((ct - y) * (ct + y))
        shift = math.exp(xi - lt)
        i1_over = special.i1e(xi) / xi if xi > 1e-8 else 0.5 * math.exp(-xi)
        return shift * (lam * special.i0e(xi) + lam * lam * t * i1_over) / (2 * c)

    return f


def _smooth_points(spec: ModelSpec, times, h: float, margin_cells: int, per_time: int):
    signs = enumerate_sign_sequences(spec.n)
    drifts = [float(sigma_speed(spec, s)) for s in signs]
    center = float(spec.center())
    vmax = float(max_sigma_speed(spec))
    points = []
    for t in times:
        reach = 3 * h * (1 + max(abs(d) for d in drifts))
        pad = margin_cells * h + reach
        xs = np.linspace(center - vmax * t, center + vmax * t, 801)
        ok = [x for x in xs
              if all(abs(x - (center + d * t)) > pad for d in drifts)]
        if not ok:
            continue
        pick = np.linspace(0, len(ok) - 1, min(per_time, len(ok))).round().astype(int)
        points.extend((float(t), float(ok[i])) for i in pick)
    return points


def fd_residual(spec: ModelSpec, t_window: tuple[float, float] = (0.9, 1.1), h: float = 0.05,
                levels: int = 2, margin_cells: int = 5, per_time: int = 4,
                min_ratio: float = 2.8, allow_higher: bool = False) -> VerificationReport:
    """Finite-difference residual of the governing operator on the continuous density.

    Evaluation points are chosen on the coarsest grid at least
    ``margin_cells`` cells (plus the stencil reach) away from every singular
    line ``x = center + c_sigma t``. The step is halved ``levels - 1`` times;
    the check passes when every refinement reduces the maximum residual by at
    least ``min_ratio``, and is reported inconclusive otherwise.

    Rounding in the density values is amplified by about ``200 / h**4`` in
    the fourth-order stencils (roughly 1e-7 at ``h = 0.0125``), so further
    halvings soon measure noise rather than truncation error.
    """
    if spec.n > 2 and not allow_higher:
        raise SizeLimitError("fd_residual is limited to n <= 2")
    P = governing_operator(spec)
    times = np.linspace(t_window[0], t_window[1], 3)
    points = _smooth_points(spec, times, h, margin_cells, per_time)
    if not points:
        raise ValueError("no evaluation points in the smooth interior; reduce h or margin")
    func = lambda t, x: pointwise_ac_density(spec, x, t)
    steps, maxima, details = [], [], []
    step = h
    for _ in range(levels):
        worst = max(abs(apply_operator_fd(P, func, t, x, step)) for t, x in points)
        steps.append(step)
        maxima.append(float(worst))
        details.append({"h": step, "max_residual": float(worst)})
        step /= 2
    ratios = [float(a / b) if b > 0 else math.inf for a, b in zip(maxima, maxima[1:])]
    orders = [math.log2(r) if r > 0 else float("nan") for r in ratios]
    monotone = all(b < a for a, b in zip(maxima, maxima[1:]))
    passed = all(r >= min_ratio for r in ratios)
    status = "passed" if passed else "inconclusive"
    tolerance = maxima[-2] / min_ratio if len(maxima) > 1 else math.inf
    notes = {"ratios": ratios, "orders": orders, "monotone": monotone, "points": len(points)}
    return VerificationReport("fd_residual", maxima[-1], tolerance, passed, details,
                              status=status, advisory=True, notes=notes)
