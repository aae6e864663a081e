"""Distribution of the linear form ``L(t) = sum_k a_k X_k(t)``.

The law of ``L(t)`` splits into a discrete part on at most ``2**n`` points,
reached when no component has switched direction by time ``t`` (total
mass ``exp(-Lambda t)``), and an absolutely continuous part. The
characteristic function is the product of the component characteristic
functions. The continuous part's density is recovered on a uniform grid by
discrete Fourier inversion after the atoms' transform has been subtracted.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .model import (
    BandwidthError,
    DomainError,
    ModelSpec,
    SignSeq,
    enumerate_sign_sequences,
    lambda_total,
    max_sigma_speed,
    sigma_speed,
)
from .telegraph import reduced_char_fn

__all__ = [
    "SingularAtom",
    "ExpTerm",
    "ExpSumRep",
    "DistributionGrid",
    "AccuracyWarning",
    "support",
    "singular_atoms",
    "singular_location",
    "char_fn_L",
    "singular_char_fn",
    "exp_sum_representation",
    "ac_density",
    "cdf",
    "ac_cdf",
]

CONFLUENT_THRESHOLD = 1e-7
TAIL_TOLERANCE = 1e-6
MAX_POINTS = 2 ** 20
MIN_POINTS = 256
NEGATIVE_WARN = -1e-8


class AccuracyWarning(UserWarning):
    """Numerical result is usable but carries a visible discretisation artefact."""


@dataclass(frozen=True)
class SingularAtom:
    location: float
    mass: float
    multiplicity: int
    signs: tuple[SignSeq, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {"location": self.location, "mass": self.mass, "multiplicity": self.multiplicity}


def support(spec: ModelSpec, t: float) -> tuple[float, float]:
    """Closed interval carrying the law of ``L(t)``."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    center = float(spec.center())
    half = float(max_sigma_speed(spec)) * t
    return center - half, center + half


def singular_location(spec: ModelSpec, signs, t: float):
    """Float location(s) reached without switching, for sign rows ``signs``.

    The accumulation order here is shared with the Monte Carlo sampler, so
    both produce bitwise identical values.
    """
    signs = np.asarray(signs)
    acs = spec.coefs * spec.speeds
    value = np.full(signs.shape[:-1], float(spec.center()))
    for k in range(spec.n):
        value = value + acs[k] * (signs[..., k] * t)
    return value


def singular_atoms(spec: ModelSpec, t: float) -> list[SingularAtom]:
    """Atoms of ``L(t)`` with coinciding locations merged, sorted by location.

    In exact mode locations are compared through the exact drifts
    ``c_sigma``; otherwise two points merge when they are closer than
    ``1e-12`` times the support width.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    signs = enumerate_sign_sequences(spec.n)
    unit = math.exp(-float(lambda_total(spec)) * t) / 2 ** spec.n
    locs = singular_location(spec, np.array(signs), t)
    groups: list[list[int]] = []
    if spec.exact_mode:
        by_speed: dict[Fraction, list[int]] = {}
        for idx, s in enumerate(signs):
            by_speed.setdefault(sigma_speed(spec, s), []).append(idx)
        groups = list(by_speed.values())
    else:
        lo, hi = support(spec, t)
        tol = 1e-12 * (hi - lo)
        order = np.argsort(locs, kind="stable")
        for idx in order:
            if groups and abs(locs[idx] - locs[groups[-1][0]]) <= tol:
                groups[-1].append(int(idx))
            else:
                groups.append([int(idx)])
    atoms = [
        SingularAtom(float(locs[g[0]]), unit * len(g), len(g), tuple(signs[i] for i in g))
        for g in groups
    ]
    atoms.sort(key=lambda a: a.location)
    return atoms


def _component_factors(spec: ModelSpec, alpha, t: float):
    """Per-component ``exp(-lam t) H_k(a_k alpha, t)`` as an (n, ...) array."""
    alpha = np.asarray(alpha, dtype=float)
    return np.stack([
        np.asarray(reduced_char_fn(lam, c, a * alpha, t))
        for lam, c, a in zip(spec.rates, spec.speeds, spec.coefs)
    ])


def char_fn_L(spec: ModelSpec, alpha, t: float):
    """Characteristic function ``E exp(i alpha L(t))`` from the product formula."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    alpha_arr = np.asarray(alpha, dtype=float)
    phase = np.exp(1j * alpha_arr * float(spec.center()))
    out = phase * np.prod(_component_factors(spec, alpha_arr, t), axis=0)
    return complex(out) if np.ndim(alpha) == 0 else out


def singular_char_fn(spec: ModelSpec, alpha, t: float):
    """Transform ``sum_j m_j exp(i alpha q_j)`` of the atoms.

    Evaluated as the product of the per-component atom transforms
    ``exp(-lam t) cos(a c alpha t)``, which equals the sum over atoms.
    """
    alpha_arr = np.asarray(alpha, dtype=float)
    out = np.exp(1j * alpha_arr * float(spec.center()) - float(lambda_total(spec)) * t)
    for c, a in zip(spec.speeds, spec.coefs):
        out = out * np.cos(a * c * alpha_arr * t)
    return complex(out) if np.ndim(alpha) == 0 else out


# -- exponential-sum representation ----------------------------------------------

@dataclass(frozen=True)
class ExpTerm:
    weight: complex
    exponent: complex
    t_power: int = 0


@dataclass(frozen=True)
class ExpSumRep:
    """``phase * sum_terms weight * t**t_power * exp(exponent * t)``."""

    phase: complex
    terms: tuple[ExpTerm, ...]
    alpha: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        total = np.zeros(t.shape, dtype=complex)
        for term in self.terms:
            total = total + term.weight * t ** term.t_power * np.exp(term.exponent * t)
        total = self.phase * total
        return complex(total) if total.ndim == 0 else total

    def derivative_at_zero(self, k: int) -> complex:
        """``d^k/dt^k`` of the represented function at ``t = 0``."""
        total = 0j
        for term in self.terms:
            m = term.t_power
            if k >= m:
                total += term.weight * math.perm(k, m) * term.exponent ** (k - m)
        return self.phase * total

    def exponents(self) -> list[tuple[complex, int]]:
        """Distinct exponents with the largest t-power attached to each."""
        best: dict[int, tuple[complex, int]] = {}
        for idx, term in enumerate(self.terms):
            for key, (mu, m) in best.items():
                if abs(mu - term.exponent) <= 1e-12 * (1 + abs(mu)):
                    best[key] = (mu, max(m, term.t_power))
                    break
            else:
                best[idx] = (term.exponent, term.t_power)
        return list(best.values())

    @property
    def weight_sum(self) -> complex:
        return sum((t.weight for t in self.terms if t.t_power == 0), 0j)


def _factor_terms(lam: float, c: float, xi: float) -> list[tuple[complex, complex, int]]:
    disc = lam * lam - (c * xi) ** 2
    delta = complex(np.sqrt(complex(disc)))
    if abs(delta) < CONFLUENT_THRESHOLD * lam:
        # exp(-lam t) (1 + lam t): double exponent -lam
        return [(1.0 + 0j, complex(-lam), 0), (complex(lam), complex(-lam), 1)]
    return [
        (0.5 * (1 + lam / delta), -lam + delta, 0),
        (0.5 * (1 - lam / delta), -lam - delta, 0),
    ]


def exp_sum_representation(spec: ModelSpec, alpha: float) -> ExpSumRep:
    """Write the characteristic function at fixed ``alpha`` as a sum of exponentials in t.

    Each factor is ``sum_{+-} (1 +- lam/Delta)/2 * exp((-lam +- Delta) t)``
    with ``Delta = sqrt(lam^2 - c^2 a^2 alpha^2)``; near ``Delta = 0`` the pair
    is replaced by the confluent form ``(1 + lam t) exp(-lam t)``.
    Terms with equal exponent and t-power are merged.
    """
    alpha = float(alpha)
    terms = [(1 + 0j, 0j, 0)]
    for lam, c, a in zip(spec.rates, spec.speeds, spec.coefs):
        new = []
        for w1, e1, m1 in terms:
            for w2, e2, m2 in _factor_terms(lam, c, a * alpha):
                new.append((w1 * w2, e1 + e2, m1 + m2))
        terms = new
    merged: list[list] = []
    for w, e, m in sorted(terms, key=lambda x: (x[2], x[1].real, x[1].imag)):
        for entry in merged:
            if entry[2] == m and abs(entry[1] - e) <= 1e-13 * (1 + abs(e)):
                entry[0] += w
                break
        else:
            merged.append([w, e, m])
    phase = complex(np.exp(1j * alpha * float(spec.center())))
    return ExpSumRep(phase, tuple(ExpTerm(complex(w), complex(e), m) for w, e, m in merged), alpha)


# -- density grid ------------------------------------------------------------------

@dataclass(frozen=True)
class DistributionGrid:
    """Absolutely continuous density sampled at ``x0 + m*dx``, ``m = 0..N-1``."""

    t: float
    x0: float
    dx: float
    values: np.ndarray
    ac_mass: float
    bandwidth: float = float("nan")
    tail: float = float("nan")

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(len(self.values))

    def cumulative(self, x, normalized: bool = False):
        """Integral of the gridded density up to ``x``.

        Each value is treated as the mass of the cell ``[x_m - dx/2, x_m + dx/2]``
        spread uniformly, so the total equals ``dx * sum(values)`` exactly.
        """
        x = np.asarray(x, dtype=float)
        edges = self.x0 - 0.5 * self.dx + self.dx * np.arange(len(self.values) + 1)
        cum = np.concatenate([[0.0], np.cumsum(self.values) * self.dx])
        out = np.interp(x, edges, cum, left=0.0, right=cum[-1])
        if normalized:
            out = out / cum[-1]
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "x0": self.x0,
            "dx": self.dx,
            "values": [float(v) for v in self.values],
            "ac_mass": self.ac_mass,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "density"])
        for x, v in zip(self.x, self.values):
            writer.writerow([repr(float(x)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, data: dict) -> "DistributionGrid":
        values = np.asarray(data["values"], dtype=float)
        return cls(float(data["t"]), float(data["x0"]), float(data["dx"]), values, float(data["ac_mass"]))

    @classmethod
    def from_json(cls, text: str) -> "DistributionGrid":
        return cls.from_dict(json.loads(text))


def _ac_transform(spec: ModelSpec, alpha, t: float):
    return char_fn_L(spec, alpha, t) - singular_char_fn(spec, alpha, t)


def _tail_level(spec: ModelSpec, t: float, alpha_max: float) -> float:
    band = np.linspace(0.9 * alpha_max, alpha_max, 257)
    return float(np.max(np.abs(_ac_transform(spec, band, t))))


def ac_density(spec: ModelSpec, t: float, half_width_factor: float = 0.25,
               points: int | None = None, *, tail_tol: float = TAIL_TOLERANCE,
               max_points: int = MAX_POINTS) -> DistributionGrid:
    """Invert the continuous part's characteristic function on a uniform grid.

    ``values[m]`` is the mean density over the cell of width ``dx`` centred
    at ``x0 + m*dx``, so ``dx * values.sum()`` reproduces the continuous
    mass exactly up to the clipping of negative ripples. The grid spans the support widened by ``half_width_factor`` on each side.
    With ``points=None`` the number of samples starts at 256 and doubles
    until the transform has decayed below ``tail_tol`` near the band edge.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if half_width_factor < 0:
        raise ValueError("half_width_factor must be nonnegative")
    lo, hi = support(spec, t)
    center = float(spec.center())
    half = (1.0 + half_width_factor) * 0.5 * (hi - lo)
    period = 2.0 * half

    def bandwidth(npts):
        return math.pi * npts / period

    if points is None:
        npts = MIN_POINTS
        while _tail_level(spec, t, bandwidth(npts)) > tail_tol:
            if npts >= max_points:
                raise BandwidthError(
                    f"transform still above {tail_tol:g} at {npts} points; "
                    "widen max_points or reduce the padding"
                )
            npts *= 2
    else:
        npts = int(points)
        if npts < MIN_POINTS or npts & (npts - 1):
            raise ValueError("points must be a power of two >= 256")
        level = _tail_level(spec, t, bandwidth(npts))
        if level > tail_tol:
            raise BandwidthError(
                f"|phi_ac| = {level:.3g} > {tail_tol:g} at the band edge with {npts} points; "
                "use more points"
            )

    x0 = center - half
    dx = period / npts
    j = np.arange(npts // 2 + 1)
    alpha = 2.0 * math.pi * j / period
    # cell averages over [x_m - dx/2, x_m + dx/2]: multiply by the box transform
    g = _ac_transform(spec, alpha, t) * np.exp(-1j * alpha * x0) * np.sinc(alpha * dx / (2 * math.pi))
    values = np.fft.irfft(np.conj(g), n=npts) * (npts / period)
    xs = x0 + dx * np.arange(npts)
    # cells entirely outside the closed support carry only ringing
    values[(xs + 0.5 * dx < lo) | (xs - 0.5 * dx > hi)] = 0.0
    low = float(values.min())
    if low < NEGATIVE_WARN:
        warnings.warn(
            f"inverted density dips to {low:.3g}; negative values clipped "
            "(Gibbs oscillation near the jump points)",
            AccuracyWarning,
            stacklevel=2,
        )
    values = np.clip(values, 0.0, None)
    return DistributionGrid(
        t=float(t), x0=x0, dx=dx, values=values, ac_mass=float(values.sum() * dx),
        bandwidth=bandwidth(npts), tail=_tail_level(spec, t, bandwidth(npts)),
    )


@functools.lru_cache(maxsize=16)
def _cached_grid(spec: ModelSpec, t: float) -> DistributionGrid:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        return ac_density(spec, t)


def ac_cdf(spec: ModelSpec, x, t: float, normalized: bool = False):
    """``Pr{L(t) < x, at least one switch}`` (divided by its total if normalized)."""
    if not t > 0:
        raise DomainError("t must be positive")
    return _cached_grid(spec, float(t)).cumulative(x, normalized=normalized)


def cdf(spec: ModelSpec, x, t: float, side: str = "left"):
    """Distribution function of ``L(t)``.

    ``side="left"`` gives ``Pr{L(t) < x}``: atoms count only strictly below
    ``x``. ``side="right"`` gives ``Pr{L(t) <= x}``.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    x_arr = np.asarray(x, dtype=float)
    lo, hi = support(spec, t)
    out = np.asarray(ac_cdf(spec, x_arr, t), dtype=float)
    for atom in singular_atoms(spec, t):
        hit = x_arr > atom.location if side == "left" else x_arr >= atom.location
        out = out + atom.mass * hit
    out = np.where(x_arr < lo, 0.0, out)
    out = np.where(x_arr > hi, 1.0, np.minimum(out, 1.0))
    return float(out) if out.ndim == 0 else out
