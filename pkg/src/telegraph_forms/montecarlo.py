"""Exact-event simulation of telegraph processes and their linear forms.

Switching times are generated from exponential spacings, so every draw is an
exact sample of ``L(t)``. Draws with no switching at all land exactly on a
singular point; they are identified through the event counts and initial
directions, never by comparing positions.

Sampling is split into fixed-size chunks with one random stream per chunk,
seeded from ``(seed, chunk_index)``. Results do not depend on how many
worker threads process the chunks.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .linear_form import SingularAtom
from .model import ConsistencyError, DomainError, ModelSpec, TelegraphParams

__all__ = [
    "SampleSet",
    "AtomEstimate",
    "KacRow",
    "sample_position",
    "sample_linear_form",
    "empirical_atom_masses",
    "empirical_char_fn",
    "ks_statistic",
    "kac_scaled_spec",
    "brownian_limit_cf",
    "kac_convergence",
]

CHUNK_SIZE = 1 << 16
_BINARY_HEADER = struct.Struct("<Qd")
_RECORD = np.dtype([("value", "<f8"), ("events", "<u4")])


@dataclass(frozen=True)
class SampleSet:
    t: float
    values: np.ndarray
    event_counts: np.ndarray
    initial_signs: np.ndarray
    seed: int

    def __post_init__(self):
        n = len(self.values)
        if len(self.event_counts) != n or len(self.initial_signs) != n:
            raise ValueError("sample arrays must have equal length")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def singular_mask(self) -> np.ndarray:
        return self.event_counts == 0

    def metadata(self) -> dict:
        return {"t": self.t, "count": len(self), "seed": self.seed}

    def to_csv(self, header: dict | None = None) -> str:
        """``value,event_count`` rows; metadata as leading ``#`` comment lines."""
        buf = io.StringIO()
        meta = {**self.metadata(), **(header or {})}
        for key in sorted(meta):
            buf.write(f"# {key}: {meta[key]}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["value", "event_count"])
        for v, e in zip(self.values, self.event_counts):
            writer.writerow([repr(float(v)), int(e)])
        return buf.getvalue()

    def to_binary(self) -> bytes:
        """Little-endian dump: u64 count, f64 t, then (f64 value, u32 events) per draw."""
        rec = np.empty(len(self), dtype=_RECORD)
        rec["value"] = self.values
        rec["events"] = self.event_counts
        return _BINARY_HEADER.pack(len(self), self.t) + rec.tobytes()


def read_binary(data: bytes) -> tuple[float, np.ndarray, np.ndarray]:
    """Inverse of :meth:`SampleSet.to_binary`: ``(t, values, event_counts)``."""
    count, t = _BINARY_HEADER.unpack_from(data, 0)
    rec = np.frombuffer(data, dtype=_RECORD, count=count, offset=_BINARY_HEADER.size)
    return t, rec["value"].copy(), rec["events"].astype(np.int64)


def read_csv(text: str) -> tuple[dict, np.ndarray, np.ndarray]:
    """Inverse of :meth:`SampleSet.to_csv`: ``(metadata, values, event_counts)``."""
    meta = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif line and not line.startswith("value"):
            rows.append(line.split(","))
    values = np.array([float(r[0]) for r in rows])
    events = np.array([int(r[1]) for r in rows], dtype=np.int64)
    return meta, values, events


def _simulate_component(rng: np.random.Generator, rate: float, t: float, size: int):
    """Signed travel time, event count and initial sign for ``size`` paths.

    Position of the path is ``x0 + c * travel``.
    """
    signs0 = rng.integers(0, 2, size=size).astype(np.int8) * 2 - 1
    sign = signs0.astype(float)
    travel = np.zeros(size)
    last = np.zeros(size)
    events = np.zeros(size, dtype=np.int64)
    idx = np.arange(size)
    while idx.size:
        tau = last[idx] + rng.standard_exponential(idx.size) / rate
        hit = tau < t
        idx, tau = idx[hit], tau[hit]
        travel[idx] += sign[idx] * (tau - last[idx])
        sign[idx] = -sign[idx]
        last[idx] = tau
        events[idx] += 1
    travel += sign * (t - last)
    np.clip(travel, -t, t, out=travel)
    return travel, events, signs0


def sample_position(p: TelegraphParams, t: float, rng: np.random.Generator):
    """One draw of ``X(t)``: ``(position, events, initial_sign)``."""
    if not t > 0:
        raise DomainError("t must be positive")
    travel, events, signs0 = _simulate_component(rng, float(p.rate), t, 1)
    return float(p.start) + float(p.speed) * float(travel[0]), int(events[0]), int(signs0[0])


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, chunk]))


def _sample_chunk(spec: ModelSpec, t: float, size: int, seed: int, chunk: int):
    rng = _chunk_rng(seed, chunk)
    acs = spec.coefs * spec.speeds
    value = np.full(size, float(spec.center()))
    events = np.zeros(size, dtype=np.int64)
    signs = np.empty((size, spec.n), dtype=np.int8)
    for k, rate in enumerate(spec.rates):
        travel, ev, s0 = _simulate_component(rng, rate, t, size)
        # same accumulation as linear_form.singular_location
        value = value + acs[k] * travel
        events += ev
        signs[:, k] = s0
    return value, events, signs


def sample_linear_form(spec: ModelSpec, t: float, count: int, seed: int,
                       workers: int = 1) -> SampleSet:
    """Independent draws of ``L(t)``, reproducible from ``(spec, t, count, seed)``."""
    if not t > 0:
        raise DomainError("t must be positive")
    if count < 1:
        raise ValueError("count must be >= 1")
    sizes = [min(CHUNK_SIZE, count - start) for start in range(0, count, CHUNK_SIZE)]
    jobs = [(size, i) for i, size in enumerate(sizes)]
    run = lambda job: _sample_chunk(spec, t, job[0], seed, job[1])
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    return SampleSet(
        t=float(t),
        values=np.concatenate([p[0] for p in parts]),
        event_counts=np.concatenate([p[1] for p in parts]),
        initial_signs=np.concatenate([p[2] for p in parts]),
        seed=int(seed),
    )


@dataclass(frozen=True)
class AtomEstimate:
    atom: SingularAtom
    fraction: float
    ci_low: float
    ci_high: float
    count: int


def empirical_atom_masses(s: SampleSet, atoms: Sequence[SingularAtom], z: float = 4.0) -> list[AtomEstimate]:
    """Observed frequency of each atom among the draws, with a ``z``-sigma binomial interval.

    Zero-event draws are assigned to atoms through their initial directions.
    """
    n_comp = s.initial_signs.shape[1]
    lookup = np.full(2 ** n_comp, -1, dtype=np.int64)
    for a_idx, atom in enumerate(atoms):
        for sig in atom.signs:
            pos = 0
            for v in sig:
                pos = 2 * pos + (v > 0)
            lookup[pos] = a_idx
    sing = s.initial_signs[s.singular_mask]
    weights = 2 ** np.arange(n_comp - 1, -1, -1)
    codes = ((sing > 0).astype(np.int64) * weights).sum(axis=1)
    which = lookup[codes]
    if np.any(which < 0):
        missing = sorted(set(codes[which < 0].tolist()))
        raise ConsistencyError(f"zero-event draws in sign states {missing} match no atom")
    counts = np.bincount(which, minlength=len(atoms))
    total = len(s)
    out = []
    for atom, c in zip(atoms, counts):
        frac = c / total
        half = z * math.sqrt(max(frac * (1 - frac), 1.0 / total) / total)
        out.append(AtomEstimate(atom, frac, frac - half, frac + half, int(c)))
    return out


def empirical_char_fn(s: SampleSet, alpha):
    """``mean(exp(i alpha value))``; vectorised over ``alpha``."""
    alpha_arr = np.atleast_1d(np.asarray(alpha, dtype=float))
    out = np.empty(alpha_arr.shape, dtype=complex)
    for start in range(0, len(s), CHUNK_SIZE):
        block = s.values[start:start + CHUNK_SIZE]
        part = np.exp(1j * np.multiply.outer(alpha_arr, block)).sum(axis=-1)
        out = part if start == 0 else out + part
    out = out / len(s)
    return complex(out[0]) if np.ndim(alpha) == 0 else out


def ks_statistic(s: SampleSet, cdf: Callable, condition: str = "all",
                 cdf_left: Callable | None = None) -> float:
    """Supremum distance between the empirical distribution and ``cdf``.

    ``cdf`` is ``Pr{L <= x}``; pass ``cdf_left`` (``Pr{L < x}``) when the
    reference law has atoms. With ``condition="ac_only"`` only draws with at
    least one switch are used and ``cdf`` should be the normalised
    distribution function of the continuous part.
    """
    if condition == "all":
        data = s.values
    elif condition == "ac_only":
        data = s.values[~s.singular_mask]
    else:
        raise ValueError("condition must be 'all' or 'ac_only'")
    if data.size == 0:
        raise ValueError("no draws satisfy the condition")
    u, counts = np.unique(data, return_counts=True)
    n = data.size
    right = np.cumsum(counts) / n
    left = right - counts / n
    f_right = np.asarray(cdf(u), dtype=float)
    f_left = f_right if cdf_left is None else np.asarray(cdf_left(u), dtype=float)
    return float(max(np.max(np.abs(right - f_right)), np.max(np.abs(left - f_left))))


# -- Kac scaling ------------------------------------------------------------------

def kac_scaled_spec(template: ModelSpec, rhos: Sequence[float], scale: float) -> ModelSpec:
    """Rates ``M lam_k`` and speeds ``sqrt(rho_k M lam_k)``, so ``c_k^2/lam_k = rho_k``."""
    if len(rhos) != template.n:
        raise ValueError("one rho per component is required")
    rates = [scale * lam for lam in template.rates]
    speeds = [math.sqrt(rho * r) for rho, r in zip(rhos, rates)]
    return ModelSpec.from_arrays(rates, speeds, list(template.coefs), list(template.starts))


def brownian_limit_params(template: ModelSpec, rhos: Sequence[float], t: float) -> tuple[float, float]:
    """Mean and variance of the Brownian limit at time ``t``."""
    mean = float(template.center())
    var = t * float(sum(rho * a * a for rho, a in zip(rhos, template.coefs)))
    return mean, var


def brownian_limit_cf(template: ModelSpec, rhos: Sequence[float], alpha, t: float):
    mean, var = brownian_limit_params(template, rhos, t)
    alpha = np.asarray(alpha, dtype=float)
    out = np.exp(1j * alpha * mean - 0.5 * var * alpha ** 2)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class KacRow:
    scale: float
    ks: float
    rates: tuple[float, ...]
    speeds: tuple[float, ...]
    mean: float
    variance: float
    count: int


def kac_convergence(spec_template: ModelSpec, rhos: Sequence[float], scales: Sequence[float],
                    t: float, count: int, seed: int, workers: int = 1) -> list[KacRow]:
    """KS distance of sampled ``L(t)`` to its Brownian limit for each scale ``M``."""
    mean, var = brownian_limit_params(spec_template, rhos, t)
    ref = stats.norm(loc=mean, scale=math.sqrt(var))
    rows = []
    for scale in scales:
        if scale < 1:
            raise ValueError("scales must be >= 1")
        spec = kac_scaled_spec(spec_template, rhos, scale)
        sample = sample_linear_form(spec, t, count, seed, workers=workers)
        rows.append(KacRow(
            scale=float(scale),
            ks=ks_statistic(sample, ref.cdf),
            rates=tuple(float(r) for r in spec.rates),
            speeds=tuple(float(c) for c in spec.speeds),
            mean=mean,
            variance=var,
            count=count,
        ))
    return rows
