"""Domain types for linear forms of independent telegraph processes.

A :class:`ModelSpec` holds ``n`` telegraph components, each with a rate,
a speed, a start point and a nonzero coefficient in the linear form
``L(t) = sum_k a_k X_k(t)``. All parameters are stored as exact
:class:`fractions.Fraction` values; float views are exposed as numpy arrays
for the numerical modules.

Joint direction states are tuples of ``-1``/``+1`` ("sign sequences"),
enumerated in lexicographic order with ``-1`` before ``+1`` and the first
component most significant.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_N_CAP = 8

SignSeq = tuple[int, ...]


class TelegraphError(Exception):
    """Base class for errors raised by this package."""


class SizeLimitError(TelegraphError):
    """Problem size exceeds a configured cap."""


class DimensionError(TelegraphError, ValueError):
    """Mismatched lengths or dimensions."""


class DomainError(TelegraphError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class SchemaError(TelegraphError, ValueError):
    """Malformed model specification."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class PrecisionError(TelegraphError, ArithmeticError):
    """A series or iteration failed to converge to the requested accuracy."""


class BandwidthError(TelegraphError):
    """Characteristic function not decayed enough at the grid bandwidth."""


class StructureError(TelegraphError, ValueError):
    """Matrix lacks the block structure an algorithm relies on."""


class ConsistencyError(TelegraphError):
    """Internal bookkeeping mismatch (e.g. an unmatched sign group)."""


class NumericalError(TelegraphError, ArithmeticError):
    """A numerical routine (ODE integration etc.) failed."""


def to_fraction(value, *, field: str = "value") -> Fraction:
    """Convert ``value`` to an exact rational.

    Strings may be ``"p/q"`` or decimal literals; floats are converted by
    their shortest decimal representation (so ``0.1`` becomes ``1/10``).
    """
    if isinstance(value, bool):
        raise SchemaError(f"{field}: booleans are not numbers", field)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise SchemaError(f"{field}: non-finite value {value!r}", field)
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        text = value.strip()
        try:
            if "/" in text:
                return Fraction(text)
            return Fraction(Decimal(text))
        except (ValueError, ZeroDivisionError, InvalidOperation):
            raise SchemaError(f"{field}: cannot parse {value!r} as a rational", field) from None
    raise SchemaError(f"{field}: unsupported type {type(value).__name__}", field)


def _is_exact_input(value) -> bool:
    return isinstance(value, (str, Rational)) and not isinstance(value, bool)


@dataclass(frozen=True)
class TelegraphParams:
    """One Goldstein-Kac process: switching rate, speed and start point."""

    rate: Fraction
    speed: Fraction
    start: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "rate", to_fraction(self.rate, field="rate"))
        object.__setattr__(self, "speed", to_fraction(self.speed, field="speed"))
        object.__setattr__(self, "start", to_fraction(self.start, field="start"))
        if self.rate <= 0:
            raise SchemaError(f"rate must be positive, got {self.rate}", "rate")
        if self.speed <= 0:
            raise SchemaError(f"speed must be positive, got {self.speed}", "speed")


@dataclass(frozen=True)
class Component:
    params: TelegraphParams
    coef: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coef", to_fraction(self.coef, field="coef"))
        if self.coef == 0:
            raise SchemaError("coefficient must be nonzero", "coef")


@dataclass(frozen=True)
class ModelSpec:
    """Linear form of ``n >= 1`` independent telegraph processes."""

    components: tuple[Component, ...]
    exact_mode: bool = True
    _floats: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise SchemaError("at least one component is required", "components")
        for c in comps:
            if not isinstance(c, Component):
                raise SchemaError("components must be Component instances", "components")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "_floats", {
            "rates": np.array([float(c.params.rate) for c in comps]),
            "speeds": np.array([float(c.params.speed) for c in comps]),
            "starts": np.array([float(c.params.start) for c in comps]),
            "coefs": np.array([float(c.coef) for c in comps]),
        })
        for arr in self._floats.values():
            arr.setflags(write=False)

    @classmethod
    def from_arrays(cls, rates: Sequence, speeds: Sequence, coefs: Sequence | None = None,
                    starts: Sequence | None = None) -> "ModelSpec":
        """Build a spec from parallel parameter sequences.

        ``coefs`` defaults to all ones and ``starts`` to all zeros.
        """
        n = len(rates)
        coefs = [1] * n if coefs is None else list(coefs)
        starts = [0] * n if starts is None else list(starts)
        if not (len(speeds) == len(coefs) == len(starts) == n):
            raise DimensionError("parameter sequences must have equal length")
        raw = list(rates) + list(speeds) + coefs + starts
        comps = tuple(
            Component(TelegraphParams(r, c, x0), a)
            for r, c, a, x0 in zip(rates, speeds, coefs, starts)
        )
        return cls(comps, exact_mode=all(_is_exact_input(v) for v in raw))

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def params(self) -> tuple[TelegraphParams, ...]:
        return tuple(c.params for c in self.components)

    @property
    def rates(self) -> np.ndarray:
        return self._floats["rates"]

    @property
    def speeds(self) -> np.ndarray:
        return self._floats["speeds"]

    @property
    def starts(self) -> np.ndarray:
        return self._floats["starts"]

    @property
    def coefs(self) -> np.ndarray:
        return self._floats["coefs"]

    def effective_params(self) -> tuple[TelegraphParams, ...]:
        """Parameters of each scaled process ``a_k X_k`` as a telegraph process.

        ``a X`` is a telegraph process with start ``a x0`` and speed
        ``|a| c``; the rate is unchanged.
        """
        return tuple(
            TelegraphParams(c.params.rate, abs(c.coef) * c.params.speed, c.coef * c.params.start)
            for c in self.components
        )

    def center(self) -> Fraction:
        """Start point ``sum_k a_k x_k^0`` of the linear form."""
        return sum((c.coef * c.params.start for c in self.components), Fraction(0))

    def to_dict(self) -> dict:
        return {
            "components": [
                {
                    "rate": str(c.params.rate),
                    "speed": str(c.params.speed),
                    "start": str(c.params.start),
                    "coef": str(c.coef),
                }
                for c in self.components
            ]
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def digest(self) -> str:
        """Short stable hash of the canonical JSON form."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def spec_from_dict(data: dict) -> ModelSpec:
    """Parse the JSON spec schema ``{"components": [{rate, speed, start, coef}, ...]}``."""
    if not isinstance(data, dict) or "components" not in data:
        raise SchemaError("spec must be an object with a 'components' list", "components")
    items = data["components"]
    if not isinstance(items, list) or not items:
        raise SchemaError("'components' must be a non-empty list", "components")
    comps = []
    exact = True
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise SchemaError(f"components[{i}] must be an object", f"components[{i}]")
        unknown = set(item) - {"rate", "speed", "start", "coef"}
        if unknown:
            name = sorted(unknown)[0]
            raise SchemaError(f"components[{i}]: unknown field {name!r}", f"components[{i}].{name}")
        for key in ("rate", "speed", "coef"):
            if key not in item:
                raise SchemaError(f"components[{i}]: missing field {key!r}", f"components[{i}].{key}")
        values = {}
        for key in ("rate", "speed", "start", "coef"):
            raw = item.get(key, "0")
            exact = exact and _is_exact_input(raw)
            values[key] = to_fraction(raw, field=f"components[{i}].{key}")
        try:
            params = TelegraphParams(values["rate"], values["speed"], values["start"])
            comps.append(Component(params, values["coef"]))
        except SchemaError as err:
            raise SchemaError(f"components[{i}]: {err}", f"components[{i}].{err.field}") from None
    return ModelSpec(tuple(comps), exact_mode=exact)


def load_spec(path: str | Path) -> ModelSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: invalid JSON ({err.msg})") from None
    return spec_from_dict(data)


def enumerate_sign_sequences(n: int, cap: int = DEFAULT_N_CAP) -> list[SignSeq]:
    """All ``2**n`` sign sequences in lexicographic order, ``-1`` first.

    >>> enumerate_sign_sequences(2)
    [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise SizeLimitError(f"n must be a positive integer, got {n!r}")
    if n > cap:
        raise SizeLimitError(f"n={n} exceeds the cap {cap}")
    return list(itertools.product((-1, 1), repeat=int(n)))


def sign_index(sigma: Iterable[int]) -> int:
    """Position of ``sigma`` in the lexicographic enumeration."""
    idx = 0
    for s in sigma:
        idx = 2 * idx + (1 if s > 0 else 0)
    return idx


def hamming_distance(a: SignSeq, b: SignSeq) -> int:
    if len(a) != len(b):
        raise DimensionError(f"sign sequences differ in length ({len(a)} vs {len(b)})")
    return sum(1 for x, y in zip(a, b) if x != y)


def _check_sigma(spec: ModelSpec, sigma: SignSeq) -> None:
    if len(sigma) != spec.n:
        raise DimensionError(f"sign sequence of length {len(sigma)} for n={spec.n}")
    if any(s not in (-1, 1) for s in sigma):
        raise DimensionError(f"sign entries must be -1 or +1, got {sigma}")


def sigma_speed(spec: ModelSpec, sigma: SignSeq) -> Fraction:
    """Drift ``c_sigma = sum_k a_k i_k c_k`` of ``L`` in direction state ``sigma``."""
    _check_sigma(spec, sigma)
    return sum((c.coef * s * c.params.speed for c, s in zip(spec.components, sigma)), Fraction(0))


def lambda_total(spec: ModelSpec) -> Fraction:
    """Total switching rate ``sum_k lambda_k``."""
    return sum((c.params.rate for c in spec.components), Fraction(0))


def max_sigma_speed(spec: ModelSpec) -> Fraction:
    """Half-width growth rate of the support, ``sum_k |a_k| c_k``."""
    return sum((abs(c.coef) * c.params.speed for c in spec.components), Fraction(0))
