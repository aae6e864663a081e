"""Exact polynomial algebra in the commuting symbols ``T = d/dt`` and ``X = d/dx``.

:class:`OperatorPoly` is a bivariate polynomial with rational coefficients,
stored sparsely as ``{(dt_power, dx_power): Fraction}``. The direction-state
system of a linear form is the matrix operator ``D_n + Lambda_n`` whose
diagonal carries ``T + c_sigma X + Lambda``; its determinant is the
order-``2**n`` operator annihilating the transition density.

Two determinant routes are provided and are meant to check each other:

* :func:`det_cofactor` -- Laplace expansion (memoised over column subsets);
* :func:`det_schur` -- one block-Schur step using the ``-lambda_1 E``
  off-diagonal blocks, then recursive block reduction where the blocks
  commute and fraction-free (Bareiss) elimination where they do not.

Both work on integer polynomials internally: the matrix is scaled by the
common denominator of its coefficients and the result divided back.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .model import (
    DEFAULT_N_CAP,
    ModelSpec,
    SizeLimitError,
    StructureError,
    TelegraphParams,
    enumerate_sign_sequences,
    sigma_speed,
)

Monomial = tuple[int, int]

__all__ = [
    "OperatorPoly",
    "OperatorMatrix",
    "T",
    "X",
    "ONE",
    "poly_add",
    "poly_mul",
    "poly_scale",
    "build_lambda_matrix",
    "build_system_matrix",
    "det_cofactor",
    "det_schur",
    "governing_operator",
    "reference_operator_thm4",
    "reference_operator_factored",
    "symmetric_reference_operator",
    "symbol_eval",
    "poly_divides",
]

COFACTOR_MAX_DIM = 8
SCHUR_N_CAP = 5
COFACTOR_N_CAP = 3


def _grlex_key(mono: Monomial) -> tuple[int, int]:
    # graded lex with T > X
    return (mono[0] + mono[1], mono[0])


# -- raw sparse polynomials: dict[(i, j)] -> int | Fraction ------------------

def _radd(p: dict, q: dict, sign: int = 1) -> dict:
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, 0) + sign * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _rmul(p: dict, q: dict) -> dict:
    if not p or not q:
        return {}
    if len(p) < len(q):
        p, q = q, p
    out: dict = {}
    get = out.get
    for (i1, j1), c1 in q.items():
        for (i2, j2), c2 in p.items():
            m = (i1 + i2, j1 + j2)
            out[m] = get(m, 0) + c1 * c2
    return {m: c for m, c in out.items() if c}


def _rscale(p: dict, k) -> dict:
    if not k:
        return {}
    return {m: c * k for m, c in p.items()}


def _rdivexact(p: dict, d: dict):
    """Quotient ``p / d`` by leading-term reduction, or None if inexact."""
    if not d:
        raise ZeroDivisionError("division by the zero polynomial")
    lead = max(d, key=_grlex_key)
    lc = d[lead]
    rem = dict(p)
    quot: dict = {}
    while rem:
        m = max(rem, key=_grlex_key)
        di, dj = m[0] - lead[0], m[1] - lead[1]
        if di < 0 or dj < 0:
            return None
        c = rem[m]
        if isinstance(c, int) and isinstance(lc, int) and c % lc == 0:
            k = c // lc
        else:
            k = Fraction(c) / lc
            if k.denominator == 1:
                k = k.numerator
        quot[(di, dj)] = k
        for (i, j), cd in d.items():
            mm = (i + di, j + dj)
            v = rem.get(mm, 0) - k * cd
            if v:
                rem[mm] = v
            else:
                rem.pop(mm, None)
    return quot


class OperatorPoly:
    """Polynomial in ``T`` (for d/dt) and ``X`` (for d/dx) with exact coefficients.

    Instances are immutable and hashable. Arithmetic accepts other
    polynomials, ints and Fractions.
    """

    __slots__ = ("_coeffs", "_hash")

    def __init__(self, coeffs: Mapping[Monomial, object] | None = None):
        clean = {}
        for (i, j), c in (coeffs or {}).items():
            if i < 0 or j < 0:
                raise ValueError("negative exponent")
            c = Fraction(c)
            if c:
                clean[(int(i), int(j))] = c
        self._coeffs = clean
        self._hash = None

    @classmethod
    def const(cls, c) -> "OperatorPoly":
        return cls({(0, 0): c})

    @classmethod
    def _from_raw(cls, raw: Mapping) -> "OperatorPoly":
        return cls(raw)

    @property
    def coeffs(self) -> dict[Monomial, Fraction]:
        return dict(self._coeffs)

    def coeff(self, dt: int, dx: int) -> Fraction:
        return self._coeffs.get((dt, dx), Fraction(0))

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_constant(self) -> bool:
        return all(m == (0, 0) for m in self._coeffs)

    def total_degree(self) -> int:
        return max((i + j for i, j in self._coeffs), default=-1)

    def degree_t(self) -> int:
        return max((i for i, _ in self._coeffs), default=-1)

    def degree_x(self) -> int:
        return max((j for _, j in self._coeffs), default=-1)

    def terms(self) -> list[tuple[Monomial, Fraction]]:
        """Terms sorted by descending graded-lex order (T > X)."""
        return sorted(self._coeffs.items(), key=lambda mc: _grlex_key(mc[0]), reverse=True)

    def leading_term(self) -> tuple[Monomial, Fraction]:
        if not self._coeffs:
            raise ValueError("zero polynomial has no leading term")
        return self.terms()[0]

    def diff_t(self, k: int = 1) -> "OperatorPoly":
        """Formal k-th derivative with respect to ``T``."""
        out = {}
        for (i, j), c in self._coeffs.items():
            if i >= k:
                out[(i - k, j)] = c * math.perm(i, k)
        return OperatorPoly(out)

    def _coerce(self, other):
        if isinstance(other, OperatorPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return OperatorPoly.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return OperatorPoly(_radd(self._coeffs, other._coeffs))

    __radd__ = __add__

    def __neg__(self):
        return OperatorPoly({m: -c for m, c in self._coeffs.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return OperatorPoly(_radd(self._coeffs, other._coeffs, -1))

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return OperatorPoly(_rscale(self._coeffs, Fraction(other)))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return OperatorPoly(_rmul(self._coeffs, other._coeffs))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result, base = ONE, self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = OperatorPoly.const(other)
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._coeffs.items()))
        return self._hash

    def __repr__(self):
        return f"OperatorPoly({self.render()})"

    def __str__(self):
        return self.render()

    def render(self) -> str:
        """Human-readable form, e.g. ``∂t^2 + 2 ∂t - 9 ∂x^2``."""
        if not self._coeffs:
            return "0"
        parts = []
        for k, ((i, j), c) in enumerate(self.terms()):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            factors = []
            if i:
                factors.append("∂t" if i == 1 else f"∂t^{i}")
            if j:
                factors.append("∂x" if j == 1 else f"∂x^{j}")
            body = " ".join(factors)
            if not body:
                body = str(mag)
            elif mag != 1:
                body = f"{mag} {body}"
            if k == 0:
                parts.append(body if sign == "+" else f"-{body}")
            else:
                parts.append(f"{sign} {body}")
        return " ".join(parts)

    def to_latex(self) -> str:
        if not self._coeffs:
            return "0"
        out = []
        for k, ((i, j), c) in enumerate(self.terms()):
            mag = abs(c)
            num = (rf"\frac{{{mag.numerator}}}{{{mag.denominator}}}"
                   if mag.denominator != 1 else str(mag.numerator))
            ops = ""
            if i:
                ops += r"\partial_t" + (f"^{{{i}}}" if i > 1 else "")
            if j:
                ops += r"\partial_x" + (f"^{{{j}}}" if j > 1 else "")
            body = num if not ops else (ops if mag == 1 else num + " " + ops)
            if k == 0:
                out.append(("-" if c < 0 else "") + body)
            else:
                out.append(("- " if c < 0 else "+ ") + body)
        return " ".join(out)

    def to_terms(self) -> list[dict]:
        return [{"dt": i, "dx": j, "coef": str(c)} for (i, j), c in self.terms()]

    @classmethod
    def from_terms(cls, terms: Iterable[Mapping]) -> "OperatorPoly":
        coeffs: dict = {}
        for term in terms:
            m = (int(term["dt"]), int(term["dx"]))
            coeffs[m] = coeffs.get(m, Fraction(0)) + Fraction(term["coef"])
        return cls(coeffs)


ONE = OperatorPoly.const(1)
T = OperatorPoly({(1, 0): 1})
X = OperatorPoly({(0, 1): 1})


def poly_add(p: OperatorPoly, q: OperatorPoly) -> OperatorPoly:
    return p + q


def poly_mul(p: OperatorPoly, q: OperatorPoly) -> OperatorPoly:
    return p * q


def poly_scale(p: OperatorPoly, k) -> OperatorPoly:
    return p * Fraction(k)


def symbol_eval(p: OperatorPoly, s, xi):
    """Substitute ``T -> s`` and ``X -> xi``.

    With Fraction arguments the result is an exact Fraction; with complex
    arguments it is complex.
    """
    exact = all(isinstance(v, (int, Fraction)) for v in (s, xi))
    total = Fraction(0) if exact else 0j
    for (i, j), c in p.terms():
        coef = c if exact else float(c)
        total += coef * s ** i * xi ** j
    return total


def poly_divides(d: OperatorPoly, p: OperatorPoly) -> OperatorPoly | None:
    """Quotient ``q`` with ``p == d * q`` if it exists, else None."""
    if d.is_zero():
        raise ZeroDivisionError("divisor must be nonzero")
    q = _rdivexact(p._coeffs, d._coeffs)
    return None if q is None else OperatorPoly(q)


class OperatorMatrix:
    """Square matrix with :class:`OperatorPoly` entries."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[Sequence]):
        rows = tuple(
            tuple(e if isinstance(e, OperatorPoly) else OperatorPoly.const(e) for e in row)
            for row in entries
        )
        if not rows or any(len(r) != len(rows) for r in rows):
            raise StructureError("operator matrix must be square and non-empty")
        self.entries = rows

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]

    def __eq__(self, other):
        return isinstance(other, OperatorMatrix) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def transpose(self) -> "OperatorMatrix":
        return OperatorMatrix(list(zip(*self.entries)))

    def is_symmetric(self) -> bool:
        return self == self.transpose()

    def permuted(self, perm: Sequence[int]) -> "OperatorMatrix":
        """Simultaneous row/column permutation: ``out[i][j] = self[perm[i]][perm[j]]``."""
        return OperatorMatrix([[self.entries[a][b] for b in perm] for a in perm])

    def nonzero_pattern(self) -> list[list[bool]]:
        return [[not e.is_zero() for e in row] for row in self.entries]

    def __repr__(self):
        return f"OperatorMatrix(dim={self.dim})"


# -- system matrices ----------------------------------------------------------

def _system_entries(signs, speeds, rates, with_operators=True):
    n = len(rates)
    total = sum(rates, Fraction(0))
    dim = len(signs)
    zero = OperatorPoly()
    diag = OperatorPoly.const(total)
    coupling = [OperatorPoly.const(-r) for r in rates]
    rows = []
    for s, sig_s in enumerate(signs):
        row = [zero] * dim
        row[s] = T + X * speeds[s] + diag if with_operators else diag
        for k in range(n):
            # flipping the k-th direction gives the Hamming neighbours
            m = s ^ (1 << (n - 1 - k))
            row[m] = coupling[k]
        rows.append(row)
    assert len(rows) == dim
    return rows


def build_lambda_matrix(spec: ModelSpec, cap: int = DEFAULT_N_CAP) -> OperatorMatrix:
    """Scalar ``2**n x 2**n`` coupling matrix of the direction-state system."""
    signs = enumerate_sign_sequences(spec.n, cap)
    rates = [p.rate for p in spec.params]
    return OperatorMatrix(_system_entries(signs, None, rates, with_operators=False))


def build_system_matrix(spec: ModelSpec, cap: int = DEFAULT_N_CAP) -> OperatorMatrix:
    """``D_n + Lambda_n`` with diagonal ``T + c_sigma X + Lambda``."""
    signs = enumerate_sign_sequences(spec.n, cap)
    rates = [p.rate for p in spec.params]
    speeds = [sigma_speed(spec, s) for s in signs]
    return OperatorMatrix(_system_entries(signs, speeds, rates))


def system_matrix_from_rates(n: int, speeds: Sequence[Fraction], rates: Sequence[Fraction]) -> OperatorMatrix:
    """System matrix for arbitrary (also zero) rates and per-state drifts.

    ``speeds`` is indexed by lexicographic state position.
    """
    signs = enumerate_sign_sequences(n)
    return OperatorMatrix(_system_entries(signs, [Fraction(c) for c in speeds],
                                          [Fraction(r) for r in rates]))


# -- determinants ----------------------------------------------------------------

def _integer_matrix(m: OperatorMatrix):
    """Entries as integer raw polys plus the scale ``D`` with ``M_int = D * M``."""
    den = 1
    for row in m.entries:
        for e in row:
            for c in e._coeffs.values():
                den = math.lcm(den, c.denominator)
    mat = [[{k: int(c * den) for k, c in e._coeffs.items()} for e in row] for row in m.entries]
    return mat, den


def _from_scaled(raw: dict, den: int, dim: int) -> OperatorPoly:
    scale = Fraction(1, den ** dim)
    return OperatorPoly({k: c * scale for k, c in raw.items()})


def det_cofactor(m: OperatorMatrix, max_dim: int = COFACTOR_MAX_DIM) -> OperatorPoly:
    """Determinant by Laplace expansion along successive rows."""
    dim = m.dim
    if dim > max_dim:
        raise SizeLimitError(f"cofactor expansion refused for dim {dim} > {max_dim}")
    mat, den = _integer_matrix(m)
    memo: dict[int, dict] = {}

    def minor(row: int, mask: int) -> dict:
        if row == dim:
            return {(0, 0): 1}
        if mask in memo:
            return memo[mask]
        total: dict = {}
        pos = 0
        for j in range(dim):
            if not mask >> j & 1:
                continue
            entry = mat[row][j]
            if entry:
                sub = minor(row + 1, mask & ~(1 << j))
                if sub:
                    total = _radd(total, _rmul(entry, sub), -1 if pos & 1 else 1)
            pos += 1
        memo[mask] = total
        return total

    return _from_scaled(minor(0, (1 << dim) - 1), den, dim)


def _rmatmul(a, b):
    n = len(a)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc: dict = {}
            for k in range(n):
                if a[i][k] and b[k][j]:
                    acc = _radd(acc, _rmul(a[i][k], b[k][j]))
            row.append(acc)
        out.append(row)
    return out


def _rmatsub(a, b):
    return [[_radd(x, y, -1) for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _bareiss(mat) -> dict:
    """Fraction-free Gaussian elimination over the integer polynomial ring."""
    a = [list(row) for row in mat]
    n = len(a)
    sign = 1
    prev: dict = {(0, 0): 1}
    for k in range(n - 1):
        if not a[k][k]:
            swap = next((r for r in range(k + 1, n) if a[r][k]), None)
            if swap is None:
                return {}
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = _radd(_rmul(a[i][j], a[k][k]), _rmul(a[i][k], a[k][j]), -1)
                q = _rdivexact(num, prev)
                if q is None:
                    raise ArithmeticError("Bareiss step produced an inexact division")
                a[i][j] = q
        prev = a[k][k]
    return _rscale(a[n - 1][n - 1], sign)


def _det_blocks(mat) -> dict:
    """Determinant via ``det[[A, B], [C, D]] = det(AD - BC)`` when ``CD = DC``.

    Falls back to Bareiss elimination when the lower blocks do not commute
    or the dimension is odd.
    """
    n = len(mat)
    if n == 1:
        return mat[0][0]
    if n == 2:
        return _radd(_rmul(mat[0][0], mat[1][1]), _rmul(mat[0][1], mat[1][0]), -1)
    if n % 2:
        return _bareiss(mat)
    h = n // 2
    A = [row[:h] for row in mat[:h]]
    B = [row[h:] for row in mat[:h]]
    C = [row[:h] for row in mat[h:]]
    D = [row[h:] for row in mat[h:]]
    if _rmatmul(C, D) != _rmatmul(D, C):
        return _bareiss(mat)
    return _det_blocks(_rmatsub(_rmatmul(A, D), _rmatmul(B, C)))


def _check_block_structure(m: OperatorMatrix, spec: ModelSpec) -> Fraction:
    dim = m.dim
    if dim != 2 ** spec.n:
        raise StructureError(f"matrix dimension {dim} does not match 2**n = {2 ** spec.n}")
    if dim == 1:
        raise StructureError("1x1 matrix has no block structure")
    h = dim // 2
    lam1 = spec.params[0].rate
    for i in range(h):
        for j in range(h):
            want = OperatorPoly.const(-lam1) if i == j else OperatorPoly()
            if m[i, h + j] != want or m[h + i, j] != want:
                raise StructureError(
                    f"off-diagonal block entry ({i},{h + j}) is not -lambda_1 * identity"
                )
    return -lam1


def det_schur(m: OperatorMatrix, spec: ModelSpec) -> OperatorPoly:
    """Determinant of the structured system matrix by block-Schur reduction.

    The top step uses ``det = det[(D1 + L)(D2 + L) - lambda_1^2 E]``; the
    half-size matrix is reduced recursively.
    """
    off = _check_block_structure(m, spec)
    mat, den = _integer_matrix(m)
    dim = m.dim
    h = dim // 2
    P = [row[:h] for row in mat[:h]]
    Q = [row[h:] for row in mat[h:]]
    b = int(off * den)
    R = _rmatmul(P, Q)
    for i in range(h):
        R[i][i] = _radd(R[i][i], {(0, 0): b * b}, -1)
    return _from_scaled(_det_blocks(R), den, dim)


def governing_operator(spec: ModelSpec, method: str = "schur", cap: int | None = None) -> OperatorPoly:
    """``Det[D_n + Lambda_n]``, the order-``2**n`` governing operator."""
    if method == "schur":
        limit = SCHUR_N_CAP if cap is None else cap
    elif method == "cofactor":
        limit = COFACTOR_N_CAP if cap is None else cap
    else:
        raise ValueError(f"unknown determinant method {method!r}")
    if spec.n > limit:
        raise SizeLimitError(f"n={spec.n} exceeds the {method} cap {limit}")
    m = build_system_matrix(spec, cap=max(limit, spec.n))
    if method == "cofactor":
        return det_cofactor(m)
    return det_schur(m, spec)


# -- closed forms for two processes --------------------------------------------

def reference_operator_thm4(p1: TelegraphParams, p2: TelegraphParams) -> OperatorPoly:
    """Fourth-order operator for ``X_1 +- X_2`` written out in closed form."""
    l1, l2, c1, c2 = p1.rate, p2.rate, p1.speed, p2.speed
    lam = l1 + l2
    shifted = T + lam
    telegraph_part = T * T + T * (2 * lam) - X * X * (2 * (c1 ** 2 + c2 ** 2)) - (l1 - l2) ** 2
    coupling = X * X * (c1 ** 2 - c2 ** 2) + (l1 ** 2 - l2 ** 2)
    return shifted ** 2 * telegraph_part + coupling ** 2


def reference_operator_factored(p1: TelegraphParams, p2: TelegraphParams) -> OperatorPoly:
    """Same operator as a telegraph-type term minus a product of two heat-type operators."""
    l1, l2, c1, c2 = p1.rate, p2.rate, p1.speed, p2.speed
    lam = l1 + l2
    first = (T + lam) ** 2 * (T * T + T * (2 * lam) - X * X * (2 * (c1 ** 2 + c2 ** 2)))
    heat = T * (l1 - l2) - X * X * (c1 ** 2 - c2 ** 2)
    backward = T * (l1 - l2) + X * X * (c1 ** 2 - c2 ** 2) + 2 * (l1 ** 2 - l2 ** 2)
    return first - heat * backward


def symmetric_reference_operator(rate, speed) -> OperatorPoly:
    """``(T + 2 lam)^2 (T^2 + 4 lam T - 4 c^2 X^2)`` for two identical processes."""
    lam, c = Fraction(rate), Fraction(speed)
    return (T + 2 * lam) ** 2 * (T * T + T * (4 * lam) - X * X * (4 * c * c))
