import math
from fractions import Fraction

import numpy as np
import pytest

from telegraph_forms.model import ModelSpec, SizeLimitError, TelegraphParams
from telegraph_forms.operator_algebra import T, X, governing_operator, symbol_eval
from telegraph_forms.telegraph import density_ac
from telegraph_forms.verifier import (
    VerificationReport,
    apply_operator_fd,
    fd_residual,
    fd_stencil,
    initial_condition_check,
    pointwise_ac_density,
    symbol_root_check,
    system_cf_check,
)


def _rational_spec(rng, n):
    vals = lambda: Fraction(int(rng.integers(1, 12)), int(rng.integers(1, 6)))
    return ModelSpec.from_arrays([vals() for _ in range(n)], [vals() for _ in range(n)],
                                 coefs=[vals() * int(rng.choice([-1, 1])) for _ in range(n)],
                                 starts=[vals() - 2 for _ in range(n)])


def test_report_invariant():
    r = VerificationReport("x", 0.5, 1.0, True)
    assert r.status == "passed"
    assert VerificationReport("x", 2.0, 1.0, False).status == "failed"
    assert '"check_name": "x"' in r.to_json()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_symbol_roots_random(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        spec = _rational_spec(rng, n)
        rep = symbol_root_check(spec, rng.uniform(-4, 4, 10))
        assert rep.passed and rep.max_residual < 1e-8
        assert rep.max_residual == max(d["residual"] for d in rep.details)


def test_symbol_roots_n1_quadratic_and_zero_frequency():
    lam, c = 2.0, 3.0
    P = governing_operator(ModelSpec.from_arrays([2], [3]))
    for alpha in (0.1, 0.5, 2.0):
        d = np.sqrt(complex(lam * lam - c * c * alpha * alpha))
        for mu in (-lam + d, -lam - d):
            assert abs(mu * mu + 2 * lam * mu + c * c * alpha * alpha) < 1e-12
            assert abs(symbol_eval(P, mu, 1j * alpha)) < 1e-12
    spec = ModelSpec.from_arrays([1, 3], [2, 5])
    P2 = governing_operator(spec)
    assert symbol_eval(P2, Fraction(0), Fraction(0)) == 0
    assert symbol_root_check(spec, [0.0]).passed


def test_symbol_roots_confluent_derivative():
    spec = ModelSpec.from_arrays([1, 2], [1, 3])
    rep = symbol_root_check(spec, [1.0, 2 / 3])
    assert rep.passed
    assert any(d["derivative"] == 1 for d in rep.details)


def test_symbol_roots_detect_wrong_operator():
    spec = ModelSpec.from_arrays([1, 2], [1, 3])
    wrong = governing_operator(spec) + T * X
    assert not symbol_root_check(spec, [0.7, 1.9], operator=wrong).passed


def test_system_cf_random_and_trivial_cases():
    rng = np.random.default_rng(12)
    spec = _rational_spec(rng, 2)
    rep = system_cf_check(spec, [0.5, 1.0, 2.0], 1.0)
    assert rep.passed and rep.max_residual < 1e-8
    assert rep.notes["convention"] in ("+i alpha c_sigma", "-i alpha c_sigma")
    zero = system_cf_check(spec, [0.0], 2.0)
    assert zero.max_residual < 1e-10
    single = system_cf_check(ModelSpec.from_arrays([1.3], [0.7], starts=[0.4]), [0.5, 3.0], 1.5)
    assert single.max_residual < 1e-10


def test_system_cf_convention_resolved_when_asymmetric():
    spec = ModelSpec.from_arrays([1, 2], [1, 3], starts=[1, 0])
    rep = system_cf_check(spec, [1.0], 1.0)
    errs = rep.notes["probe_errors"]
    assert min(errs.values()) < 1e-8 < max(errs.values())


def test_system_cf_residual_does_not_grow_with_n():
    rng = np.random.default_rng(30)
    worst = [system_cf_check(_rational_spec(rng, n), [0.5, 1.5], 1.0).max_residual for n in (1, 2, 3, 4)]
    assert max(worst) < 1e-8
    with pytest.raises(SizeLimitError):
        system_cf_check(ModelSpec.from_arrays([1] * 7, [1] * 7), [1.0], 1.0)


@pytest.mark.parametrize("sign", ["+", "-"])
def test_initial_conditions(sign):
    rng = np.random.default_rng(5)
    for _ in range(5):
        p1 = TelegraphParams(*(Fraction(int(v), 3) for v in rng.integers(1, 12, 3)))
        p2 = TelegraphParams(*(Fraction(int(v), 2) for v in rng.integers(1, 12, 3)))
        rep = initial_condition_check(p1, p2, sign)
        assert rep.passed and rep.max_residual < 1e-10
        assert {d["k"] for d in rep.details} == {0, 1, 2, 3}


def test_initial_conditions_phase_invariant():
    p1, p2 = TelegraphParams(1, 2, 0), TelegraphParams(3, 1, 0)
    base = initial_condition_check(p1, p2, "+")
    shifted = initial_condition_check(TelegraphParams(1, 2, 5), TelegraphParams(3, 1, 5), "+")
    np.testing.assert_allclose([d["residual"] for d in base.details],
                               [d["residual"] for d in shifted.details], atol=1e-15)
    phases = [d["value"] / d["expected"] for d in shifted.details if d["k"] == 0]
    assert any(abs(ph - 1) > 1e-3 for ph in [d["value"] for d in shifted.details if d["k"] == 0])
    assert all(abs(ph - 1) < 1e-12 for ph in phases)
    with pytest.raises(ValueError):
        initial_condition_check(p1, p2, "*")


def test_fd_stencils():
    x = np.arange(-3, 4, dtype=float)
    for order in range(5):
        off, w = fd_stencil(order)
        for p in range(order + 4):
            exact = math.factorial(p) / math.factorial(p - order) * 0.0 ** (p - order) if p >= order else 0.0
            assert abs(np.dot(w, off.astype(float) ** p) - exact) < 1e-10
    assert x.size == 7


def test_fd_operator_on_constant_in_x_function():
    P = governing_operator(ModelSpec.from_arrays([1, 2], [1, 3]))
    g = lambda t: math.exp(-0.7 * t) * math.sin(t)
    pure_t = sum(float(c) * (-0.7 + 1j) ** i for (i, j), c in P.coeffs.items() if j == 0)
    val = apply_operator_fd(P, lambda t, x: g(t), 0.6, 0.3, 0.01)
    exact = (pure_t * np.exp((-0.7 + 1j) * 0.6)).imag
    assert val == pytest.approx(exact, rel=1e-6)


def test_pointwise_density_matches_closed_form_and_mass():
    p = TelegraphParams(1.2, 0.9, 0.1)
    spec = ModelSpec.from_arrays([1.2], [0.9], starts=[0.1])
    for x in (-0.5, 0.1, 0.8):
        assert pointwise_ac_density(spec, x, 1.0) == density_ac(p, x, 1.0)
    from scipy import integrate
    sym = ModelSpec.from_arrays([1.0, 1.0], [1.0, 1.0])
    mass = sum(integrate.quad(lambda x: pointwise_ac_density(sym, x, 1.0), a, b, limit=200)[0]
               for a, b in ((-2, -1), (-1, 0), (0, 1), (1, 2)))
    assert mass == pytest.approx(1 - math.exp(-2), abs=1e-7)


def test_fd_residual_convergence():
    for spec in (ModelSpec.from_arrays([1.0], [1.0]), ModelSpec.from_arrays([1.0, 1.0], [1.0, 1.0])):
        rep = fd_residual(spec)
        assert rep.advisory
        assert rep.status == "passed"
        assert all(r >= 2.8 for r in rep.notes["ratios"])
        assert all(o >= 1.5 for o in rep.notes["orders"])
    with pytest.raises(SizeLimitError):
        fd_residual(ModelSpec.from_arrays([1] * 3, [1] * 3))


def test_fd_residual_inconclusive_is_reported():
    rep = fd_residual(ModelSpec.from_arrays([1.0], [1.0]), min_ratio=1e6)
    assert rep.status == "inconclusive" and not rep.passed
    assert len(rep.details) == 2
