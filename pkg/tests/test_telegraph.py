import math

import numpy as np
import pytest
from scipy import integrate, special

from telegraph_forms.model import DomainError, PrecisionError, TelegraphParams
from telegraph_forms.telegraph import (
    BesselConfig,
    ac_mass_quadrature,
    bessel_i0,
    bessel_i1,
    char_fn,
    density_ac,
    reduced_char_fn,
    singular_weight,
)


def _series_i(order, z, terms=50):
    return sum((z / 2) ** (2 * k + order) / (math.factorial(k) * math.factorial(k + order))
               for k in range(terms))


def test_bessel_values():
    assert bessel_i0(0.0) == 1.0
    assert bessel_i1(0.0) == 0.0
    assert bessel_i0(1.0) == pytest.approx(1.2660658777520, abs=1e-12)
    assert bessel_i0(2.0) == pytest.approx(2.2795853023360, abs=1e-12)
    assert bessel_i1(1.0) == pytest.approx(0.5651591039924, abs=1e-12)


@pytest.mark.parametrize("z", [0.1, 0.5, 1.0, 3.0, 7.5, 15.0])
def test_bessel_against_direct_series(z):
    assert bessel_i0(z) == pytest.approx(_series_i(0, z), rel=1e-14)
    assert bessel_i1(z) == pytest.approx(_series_i(1, z), rel=1e-14)


def test_bessel_vectorised_matches_scipy():
    z = np.linspace(0, 60, 301)
    np.testing.assert_allclose(bessel_i0(z), special.i0(z), rtol=1e-13)
    np.testing.assert_allclose(bessel_i1(z), special.i1(z), rtol=1e-13, atol=1e-300)


def test_bessel_derivative_identity():
    h = 1e-6
    fd = (bessel_i0(1 + h) - bessel_i0(1 - h)) / (2 * h)
    assert fd == pytest.approx(bessel_i1(1.0), abs=1e-8)


def test_bessel_errors():
    with pytest.raises(DomainError):
        bessel_i0(-1.0)
    with pytest.raises(PrecisionError):
        bessel_i0(200.0, BesselConfig(max_terms=5))
    with pytest.raises(ValueError):
        BesselConfig(rel_tolerance=0)
    with pytest.raises(ValueError):
        BesselConfig(max_terms=0)


def test_singular_weight():
    assert singular_weight(TelegraphParams(3, 1), 0) == 0.5
    assert singular_weight(TelegraphParams(1, 1), 1) == pytest.approx(math.exp(-1) / 2)
    assert singular_weight(TelegraphParams(2, 1), math.log(2)) == pytest.approx(1 / 8)


def test_density_outside_support_and_centre():
    p = TelegraphParams(1.5, 2.0, 0.5)
    t = 1.2
    assert density_ac(p, 0.5 + 2.0 * t + 1e-9, t) == 0.0
    assert density_ac(p, 0.5 - 2.0 * t - 1.0, t) == 0.0
    lt = 1.5 * t
    centre = 1.5 * math.exp(-lt) / (2 * 2.0) * (special.i0(lt) + special.i1(lt))
    assert density_ac(p, 0.5, t) == pytest.approx(centre, rel=1e-13)
    with pytest.raises(DomainError):
        density_ac(p, 0.0, 0.0)


def test_density_against_scipy_formula():
    rng = np.random.default_rng(5)
    for _ in range(10):
        lam, c, t = rng.uniform(0.1, 5, 3)
        p = TelegraphParams(lam, c, 0)
        x = np.linspace(-c * t, c * t, 203)[1:-1]
        r = np.sqrt(c * c * t * t - x * x)
        xi = lam / c * r
        ref = math.exp(-lam * t) / (2 * c) * (lam * special.i0(xi) + lam * c * t * special.i1(xi) / r)
        np.testing.assert_allclose(density_ac(p, x, t), ref, rtol=1e-12)


def test_total_mass_random():
    rng = np.random.default_rng(11)
    for _ in range(10):
        lam, c, t = rng.uniform(0.1, 5, 3)
        p = TelegraphParams(lam, c, rng.uniform(-1, 1))
        total = 2 * singular_weight(p, t) + ac_mass_quadrature(p, t)
        assert total == pytest.approx(1.0, abs=1e-6)
    assert ac_mass_quadrature(TelegraphParams(1, 1), 1) == pytest.approx(1 - math.exp(-1), abs=1e-6)


def test_density_nonnegative():
    rng = np.random.default_rng(2)
    for _ in range(5):
        lam, c, t = rng.uniform(0.1, 5, 3)
        p = TelegraphParams(lam, c, 0)
        x = np.linspace(-c * t, c * t, 1002)[1:-1]
        assert np.all(density_ac(p, x, t) >= 0)


def test_char_fn_basic_values():
    p = TelegraphParams(2, 3, 0.7)
    assert char_fn(p, 0.0, 1.3) == pytest.approx(1.0, abs=1e-14)
    assert char_fn(p, 1.7, 0.0) == pytest.approx(np.exp(1j * 1.7 * 0.7), abs=1e-14)
    alpha = 2 / 3
    expected = np.exp(1j * alpha * 0.7) * math.exp(-2 * 1.3) * (1 + 2 * 1.3)
    assert char_fn(p, alpha, 1.3) == pytest.approx(expected, abs=1e-14)


def test_char_fn_continuous_across_branch():
    lam, c, t = 1.3, 0.9, 2.0
    edge = lam / c
    for delta in (1e-3, 1e-6, 1e-9, 1e-12):
        below = reduced_char_fn(lam, c, edge * (1 - delta), t)
        above = reduced_char_fn(lam, c, edge * (1 + delta), t)
        at = reduced_char_fn(lam, c, edge, t)
        assert abs(below - at) < 10 * delta + 1e-14
        assert abs(above - at) < 10 * delta + 1e-14
    # Taylor window against the explicit hyperbolic form slightly outside it
    xi = edge * (1 - 1e-6)
    d = math.sqrt(lam * lam - (c * xi) ** 2)
    explicit = math.exp(-lam * t) * (math.cosh(t * d) + lam / d * math.sinh(t * d))
    assert reduced_char_fn(lam, c, xi, t) == pytest.approx(explicit, rel=1e-12)


def test_char_fn_is_fourier_transform_of_law():
    p = TelegraphParams(1.2, 0.8, 0.3)
    t = 1.5
    lo, hi = 0.3 - 0.8 * t, 0.3 + 0.8 * t
    w = singular_weight(p, t)
    edge = 1.2 / 0.8
    for alpha in (-10.0, -3.0, edge * 0.99, edge * 1.01, 0.4, 6.0, 10.0):
        re = integrate.quad(lambda x: density_ac(p, x, t) * math.cos(alpha * x), lo, hi,
                            limit=400, epsabs=1e-12)[0]
        im = integrate.quad(lambda x: density_ac(p, x, t) * math.sin(alpha * x), lo, hi,
                            limit=400, epsabs=1e-12)[0]
        ft = re + 1j * im + w * (np.exp(1j * alpha * lo) + np.exp(1j * alpha * hi))
        assert abs(char_fn(p, alpha, t) - ft) < 1e-6


def test_char_fn_modulus_and_hermitian():
    p = TelegraphParams(0.7, 2.5, -0.4)
    alpha = np.linspace(-20, 20, 401)
    for t in (0.1, 1.0, 5.0):
        v = char_fn(p, alpha, t)
        assert np.all(np.abs(v) <= 1 + 1e-14)
        np.testing.assert_allclose(char_fn(p, -alpha, t), np.conj(v), atol=1e-15)
    with pytest.raises(DomainError):
        char_fn(p, 1.0, -1.0)
