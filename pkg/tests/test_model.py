import itertools
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from telegraph_forms.model import (
    Component,
    DimensionError,
    ModelSpec,
    SchemaError,
    SizeLimitError,
    TelegraphParams,
    enumerate_sign_sequences,
    hamming_distance,
    lambda_total,
    load_spec,
    max_sigma_speed,
    sigma_speed,
    sign_index,
    spec_from_dict,
    to_fraction,
)

rationals = st.fractions(min_value=Fraction(1, 10), max_value=Fraction(10), max_denominator=20)
coefs = st.fractions(min_value=Fraction(-3), max_value=Fraction(3), max_denominator=8).filter(lambda a: a != 0)


@st.composite
def specs(draw, max_n=4):
    n = draw(st.integers(1, max_n))
    comps = tuple(
        Component(TelegraphParams(draw(rationals), draw(rationals), draw(coefs)), draw(coefs))
        for _ in range(n)
    )
    return ModelSpec(comps)


def test_sign_sequences_small_cases():
    assert enumerate_sign_sequences(1) == [(-1,), (1,)]
    assert enumerate_sign_sequences(2) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    seq3 = enumerate_sign_sequences(3)
    assert len(seq3) == 8
    assert seq3[0] == (-1, -1, -1) and seq3[-1] == (1, 1, 1)


@pytest.mark.parametrize("n", range(1, 9))
def test_sign_sequences_bijection_and_neighbour_count(n):
    seqs = enumerate_sign_sequences(n)
    assert set(seqs) == set(itertools.product((-1, 1), repeat=n))
    assert [sign_index(s) for s in seqs] == list(range(2 ** n))
    if n <= 6:
        pairs = sum(hamming_distance(a, b) == 1 for a, b in itertools.combinations(seqs, 2))
        assert pairs == n * 2 ** (n - 1)


def test_sign_sequence_cap():
    with pytest.raises(SizeLimitError):
        enumerate_sign_sequences(9)
    with pytest.raises(SizeLimitError):
        enumerate_sign_sequences(0)
    assert len(enumerate_sign_sequences(9, cap=9)) == 512


def test_hamming_distance():
    assert hamming_distance((-1, -1), (-1, 1)) == 1
    assert hamming_distance((1, -1), (1, -1)) == 0
    assert hamming_distance((-1, -1, -1), (1, 1, 1)) == 3
    with pytest.raises(DimensionError):
        hamming_distance((1,), (1, 1))


def test_sigma_speed_examples():
    c1, c2 = Fraction(3, 2), Fraction(5)
    spec = ModelSpec.from_arrays([1, 1], [c1, c2])
    assert sigma_speed(spec, (1, 1)) == c1 + c2
    assert sigma_speed(spec, (-1, 1)) == -(c1 - c2)
    diff = ModelSpec.from_arrays([1, 1], [2, 2], coefs=[1, -1])
    assert sigma_speed(diff, (1, 1)) == 0
    with pytest.raises(DimensionError):
        sigma_speed(spec, (1,))
    with pytest.raises(DimensionError):
        sigma_speed(spec, (1, 0))


def test_lambda_total_examples():
    assert lambda_total(ModelSpec.from_arrays([1, 1], [1, 1])) == 2
    assert lambda_total(ModelSpec.from_arrays([2, 3, 5], [1, 1, 1])) == 10
    assert lambda_total(ModelSpec.from_arrays([7], [1])) == 7


@settings(max_examples=50, deadline=None)
@given(specs())
def test_sigma_speed_odd_and_max(spec):
    seqs = enumerate_sign_sequences(spec.n)
    for s in seqs:
        assert sigma_speed(spec, tuple(-v for v in s)) == -sigma_speed(spec, s)
    pos = sum((c.coef * c.params.speed for c in spec.components if c.coef > 0), Fraction(0))
    neg = sum((c.coef * c.params.speed for c in spec.components if c.coef < 0), Fraction(0))
    assert max(sigma_speed(spec, s) for s in seqs) == pos - neg == max_sigma_speed(spec)


def test_to_fraction_inputs():
    assert to_fraction("3/2") == Fraction(3, 2)
    assert to_fraction("0.1") == Fraction(1, 10)
    assert to_fraction(0.1) == Fraction(1, 10)
    assert to_fraction(4) == 4
    for bad in ("abc", "1/0", True, None, float("nan")):
        with pytest.raises(SchemaError):
            to_fraction(bad)


def test_params_validation():
    with pytest.raises(SchemaError) as err:
        TelegraphParams(-1, 1)
    assert err.value.field == "rate"
    with pytest.raises(SchemaError):
        TelegraphParams(1, 0)
    with pytest.raises(SchemaError):
        Component(TelegraphParams(1, 1), 0)


def test_spec_schema_round_trip(tmp_path):
    data = {"components": [{"rate": "1", "speed": "3/2", "start": "0", "coef": "1"},
                           {"rate": 2, "speed": "0.5", "start": "-1/3", "coef": "-2"}]}
    spec = spec_from_dict(data)
    assert spec.n == 2 and spec.exact_mode
    assert spec.params[1].start == Fraction(-1, 3)
    again = spec_from_dict(json.loads(spec.to_json()))
    assert again == spec and again.digest() == spec.digest()
    path = tmp_path / "s.json"
    path.write_text(json.dumps(data))
    assert load_spec(path) == spec


@pytest.mark.parametrize("data, field", [
    ({"components": [{"rate": "-1", "speed": "1", "coef": "1"}]}, "components[0].rate"),
    ({"components": [{"rate": "1", "speed": "x", "coef": "1"}]}, "components[0].speed"),
    ({"components": [{"rate": "1", "speed": "1"}]}, "components[0].coef"),
    ({"components": [{"rate": "1", "speed": "1", "coef": "1", "bogus": 1}]}, "components[0].bogus"),
    ({"components": []}, "components"),
    ({}, "components"),
])
def test_schema_errors_name_field(data, field):
    with pytest.raises(SchemaError) as err:
        spec_from_dict(data)
    assert err.value.field == field


def test_float_inputs_disable_exact_mode():
    spec = ModelSpec.from_arrays([1.0, 2.0], [1.0, 1.0])
    assert not spec.exact_mode
    assert ModelSpec.from_arrays([1, 2], ["1", "1/2"]).exact_mode


def test_effective_params_and_center():
    spec = ModelSpec.from_arrays([1, 2], [3, 4], coefs=[2, "-1/2"], starts=[1, 4])
    e1, e2 = spec.effective_params()
    assert (e1.speed, e1.start) == (6, 2)
    assert (e2.speed, e2.start) == (2, -2)
    assert spec.center() == 0
