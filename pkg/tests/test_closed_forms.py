import math

import pytest
from hypothesis import given
from hypothesis import settings as hypothesis_settings
from hypothesis import strategies as st

from entroscope import closed_forms
from entroscope.errors import DomainError
from entroscope.state_spaces import MeanFieldWeights

LOG2 = math.log(2.0)


@pytest.mark.parametrize(
    "name, params, expected",
    [
        ("kappa_kn", {"n": 3}, 2.5237188),
        ("kappa_mf_single", {"n": 4, "ell": 2}, 1.5),
        ("kappa_mf_perm", {"n": 3, "ell": 2}, 1.16056),
        ("kappa_mf_perm", {"n": 4, "ell": 2}, 1.3086258),
        ("gap_mf_perm", {"n": 3, "ell": 2}, 1.5),
        ("kappa_bl", {"n": 2, "r": 1}, 1.0),
        ("lsi_kn", {"n": 2}, 1.0),
        ("p_critical", {"n": 2}, 2.0),
    ],
)
def test_closed_form_values(name, params, expected):
    assert closed_forms.closed_form(name, **params) == pytest.approx(expected, abs=1e-5)


def test_dash_names_dispatch():
    assert closed_forms.closed_form("kappa-kn", n=5) == closed_forms.kappa_kn(5)
    with pytest.raises(DomainError):
        closed_forms.closed_form("kappa-unknown", n=5)


@pytest.mark.parametrize("n", range(2, 9))
def test_interchange_gap_is_n(n):
    assert closed_forms.gap_mf_perm(n, w={2: 2.0}) == pytest.approx(n)
    assert closed_forms.gap_kn(n) == n


def test_weight_forms_agree():
    mapping = closed_forms.kappa_mf_perm(4, {2: 1.0, 3: 0.5})
    vector = closed_forms.kappa_mf_perm(4, [1.0, 0.5, 0.0])
    record = closed_forms.kappa_mf_perm(4, MeanFieldWeights.from_mapping(4, {2: 1.0, 3: 0.5}))
    assert mapping == vector == record
    with pytest.raises(DomainError):
        closed_forms.kappa_mf_single(4)
    with pytest.raises(DomainError):
        closed_forms.kappa_mf_single(4, MeanFieldWeights.single(5, 2))


def test_mean_field_closed_forms_are_linear():
    n = 5
    combined = closed_forms.kappa_mf_single(n, {2: 2.0, 4: 3.0})
    parts = 2 * closed_forms.kappa_mf_single(n, ell=2) + 3 * closed_forms.kappa_mf_single(n, ell=4)
    assert combined == pytest.approx(parts, rel=1e-14)


def test_single_particle_beats_permutations():
    for n in range(3, 7):
        for ell in range(2, n):
            assert closed_forms.kappa_mf_single(n, ell=ell) > closed_forms.kappa_mf_perm(n, ell=ell)


def test_bernoulli_laplace_symmetry():
    assert closed_forms.kappa_bl(7, 2) == pytest.approx(closed_forms.kappa_bl(7, 5))
    with pytest.raises(DomainError):
        closed_forms.kappa_bl(4, 4)


def test_star_bounds_bracket():
    lower, upper = closed_forms.star_bounds(4)
    assert lower < 0.9217860 < upper
    lower, upper = closed_forms.star_perm_bounds(5)
    assert lower == pytest.approx(LOG2**2 / math.log(5))
    assert upper == pytest.approx(2 * LOG2 / math.log(5))


@pytest.mark.parametrize("n", range(4, 9))
def test_star_lower_bound_is_the_gap_bound_at_unit_gap(n):
    lower, upper = closed_forms.star_bounds(n)
    assert lower == pytest.approx(closed_forms.kappa_lower_from_gap(n, 1.0), rel=1e-14)
    assert lower < upper


def test_lsi_of_complete_graph_lies_below_half_kappa():
    for n in range(3, 9):
        assert 2 * LOG2 * closed_forms.lsi_kn(n) <= closed_forms.kappa_kn(n)
        assert closed_forms.kappa_kn(n) <= 2 * closed_forms.lsi_kn(n) + 1e-12


def test_kappa_lower_from_gap_on_complete_graph():
    n = 6
    assert closed_forms.kappa_lower_from_gap(n, closed_forms.gap_kn(n)) <= closed_forms.kappa_kn(n)


@hypothesis_settings(derandomize=True, max_examples=30)
@given(st.integers(min_value=2, max_value=40))
def test_critical_exponent_balances_prefactor(n):
    p = closed_forms.p_critical(n)
    assert p >= 1
    assert math.exp(math.lgamma(n + 1) - n * math.log(n) / p) == pytest.approx(1.0, rel=1e-10)


def test_set_partitions_are_counted_by_bell_numbers():
    assert [sum(1 for _ in closed_forms.set_partitions(range(k))) for k in range(6)] == [
        1,
        1,
        2,
        5,
        15,
        52,
    ]


def test_multislice_reduces_to_known_cases():
    for n in range(3, 7):
        for r in range(1, n):
            assert closed_forms.multislice_value([r, n - r]) == pytest.approx(
                closed_forms.kappa_bl(n, r), rel=1e-12
            )
        assert closed_forms.multislice_value([1] * n) == pytest.approx(
            closed_forms.kappa_mf_perm(n, ell=2), rel=1e-12
        )


def test_multislice_conjecture_minimizes_over_coarsenings():
    value, coarsening = closed_forms.multislice_conjecture(4, [2, 1, 1])
    candidates = [[2, 2], [1, 3], [1, 1, 2]]
    assert value == pytest.approx(min(closed_forms.multislice_value(c) for c in candidates))
    assert sum(coarsening) == 4 and len(coarsening) >= 2
    with pytest.raises(DomainError):
        closed_forms.multislice_conjecture(4, [2, 1])
    with pytest.raises(DomainError):
        closed_forms.multislice_conjecture(3, [3])
