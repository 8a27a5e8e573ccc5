import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings as hypothesis_settings
from hypothesis import strategies as st

from entroscope.errors import DomainError
from entroscope.functionals import (
    DensityFunction,
    block_cov_flogf,
    block_entropy,
    block_var_sqrt,
    block_variance,
    entropy,
    leave_one_out_mean,
    local_edge_functionals,
    log_binomial,
    log_factorial,
    log_multinomial,
    psi,
    psi_bar_rho,
    psi_hat,
    psi_rho,
    shannon_h,
    variance,
)
from entroscope.state_spaces import SpaceKind, block_partition, build_space

LOG2 = math.log(2.0)

positive = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)
nonnegative = st.one_of(st.just(0.0), positive)
rhos = st.one_of(st.just(0.0), st.just(1.0), st.floats(min_value=1e-6, max_value=1 - 1e-6))


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (1.0, 1.0, 0.0),
        (1.0, 0.0, 0.5 * LOG2),
        (4.0, 0.0, 2 * LOG2),
        (2.0, 0.0, LOG2),
    ],
)
def test_psi_values(a, b, expected):
    assert psi(a, b) == pytest.approx(expected, abs=1e-15)


def test_psi_rho_at_the_endpoints():
    assert psi_rho(3.0, 5.0, 0.0) == 0.0
    assert psi_rho(3.0, 5.0, 1.0) == 0.0


def test_psi_rho_rejects_rho_outside_unit_interval():
    with pytest.raises(DomainError):
        psi_rho(1.0, 2.0, 1.5)


@hypothesis_settings(derandomize=True, max_examples=200)
@given(nonnegative, nonnegative, rhos)
def test_psi_rho_matches_direct_formula(a, b, rho):
    m = rho * a + (1 - rho) * b
    direct = 0.0
    for weight, x in ((rho, a), (1 - rho, b)):
        if x > 0 and weight > 0:
            direct += weight * x * math.log(x / m)
    assert psi_rho(a, b, rho) == pytest.approx(max(direct, 0.0), rel=1e-9, abs=1e-9 * max(a, b, 1.0))


@hypothesis_settings(derandomize=True, max_examples=100)
@given(positive, positive, st.floats(min_value=0.01, max_value=0.99))
def test_psi_bar_rho_is_symmetric_in_rho(a, b, rho):
    assert psi_bar_rho(a, b, rho) == pytest.approx(psi_bar_rho(a, b, 1 - rho), rel=1e-9, abs=1e-12)


def test_psi_rho_stays_accurate_near_the_diagonal():
    a, b = 1.0 + 1e-6, 1.0
    assert psi(a, b) == pytest.approx((a - b) ** 2 / 8, rel=1e-5)


def test_shannon_h():
    assert shannon_h(0.5) == pytest.approx(LOG2)
    assert shannon_h(0.0) == 0.0


def test_psi_hat_at_a_dirac_mass():
    n = 4
    a = np.zeros(n)
    a[0] = 1.0
    bound = shannon_h(1 / n) / math.log(n) * entropy(a)
    assert psi_hat(a, 1 / n) == pytest.approx(bound, rel=1e-12)
    with pytest.raises(DomainError):
        psi_hat([1.0], 0.5)


def test_leave_one_out_mean():
    assert leave_one_out_mean([1.0, 2.0, 3.0]).tolist() == [2.5, 2.0, 1.5]


# =============================================================================
# Global and block functionals
# =============================================================================


def test_entropy_and_variance_of_constants():
    assert entropy(np.full(5, 3.0)) == 0.0
    assert variance(np.full(5, 3.0)) == 0.0


def test_entropy_of_a_dirac_mass():
    space = build_space(SpaceKind.PERMUTATIONS, 3)
    f = DensityFunction.dirac(space, 2).normalized()
    assert entropy(f) == pytest.approx(math.log(6))
    assert f.mean == pytest.approx(1.0)


@hypothesis_settings(derandomize=True, max_examples=100)
@given(
    st.lists(nonnegative, min_size=2, max_size=8).filter(lambda v: max(v) > 0),
    st.floats(min_value=1e-3, max_value=1e3),
)
def test_entropy_is_homogeneous(values, c):
    f = np.array(values)
    assert entropy(c * f) == pytest.approx(c * entropy(f), rel=1e-9, abs=1e-9 * c * f.max())


def test_density_function_validation():
    space = build_space(SpaceKind.SINGLE, 3)
    with pytest.raises(DomainError):
        DensityFunction(space=space, values=np.zeros(3))
    with pytest.raises(DomainError):
        DensityFunction(space=space, values=np.array([1.0, -1.0, 1.0]))
    with pytest.raises(DomainError):
        DensityFunction(space=space, values=np.ones(4))


def test_full_block_reproduces_global_functionals(rng):
    space = build_space(SpaceKind.SINGLE, 5)
    part = block_partition(space, range(5))
    f = rng.exponential(size=5)
    assert block_entropy(f, part) == pytest.approx(entropy(f), rel=1e-12)
    assert block_variance(f, part) == pytest.approx(variance(f), rel=1e-12)
    assert block_var_sqrt(f, part) == pytest.approx(variance(np.sqrt(f)), rel=1e-12)


def test_block_functionals_vanish_on_class_constants():
    space = build_space(SpaceKind.PERMUTATIONS, 3)
    part = block_partition(space, (0, 1))
    f = space.states[:, 2].astype(float) + 1.0
    assert block_entropy(f, part) == 0.0
    assert block_variance(f, part) == 0.0
    assert block_cov_flogf(f, part) == 0.0


def test_block_cov_is_infinite_on_mixed_support():
    space = build_space(SpaceKind.SINGLE, 3)
    part = block_partition(space, (0, 1))
    assert block_cov_flogf(np.array([0.0, 1.0, 1.0]), part) == math.inf
    assert block_cov_flogf(np.array([0.0, 0.0, 1.0]), part) == 0.0


def test_block_functional_rejects_foreign_space():
    part = block_partition(build_space(SpaceKind.SINGLE, 3), (0, 1))
    f = DensityFunction.constant(build_space(SpaceKind.SLICE, 3, r=1))
    with pytest.raises(DomainError):
        block_entropy(f, part)


def test_local_edge_functionals():
    terms = local_edge_functionals(1.0, 0.0)
    assert terms.boundary
    assert terms.cov_flogf == math.inf
    assert terms.var_sqrt == 0.25
    assert terms.ent == pytest.approx(0.5 * LOG2)
    equal = local_edge_functionals(2.0, 2.0)
    assert equal == (0.0, 0.0, 0.0, False)


def test_combinatorial_logarithms():
    assert log_factorial(5) == pytest.approx(math.log(120))
    assert log_binomial(6, 2) == pytest.approx(math.log(15))
    assert log_binomial(3, 5) == -math.inf
    assert log_multinomial([2, 1, 1]) == pytest.approx(math.log(12))
