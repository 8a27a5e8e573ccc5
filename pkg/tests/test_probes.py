import math

import numpy as np
import pytest

from entroscope import probes
from entroscope.errors import DomainError

SAMPLES = 400


def test_sample_values_range_and_zeros():
    values = probes.sample_values(np.random.default_rng(3), (2000, 4))
    positive = values[values > 0]
    assert positive.min() >= 1e-6 * (1 - 1e-12)
    assert positive.max() <= 1e6 * (1 + 1e-12)
    assert 0.05 < np.mean(values == 0) < 0.15
    assert np.all(np.any(values > 0, axis=1))


def test_relative_slack():
    assert probes.relative_slack(1.0, 1.0) == 0.0
    assert probes.relative_slack(1.0, math.inf) == 1.0
    assert probes.relative_slack(2.0, 1.0) == pytest.approx(-0.5)


@pytest.mark.parametrize(
    "probe",
    [
        probes.local_chain,
        probes.rho_monotonicity,
        probes.symmetrized_entropy_bound,
    ],
)
def test_two_point_inequalities(probe):
    report = probe(SAMPLES, seed=1)
    assert report.passed, report
    assert report.violations == 0
    assert report.samples > 0


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize(
    "probe",
    [
        probes.psi_hat_bound,
        probes.averaged_entropy_contraction,
        probes.complete_graph_lsi_bound,
    ],
)
def test_vector_inequalities(probe, n):
    report = probe(n, SAMPLES, seed=2)
    assert report.passed, report


def test_psi_hat_bound_is_attained_at_dirac_masses():
    for n in range(2, 8):
        assert probes.psi_hat_dirac_gap(n) < 1e-12
    report = probes.psi_hat_bound(4, 50, seed=0)
    assert report.worst_slack == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    "space",
    probes.default_spaces(),
    ids=lambda space: space.describe(),
)
def test_block_chain_and_entropy_decomposition(space):
    assert probes.block_chain(space, 100, seed=4).passed
    assert probes.entropy_decomposition(space, 100, seed=4).passed


def test_block_lsi_bound():
    assert probes.block_lsi_bound(5, SAMPLES, seed=5).passed


@pytest.mark.parametrize("n", [3, 4, 5])
def test_permutation_contractions(n):
    assert probes.variance_contraction(n, 60, seed=6).passed
    assert probes.entropy_subadditivity(n, 60, seed=6).passed


def test_probes_validate_sizes():
    with pytest.raises(DomainError):
        probes.psi_hat_bound(1)
    with pytest.raises(DomainError):
        probes.averaged_entropy_contraction(2)
    with pytest.raises(DomainError):
        probes.block_lsi_bound(2)


def test_probes_are_reproducible():
    first = probes.local_chain(200, seed=9)
    second = probes.local_chain(200, seed=9)
    assert first == second


def test_run_all_reports_every_probe():
    reports = probes.run_all(samples=20, seed=0, n_max=3)
    names = [report.name for report in reports]
    assert len(names) == len(set(names))
    assert "local-chain" in names
    assert "entropy-subadditivity-n3" in names
    assert all(report.passed for report in reports)


@pytest.mark.slow
def test_full_inequality_suite():
    reports = probes.run_all(samples=10_000, seed=0, n_max=5)
    failed = [report.name for report in reports if not report.passed]
    assert not failed
