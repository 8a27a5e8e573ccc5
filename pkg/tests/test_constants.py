import math

import numpy as np
import pytest

from entroscope import closed_forms
from entroscope.constants import (
    bound_checks,
    compute_constant,
    conjecture_probe_gap,
    constant_chain,
    family_probe,
    multislice_probe,
    regression_sweep,
    spectral_gap,
    strict_gap_check,
    verify,
    verify_tensorization,
)
from entroscope.errors import DomainError
from entroscope.generators import DirichletEvaluator, gen_single_graph
from entroscope.optimize import OptimizerOptions, RatioProblem, minimize_ratio
from entroscope.state_spaces import (
    HypergraphWeights,
    MeanFieldWeights,
    SpaceKind,
    WeightedGraph,
    build_space,
    complete_graph,
    hypergraph_from_graph,
    mean_field_expand,
    random_graph,
    random_hypergraph,
    star_graph,
)

# =============================================================================
# Anchors
# =============================================================================


def test_kappa_of_triangle(fast_options):
    report = compute_constant("kappa", complete_graph(3), None, fast_options)
    assert report.value == pytest.approx(2.5237188, abs=1e-6)
    assert report.diagnostics.candidate == "dirac"


def test_kappa_of_scaled_triangle(fast_options):
    report = compute_constant("kappa", complete_graph(3, c=1 / 3), None, fast_options)
    assert report.value == pytest.approx(0.8412396, abs=1e-7)


def test_kappa_of_star_on_four_vertices():
    report = compute_constant("kappa", star_graph(4))
    assert report.value == pytest.approx(0.9217860, abs=1e-6)
    lower, upper = closed_forms.star_bounds(4)
    assert lower <= report.value <= upper


@pytest.mark.parametrize("n", range(4, 9))
def test_kappa_of_star_lies_in_bracket(n):
    value = compute_constant("kappa", star_graph(n)).value
    lower, upper = closed_forms.star_bounds(n)
    assert lower <= value <= upper * (1 + 1e-9)


@pytest.mark.parametrize("n", range(3, 11))
def test_star_gap_is_one(n):
    assert compute_constant("gap", star_graph(n)).value == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("n", range(2, 9))
def test_kappa_of_complete_graph(n, fast_options):
    value = compute_constant("kappa", complete_graph(n), None, fast_options).value
    assert value == pytest.approx(closed_forms.kappa_kn(n), rel=1e-6)


def test_disconnected_graph_has_zero_gap():
    g = WeightedGraph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])
    report = spectral_gap(gen_single_graph(g))
    assert report.value == 0.0
    assert report.diagnostics.disconnected


# =============================================================================
# Closed forms
# =============================================================================


@pytest.mark.parametrize(
    "name, n, kwargs",
    [
        ("kappa_mf_single", 4, {"ell": 2}),
        ("kappa_mf_single", 5, {"ell": 3}),
        ("kappa_mf_perm", 3, {"ell": 2}),
        ("kappa_mf_perm", 4, {"ell": 2}),
        ("kappa_mf_perm", 4, {"ell": 3}),
        ("kappa_bl", 4, {"r": 2}),
        ("kappa_bl", 5, {"r": 1}),
        ("kappa_kn", 4, {}),
    ],
)
def test_verify_dirac_extremal_forms(name, n, kwargs, fast_options):
    report = verify(name, n, options=fast_options, **kwargs)
    assert report.passed
    assert report.relative_error <= 1e-6
    assert report.extremizer == "dirac"
    assert report.extremizer_ok


@pytest.mark.parametrize("n", [3, 4])
def test_interchange_gap_is_attained_by_single_particle_functions(n):
    report = verify("gap-mf-perm", n, w=MeanFieldWeights.single(n, 2, 2.0))
    assert report.value == pytest.approx(n, rel=1e-9)
    assert report.passed
    assert report.extremizer_ok


def test_complete_graph_gap_and_lsi(fast_options):
    assert verify("gap_kn", 5, options=fast_options).passed
    lsi = verify("lsi_kn", 3, options=fast_options)
    assert lsi.value == pytest.approx(1 / math.log(2), rel=1e-6)


def test_verify_rejects_unknown_names():
    with pytest.raises(DomainError):
        verify("kappa_unknown", 4)
    with pytest.raises(DomainError):
        verify("kappa_bl", 4)


def test_mean_field_single_particle_uses_hypergraph_blocks(fast_options):
    mf = MeanFieldWeights.from_mapping(4, {2: 1.0, 3: 0.5})
    value = compute_constant("kappa", mean_field_expand(mf), None, fast_options).value
    assert value == pytest.approx(closed_forms.kappa_mf_single(4, mf), rel=1e-6)


# =============================================================================
# Optimizer
# =============================================================================


def test_ratio_problem_spaces_must_agree():
    one = DirichletEvaluator.for_graph(complete_graph(3))
    other = DirichletEvaluator.for_graph(complete_graph(4))
    with pytest.raises(DomainError):
        RatioProblem(numerator=one, denominator=other)


def test_ratio_of_a_form_against_itself_is_one(fast_options):
    form = DirichletEvaluator.for_graph(star_graph(4))
    report = minimize_ratio(RatioProblem(numerator=form, denominator=form, quantity="ratio"), fast_options)
    assert report.value == pytest.approx(1.0, rel=1e-9)


def test_variance_ratio_is_the_gap(rng, fast_options):
    g = random_graph(5, rng)
    form = DirichletEvaluator.for_graph(g, selector="variance")
    report = minimize_ratio(
        RatioProblem(numerator=form, denominator="variance", quantity="gap"), fast_options
    )
    assert report.value == pytest.approx(compute_constant("gap", g).value, rel=1e-5)


def test_optimizer_is_reproducible(rng):
    options = OptimizerOptions(restarts=3, seed=7, threads=2)
    g = random_graph(4, rng)
    first = compute_constant("kappa", g, None, options)
    second = compute_constant("kappa", g, None, options)
    assert first.value == second.value
    assert first.diagnostics.seed == 7


def test_optimizer_options_validation():
    with pytest.raises(DomainError):
        OptimizerOptions(tol=0.0)
    with pytest.raises(DomainError):
        OptimizerOptions(restarts=-1)


def test_constant_chain_flags_violations():
    good = constant_chain({"gap": 4.0, "kappa": 3.0, "lsi": 1.8, "mlsi": 7.5})
    assert all(check.holds for check in good)
    bad = constant_chain({"gap": 1.0, "kappa": 3.0, "lsi": 1.0, "mlsi": 7.5})
    assert [check.holds for check in bad] == [True, False, True, False]


CHAIN_RTOL = 1e-4


@pytest.mark.parametrize(
    "n", [3, 4, pytest.param(5, marks=pytest.mark.slow), pytest.param(6, marks=pytest.mark.slow)]
)
def test_constant_chain_holds_on_random_graphs(n):
    rng = np.random.default_rng(4000 + n)
    for _ in range(5):
        g = random_graph(n, rng)
        values = {q: compute_constant(q, g).value for q in ("gap", "kappa", "lsi", "mlsi")}
        failed = [c.name for c in constant_chain(values, rtol=CHAIN_RTOL) if not c.holds]
        assert not failed, (g.weights.tolist(), values)


@pytest.mark.parametrize("n", [3, 4])
def test_block_constants_are_ordered_on_random_hypergraphs(n):
    rng = np.random.default_rng(5000 + n)
    for _ in range(5):
        h = random_hypergraph(n, rng)
        beta, kappa, rho = (compute_constant(q, h).value for q in ("lsi", "kappa", "mlsi"))
        assert beta <= kappa * (1 + CHAIN_RTOL), h.items()
        assert kappa <= rho * (1 + CHAIN_RTOL), h.items()


# =============================================================================
# Tensorization and probes
# =============================================================================


def test_gap_tensorizes_for_mean_field_weights():
    h = mean_field_expand(MeanFieldWeights.from_mapping(3, {2: 1.0, 3: 0.5}))
    report = verify_tensorization(h, 3, with_kappa=False)
    assert report.passed
    assert [row.particles for row in report.rows] == [2, 3]


@pytest.mark.parametrize("n, particles", [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2)])
def test_gap_tensorizes_for_mean_field_and_random_hypergraphs(n, particles):
    weights = {ell: 1.0 / ell for ell in range(2, n + 1)}
    mean_field = MeanFieldWeights.from_mapping(n, weights)
    hypergraphs = [mean_field_expand(mean_field)]
    hypergraphs += [random_hypergraph(n, np.random.default_rng(seed)) for seed in range(5)]
    for h in hypergraphs:
        report = verify_tensorization(h, particles, with_kappa=False)
        assert report.passed, report.rows
        assert report.rows[-1].particles == particles


def test_kappa_tensorizes_on_two_vertices(fast_options):
    h = HypergraphWeights(n=2, blocks={(0, 1): 1.5})
    report = verify_tensorization(h, 3, fast_options)
    assert report.kappa_single == pytest.approx(1.5, rel=1e-6)
    assert report.passed


def test_tensorization_needs_two_particles():
    with pytest.raises(DomainError):
        verify_tensorization(HypergraphWeights(n=2, blocks={(0, 1): 1.0}), 1)


def test_interchange_gap_equals_walk_gap(rng):
    report = conjecture_probe_gap(hypergraph_from_graph(random_graph(4, rng)))
    assert report.ratio == pytest.approx(1.0, abs=1e-9)
    assert report.upper_bound_holds
    assert not report.mean_field


def test_mean_field_shuffle_gap_is_bounded_by_graph_gap():
    report = conjecture_probe_gap(mean_field_expand(MeanFieldWeights.single(4, 3)))
    assert report.mean_field
    assert report.upper_bound_holds


def test_strict_gap_between_single_particle_and_permutations():
    report = strict_gap_check(4)
    assert report.passed
    assert {(row.n, row.ell) for row in report.rows} == {(3, 2), (4, 2), (4, 3)}


def test_family_probe_records_ratios(fast_options):
    report = family_probe(sizes=(4,), boxes=(), options=fast_options)
    assert [row.family for row in report.rows] == ["cycle-4", "path-4"]
    assert all(row.ratio > 0 for row in report.rows)
    assert report.star3_kappa is not None


def test_multislice_probe_with_two_colors():
    report = multislice_probe(5, [2, 3])
    assert report.value == pytest.approx(closed_forms.kappa_bl(5, 2))


@pytest.mark.parametrize("n", [4, pytest.param(5, marks=pytest.mark.slow)])
def test_shuffle_kappa_on_star_lies_in_bracket(n):
    space = build_space(SpaceKind.PERMUTATIONS, n)
    value = compute_constant("kappa", star_graph(n), space).value
    lower, upper = closed_forms.star_perm_bounds(n)
    assert lower <= value <= upper * (1 + 1e-9)
    assert value <= closed_forms.dirac_perm_upper(n) * (1 + 1e-9)


def test_bound_checks_cover_the_star_bracket_and_the_gap_bound(fast_options):
    checks = bound_checks(8, fast_options)
    assert len(checks) == 4 * 6
    assert [check.name for check in checks if not check.holds] == []
    names = [check.name for check in checks]
    assert "kappa(star 8) <= star upper(8)" in names
    assert "gap bound(K_8) <= kappa(K_8)" in names
    assert "gap bound(path 5) <= kappa(path 5)" in names


@pytest.mark.slow
def test_regression_sweep():
    report = regression_sweep(6)
    failed = [run.name for run in report.verifications if not run.passed]
    assert not failed
    assert all(anchor.passed for anchor in report.anchors)
    assert len(report.bounds) == 4 * 4
    assert [b.name for b in report.bounds if not b.holds] == []
    assert report.passed


@pytest.mark.slow
@pytest.mark.parametrize("n, particles", [(2, 2), (2, 3), (3, 2)])
def test_kappa_tensorizes_for_mean_field_weights(n, particles):
    h = mean_field_expand(MeanFieldWeights.single(n, 2))
    assert verify_tensorization(h, particles).passed
