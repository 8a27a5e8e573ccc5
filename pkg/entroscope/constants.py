"""
The constants lambda, kappa, beta (lsi) and rho (mlsi).

The gap comes from a dense eigensolve; the entropy-type constants from
``minimize_ratio``. ``verify`` rebuilds a closed-form instance and compares.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from typing import Any, Literal

import numpy as np

from entroscope import closed_forms
from entroscope.errors import DomainError
from entroscope.generators import (
    DirichletEvaluator,
    GeneratorMatrix,
    Selector,
    bernoulli_laplace_terms,
    build_generator,
    gen_bernoulli_laplace,
    gen_shuffle,
    gen_single_graph,
    gen_single_hypergraph,
    gen_synchronous,
    graph_terms,
    hypergraph_terms,
)
from entroscope.optimize import OptimizerOptions, RatioProblem, minimize_ratio
from entroscope.state_spaces import (
    HypergraphWeights,
    MeanFieldWeights,
    SpaceKind,
    StateSpace,
    WeightedGraph,
    box_graph,
    build_space,
    complete_graph,
    cycle_graph,
    graph_from_hypergraph,
    mean_field_expand,
    path_graph,
    star_graph,
)
from entroscope.utils.typing import (
    AnchorCheck,
    ConjectureReport,
    ConstantReport,
    Diagnostics,
    FamilyProbeReport,
    FamilyRow,
    InequalityCheck,
    MultisliceReport,
    Quantity,
    StrictGapReport,
    StrictGapRow,
    SweepReport,
    TensorizationReport,
    TensorizationRow,
    VerificationReport,
)

logger = logging.getLogger(__name__)

SELECTORS: dict[str, Selector] = {
    "kappa": "entropy",
    "lsi": "var_sqrt",
    "mlsi": "cov_flogf",
}

COMPLETE_GRAPH_QUANTITIES: dict[str, Quantity] = {
    "kappa_kn": "kappa",
    "lsi_kn": "lsi",
    "gap_kn": "gap",
}

Weights = WeightedGraph | HypergraphWeights | MeanFieldWeights


# =============================================================================
# Spectral gap
# =============================================================================


def spectral_gap(generator: GeneratorMatrix, rtol: float = 1e-10) -> ConstantReport:
    """Second-smallest eigenvalue of -L with its eigenvector."""
    eigenvalues, vectors = generator.spectrum
    space = generator.space
    if eigenvalues.shape[0] < 2:
        raise DomainError("a spectral gap needs at least two states")
    scale = max(1.0, float(np.abs(eigenvalues).max()))
    gap = float(eigenvalues[1])
    disconnected = gap <= rtol * scale
    if disconnected:
        logger.warning(f"generator on {space.describe()} is not irreducible")
    return ConstantReport(
        quantity="gap",
        value=0.0 if disconnected else gap,
        space=space.describe(),
        minimizer=vectors[:, 1].tolist(),
        diagnostics=Diagnostics(candidate="eigensolve", disconnected=disconnected),
    )


# =============================================================================
# Problem construction
# =============================================================================


def as_hypergraph(weights: Weights) -> HypergraphWeights:
    if isinstance(weights, MeanFieldWeights):
        return mean_field_expand(weights)
    if isinstance(weights, WeightedGraph):
        return HypergraphWeights.from_blocks(
            weights.n, (((x, y), 2.0 * c) for x, y, c in weights.edges())
        )
    return weights


def dirichlet_form(
    weights: Weights, space: StateSpace | None = None, selector: Selector = "entropy"
) -> DirichletEvaluator:
    """Block Dirichlet form of a graph (pairs, alpha = 2c) or hypergraph."""
    if space is None:
        space = build_space(SpaceKind.SINGLE, weights.n)
    if isinstance(weights, WeightedGraph):
        terms = graph_terms(space, weights)
    else:
        terms = hypergraph_terms(space, as_hypergraph(weights))
    return DirichletEvaluator(space=space, terms=terms, selector=selector)


def generator_for(weights: Weights, space: StateSpace | None = None) -> GeneratorMatrix:
    if isinstance(weights, WeightedGraph) and (
        space is None or space.kind is SpaceKind.SINGLE
    ):
        return gen_single_graph(weights)
    h = as_hypergraph(weights)
    if space is None:
        return gen_single_hypergraph(h)
    return build_generator(space, h)


def compute_constant(
    quantity: Quantity,
    weights: Weights,
    space: StateSpace | None = None,
    options: OptimizerOptions | None = None,
) -> ConstantReport:
    """gap, kappa, lsi or mlsi of the block dynamics of weights on space."""
    if quantity == "gap":
        return spectral_gap(generator_for(weights, space))
    if quantity not in SELECTORS:
        raise DomainError(f"unknown quantity {quantity!r}")
    form = dirichlet_form(weights, space, SELECTORS[quantity])
    return minimize_ratio(RatioProblem(numerator=form, quantity=quantity), options)


def bernoulli_laplace_constant(
    quantity: Quantity, n: int, r: int, options: OptimizerOptions | None = None
) -> ConstantReport:
    if quantity == "gap":
        return spectral_gap(gen_bernoulli_laplace(n, r))
    space = build_space(SpaceKind.SLICE, n, r=r)
    form = DirichletEvaluator(
        space=space, terms=bernoulli_laplace_terms(space), selector=SELECTORS[quantity]
    )
    return minimize_ratio(RatioProblem(numerator=form, quantity=quantity), options)


# =============================================================================
# Verification against closed forms
# =============================================================================


def _relative_error(value: float, expected: float) -> float:
    return abs(value - expected) / max(abs(expected), 1e-300)


def _is_dirac(values: Sequence[float] | None, tol: float = 1e-6) -> bool:
    if values is None:
        return False
    f = np.asarray(values)
    return bool(f.max() >= (1 - tol) * f.sum())


def _is_single_particle(space: StateSpace, vector: Sequence[float] | None) -> bool:
    """Vector lies in the span of the functions 1{sigma_x = a}."""
    if vector is None:
        return False
    v = np.asarray(vector)
    states = space.states
    basis = np.concatenate(
        [(states == a).astype(float) for a in range(space.n)], axis=1
    )
    coefficients, *_ = np.linalg.lstsq(basis, v, rcond=None)
    return bool(np.linalg.norm(basis @ coefficients - v) <= 1e-6 * np.linalg.norm(v))


def verify(
    name: str,
    n: int,
    ell: int | None = None,
    r: int | None = None,
    w: MeanFieldWeights | None = None,
    options: OptimizerOptions | None = None,
    tolerance: float | None = None,
) -> VerificationReport:
    """Compute the named constant on its instance and compare to the closed form."""
    key = closed_forms.canonical_name(name)
    params: dict[str, Any] = {"n": n}
    extremizer: Literal["dirac", "single-particle", "other", "n/a"] = "n/a"
    if key in ("kappa_mf_single", "gap_mf_perm", "kappa_mf_perm"):
        mf = closed_forms.as_mean_field(n, w, ell)
        params["w"] = {str(k): mf.weight(k) for k in mf.support()}
        expected = closed_forms.closed_form(key, n=n, w=mf)
        if key == "kappa_mf_single":
            report = compute_constant("kappa", mf, None, options)
            extremizer = "dirac"
        elif key == "kappa_mf_perm":
            space = build_space(SpaceKind.PERMUTATIONS, n)
            report = compute_constant("kappa", mf, space, options)
            extremizer = "dirac"
        else:
            report = spectral_gap(gen_shuffle(mean_field_expand(mf)))
            extremizer = "single-particle"
    elif key == "kappa_bl":
        if r is None:
            raise DomainError("kappa_bl needs r")
        params["r"] = r
        expected = closed_forms.kappa_bl(n, r)
        report = bernoulli_laplace_constant("kappa", n, r, options)
        extremizer = "dirac"
    elif key in ("kappa_kn", "lsi_kn", "gap_kn"):
        expected = closed_forms.closed_form(key, n=n)
        quantity = COMPLETE_GRAPH_QUANTITIES[key]
        report = compute_constant(quantity, complete_graph(n), None, options)
        extremizer = "dirac" if key == "kappa_kn" else "other"
    else:
        raise DomainError(f"no verification instance for {name!r}")

    if tolerance is None:
        tolerance = 1e-9 if report.quantity == "gap" else 1e-6
    error = _relative_error(report.value, expected)
    report.closed_form = expected
    report.formula = key
    report.relative_error = error

    extremizer_ok: bool | None = None
    if extremizer == "dirac":
        extremizer_ok = _is_dirac(report.minimizer)
    elif extremizer == "single-particle":
        space = build_space(SpaceKind.PERMUTATIONS, n)
        extremizer_ok = _is_single_particle(space, report.minimizer)
    passed = error <= tolerance and report.diagnostics.converged
    if not passed:
        logger.warning(f"verify {key} n={n}: relative error {error:.3g}")
    return VerificationReport(
        name=key,
        params=params,
        value=report.value,
        closed_form=expected,
        relative_error=error,
        tolerance=tolerance,
        passed=passed,
        extremizer=extremizer,
        extremizer_ok=extremizer_ok,
        report=report,
    )


def verify_tensorization(
    h: HypergraphWeights,
    max_particles: int,
    options: OptimizerOptions | None = None,
    with_kappa: bool = True,
    gap_tolerance: float = 1e-10,
    kappa_tolerance: float = 1e-4,
) -> TensorizationReport:
    """N synchronous particles have the gap and kappa of one particle."""
    if max_particles < 2:
        raise DomainError("tensorization needs at least N = 2")
    gap_single = spectral_gap(gen_single_hypergraph(h)).value
    kappa_single = compute_constant("kappa", h, None, options).value if with_kappa else None
    rows = []
    passed = True
    for particles in range(2, max_particles + 1):
        gap = spectral_gap(gen_synchronous(h, particles)).value
        row = TensorizationRow(
            particles=particles, gap=gap, gap_difference=abs(gap - gap_single)
        )
        passed &= row.gap_difference <= gap_tolerance * max(1.0, gap_single)
        if kappa_single is not None:
            space = build_space(SpaceKind.PRODUCT, h.n, particles=particles)
            kappa = compute_constant("kappa", h, space, options).value
            row.kappa = kappa
            row.kappa_difference = abs(kappa - kappa_single)
            passed &= row.kappa_difference <= kappa_tolerance * max(1.0, kappa_single)
        rows.append(row)
    return TensorizationReport(
        n=h.n,
        gap_single=gap_single,
        kappa_single=kappa_single,
        rows=rows,
        gap_tolerance=gap_tolerance,
        kappa_tolerance=kappa_tolerance,
        passed=passed,
    )


# =============================================================================
# Probes
# =============================================================================


def conjecture_probe_gap(h: HypergraphWeights, rtol: float = 1e-9) -> ConjectureReport:
    """Shuffle gap against the gap of the projected graph (ratio recorded)."""
    gap_shuffle = spectral_gap(gen_shuffle(h)).value
    gap_graph = spectral_gap(gen_single_graph(graph_from_hypergraph(h))).value
    ratio = gap_shuffle / gap_graph
    return ConjectureReport(
        n=h.n,
        gap_shuffle=gap_shuffle,
        gap_graph=gap_graph,
        ratio=ratio,
        mean_field=h.mean_field_weights() is not None,
        upper_bound_holds=ratio <= 1 + rtol,
    )


def family_probe(
    sizes: Sequence[int] = (4, 5, 6),
    boxes: Sequence[tuple[int, int]] = ((2, 2), (2, 3)),
    options: OptimizerOptions | None = None,
) -> FamilyProbeReport:
    """kappa / lambda on cycles, paths and boxes, plus kappa of the 3-vertex star."""
    families: list[tuple[str, WeightedGraph]] = []
    for n in sizes:
        families.append((f"cycle-{n}", cycle_graph(n)))
        families.append((f"path-{n}", path_graph(n)))
    for rows, cols in boxes:
        families.append((f"box-{rows}x{cols}", box_graph(rows, cols)))
    table = []
    for label, g in families:
        kappa = compute_constant("kappa", g, None, options)
        gap = compute_constant("gap", g).value
        table.append(
            FamilyRow(
                family=label,
                n=g.n,
                kappa=kappa.value,
                gap=gap,
                ratio=kappa.value / gap,
                converged=kappa.diagnostics.converged,
            )
        )
    star3 = compute_constant("kappa", star_graph(3), None, options).value
    return FamilyProbeReport(rows=table, star3_kappa=star3)


def strict_gap_check(n_max: int = 5) -> StrictGapReport:
    """kappa[alpha^l] on one particle against the Dirac ratio on permutations."""
    rows = []
    for n in range(3, n_max + 1):
        space = build_space(SpaceKind.PERMUTATIONS, n)
        for ell in range(2, n):
            form = dirichlet_form(MeanFieldWeights.single(n, ell), space)
            dirac = float(RatioProblem(numerator=form).dirac_ratios().min())
            single = closed_forms.kappa_mf_single(n, ell=ell)
            rows.append(
                StrictGapRow(
                    n=n, ell=ell, kappa_single=single, kappa_perm=dirac, strict=single > dirac
                )
            )
    return StrictGapReport(rows=rows, passed=all(row.strict for row in rows))


def multislice_probe(n: int, colors: Sequence[int]) -> MultisliceReport:
    value, coarsening = closed_forms.multislice_conjecture(n, colors)
    return MultisliceReport(n=n, colors=list(colors), value=value, coarsening=coarsening)


def all_constants(
    weights: Weights,
    space: StateSpace | None = None,
    options: OptimizerOptions | None = None,
) -> dict[str, float]:
    quantities: tuple[Quantity, ...] = ("gap", "kappa", "lsi", "mlsi")
    return {q: compute_constant(q, weights, space, options).value for q in quantities}


def constant_chain(
    values: dict[str, float], rtol: float = 1e-5
) -> list[InequalityCheck]:
    """2 log2 beta <= kappa <= 2 beta <= rho / 2 <= lambda on a graph."""
    lam, kappa = values["gap"], values["kappa"]
    beta, rho = values["lsi"], values["mlsi"]
    chain = [
        ("2log2*beta <= kappa", 2 * math.log(2) * beta, kappa),
        ("kappa <= 2*beta", kappa, 2 * beta),
        ("2*beta <= rho/2", 2 * beta, rho / 2),
        ("rho/2 <= lambda", rho / 2, lam),
    ]
    return [
        InequalityCheck(name=name, lhs=lhs, rhs=rhs, holds=lhs <= rhs * (1 + rtol) + rtol)
        for name, lhs, rhs in chain
    ]


# =============================================================================
# Regression sweep
# =============================================================================

FULL_SWEEP_MAX_N = 6


def _anchor(name: str, value: float, expected: float, tolerance: float) -> AnchorCheck:
    return AnchorCheck(
        name=name,
        value=value,
        expected=expected,
        tolerance=tolerance,
        passed=abs(value - expected) <= tolerance,
    )


def numeric_anchors(options: OptimizerOptions | None = None) -> list[AnchorCheck]:
    """Star and complete-graph values that every build must reproduce."""
    anchors = [
        _anchor(
            "kappa(star 4)",
            compute_constant("kappa", star_graph(4), None, options).value,
            0.9217860,
            1e-6,
        ),
        _anchor(
            "kappa(K_3)/3",
            compute_constant("kappa", complete_graph(3), None, options).value / 3,
            0.8412396,
            1e-7,
        ),
    ]
    for n in range(3, 11):
        gap = spectral_gap(gen_single_graph(star_graph(n))).value
        anchors.append(_anchor(f"gap(star {n})", gap, 1.0, 1e-9))
    for n in range(2, 9):
        kappa = compute_constant("kappa", complete_graph(n), None, options).value
        expected = closed_forms.kappa_kn(n)
        anchors.append(_anchor(f"kappa(K_{n})", kappa, expected, 1e-6 * expected))
    return anchors


def bound_checks(
    n_max: int, options: OptimizerOptions | None = None, rtol: float = 1e-6
) -> list[InequalityCheck]:
    """Star bracket and the gap lower bound on kappa, for 3 <= n <= n_max."""
    checks: list[InequalityCheck] = []
    for n in range(3, n_max + 1):
        lower, upper = closed_forms.star_bounds(n)
        kappa_star = compute_constant("kappa", star_graph(n), None, options).value
        checks.append(_bound(f"star lower({n}) <= kappa(star {n})", lower, kappa_star, rtol))
        checks.append(_bound(f"kappa(star {n}) <= star upper({n})", kappa_star, upper, rtol))
        for name, g in ((f"K_{n}", complete_graph(n)), (f"path {n}", path_graph(n))):
            gap = spectral_gap(gen_single_graph(g)).value
            kappa = compute_constant("kappa", g, None, options).value
            lhs = closed_forms.kappa_lower_from_gap(n, gap)
            checks.append(_bound(f"gap bound({name}) <= kappa({name})", lhs, kappa, rtol))
    return checks


def _bound(name: str, lhs: float, rhs: float, rtol: float) -> InequalityCheck:
    return InequalityCheck(name=name, lhs=lhs, rhs=rhs, holds=lhs <= rhs * (1 + rtol))


def regression_sweep(
    n_max: int, options: OptimizerOptions | None = None, with_anchors: bool = True
) -> SweepReport:
    """Every closed form up to n_max; above six vertices only the single-particle
    and Bernoulli-Laplace families, which stay cheap."""
    if n_max < 2:
        raise DomainError("the sweep needs n_max >= 2")
    runs: list[VerificationReport] = []
    for n in range(2, n_max + 1):
        full = n <= FULL_SWEEP_MAX_N
        for ell in range(2, n + 1):
            runs.append(verify("kappa_mf_single", n, ell=ell, options=options))
            if full:
                runs.append(verify("gap_mf_perm", n, ell=ell, options=options))
                runs.append(verify("kappa_mf_perm", n, ell=ell, options=options))
        for r in range(1, n):
            runs.append(verify("kappa_bl", n, r=r, options=options))
        if full and n >= 3:
            for name in ("kappa_kn", "lsi_kn", "gap_kn"):
                runs.append(verify(name, n, options=options))
    anchors = numeric_anchors(options) if with_anchors else []
    bounds = bound_checks(n_max, options)
    passed = (
        all(run.passed for run in runs)
        and all(a.passed for a in anchors)
        and all(b.holds for b in bounds)
    )
    logger.info(
        f"Sweep to n={n_max}: {sum(run.passed for run in runs)}/{len(runs)} closed forms, "
        f"{sum(a.passed for a in anchors)}/{len(anchors)} anchors, "
        f"{sum(b.holds for b in bounds)}/{len(bounds)} bounds"
    )
    return SweepReport(
        n_max=n_max, verifications=runs, anchors=anchors, bounds=bounds, passed=passed
    )
