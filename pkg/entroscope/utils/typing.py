from typing import (
    Annotated,
    Any,
    Literal,
    Union,
)

from pydantic import (
    BaseModel,
    Field,
)

Quantity = Literal["gap", "kappa", "lsi", "mlsi", "ratio"]
Candidate = Literal["eigensolve", "interior", "dirac", "two-valued", "linearization"]


class Diagnostics(BaseModel):
    """How a constant was obtained and how far to trust it."""

    iterations: int = 0
    restarts: int = 0
    converged: bool = True
    seed: int = 0
    candidate: Candidate = "interior"
    limit: bool = False
    boundary: bool = False
    disconnected: bool = False
    restart_scatter: float | None = None
    notes: list[str] = Field(default_factory=list)


class ConstantReport(BaseModel):
    """A computed constant with its certificate."""

    quantity: Quantity
    value: float
    space: str
    minimizer: list[float] | None = None
    closed_form: float | None = None
    formula: str | None = None
    relative_error: float | None = None
    diagnostics: Diagnostics = Field(default_factory=Diagnostics)
    log_type: Literal["constant"] = "constant"


class VerificationReport(BaseModel):
    """A closed form checked against an eigensolve or the optimizer."""

    name: str
    params: dict[str, Any]
    value: float
    closed_form: float
    relative_error: float
    tolerance: float
    passed: bool
    extremizer: Literal["dirac", "single-particle", "other", "n/a"] = "n/a"
    extremizer_ok: bool | None = None
    report: ConstantReport
    log_type: Literal["verification"] = "verification"


class TensorizationRow(BaseModel):
    particles: int
    gap: float
    gap_difference: float
    kappa: float | None = None
    kappa_difference: float | None = None


class TensorizationReport(BaseModel):
    """Constants of N synchronous particles against a single particle."""

    n: int
    gap_single: float
    kappa_single: float | None = None
    rows: list[TensorizationRow]
    gap_tolerance: float
    kappa_tolerance: float
    passed: bool
    log_type: Literal["tensorization"] = "tensorization"


class ConjectureReport(BaseModel):
    """Shuffle gap against the gap of the projected graph."""

    n: int
    gap_shuffle: float
    gap_graph: float
    ratio: float
    mean_field: bool
    upper_bound_holds: bool
    log_type: Literal["conjecture-gap"] = "conjecture-gap"


class FamilyRow(BaseModel):
    family: str
    n: int
    kappa: float
    gap: float
    ratio: float
    converged: bool


class FamilyProbeReport(BaseModel):
    """Measured kappa / lambda for cycles, paths and boxes (recorded only)."""

    rows: list[FamilyRow]
    star3_kappa: float | None = None
    log_type: Literal["family-probe"] = "family-probe"


class MultisliceReport(BaseModel):
    """Conjectured multislice value with its minimizing coarsening."""

    n: int
    colors: list[int]
    value: float
    coarsening: list[int]
    log_type: Literal["multislice"] = "multislice"


class StrictGapRow(BaseModel):
    n: int
    ell: int
    kappa_single: float
    kappa_perm: float
    strict: bool


class StrictGapReport(BaseModel):
    rows: list[StrictGapRow]
    passed: bool
    log_type: Literal["strict-gap"] = "strict-gap"


class InequalityCheck(BaseModel):
    name: str
    lhs: float
    rhs: float
    holds: bool


class ReductionReport(BaseModel):
    """One electric network reduction step."""

    node: int
    before: list[list[float]]
    after: list[list[float]]
    star_weights: list[list[float]]
    mapping: list[int]
    log_type: Literal["reduction"] = "reduction"


class MonotonicityReport(BaseModel):
    """Constants before and after a reduction, with the guaranteed orderings."""

    node: int
    leaf: bool
    before: dict[str, float]
    after: dict[str, float]
    checks: list[InequalityCheck]
    passed: bool
    reduction: ReductionReport
    log_type: Literal["monotonicity"] = "monotonicity"


class OctopusReport(BaseModel):
    """Star-reduced pair terms against the star's own terms on permutations."""

    mode: Literal["variance", "entropy"]
    node: int
    samples: int
    min_slack: float
    worst_ratio: float
    violations: int
    weakened_holds: bool | None = None
    passed: bool | None = None
    log_type: Literal["octopus"] = "octopus"


class PermanentBoundReport(BaseModel):
    """perm(A) against max{1, n!/n^(n/p)} times the product of row p-norms."""

    n: int
    p: float
    permanent: float
    bound: float
    prefactor: float
    slack: float
    relative_slack: float
    equality: Literal["identity", "all-ones"] | None = None
    holds: bool
    log_type: Literal["permanent-bound"] = "permanent-bound"


class CorrelationReport(BaseModel):
    n: int
    p: float
    lhs: float
    rhs: float
    slack: float
    holds: bool
    log_type: Literal["correlation"] = "correlation"


class FuzzReport(BaseModel):
    """Random nonnegative matrices checked against the permanent bound."""

    n: int
    count: int
    ps: list[float]
    min_relative_slack: float
    violations: int
    max_ryser_error: float | None = None
    passed: bool
    log_type: Literal["permanent-fuzz"] = "permanent-fuzz"


class DecayCurve(BaseModel):
    """Entropy and variance of f_t = exp(tL) f0 on a time grid."""

    times: list[float]
    ent_values: list[float]
    var_values: list[float]
    rate_bound: float | None = None
    mass_error: float
    min_value: float
    log_type: Literal["decay-curve"] = "decay-curve"


class EnvelopeReport(BaseModel):
    kappa: float
    holds: bool
    worst_excess: float
    empirical_rate: float
    tolerance: float
    curve: DecayCurve
    log_type: Literal["envelope"] = "envelope"


class MixingReport(BaseModel):
    """Pinsker-shaped bound next to the exact total-variation mixing time."""

    kappa: float
    constant: float
    bound: float
    eps: float
    exact_mixing_time: float | None = None
    log_type: Literal["mixing"] = "mixing"


class InequalityReport(BaseModel):
    """A sampled inequality: worst slack over all samples, never raised."""

    name: str
    samples: int
    worst_slack: float
    violations: int
    tolerance: float
    passed: bool
    log_type: Literal["inequality"] = "inequality"


class AnchorCheck(BaseModel):
    name: str
    value: float
    expected: float
    tolerance: float
    passed: bool


class SweepReport(BaseModel):
    """Closed-form regression sweep plus the numeric anchors and bounds."""

    n_max: int
    verifications: list[VerificationReport]
    anchors: list[AnchorCheck]
    bounds: list[InequalityCheck] = Field(default_factory=list)
    passed: bool
    log_type: Literal["sweep"] = "sweep"


Result = Annotated[
    Union[
        ConstantReport,
        VerificationReport,
        TensorizationReport,
        ConjectureReport,
        FamilyProbeReport,
        MultisliceReport,
        StrictGapReport,
        ReductionReport,
        MonotonicityReport,
        OctopusReport,
        PermanentBoundReport,
        CorrelationReport,
        FuzzReport,
        DecayCurve,
        EnvelopeReport,
        MixingReport,
        InequalityReport,
        SweepReport,
    ],
    Field(discriminator="log_type"),
]


class RunReport(BaseModel):
    """Envelope printed by every CLI command."""

    command: str
    inputs: dict[str, Any]
    results: list[Result]
    passed: bool
    wall_time_ms: float
    tool_version: str
    seed: int
    log_type: Literal["run"] = "run"
