"""Mark-weighted K-function estimators and Monte Carlo structure tests
for marked spatial point patterns."""

from .experiments import (
    ClassificationReport,
    KsResult,
    PowerReport,
    ks_two_sample,
    local_scenario,
    power_scenario,
    run_classification,
    run_power,
)
from .intensity import IntensityEstimate, constant_intensity, kernel_intensity
from .pattern import (
    MarkedPattern,
    NeighborIndex,
    RGrid,
    Window,
    boundary_distance,
    build_index,
    default_rgrid,
    distance,
)
from .simulate import (
    BoundaryPower,
    ClusterGaussianMarks,
    HomPoisson,
    IidEmpirical,
    IidUniform01,
    InhomPoissonLinear,
    LabeledPattern,
    LocalGaussianCenters,
    ScenarioSpec,
    ThomasSuperposition,
    assign_marks_boundary,
    assign_marks_iid,
    assign_marks_local_centers,
    gen_hom_poisson,
    gen_inhom_poisson_linear,
    gen_thomas_superposition,
    generate,
    permute_marks,
)
from .summaries import (
    MarkSummary,
    SummaryCurve,
    k_hat,
    kappa_tf_hat,
    ktf_hat,
    local_ktf_hat,
    local_ktf_matrix,
    mark_summary,
)
from .testing import (
    GlobalMarkTest,
    LocalMarkTest,
    LocalTestResult,
    SequentialMarkTest,
    SequentialOutcome,
    TestResult,
    default_kappa_bandwidth,
    global_test,
    local_test,
    reference_curve,
    sequential_procedure,
    stat_T,
    stat_sup,
)

__version__ = "0.1.0"
