"""Simulation and numerical-verification lab for inhomogeneous random graphs."""

from .analytics import (
    CalibrationResult,
    DegreeRatioReport,
    ExpectationEstimate,
    SteinBound,
    UStatBound,
    calibrate_parameter,
    degree_ratio_check,
    edge_indicator_h,
    edge_stein_bound,
    expected_connected_k,
    expected_degree_count,
    expected_edges,
    expected_k_components,
    ustat_gamma,
)
from .connection import (
    ConnectionFunction,
    Constant,
    HardDisk,
    HomogeneityReport,
    PartitionBlocks,
    RayleighProfile,
    SoftDisk,
    connectedness_prob,
    group_connect_prob,
    homogeneity,
    make_connection,
    no_cross_edge_prob,
)
from .distributions import (
    BootstrapCI,
    CountDistribution,
    bootstrap_tv_ci,
    empirical_law,
    factorial_moment,
    normality_diagnostic,
    poisson_law,
    tv_distance,
    wasserstein_distance,
)
from .errors import CalibrationError, CapabilityError, ConfigurationError, DomainError
from .graph_stats import (
    component_counts,
    connected_induced_count,
    degree_counts,
)
from .harness import (
    ExperimentConfig,
    ReplicationRecord,
    RunResult,
    load_config,
    parse_config,
    run_experiment,
    sweep,
)
from .marked_sampler import (
    Graph,
    MarkedConfiguration,
    build_graph_ordered,
    build_graph_sequential,
    configuration_from_points,
    sample_binomial_configuration,
    sample_poisson_configuration,
)
from .scenarios import ScenarioReport, Verdict, run_scenario
from .statespace import (
    IsotropicGaussian,
    ProbabilityMeasure,
    ProductWeibull,
    TabulatedDensity,
    UniformCube,
    UniformTorus,
    build_measure,
)

__version__ = "0.1.0"
