"""stablesums: a simulation laboratory for partial-sum limits of
heavy-tailed, serially dependent time series.

The package verifies, end to end and reproducibly, that normalized partial
sums of regularly varying stationary sequences approach a pure-jump stable
limit: it simulates the models, estimates their extremal dependence
structure, simulates the limiting process and point measures, and compares
the two sides with seeded statistical tests and exact algebraic audits.
"""

from .cadlag import (CadlagPath, CompletedGraph, PathFormatError,
                     completed_graph, l1_distance, m1_distance,
                     read_path_csv, uniform_distance, write_path_csv)
from .estimators import (BlockingScheme, ThetaEstimate,
                         anticlustering_diagnostic, blocks_estimator,
                         empirical_tail_process, mixing_diagnostic,
                         read_series_csv, runs_estimator,
                         small_step_diagnostic, write_series_csv)
from .harness import (ExperimentConfig, Report, emit_report, ks_two_sample,
                      psi_decomposition_residual, run_flt_experiment)
from .limits import (default_truncation, simulate_cluster_limit_measure,
                     simulate_limit_marginal, simulate_limit_path,
                     small_jump_bias_bound, small_jump_sd)
from .models import (GARCH11Squared, IID, MA, IsolatedExtremes, MarginalSpec,
                     StochVol, build_partial_sum_path, centering_sequence,
                     model_from_config, model_to_config, normalizing_sequence,
                     simulate_series)
from .pointproc import (DomainReport, MeasureFormatError, PointMeasure,
                        build_time_space_measure, continuity_domain,
                        measure_from_json, measure_to_json, read_measure_csv,
                        summation_functional, write_measure_csv)
from .tailproc import (ClusterSampler, LevyTriple, TailWindow,
                       cluster_acceptance_rate, cluster_tail_mass,
                       extremal_index_spectral_mc, extremal_index_theoretical,
                       garch_tail_constant, sample_cluster_process,
                       sample_tail_window, spectral_tail_constants,
                       tail_window_sampler, theoretical_triple,
                       truncated_drift)

__version__ = "0.1.0"

__all__ = [
    "CadlagPath", "CompletedGraph", "PathFormatError", "completed_graph",
    "l1_distance", "m1_distance", "read_path_csv", "uniform_distance",
    "write_path_csv",
    "PointMeasure", "DomainReport", "MeasureFormatError",
    "build_time_space_measure", "continuity_domain", "summation_functional",
    "read_measure_csv", "write_measure_csv", "measure_to_json",
    "measure_from_json",
    "MarginalSpec", "IID", "MA", "GARCH11Squared", "StochVol",
    "IsolatedExtremes", "simulate_series", "normalizing_sequence",
    "centering_sequence", "build_partial_sum_path", "model_from_config",
    "model_to_config",
    "TailWindow", "LevyTriple", "ClusterSampler", "tail_window_sampler",
    "sample_tail_window", "extremal_index_theoretical",
    "extremal_index_spectral_mc", "sample_cluster_process",
    "cluster_acceptance_rate", "cluster_tail_mass", "spectral_tail_constants",
    "theoretical_triple", "garch_tail_constant", "truncated_drift",
    "BlockingScheme", "ThetaEstimate", "blocks_estimator", "runs_estimator",
    "empirical_tail_process", "anticlustering_diagnostic",
    "small_step_diagnostic", "mixing_diagnostic", "read_series_csv",
    "write_series_csv",
    "default_truncation", "simulate_limit_marginal", "simulate_limit_path",
    "simulate_cluster_limit_measure", "small_jump_bias_bound", "small_jump_sd",
    "ExperimentConfig", "Report", "ks_two_sample", "run_flt_experiment",
    "emit_report", "psi_decomposition_residual",
    "__version__",
]
