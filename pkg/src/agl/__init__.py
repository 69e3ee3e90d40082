"""Age of gossip under timestamp-tampering adversaries.

Exact stationary-age recursions, closed-form scaling bounds, and a
discrete-event Monte-Carlo engine that realizes the same dynamics, each
serving as the other's check.
"""

from .analytic import (AgeBounds, AnalyticAges, BoundInapplicableError,
                       fcn_capture_ages, fcn_case_bounds,
                       fcn_p_monotonicity_check, harmonic_number, honest_ages,
                       lemma_envelopes, lemma_sum, mitm_ages, prefix_products,
                       urn_age_bounds, urn_capture_ages)
from .experiments import (ComparisonReport, ScalingFit, SimSettings, SweepResult,
                          SweepRow, compare_sim_analytic, figure_preset,
                          scaling_exponent, sweep)
from .model import (AdversaryPolicy, CheckedConfig, ConfigError, NetworkKind,
                    NetworkSpec, RateTable, RunParams, build_rate_table,
                    validate_config)
from .simulator import (EquivalenceVerdict, NodeState, SimConfig, SimReport,
                        coin_mode_equivalence, event_rate, replicate, run,
                        trajectory_probe)

__all__ = [
    "AdversaryPolicy", "AgeBounds", "AnalyticAges", "BoundInapplicableError",
    "CheckedConfig", "ComparisonReport", "ConfigError", "EquivalenceVerdict",
    "NetworkKind", "NetworkSpec", "NodeState", "RateTable", "RunParams",
    "ScalingFit", "SimConfig", "SimReport", "SimSettings", "SweepResult",
    "SweepRow", "build_rate_table", "coin_mode_equivalence",
    "compare_sim_analytic", "event_rate", "fcn_capture_ages", "fcn_case_bounds",
    "fcn_p_monotonicity_check", "figure_preset", "harmonic_number",
    "honest_ages", "lemma_envelopes", "lemma_sum", "mitm_ages",
    "prefix_products", "replicate", "run", "scaling_exponent", "sweep",
    "trajectory_probe", "urn_age_bounds", "urn_capture_ages",
    "validate_config",
]

__version__ = "0.1.0"
