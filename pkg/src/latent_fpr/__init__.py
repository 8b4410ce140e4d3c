"""Monte Carlo replication of the 2014 Miami-Dade latent print error-rate study
and the false positive rate estimators proposed for it."""

from .inference import (
    BayesSummary,
    BetaPosterior,
    ProportionTest,
    RatioEstimate,
    beta_posterior,
    beta_ppf,
    betainc,
    binomial_ci_upper,
    fisher_exact_two_sided,
    fpr_estimate,
    posterior_map,
    posterior_quantile,
    solution_one_analysis,
    solution_two_analysis,
    two_proportion_test,
)
from .model import (
    MDPD_OBSERVED,
    PRESET_NAMES,
    DecisionCategory,
    DecisionCountTable,
    ObservedCounts,
    RateVectorPair,
    SourceScenario,
    StudyDesign,
    build_rate_vector_pair,
    preset_rate_vectors,
)
from .sampling import RngStream, draw_binomial, draw_multinomial, draw_subset
from .simulator import (
    SimulationSummary,
    hdi_from_samples,
    partition_prints,
    run_study,
    simulate_phase1,
    simulate_phase2,
)

__version__ = "0.1.0"
