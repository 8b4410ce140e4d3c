"""
Point estimates, Bayesian bounds and a test
===========================================

Several ways of turning the observed counts into a false positive rate,
followed by Beta posteriors under a uniform prior and an exact test of
whether wrong-person errors happen equally often with and without the
source present.
"""

from latent_fpr import MDPD_OBSERVED
from latent_fpr.inference import (
    FPR_VARIANTS,
    beta_posterior,
    posterior_map,
    posterior_quantile,
    fpr_estimate,
    solution_one_analysis,
    solution_two_analysis,
    two_proportion_test,
)

# %%
# Frequentist estimates with two flavours of upper bound.
for v in FPR_VARIANTS:
    w = fpr_estimate(v, MDPD_OBSERVED)
    cp = fpr_estimate(v, MDPD_OBSERVED, ci_method="clopper_pearson")
    print(f"{v:<12} {w.numerator}/{w.denominator} = {w.estimate:.4f}"
          f"  Wald {w.ci_upper95:.4f}  Clopper-Pearson {cp.ci_upper95:.4f}")

# %%
# A Beta(1, 1) prior updated with x errors in n decisions.
post = beta_posterior(42, 4536)
print(post, "mode", posterior_map(post), "97.5% quantile", posterior_quantile(post, 0.975))

# %%
# Splitting the errors by source presence, then by error type.
for s in solution_one_analysis(MDPD_OBSERVED) + solution_two_analysis(MDPD_OBSERVED):
    print(s.label, s.successes, s.trials, round(s.map, 5), round(s.upper975, 5), s.note or "")

# %%
print(two_proportion_test(4, 3177, 3, 1359))
