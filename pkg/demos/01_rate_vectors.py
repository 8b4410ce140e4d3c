"""
Decision-rate vectors
=====================

Every simulated examination ends in one of six decisions. How likely each
one is depends on whether the true source of the latent print is in the
packet. This script builds the rate rows used by the simulations, starting
from the observed counts of the original study.
"""

from latent_fpr import MDPD_OBSERVED, DecisionCategory, SourceScenario
from latent_fpr.model import PRESET_LABELS, PRESET_NAMES, preset_rate_vectors

# %%
# The observed decision counts, one row per scenario.
for s in SourceScenario:
    print(s.key, dict(zip((c.key for c in DecisionCategory), MDPD_OBSERVED.table.counts[s].tolist())))

# %%
# Seven rate rows: the observed one and three alternative false positive
# rates, each either per scenario or with a pooled inconclusive rate.
for name in PRESET_NAMES:
    r = preset_rate_vectors(name)
    print(f"{PRESET_LABELS[name]:<40}", [f"{x:.3f}" for x in r.as_array().ravel()])

# %%
# The printed rows are rounded. Passing exact=True keeps the underlying
# ratios, which is closer to what a replication with raw counts would use.
alt = preset_rate_vectors("alt", exact=True)
print(alt.rsa[DecisionCategory.WRONG_PERSON_ID], float(alt.rsa[DecisionCategory.WRONG_PERSON_ID]))

# %%
# Rate pairs serialise to JSON and can be fed back to the command line
# through ``latent-fpr simulate --rates file.json``.
print(alt.to_json())
