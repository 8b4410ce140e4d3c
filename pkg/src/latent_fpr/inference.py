"""False positive rate estimators, binomial bounds and Beta-Binomial posteriors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist

from .model import MDPD_OBSERVED, DecisionCategory, ObservedCounts, SourceScenario


class InferenceError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


# Figures attributed to the PCAST report; its computation is not reproduced here.
PCAST_UPPER_BOUND = 0.054
PCAST_ONE_IN = 18

# wrong-finger MAP as printed alongside the second Bayesian solution; 35/4536 rounds to 0.8%
PRINTED_WRONG_FINGER_MAP = 0.007

EPS = 1e-15
TINY = 1e-300
CF_MAX_ITER = 100_000
QUANTILE_TOL = 1e-10
QUANTILE_FTOL = 1e-12
QUANTILE_MAX_ITER = 500


# --- regularized incomplete beta -------------------------------------------


def _log_beta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise NumericalError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise InferenceError("betainc needs a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise InferenceError("betainc needs x in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b)
    # the fraction converges fast only on the near side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def beta_pdf(a, b, x):
    if x <= 0.0 or x >= 1.0:
        if (x == 0.0 and a == 1.0) or (x == 1.0 and b == 1.0):
            return math.exp(-_log_beta(a, b))
        return 0.0
    return math.exp((a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - _log_beta(a, b))


def beta_ppf(a: float, b: float, q: float, tol: float = QUANTILE_TOL) -> float:
    """Inverse of :func:`betainc` in x: safeguarded Newton inside a bisection bracket."""
    if not 0.0 < q < 1.0:
        raise InferenceError("q must lie in (0, 1)")
    lo, hi = 0.0, 1.0
    # start from the mean; Newton steps that leave the bracket, or fail to
    # halve it every two steps, fall back to bisection
    x = a / (a + b)
    widths = [1.0, 1.0]
    for _ in range(QUANTILE_MAX_ITER):
        f = betainc(a, b, x) - q
        if f < 0:
            lo = x
        else:
            hi = x
        width = hi - lo
        if f == 0.0 or width <= 4 * math.ulp(x):
            return x
        if width <= tol and abs(f) <= QUANTILE_FTOL:
            return x
        pdf = beta_pdf(a, b, x)
        x_new = x - f / pdf if pdf > 0 else math.nan
        if not lo < x_new < hi or width > 0.5 * widths[-2]:
            x_new = 0.5 * (lo + hi)
        elif abs(x_new - x) <= 1e-3 * tol and abs(f) <= QUANTILE_FTOL:
            return x_new
        widths.append(width)
        x = x_new
    raise NumericalError(f"beta quantile did not converge (a={a}, b={b}, q={q})")


# --- ratio estimators -------------------------------------------------------


@dataclass(frozen=True)
class RatioEstimate:
    variant: str
    numerator: int
    denominator: int
    estimate: float
    ci_upper95: float
    method: str

    @property
    def ratio(self) -> tuple[int, int]:
        return self.numerator, self.denominator

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "numerator": self.numerator,
            "denominator": self.denominator,
            "estimate": self.estimate,
            "ciUpper95": self.ci_upper95,
            "method": self.method,
        }


FPR_VARIANTS = ("mdpd", "mdpdExclInc", "osac", "alternative")


def _fpr_ratio(variant: str, counts: ObservedCounts) -> tuple[int, int]:
    P, A = SourceScenario.PRESENT, SourceScenario.ABSENT
    C = DecisionCategory
    table = counts.table
    false_ids = table.category_total(C.WRONG_FINGER_ID) + table.category_total(C.WRONG_PERSON_ID)
    if variant in ("mdpd", "mdpdExclInc"):
        # all false IDs over the source-absent decisions plus the source-present false IDs
        present_false = counts[P, C.WRONG_FINGER_ID] + counts[P, C.WRONG_PERSON_ID]
        den = counts.absent_total + present_false
        if variant == "mdpdExclInc":
            den -= counts[A, C.INCONCLUSIVE]
        return false_ids, den
    if variant == "osac":
        return false_ids, counts.total - table.category_total(C.INCONCLUSIVE)
    if variant == "alternative":
        return false_ids, counts.total
    raise KeyError(f"unknown FPR variant {variant!r}; choose from {', '.join(FPR_VARIANTS)}")


def fpr_estimate(variant: str, counts: ObservedCounts = MDPD_OBSERVED, ci_method: str = "wald") -> RatioEstimate:
    """One of the four competing false positive rate calculations.

    ``mdpd``: all false IDs / (source-absent decisions + source-present false IDs);
    ``mdpdExclInc``: the same with source-absent inconclusives removed;
    ``osac``: all false IDs / all non-inconclusive decisions;
    ``alternative``: all false IDs / all decisions.
    """
    num, den = _fpr_ratio(variant, counts)
    if den <= 0:
        raise ZeroDivisionError(f"{variant}: denominator is zero")
    return RatioEstimate(
        variant=variant,
        numerator=num,
        denominator=den,
        estimate=num / den,
        ci_upper95=binomial_ci_upper(num, den, ci_method),
        method=ci_method,
    )


def binomial_ci_upper(successes: int, trials: int, method: str = "wald", confidence: float = 0.95) -> float:
    """Upper end of a two-sided binomial proportion interval.

    ``wald`` is p + z * sqrt(p (1 - p) / n); ``clopper_pearson`` is the exact
    Beta-quantile bound. Both are clipped to [0, 1].
    """
    if trials < 1:
        raise InferenceError("trials must be at least 1")
    if not 0 <= successes <= trials:
        raise InferenceError("successes must lie in [0, trials]")
    if not 0 < confidence < 1:
        raise InferenceError("confidence must lie in (0, 1)")
    alpha = 1.0 - confidence
    p = successes / trials
    if method == "wald":
        z = NormalDist().inv_cdf(1.0 - alpha / 2.0)
        upper = p + z * math.sqrt(p * (1.0 - p) / trials)
    elif method in ("clopper_pearson", "clopperPearson"):
        if successes == trials:
            return 1.0
        upper = beta_ppf(successes + 1, trials - successes, 1.0 - alpha / 2.0)
    else:
        raise InferenceError(f"unknown interval method {method!r}")
    return min(1.0, max(0.0, upper))


# --- Bayesian ---------------------------------------------------------------


@dataclass(frozen=True)
class BetaPosterior:
    alpha: float
    beta: float
    successes: int
    trials: int

    def cdf(self, x: float) -> float:
        return betainc(self.alpha, self.beta, x)


def beta_posterior(successes: int, trials: int) -> BetaPosterior:
    """Posterior of a binomial rate under a flat Beta(1, 1) prior."""
    if trials < 0 or successes < 0:
        raise InferenceError("counts must be non-negative")
    if successes > trials:
        raise InferenceError("successes cannot exceed trials")
    return BetaPosterior(successes + 1, trials - successes + 1, successes, trials)


def posterior_map(post: BetaPosterior) -> float:
    if post.alpha + post.beta <= 2:
        raise InferenceError("flat posterior has no unique mode")
    return (post.alpha - 1) / (post.alpha + post.beta - 2)


def posterior_quantile(post: BetaPosterior, q: float) -> float:
    return beta_ppf(post.alpha, post.beta, q)


@dataclass(frozen=True)
class BayesSummary:
    label: str
    successes: int
    trials: int
    map: float
    upper975: float
    note: str | None = None

    def to_dict(self) -> dict:
        d = {
            "label": self.label,
            "successes": self.successes,
            "trials": self.trials,
            "map": self.map,
            "upper975": self.upper975,
        }
        if self.note:
            d["note"] = self.note
        return d


def bayes_summary(label: str, successes: int, trials: int, note=None) -> BayesSummary:
    post = beta_posterior(successes, trials)
    return BayesSummary(label, successes, trials, posterior_map(post), posterior_quantile(post, 0.975), note)


def solution_one_analysis(counts: ObservedCounts = MDPD_OBSERVED) -> tuple[BayesSummary, BayesSummary]:
    """Separate false-ID rates with and without the true source among the controls."""
    P, A = SourceScenario.PRESENT, SourceScenario.ABSENT
    C = DecisionCategory
    present = counts[P, C.WRONG_FINGER_ID] + counts[P, C.WRONG_PERSON_ID]
    absent = counts[A, C.WRONG_PERSON_ID]
    return (
        bayes_summary("source_present", present, counts.present_total),
        bayes_summary("source_absent", absent, counts.absent_total),
    )


def solution_two_analysis(counts: ObservedCounts = MDPD_OBSERVED) -> tuple[BayesSummary, BayesSummary]:
    """Wrong-finger and wrong-person false IDs, each over all decisions."""
    C = DecisionCategory
    n = counts.total
    wrong_finger = counts.table.category_total(C.WRONG_FINGER_ID)
    wrong_person = counts.table.category_total(C.WRONG_PERSON_ID)
    wf = bayes_summary("wrong_finger", wrong_finger, n)
    if round(wf.map, 3) != PRINTED_WRONG_FINGER_MAP and counts.to_dict() == MDPD_OBSERVED.to_dict():
        wf = BayesSummary(
            wf.label,
            wf.successes,
            wf.trials,
            wf.map,
            wf.upper975,
            note=f"computed MAP {wf.map:.4f} differs from the reported 0.7%",
        )
    return wf, bayes_summary("wrong_person", wrong_person, n)


# --- Fisher exact test ------------------------------------------------------


@dataclass(frozen=True)
class ProportionTest:
    x1: int
    n1: int
    x2: int
    n2: int
    p_value: float
    significant: bool
    method: str = "fisher_exact_two_sided"

    def to_dict(self) -> dict:
        return {
            "x1": self.x1,
            "n1": self.n1,
            "x2": self.x2,
            "n2": self.n2,
            "pValue": self.p_value,
            "significantAt05": self.significant,
            "method": self.method,
        }


def _log_comb(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def fisher_exact_two_sided(a: int, b: int, c: int, d: int) -> float:
    """Two-sided Fisher exact p-value of the 2x2 table [[a, b], [c, d]].

    Sums the hypergeometric probabilities of every table with the observed
    margins that is no more likely than the observed one.
    """
    if min(a, b, c, d) < 0:
        raise InferenceError("table entries must be non-negative")
    row1, col1, n = a + b, a + c, a + b + c + d
    lo, hi = max(0, col1 - (n - row1)), min(row1, col1)
    if lo == hi:
        return 1.0
    log_denom = _log_comb(n, col1)
    logp = [_log_comb(row1, k) + _log_comb(n - row1, col1 - k) - log_denom for k in range(lo, hi + 1)]
    cutoff = logp[a - lo] + math.log1p(1e-7)
    p = math.fsum(math.exp(v) for v in logp if v <= cutoff)
    return min(1.0, p)


def two_proportion_test(x1: int, n1: int, x2: int, n2: int, alpha: float = 0.05) -> ProportionTest:
    for x, n in ((x1, n1), (x2, n2)):
        if n < 1 or not 0 <= x <= n:
            raise InferenceError("need 0 <= x <= n and n >= 1")
    p = fisher_exact_two_sided(x1, n1 - x1, x2, n2 - x2)
    return ProportionTest(x1, n1, x2, n2, p, p < alpha)
