"""Domain types for the latent print error-rate study and its rate vectors.

Rates are held as :class:`fractions.Fraction` so that preset rows and their
complements are exact; they are turned into floats only when handed to the
sampler or written out.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np


class ModelError(ValueError):
    """Invalid rate vector, count table or study design."""


class InvalidRateError(ModelError):
    pass


class StructuralZeroError(ModelError):
    pass


class DecisionCategory(enum.IntEnum):
    """The six possible conclusions for a print deemed of value."""

    CORRECT_ID = 0
    WRONG_FINGER_ID = 1
    WRONG_PERSON_ID = 2
    INCONCLUSIVE = 3
    CORRECT_EXCLUSION = 4
    ERRONEOUS_EXCLUSION = 5

    @property
    def key(self) -> str:
        return self.name.lower()

    @classmethod
    def from_key(cls, key: str) -> "DecisionCategory":
        try:
            return cls[key.upper()]
        except KeyError:
            raise ModelError(f"unknown decision category {key!r}") from None


class SourceScenario(enum.IntEnum):
    PRESENT = 0
    ABSENT = 1

    @property
    def key(self) -> str:
        return self.name.lower()


N_CATEGORIES = len(DecisionCategory)

# cells that cannot occur by design of the study
FORBIDDEN = {
    SourceScenario.PRESENT: frozenset({DecisionCategory.CORRECT_EXCLUSION}),
    SourceScenario.ABSENT: frozenset(
        {
            DecisionCategory.CORRECT_ID,
            DecisionCategory.WRONG_FINGER_ID,
            DecisionCategory.ERRONEOUS_EXCLUSION,
        }
    ),
}


def is_structural_zero(scenario: SourceScenario, category: DecisionCategory) -> bool:
    return category in FORBIDDEN[SourceScenario(scenario)]


def structural_mask() -> np.ndarray:
    """Boolean (scenario, category) array, True where the cell is forbidden."""
    mask = np.zeros((len(SourceScenario), N_CATEGORIES), dtype=bool)
    for scenario, cats in FORBIDDEN.items():
        for c in cats:
            mask[scenario, c] = True
    return mask


SUM_TOLERANCE = 1e-9


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (float, np.floating)):
        # shortest repr keeps decimal literals such as 0.774 exact
        return Fraction(repr(float(value)))
    return Fraction(value)


def _check_rate_vector(name: str, scenario: SourceScenario, values: Sequence[Fraction]) -> None:
    if len(values) != N_CATEGORIES:
        raise InvalidRateError(f"{name}: expected {N_CATEGORIES} entries, got {len(values)}")
    for cat, v in zip(DecisionCategory, values):
        if v < 0 or v > 1:
            raise InvalidRateError(f"{name}: {cat.key} rate {float(v)} outside [0, 1]")
        if v != 0 and is_structural_zero(scenario, cat):
            raise StructuralZeroError(f"{name}: {cat.key} must be 0 when the source is {scenario.key}")
    total = sum(values, Fraction(0))
    if abs(float(total) - 1.0) > SUM_TOLERANCE:
        raise InvalidRateError(f"{name}: rates sum to {float(total):.12g}, not 1")


@dataclass(frozen=True)
class RateVectorPair:
    """Per-category decision probabilities with and without the true source.

    ``rsp`` and ``rsa`` are indexed by :class:`DecisionCategory`.
    """

    rsp: tuple[Fraction, ...]
    rsa: tuple[Fraction, ...]
    label: str = "custom"
    provenance: str = "custom"

    def __post_init__(self):
        rsp = tuple(_as_fraction(v) for v in self.rsp)
        rsa = tuple(_as_fraction(v) for v in self.rsa)
        _check_rate_vector("rSP", SourceScenario.PRESENT, rsp)
        _check_rate_vector("rSA", SourceScenario.ABSENT, rsa)
        object.__setattr__(self, "rsp", rsp)
        object.__setattr__(self, "rsa", rsa)

    def vector(self, scenario: SourceScenario) -> tuple[Fraction, ...]:
        return self.rsp if scenario == SourceScenario.PRESENT else self.rsa

    def as_array(self) -> np.ndarray:
        """(2, 6) float array, rows ordered as :class:`SourceScenario`."""
        return np.array([[float(v) for v in self.rsp], [float(v) for v in self.rsa]])

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "rSP": {c.key: float(self.rsp[c]) for c in DecisionCategory},
            "rSA": {c.key: float(self.rsa[c]) for c in DecisionCategory},
            "provenance": self.provenance,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "RateVectorPair":
        vectors = []
        for name in ("rSP", "rSA"):
            if name not in doc:
                raise InvalidRateError(f"{name}: missing")
            raw = doc[name]
            if not isinstance(raw, Mapping):
                raise InvalidRateError(f"{name}: expected an object of category rates")
            values = [Fraction(0)] * N_CATEGORIES
            for key, v in raw.items():
                try:
                    cat = DecisionCategory.from_key(key)
                except ModelError:
                    raise InvalidRateError(f"{name}: unknown category {key!r}") from None
                if v is None:
                    continue
                if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                    raise InvalidRateError(f"{name}: {key} is not a number")
                values[cat] = _as_fraction(v)
            vectors.append(tuple(values))
        return cls(
            vectors[0],
            vectors[1],
            label=str(doc.get("label", "custom")),
            provenance=str(doc.get("provenance", "custom")),
        )

    @classmethod
    def from_json(cls, text: str) -> "RateVectorPair":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidRateError(f"malformed rate JSON: {exc}") from None
        return cls.from_dict(doc)


@dataclass(frozen=True)
class StudyDesign:
    """Packet layout and attrition probabilities of phases 1 and 2."""

    total_prints: int = 80
    source_present_prints: int = 56
    phase1_packets: int = 109
    phase1_prints_per_packet: int = 40
    phase2_packets_per_group: int = 44
    phase2_prints_per_packet: int = 20
    phase1_return_prob: Fraction = Fraction(4233, 4360)
    phase1_value_prob: Fraction = Fraction(3210, 4233)
    phase2_return_prob: Fraction = Fraction(1730, 1760)
    phase2_value_prob: Fraction = Fraction(1342, 1730)

    def __post_init__(self):
        counts = (
            "total_prints",
            "source_present_prints",
            "phase1_packets",
            "phase1_prints_per_packet",
            "phase2_packets_per_group",
            "phase2_prints_per_packet",
        )
        for name in counts:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ModelError(f"{name} must be a non-negative integer")
        for name in ("phase1_return_prob", "phase1_value_prob", "phase2_return_prob", "phase2_value_prob"):
            v = _as_fraction(getattr(self, name))
            if not 0 <= v <= 1:
                raise ModelError(f"{name} must lie in [0, 1]")
            object.__setattr__(self, name, v)
        if self.source_present_prints > self.total_prints:
            raise ModelError("source_present_prints exceeds total_prints")
        if self.phase1_prints_per_packet > self.total_prints:
            raise ModelError("phase1_prints_per_packet exceeds total_prints")
        if 2 * self.phase2_prints_per_packet > self.total_prints - self.phase1_prints_per_packet:
            raise ModelError("phase 2 groups do not fit in the prints left after phase 1")

    @property
    def prints(self) -> np.ndarray:
        """Print ids 1..total_prints; ids up to ``source_present_prints`` have their source present."""
        return np.arange(1, self.total_prints + 1)

    def is_source_present(self, print_id) -> bool | np.ndarray:
        return np.asarray(print_id) <= self.source_present_prints

    @property
    def source_absent_prints(self) -> int:
        return self.total_prints - self.source_present_prints

    def replace(self, **changes) -> "StudyDesign":
        fields_ = {f: getattr(self, f) for f in self.__dataclass_fields__}
        unknown = set(changes) - set(fields_)
        if unknown:
            raise ModelError(f"unknown design field(s): {', '.join(sorted(unknown))}")
        fields_.update(changes)
        return StudyDesign(**fields_)


@dataclass(frozen=True)
class DecisionCountTable:
    """Decision counts per (scenario, category), with optional per-phase totals.

    ``decisions_returned`` and ``valued_decisions`` hold one entry per phase
    when the table comes from the simulator; observed tables may omit them.
    """

    counts: np.ndarray
    decisions_returned: tuple[int, ...] | None = None
    valued_decisions: tuple[int, ...] | None = None

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.shape != (len(SourceScenario), N_CATEGORIES):
            raise ModelError(f"count table must have shape (2, 6), got {counts.shape}")
        if (counts < 0).any():
            raise ModelError("counts must be non-negative")
        if counts[structural_mask()].any():
            raise StructuralZeroError("count table has a nonzero structurally impossible cell")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        for name in ("decisions_returned", "valued_decisions"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(int(x) for x in v))
        if self.valued_decisions is not None and sum(self.valued_decisions) != int(counts.sum()):
            raise ModelError("cell counts do not add up to the valued decisions")
        if self.decisions_returned is not None and self.valued_decisions is not None:
            if any(v > r for v, r in zip(self.valued_decisions, self.decisions_returned)):
                raise ModelError("more valued than returned decisions")

    def __getitem__(self, key) -> int:
        scenario, category = key
        return int(self.counts[scenario, category])

    def __add__(self, other: "DecisionCountTable") -> "DecisionCountTable":
        def cat(a, b):
            if a is None or b is None:
                return None
            return a + b

        return DecisionCountTable(
            self.counts + other.counts,
            cat(self.decisions_returned, other.decisions_returned),
            cat(self.valued_decisions, other.valued_decisions),
        )

    def scenario_totals(self) -> tuple[int, int]:
        s = self.counts.sum(axis=1)
        return int(s[0]), int(s[1])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def category_total(self, category: DecisionCategory) -> int:
        return int(self.counts[:, category].sum())


@dataclass(frozen=True)
class ObservedCounts:
    """An observed decision table with its per-scenario decision totals."""

    table: DecisionCountTable
    decision_totals: tuple[int, int]
    phase_totals: Mapping[str, Mapping[str, int]] = field(default_factory=dict)

    def __post_init__(self):
        if tuple(self.decision_totals) != self.table.scenario_totals():
            raise ModelError(
                f"row sums {self.table.scenario_totals()} do not match decision totals {tuple(self.decision_totals)}"
            )

    def __getitem__(self, key) -> int:
        return self.table[key]

    @property
    def present_total(self) -> int:
        return self.decision_totals[SourceScenario.PRESENT]

    @property
    def absent_total(self) -> int:
        return self.decision_totals[SourceScenario.ABSENT]

    @property
    def total(self) -> int:
        return sum(self.decision_totals)

    @classmethod
    def from_cells(cls, present: Mapping, absent: Mapping, phase_totals=None) -> "ObservedCounts":
        counts = np.zeros((2, N_CATEGORIES), dtype=np.int64)
        for scenario, cells in ((SourceScenario.PRESENT, present), (SourceScenario.ABSENT, absent)):
            for key, v in cells.items():
                cat = key if isinstance(key, DecisionCategory) else DecisionCategory.from_key(key)
                if v is None:
                    continue
                if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                    raise ModelError(f"{scenario.key}.{cat.key} must be an integer count")
                counts[scenario, cat] = v
        table = DecisionCountTable(counts)
        return cls(table, table.scenario_totals(), dict(phase_totals or {}))

    def to_dict(self) -> dict:
        doc = {
            "scenarios": {
                s.key: {c.key: self.table[s, c] for c in DecisionCategory if not is_structural_zero(s, c)}
                for s in SourceScenario
            }
        }
        if self.phase_totals:
            doc["phaseTotals"] = {k: dict(v) for k, v in self.phase_totals.items()}
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ObservedCounts":
        try:
            scenarios = doc["scenarios"]
            present, absent = scenarios["present"], scenarios["absent"]
        except (KeyError, TypeError):
            raise ModelError("counts JSON needs scenarios.present and scenarios.absent") from None
        return cls.from_cells(present, absent, doc.get("phaseTotals"))


MDPD_OBSERVED = ObservedCounts.from_cells(
    present={
        "correct_id": 2457,
        "wrong_finger_id": 35,
        "wrong_person_id": 4,
        "inconclusive": 446,
        "erroneous_exclusion": 235,
    },
    absent={"wrong_person_id": 3, "inconclusive": 403, "correct_exclusion": 953},
    phase_totals={
        "phase1": {"returned": 4233, "valued": 3210},
        "phase2": {"returned": 1730, "valued": 1342},
    },
)

# false negative rate reported by the study authors, used by every single-FPR row
MDPD_FNR = Fraction(75, 1000)

# The printed table lists 0.667 for this row although 1 - (0.030 + 0.300) = 0.670.
# Kept for regression notes only; the presets use the computed complement.
PRINTED_MDPD_TNR = Fraction(667, 1000)


def _round(value: Fraction, digits: int | None) -> Fraction:
    if digits is None:
        return value
    return round(value, digits)


def build_rate_vector_pair(
    counts: ObservedCounts = MDPD_OBSERVED,
    mode: str = "per_scenario",
    fpr_override=None,
    fnr=None,
    rounding: int | None = 3,
    inconclusive_rounding: int | None = None,
    exact: bool = False,
    label: str = "custom",
    provenance: str = "custom",
) -> RateVectorPair:
    """Build SP/SA rate vectors from observed counts.

    Non-complement rates (errors, inconclusives) are rounded first; the
    correct-ID and correct-exclusion rates are then one minus the rest of
    their vector.

    Parameters
    ----------
    mode : ``"per_scenario"`` uses each scenario's own inconclusive rate,
        ``"common"`` the pooled rate of both scenarios.
    fpr_override : if given, the whole false-positive mass goes to
        wrong-person identifications in both scenarios and wrong-finger is 0.
    fnr : erroneous exclusion rate; defaults to the observed frequency.
    rounding : decimal places for non-complement entries (None: no rounding).
    inconclusive_rounding : decimal places for the inconclusive rates. By
        default per-scenario rates are kept to 2 places (0.14 / 0.30, as in
        the reference rate rows) and the pooled rate to ``rounding`` places.
    exact : skip all rounding; complements then equal the raw frequencies.
    """
    if mode not in ("per_scenario", "common"):
        raise ModelError(f"unknown inconclusive mode {mode!r}")
    P, A = SourceScenario.PRESENT, SourceScenario.ABSENT
    C = DecisionCategory
    n_p, n_a = counts.present_total, counts.absent_total
    if n_p == 0 or n_a == 0:
        raise ModelError("both scenarios need at least one decision")

    if exact:
        rounding = inconclusive_rounding = None
    elif inconclusive_rounding is None:
        inconclusive_rounding = 2 if mode == "per_scenario" else rounding

    if mode == "per_scenario":
        inc_p = _round(Fraction(counts[P, C.INCONCLUSIVE], n_p), inconclusive_rounding)
        inc_a = _round(Fraction(counts[A, C.INCONCLUSIVE], n_a), inconclusive_rounding)
    else:
        pooled = Fraction(counts.table.category_total(C.INCONCLUSIVE), n_p + n_a)
        inc_p = inc_a = _round(pooled, inconclusive_rounding)

    if fnr is None:
        fnr = Fraction(counts[P, C.ERRONEOUS_EXCLUSION], n_p)
    fnr = _round(_as_fraction(fnr), rounding)
    if not 0 <= fnr <= 1:
        raise InvalidRateError("fnr must lie in [0, 1]")

    if fpr_override is None:
        wf_p = _round(Fraction(counts[P, C.WRONG_FINGER_ID], n_p), rounding)
        wp_p = _round(Fraction(counts[P, C.WRONG_PERSON_ID], n_p), rounding)
        wp_a = _round(Fraction(counts[A, C.WRONG_PERSON_ID], n_a), rounding)
    else:
        fpr = _round(_as_fraction(fpr_override), rounding)
        if not 0 <= fpr <= 1:
            raise InvalidRateError("fpr_override must lie in [0, 1]")
        wf_p, wp_p, wp_a = Fraction(0), fpr, fpr

    tpr = 1 - (wf_p + wp_p + inc_p + fnr)
    tnr = 1 - (wp_a + inc_a)
    if tpr < 0:
        raise InvalidRateError(f"source-present rates exceed 1 (correct_id complement {float(tpr):.6g})")
    if tnr < 0:
        raise InvalidRateError(f"source-absent rates exceed 1 (correct_exclusion complement {float(tnr):.6g})")

    rsp = [Fraction(0)] * N_CATEGORIES
    rsa = [Fraction(0)] * N_CATEGORIES
    rsp[C.CORRECT_ID] = tpr
    rsp[C.WRONG_FINGER_ID] = wf_p
    rsp[C.WRONG_PERSON_ID] = wp_p
    rsp[C.INCONCLUSIVE] = inc_p
    rsp[C.ERRONEOUS_EXCLUSION] = fnr
    rsa[C.WRONG_PERSON_ID] = wp_a
    rsa[C.INCONCLUSIVE] = inc_a
    rsa[C.CORRECT_EXCLUSION] = tnr
    return RateVectorPair(tuple(rsp), tuple(rsa), label=label, provenance=provenance)


PRESET_NAMES = ("observed", "mdpd", "mdpdCommon", "osac", "osacCommon", "alt", "altCommon")

PRESET_LABELS = {
    "observed": "Observed frequencies",
    "mdpd": "Miami-Dade",
    "mdpdCommon": "Miami-Dade (common inc.)",
    "osac": "OSAC FRS",
    "osacCommon": "OSAC FRS (common inc.)",
    "alt": "OSAC FRS alternative",
    "altCommon": "OSAC FRS alternative (common inc.)",
}

# which ratio estimator supplies the single FPR of each proposal
_PRESET_FPR_VARIANT = {"mdpd": "mdpd", "osac": "osac", "alt": "alternative"}


def preset_rate_vectors(name: str, counts: ObservedCounts = MDPD_OBSERVED, exact: bool = False) -> RateVectorPair:
    """One of the seven rate rows used in the simulation experiments.

    By default the rows are the printed 3-decimal rates. ``exact=True`` keeps
    the underlying ratios unrounded (42/4536 rather than 0.009, 403/1359
    rather than 0.300, ...); the FNR stays at the reported 0.075.

    >>> r = preset_rate_vectors("alt")
    >>> float(r.rsp[DecisionCategory.CORRECT_ID]), float(r.rsa[DecisionCategory.CORRECT_EXCLUSION])
    (0.776, 0.691)
    """
    if name not in PRESET_NAMES:
        raise KeyError(f"unknown rate preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    label = PRESET_LABELS[name] + (" [unrounded]" if exact else "")
    if name == "observed":
        return build_rate_vector_pair(counts, exact=exact, label=label, provenance=name)
    from .inference import fpr_estimate

    base = name.removesuffix("Common")
    mode = "common" if name.endswith("Common") else "per_scenario"
    fpr = Fraction(*fpr_estimate(_PRESET_FPR_VARIANT[base], counts).ratio)
    if not exact:
        fpr = round(fpr, 3)
    return build_rate_vector_pair(
        counts, mode=mode, fpr_override=fpr, fnr=MDPD_FNR, exact=exact, label=label, provenance=name
    )
