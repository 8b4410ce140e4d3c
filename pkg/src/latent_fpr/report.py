"""Serialisation and text rendering of simulation summaries and estimator reports."""

from __future__ import annotations

import csv
import io
import json

from .inference import (
    FPR_VARIANTS,
    fpr_estimate,
    solution_one_analysis,
    solution_two_analysis,
    two_proportion_test,
)
from .model import (
    MDPD_OBSERVED,
    PRESET_NAMES,
    DecisionCategory,
    ObservedCounts,
    SourceScenario,
    StudyDesign,
    preset_rate_vectors,
)
from .simulator import COLUMNS, ROWS, CellSummary, SimulationSummary, run_study

FORMATS = ("table", "json", "csv")

ROW_LABELS = {
    "decisions": "# of Decisions",
    "correct_id": "Correct IDs",
    "wrong_finger_id": "Erroneous IDs: correct person, wrong finger",
    "wrong_person_id": "Erroneous IDs: incorrect person",
    "erroneous_id": "Erroneous IDs: all",
    "inconclusive": "Inconclusive examinations",
    "correct_exclusion": "Correct Exclusions",
    "erroneous_exclusion": "Erroneous Exclusions",
}
TABLE_ROWS = (
    "decisions",
    "correct_id",
    "wrong_finger_id",
    "wrong_person_id",
    "inconclusive",
    "correct_exclusion",
    "erroneous_exclusion",
)
COLUMN_LABELS = {"present": "Source present", "absent": "Source not present", "total": "Totals"}


def summary_to_dict(summary: SimulationSummary, keep_iterations: bool = False) -> dict:
    cells = {}
    for row in ROWS:
        cells[row] = {}
        for col in COLUMNS:
            c = summary[row, col]
            cells[row][col] = None if c is None else {"mean": c.mean, "lower": c.lower, "upper": c.upper}
    doc = {"label": summary.label, "iterations": summary.iterations, "seed": summary.seed, "cells": cells}
    if keep_iterations and summary.per_iteration is not None:
        doc["perIteration"] = [
            {
                "counts": t.counts.tolist(),
                "decisionsReturned": list(t.decisions_returned or ()),
                "valuedDecisions": list(t.valued_decisions or ()),
            }
            for t in summary.per_iteration
        ]
    return doc


def summary_from_dict(doc: dict) -> SimulationSummary:
    cells = {
        row: {col: None if v is None else CellSummary(float(v["mean"]), int(v["lower"]), int(v["upper"])) for col, v in cols.items()}
        for row, cols in doc["cells"].items()
    }
    return SimulationSummary(cells, int(doc["iterations"]), label=doc.get("label", ""), seed=doc.get("seed"))


def _fmt_cell(cell: CellSummary | None) -> str:
    if cell is None:
        return "N/A"
    return f"{cell.mean:.2f} [{cell.lower}, {cell.upper}]"


def render_table(summary: SimulationSummary, design: StudyDesign = StudyDesign()) -> str:
    """Fixed-width table in the usual decision-table row layout."""
    head = f"{summary.label} (N={summary.iterations}, seed={summary.seed})"
    rows = [["", *(COLUMN_LABELS[c] for c in COLUMNS)]]
    rows.append(
        ["# of Latent Prints", str(design.source_present_prints), str(design.source_absent_prints), str(design.total_prints)]
    )
    for row in TABLE_ROWS:
        rows.append([ROW_LABELS[row], *(_fmt_cell(summary[row, col]) for col in COLUMNS)])
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = [head]
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def render_csv(summary: SimulationSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "column", "mean", "lower", "upper"])
    for row in ROWS:
        for col in COLUMNS:
            c = summary[row, col]
            w.writerow([row, col, "", "", ""] if c is None else [row, col, repr(c.mean), c.lower, c.upper])
    return buf.getvalue()


def iterations_csv(summary: SimulationSummary) -> str:
    """One line per (iteration, scenario) with the six category counts and phase totals."""
    counts = summary.iteration_counts()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "scenario", *(c.key for c in DecisionCategory), "phase1_valued", "phase2_valued"])
    for i, (table, c) in enumerate(zip(summary.per_iteration, counts)):
        valued = list(table.valued_decisions or ("", ""))
        for s in SourceScenario:
            w.writerow([i, s.key, *c[s].tolist(), *valued])
    return buf.getvalue()


def dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def emit_summary_table(summary: SimulationSummary, fmt: str = "table", design: StudyDesign = StudyDesign()) -> str:
    if fmt == "table":
        return render_table(summary, design)
    if fmt == "json":
        return dumps(summary_to_dict(summary, keep_iterations=True))
    if fmt == "csv":
        return render_csv(summary)
    raise ValueError(f"unknown output format {fmt!r}")


# --- estimator sections -----------------------------------------------------


def estimates_section(counts: ObservedCounts, ci_method: str = "wald") -> list[dict]:
    return [fpr_estimate(v, counts, ci_method).to_dict() for v in FPR_VARIANTS]


def bayes_section(counts: ObservedCounts) -> dict:
    return {
        "solutionOne": [s.to_dict() for s in solution_one_analysis(counts)],
        "solutionTwo": [s.to_dict() for s in solution_two_analysis(counts)],
    }


def proportion_test_section(counts: ObservedCounts) -> dict:
    P, A = SourceScenario.PRESENT, SourceScenario.ABSENT
    wp = DecisionCategory.WRONG_PERSON_ID
    return two_proportion_test(counts[P, wp], counts.present_total, counts[A, wp], counts.absent_total).to_dict()


def report_all(
    counts: ObservedCounts = MDPD_OBSERVED,
    seed: int = 0,
    n_iterations: int = 1000,
    design: StudyDesign = StudyDesign(),
    workers: int | None = None,
    repartition: bool = True,
    ci_method: str = "wald",
    exact_rates: bool = False,
) -> dict:
    """Every simulation experiment and every estimator as one JSON-ready document."""
    sims = []
    for name in PRESET_NAMES:
        rates = preset_rate_vectors(name, counts, exact=exact_rates)
        summary = run_study(seed, design, rates, n_iterations, repartition=repartition, workers=workers)
        sims.append({"preset": name, "rates": rates.to_dict(), "summary": summary_to_dict(summary)})
    return {
        "seed": seed,
        "iterations": n_iterations,
        "simulations": sims,
        "estimates": estimates_section(counts, ci_method),
        "bayes": bayes_section(counts),
        "proportionTest": proportion_test_section(counts),
    }


def _pct(x: float) -> str:
    return f"{100 * x:.2f}%"


def render_estimates(estimates: list[dict]) -> str:
    lines = ["False positive rate estimates"]
    for e in estimates:
        lines.append(
            f"  {e['variant']:<12} {e['numerator']}/{e['denominator']} = {_pct(e['estimate'])}"
            f"  (95% upper bound {_pct(e['ciUpper95'])}, {e['method']})"
        )
    return "\n".join(lines) + "\n"


def render_bayes(bayes: dict) -> str:
    lines = []
    for key, title in (("solutionOne", "Bayesian rates by source presence"), ("solutionTwo", "Bayesian rates by error type")):
        lines.append(title)
        for s in bayes[key]:
            line = (
                f"  {s['label']:<15} {s['successes']}/{s['trials']}  MAP {_pct(s['map'])}"
                f"  97.5% quantile {_pct(s['upper975'])}"
            )
            if s.get("note"):
                line += f"  [{s['note']}]"
            lines.append(line)
    return "\n".join(lines) + "\n"


def render_test(test: dict) -> str:
    verdict = "significant" if test["significantAt05"] else "not significant"
    return (
        "Fisher exact test of equal wrong-person rates\n"
        f"  {test['x1']}/{test['n1']} vs {test['x2']}/{test['n2']}: p = {test['pValue']:.6g} ({verdict} at 0.05)\n"
    )


def render_report_table(report: dict, design: StudyDesign = StudyDesign()) -> str:
    parts = []
    for sim in report["simulations"]:
        parts.append(render_table(summary_from_dict(sim["summary"]), design))
    parts.append(render_estimates(report["estimates"]))
    parts.append(render_bayes(report["bayes"]))
    parts.append(render_test(report["proportionTest"]))
    return "\n".join(parts)


def render_report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "key", "column", "mean", "lower", "upper"])
    for sim in report["simulations"]:
        summary = summary_from_dict(sim["summary"])
        for row in ROWS:
            for col in COLUMNS:
                c = summary[row, col]
                vals = ["", "", ""] if c is None else [repr(c.mean), c.lower, c.upper]
                w.writerow([f"simulation:{sim['preset']}", row, col, *vals])
    for e in report["estimates"]:
        w.writerow([f"estimate:{e['variant']}", "estimate", "", repr(e["estimate"]), "", repr(e["ciUpper95"])])
    for key in ("solutionOne", "solutionTwo"):
        for s in report["bayes"][key]:
            w.writerow([f"bayes:{key}", s["label"], "", repr(s["map"]), "", repr(s["upper975"])])
    t = report["proportionTest"]
    w.writerow(["proportionTest", "pValue", "", repr(t["pValue"]), "", ""])
    return buf.getvalue()
