"""Command-line front end.

    latent-fpr simulate --rates mdpd --iterations 1000 --seed 7
    latent-fpr estimate --counts my_counts.json
    latent-fpr bayes
    latent-fpr test-proportions --x1 4 --n1 3177 --x2 3 --n2 1359
    latent-fpr report-all --format json --out report.json

Exit status: 0 on success, 2 on a configuration error, 3 on a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .inference import InferenceError, NumericalError
from .model import (
    MDPD_OBSERVED,
    PRESET_NAMES,
    ModelError,
    ObservedCounts,
    RateVectorPair,
    StudyDesign,
    preset_rate_vectors,
)
from . import report

COMMANDS = ("simulate", "estimate", "bayes", "test-proportions", "report-all")
QUICK_ITERATIONS = 50
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

DEFAULTS = {
    "rates": "observed",
    "iterations": 1000,
    "seed": 0,
    "format": "table",
    "out": None,
    "counts": None,
    "keep_iterations": False,
    "quick": False,
    "workers": None,
    "fixed_partition": False,
    "exact_rates": False,
    "ci_method": "wald",
    "design": None,
    "x1": None,
    "n1": None,
    "x2": None,
    "n2": None,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    rates: RateVectorPair
    rate_preset: str | None = None
    rate_file: str | None = None
    iterations: int = 1000
    seed: int = 0
    output_format: str = "table"
    output_path: str | None = None
    keep_per_iteration: bool = False
    counts: ObservedCounts = MDPD_OBSERVED
    design: StudyDesign = field(default_factory=StudyDesign)
    workers: int | None = None
    repartition: bool = True
    exact_rates: bool = False
    ci_method: str = "wald"
    proportions: tuple | None = None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latent-fpr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with default option values")
        p.add_argument("--counts", help="observed counts JSON (default: built-in study table)")
        p.add_argument("--format", choices=report.FORMATS)
        p.add_argument("--out", help="write output here instead of stdout")
        if name in ("simulate", "report-all"):
            p.add_argument("--iterations", type=int)
            p.add_argument("--seed", type=int)
            p.add_argument("--quick", action="store_true", default=None, help=f"N = {QUICK_ITERATIONS}")
            p.add_argument("--workers", type=int, help="threads used for iterations (output is unchanged)")
            p.add_argument("--fixed-partition", action="store_true", default=None)
            p.add_argument("--exact-rates", action="store_true", default=None, help="use unrounded preset rates")
        if name == "simulate":
            p.add_argument("--rates", help=f"preset ({', '.join(PRESET_NAMES)}) or rate JSON path")
            p.add_argument("--keep-iterations", action="store_true", default=None)
        if name in ("estimate", "report-all"):
            p.add_argument("--ci-method", choices=("wald", "clopper_pearson"))
        if name == "test-proportions":
            for flag in ("--x1", "--n1", "--x2", "--n2"):
                p.add_argument(flag, type=int)
    return parser


def _load_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"{what}: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what}: malformed JSON in {path}: {exc}") from None


def _resolve_rates(value, counts, exact=False):
    if isinstance(value, dict):
        try:
            return RateVectorPair.from_dict(value), None, None
        except ModelError as exc:
            raise ConfigError(f"rates: {exc}") from None
    if value in PRESET_NAMES:
        return preset_rate_vectors(value, counts, exact=exact), value, None
    path = Path(str(value))
    if not path.suffix and not path.exists():
        raise ConfigError(f"rates: unknown preset {value!r}; choose from {', '.join(PRESET_NAMES)}")
    doc = _load_json(path, "rates")
    try:
        return RateVectorPair.from_dict(doc), None, str(path)
    except ModelError as exc:
        raise ConfigError(f"rates: {exc}") from None


def _resolve_counts(value):
    if value is None:
        return MDPD_OBSERVED
    doc = value if isinstance(value, dict) else _load_json(value, "counts")
    try:
        return ObservedCounts.from_dict(doc)
    except ModelError as exc:
        raise ConfigError(f"counts: {exc}") from None


def parse_config(args, file_config: dict | None = None) -> RunConfig:
    """Merge command-line flags over file values over defaults and validate.

    ``file_config`` may also be supplied through ``--config``; an explicit
    argument takes precedence over that file.
    """
    ns = build_parser().parse_args(list(args))
    flags = {k: v for k, v in vars(ns).items() if v is not None and k not in ("command", "config")}
    if file_config is None and ns.config:
        file_config = _load_json(ns.config, "config")
    file_config = dict(file_config or {})
    if not isinstance(file_config, dict):
        raise ConfigError("config: expected a JSON object")
    unknown = set(file_config) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"config: unknown key(s) {', '.join(sorted(unknown))}")
    opts = {**DEFAULTS, **{k.replace("-", "_"): v for k, v in file_config.items()}, **flags}

    counts = _resolve_counts(opts["counts"])
    rates, preset, rate_file = _resolve_rates(opts["rates"], counts, bool(opts["exact_rates"]))

    iterations = QUICK_ITERATIONS if opts["quick"] else opts["iterations"]
    if isinstance(iterations, bool) or not isinstance(iterations, int) or iterations < 1:
        raise ConfigError("iterations: must be a positive integer")
    seed = opts["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed: must be an integer in [0, 2**64)")
    if opts["format"] not in report.FORMATS:
        raise ConfigError(f"format: must be one of {', '.join(report.FORMATS)}")
    if opts["ci_method"] not in ("wald", "clopper_pearson"):
        raise ConfigError("ci_method: must be wald or clopper_pearson")
    workers = opts["workers"]
    if workers is not None and (not isinstance(workers, int) or workers < 1):
        raise ConfigError("workers: must be a positive integer")

    design = StudyDesign()
    if opts["design"] is not None:
        if not isinstance(opts["design"], dict):
            raise ConfigError("design: expected an object of StudyDesign fields")
        try:
            design = design.replace(**opts["design"])
        except (ModelError, TypeError) as exc:
            raise ConfigError(f"design: {exc}") from None

    proportions = None
    if ns.command == "test-proportions":
        given = [opts[k] for k in ("x1", "n1", "x2", "n2")]
        if any(v is not None for v in given):
            if any(v is None for v in given):
                raise ConfigError("x1/n1/x2/n2: give all four or none")
            proportions = tuple(given)

    return RunConfig(
        command=ns.command,
        rates=rates,
        rate_preset=preset,
        rate_file=rate_file,
        iterations=iterations,
        seed=seed,
        output_format=opts["format"],
        output_path=opts["out"],
        keep_per_iteration=bool(opts["keep_iterations"]),
        counts=counts,
        design=design,
        workers=workers,
        repartition=not opts["fixed_partition"],
        exact_rates=bool(opts["exact_rates"]),
        ci_method=opts["ci_method"],
        proportions=proportions,
    )


def _run_simulate(cfg: RunConfig) -> str:
    from .simulator import run_study

    summary = run_study(
        cfg.seed,
        cfg.design,
        cfg.rates,
        cfg.iterations,
        keep_per_iteration=cfg.keep_per_iteration,
        repartition=cfg.repartition,
        workers=cfg.workers,
    )
    fmt = cfg.output_format
    if fmt == "json":
        return report.dumps(report.summary_to_dict(summary, keep_iterations=cfg.keep_per_iteration))
    text = report.emit_summary_table(summary, fmt, cfg.design)
    if fmt == "csv" and cfg.keep_per_iteration:
        per_iter = report.iterations_csv(summary)
        if cfg.output_path:
            Path(cfg.output_path).with_suffix(".iterations.csv").write_text(per_iter)
        else:
            text += "\n" + per_iter
    return text


def _run_estimate(cfg: RunConfig) -> str:
    est = report.estimates_section(cfg.counts, cfg.ci_method)
    if cfg.output_format == "json":
        return report.dumps(est)
    if cfg.output_format == "csv":
        rows = ["variant,numerator,denominator,estimate,ciUpper95,method"]
        rows += [f"{e['variant']},{e['numerator']},{e['denominator']},{e['estimate']!r},{e['ciUpper95']!r},{e['method']}" for e in est]
        return "\n".join(rows) + "\n"
    return report.render_estimates(est)


def _run_bayes(cfg: RunConfig) -> str:
    bayes = report.bayes_section(cfg.counts)
    if cfg.output_format == "json":
        return report.dumps(bayes)
    if cfg.output_format == "csv":
        rows = ["solution,label,successes,trials,map,upper975"]
        for key, items in bayes.items():
            rows += [f"{key},{s['label']},{s['successes']},{s['trials']},{s['map']!r},{s['upper975']!r}" for s in items]
        return "\n".join(rows) + "\n"
    return report.render_bayes(bayes)


def _run_test(cfg: RunConfig) -> str:
    from .inference import two_proportion_test

    if cfg.proportions is None:
        test = report.proportion_test_section(cfg.counts)
    else:
        test = two_proportion_test(*cfg.proportions).to_dict()
    if cfg.output_format == "json":
        return report.dumps(test)
    if cfg.output_format == "csv":
        keys = list(test)
        return ",".join(keys) + "\n" + ",".join(repr(test[k]) if isinstance(test[k], float) else str(test[k]) for k in keys) + "\n"
    return report.render_test(test)


def _run_report_all(cfg: RunConfig) -> str:
    doc = report.report_all(
        cfg.counts,
        cfg.seed,
        cfg.iterations,
        cfg.design,
        workers=cfg.workers,
        repartition=cfg.repartition,
        ci_method=cfg.ci_method,
        exact_rates=cfg.exact_rates,
    )
    if cfg.output_format == "json":
        return report.dumps(doc)
    if cfg.output_format == "csv":
        return report.render_report_csv(doc)
    return report.render_report_table(doc, cfg.design)


RUNNERS = {
    "simulate": _run_simulate,
    "estimate": _run_estimate,
    "bayes": _run_bayes,
    "test-proportions": _run_test,
    "report-all": _run_report_all,
}


def run(cfg: RunConfig) -> str:
    return RUNNERS[cfg.command](cfg)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        text = run(cfg)
    except ConfigError as exc:
        print(f"latent-fpr: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ZeroDivisionError) as exc:
        print(f"latent-fpr: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ModelError, InferenceError) as exc:
        print(f"latent-fpr: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
