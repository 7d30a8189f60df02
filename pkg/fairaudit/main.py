import argparse
import json
import logging
import re
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

load_dotenv()

from fairaudit import __version__
from fairaudit.config import get_settings
from fairaudit.core.auditor import FairnessAuditor
from fairaudit.core.classifier import accuracy, predict, train
from fairaudit.core.data import generate_synthetic, load_csv, save_csv, split
from fairaudit.core.stats import coverage_simulation
from fairaudit.exceptions import FairAuditError, InvalidParameterError, StorageError
from fairaudit.models.schemas import (
    ALL_METRICS,
    AuditReport,
    CliConfig,
    CsvSchema,
    MetricId,
    SyntheticConfig,
    TrainingConfig,
)
from fairaudit.report.serializer import write_schema
from fairaudit.report.svg import ForestRow, emit_forest_svg, emit_histogram_svg, emit_scatter_svg
from fairaudit.storage.json_storage import JSONStorage, load_manifest, load_model
from fairaudit.utils.csv_processor import CSVProcessor

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_FLAGGED = 3


def configure_logging(level: str) -> None:
    logging.basicConfig(
        format="%(asctime)s [%(levelname)s] %(message)s",
        handlers=[logging.StreamHandler()],
    )
    # basicConfig is a no-op once handlers exist; the level must still follow --log-level
    logging.getLogger().setLevel(getattr(logging, level.upper(), logging.INFO))


def parse_metrics(text: str) -> List[MetricId]:
    """'all' or a comma list of metric ids, in the order given."""
    if text.strip() == "all":
        return list(ALL_METRICS)
    metric_ids = []
    for item in (part.strip() for part in text.split(",")):
        if not item:
            continue
        try:
            metric_ids.append(MetricId(item))
        except ValueError:
            known = ", ".join(m.value for m in ALL_METRICS)
            raise InvalidParameterError(f"Unknown metric '{item}'; known metrics: {known}")
    if not metric_ids:
        raise InvalidParameterError("--metrics selects no metric")
    return list(dict.fromkeys(metric_ids))


def _name_list(text: Optional[str]) -> List[str]:
    if not text:
        return []
    return [part.strip() for part in text.split(",") if part.strip()]


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def _resolve_seed(args: argparse.Namespace):
    settings = get_settings()
    if args.seed is not None:
        return args.seed, "cli"
    return settings.SEED, settings.SEED_SOURCE


def _resolve_alpha(args: argparse.Namespace):
    settings = get_settings()
    if args.alpha is not None:
        return args.alpha, "cli"
    return settings.ALPHA, settings.ALPHA_SOURCE


def _formats(args: argparse.Namespace) -> List[str]:
    return ["json", "markdown"] if args.format == "both" else [args.format]


def _cli_config(command: str, args: argparse.Namespace, seed: int, seed_source: str) -> CliConfig:
    options = {
        key: value for key, value in sorted(vars(args).items())
        if key not in ("handler", "command", "out", "log_level") and value is not None
    }
    return CliConfig(command=command, seed=seed, seed_source=seed_source, options=options)


def _mean_half_width(intervals) -> float:
    return float(np.mean([interval.half_width for interval in intervals]))


def write_figures(report: AuditReport, out_dir: Path, max_forest_plots: int) -> List[Path]:
    """
    Draw the report's figures: one histogram per intra scan and per individual
    scan, a forest plot per inter sweep (capped) and a scatter per quadrant summary.
    """
    written = []
    for result in report.intra:
        if not result.rows:
            continue
        markers = [
            (result.alpha, _mean_half_width(row.interval_uncorrected for row in result.rows)),
            (result.corrected_alpha, _mean_half_width(row.interval_corrected for row in result.rows)),
        ]
        written.append(emit_histogram_svg(
            [row.estimate.point for row in result.rows],
            markers,
            out_dir / f"histogram_{result.metric_id.value}.svg",
            title=f"{result.metric_id.value} difference over {len(result.rows)} attributes",
        ))

    # Individual scans carry point estimates only, so no interval markers
    for scan in report.individual_scans:
        if not scan.estimates:
            continue
        written.append(emit_histogram_svg(
            [estimate.point for estimate in scan.estimates],
            [],
            out_dir / f"histogram_{scan.metric_id.value}.svg",
            title=f"{scan.metric_id.value} group difference over {len(scan.estimates)} attributes",
        ))

    for result in report.inter[:max_forest_plots]:
        rows = [ForestRow(row.metric_id.value, row.estimate.point, row.interval_corrected) for row in result.rows]
        rows += [ForestRow(entry.metric_id.value, None, None, entry.reason) for entry in result.not_estimable]
        if rows:
            written.append(emit_forest_svg(
                rows,
                out_dir / f"forest_{_safe_name(result.attribute)}.svg",
                title=f"Metrics for {result.attribute} (Bonferroni, m={result.tests})",
            ))
    if len(report.inter) > max_forest_plots:
        logger.info(f"Forest plots limited to the first {max_forest_plots} of {len(report.inter)} attributes")

    by_metric = {result.metric_id: result for result in report.intra}
    for shares in report.quadrants:
        y_points = {row.attribute: row.estimate.point for row in by_metric[shares.y_metric].rows}
        pairs = [
            (row.estimate.point, y_points[row.attribute])
            for row in by_metric[shares.x_metric].rows
            if row.attribute in y_points
        ]
        written.append(emit_scatter_svg(
            [x for x, _ in pairs],
            [y for _, y in pairs],
            shares,
            out_dir / f"scatter_{shares.x_metric.value}_{shares.y_metric.value}.svg",
            title=f"{shares.y_metric.value} against {shares.x_metric.value}",
        ))
    return written


def _run_audit(args: argparse.Namespace, dataset, config: CliConfig, seeds: dict, alpha: float, alpha_source: str) -> int:
    settings = get_settings()
    manifest = load_manifest(args.manifest) if getattr(args, "manifest", None) else None
    metric_ids = parse_metrics(args.metrics)
    auditor = FairnessAuditor(
        bootstrap_replicates=args.bootstrap_replicates,
        consistency_k=args.k,
        seed=config.seed,
        max_workers=args.max_workers,
    )
    report = auditor.full_audit(
        dataset,
        dataset.attribute_names,
        metric_ids,
        alpha,
        manifest=manifest,
        correction_scope=args.correction_scope,
        effect_size_threshold=args.effect_size_threshold,
        include_individual=args.include_individual,
        alpha_source=alpha_source,
        parameters={"command": config.command, **config.options},
        seeds=seeds,
    )

    storage = JSONStorage(args.out)
    storage.save_report(report, _formats(args))
    write_figures(report, storage.storage_dir, settings.MAX_FOREST_PLOTS)

    findings = len(report.flags) + len(report.manifest_deviations)
    if args.strict and findings:
        logger.warning(f"Strict mode: {findings} findings")
        return EXIT_FLAGGED
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    """Generate a synthetic dataset and audit it."""
    seed, seed_source = _resolve_seed(args)
    alpha, alpha_source = _resolve_alpha(args)
    config = _cli_config("simulate", args, seed, seed_source)
    synthetic = SyntheticConfig(
        n_participants=args.participants,
        n_attributes=args.attributes,
        base_rate=args.base_rate,
        accuracy_group0=args.accuracy if args.accuracy0 is None else args.accuracy0,
        accuracy_group1=args.accuracy if args.accuracy1 is None else args.accuracy1,
        attribute_probability=args.attribute_probability,
        gaussian_feature=not args.no_feature,
        seed=seed,
    )
    dataset = generate_synthetic(synthetic)
    logger.info(f"Simulated {dataset.n_records} records with {len(dataset.attribute_names)} attributes")
    return _run_audit(args, dataset, config, {"data": seed}, alpha, alpha_source)


def cmd_audit(args: argparse.Namespace) -> int:
    """Audit predictions from a CSV file, or from a model applied to it."""
    seed, seed_source = _resolve_seed(args)
    alpha, alpha_source = _resolve_alpha(args)
    config = _cli_config("audit", args, seed, seed_source)
    model = load_model(args.model) if args.model else None
    features = _name_list(args.features)
    if model is not None and not features:
        features = list(model.feature_names)
    schema = CsvSchema(
        truth_column=args.truth_column,
        prediction_column=args.prediction_column,
        attributes=None if args.attributes == "auto" else _name_list(args.attributes),
        features=features,
        require_prediction=model is None,
    )
    dataset = load_csv(args.csv, schema)
    if model is not None:
        dataset = predict(model, dataset)
    return _run_audit(args, dataset, config, {}, alpha, alpha_source)


def cmd_train(args: argparse.Namespace) -> int:
    """Train a logistic model on a split of a CSV and report test accuracy."""
    seed, _ = _resolve_seed(args)
    frame = CSVProcessor.read_frame(args.csv)
    reserved = {args.truth_column, args.prediction_column}
    explicit = [] if args.features == "auto" else _name_list(args.features)
    attributes = []
    if args.keep_attributes:
        attributes = [
            c for c in frame.columns
            if c not in reserved and c not in explicit and CSVProcessor.is_binary_column(frame, c)
        ]
    # auto features are the columns left after label, prediction and kept attributes
    features = explicit or [c for c in frame.columns if c not in reserved and c not in attributes]
    schema = CsvSchema(
        truth_column=args.truth_column,
        prediction_column=args.prediction_column,
        attributes=attributes,
        features=features,
        require_prediction=False,
    )
    dataset = CSVProcessor.frame_to_dataset(frame, schema)
    train_set, test_set = split(dataset, args.split, seed)
    model = train(train_set, TrainingConfig(
        learning_rate=args.learning_rate, epochs=args.epochs, l2=args.l2, seed=seed,
    ))
    test_accuracy = accuracy(predict(model, test_set))

    storage = JSONStorage(args.out)
    storage.save_model(model)
    if args.keep_attributes:
        save_csv(predict(model, dataset), storage.storage_dir / "predictions.csv")
    print(f"accuracy={test_accuracy:.4f} train={train_set.n_records} test={test_set.n_records}")
    return EXIT_OK


def cmd_coverage(args: argparse.Namespace) -> int:
    """Monte Carlo coverage of the Wald interval."""
    seed, _ = _resolve_seed(args)
    alpha, _ = _resolve_alpha(args)
    n1 = args.n1 if args.n1 is not None else args.n
    n2 = args.n2 if args.n2 is not None else args.n
    if n1 is None or n2 is None:
        raise InvalidParameterError("give --n or both --n1 and --n2")
    result = coverage_simulation(args.p1, args.p2, n1, n2, alpha, trials=args.trials, seed=seed)
    text = json.dumps(result.model_dump(mode="json"), sort_keys=True)
    print(text)
    if args.out:
        JSONStorage(args.out).write_file("coverage.json", text + "\n")
    return EXIT_OK


def cmd_schema(args: argparse.Namespace) -> int:
    """Write the report JSON schema."""
    write_schema(Path(args.out) / "report-schema.json")
    return EXIT_OK


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return value


def _level(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not strictly between 0 and 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    formatter = argparse.ArgumentDefaultsHelpFormatter

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=None,
                        help=f"random seed (falls back to FAIRAUDIT_SEED, currently {settings.SEED})")
    shared.add_argument("--alpha", type=_level, default=None,
                        help=f"family significance level (falls back to FAIRAUDIT_ALPHA, currently {settings.ALPHA})")
    shared.add_argument("--log-level", default=settings.LOG_LEVEL, help="logging level")

    auditing = argparse.ArgumentParser(add_help=False)
    auditing.add_argument("--out", default="fairaudit_out", help="output directory")
    auditing.add_argument("--format", choices=["json", "markdown", "both"], default="both", help="report formats")
    auditing.add_argument("--metrics", default="all", help="'all' or a comma list of metric ids")
    auditing.add_argument("--correction-scope", choices=["intra", "inter", "combined"], default="intra",
                          help="corrected rows used by the effect-size screen")
    auditing.add_argument("--effect-size-threshold", type=float, default=0.0,
                          help="flag significant differences smaller than this")
    auditing.add_argument("--include-individual", action="store_true",
                          help="count theil and consistency in the inter-metric family")
    auditing.add_argument("--manifest", default=None, help="pre-registration manifest JSON")
    auditing.add_argument("--strict", action="store_true", help="exit 3 when any flag fires")
    auditing.add_argument("--bootstrap-replicates", type=_positive_int, default=settings.BOOTSTRAP_REPLICATES,
                          help="bootstrap replicates for theil and consistency")
    auditing.add_argument("--k", type=_positive_int, default=settings.CONSISTENCY_K,
                          help="neighbours for consistency")
    auditing.add_argument("--max-workers", type=_positive_int, default=settings.MAX_WORKERS,
                          help="threads for attribute and metric evaluation")

    columns = argparse.ArgumentParser(add_help=False)
    columns.add_argument("--csv", required=True, help="input CSV file")
    columns.add_argument("--truth-column", default="y_true", help="label column")
    columns.add_argument("--prediction-column", default="y_pred", help="prediction column")

    parser = argparse.ArgumentParser(
        prog="fairaudit",
        description="Fairness audits with multiple-comparison corrected confidence intervals",
        formatter_class=formatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", parents=[shared, auditing], formatter_class=formatter,
                                   help="audit a synthetic label-flip dataset")
    simulate.add_argument("--participants", type=_positive_int, default=100, help="records to generate")
    simulate.add_argument("--attributes", type=_positive_int, default=1000, help="binary attributes to generate")
    simulate.add_argument("--accuracy", type=_probability, default=0.75, help="accuracy of both groups")
    simulate.add_argument("--accuracy0", type=_probability, default=None,
                          help="accuracy of group 0 on the first attribute (overrides --accuracy)")
    simulate.add_argument("--accuracy1", type=_probability, default=None,
                          help="accuracy of group 1 on the first attribute (overrides --accuracy)")
    simulate.add_argument("--base-rate", type=_probability, default=0.5, help="P(y = 1)")
    simulate.add_argument("--attribute-probability", type=_probability, default=0.5, help="P(attribute = 1)")
    simulate.add_argument("--no-feature", action="store_true", help="omit the Gaussian feature x_0")
    simulate.set_defaults(handler=cmd_simulate)

    audit = commands.add_parser("audit", parents=[shared, auditing, columns], formatter_class=formatter,
                                help="audit predictions stored in a CSV")
    audit.add_argument("--attributes", default="auto", help="'auto' or a comma list of attribute columns")
    audit.add_argument("--features", default=None, help="comma list of feature columns")
    audit.add_argument("--model", default=None, help="model JSON used to predict instead of the prediction column")
    audit.set_defaults(handler=cmd_audit)

    train_cmd = commands.add_parser("train", parents=[shared, columns], formatter_class=formatter,
                                    help="train logistic regression and report test accuracy")
    train_cmd.add_argument("--out", default="fairaudit_out", help="output directory for model.json")
    train_cmd.add_argument("--features", default="auto",
                           help="'auto' (every column except label, prediction and kept attributes) or a comma list")
    train_cmd.add_argument("--split", type=_fraction, default=0.9, help="training share of the records")
    train_cmd.add_argument("--learning-rate", type=float, default=0.1, help="gradient-descent step")
    train_cmd.add_argument("--epochs", type=int, default=500, help="gradient-descent epochs")
    train_cmd.add_argument("--l2", type=float, default=1e-4, help="L2 penalty")
    train_cmd.add_argument("--keep-attributes", action="store_true",
                           help="keep binary columns as attributes (not features) and write predictions.csv")
    train_cmd.set_defaults(handler=cmd_train)

    coverage = commands.add_parser("coverage", parents=[shared], formatter_class=formatter,
                                   help="Monte Carlo coverage of the Wald interval")
    coverage.add_argument("--p1", type=_probability, required=True, help="true proportion of group 1")
    coverage.add_argument("--p2", type=_probability, required=True, help="true proportion of group 2")
    coverage.add_argument("--n", type=_positive_int, default=None, help="size of both groups")
    coverage.add_argument("--n1", type=_positive_int, default=None, help="size of group 1 (overrides --n)")
    coverage.add_argument("--n2", type=_positive_int, default=None, help="size of group 2 (overrides --n)")
    coverage.add_argument("--trials", type=int, default=10000, help="simulated sample pairs (at least 1000)")
    coverage.add_argument("--out", default=None, help="optional directory for coverage.json")
    coverage.set_defaults(handler=cmd_coverage)

    schema = commands.add_parser("schema", parents=[shared], formatter_class=formatter,
                                 help="write the report JSON schema")
    schema.add_argument("--out", default="docs", help="output directory")
    schema.set_defaults(handler=cmd_schema)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        parser = build_parser()
    except RuntimeError as e:
        print(f"fairaudit: {str(e)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except (StorageError, OSError) as e:
        logger.error(f"I/O failure: {str(e)}")
        return EXIT_IO
    except (FairAuditError, ValidationError, ValueError) as e:
        logger.error(f"Invalid input: {str(e)}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
