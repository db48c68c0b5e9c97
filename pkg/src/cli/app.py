"""Command-line surface: features, generate, train, predict, evaluate, report."""
import argparse
import logging
import os
import sys
from typing import List, Optional, Sequence

from src.config import ConfigurationError, RunConfig
from src.errors import ContractError, DataError, PipelineError
from src.models.evaluation import scenario_from_key
from src.models.feature_vector import FeatureConfig
from src.services import (
    ela_features,
    evaluation,
    model_store,
    performance_generator,
    personalize,
    problem_suite,
    report_service,
    table_io,
    tree_models,
)
from src.services.logger_service import LoggerService
from src.services.parallel_processor import ParallelProcessor


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    """Raised for argparse failures instead of exiting the process."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def create_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one sub-command per pipeline stage."""
    parser = _Parser(prog="elapp", description="Landscape-aware performance regression")
    parser.add_argument("--seed", type=int, help="Run seed (ELAPP_SEED)")
    parser.add_argument("--workers", type=int, help="Threads fitting the grid (ELAPP_FIT_WORKERS)")
    parser.add_argument("--log-path", help="JSON-lines log sink (ELAPP_LOG_PATH)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def suite_args(p):
        p.add_argument("--dim", type=int)
        p.add_argument("--instances", type=int)
        p.add_argument("--functions", type=_int_list)

    p = sub.add_parser("features", help="Compute or import a feature table")
    suite_args(p)
    p.add_argument("--multiplier", type=int)
    p.add_argument("--feature-seed", type=int)
    p.add_argument("--import", dest="import_path", help="Validate and re-export an external table")
    p.add_argument("--design-out", help="Also write the sampled design sets")
    p.add_argument("--out", required=True)

    p = sub.add_parser("generate", help="Generate performance data with a built-in optimizer")
    suite_args(p)
    p.add_argument("--optimizer", default=performance_generator.RANDOM_SEARCH)
    p.add_argument("--algorithm", help="Algorithm id written to the records")
    p.add_argument("--budgets", type=_int_list, default=[250, 500, 1000])
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="Train a personalized model")
    p.add_argument("--features", required=True)
    p.add_argument("--performance", required=True)
    p.add_argument("--algorithm")
    p.add_argument("--budget", type=int)
    p.add_argument("--target", choices=["raw", "log", "natural_log"])
    p.add_argument("--grid", choices=["full", "quick"])
    p.add_argument("--weight-on-validation", action="store_true", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("predict", help="Predict class and performance for feature rows")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--problem", type=int)
    p.add_argument("--instance", type=int)

    p = sub.add_parser("evaluate", help="Cross-validate the five scenarios")
    suite_args(p)
    p.add_argument("--features", help="Feature table (computed from the built-in suite when omitted)")
    p.add_argument("--performance", help="Performance table (generated when omitted)")
    p.add_argument("--optimizer", default=performance_generator.RANDOM_SEARCH)
    p.add_argument("--algorithm")
    p.add_argument("--budget", type=int)
    p.add_argument("--multiplier", type=int)
    p.add_argument("--feature-seed", type=int)
    p.add_argument("--target", choices=["raw", "log", "natural_log"])
    p.add_argument("--grid", choices=["full", "quick"])
    p.add_argument("--fold-workers", type=int)
    p.add_argument("--weight-on-validation", action="store_true", default=None)
    p.add_argument("--no-best-test", action="store_true")
    p.add_argument("--oracle-classifier", action="store_true")
    p.add_argument("--statistic", choices=["median", "mean"], default="median")
    p.add_argument("--out", help="Output directory (ELAPP_OUTPUT_DIR)")

    p = sub.add_parser("report", help="Render a saved report")
    p.add_argument("--report", required=True)
    p.add_argument("--compare", help="SCENARIO_A:SCENARIO_B advantage within the report")
    p.add_argument("--against", help="Second report; advantage per problem for --scenario")
    p.add_argument("--scenario", default="ensemble-class")
    p.add_argument("--statistic", choices=["median", "mean"], default="median")
    p.add_argument("--confusion", action="store_true", help="Also print the confusion matrix")
    return parser


def _config_from_args(args, base: Optional[RunConfig]) -> RunConfig:
    config = base or RunConfig.from_env()
    return config.with_overrides(
        seed=args.seed,
        fit_workers=args.workers,
        log_path=args.log_path,
        dim=getattr(args, "dim", None),
        instances=getattr(args, "instances", None),
        functions=tuple(args.functions) if getattr(args, "functions", None) else None,
        multiplier=getattr(args, "multiplier", None),
        feature_seed=getattr(args, "feature_seed", None),
        algorithm=getattr(args, "algorithm", None),
        budget=getattr(args, "budget", None),
        target=getattr(args, "target", None),
        grid=getattr(args, "grid", None),
        fold_workers=getattr(args, "fold_workers", None),
        weight_on_validation=getattr(args, "weight_on_validation", None),
        output_dir=getattr(args, "out", None) if args.command == "evaluate" else None,
    )


def _grid(config: RunConfig):
    return tree_models.quick_grid() if config.grid == "quick" else tree_models.enumerate_grid()


def _suite(config: RunConfig):
    return problem_suite.build_suite(config.functions, range(1, config.instances + 1), config.dim)


def _processor(config: RunConfig, logger_service, workers: Optional[int] = None) -> ParallelProcessor:
    return ParallelProcessor(workers or config.fit_workers, logger_service)


def _write_text(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_features(args, config: RunConfig, logger_service: LoggerService, out) -> int:
    if args.import_path:
        table = table_io.load_feature_table(args.import_path)
    else:
        cfg = FeatureConfig(budget_multiplier=config.multiplier, seed=config.feature_seed)
        suite = _suite(config)
        table = ela_features.compute_suite_features(suite, cfg, _processor(config, logger_service), logger_service)
        if args.design_out:
            designs = [
                problem_suite.uniform_sample(inst, cfg.budget_multiplier, ela_features.sample_seed(cfg, inst))
                for inst in sorted(suite, key=lambda i: i.key)
            ]
            table_io.save_design_sets(designs, args.design_out)
    table_io.save_feature_table(table, args.out)
    print(f"{len(table)} feature rows x {len(table.names)} features -> {args.out}", file=out)
    return EXIT_OK


def cmd_generate(args, config: RunConfig, logger_service: LoggerService, out) -> int:
    records = performance_generator.generate_performance(
        _suite(config),
        args.optimizer,
        args.budgets,
        config.seed,
        algorithm_id=args.algorithm,
        processor=_processor(config, logger_service),
        logger_service=logger_service,
    )
    table_io.save_performance_table(records, args.out)
    print(f"{len(records)} performance records -> {args.out}", file=out)
    return EXIT_OK


def cmd_train(args, config: RunConfig, logger_service: LoggerService, out) -> int:
    features = table_io.load_feature_table(args.features)
    records = table_io.load_performance_table(args.performance)
    model = personalize.train_personalized(
        features,
        records,
        None,
        _grid(config),
        config.target,
        config.seed,
        algorithm_id=config.algorithm,
        budget=config.budget,
        weight_on_validation=config.weight_on_validation,
        refit_selected=config.refit_selected,
        processor=_processor(config, logger_service),
        logger_service=logger_service,
    )
    model_store.save_model(model, args.out, provenance=config.to_dict())
    print(f"Model with classes {model.classes} -> {args.out}", file=out)
    return EXIT_OK


def cmd_predict(args, config: RunConfig, logger_service: LoggerService, out) -> int:
    model = model_store.load_model(args.model)
    table = table_io.load_feature_table(args.features, expected_names=model.feature_names or None)
    keys = list(table.keys)
    if args.problem is not None:
        keys = [k for k in keys if k[0] == args.problem]
    if args.instance is not None:
        keys = [k for k in keys if k[1] == args.instance]
    if not keys:
        raise DataError("No feature rows match the requested problem/instance")
    X = personalize.feature_rows(table, keys)
    predictions, classes = personalize.predict_batch(model, X)
    print("problem_id,instance_id,predicted_class,prediction", file=out)
    for (pid, iid), cls, y in zip(keys, classes, predictions):
        print(f"{pid},{iid},{int(cls)},{float(y)!r}", file=out)
    logger_service.log("INFO", f"Predicted {len(keys)} rows", operation_type="predict", records_count=len(keys))
    return EXIT_OK


def cmd_evaluate(args, config: RunConfig, logger_service: LoggerService, out) -> int:
    processor = _processor(config, logger_service)
    suite = None
    if args.features:
        features = table_io.load_feature_table(args.features)
    else:
        suite = _suite(config)
        cfg = FeatureConfig(budget_multiplier=config.multiplier, seed=config.feature_seed)
        features = ela_features.compute_suite_features(suite, cfg, processor, logger_service)
    if args.performance:
        records = table_io.load_performance_table(args.performance)
        algorithm = config.algorithm
    else:
        suite = suite or _suite(config)
        algorithm = args.algorithm or performance_generator.normalize_optimizer(args.optimizer)
        records = performance_generator.generate_performance(
            suite, args.optimizer, [config.budget], config.seed,
            algorithm_id=algorithm, processor=processor, logger_service=logger_service,
        )

    fold_processor = (
        ParallelProcessor(config.fold_workers, logger_service, "evaluate") if config.fold_workers > 1 else None
    )
    report, confusion = evaluation.run_evaluation(
        features,
        records,
        _grid(config),
        config.seed,
        target_transform=config.target,
        algorithm_id=algorithm,
        budget=config.budget,
        include_best_test=not args.no_best_test,
        class_predictor=evaluation.oracle_class_predictor if args.oracle_classifier else None,
        weight_on_validation=config.weight_on_validation,
        refit_selected=config.refit_selected,
        processor=processor,
        fold_processor=fold_processor,
        logger_service=logger_service,
        metadata={"multiplier": config.multiplier, "dim": config.dim},
    )

    os.makedirs(config.output_dir, exist_ok=True)
    provenance = config.to_dict()
    provenance["algorithm"] = algorithm
    report_service.save_report(report, os.path.join(config.output_dir, "report.json"), confusion, provenance)
    table = report_service.render_report_table(report, args.statistic)
    matrix = report_service.render_confusion_matrix(confusion)
    _write_text(os.path.join(config.output_dir, "report.txt"), table)
    _write_text(os.path.join(config.output_dir, "confusion.txt"), matrix)
    if not args.features:
        table_io.save_feature_table(features, os.path.join(config.output_dir, "features.csv"))
    if not args.performance:
        table_io.save_performance_table(records, os.path.join(config.output_dir, "performance.csv"))
    print(table, file=out)
    print(matrix, file=out)
    return EXIT_OK


def cmd_report(args, config: RunConfig, logger_service: LoggerService, out) -> int:
    report, confusion = report_service.load_report(args.report)
    if args.compare:
        parts = args.compare.split(":")
        if len(parts) != 2:
            raise ContractError(f"--compare expects SCENARIO_A:SCENARIO_B, got {args.compare!r}")
        a, b = (scenario_from_key(p) for p in parts)
        advantage = report_service.compare_scenarios(report, a, b, args.statistic)
        print(report_service.render_advantage(advantage, a, b), file=out, end="")
    elif args.against:
        other, _ = report_service.load_report(args.against)
        scenario = scenario_from_key(args.scenario)
        advantage = report_service.compare_reports(report, other, scenario, args.statistic)
        print(
            report_service.render_advantage(advantage, f"{scenario} ({args.report})", f"{scenario} ({args.against})"),
            file=out, end="",
        )
    else:
        print(report_service.render_report_table(report, args.statistic), file=out, end="")
        wrong = evaluation.misclassifications(report)
        if wrong:
            print("\n".join(report_service.misclassification_lines(wrong)), file=out)
    if args.confusion and confusion is not None:
        print(report_service.render_confusion_matrix(confusion), file=out, end="")
    return EXIT_OK


COMMANDS = {
    "features": cmd_features,
    "generate": cmd_generate,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def run(
    argv: Optional[Sequence[str]] = None,
    config: Optional[RunConfig] = None,
    logger_service: Optional[LoggerService] = None,
    out=None,
) -> int:
    """Parse arguments, run one command and map failures to exit codes.

    Returns:
        0 success, 1 usage or contract, 2 data, 3 internal
    """
    out = out or sys.stdout
    try:
        args = create_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("elapp: a command is required: " + ", ".join(COMMANDS))
        config = _config_from_args(args, config)
    except (UsageError, ConfigurationError) as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE

    logger_service = logger_service or LoggerService(sink_path=config.log_path)
    try:
        return COMMANDS[args.command](args, config, logger_service, out)
    except ConfigurationError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as e:
        logger_service.log_error(f"{type(e).__name__}: {e}", e, operation_type=args.command)
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger_service.log_error(f"I/O failure: {e}", e, operation_type=args.command)
        print(f"I/O failure: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:
        logger_service.log_error(f"Unexpected failure: {e}", e, operation_type=args.command)
        print(f"Unexpected failure: {e}", file=sys.stderr)
        return EXIT_INTERNAL
