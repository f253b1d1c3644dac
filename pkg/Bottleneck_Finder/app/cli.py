"""
Command line front end.

    bottleneck-finder screen chart supercharger.json --criterion C1 --threshold 6.8
    bottleneck-finder morph solve four_component.json
    bottleneck-finder net mlst graph.json --exact
    bottleneck-finder predict run s2_evolution.json --method user-supplied --forecast-file s2_forecast.json

Exit status: 0 success, 1 input error, 2 infeasible (budget or exact limit).
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field, replace
import logging
from pathlib import Path
import sys
from typing import Any, Callable, Sequence

from app import morph, netbn, predict, report, screening
from app.config import OUTPUT_FORMATS, DetectorConfig
from app.errors import BottleneckError, InfeasibleError, InputError
from app.io import Document, load_document
from app.logger import ROOT_LOGGER_NAME, ListHandler, setup_logger
from app.model import CompositeSolution, EstimateTable, Graph, MorphSystem
from app.utils import filename_with_suffix, get_system_info
from app.version import __version__, log_version_info

logger = logging.getLogger("BottleneckFinder.cli")


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1), not argparse's exit 2."""

    def error(self, message: str):
        raise InputError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    """One fully parsed invocation."""

    command: tuple[str, str]
    inputs: list[str]
    params: dict[str, Any] = field(default_factory=dict)
    settings: DetectorConfig = field(default_factory=DetectorConfig)
    output: str | None = None
    chart: str | None = None
    log_file: str | None = None
    verbose: bool = False

    @property
    def output_format(self) -> str:
        return self.settings.output_format


# ----------------------------------------------------------------------------
# Argument parsing
# ----------------------------------------------------------------------------

def _csv_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("global options")
    group.add_argument("--exact-limit", type=int, help="node limit for every exact graph oracle")
    group.add_argument("--budget", type=int, help="maximum number of compositions to enumerate")
    group.add_argument("--seed", type=int, help="reserved and currently ignored: every detector is deterministic")
    group.add_argument("--workers", type=int, help="threads for per-snapshot detection")
    group.add_argument("--format", dest="output_format", choices=OUTPUT_FORMATS, help="report format")
    group.add_argument("--output", help="write the report to a file instead of stdout")
    group.add_argument("--config", help="JSON file with detector settings")
    group.add_argument("--log-file", help="save the run log to this file")
    group.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return common


def _add_picks(parser: argparse.ArgumentParser) -> None:
    choice = parser.add_mutually_exclusive_group()
    choice.add_argument("--picks", type=_csv_list, help="comma separated DA ids, one per slot")
    choice.add_argument("--solution", help="name of a solution listed in the input file")


def _add_outrank(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--criteria", type=_csv_list, help="comma separated criterion ids (default: all)")
    parser.add_argument("--calibration", help="calibration JSON (default: bundled calibration)")
    parser.add_argument("--p", type=float, help="concordance threshold")
    parser.add_argument("--q", type=float, help="discordance threshold")
    parser.add_argument("--strict", action=argparse.BooleanOptionalAction, default=None,
                        help="strict concordance (ties carry no weight)")
    parser.add_argument("--descending", type=_csv_list, help="criteria where lower values are more critical")
    parser.add_argument("--max-layers", type=int, help="merge layers beyond this count")


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _ArgumentParser(prog="bottleneck-finder", description="Detect bottlenecks in modular systems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_ArgumentParser)

    def leaf(sub, name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, parents=[common])
        p.add_argument("input", help="input JSON document")
        return p

    screen = groups.add_parser("screen", help="screen components of an estimate table").add_subparsers(
        dest="action", required=True, parser_class=_ArgumentParser)
    p = leaf(screen, "chart", "Pareto chart by one criterion")
    p.add_argument("--criterion", required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--chart", help="write the sorted bars as CSV")
    p = leaf(screen, "pareto", "Pareto-efficient components")
    p.add_argument("--criteria", type=_csv_list)
    p = leaf(screen, "rank", "multicriteria layering")
    _add_outrank(p)
    p = leaf(screen, "calibrate", "grid search for outranking thresholds")
    p.add_argument("--target", type=_csv_list, required=True, help="expected first layer")
    p.add_argument("--criteria", type=_csv_list)
    p.add_argument("--max-layers", type=int)

    morph_cmds = groups.add_parser("morph", help="morphological design analysis").add_subparsers(
        dest="action", required=True, parser_class=_ArgumentParser)
    leaf(morph_cmds, "solve", "Pareto-efficient composite solutions")
    _add_picks(leaf(morph_cmds, "evaluate", "quality of one composition"))
    p = leaf(morph_cmds, "actions", "improvement actions for one composition")
    _add_picks(p)
    p.add_argument("--effects", action="store_true", help="show the quality after each action")
    p = leaf(morph_cmds, "bottlenecks", "composite bottlenecks of one composition")
    _add_picks(p)
    p.add_argument("--size", type=int, help="subsystem size (default: slot count - 1)")
    p = leaf(morph_cmds, "screen", "deficit screening of DAs and interconnections")
    _add_picks(p)
    p.add_argument("--scheme", choices=("da", "ic", "joint"), default="joint")

    net = groups.add_parser("net", help="network-structural bottlenecks").add_subparsers(
        dest="action", required=True, parser_class=_ArgumentParser)
    for name, text in (("mlst", "maximum leaf spanning tree"), ("cds", "connected dominating set"),
                       ("htnd", "two-level network design")):
        leaf(net, name, text).add_argument("--exact", action="store_true", help="use the exhaustive oracle")
    leaf(net, "nodes", "structural estimates of every node")

    pred = groups.add_parser("predict", help="forecast-driven detection").add_subparsers(
        dest="action", required=True, parser_class=_ArgumentParser)
    p = leaf(pred, "run", "bottleneck trajectory over a snapshot series")
    p.add_argument("--method", choices=predict.METHODS, default=predict.HOLD_LAST)
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--forecast-file", help="user-supplied forecast state(s)")
    p.add_argument("--detector", choices=sorted(predict.DETECTORS), default="composite_bottlenecks")
    p.add_argument("--size", type=int)
    p.add_argument("--picks", type=_csv_list)
    p.add_argument("--criterion")
    p.add_argument("--threshold", type=float)
    _add_outrank(p)
    return parser


_GLOBAL_KEYS = {"group", "action", "input", "exact_limit", "budget", "seed", "workers", "output_format",
                "output", "config", "log_file", "verbose", "chart"}


def build_run_config(argv: Sequence[str] | None = None) -> RunConfig:
    """Parse the command line and merge it with the configuration file."""
    args = build_parser().parse_args(argv)
    try:
        settings = DetectorConfig.load(args.config)
        limit = args.exact_limit
        settings.override(
            enumeration_budget=args.budget,
            mlst_exact_limit=limit, cds_exact_limit=limit, htnd_exact_limit=limit,
            output_format=args.output_format, workers=args.workers, seed=args.seed,
        )
    except (OSError, ValueError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"configuration: {e}") from e

    params = {k: v for k, v in vars(args).items() if k not in _GLOBAL_KEYS}
    return RunConfig(
        command=(args.group, args.action),
        inputs=[args.input],
        params=params,
        settings=settings,
        output=args.output,
        chart=getattr(args, "chart", None),
        log_file=args.log_file,
        verbose=args.verbose,
    )


# ----------------------------------------------------------------------------
# Command handlers
# ----------------------------------------------------------------------------

def _expect(document: Document, kind: type, name: str):
    if not isinstance(document.value, kind):
        raise InputError(f"{document.path}: expected a {name} document, got {document.kind}")
    return document.value


def _picks(document: Document, params: dict) -> list[str]:
    if params.get("picks"):
        return params["picks"]
    name = params.get("solution")
    if name is None:
        raise InputError("give --picks or --solution")
    if name not in document.solutions:
        raise InputError(f"unknown solution {name!r}; input lists {sorted(document.solutions)}")
    return list(document.solutions[name])


def _solution(document: Document, params: dict) -> CompositeSolution:
    return morph.compose(_expect(document, MorphSystem, "morph-system"), _picks(document, params))


def _outrank_params(config: RunConfig) -> tuple[screening.OutrankParams, list[list[str]]]:
    """Calibration file first, then explicit flags on top."""
    p = config.params
    path = p.get("calibration") or config.settings.calibration_file
    explicit_thresholds = p.get("p") is not None and p.get("q") is not None
    if explicit_thresholds and not p.get("calibration"):
        params, reference = screening.OutrankParams(), []
    else:
        params, reference = screening.load_calibration(path), screening.load_reference_layers(path)

    updates: dict[str, Any] = {}
    if p.get("p") is not None:
        updates["concordance_threshold"] = p["p"]
    if p.get("q") is not None:
        updates["discordance_threshold"] = p["q"]
    if p.get("strict") is not None:
        updates["strict_concordance"] = p["strict"]
    if p.get("descending"):
        updates["directions"] = {**params.directions, **{c: "descending" for c in p["descending"]}}
    if p.get("max_layers") is not None:
        updates["max_layers"] = p["max_layers"]
    return replace(params, **updates), reference


def _screen_chart(config: RunConfig, document: Document) -> report.Report:
    table = _expect(document, EstimateTable, "estimate-table")
    chart = screening.pareto_chart(table, config.params["criterion"], config.params["threshold"])
    if config.chart:
        path = Path(filename_with_suffix(config.chart, "csv"))
        _write_text(path, report.chart_csv(chart))
        logger.info(f"Chart data written to {path}")
    return report.chart_report(chart, table)


def _screen_pareto(config: RunConfig, document: Document) -> report.Report:
    table = _expect(document, EstimateTable, "estimate-table")
    criteria = config.params.get("criteria") or list(table.criterion_ids)
    return report.efficient_report(screening.pareto_efficient(table, criteria), criteria, table)


def _screen_rank(config: RunConfig, document: Document) -> report.Report:
    table = _expect(document, EstimateTable, "estimate-table")
    params, reference = _outrank_params(config)
    ranking = screening.electre_layers(table, config.params.get("criteria"), params)
    known = set(table.components)
    agreement = None
    if reference and all(c in known for layer in reference for c in layer):
        agreement = screening.layer_agreement(ranking, reference)
    return report.layers_report(ranking, params, agreement)


def _screen_calibrate(config: RunConfig, document: Document) -> report.Report:
    table = _expect(document, EstimateTable, "estimate-table")
    target = config.params["target"]
    found = screening.calibrate_outranking(table, config.params.get("criteria"), target,
                                           max_layers=config.params.get("max_layers"))
    return report.calibration_report(found, target)


def _morph_solve(config: RunConfig, document: Document) -> report.Report:
    system = _expect(document, MorphSystem, "morph-system")
    efficient = morph.pareto_solutions(system, config.settings.enumeration_budget)
    named = {name: morph.compose(system, picks) for name, picks in document.solutions.items()}
    return report.solutions_report(efficient, named)


def _morph_evaluate(config: RunConfig, document: Document) -> report.Report:
    return report.evaluate_report(_solution(document, config.params))


def _morph_actions(config: RunConfig, document: Document) -> report.Report:
    solution = _solution(document, config.params)
    actions = morph.improvement_actions(solution)
    effects = morph.action_effects(solution, actions) if config.params.get("effects") else None
    return report.actions_report(solution, actions, effects)


def _morph_bottlenecks(config: RunConfig, document: Document) -> report.Report:
    solution = _solution(document, config.params)
    size = config.params.get("size") or len(solution.picks) - 1
    subsystems = morph.all_subsystem_qualities(solution, size)
    return report.bottlenecks_report(solution, subsystems, morph.composite_bottlenecks(solution, size))


def _morph_screen(config: RunConfig, document: Document) -> report.Report:
    solution = _solution(document, config.params)
    scheme = config.params.get("scheme", "joint")
    build = {"da": morph.da_estimates, "ic": morph.ic_estimates, "joint": morph.joint_estimates}[scheme]
    table = build(solution)
    weakest = screening.pareto_efficient(table, ["priority_deficit", "compat_deficit"]) if table.components else set()
    return report.deficit_report(scheme, table, weakest)


def _net(kind: str) -> Callable[[RunConfig, Document], report.Report]:
    def handler(config: RunConfig, document: Document) -> report.Report:
        graph = _expect(document, Graph, "graph")
        exact = bool(config.params.get("exact"))
        s = config.settings
        if kind == "mlst":
            result = netbn.mlst_exact(graph, s.mlst_exact_limit) if exact else netbn.mlst_heuristic(graph)
            return report.tree_report(result, exact)
        if kind == "cds":
            nodes = netbn.cds_exact(graph, s.cds_exact_limit) if exact else netbn.cds_heuristic(graph)
            return report.cds_report(nodes, exact)
        design = netbn.htnd_exact(graph, s.htnd_exact_limit) if exact else netbn.htnd_heuristic(graph)
        return report.design_report(design, exact)
    return handler


def _net_nodes(config: RunConfig, document: Document) -> report.Report:
    return report.nodes_report(netbn.node_estimates(_expect(document, Graph, "graph")))


def _predict_run(config: RunConfig, document: Document) -> report.Report:
    series = _expect(document, predict.SnapshotSeries, "snapshot-series")
    p = config.params
    method = p["method"]

    supplied: tuple = ()
    if method == predict.USER_SUPPLIED:
        if not p.get("forecast_file"):
            raise InputError("--method user-supplied needs --forecast-file")
        forecast_doc = load_document(p["forecast_file"])
        value = forecast_doc.value
        supplied = value.states if isinstance(value, predict.SnapshotSeries) else (value,)
    forecaster = predict.Forecaster(method, p.get("horizon") or 1, supplied)

    picks = tuple(p.get("picks") or series.picks)
    detector_params: dict[str, Any] = {"picks": picks, "size": p.get("size"), "criterion": p.get("criterion"),
                                       "threshold": p.get("threshold"), "criteria": p.get("criteria"),
                                       "budget": config.settings.enumeration_budget}
    if p["detector"] == "composite_bottlenecks" and detector_params["size"] is None and picks:
        detector_params["size"] = len(picks) - 1
    if p["detector"] == "electre_layers":
        detector_params["outrank"] = _outrank_params(config)[0]

    spec = predict.DetectorSpec(p["detector"], detector_params)
    trajectory = predict.predictive_bottlenecks(series, forecaster, spec, config.settings.workers)

    mismatches = []
    if p["detector"] == "composite_bottlenecks" and series.references:
        mismatches = predict.compare_references(trajectory, series.references, picks, detector_params["size"])
    return report.trajectory_report(trajectory, method, mismatches)


HANDLERS: dict[tuple[str, str], Callable[[RunConfig, Document], report.Report]] = {
    ("screen", "chart"): _screen_chart,
    ("screen", "pareto"): _screen_pareto,
    ("screen", "rank"): _screen_rank,
    ("screen", "calibrate"): _screen_calibrate,
    ("morph", "solve"): _morph_solve,
    ("morph", "evaluate"): _morph_evaluate,
    ("morph", "actions"): _morph_actions,
    ("morph", "bottlenecks"): _morph_bottlenecks,
    ("morph", "screen"): _morph_screen,
    ("net", "mlst"): _net("mlst"),
    ("net", "cds"): _net("cds"),
    ("net", "htnd"): _net("htnd"),
    ("net", "nodes"): _net_nodes,
    ("predict", "run"): _predict_run,
}


# ----------------------------------------------------------------------------
# Entry points
# ----------------------------------------------------------------------------

def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot write {path}: {e.strerror or e}") from e


def _configure_logging(verbose: bool) -> ListHandler:
    _, handler = setup_logger(ROOT_LOGGER_NAME, logging.DEBUG if verbose else logging.INFO)

    # errors reach stderr once, through run()
    def echo_warnings(record: logging.LogRecord) -> None:
        if record.levelno == logging.WARNING:
            print(handler.format(record), file=sys.stderr)

    handler.add_callback(echo_warnings)
    return handler


def _run_info(config: RunConfig, status: int) -> dict[str, Any]:
    params = ", ".join(f"{key}={value}" for key, value in sorted(config.params.items())) or "(defaults)"
    return {
        "Command": " ".join(config.command),
        "Inputs": ", ".join(config.inputs),
        "Parameters": params,
        "Settings": config.settings.to_dict(),
        "Exit status": status,
    }


def run(config: RunConfig) -> int:
    """Dispatch one command and write its report.

    Returns:
        Exit status: 0 success, 1 input error, 2 infeasible
    """
    handler = _configure_logging(config.verbose)
    log_version_info()
    logger.debug(f"System info: {get_system_info()}")
    logger.debug(f"Command {' '.join(config.command)} on {config.inputs} with {config.params}")

    status = 0
    try:
        document = load_document(config.inputs[0])
        result = HANDLERS[config.command](config, document)
        text = result.render(config.output_format)
        if config.output:
            _write_text(Path(config.output), text)
            logger.info(f"Report written to {config.output}")
        else:
            sys.stdout.write(text)
    except InfeasibleError as e:
        logger.error(f"Infeasible: {e}", exc_info=config.verbose)
        print(f"error: {e}", file=sys.stderr)
        status = e.exit_code
    except BottleneckError as e:
        logger.error(f"Input error: {e}", exc_info=config.verbose)
        print(f"error: {e}", file=sys.stderr)
        status = e.exit_code
    finally:
        if config.log_file:
            handler.save(Path(config.log_file), __version__, _run_info(config, status))
    return status


def main(argv: Sequence[str] | None = None) -> int:
    try:
        config = build_run_config(argv)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
