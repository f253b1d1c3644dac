"""
Report rendering: plain-text tables, CSV rows and JSON documents built
from the same content so every output format says the same thing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
import io as _io
import json
from typing import Any, Iterable, Mapping, Sequence

from app.model import CompositeSolution, EstimateTable, QualityVector
from app.morph import ActionEffect, ImprovementAction, Subsystem
from app.netbn import SpanningTreeResult, TwoLevelDesign
from app.predict import BottleneckTrajectory, ReferenceMismatch
from app.screening import LayerRanking, OutrankParams, ParetoChart
from app.utils import natural_sorted

CHART_HEADER = ("component", "value", "selected")


@dataclass
class Report:
    title: str
    lines: list[str] = field(default_factory=list)
    payload: dict = field(default_factory=dict)
    csv_header: tuple[str, ...] = ()
    csv_rows: list[tuple] = field(default_factory=list)

    def render(self, fmt: str) -> str:
        if fmt == "json-report":
            return json.dumps({"title": self.title, **self.payload}, indent=2, ensure_ascii=False) + "\n"
        if fmt == "csv":
            return to_csv(self.csv_header, self.csv_rows)
        underline = "=" * len(self.title)
        return "\n".join([self.title, underline, *self.lines]) + "\n"


def fmt_number(value: float) -> str:
    return f"{value:g}"


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = _io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_number(v) if isinstance(v, float) else v for v in row])
    return buffer.getvalue()


def _ids(ids: Iterable[str]) -> list[str]:
    return natural_sorted(ids)


def _quality(q: QualityVector) -> dict:
    return {"w": q.w, "eta": list(q.eta), "text": str(q)}


# ----------------------------------------------------------------------------
# Screening
# ----------------------------------------------------------------------------

def chart_rows(chart: ParetoChart) -> list[tuple]:
    return [(c, v, "true" if c in chart.selected else "false") for c, v in chart.entries]


def chart_csv(chart: ParetoChart) -> str:
    """Bars in descending order, enough to redraw the chart."""
    return to_csv(CHART_HEADER, chart_rows(chart))


def chart_report(chart: ParetoChart, table: EstimateTable) -> Report:
    report = Report(f"Pareto chart on {chart.criterion} (threshold {fmt_number(chart.threshold)})")
    shares = chart.cumulative_share
    report.lines.append(f"{'#':>3}  {'component':<10} {'value':>10} {'cum.%':>7}  sel  label")
    for rank, ((component, value), share) in enumerate(zip(chart.entries, shares), start=1):
        mark = "*" if component in chart.selected else ""
        report.lines.append(f"{rank:>3}  {component:<10} {fmt_number(value):>10} {share * 100:>6.1f}%  "
                            f"{mark:^3}  {table.label(component)}")
    selected = _ids(chart.selected)
    report.lines.append("")
    report.lines.append(f"Selected ({len(selected)}): {', '.join(selected) if selected else '-'}")
    report.payload = {
        "criterion": chart.criterion,
        "threshold": chart.threshold,
        "bars": [{"component": c, "value": v, "selected": c in chart.selected, "cumulative_share": s}
                 for (c, v), s in zip(chart.entries, shares)],
        "selected": selected,
    }
    report.csv_header = CHART_HEADER
    report.csv_rows = chart_rows(chart)
    return report


def efficient_report(efficient: set[str], criteria: Sequence[str], table: EstimateTable) -> Report:
    ids = _ids(efficient)
    report = Report(f"Pareto-efficient components on {', '.join(criteria)}")
    for component in ids:
        row = ", ".join(f"{c}={fmt_number(table.value(component, c))}" for c in criteria)
        report.lines.append(f"  {component:<10} {row}")
    report.lines.append("")
    report.lines.append(f"{len(ids)} of {len(table.components)} components are efficient")
    report.payload = {"criteria": list(criteria), "efficient": ids}
    report.csv_header = ("component", "efficient")
    report.csv_rows = [(c, "true" if c in efficient else "false") for c in table.components]
    return report


def layers_report(ranking: LayerRanking, params: OutrankParams,
                  agreement: Sequence[float] | None = None) -> Report:
    report = Report("Multicriteria layering")
    strict = "strict" if params.strict_concordance else "weak"
    report.lines.append(f"p = {fmt_number(params.concordance_threshold)}, "
                        f"q = {fmt_number(params.discordance_threshold)}, {strict} concordance")
    if params.directions:
        overrides = ", ".join(f"{c} {d}" for c, d in sorted(params.directions.items()))
        report.lines.append(f"direction overrides: {overrides}")
    notes = []
    if params.discordance_threshold >= 1.0:
        # normalized discordance never exceeds 1
        notes.append("discordance is inactive at q >= 1: edges follow concordance only")
    report.lines.extend(f"note: {note}" for note in notes)
    for index, layer in enumerate(ranking.layers, start=1):
        tag = " (bottlenecks)" if index == 1 else ""
        report.lines.append(f"Layer {index}{tag}: {', '.join(layer)}")
    if agreement:
        report.lines.append("")
        report.lines.append("Agreement with reference layers (Jaccard):")
        for index, score in enumerate(agreement, start=1):
            report.lines.append(f"  layer {index}: {score:.3f}")
    report.payload = {
        "params": params.to_dict(),
        "layers": [list(layer) for layer in ranking.layers],
        "agreement": list(agreement) if agreement else [],
        "notes": notes,
    }
    report.csv_header = ("component", "layer")
    report.csv_rows = [(c, i) for i, layer in enumerate(ranking.layers, start=1) for c in layer]
    return report


def calibration_report(found: Sequence[OutrankParams], target: Iterable[str]) -> Report:
    report = Report(f"Calibration for layer 1 = {{{', '.join(_ids(target))}}}")
    if not found:
        report.lines.append("No parameter set on the grid reproduces the target layer.")
    for params in found:
        overrides = ", ".join(f"{c} {d}" for c, d in sorted(params.directions.items())) or "as declared"
        report.lines.append(f"  p={fmt_number(params.concordance_threshold):<5} "
                            f"q={fmt_number(params.discordance_threshold):<5} "
                            f"{'strict' if params.strict_concordance else 'weak':<6} {overrides}")
    report.payload = {"target": _ids(target), "admissible": [p.to_dict() for p in found]}
    report.csv_header = ("p", "q", "strict", "directions")
    report.csv_rows = [(p.concordance_threshold, p.discordance_threshold, str(p.strict_concordance).lower(),
                        ";".join(f"{c}:{d}" for c, d in sorted(p.directions.items())))
                       for p in found]
    return report


# ----------------------------------------------------------------------------
# Morphological design
# ----------------------------------------------------------------------------

def _solution_line(name: str, solution: CompositeSolution, note: str = "") -> str:
    picks = " * ".join(solution.picks)
    return f"  {name:<6} {picks:<24} N = {solution.quality}{('  ' + note) if note else ''}"


def solutions_report(efficient: Sequence[CompositeSolution],
                     named: Mapping[str, CompositeSolution]) -> Report:
    report = Report("Pareto-efficient composite solutions")
    labels = {s.label for s in efficient}
    for index, solution in enumerate(efficient, start=1):
        report.lines.append(_solution_line(f"P{index}", solution))
    if named:
        report.lines.append("")
        report.lines.append("Named solutions:")
        for name, solution in named.items():
            note = "efficient" if solution.label in labels else "dominated"
            report.lines.append(_solution_line(name, solution, note))
    report.payload = {
        "efficient": [{"picks": list(s.picks), "quality": _quality(s.quality)} for s in efficient],
        "named": {name: {"picks": list(s.picks), "quality": _quality(s.quality),
                         "efficient": s.label in labels} for name, s in named.items()},
    }
    report.csv_header = ("solution", "w", "eta", "efficient")
    report.csv_rows = [(" ".join(s.picks), s.quality.w, " ".join(map(str, s.quality.eta)), "true")
                       for s in efficient]
    report.csv_rows += [(" ".join(s.picks), s.quality.w, " ".join(map(str, s.quality.eta)),
                         "true" if s.label in labels else "false") for s in named.values()]
    return report


def evaluate_report(solution: CompositeSolution) -> Report:
    report = Report(f"Composite solution {' * '.join(solution.picks)}")
    report.lines.append(f"N = {solution.quality}")
    report.payload = {"picks": list(solution.picks), "quality": _quality(solution.quality)}
    report.csv_header = ("solution", "w", "eta")
    report.csv_rows = [(" ".join(solution.picks), solution.quality.w, " ".join(map(str, solution.quality.eta)))]
    return report


def actions_report(solution: CompositeSolution, actions: Sequence[ImprovementAction],
                   effects: Sequence[ActionEffect] | None = None) -> Report:
    report = Report(f"Improvement actions for {' * '.join(solution.picks)} {solution.quality}")
    paired = list(effects) if effects else [None] * len(actions)
    for index, (action, effect) in enumerate(zip(actions, paired), start=1):
        line = f"{index:>3}. {action.kind:<11} {action.label:<12} {action.from_level} => {action.to_level}"
        if effect is not None:
            line += f"   N -> {effect.after}{'  (improves)' if effect.improves else ''}"
        report.lines.append(line)
    if not actions:
        report.lines.append("No bottlenecks: every pick is at priority 1 and every pair at full compatibility.")
    report.payload = {
        "solution": list(solution.picks),
        "quality": _quality(solution.quality),
        "actions": [{"kind": a.kind, "target": list(a.target), "from": a.from_level, "to": a.to_level}
                    for a in actions],
        "effects": [{"target": list(e.action.target), "after": _quality(e.after), "w_gain": e.w_gain,
                     "improves": e.improves} for e in effects or ()],
    }
    report.csv_header = ("kind", "target", "from", "to")
    report.csv_rows = [(a.kind, " ".join(a.target), a.from_level, a.to_level) for a in actions]
    return report


def bottlenecks_report(solution: CompositeSolution, subsystems: Sequence[Subsystem],
                       maximal: Sequence[Subsystem]) -> Report:
    report = Report(f"Composite bottlenecks of {' * '.join(solution.picks)}")
    chosen = {s.label for s in maximal}
    for subsystem in subsystems:
        mark = "  <- bottleneck" if subsystem.label in chosen else ""
        report.lines.append(f"  {' * '.join(subsystem.picks):<20} N = {subsystem.quality}{mark}")
    report.payload = {
        "solution": list(solution.picks),
        "subsystems": [{"picks": list(s.picks), "quality": _quality(s.quality),
                        "bottleneck": s.label in chosen} for s in subsystems],
        "bottlenecks": [list(s.picks) for s in maximal],
    }
    report.csv_header = ("subsystem", "w", "eta", "bottleneck")
    report.csv_rows = [(" ".join(s.picks), s.quality.w, " ".join(map(str, s.quality.eta)),
                        "true" if s.label in chosen else "false") for s in subsystems]
    return report


def _table_lines(table: EstimateTable, marked: set[str]) -> list[str]:
    header = "  ".join(f"{c:>16}" for c in table.criterion_ids)
    lines = [f"  {'element':<12}{header}"]
    for component, row in zip(table.components, table.values):
        cells = "  ".join(f"{fmt_number(v):>16}" for v in row)
        mark = "  *" if component in marked else ""
        lines.append(f"  {component:<12}{cells}{mark}")
    return lines


def _table_payload(table: EstimateTable) -> dict:
    return {
        "criteria": list(table.criterion_ids),
        "rows": [{"element": c, "values": list(r)} for c, r in zip(table.components, table.values)],
    }


def deficit_report(scheme: str, table: EstimateTable, weakest: set[str]) -> Report:
    report = Report(f"{scheme.upper()} deficit screening")
    report.lines = _table_lines(table, weakest)
    report.lines.append("")
    report.lines.append(f"Weakest elements (Pareto-efficient deficits): {', '.join(_ids(weakest))}")
    report.payload = {"scheme": scheme, **_table_payload(table), "weakest": _ids(weakest)}
    report.csv_header = ("element", *table.criterion_ids)
    report.csv_rows = [(c, *r) for c, r in zip(table.components, table.values)]
    return report


# ----------------------------------------------------------------------------
# Networks
# ----------------------------------------------------------------------------

def _mode(exact: bool) -> str:
    return "exact" if exact else "heuristic"


def tree_report(result: SpanningTreeResult, exact: bool) -> Report:
    report = Report(f"Maximum leaf spanning tree ({_mode(exact)})")
    report.lines.append(f"root: {result.root}")
    report.lines.append(f"leaves ({result.leaf_count}): {', '.join(_ids(result.leaves))}")
    report.lines.append(f"internal / bottlenecks ({len(result.internal)}): {', '.join(_ids(result.internal)) or '-'}")
    report.lines.append("tree edges: " + ", ".join(f"{u}-{v}" for u, v in result.edges))
    report.payload = {
        "mode": _mode(exact),
        "root": result.root,
        "leaves": _ids(result.leaves),
        "internal": _ids(result.internal),
        "edges": [list(e) for e in result.edges],
        "tree_degree": {n: result.tree_degree[n] for n in _ids(result.tree_degree)},
    }
    report.csv_header = ("node", "tree_degree", "internal")
    report.csv_rows = [(n, result.tree_degree[n], "true" if n in result.internal else "false")
                       for n in _ids(result.tree_degree)]
    return report


def cds_report(nodes: Iterable[str], exact: bool) -> Report:
    ids = _ids(nodes)
    report = Report(f"Connected dominating set ({_mode(exact)})")
    report.lines.append(f"size {len(ids)}: {', '.join(ids)}")
    report.payload = {"mode": _mode(exact), "nodes": ids}
    report.csv_header = ("node",)
    report.csv_rows = [(n,) for n in ids]
    return report


def design_report(design: TwoLevelDesign, exact: bool) -> Report:
    report = Report(f"Two-level network design ({_mode(exact)})")
    report.lines.append(f"primary path: {' - '.join(design.primary_path)}  (cost {fmt_number(design.primary_cost)})")
    report.lines.append("secondary edges: " + (", ".join(f"{u}-{v}" for u, v in design.secondary_edges) or "-")
                        + f"  (cost {fmt_number(design.secondary_cost)})")
    report.lines.append(f"total cost: {fmt_number(design.total_cost)}")
    report.payload = {
        "mode": _mode(exact),
        "primary_path": list(design.primary_path),
        "primary_edges": [list(e) for e in design.primary_edges],
        "secondary_edges": [list(e) for e in design.secondary_edges],
        "primary_cost": design.primary_cost,
        "secondary_cost": design.secondary_cost,
        "total_cost": design.total_cost,
    }
    report.csv_header = ("u", "v", "level")
    report.csv_rows = ([(u, v, "primary") for u, v in design.primary_edges]
                       + [(u, v, "secondary") for u, v in design.secondary_edges])
    return report


def nodes_report(table: EstimateTable) -> Report:
    report = Report("Structural node estimates")
    report.lines = _table_lines(table, set())
    report.payload = _table_payload(table)
    report.csv_header = ("node", *table.criterion_ids)
    report.csv_rows = [(c, *r) for c, r in zip(table.components, table.values)]
    return report


# ----------------------------------------------------------------------------
# Prediction
# ----------------------------------------------------------------------------

def describe(result: Any) -> tuple[str, Any]:
    """Short text and JSON-friendly form of any detector result."""
    if isinstance(result, ParetoChart):
        ids = _ids(result.selected)
        return "{" + ", ".join(ids) + "}", ids
    if isinstance(result, LayerRanking):
        layers = [list(layer) for layer in result.layers]
        return " | ".join(", ".join(layer) for layer in layers), layers
    if isinstance(result, (set, frozenset)):
        ids = _ids(result)
        return "{" + ", ".join(ids) + "}", ids
    if isinstance(result, list) and all(isinstance(r, (CompositeSolution, Subsystem)) for r in result):
        items = [{"picks": list(r.picks), "quality": _quality(r.quality)} for r in result]
        return ", ".join(f"{''.join(r.picks)}{r.quality}" for r in result) or "-", items
    if isinstance(result, list) and all(isinstance(r, ImprovementAction) for r in result):
        items = [str(a) for a in result]
        return "; ".join(items) or "-", items
    return str(result), str(result)


def trajectory_report(trajectory: BottleneckTrajectory, method: str,
                      mismatches: Sequence[ReferenceMismatch] = ()) -> Report:
    report = Report(f"Bottleneck trajectory ({trajectory.detector}, forecast: {method})")
    entries = []
    for entry in trajectory.entries:
        text, data = describe(entry.result)
        tag = "forecast" if entry.forecast else "observed"
        report.lines.append(f"  t={entry.timestamp:<3} {tag:<9} {text}")
        entries.append({"timestamp": entry.timestamp, "forecast": entry.forecast, "result": data})
    if mismatches:
        report.lines.append("")
        report.lines.append("Flagged: published values that disagree with recomputation")
        for mismatch in mismatches:
            report.lines.append(f"  {mismatch}")
    report.payload = {
        "detector": trajectory.detector,
        "method": method,
        "entries": entries,
        "flagged": [{"timestamp": m.timestamp, "subsystem": m.subsystem,
                     "published": _quality(m.published),
                     "computed": _quality(m.computed) if m.computed is not None else None}
                    for m in mismatches],
    }
    report.csv_header = ("timestamp", "forecast", "result")
    report.csv_rows = [(e.timestamp, "true" if e.forecast else "false", describe(e.result)[0])
                       for e in trajectory.entries]
    return report
