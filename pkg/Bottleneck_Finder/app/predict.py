"""
Predictive bottleneck detection.

A snapshot series records the same system skeleton at abstract time
points. The series is extended by a forecaster and any registered
detector is run on every snapshot and on the forecast points, giving a
bottleneck trajectory.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from app import morph, screening
from app.errors import InputError
from app.model import (
    EstimateTable,
    MorphSystem,
    QualityVector,
    ValidationReport,
    Violation,
    validate_estimates,
    validate_system,
)
from app.utils import clamp, round_half_away

logger = logging.getLogger("BottleneckFinder.predict")

MORPH_KIND = "morph-system"
TABLE_KIND = "estimate-table"

HOLD_LAST = "hold-last"
LINEAR_TREND = "linear-trend"
USER_SUPPLIED = "user-supplied"
METHODS = (HOLD_LAST, LINEAR_TREND, USER_SUPPLIED)

State = MorphSystem | EstimateTable


def state_kind(state: State) -> str:
    if isinstance(state, MorphSystem):
        return MORPH_KIND
    if isinstance(state, EstimateTable):
        return TABLE_KIND
    raise InputError(f"unsupported snapshot type {type(state).__name__}")


def skeleton(state: State) -> tuple:
    """Structure of a state with its estimates stripped."""
    if isinstance(state, MorphSystem):
        return (MORPH_KIND, state.skeleton())
    return (TABLE_KIND, state.components, state.criteria)


@dataclass(frozen=True)
class SnapshotSeries:
    """States of one system skeleton at strictly increasing timestamps.

    `picks` names the tracked solution for morph detectors; `references`
    holds published subsystem qualities (timestamp -> label -> quality)
    to check against.
    """

    timestamps: tuple[int, ...]
    states: tuple[State, ...]
    picks: tuple[str, ...] = ()
    references: Mapping[int, Mapping[str, QualityVector]] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return state_kind(self.states[0])

    @property
    def last(self) -> State:
        return self.states[-1]

    def validate(self) -> ValidationReport:
        found: list[Violation] = []
        if not self.states:
            found.append(Violation("empty-series", "states", "series needs at least one snapshot"))
            return ValidationReport(tuple(found))
        if len(self.timestamps) != len(self.states):
            found.append(Violation("shape", "timestamps",
                                   f"{len(self.timestamps)} timestamps for {len(self.states)} states"))
        for earlier, later in zip(self.timestamps, self.timestamps[1:]):
            if later <= earlier:
                found.append(Violation("timestamps", str(later), f"not after {earlier}"))
        base = skeleton(self.states[0])
        for stamp, state in zip(self.timestamps, self.states):
            if skeleton(state) != base:
                found.append(Violation("skeleton", str(stamp), "structure differs from the first snapshot"))
                continue
            report = validate_system(state) if isinstance(state, MorphSystem) else validate_estimates(state)
            found.extend(Violation(v.code, f"{stamp}:{v.subject}", v.message) for v in report)
        return ValidationReport(tuple(found))


@dataclass(frozen=True)
class Forecaster:
    """How to extend a series. `supplied` carries user-supplied states."""

    method: str = HOLD_LAST
    horizon: int = 1
    supplied: tuple[State, ...] = ()

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"unknown forecast method {self.method!r}; choose from {METHODS}")
        if self.method == USER_SUPPLIED:
            if not self.supplied:
                raise InputError("user-supplied forecast needs at least one forecast state")
        elif self.horizon < 1:
            raise InputError(f"forecast horizon must be >= 1, got {self.horizon}")

    @property
    def steps(self) -> int:
        return len(self.supplied) if self.method == USER_SUPPLIED else self.horizon


@dataclass(frozen=True)
class TrajectoryEntry:
    timestamp: int
    forecast: bool
    state: State = field(repr=False, compare=False)
    result: Any


@dataclass(frozen=True)
class BottleneckTrajectory:
    detector: str
    entries: tuple[TrajectoryEntry, ...]

    def at(self, timestamp: int) -> TrajectoryEntry:
        for entry in self.entries:
            if entry.timestamp == timestamp:
                return entry
        raise InputError(f"no trajectory entry at {timestamp}")


@dataclass(frozen=True)
class ReferenceMismatch:
    timestamp: int
    subsystem: str
    published: QualityVector
    computed: QualityVector | None

    def __str__(self) -> str:
        computed = self.computed if self.computed is not None else "not a subsystem"
        return f"t={self.timestamp} {self.subsystem}: published {self.published}, recomputed {computed}"


# ----------------------------------------------------------------------------
# Forecasting
# ----------------------------------------------------------------------------

def _trend(timestamps: Sequence[int], values: Sequence[float], target: int) -> float:
    """Least-squares line through (timestamp, value), evaluated at target."""
    y = np.asarray(values, dtype=float)
    if np.ptp(y) == 0:
        return float(y[-1])
    slope, intercept = np.polyfit(np.asarray(timestamps, dtype=float), y, 1)
    return float(intercept + slope * target)


def _trend_morph(series: SnapshotSeries, target: int) -> MorphSystem:
    last: MorphSystem = series.last
    system = last
    for alt in last.alternatives:
        values = [s.da(alt.id).priority for s in series.states]
        predicted = round_half_away(_trend(series.timestamps, values, target))
        system = system.with_priority(alt.id, int(clamp(predicted, 1, last.priority_scale)))
    for a, b, _ in last.compat_triples():
        values = [s.compat_of(a, b) for s in series.states]
        predicted = round_half_away(_trend(series.timestamps, values, target))
        system = system.with_compat(a, b, int(clamp(predicted, 0, last.compat_max)))
    return system


def _trend_table(series: SnapshotSeries, target: int) -> EstimateTable:
    last: EstimateTable = series.last
    stack = np.stack([s.matrix() for s in series.states])
    rows = []
    for i in range(len(last.components)):
        row = []
        for j, spec in enumerate(last.criteria):
            value = _trend(series.timestamps, stack[:, i, j], target)
            if spec.integral:
                value = float(round_half_away(value))
            row.append(clamp(value, spec.scale_min, spec.scale_max))
        rows.append(row)
    return last.with_values(rows)


def forecast(series: SnapshotSeries, forecaster: Forecaster) -> SnapshotSeries:
    """Forecast states after the last snapshot.

    Args:
        series: Validated snapshot series
        forecaster: Method and horizon

    Returns:
        SnapshotSeries of the forecast points at last timestamp + 1, + 2, ...
    """
    series.validate().raise_if_invalid("snapshot series")
    last_stamp = series.timestamps[-1]
    targets = [last_stamp + step for step in range(1, forecaster.steps + 1)]

    if forecaster.method == HOLD_LAST:
        states = [series.last] * len(targets)
    elif forecaster.method == LINEAR_TREND:
        if len(series.states) < 2:
            raise InputError("linear-trend forecasting needs at least 2 snapshots")
        build = _trend_morph if series.kind == MORPH_KIND else _trend_table
        states = [build(series, t) for t in targets]
    else:
        base = skeleton(series.states[0])
        for index, state in enumerate(forecaster.supplied, start=1):
            if skeleton(state) != base:
                raise InputError(f"user-supplied forecast {index} does not match the series structure")
        check = SnapshotSeries(tuple(targets), tuple(forecaster.supplied))
        check.validate().raise_if_invalid("user-supplied forecast")
        states = list(forecaster.supplied)

    logger.info(f"Forecast ({forecaster.method}) for timestamps {targets}")
    return SnapshotSeries(tuple(targets), tuple(states), series.picks)


# ----------------------------------------------------------------------------
# Detector registry
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Detector:
    kind: str
    run: Callable[[State, Mapping[str, Any]], Any]


@dataclass(frozen=True)
class DetectorSpec:
    name: str
    params: Mapping[str, Any] = field(default_factory=dict)


def _require(params: Mapping[str, Any], key: str, detector: str) -> Any:
    if params.get(key) is None:
        raise InputError(f"detector {detector} needs parameter {key!r}")
    return params[key]


def _outrank_params(params: Mapping[str, Any]) -> screening.OutrankParams:
    value = params.get("outrank")
    if value is None:
        return screening.OutrankParams()
    if isinstance(value, screening.OutrankParams):
        return value
    return screening.OutrankParams.from_dict(value)


def _picked(state: MorphSystem, params: Mapping[str, Any], detector: str):
    return morph.compose(state, _require(params, "picks", detector))


DETECTORS: dict[str, Detector] = {
    "pareto_chart": Detector(TABLE_KIND, lambda s, p: screening.pareto_chart(
        s, _require(p, "criterion", "pareto_chart"), float(_require(p, "threshold", "pareto_chart")))),
    "pareto_efficient": Detector(TABLE_KIND, lambda s, p: screening.pareto_efficient(
        s, p.get("criteria") or list(s.criterion_ids))),
    "electre_layers": Detector(TABLE_KIND, lambda s, p: screening.electre_layers(
        s, p.get("criteria"), _outrank_params(p))),
    "pareto_solutions": Detector(MORPH_KIND, lambda s, p: morph.pareto_solutions(
        s, int(p.get("budget", morph.DEFAULT_BUDGET)))),
    "improvement_actions": Detector(MORPH_KIND, lambda s, p: morph.improvement_actions(
        _picked(s, p, "improvement_actions"))),
    "composite_bottlenecks": Detector(MORPH_KIND, lambda s, p: morph.composite_bottlenecks(
        _picked(s, p, "composite_bottlenecks"), int(_require(p, "size", "composite_bottlenecks")))),
}


def run_detector(state: State, detector: DetectorSpec) -> Any:
    """Run one registered detector on one state."""
    try:
        entry = DETECTORS[detector.name]
    except KeyError:
        raise InputError(f"unknown detector {detector.name!r}; choose from {sorted(DETECTORS)}") from None
    if entry.kind != state_kind(state):
        raise InputError(f"detector {detector.name} works on {entry.kind} snapshots, got {state_kind(state)}")
    return entry.run(state, detector.params)


def predictive_bottlenecks(series: SnapshotSeries, forecaster: Forecaster, detector: DetectorSpec,
                           workers: int = 1) -> BottleneckTrajectory:
    """Run a detector on every snapshot and on the forecast points.

    Args:
        series: Snapshot series
        forecaster: How to build the forecast points
        detector: Registered detector name and parameters
        workers: Threads for per-snapshot detection; order is preserved

    Returns:
        BottleneckTrajectory with historical entries first, then forecast ones
    """
    if detector.name in DETECTORS and DETECTORS[detector.name].kind != series.kind:
        raise InputError(f"detector {detector.name} works on {DETECTORS[detector.name].kind} "
                         f"snapshots, series holds {series.kind}")
    future = forecast(series, forecaster)

    points = [(t, False, s) for t, s in zip(series.timestamps, series.states)]
    points += [(t, True, s) for t, s in zip(future.timestamps, future.states)]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda point: run_detector(point[2], detector), points))
    else:
        results = [run_detector(state, detector) for _, _, state in points]

    entries = tuple(TrajectoryEntry(t, is_forecast, state, result)
                    for (t, is_forecast, state), result in zip(points, results))
    logger.info(f"Trajectory of {detector.name}: {len(entries)} entries ({len(future.states)} forecast)")
    return BottleneckTrajectory(detector.name, entries)


def compare_references(trajectory: BottleneckTrajectory, references: Mapping[int, Mapping[str, QualityVector]],
                       picks: Sequence[str], size: int) -> list[ReferenceMismatch]:
    """Published subsystem qualities that disagree with recomputation."""
    mismatches: list[ReferenceMismatch] = []
    for entry in trajectory.entries:
        published = references.get(entry.timestamp)
        if not published or not isinstance(entry.state, MorphSystem):
            continue
        computed = {s.label: s.quality for s in
                    morph.all_subsystem_qualities(morph.compose(entry.state, picks), size)}
        for label, quality in published.items():
            if computed.get(label) != quality:
                mismatches.append(ReferenceMismatch(entry.timestamp, label, quality, computed.get(label)))
    for mismatch in mismatches:
        logger.warning(f"Published quality differs from recomputation: {mismatch}")
    return mismatches
