from dataclasses import replace

import numpy as np
import pytest

from app.errors import InputError
from app.model import (
    ComponentRecord,
    CriterionSpec,
    DesignAlternative,
    EstimateTable,
    Graph,
    MorphSystem,
    QualityVector,
    pair_key,
    validate_estimates,
    validate_graph,
    validate_system,
)


def test_four_component_system_is_valid(four_component):
    report = validate_system(four_component)
    assert report.ok
    assert four_component.combination_count() == 16
    assert four_component.compat_of("Y2", "X2") == 3


def test_missing_pair_is_named(four_component):
    compat = {k: v for k, v in four_component.compat.items() if k != pair_key("X1", "Y1")}
    report = validate_system(replace(four_component, compat=compat))
    assert [v.code for v in report] == ["missing-pair"]
    assert report.subjects() == ["(X1,Y1)"]
    with pytest.raises(InputError, match=r"\(X1,Y1\)"):
        report.raise_if_invalid("system")


def test_single_slot_needs_no_pairs():
    system = MorphSystem.build(["X"], [DesignAlternative("X1", "X", 1)], [])
    assert validate_system(system).ok


def test_system_violations():
    system = MorphSystem.build(
        ["X", "Y", "Y"],
        [DesignAlternative("X1", "X", 4), DesignAlternative("Y1", "Y", 1), DesignAlternative("Z1", "Z", 1)],
        [("X1", "Y1", 5), ("X1", "Q9", 1)],
    )
    codes = {v.code for v in validate_system(system)}
    assert codes >= {"duplicate-slot", "priority-range", "unknown-slot", "compat-range", "unknown-da"}


def test_same_slot_pair_rejected():
    system = MorphSystem.build(
        ["X"], [DesignAlternative("X1", "X", 1), DesignAlternative("X2", "X", 2)], [("X1", "X2", 1)])
    assert [v.code for v in validate_system(system)] == ["same-slot-pair"]


def test_conflicting_duplicate_pair():
    with pytest.raises(InputError, match="conflicting"):
        MorphSystem.build(["X", "Y"], [DesignAlternative("X1", "X", 1), DesignAlternative("Y1", "Y", 1)],
                          [("X1", "Y1", 2), ("Y1", "X1", 3)])


def test_compat_of_missing_pair(four_component):
    with pytest.raises(InputError, match="missing compatibility"):
        four_component.compat_of("X1", "X2")


def test_with_priority_returns_new_system(four_component):
    changed = four_component.with_priority("X2", 1)
    assert changed.da("X2").priority == 1
    assert four_component.da("X2").priority == 3
    assert changed.skeleton() == four_component.skeleton()


def test_supercharger_table(supercharger):
    assert validate_estimates(supercharger).ok
    assert len(supercharger.components) == 35
    assert supercharger.criterion_ids == ("C1", "C2", "C3", "C4", "C5", "C6")
    assert supercharger.value("7.11", "C1") == 70.0
    assert supercharger.label("6.3") == "Main oil pump"
    assert supercharger.matrix().shape == (35, 6)


def test_estimate_cell_violations():
    criteria = [CriterionSpec("C1", 1.0, 0, 2), CriterionSpec("C2")]
    table = EstimateTable.build(["a", "b"], criteria, [[3, 1], [1, None]])
    report = validate_estimates(table)
    assert [(v.code, v.subject) for v in report] == [("cell-range", "a/C1"), ("missing-cell", "b/C2")]
    assert np.isnan(table.matrix()[1, 1])


def test_estimate_spec_violations():
    criteria = [CriterionSpec("C1", -1.0), CriterionSpec("C1", 1.0, 2, 2), CriterionSpec("C3", direction="up")]
    table = EstimateTable.build(["a"], criteria, [[1, 1, 1]])
    codes = [v.code for v in validate_estimates(table)]
    assert codes == ["weight", "duplicate-criterion", "scale", "direction"]


def test_record_cycle_and_unknown_parent():
    records = [ComponentRecord("a", parent_id="b"), ComponentRecord("b", parent_id="a"),
               ComponentRecord("c", parent_id="zz")]
    table = EstimateTable.build(["a"], [CriterionSpec("C1")], [[1]], records)
    codes = sorted(v.code for v in validate_estimates(table))
    assert codes == ["parent-cycle", "parent-cycle", "unknown-parent"]


def test_unknown_criterion_and_component(supercharger):
    with pytest.raises(InputError, match="unknown criterion"):
        supercharger.column("C9")
    with pytest.raises(InputError, match="unknown component"):
        supercharger.row("9.9")


def test_quality_vector_text():
    q = QualityVector.from_list([2, 0, 1, 3])
    assert str(q) == "(2;0,1,3)"
    assert q.total == 4
    assert q.as_list() == [2, 0, 1, 3]


def test_graph_build_orders_naturally():
    graph = Graph.build(["n10", "n2", "n1"], [("n10", "n2"), ("n2", "n1", 3, 1)])
    assert graph.nodes == ("n1", "n2", "n10")
    assert graph.edges == (("n1", "n2"), ("n2", "n10"))
    assert graph.cost("n2", "n1") == (3.0, 1.0)
    g = graph.to_networkx()
    assert g.edges["n1", "n2"]["primary"] == 3.0
    assert Graph.from_networkx(g) == graph


def test_graph_violations():
    graph = Graph(("a", "b"), (("a", "a"), ("a", "b"), ("a", "b"), ("b", "c")),
                  {pair_key("a", "b"): (1.0, 2.0), pair_key("a", "x"): (1.0, 1.0)})
    codes = [v.code for v in validate_graph(graph)]
    assert codes == ["self-loop", "duplicate-edge", "unknown-node", "cost-order", "cost-without-edge"]
