from itertools import permutations, product

import networkx as nx
import pytest

from app.errors import BudgetExceededError, InputError
from app.model import DesignAlternative, MorphSystem, QualityVector
from app.morph import (
    BOTTLENECK,
    DA_UPGRADE,
    IC_UPGRADE,
    SOLUTION,
    ImprovementAction,
    action_effects,
    all_subsystem_qualities,
    apply_action,
    compose,
    composite_bottlenecks,
    da_estimates,
    dominates_eta,
    dominates_quality,
    enumerate_solutions,
    ic_estimates,
    improvement_actions,
    joint_estimates,
    pareto_solutions,
)
from app.screening import pareto_efficient


def q(*values):
    return QualityVector.from_list(values)


# ----------------------------------------------------------------------------
# Composition and dominance
# ----------------------------------------------------------------------------

def test_compose_examined_solutions(s1, s2):
    assert s1.quality == q(1, 2, 1, 1)
    assert s2.quality == q(2, 0, 1, 3)
    assert s2.label == "X2Y2Z2H2"


def test_compose_accepts_any_order(four_component):
    solution = compose(four_component, ["H1", "Z2", "X1", "Y2"])
    assert solution.picks == ("X1", "Y2", "Z2", "H1")
    assert solution.pick_for("Z") == "Z2"


@pytest.mark.parametrize("picks, message", [
    (["X1", "X2", "Y1", "Z1", "H1"], "picked twice"),
    (["X1", "Y1", "Z1"], "missing pick"),
    (["X1", "Y1", "Z1", "Q7"], "unknown design alternative"),
])
def test_compose_rejects_bad_picks(four_component, picks, message):
    with pytest.raises(InputError, match=message):
        compose(four_component, picks)


def test_single_slot_quality_uses_top_compatibility():
    system = MorphSystem.build(["X"], [DesignAlternative("X1", "X", 2)], [])
    assert compose(system, ["X1"]).quality == q(3, 0, 1, 0)


def test_dominates_eta_prefix_sums():
    assert dominates_eta((2, 1, 1), (1, 2, 1))
    assert dominates_eta((1, 2, 1), (1, 2, 1))
    assert not dominates_eta((1, 0, 3), (0, 3, 1))
    assert not dominates_eta((0, 3, 1), (1, 0, 3))


def test_dominates_eta_shape_errors():
    with pytest.raises(InputError, match="length"):
        dominates_eta((1, 2), (1, 1, 1))
    with pytest.raises(InputError, match="total"):
        dominates_eta((1, 2, 1), (1, 1, 1))


def test_dominance_modes():
    better, worse = q(1, 2, 2, 0), q(1, 2, 1, 1)
    assert dominates_quality(better, worse, SOLUTION)
    assert not dominates_quality(worse, better, SOLUTION)
    # bottleneck mode prefers the lower eta at equal or higher w
    assert dominates_quality(worse, better, BOTTLENECK)
    assert not dominates_quality(q(0, 2, 1, 1), better, BOTTLENECK)
    with pytest.raises(InputError):
        dominates_quality(better, worse, "sideways")


def _compositions(total, levels):
    return [v for v in product(range(total + 1), repeat=levels) if sum(v) == total]


@pytest.mark.parametrize("total", [3, 4])
def test_covers_are_single_adjacent_moves(total):
    vectors = _compositions(total, 3)

    def strictly(a, b):
        return a != b and dominates_eta(a, b)

    for a in vectors:
        for b in vectors:
            covers = strictly(a, b) and not any(strictly(a, c) and strictly(c, b) for c in vectors)
            moved = [x - y for x, y in zip(a, b)]
            adjacent = moved in ([1, -1, 0], [0, 1, -1])
            assert covers == adjacent, (a, b)


# Hasse diagrams of the eta lattices for k = 3, listed by hand, better element first.
HASSE_TOTAL_4 = [
    ((4, 0, 0), (3, 1, 0)),
    ((3, 1, 0), (3, 0, 1)), ((3, 1, 0), (2, 2, 0)),
    ((3, 0, 1), (2, 1, 1)),
    ((2, 2, 0), (2, 1, 1)), ((2, 2, 0), (1, 3, 0)),
    ((2, 1, 1), (2, 0, 2)), ((2, 1, 1), (1, 2, 1)),
    ((1, 3, 0), (1, 2, 1)), ((1, 3, 0), (0, 4, 0)),
    ((2, 0, 2), (1, 1, 2)),
    ((1, 2, 1), (1, 1, 2)), ((1, 2, 1), (0, 3, 1)),
    ((0, 4, 0), (0, 3, 1)),
    ((1, 1, 2), (1, 0, 3)), ((1, 1, 2), (0, 2, 2)),
    ((0, 3, 1), (0, 2, 2)),
    ((1, 0, 3), (0, 1, 3)),
    ((0, 2, 2), (0, 1, 3)),
    ((0, 1, 3), (0, 0, 4)),
]

HASSE_TOTAL_3 = [
    ((3, 0, 0), (2, 1, 0)),
    ((2, 1, 0), (2, 0, 1)), ((2, 1, 0), (1, 2, 0)),
    ((2, 0, 1), (1, 1, 1)),
    ((1, 2, 0), (1, 1, 1)), ((1, 2, 0), (0, 3, 0)),
    ((1, 1, 1), (1, 0, 2)), ((1, 1, 1), (0, 2, 1)),
    ((0, 3, 0), (0, 2, 1)),
    ((1, 0, 2), (0, 1, 2)),
    ((0, 2, 1), (0, 1, 2)),
    ((0, 1, 2), (0, 0, 3)),
]


@pytest.mark.parametrize("total, edges", [(4, HASSE_TOTAL_4), (3, HASSE_TOTAL_3)])
def test_dominance_is_closure_of_hasse_diagram(total, edges):
    vectors = _compositions(total, 3)
    diagram = nx.DiGraph(edges)
    assert set(diagram.nodes) == set(vectors)
    for a in vectors:
        reachable = nx.descendants(diagram, a) | {a}
        assert {b for b in vectors if dominates_eta(a, b)} == reachable, a


def _quality_poset(total):
    return [QualityVector(w, eta) for w in range(4) for eta in _compositions(total, 3)]


@pytest.mark.parametrize("mode", [SOLUTION, BOTTLENECK])
@pytest.mark.parametrize("total", [1, 2, 3, 4])
def test_dominance_is_a_partial_order(mode, total):
    vectors = _quality_poset(total)
    below = {a: {b for b in vectors if dominates_quality(a, b, mode)} for a in vectors}
    for a in vectors:
        assert a in below[a]
        for b in below[a]:
            if a in below[b]:
                assert a == b
            assert below[b] <= below[a], (a, b)


def test_dominance_modes_mirror_eta():
    for a, b in product(_quality_poset(3), repeat=2):
        if a.w == b.w:
            assert dominates_quality(a, b, SOLUTION) == dominates_quality(b, a, BOTTLENECK)


# ----------------------------------------------------------------------------
# Enumeration
# ----------------------------------------------------------------------------

def test_enumeration_order(four_component):
    solutions = enumerate_solutions(four_component)
    assert len(solutions) == 16
    assert solutions[0].label == "X1Y1Z1H1"
    assert solutions[1].label == "X1Y1Z1H2"
    assert solutions[-1].label == "X2Y2Z2H2"
    assert sum(s.quality.w == 0 for s in solutions) == 4


def test_pareto_solutions(four_component):
    efficient = pareto_solutions(four_component)
    assert [(s.label, s.quality) for s in efficient] == [
        ("X1Y1Z1H1", q(1, 3, 1, 0)),
        ("X1Y1Z1H2", q(2, 2, 1, 1)),
    ]


def test_examined_solutions_are_dominated(four_component, s1, s2):
    assert dominates_quality(compose(four_component, ["X1", "Y2", "Z1", "H1"]).quality, s1.quality)
    assert dominates_quality(compose(four_component, ["X2", "Y2", "Z1", "H2"]).quality, s2.quality)


def test_pareto_matches_brute_force(four_component):
    feasible = [s for s in enumerate_solutions(four_component) if s.quality.w > 0]

    def prefixes(eta):
        return [sum(eta[:i + 1]) for i in range(len(eta))]

    def beats(a, b):
        ge = a.w >= b.w and all(x >= y for x, y in zip(prefixes(a.eta), prefixes(b.eta)))
        return ge and a != b

    expected = [s.label for s in feasible if not any(beats(o.quality, s.quality) for o in feasible)]
    assert [s.label for s in pareto_solutions(four_component)] == expected


def test_budget(four_component):
    with pytest.raises(BudgetExceededError) as info:
        enumerate_solutions(four_component, budget=10)
    assert info.value.count == 16
    assert info.value.budget == 10
    assert info.value.exit_code == 2


# ----------------------------------------------------------------------------
# Improvement actions
# ----------------------------------------------------------------------------

def test_actions_for_s2(s2):
    actions = improvement_actions(s2)
    assert [str(a) for a in actions] == [
        "DA-upgrade X2: 3 => 1",
        "DA-upgrade Y2: 2 => 1",
        "DA-upgrade Z2: 3 => 1",
        "DA-upgrade H2: 3 => 1",
        "IC-upgrade (X2,H2): 2 => 3",
    ]


def test_actions_for_s1(s1):
    actions = improvement_actions(s1)
    assert [(a.kind, a.target, a.from_level, a.to_level) for a in actions] == [
        (DA_UPGRADE, ("Y2",), 2, 1),
        (DA_UPGRADE, ("Z2",), 3, 1),
        (IC_UPGRADE, ("X1", "Y2"), 2, 3),
        (IC_UPGRADE, ("X1", "Z2"), 2, 3),
        (IC_UPGRADE, ("X1", "H1"), 1, 3),
        (IC_UPGRADE, ("Y2", "H1"), 2, 3),
    ]


def test_action_effects(s2):
    effects = action_effects(s2)
    by_label = {e.action.label: e for e in effects}
    assert by_label["(X2,H2)"].after == q(3, 0, 1, 3)
    assert by_label["(X2,H2)"].w_gain == 1
    assert by_label["X2"].after == q(2, 1, 1, 2)
    assert all(e.improves for e in effects)
    assert all(e.before == s2.quality for e in effects)


def test_apply_action_leaves_original(four_component):
    upgraded = apply_action(four_component, ImprovementAction(IC_UPGRADE, ("X2", "Y1"), 0, 3))
    assert upgraded.compat_of("X2", "Y1") == 3
    assert four_component.compat_of("X2", "Y1") == 0


def test_quality_ignores_pick_order(four_component):
    slots = len(four_component.slots)
    for solution in enumerate_solutions(four_component):
        assert sum(solution.quality.eta) == slots
        for order in permutations(solution.picks):
            assert compose(four_component, order).quality == solution.quality


def test_compatibility_upgrade_never_lowers_w(four_component):
    solutions = enumerate_solutions(four_component)
    for pair, w in four_component.compat.items():
        if w >= four_component.compat_max:
            continue
        a, b = sorted(pair)
        upgraded = apply_action(four_component, ImprovementAction(IC_UPGRADE, (a, b), w, w + 1))
        for solution in solutions:
            after = compose(upgraded, solution.picks).quality
            assert after.w >= solution.quality.w
            assert after.eta == solution.quality.eta


def test_actions_on_best_solution_are_empty():
    system = MorphSystem.build(["X", "Y"], [DesignAlternative("X1", "X", 1), DesignAlternative("Y1", "Y", 1)],
                               [("X1", "Y1", 3)])
    assert improvement_actions(compose(system, ["X1", "Y1"])) == []


# ----------------------------------------------------------------------------
# Composite bottlenecks
# ----------------------------------------------------------------------------

def test_subsystem_qualities_first_snapshot(evolution):
    solution = compose(evolution.states[0], evolution.picks)
    subsystems = all_subsystem_qualities(solution, 3)
    assert [(s.label, s.quality) for s in subsystems] == [
        ("X2Y2Z2", q(2, 0, 1, 2)),
        ("X2Y2H2", q(2, 0, 1, 2)),
        ("X2Z2H2", q(2, 0, 0, 3)),
        ("Y2Z2H2", q(3, 0, 1, 2)),
    ]


def test_bottlenecks_first_snapshot(evolution):
    solution = compose(evolution.states[0], evolution.picks)
    assert [s.label for s in composite_bottlenecks(solution, 3)] == ["X2Z2H2", "Y2Z2H2"]


def test_bottlenecks_second_snapshot(evolution):
    solution = compose(evolution.states[1], evolution.picks)
    qualities = {s.label: s.quality for s in all_subsystem_qualities(solution, 3)}
    assert qualities == {"X2Y2Z2": q(3, 0, 1, 2), "X2Y2H2": q(2, 0, 2, 1),
                         "X2Z2H2": q(2, 0, 1, 2), "Y2Z2H2": q(2, 0, 2, 1)}
    assert [s.label for s in composite_bottlenecks(solution, 3)] == ["X2Y2Z2"]


def test_bottlenecks_of_forecast(s2_forecast):
    solution = compose(s2_forecast, ["X2", "Y2", "Z2", "H2"])
    qualities = {s.label: s.quality for s in all_subsystem_qualities(solution, 3)}
    assert qualities["X2Y2Z2"] == q(3, 0, 0, 3)
    assert qualities["X2Z2H2"] == qualities["Y2Z2H2"] == q(2, 1, 0, 2)
    assert [s.label for s in composite_bottlenecks(solution, 3)] == ["X2Y2Z2"]


@pytest.mark.parametrize("size", [1, 4])
def test_subsystem_size_bounds(s2, size):
    with pytest.raises(InputError, match="subsystem size"):
        composite_bottlenecks(s2, size)


def test_pairs_as_subsystems(s2):
    pairs = all_subsystem_qualities(s2, 2)
    assert len(pairs) == 6
    assert pairs[0].slots == ("X", "Y")


# ----------------------------------------------------------------------------
# Deficit screening
# ----------------------------------------------------------------------------

def test_da_estimates(s2):
    table = da_estimates(s2)
    assert table.components == ("X2", "Y2", "Z2", "H2")
    assert [table.row(c) for c in table.components] == [(2, 1, 0), (1, 0, 0), (2, 0, 0), (2, 1, 0)]
    assert pareto_efficient(table, ["priority_deficit", "compat_deficit"]) == {"X2", "H2"}


def test_ic_estimates(s2):
    table = ic_estimates(s2)
    assert table.components == ("X2-Y2", "X2-Z2", "X2-H2", "Y2-Z2", "Y2-H2", "Z2-H2")
    assert table.row("X2-H2") == (2, 1, 1)
    assert pareto_efficient(table, ["priority_deficit", "compat_deficit"]) == {"X2-H2"}


def test_joint_estimates(s2):
    table = joint_estimates(s2)
    assert len(table.components) == 10
    assert table.column("kind") == {**{d: 0 for d in s2.picks},
                                    **{c: 1 for c in ic_estimates(s2).components}}
    assert table.criterion("kind").weight == 0.0
