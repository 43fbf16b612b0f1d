import pytest

from conftest import ENTRIES, VERSION_PAIRS, events_tuple, make_session, pair_sessions
from echodbg.divergence import (BOTH_COMPLETED, BUDGET, FAILING_ENDED,
                                LocalDriver, NavEvent, analyze_offline,
                                analyze_online, go_to,
                                step_to_next_convergence,
                                step_to_next_divergence)
from echodbg.errors import NonDeterministicExecutionError

# Expected maps, hand-traced from the fixture sources and frozen. Each value
# is (events, terminal, totals).
EXPECTED_MAPS = {
    "pillar": ([("divergence", 17, 17), ("convergence", 29, 21),
                ("divergence", 73, 65), ("convergence", 77, 71)],
               BOTH_COMPLETED, (86, 80)),
    "prim": ([("divergence", 5, 5), ("convergence", 9, 5)],
             BOTH_COMPLETED, (16, 12)),
    "calc": ([("divergence", 6, 6), ("convergence", 8, 8)],
             BOTH_COMPLETED, (15, 15)),
    "crash": ([("divergence", 4, 4)], FAILING_ENDED, (6, 6)),
    "rename": ([("divergence", 4, 4)], BOTH_COMPLETED, (16, 16)),
    "logging": ([("divergence", 10, 10), ("convergence", 16, 24)],
                BOTH_COMPLETED, (21, 29)),
    "loopcount": ([("divergence", 9, 9), ("convergence", 50, 74)],
                  BOTH_COMPLETED, (55, 79)),
    "branch": ([("divergence", 4, 4), ("convergence", 6, 6),
                ("divergence", 8, 8)], BOTH_COMPLETED, (15, 15)),
}


def drivers(family):
    w, f = pair_sessions(family)
    return LocalDriver(w), LocalDriver(f)


@pytest.mark.parametrize("family", VERSION_PAIRS)
def test_online_maps_match_frozen_expectations(family):
    nav_map = analyze_online(*drivers(family))
    events, terminal, totals = EXPECTED_MAPS[family]
    assert events_tuple(nav_map) == events
    assert nav_map.terminal == terminal
    assert (nav_map.w_total_steps, nav_map.f_total_steps) == totals


@pytest.mark.parametrize("family", VERSION_PAIRS)
def test_online_equals_offline(family):
    online = analyze_online(*drivers(family))
    w, f = pair_sessions(family)
    offline = analyze_offline(w.collect_full_trace(), f.collect_full_trace())
    assert online.to_json() == offline.to_json()


def test_identical_programs_never_diverge():
    entry = ENTRIES["pillar"]
    w = make_session("pillar_working.echo", entry)
    f = make_session("pillar_working.echo", entry)
    nav_map = analyze_online(LocalDriver(w), LocalDriver(f))
    assert nav_map.events == []
    assert nav_map.terminal == BOTH_COMPLETED
    assert nav_map.w_total_steps == nav_map.f_total_steps == 86


def test_first_pillar_divergence_locations():
    w, f = drivers("pillar")
    event, terminal = step_to_next_divergence(w, f)
    assert terminal is None
    assert (event.w_steps, event.f_steps) == (17, 17)
    assert w.current_identity().method_selector == "methodMissing"
    assert f.current_identity().method_selector == "mySetting"
    assert w.current_identity().class_name == "PCBConfig"


def test_pillar_first_convergence_returns_to_caller():
    w, f = drivers("pillar")
    step_to_next_divergence(w, f)
    event, terminal = step_to_next_convergence(w, f)
    assert terminal is None
    assert (event.w_steps, event.f_steps) == (29, 21)
    assert event.w_steps > event.f_steps
    ident = w.current_identity()
    assert ident == f.current_identity()
    assert (ident.class_name, ident.method_selector) == ("PCBTest", "run")
    assert w.stack_depth() == f.stack_depth() == 2


def test_calc_convergence_at_callers_next_node():
    w, f = drivers("calc")
    step_to_next_divergence(w, f)
    assert w.stack_depth() == f.stack_depth() == 3
    event, _ = step_to_next_convergence(w, f)
    ident = w.current_identity()
    assert ident.source_text == "a = self.compute()"
    assert ident.node_type == "Assign"
    assert (event.w_steps, event.f_steps) == (8, 8)


def test_primitive_pair_unwinds_only_the_deeper():
    w, f = drivers("prim")
    event, _ = step_to_next_divergence(w, f)
    assert (event.w_steps, event.f_steps) == (5, 5)
    assert w.stack_depth() == 3
    assert f.stack_depth() == 2
    f_before = f.steps_taken()
    f_ident_before = f.current_identity()
    event, _ = step_to_next_convergence(w, f)
    # the shallower side never moved; convergence is at its current node
    assert f.steps_taken() == f_before
    assert event.f_steps == f_before
    assert w.current_identity() == f_ident_before


def test_crash_pair_ends_divergent():
    w, f = drivers("crash")
    step_to_next_divergence(w, f)
    event, terminal = step_to_next_convergence(w, f)
    assert event is None
    assert terminal == FAILING_ENDED
    assert not f.alive()
    assert f.session.exec.status == "Failed"


def test_preconditions_validated():
    w, f = drivers("calc")
    with pytest.raises(ValueError):
        step_to_next_convergence(w, f)  # currently convergent
    step_to_next_divergence(w, f)
    with pytest.raises(ValueError):
        step_to_next_divergence(w, f)  # currently divergent


def test_analyze_requires_fresh_sessions():
    w, f = drivers("calc")
    w.step()
    with pytest.raises(ValueError):
        analyze_online(w, f)


def test_goto_every_pillar_event():
    nav_map = analyze_online(*drivers("pillar"))
    w, f = drivers("pillar")
    for event in nav_map.events:
        go_to(w, f, event)
        assert w.steps_taken() == event.w_steps
        assert f.steps_taken() == event.f_steps
        equal = w.current_identity() == f.current_identity()
        if event.kind == "divergence":
            assert not equal
        else:
            assert equal
            assert w.stack_depth() == f.stack_depth()


def test_goto_zero_steps_on_identical_pair():
    entry = ENTRIES["pillar"]
    w = LocalDriver(make_session("pillar_working.echo", entry))
    f = LocalDriver(make_session("pillar_working.echo", entry))
    go_to(w, f, NavEvent("convergence", 0, 0))
    assert w.current_identity() == f.current_identity()


def test_goto_detects_changed_program():
    nav_map = analyze_online(*drivers("calc"))
    # replaying a map against the wrong program pair must be caught
    entry = ENTRIES["calc"]
    w = LocalDriver(make_session("calc_working.echo", entry))
    f = LocalDriver(make_session("calc_working.echo", entry))  # tampered
    with pytest.raises(NonDeterministicExecutionError):
        go_to(w, f, nav_map.events[0])


def test_goto_detects_out_of_range_replay():
    w, f = drivers("calc")
    with pytest.raises(NonDeterministicExecutionError):
        go_to(w, f, NavEvent("divergence", 10_000, 10_000))


def test_unequal_depth_unwind_can_land_on_still_differing_nodes():
    # one version made the helper a primitive AND renamed the local that
    # receives its result, so after the deeper side unwinds, the two
    # executions still differ and the equal-depth rule takes over
    from echodbg.lang import parse, parse_entry
    from echodbg.debugger import DebugSession

    atomic = parse("class G { primitive method f(x) { return x.add(1); } "
                   "method run() { a = self.f(1); b = a.add(2); "
                   "return b; } }")
    framed = parse("class G { method f(x) { return x.add(1); } "
                   "method run() { aa = self.f(1); b = aa.add(2); "
                   "return b; } }")
    entry = "G.new().run()"
    w = LocalDriver(DebugSession(atomic, parse_entry(entry, atomic)))
    f = LocalDriver(DebugSession(framed, parse_entry(entry, framed)))
    event, terminal = step_to_next_divergence(w, f)
    assert event is not None
    assert w.stack_depth() == 2
    assert f.stack_depth() == 3
    event, terminal = step_to_next_convergence(w, f)
    # unwinding f to depth 2 lands on a differing assignment, and finishing
    # run() ends both executions without another meeting point
    assert event is None
    assert terminal == BOTH_COMPLETED


def test_budget_terminates_identical_infinite_loops():
    entry = ENTRIES["spin"]
    w = LocalDriver(make_session("spin.echo", entry, max_steps=500))
    f = LocalDriver(make_session("spin.echo", entry, max_steps=500))
    nav_map = analyze_online(w, f)
    assert nav_map.events == []
    assert nav_map.terminal == BUDGET
    assert nav_map.w_total_steps == nav_map.f_total_steps == 500


def test_budget_during_convergence_search():
    # diverge first, then one side loops forever: the search must give up
    # at the budget, not hang
    from echodbg.lang import parse, parse_entry
    from echodbg.debugger import DebugSession

    looping = parse("class T { method run() { x = self.pick(); return x; } "
                    "method pick() { while (true) { 1; } return 2; } }")
    finite = parse("class T { method run() { x = self.pick(); return x; } "
                   "method pick() { return 3; } }")
    entry = "T.new().run()"

    def session(program):
        return DebugSession(program, parse_entry(entry, program),
                            max_steps=400)

    w = LocalDriver(session(finite))
    f = LocalDriver(session(looping))
    nav_map = analyze_online(w, f)
    assert events_tuple(nav_map)[0][0] == "divergence"
    assert nav_map.terminal == BUDGET
    assert nav_map.f_total_steps == 400


@pytest.mark.parametrize("family", ["calc", "pillar", "crash"])
def test_swapping_roles_swaps_columns(family):
    nav_map = analyze_online(*drivers(family))
    w, f = pair_sessions(family)
    swapped = analyze_online(LocalDriver(f), LocalDriver(w))
    assert [(e.kind, e.f_steps, e.w_steps) for e in swapped.events] == \
        events_tuple(nav_map)
    assert (swapped.w_total_steps, swapped.f_total_steps) == \
        (nav_map.f_total_steps, nav_map.w_total_steps)
    flips = {BOTH_COMPLETED: BOTH_COMPLETED, BUDGET: BUDGET,
             FAILING_ENDED: "working-ended", "working-ended": FAILING_ENDED}
    assert swapped.terminal == flips[nav_map.terminal]


def test_online_offline_equivalence_on_generated_pairs():
    # the fixture pairs are hand-picked; this sweeps the same equivalence
    # across generated programs with arbitrary call/branch structure
    import test_acceptance as gen
    from echodbg.lang import parse, parse_entry
    from echodbg.debugger import DebugSession

    for seed in range(120):
        program_a = parse(gen._gen_program(seed))
        program_b = parse(gen._gen_program(seed, mutated_method=seed,
                                           mutation_seed=seed * 31 + 7))
        entry = "Gen.new().m0(3)"

        def session(program):
            return DebugSession(program, parse_entry(entry, program))

        online = analyze_online(LocalDriver(session(program_a)),
                                LocalDriver(session(program_b)))
        offline = analyze_offline(session(program_a).collect_full_trace(),
                                  session(program_b).collect_full_trace())
        assert online.to_json() == offline.to_json(), seed


def test_map_json_round_trip():
    from echodbg.divergence import NavigationMap
    nav_map = analyze_online(*drivers("pillar"))
    doc = nav_map.to_json()
    assert doc["terminal"] == "both-completed"
    assert doc["events"][0] == {"kind": "divergence", "wSteps": 17,
                                "fSteps": 17}
    assert NavigationMap.from_json(doc) == nav_map
