import pytest

import stepcheck as sc
from stepcheck.dsl import parse_model
from stepcheck.semantics import (
    Config,
    StateBudgetExceeded,
    UnguardedRecursion,
    canon,
    generate_lts,
    label_str,
    prune_dead,
)
from stepcheck.terms import (
    Act,
    ActionLabel,
    Alt,
    Hide,
    Par,
    Seq,
    Var,
    WholePar,
)


def lts_of(source, system="S", **cfg):
    model = parse_model(source)
    term = model.systems.get(system, Var(system))
    return generate_lts(term, model, Config(**cfg))


def visible_labels(lts):
    return {label_str(a) for _, a, _ in lts.transitions}


class TestCanon:
    def test_alt_flattens_sorts_dedupes(self):
        a, b = Act(ActionLabel("a")), Act(ActionLabel("b"))
        t = Alt((Alt((b, a)), a))
        assert canon(t) == Alt((a, b))

    def test_singleton_alt_unwraps(self):
        a = Act(ActionLabel("a"))
        assert canon(Alt((a, a))) == a

    def test_seq_right_associates(self):
        a, b, c = (Act(ActionLabel(n)) for n in "abc")
        assert canon(Seq(Seq(a, b), c)) == Seq(a, Seq(b, c))

    def test_whole_par_collapses_to_par(self):
        a, b = Act(ActionLabel("a")), Act(ActionLabel("b"))
        assert canon(WholePar(a, b)) == Par(a, b)

    def test_nested_hide_merges(self):
        a = Act(ActionLabel("a"))
        t = Hide(frozenset({"x"}), Hide(frozenset({"y"}), a))
        assert canon(t) == Hide(frozenset({"x", "y"}), a)

    def test_empty_hide_vanishes(self):
        a = Act(ActionLabel("a"))
        assert canon(Hide(frozenset(), a)) == a


class TestBasicSteps:
    def test_sequence_then_termination(self):
        lts = lts_of("process P { P = a . b . delta }", "P")
        assert lts.num_states == 3
        assert lts.deadlock_states() == (2,)

    def test_choice_branches(self):
        lts = lts_of("process P { P = a . P + b . P }", "P")
        assert visible_labels(lts) == {"{a}", "{b}"}
        assert lts.num_states == 1

    def test_parallel_step_mode_allows_simultaneity(self):
        lts = lts_of("process P { P = a . delta || b . delta }", "P")
        assert "{a,b}" in visible_labels(lts)
        assert "{a}" in visible_labels(lts)

    def test_interleave_mode_forbids_simultaneity(self):
        lts = lts_of("process P { P = a . delta || b . delta }", "P",
                     step_mode="interleave")
        assert visible_labels(lts) == {"{a}", "{b}"}

    def test_deadlock_constant_has_no_moves(self):
        lts = lts_of("process P { P = delta }", "P")
        assert lts.num_states == 1 and lts.transitions == ()


class TestCommunication:
    PAIR = """
process P { P = a . delta }
process Q { Q = b . delta }
comm a, b -> ab
system S = block {a, b} in (P <> Q)
"""

    def test_binary_fusion(self):
        lts = lts_of(self.PAIR, comm_policy="binary")
        assert visible_labels(lts) == {"{ab}"}

    def test_encapsulation_blocks_unfused_halves(self):
        lts = lts_of(self.PAIR)
        assert all("{a}" != label_str(a) for _, a, _ in lts.transitions)

    def test_chained_fusion_needs_whole_component(self):
        # gamma chains a-b and b-c into one component {a, b, c}
        src = """
process P { P = a . delta }
process Q { Q = b . delta }
comm a, b
comm b, c
system S = block {a, b, c} in (P <> Q)
"""
        lts = lts_of(src, comm_policy="chained")
        # c is never offered: nothing can fuse, the system is stuck
        assert lts.transitions == ()

    def test_chained_fusion_fires_when_complete(self):
        src = """
process P { P = a . delta }
process Q { Q = b . delta }
process R { R = c . delta }
comm a, b
comm b, c
system S = block {a, b, c} in (P <> Q <> R)
"""
        lts = lts_of(src, comm_policy="chained")
        assert visible_labels(lts) == {"{c(a,b,c)}"}


class TestHiding:
    def test_hidden_step_is_tau(self):
        lts = lts_of("process P { P = a . delta }\n"
                     "system S = hide {a} in P")
        assert [label_str(a) for _, a, _ in lts.transitions] == ["tau"]

    def test_partially_hidden_step_keeps_residue(self):
        lts = lts_of("process P { P = a . delta || b . delta }\n"
                     "system S = hide {a} in P")
        assert "{b}" in visible_labels(lts)
        assert "{a,b}" not in visible_labels(lts)

    def test_hidden_loop_stays_finite(self):
        lts = lts_of("process P { P = hide {a} in a . P }", "P")
        assert lts.num_states <= 2
        assert all(a == () for _, a, _ in lts.transitions)


class TestShadows:
    BASE = """
process P { P = a . delta }
process Q { Q = @a . b . delta }
system S = P <> Q
"""

    def test_shadow_fuses_with_base(self):
        lts = lts_of(self.BASE)
        assert "{a}" in visible_labels(lts)

    def test_strict_policy_forbids_lone_base(self):
        lts = lts_of(self.BASE, shadow_policy="strict")
        # every a-step must carry the fusion: b is only reachable after it
        first = {label_str(a) for s, a, _ in lts.transitions if s == 0}
        assert first == {"{a}"}

    def test_loose_policy_allows_lone_base(self):
        lts = lts_of(self.BASE, shadow_policy="loose")
        assert lts.num_states > lts_of(self.BASE).num_states

    def test_standalone_shadow_never_fires(self):
        lts = lts_of("process Q { Q = @a . b . delta }", "Q")
        assert lts.transitions == ()

    def test_shadow_axiom(self):
        with_shadow = lts_of("process P { P = a . delta <> @a . delta }", "P")
        plain = lts_of("process P { P = a . delta }", "P")
        assert sc.strong_step_bisim(with_shadow, plain).holds


class TestRounds:
    RACE = """
process P { P = a . P }
process Q { Q = b . Q }
system S = P <> Q
"""

    def test_overlap_lets_components_race(self):
        lts = lts_of(self.RACE, round_mode="overlap")
        assert lts.num_states == 1  # both loop in place, no round tracking

    def test_barrier_keeps_components_in_lockstep(self):
        lts = lts_of(self.RACE, round_mode="barrier")
        # after a alone, P is one round ahead: only b (or nothing) may move
        by_src = {}
        for s, a, t in lts.transitions:
            by_src.setdefault(s, set()).add(label_str(a))
        for s, a, t in lts.transitions:
            if label_str(a) == "{a}" and s == 0:
                assert by_src[t] == {"{b}"}

    def test_barrier_allows_joint_step(self):
        lts = lts_of(self.RACE, round_mode="barrier")
        assert "{a,b}" in visible_labels(lts)


class TestErrors:
    def test_unguarded_recursion_detected(self):
        with pytest.raises(UnguardedRecursion):
            lts_of("process P { P = P }", "P")

    def test_state_budget(self):
        src = "process P { P = a . (P || P) }"
        with pytest.raises(StateBudgetExceeded):
            lts_of(src, "P", max_states=20)


class TestPruneDead:
    def test_removes_doomed_branch(self):
        lts = lts_of("process P { P = a . P + b . delta }", "P")
        pruned = prune_dead(lts)
        assert visible_labels(pruned) == {"{a}"}

    def test_initially_dead_system_flagged(self):
        pruned = prune_dead(lts_of("process P { P = delta }", "P"))
        assert pruned.initial_dead and pruned.num_states == 1

    def test_live_lts_unchanged(self):
        lts = lts_of("process P { P = a . P }", "P")
        pruned = prune_dead(lts)
        assert pruned.num_states == lts.num_states
        assert pruned.transitions == lts.transitions


class TestBundledOrchestration:
    def test_wsoa_state_count(self, ws_model):
        # entry, post-A1, five positions of the (A3.A4 || A5) diamond, post-A6
        lts = generate_lts(Var("WSOA"), ws_model,
                           Config(step_mode="interleave"))
        assert lts.num_states == 8

    def test_wsoa_diamond_commutes(self, ws_model):
        lts = generate_lts(Var("WSOA"), ws_model, Config())
        assert "{A3,A5}" in {label_str(a) for _, a, _ in lts.transitions}


class TestDeterminism:
    def test_generation_is_reproducible(self, ws_model):
        cfg = Config(round_mode="barrier")
        a = generate_lts(ws_model.systems["Sys"], ws_model, cfg)
        b = generate_lts(ws_model.systems["Sys"], ws_model, cfg)
        assert a == b
