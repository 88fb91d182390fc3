import itertools
import random
import time

import numpy as np
import pytest

from conftest import mini_path

from invsynth.backend import Sat, Unsat
from invsynth.chc import ExampleClause, ExampleInstance
from invsynth.engine import (CegisEngine, ConcreteState, EngineConfig,
                             detect_unsat, run_cegis)
from invsynth.parsing import parse_problem_file
from invsynth.policies import Action, ExpertPolicy
from invsynth.validator import ValidationOutcome


def test_detect_unsat_direct_conflict():
    assert detect_unsat([ExampleClause.positive((0,)),
                         ExampleClause.negative((0,))]) is True


def test_detect_unsat_propagation_chain():
    assert detect_unsat([ExampleClause.positive((0,)),
                         ExampleClause.implication((0,), (1,)),
                         ExampleClause.negative((1,))]) is True


def test_detect_unsat_distinct_points_are_fine():
    assert detect_unsat([ExampleClause.positive((0,)),
                         ExampleClause.negative((1,))]) is False


def _brute_force_consistent(clauses) -> bool:
    atoms = sorted({pt for c in clauses for pt in c.points()})
    index = {pt: i for i, pt in enumerate(atoms)}
    n = len(atoms)
    labelings = np.arange(1 << n, dtype=np.uint32)
    ok = np.ones(1 << n, dtype=bool)

    def bit(pt):
        return (labelings >> index[pt]) & 1

    for c in clauses:
        if c.kind == "pos":
            ok &= bit(c.point) == 1
        elif c.kind == "neg":
            ok &= bit(c.point) == 0
        else:
            ok &= (bit(c.point) == 0) | (bit(c.point2) == 1)
    return bool(ok.any())


def test_detect_unsat_agrees_with_propositional_brute_force(rng):
    for _ in range(100):
        n_atoms = rng.randint(1, 12)
        points = [(i,) for i in range(n_atoms)]
        clauses = []
        for _ in range(rng.randint(1, 18)):
            kind = rng.randrange(3)
            if kind == 0:
                clauses.append(ExampleClause.positive(rng.choice(points)))
            elif kind == 1:
                clauses.append(ExampleClause.negative(rng.choice(points)))
            else:
                clauses.append(ExampleClause.implication(
                    rng.choice(points), rng.choice(points)))
        assert detect_unsat(clauses) == (not _brute_force_consistent(clauses))


# --- scripted-backend engine behavior -----------------------------------------

class _ScriptedSynth:
    def __init__(self, results):
        self.results = list(results)

    def check_sat(self, constraint, timeout_s):
        if not self.results:
            from invsynth.backend import Unknown
            return Unknown("solver-error", "script exhausted")
        return self.results.pop(0)

    def close(self):
        pass


class _ScriptedValidator:
    def __init__(self, clauses):
        self.clauses = list(clauses)

    def validate(self, chc, cand, timeout_s):
        return ValidationOutcome("cex", self.clauses.pop(0), "post")

    def close(self):
        pass


class _CapturePolicy:
    def __init__(self):
        self.seen = []

    def begin_episode(self):
        pass

    def decide(self, state: ConcreteState):
        self.seen.append(state)
        return Action((1, 0, 0, 0), 0, 0)


def test_observed_state_reflects_core_and_candidate_count(tiny_chc):
    policy = _CapturePolicy()
    synth = _ScriptedSynth([
        Sat({"a_1_1_1": 1, "c_1_1": 0}),
        Sat({"a_1_1_1": -1, "c_1_1": 0}),
        Unsat(frozenset({"P:1:1"})),
        Unsat(frozenset({"E:0"})),
        Unsat(frozenset()),
    ])
    validator = _ScriptedValidator([
        ExampleClause.negative((3,)),
        ExampleClause.negative((4,)),
    ])
    cfg = EngineConfig(policy=policy, total_timeout_s=10.0)
    engine = CegisEngine(tiny_chc, cfg, synth_handle=synth, validator=validator)
    try:
        outcome = engine.run()
    finally:
        engine.close()
    # Two candidates tried, then an unsat core naming the coefficient budget.
    first = policy.seen[0]
    assert first.shape.conjuncts == (1,)
    assert first.coeff_bound_in_core is True
    assert first.const_bound_in_core is False
    assert first.candidates_since_change == 2
    # Template changed; core with only example labels clears both flags and
    # the candidate counter starts over.
    second = policy.seen[1]
    assert second.coeff_bound_in_core is False
    assert second.const_bound_in_core is False
    assert second.candidates_since_change == 0
    assert outcome.kind == "timeout"  # script ran dry of Sat results


@pytest.fixture()
def tiny_chc():
    return parse_problem_file(mini_path("nonneg.chc"))


def test_end_to_end_expert_solves_and_traces(c1):
    cfg = EngineConfig(policy=ExpertPolicy(), total_timeout_s=60.0)
    outcome = run_cegis(c1, cfg)
    assert outcome.kind == "sat"
    assert outcome.candidate is not None
    # every merged counterexample is refuted by the candidate of its round,
    # so the final candidate satisfies all accumulated examples
    for clause in outcome.examples:
        assert clause.holds_for(outcome.candidate.formula, c1.variables)
    assert all(step.reward <= 0 for step in outcome.trace)


def test_unsat_toy_is_detected():
    chc = parse_problem_file(mini_path("unsat_toy.chc"))
    cfg = EngineConfig(policy=ExpertPolicy(), total_timeout_s=30.0)
    outcome = run_cegis(chc, cfg)
    assert outcome.kind == "unsat"
    assert detect_unsat(outcome.examples)


def test_zero_budget_times_out_with_trivial_trace(c1):
    cfg = EngineConfig(policy=ExpertPolicy(), total_timeout_s=0.0)
    outcome = run_cegis(c1, cfg)
    assert outcome.kind == "timeout"
    assert len(outcome.trace) <= 1


def test_examples_grow_monotonically(c1):
    lengths = []

    class Spy(ExpertPolicy):
        def decide(self, state):
            lengths.append(state)
            return super().decide(state)

    outcome = run_cegis(c1, EngineConfig(policy=Spy(), total_timeout_s=60.0))
    assert outcome.kind == "sat"
    assert len(set(outcome.examples)) == len(outcome.examples)


def test_policy_failure_is_an_error_outcome(tiny_chc):
    class Broken:
        def begin_episode(self):
            pass

        def decide(self, state):
            raise ConnectionError("remote gone")

    chc = parse_problem_file(mini_path("eq_pair.chc"))
    outcome = run_cegis(chc, EngineConfig(policy=Broken(), total_timeout_s=30.0))
    assert outcome.kind == "error"
    assert "remote gone" in outcome.diagnostic


def test_reward_telescoping_single_run():
    chc = parse_problem_file(mini_path("eq_pair.chc"))
    outcome = run_cegis(chc, EngineConfig(policy=ExpertPolicy(), total_timeout_s=30.0))
    assert outcome.kind == "sat"
    if outcome.first_decision_s is None:
        assert outcome.total_reward == 0.0
        return
    window = outcome.wall_time_s - outcome.first_decision_s
    assert abs(outcome.total_reward + window) <= max(0.05 * window, 0.05)
