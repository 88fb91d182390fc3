"""Acceptance gate: one test per criterion, one printed line per verdict.

The learning-effectiveness check trains a fresh value table and is by far
the slowest item (marked ``slow`` for selection, but part of the default
run).
"""

import glob
import os
import random
import time

import pytest

from conftest import MINI_DIR, TRAIN_DIR, mini_path

from invsynth.backend import Sat, SolverPool, Unknown, brute_force_search
from invsynth.chc import ExampleClause, ExampleInstance
from invsynth.engine import ConcreteState, EngineConfig, detect_unsat, run_cegis
from invsynth.mc import TrainConfig, train
from invsynth.parsing import parse_problem_file, parse_witness, print_witness
from invsynth.policies import (ExpertPolicy, QTable, RandomPolicy, TablePolicy,
                               epsilon_greedy)
from invsynth.templates import (INF, ParamLayout, TemplateShape,
                                build_constraint, slack_bounds)
from invsynth.validator import Validator


def _verdict(name: str, ok: bool, detail: str = "") -> None:
    print(f"\nACCEPTANCE {'PASS' if ok else 'FAIL'}: {name} {detail}".rstrip())
    assert ok, f"{name}: {detail}"


def _mini_problems():
    files = sorted(glob.glob(os.path.join(MINI_DIR, "*")))
    return [(os.path.basename(p), parse_problem_file(p)) for p in files]


def test_soundness_suite_every_sat_witness_revalidates():
    started = time.monotonic()
    pool = SolverPool()
    validator = Validator()
    solved = checked = 0
    outcomes = {}
    try:
        for name, chc in _mini_problems():
            outcome = run_cegis(chc, EngineConfig(policy=ExpertPolicy(),
                                                  total_timeout_s=60.0), pool=pool)
            outcomes[name] = outcome.kind
            if outcome.kind == "sat":
                solved += 1
                verdict = validator.validate(chc, outcome.candidate, 10.0)
                assert verdict.is_valid, f"{name}: witness failed revalidation"
                checked += 1
    finally:
        validator.close()
        pool.close_all()
    took = time.monotonic() - started
    ok = checked == solved and solved >= 8 and took < 300
    _verdict("soundness-suite", ok,
             f"({checked}/{solved} sat witnesses revalidated, "
             f"{sum(1 for k in outcomes.values() if k == 'unsat')} unsat, "
             f"{took:.0f}s; outcomes {outcomes})")


def test_three_variable_loop_end_to_end(c1):
    started = time.monotonic()
    outcome = run_cegis(c1, EngineConfig(policy=ExpertPolicy(),
                                         total_timeout_s=60.0))
    took = time.monotonic() - started
    assert outcome.kind == "sat" and took < 60.0, (
        f"expected sat within 60s, got {outcome.kind} after {took:.1f}s")
    validator = Validator()
    try:
        verdict = validator.validate(c1, outcome.candidate, 10.0)
        assert verdict.is_valid
        # the textbook solution is accepted by the same checker
        known = parse_witness(
            "(define-fun inv-f ((x Int) (y Int) (z Int)) Bool"
            " (and (= (+ x y) z) (>= y 0)))", c1)
        assert validator.validate(c1, known, 10.0).is_valid
    finally:
        validator.close()
    _verdict("eq1-end-to-end", True,
             f"(solved in {took:.1f}s, witness and textbook solution validate)")


def test_oracle_equivalence_on_200_instances(shared_handle):
    rng = random.Random(1234)
    started = time.monotonic()
    shapes = [TemplateShape((1,), 1, 1), TemplateShape((2,), 1, 1),
              TemplateShape((1, 1), 1, 1), TemplateShape((1,), 2, 1)]
    agreements = 0
    for trial in range(200):
        shape = shapes[trial % len(shapes)]
        arity = 1 + trial % 2
        examples = ExampleInstance()
        for _ in range(rng.randint(1, 6)):
            kind = rng.randrange(3)
            pt = tuple(rng.randint(-2, 2) for _ in range(arity))
            if kind == 0:
                examples.add(ExampleClause.positive(pt))
            elif kind == 1:
                examples.add(ExampleClause.negative(pt))
            else:
                examples.add(ExampleClause.implication(
                    pt, tuple(rng.randint(-2, 2) for _ in range(arity))))
        constraint = build_constraint(shape, arity, examples)
        expected = brute_force_search(
            constraint, slack_bounds(ParamLayout.of(shape, arity)))
        result = shared_handle.check_sat(constraint, timeout_s=15.0)
        assert not isinstance(result, Unknown), f"trial {trial} unknown"
        assert isinstance(result, Sat) == (expected is not None), (
            f"trial {trial} disagrees on {shape.describe()}: "
            f"solver={type(result).__name__}, oracle={expected}")
        agreements += 1
    took = time.monotonic() - started
    _verdict("oracle-equivalence", agreements == 200 and took < 120,
             f"(200/200 agreements in {took:.0f}s)")


def test_expert_heuristic_reproduces_hand_derived_sequences():
    def drive(start, cores):
        """Run the expert over a scripted unsat-core stream; returns the
        (disjuncts, conjuncts, coeff budget, const budget) sequence."""
        policy = ExpertPolicy()
        policy.begin_episode()
        shape = start
        seen = []
        for core in cores:
            state = ConcreteState(
                shape,
                any(l.startswith("P:") for l in core),
                any(l.startswith("Q:") for l in core),
                0, 0.0)
            shape = policy.decide(state).apply(shape)
            seen.append((shape.disjuncts, shape.conjuncts[0],
                         shape.coeff_bound, shape.const_bound))
        return seen

    # both budgets named: conjunct growth first, both budgets bump
    s1 = drive(TemplateShape((1,), 1, 0), [{"P:1:1", "Q:1:1"}])
    assert s1 == [(1, 2, 2, 1)], s1

    # alternation reaches disjunct growth; constant budget at 3 jumps to inf
    s2 = drive(TemplateShape((1,), 1, 0),
               [{"P:1:1", "Q:1:1"}, {"Q:1:1"}, {"Q:1:2"}, {"Q:2:1"}])
    assert s2 == [(1, 2, 2, 1), (2, 2, 2, 2), (2, 3, 2, 3), (3, 3, 2, INF)], s2

    # cores without budget labels only alternate the grid
    s3 = drive(TemplateShape((1,), 1, 0), [{"E:0"}, {"E:1"}, set()])
    assert s3 == [(1, 2, 1, 0), (2, 2, 1, 0), (2, 3, 1, 0)], s3

    _verdict("expert-heuristic-trace", True,
             "(hand-derived growth sequences match exactly)")


def test_mc_control_matches_value_iteration_on_chain():
    from test_mc import (CHAIN_ACTIONS, CHAIN_LENGTH, CHAIN_REWARD, FAST,
                         chain_episode, chain_value_iteration)
    cfg = TrainConfig(epsilon=0.05, gamma=1.0, epochs=500, seed=11)
    table, _ = train([("chain", None)], cfg, episode_runner=chain_episode)
    optimal = chain_value_iteration()
    rollout = 0.0
    for state in range(CHAIN_LENGTH):
        pick = epsilon_greedy(table, f"chain{state}", CHAIN_ACTIONS, 0.0,
                              random.Random(0))
        assert pick is FAST, f"greedy policy suboptimal at chain{state}"
        rollout += CHAIN_REWARD[pick]
    gap = abs(rollout - optimal[0])
    _verdict("mc-chain-sanity", gap < 1e-6,
             f"(greedy value {rollout}, optimum {optimal[0]})")


def test_reward_telescoping_over_twenty_runs():
    pool = SolverPool()
    names = ["eq_pair.chc", "count_up.chc", "shift.chc", "gap.chc", "guard.sl"]
    problems = [parse_problem_file(mini_path(n)) for n in names]
    worst = 0.0
    runs = 0
    try:
        for round_idx in range(4):
            for chc in problems:
                outcome = run_cegis(chc, EngineConfig(
                    policy=ExpertPolicy(), total_timeout_s=30.0), pool=pool)
                runs += 1
                if outcome.first_decision_s is None:
                    assert outcome.total_reward == 0.0
                    continue
                window = outcome.wall_time_s - outcome.first_decision_s
                gap = abs(outcome.total_reward + window)
                allowed = max(0.05 * window, 0.05)
                assert gap <= allowed, (
                    f"{chc.name}: rewards {outcome.total_reward:.3f} vs "
                    f"window {window:.3f} (gap {gap:.3f} > {allowed:.3f})")
                worst = max(worst, gap)
    finally:
        pool.close_all()
    _verdict("reward-telescoping", runs == 20,
             f"(20 runs, worst gap {worst * 1000:.1f} ms)")


def test_unsat_detection_examples_and_cross_check(rng):
    from test_engine import _brute_force_consistent
    assert detect_unsat([ExampleClause.positive((0,)),
                         ExampleClause.negative((0,))])
    assert detect_unsat([ExampleClause.positive((0,)),
                         ExampleClause.implication((0,), (1,)),
                         ExampleClause.negative((1,))])
    assert not detect_unsat([ExampleClause.positive((0,)),
                             ExampleClause.negative((1,))])
    agree = 0
    for _ in range(100):
        n_atoms = rng.randint(1, 20)
        points = [(i,) for i in range(n_atoms)]
        clauses = []
        for _ in range(rng.randint(1, 2 * n_atoms)):
            kind = rng.randrange(3)
            if kind == 0:
                clauses.append(ExampleClause.positive(rng.choice(points)))
            elif kind == 1:
                clauses.append(ExampleClause.negative(rng.choice(points)))
            else:
                clauses.append(ExampleClause.implication(
                    rng.choice(points), rng.choice(points)))
        assert detect_unsat(clauses) == (not _brute_force_consistent(clauses))
        agree += 1
    _verdict("unsat-detection", agree == 100,
             "(3 worked examples plus 100/100 brute-force agreements)")


@pytest.mark.slow
def test_learning_effectiveness_mc_vs_random():
    started = time.monotonic()
    files = sorted(glob.glob(os.path.join(TRAIN_DIR, "*")))
    assert len(files) >= 25
    problems = [(os.path.basename(p), parse_problem_file(p)) for p in files]
    cfg = TrainConfig(epochs=20, episode_timeout_s=10.0, seed=7, jobs=3)
    table, report = train(problems, cfg)

    minis = _mini_problems()
    pool = SolverPool()
    per_seed = {}
    try:
        for seed in range(5):
            scores = {}
            for label in ("mc", "random"):
                rng_eval = random.Random(seed)
                solved = 0
                total_time = 0.0
                for name, chc in minis:
                    if label == "mc":
                        policy = TablePolicy(table, epsilon=0.0, rng=rng_eval)
                    else:
                        policy = RandomPolicy(rng_eval)
                    outcome = run_cegis(chc, EngineConfig(
                        policy=policy, total_timeout_s=60.0), pool=pool)
                    solved += outcome.kind in ("sat", "unsat")
                    total_time += outcome.wall_time_s
                scores[label] = (solved, total_time)
            per_seed[seed] = scores
    finally:
        pool.close_all()

    mc_total = sum(per_seed[s]["mc"][0] for s in per_seed)
    rnd_total = sum(per_seed[s]["random"][0] for s in per_seed)
    strictly_better = 0
    for seed, scores in per_seed.items():
        mc_solved, mc_time = scores["mc"]
        rnd_solved, rnd_time = scores["random"]
        if mc_solved > rnd_solved or (mc_solved == rnd_solved and mc_time < rnd_time):
            strictly_better += 1
    took = time.monotonic() - started
    detail = (f"(mc {mc_total} vs random {rnd_total} solved over 5 seeds, "
              f"strictly better on {strictly_better}/5, {took / 60:.0f} min; "
              + "; ".join(f"s{s}: mc {v['mc'][0]}/{v['mc'][1]:.0f}s "
                          f"rnd {v['random'][0]}/{v['random'][1]:.0f}s"
                          for s, v in per_seed.items()) + ")")
    ok = mc_total >= rnd_total and strictly_better >= 3 and took <= 7200
    _verdict("learning-effectiveness", ok, detail)
