import os
import random
import stat
import sys
import textwrap

import pytest

from invsynth.backend import (LabeledConstraint, RangeTooLarge, Sat,
                              SolverHandle, Unknown, Unsat,
                              brute_force_search)
from invsynth.chc import ExampleClause, ExampleInstance
from invsynth.logic import Atom, Term, ge, le
from invsynth.templates import TemplateShape, build_constraint, slack_bounds, ParamLayout

a = Term.var("a")


def test_contradictory_pair_yields_core(shared_handle):
    constraint = LabeledConstraint.of([
        ("a", ge(a, Term.const_of(1))),
        ("b", le(a, Term.const_of(0))),
    ])
    result = shared_handle.check_sat(constraint)
    assert isinstance(result, Unsat)
    assert result.core <= {"a", "b"}
    assert result.core  # an empty core would certify nothing


def test_satisfiable_single_clause(shared_handle):
    constraint = LabeledConstraint.of([("a", ge(a, Term.const_of(1)))])
    result = shared_handle.check_sat(constraint)
    assert isinstance(result, Sat)
    assert result.model["a"] >= 1


def test_smallest_template_with_one_pos_one_neg(shared_handle):
    shape = TemplateShape((1,), 1, 0)
    examples = ExampleInstance([ExampleClause.positive((0,)),
                                ExampleClause.negative((1,))])
    constraint = build_constraint(shape, 1, examples)
    # Independent oracle: exhaustive search over the bounded parameters.
    bounds = slack_bounds(ParamLayout.of(shape, 1))
    expected = brute_force_search(constraint, bounds)
    assert expected is not None  # the coefficient -1, constant 0 family
    assert expected["a_1_1_1"] == -1 and expected["c_1_1"] == 0
    result = shared_handle.check_sat(constraint)
    assert isinstance(result, Sat)
    assert result.model["a_1_1_1"] == -1 and result.model["c_1_1"] == 0


def test_brute_force_refutes_contradiction():
    constraint = LabeledConstraint.of([
        ("a", ge(a, Term.const_of(1))),
        ("b", le(a, Term.const_of(0))),
    ])
    assert brute_force_search(constraint, {"a": (-3, 3)}) is None


def test_brute_force_empty_clause_list_returns_first_assignment():
    constraint = LabeledConstraint.of([])
    assert brute_force_search(constraint, {}) == {}
    with_params = LabeledConstraint.of([("t", ge(a, Term.const_of(-9)))])
    found = brute_force_search(with_params, {"a": (-2, 2)})
    assert found == {"a": -2}  # lexicographically first


def test_brute_force_guards_range_explosion():
    clauses = [(f"c{i}", ge(Term.var(f"v{i}"), Term.const_of(0))) for i in range(9)]
    constraint = LabeledConstraint.of(clauses)
    bounds = {f"v{i}": (-50, 50) for i in range(9)}
    with pytest.raises(RangeTooLarge):
        brute_force_search(constraint, bounds)


def test_labels_must_be_unique():
    with pytest.raises(ValueError):
        LabeledConstraint.of([("a", ge(a, Term.const_of(0))),
                              ("a", le(a, Term.const_of(3)))])


def test_oracle_agreement_on_random_instances(shared_handle, rng):
    shapes = [TemplateShape((2,), 1, 1), TemplateShape((1, 1), 1, 1)]
    for trial in range(60):
        shape = shapes[trial % len(shapes)]
        arity = rng.randint(1, 2)
        examples = ExampleInstance()
        for _ in range(rng.randint(1, 6)):
            kind = rng.randrange(3)
            pt = tuple(rng.randint(-2, 2) for _ in range(arity))
            if kind == 0:
                examples.add(ExampleClause.positive(pt))
            elif kind == 1:
                examples.add(ExampleClause.negative(pt))
            else:
                pt2 = tuple(rng.randint(-2, 2) for _ in range(arity))
                examples.add(ExampleClause.implication(pt, pt2))
        constraint = build_constraint(shape, arity, examples)
        bounds = slack_bounds(ParamLayout.of(shape, arity))
        expected = brute_force_search(constraint, bounds)
        result = shared_handle.check_sat(constraint)
        assert not isinstance(result, Unknown), f"trial {trial} went unknown"
        assert isinstance(result, Sat) == (expected is not None), (
            f"trial {trial}: solver and oracle disagree on {shape.describe()}")
        if isinstance(result, Sat):
            assert constraint.holds_under(result.model)


def _fake_solver(tmp_path, body: str) -> list[str]:
    script = tmp_path / "fake_solver.py"
    script.write_text(textwrap.dedent(body))
    return [sys.executable, str(script)]


def test_watchdog_kills_stalled_solver(tmp_path):
    command = _fake_solver(tmp_path, """
        import sys, time
        for line in sys.stdin:
            if "check-sat" in line:
                time.sleep(60)
    """)
    handle = SolverHandle(command)
    try:
        result = handle.check_sat(
            LabeledConstraint.of([("a", ge(a, Term.const_of(0)))]), timeout_s=0.3)
    finally:
        handle.close()
    assert isinstance(result, Unknown)
    assert result.reason == "timeout"


def test_crashing_solver_reports_stderr(tmp_path):
    command = _fake_solver(tmp_path, """
        import sys
        print("boom, cannot solve", file=sys.stderr)
        sys.exit(3)
    """)
    handle = SolverHandle(command)
    try:
        result = handle.check_sat(
            LabeledConstraint.of([("a", ge(a, Term.const_of(0)))]), timeout_s=1.0)
    finally:
        handle.close()
    assert isinstance(result, Unknown)


def test_gibberish_reply_is_a_solver_error(tmp_path):
    command = _fake_solver(tmp_path, """
        import sys
        for line in sys.stdin:
            if "check-sat" in line:
                print("maybe")
                sys.stdout.flush()
    """)
    handle = SolverHandle(command)
    try:
        result = handle.check_sat(
            LabeledConstraint.of([("a", ge(a, Term.const_of(0)))]), timeout_s=1.0)
    finally:
        handle.close()
    assert isinstance(result, Unknown)
    assert result.reason == "solver-error"


def test_model_is_completed_and_rechecked(shared_handle):
    # v barely constrains anything; the backend must still assign it.
    from invsynth.logic import Or
    constraint = LabeledConstraint.of([
        ("a", ge(a, Term.const_of(2))),
        ("free", Or((ge(Term.var("v"), Term.const_of(0)),
                     le(Term.var("v"), Term.const_of(0))))),
    ])
    result = shared_handle.check_sat(constraint)
    assert isinstance(result, Sat)
    assert "v" in result.model
    assert constraint.holds_under(result.model)
