import random

from invsynth.chc import ExampleClause
from invsynth.logic import And, FALSE, TRUE, Term, eq, eval_formula, ge
from invsynth.templates import INF, TemplateShape, instantiate
from invsynth.validator import Validator


def _known_solution(c1):
    x, y, z = (Term.var(v) for v in c1.variables)
    return And((eq(x + y, z), ge(y, Term.const_of(0))))


def test_known_solution_is_valid(c1):
    validator = Validator()
    try:
        sigma = {"a_1_1_1": 1, "a_1_1_2": 1, "a_1_1_3": -1,
                 "a_1_2_1": -1, "a_1_2_2": -1, "a_1_2_3": 1,
                 "a_1_3_1": 0, "a_1_3_2": 1, "a_1_3_3": 0,
                 "c_1_1": 0, "c_1_2": 0, "c_1_3": 0}
        cand = instantiate(TemplateShape((3,), INF, INF), c1.variables, sigma)
        verdict = validator.validate(c1, cand)
        assert verdict.is_valid
    finally:
        validator.close()


def test_true_fails_post_with_witnessing_negative(c1):
    validator = Validator()
    try:
        verdict = validator.validate(c1, TRUE)
    finally:
        validator.close()
    assert verdict.kind == "cex"
    assert verdict.source == "post"
    clause = verdict.clause
    assert clause.kind == "neg"
    cx, cy, cz = clause.point
    assert cy <= 0 and cx != cz  # any model of psi and not post


def test_false_fails_pre_with_witnessing_positive(c1):
    validator = Validator()
    try:
        verdict = validator.validate(c1, FALSE)
    finally:
        validator.close()
    assert verdict.kind == "cex"
    assert verdict.source == "pre"
    clause = verdict.clause
    assert clause.kind == "pos"
    cx, cy, cz = clause.point
    assert cx == 0 and cy == cz and cz >= 0


def test_counterexamples_refute_their_candidate(c1):
    validator = Validator()
    rng = random.Random(5)
    try:
        for _ in range(10):
            sigma = {f"a_1_{j}_{k}": rng.randint(-1, 1)
                     for j in (1, 2) for k in (1, 2, 3)}
            sigma.update({"c_1_1": rng.randint(-1, 1), "c_1_2": rng.randint(-1, 1)})
            cand = instantiate(TemplateShape((2,), INF, INF), c1.variables, sigma)
            verdict = validator.validate(c1, cand)
            if verdict.kind != "cex":
                continue
            assert not verdict.clause.holds_for(cand.formula, c1.variables)
    finally:
        validator.close()


def test_check_order_is_pre_then_trans_then_post(c1):
    # This candidate violates pre and post simultaneously; pre must win.
    x = Term.var("x")
    cand = ge(x, Term.const_of(1))  # excludes the initial state x=0
    validator = Validator()
    try:
        verdict = validator.validate(c1, cand)
    finally:
        validator.close()
    assert verdict.kind == "cex" and verdict.source == "pre"


def test_valid_survives_random_sampling(c1, rng):
    predicate = _known_solution(c1)
    x, y, z = c1.variables
    xp, yp, zp = c1.primed
    holds = lambda f, s: eval_formula(f, s)
    for _ in range(10_000):
        sigma = {v: rng.randint(-100, 100) for v in (x, y, z)}
        if holds(c1.pre, sigma):
            assert holds(predicate, sigma)
        if holds(predicate, sigma):
            assert holds(c1.post, sigma)
        step = dict(sigma)
        step.update({xp: rng.randint(-100, 100), yp: rng.randint(-100, 100),
                     zp: rng.randint(-100, 100)})
        if holds(c1.trans, step) and holds(predicate, sigma):
            primed_sigma = {x: step[xp], y: step[yp], z: step[zp]}
            assert holds(predicate, primed_sigma)
