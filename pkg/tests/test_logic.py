import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invsynth.logic import (And, Atom, EvalError, FALSE, Implies, Not, Or,
                            TRUE, Term, conj, disj, eq, eval_formula, ge,
                            gt, le, lt, nnf, substitute)

x, y, z = Term.var("x"), Term.var("y"), Term.var("z")


def test_mixed_comparison_is_false_under_small_assignment():
    f = And((lt(x, Term.const_of(5)), gt(y, Term.const_of(5))))
    assert eval_formula(f, {"x": 0, "y": 1}) is False


def test_constants_evaluate_without_bindings():
    assert eval_formula(TRUE, {}) is True
    assert eval_formula(FALSE, {}) is False


def test_sum_equality_and_sign():
    f = And((eq(x + y, z), ge(y, Term.const_of(0))))
    assert eval_formula(f, {"x": 2, "y": 1, "z": 3}) is True
    assert eval_formula(f, {"x": 2, "y": -1, "z": 1}) is False


def test_unbound_variable_is_reported_by_name():
    with pytest.raises(EvalError, match="y"):
        eval_formula(ge(y, Term.const_of(0)), {"x": 1})


def test_substitute_shifts_variable():
    f = ge(x, Term.const_of(0))
    g = substitute(f, {"x": x + Term.const_of(1)})
    assert eval_formula(g, {"x": -1}) is True
    assert eval_formula(g, {"x": -2}) is False


def test_substitute_identity_and_constant():
    f = eq(x, z)
    assert substitute(f, {}) == f
    g = substitute(gt(y, Term.const_of(0)), {"y": Term.const_of(3)})
    assert eval_formula(g, {}) is True


def test_substitution_composes_with_evaluation():
    rng = random.Random(7)
    for _ in range(300):
        f = _random_formula(rng, ["x", "y"], depth=3)
        c = rng.randint(-5, 5)
        sigma = {"y": rng.randint(-5, 5)}
        lhs = eval_formula(substitute(f, {"x": Term.const_of(c)}), sigma)
        rhs = eval_formula(f, {**sigma, "x": c})
        assert lhs == rhs


@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50))
@settings(max_examples=200, deadline=None)
def test_nnf_preserves_truth(a, b, c):
    f = Not(Implies(And((le(x, y), eq(y, z))), Or((gt(x, z), lt(z, y)))))
    sigma = {"x": a, "y": b, "z": c}
    assert eval_formula(nnf(f), sigma) == eval_formula(f, sigma)


def test_nnf_eliminates_negation_nodes():
    f = Not(Or((eq(x, y), Not(ge(x, z)))))
    g = nnf(f)

    def no_negation(node):
        if isinstance(node, Not):
            return False
        if isinstance(node, (And, Or)):
            return all(no_negation(p) for p in node.parts)
        if isinstance(node, Implies):
            return False
        return True

    assert no_negation(g)


# Differential check: the normalized evaluator against a direct interpreter
# of the sugared comparison tree it was built from.

_OPS = ["<", "<=", ">", ">=", "=="]


def _random_tree(rng, names, depth):
    if depth == 0 or rng.random() < 0.3:
        op = rng.choice(_OPS)
        lhs = _random_linear(rng, names)
        rhs = _random_linear(rng, names)
        return ("cmp", op, lhs, rhs)
    kind = rng.choice(["and", "or", "not", "imp"])
    if kind == "not":
        return ("not", _random_tree(rng, names, depth - 1))
    if kind == "imp":
        return ("imp", _random_tree(rng, names, depth - 1),
                _random_tree(rng, names, depth - 1))
    parts = [_random_tree(rng, names, depth - 1) for _ in range(rng.randint(1, 3))]
    return (kind, parts)


def _random_linear(rng, names):
    coeffs = {v: rng.randint(-3, 3) for v in names if rng.random() < 0.7}
    return (coeffs, rng.randint(-4, 4))


def _tree_to_formula(tree):
    kind = tree[0]
    if kind == "cmp":
        _, op, (lc, lk), (rc, rk) = tree
        lhs = Term.of(lc, lk)
        rhs = Term.of(rc, rk)
        return {"<": lt, "<=": le, ">": gt, ">=": ge, "==": eq}[op](lhs, rhs)
    if kind == "not":
        return Not(_tree_to_formula(tree[1]))
    if kind == "imp":
        return Implies(_tree_to_formula(tree[1]), _tree_to_formula(tree[2]))
    parts = tuple(_tree_to_formula(p) for p in tree[1])
    return And(parts) if kind == "and" else Or(parts)


def _tree_eval(tree, sigma):
    kind = tree[0]
    if kind == "cmp":
        _, op, (lc, lk), (rc, rk) = tree
        lhs = sum(c * sigma[v] for v, c in lc.items()) + lk
        rhs = sum(c * sigma[v] for v, c in rc.items()) + rk
        return {"<": lhs < rhs, "<=": lhs <= rhs, ">": lhs > rhs,
                ">=": lhs >= rhs, "==": lhs == rhs}[op]
    if kind == "not":
        return not _tree_eval(tree[1], sigma)
    if kind == "imp":
        return (not _tree_eval(tree[1], sigma)) or _tree_eval(tree[2], sigma)
    values = [_tree_eval(p, sigma) for p in tree[1]]
    return all(values) if kind == "and" else any(values)


def _random_formula(rng, names, depth):
    return _tree_to_formula(_random_tree(rng, names, depth))


def test_eval_agrees_with_reference_interpreter():
    rng = random.Random(42)
    names = ["x", "y", "z"]
    for _ in range(1000):
        tree = _random_tree(rng, names, rng.randint(0, 3))
        sigma = {v: rng.randint(-10, 10) for v in names}
        assert eval_formula(_tree_to_formula(tree), sigma) == _tree_eval(tree, sigma)


def test_conj_disj_unit_cases():
    assert conj([]) == TRUE
    assert disj([]) == FALSE
    a = ge(x, Term.const_of(0))
    assert conj([a]) == a
    assert disj([a]) == a
