import pytest

from conftest import mini_path

from invsynth.chc import CHCSystem, ExampleClause, ExampleInstance
from invsynth.logic import And, Atom, eval_formula
from invsynth.parsing import (ParseError, UnsupportedFragment, parse_native,
                              parse_sygus_inv, parse_witness, print_native,
                              print_witness)


def test_bundled_c1_matches_the_three_clause_loop(c1):
    assert c1.arity == 3
    assert c1.variables == ("x", "y", "z")
    # pre holds exactly on x=0, y=z, z>=0
    assert eval_formula(c1.pre, {"x": 0, "y": 4, "z": 4})
    assert not eval_formula(c1.pre, {"x": 1, "y": 4, "z": 4})
    assert not eval_formula(c1.pre, {"x": 0, "y": 3, "z": 4})
    assert not eval_formula(c1.pre, {"x": 0, "y": -1, "z": -1})
    # trans steps x up and y down while y > 0
    sigma = {"x": 0, "y": 2, "z": 2, "x!": 1, "y!": 1, "z!": 2}
    assert eval_formula(c1.trans, sigma)
    assert not eval_formula(c1.trans, {**sigma, "y": 0, "y!": -1})
    # post: y <= 0 implies x = z
    assert eval_formula(c1.post, {"x": 2, "y": 1, "z": 5})
    assert not eval_formula(c1.post, {"x": 2, "y": 0, "z": 5})


def test_sygus_and_native_encodings_agree(c1):
    with open(mini_path("c1.sl"), "rb") as fh:
        sygus = parse_sygus_inv(fh.read())
    assert sygus.variables == c1.variables
    for sigma in [{"x": 0, "y": 3, "z": 3}, {"x": 1, "y": 3, "z": 3}]:
        assert eval_formula(sygus.pre, sigma) == eval_formula(c1.pre, sigma)
    for point in [(0, 2, 2, 1, 1, 2), (0, 2, 2, 5, 1, 2), (1, 0, 1, 2, -1, 1)]:
        sigma = dict(zip(("x", "y", "z", "x!", "y!", "z!"), point))
        assert eval_formula(sygus.trans, sigma) == eval_formula(c1.trans, sigma)


def test_minimal_arity_one_problem():
    text = """
    (set-logic LIA)
    (synth-inv inv-f ((x Int)))
    (define-fun pre-f ((x Int)) Bool (= x 0))
    (define-fun trans-f ((x Int) (x! Int)) Bool (and (< x 10) (= x! (+ x 1))))
    (define-fun post-f ((x Int)) Bool (<= x 10))
    (inv-constraint inv-f pre-f trans-f post-f)
    (check-synth)
    """
    chc = parse_sygus_inv(text)
    assert chc.arity == 1
    assert chc.primed == ("x!",)


def test_real_sort_is_rejected():
    text = """
    (set-logic LRA)
    (synth-inv inv-f ((x Real)))
    (define-fun pre-f ((x Real)) Bool (= x 0))
    (define-fun trans-f ((x Real) (x! Real)) Bool (= x! x))
    (define-fun post-f ((x Real)) Bool true)
    (inv-constraint inv-f pre-f trans-f post-f)
    """
    with pytest.raises(UnsupportedFragment):
        parse_sygus_inv(text)


def test_nonlinear_multiplication_is_rejected():
    text = "(vars (x y)) (pre (= (* x y) 0)) (trans (= x! x)) (post true)"
    with pytest.raises(UnsupportedFragment):
        parse_native(text)


def test_boolean_ite_expands():
    text = """
    (set-logic LIA)
    (synth-inv inv-f ((x Int)))
    (define-fun pre-f ((x Int)) Bool (ite (> x 0) (= x 1) (= x 0)))
    (define-fun trans-f ((x Int) (x! Int)) Bool (= x! x))
    (define-fun post-f ((x Int)) Bool (>= x 0))
    (inv-constraint inv-f pre-f trans-f post-f)
    """
    chc = parse_sygus_inv(text)
    assert eval_formula(chc.pre, {"x": 1})
    assert eval_formula(chc.pre, {"x": 0})
    assert not eval_formula(chc.pre, {"x": 2})
    assert not eval_formula(chc.pre, {"x": -1})


def test_helper_definitions_are_inlined():
    text = """
    (set-logic LIA)
    (synth-inv inv-f ((x Int)))
    (define-fun small ((v Int)) Bool (<= v 5))
    (define-fun pre-f ((x Int)) Bool (and (small x) (>= x 0)))
    (define-fun trans-f ((x Int) (x! Int)) Bool (= x! x))
    (define-fun post-f ((x Int)) Bool (small x))
    (inv-constraint inv-f pre-f trans-f post-f)
    """
    chc = parse_sygus_inv(text)
    assert eval_formula(chc.pre, {"x": 5})
    assert not eval_formula(chc.pre, {"x": 6})


def test_undeclared_variable_in_trans_fails():
    text = "(vars (x)) (pre (= x 0)) (trans (= y! y)) (post true)"
    with pytest.raises(ParseError):
        parse_native(text)


def test_native_round_trip_is_fixpoint(c1):
    printed = print_native(c1)
    again = parse_native(printed)
    assert again.variables == c1.variables
    assert again.pre == c1.pre
    assert again.trans == c1.trans
    assert again.post == c1.post
    assert print_native(again) == printed


def test_witness_round_trip(c1):
    from invsynth.logic import Term, eq as eq_, ge as ge_, And
    predicate = And((eq_(Term.var("x") + Term.var("y"), Term.var("z")),
                     ge_(Term.var("y"), Term.const_of(0))))
    text = print_witness(c1, predicate)
    back = parse_witness(text, c1)
    for sigma in [{"x": 1, "y": 1, "z": 2}, {"x": 1, "y": -1, "z": 0}]:
        assert eval_formula(back, sigma) == eval_formula(predicate, sigma)


def test_witness_arity_mismatch(c1):
    with pytest.raises(ParseError):
        parse_witness("(define-fun inv-f ((x Int)) Bool true)", c1)


def test_example_instance_deduplicates():
    inst = ExampleInstance()
    a = ExampleClause.positive((1, 2))
    assert inst.add(a) is True
    assert inst.add(ExampleClause.positive((1, 2))) is False
    assert inst.add(ExampleClause.negative((1, 2))) is True
    assert len(inst) == 2


def test_chc_rejects_misplaced_variables():
    from invsynth.logic import TRUE, ge as ge_, Term
    with pytest.raises(ValueError):
        CHCSystem(("x",), ("x!",), ge_(Term.var("y"), Term.const_of(0)), TRUE, TRUE)
