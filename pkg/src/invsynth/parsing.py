"""Problem-file ingestion: the native s-expression format and SyGuS Inv-track.

Native format::

    (vars (x y z))
    (pre <formula>)
    (trans <formula>)   ; primed variables written x! etc.
    (post <formula>)

SyGuS Inv-track ``.sl`` files (v1 and v2) are accepted when the pre-f /
trans-f / post-f bodies fall inside quantifier-free linear integer
arithmetic.  Boolean ``ite`` is expanded; integer-valued ``ite``, Real
sorts, division and quantifiers are rejected as unsupported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from . import sexpr
from .chc import CHCSystem
from .logic import (And, Atom, FALSE, Formula, Implies, Not, Or, TRUE, Term,
                    eq, formula_to_smt, ge, gt, le, lt, term_to_smt)


class ParseError(Exception):
    """Structured parse failure; carries a source description when known."""

    def __init__(self, message: str, where: str | None = None) -> None:
        super().__init__(message if where is None else f"{message} ({where})")
        self.where = where


class UnsupportedFragment(ParseError):
    """Input is well-formed but outside quantifier-free LIA over Int."""


def _is_int_literal(tok: str) -> bool:
    body = tok[1:] if tok and tok[0] == "-" else tok
    return body.isdigit() and bool(body)


# --- Term and formula readers ------------------------------------------------

_BOOL_OPS = {"and", "or", "not", "=>", "ite", "let"}
_CMP_OPS = {"=", "<=", ">=", "<", ">"}
_REJECT_OPS = {"div", "mod", "abs", "/", "exists", "forall", "distinct", "select", "store"}


def parse_term(expr, variables: set[str]) -> Term:
    if isinstance(expr, str):
        if _is_int_literal(expr):
            return Term.const_of(int(expr))
        if expr in variables:
            return Term.var(expr)
        raise ParseError(f"unknown variable or literal {expr!r}")
    if not expr:
        raise ParseError("empty term")
    op = expr[0]
    if not isinstance(op, str):
        raise ParseError(f"bad term head {sexpr.to_text(op)}")
    args = expr[1:]
    if op == "+":
        acc = Term.const_of(0)
        for a in args:
            acc = acc + parse_term(a, variables)
        return acc
    if op == "-":
        if len(args) == 1:
            return parse_term(args[0], variables).scaled(-1)
        acc = parse_term(args[0], variables)
        for a in args[1:]:
            acc = acc - parse_term(a, variables)
        return acc
    if op == "*":
        terms = [parse_term(a, variables) for a in args]
        const_product = 1
        var_part: Term | None = None
        for t in terms:
            if t.is_constant():
                const_product *= t.const
            elif var_part is None:
                var_part = t
            else:
                raise UnsupportedFragment(
                    f"non-linear multiplication in {sexpr.to_text(expr)}")
        if var_part is None:
            return Term.const_of(const_product)
        return var_part.scaled(const_product)
    if op in _REJECT_OPS or op == "ite":
        raise UnsupportedFragment(f"operator {op!r} not supported in integer terms")
    raise ParseError(f"unknown term operator {op!r}")


def parse_formula(expr, variables: set[str]) -> Formula:
    if isinstance(expr, str):
        if expr == "true":
            return TRUE
        if expr == "false":
            return FALSE
        raise ParseError(f"expected a formula, found {expr!r}")
    if not expr:
        raise ParseError("empty formula")
    op = expr[0]
    if not isinstance(op, str):
        raise ParseError(f"bad formula head {sexpr.to_text(op)}")
    args = expr[1:]
    if op in _REJECT_OPS:
        raise UnsupportedFragment(f"operator {op!r} not supported")
    if op == "and":
        return And(tuple(parse_formula(a, variables) for a in args)) if args else TRUE
    if op == "or":
        return Or(tuple(parse_formula(a, variables) for a in args)) if args else FALSE
    if op == "not":
        if len(args) != 1:
            raise ParseError("not takes one argument")
        return Not(parse_formula(args[0], variables))
    if op == "=>":
        if len(args) < 2:
            raise ParseError("=> takes at least two arguments")
        out = parse_formula(args[-1], variables)
        for a in reversed(args[:-1]):
            out = Implies(parse_formula(a, variables), out)
        return out
    if op == "ite":
        # Boolean-valued ite expands to (b and t) or (not b and e).  The
        # integer-valued form would already have failed in parse_term.
        if len(args) != 3:
            raise ParseError("ite takes three arguments")
        b = parse_formula(args[0], variables)
        t = parse_formula(args[1], variables)
        e = parse_formula(args[2], variables)
        return Or((And((b, t)), And((Not(b), e))))
    if op in _CMP_OPS:
        if len(args) < 2:
            raise ParseError(f"{op} takes at least two arguments")
        terms = [parse_term(a, variables) for a in args]
        chain = []
        for lhs, rhs in zip(terms, terms[1:]):
            chain.append({"=": eq, "<=": le, ">=": ge, "<": lt, ">": gt}[op](lhs, rhs))
        return chain[0] if len(chain) == 1 else And(tuple(chain))
    raise ParseError(f"unknown formula operator {op!r}")


# --- Native format -----------------------------------------------------------

def parse_native(text: str | bytes) -> CHCSystem:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        forms = sexpr.parse_all(text)
    except sexpr.SExprError as e:
        raise ParseError(str(e)) from e
    sections: dict[str, object] = {}
    for form in forms:
        if not isinstance(form, list) or not form or not isinstance(form[0], str):
            raise ParseError(f"unexpected top-level item {sexpr.to_text(form)}")
        head = form[0]
        if head in sections:
            raise ParseError(f"duplicate section {head!r}")
        sections[head] = form
    for required in ("vars", "pre", "trans", "post"):
        if required not in sections:
            raise ParseError(f"missing ({required} ...) section")

    vars_form = sections["vars"]
    if len(vars_form) != 2 or not isinstance(vars_form[1], list):
        raise ParseError("(vars ...) takes one list of names")
    names = []
    for v in vars_form[1]:
        if not isinstance(v, str) or _is_int_literal(v) or v.endswith("!"):
            raise ParseError(f"bad variable name {sexpr.to_text(v)}")
        names.append(v)
    if not names or len(set(names)) != len(names):
        raise ParseError("variable list must be nonempty and distinct")
    primed = tuple(f"{v}!" for v in names)

    def body(section: str, allowed: set[str]) -> Formula:
        form = sections[section]
        if len(form) != 2:
            raise ParseError(f"({section} ...) takes one formula")
        try:
            return parse_formula(form[1], allowed)
        except ParseError as e:
            raise type(e)(f"in ({section} ...): {e}") from e

    state = set(names)
    return CHCSystem(
        variables=tuple(names),
        primed=primed,
        pre=body("pre", state),
        trans=body("trans", state | set(primed)),
        post=body("post", state),
    )


def print_native(chc: CHCSystem) -> str:
    lines = [
        f"(vars ({' '.join(chc.variables)}))",
        f"(pre {formula_to_smt(chc.pre)})",
        f"(trans {formula_to_smt(chc.trans)})",
        f"(post {formula_to_smt(chc.post)})",
    ]
    return "\n".join(lines) + "\n"


# --- SyGuS Inv-track ---------------------------------------------------------

@dataclass
class _DefinedFun:
    params: tuple[str, ...]
    body: object  # raw s-expression, expanded lazily


def _expand_applications(expr, funs: Mapping[str, _DefinedFun], depth: int = 0):
    """Inline applications of earlier define-funs and expand let bindings."""
    if depth > 64:
        raise ParseError("definition expansion too deep (cyclic define-fun?)")
    if isinstance(expr, str):
        return expr
    if not expr:
        return expr
    head = expr[0]
    if head == "let":
        if len(expr) != 3 or not isinstance(expr[1], list):
            raise ParseError("malformed let")
        bindings = {}
        for b in expr[1]:
            if not (isinstance(b, list) and len(b) == 2 and isinstance(b[0], str)):
                raise ParseError("malformed let binding")
            bindings[b[0]] = _expand_applications(b[1], funs, depth + 1)
        body = _expand_applications(expr[2], funs, depth + 1)
        return _substitute_sexpr(body, bindings)
    if isinstance(head, str) and head in funs:
        fn = funs[head]
        args = [_expand_applications(a, funs, depth + 1) for a in expr[1:]]
        if len(args) != len(fn.params):
            raise ParseError(f"{head} applied to {len(args)} arguments, expects {len(fn.params)}")
        return _substitute_sexpr(_expand_applications(fn.body, funs, depth + 1),
                                 dict(zip(fn.params, args)))
    return [_expand_applications(e, funs, depth + 1) for e in expr]


def _substitute_sexpr(expr, mapping: Mapping[str, object]):
    if isinstance(expr, str):
        return mapping.get(expr, expr)
    return [_substitute_sexpr(e, mapping) for e in expr]


def parse_sygus_inv(text: str | bytes) -> CHCSystem:
    """Parse a SyGuS v1/v2 Inv-track problem into a CHC system."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        forms = sexpr.parse_all(text)
    except sexpr.SExprError as e:
        raise ParseError(str(e)) from e

    inv_name: str | None = None
    inv_params: list[tuple[str, str]] = []
    defined: dict[str, _DefinedFun] = {}
    constraint: list | None = None

    for form in forms:
        if not isinstance(form, list) or not form or not isinstance(form[0], str):
            continue
        head = form[0]
        if head in ("set-logic", "check-synth", "declare-primed-var", "set-option",
                    "declare-var"):
            continue
        if head == "synth-inv":
            if len(form) < 3 or not isinstance(form[1], str) or not isinstance(form[2], list):
                raise ParseError("malformed synth-inv")
            inv_name = form[1]
            for p in form[2]:
                if not (isinstance(p, list) and len(p) == 2 and isinstance(p[0], str)):
                    raise ParseError("malformed synth-inv parameter")
                inv_params.append((p[0], p[1]))
            continue
        if head == "synth-fun":
            raise UnsupportedFragment("general synth-fun problems are not Inv-track")
        if head == "define-fun":
            if len(form) != 5 or not isinstance(form[1], str) or not isinstance(form[2], list):
                raise ParseError("malformed define-fun")
            name, params, ret, bodyexpr = form[1], form[2], form[3], form[4]
            if ret not in ("Bool", "Int"):
                raise UnsupportedFragment(f"define-fun return sort {sexpr.to_text(ret)}")
            names = []
            for p in params:
                if not (isinstance(p, list) and len(p) == 2 and isinstance(p[0], str)):
                    raise ParseError(f"malformed parameter in define-fun {name}")
                if p[1] != "Int":
                    raise UnsupportedFragment(f"parameter sort {sexpr.to_text(p[1])} in {name}")
                names.append(p[0])
            defined[name] = _DefinedFun(tuple(names), bodyexpr)
            continue
        if head == "inv-constraint":
            if len(form) != 5 or not all(isinstance(x, str) for x in form[1:]):
                raise ParseError("malformed inv-constraint")
            constraint = form
            continue
        raise ParseError(f"unsupported SyGuS command {head!r}")

    if inv_name is None:
        raise ParseError("missing synth-inv declaration")
    if constraint is None:
        raise ParseError("missing inv-constraint")
    if constraint[1] != inv_name:
        raise ParseError(f"inv-constraint names {constraint[1]!r}, expected {inv_name!r}")
    for pname, psort in inv_params:
        if psort != "Int":
            raise UnsupportedFragment(f"invariant parameter {pname} has sort {psort}")

    variables = tuple(p for p, _ in inv_params)
    primed = tuple(f"{v}!" for v in variables)

    def resolve(fun_name: str, expected_params: int, rename_to: Sequence[str]) -> Formula:
        if fun_name not in defined:
            raise ParseError(f"inv-constraint references undefined function {fun_name!r}")
        fn = defined[fun_name]
        if len(fn.params) != expected_params:
            raise ParseError(
                f"{fun_name} has {len(fn.params)} parameters, expected {expected_params}")
        others = {k: v for k, v in defined.items() if k != fun_name}
        body = _expand_applications(fn.body, others)
        body = _substitute_sexpr(body, dict(zip(fn.params, rename_to)))
        try:
            return parse_formula(body, set(rename_to))
        except ParseError as e:
            raise type(e)(f"in {fun_name}: {e}") from e

    arity = len(variables)
    return CHCSystem(
        variables=variables,
        primed=primed,
        pre=resolve(constraint[2], arity, variables),
        trans=resolve(constraint[3], 2 * arity, list(variables) + list(primed)),
        post=resolve(constraint[4], arity, variables),
    )


def parse_problem_file(path: str) -> CHCSystem:
    """Dispatch on extension: .sl is SyGuS, anything else is native."""
    with open(path, "rb") as fh:
        data = fh.read()
    import os
    name = os.path.splitext(os.path.basename(path))[0]
    if path.endswith(".sl"):
        system = parse_sygus_inv(data)
    else:
        system = parse_native(data)
    return CHCSystem(system.variables, system.primed, system.pre, system.trans,
                     system.post, name=name)


# --- Witness files -----------------------------------------------------------

def print_witness(chc: CHCSystem, predicate: Formula, fun_name: str = "inv-f") -> str:
    params = " ".join(f"({v} Int)" for v in chc.variables)
    return f"(define-fun {fun_name} ({params}) Bool {formula_to_smt(predicate)})\n"


def parse_witness(text: str | bytes, chc: CHCSystem) -> Formula:
    """Read a (define-fun name ((x Int) ...) Bool body) witness for ``chc``."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        forms = sexpr.parse_all(text)
    except sexpr.SExprError as e:
        raise ParseError(str(e)) from e
    if len(forms) != 1 or not isinstance(forms[0], list) or forms[0][:1] != ["define-fun"]:
        raise ParseError("witness must be a single define-fun")
    form = forms[0]
    if len(form) != 5 or form[3] != "Bool":
        raise ParseError("witness must be a Bool-valued define-fun")
    params = []
    for p in form[2]:
        if not (isinstance(p, list) and len(p) == 2 and p[1] == "Int"):
            raise ParseError("witness parameters must be (name Int) pairs")
        params.append(p[0])
    if len(params) != chc.arity:
        raise ParseError(
            f"witness has {len(params)} parameters, problem arity is {chc.arity}")
    body = _substitute_sexpr(form[4], dict(zip(params, chc.variables)))
    return parse_formula(body, set(chc.variables))
