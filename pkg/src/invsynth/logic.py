"""Quantifier-free linear integer arithmetic: terms, formulas, evaluation.

Comparisons are normalized at construction time to the two atom kinds
``t >= 0`` and ``t = 0`` (over the integers, ``a < b`` is ``b - a - 1 >= 0``
and so on).  Pretty-printers may re-sugar; the internal form is canonical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

VarAssignment = Mapping[str, int]


class EvalError(Exception):
    """A formula was evaluated under an assignment missing a variable."""


@dataclass(frozen=True)
class Term:
    """Linear combination ``sum(coeff * var) + const`` with integer coefficients.

    An integer constant is a Term with no coefficients; a bare variable is a
    Term with a single coefficient of 1.
    """

    coeffs: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @staticmethod
    def of(coeffs: Mapping[str, int] | Iterable[tuple[str, int]] = (), const: int = 0) -> "Term":
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        merged: dict[str, int] = {}
        for v, c in items:
            merged[v] = merged.get(v, 0) + c
        return Term(tuple(sorted((v, c) for v, c in merged.items() if c != 0)), const)

    @staticmethod
    def const_of(value: int) -> "Term":
        return Term((), value)

    @staticmethod
    def var(name: str) -> "Term":
        return Term(((name, 1),), 0)

    def __add__(self, other: "Term") -> "Term":
        return Term.of(list(self.coeffs) + list(other.coeffs), self.const + other.const)

    def __sub__(self, other: "Term") -> "Term":
        return self + other.scaled(-1)

    def scaled(self, k: int) -> "Term":
        return Term.of([(v, c * k) for v, c in self.coeffs], self.const * k)

    def variables(self) -> set[str]:
        return {v for v, _ in self.coeffs}

    def is_constant(self) -> bool:
        return not self.coeffs

    def evaluate(self, sigma: VarAssignment) -> int:
        total = self.const
        for v, c in self.coeffs:
            if v not in sigma:
                raise EvalError(f"unbound variable {v!r}")
            total += c * sigma[v]
        return total

    def substitute(self, mapping: Mapping[str, "Term"]) -> "Term":
        acc = Term.const_of(self.const)
        for v, c in self.coeffs:
            repl = mapping.get(v)
            acc = acc + (repl.scaled(c) if repl is not None else Term.of({v: c}))
        return acc


# --- Formula nodes -----------------------------------------------------------

@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    """``term >= 0`` when op is \">=\", ``term = 0`` when op is \"=\"."""

    op: str  # ">=" or "="
    term: Term

    def __post_init__(self) -> None:
        if self.op not in (">=", "="):
            raise ValueError(f"bad atom op {self.op!r}")


@dataclass(frozen=True)
class And(Formula):
    parts: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    parts: tuple[Formula, ...]


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


TRUE = TrueF()
FALSE = FalseF()


def conj(parts: Iterable[Formula]) -> Formula:
    ps = tuple(parts)
    if not ps:
        return TRUE
    return ps[0] if len(ps) == 1 else And(ps)


def disj(parts: Iterable[Formula]) -> Formula:
    ps = tuple(parts)
    if not ps:
        return FALSE
    return ps[0] if len(ps) == 1 else Or(ps)


# Sugared comparison constructors (normalize to >= 0 / = 0 form).

def ge(lhs: Term, rhs: Term) -> Formula:
    return Atom(">=", lhs - rhs)


def le(lhs: Term, rhs: Term) -> Formula:
    return Atom(">=", rhs - lhs)


def gt(lhs: Term, rhs: Term) -> Formula:
    return Atom(">=", lhs - rhs - Term.const_of(1))


def lt(lhs: Term, rhs: Term) -> Formula:
    return Atom(">=", rhs - lhs - Term.const_of(1))


def eq(lhs: Term, rhs: Term) -> Formula:
    return Atom("=", lhs - rhs)


def eval_formula(f: Formula, sigma: VarAssignment) -> bool:
    """Evaluate a closed-under-sigma formula; raises EvalError on unbound vars."""
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Atom):
        value = f.term.evaluate(sigma)
        return value >= 0 if f.op == ">=" else value == 0
    if isinstance(f, And):
        return all(eval_formula(p, sigma) for p in f.parts)
    if isinstance(f, Or):
        return any(eval_formula(p, sigma) for p in f.parts)
    if isinstance(f, Not):
        return not eval_formula(f.arg, sigma)
    if isinstance(f, Implies):
        return (not eval_formula(f.lhs, sigma)) or eval_formula(f.rhs, sigma)
    raise TypeError(f"unknown formula node {f!r}")


def substitute(f: Formula, mapping: Mapping[str, Term]) -> Formula:
    """Simultaneous substitution of terms for variables."""
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Atom):
        return Atom(f.op, f.term.substitute(mapping))
    if isinstance(f, And):
        return And(tuple(substitute(p, mapping) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(substitute(p, mapping) for p in f.parts))
    if isinstance(f, Not):
        return Not(substitute(f.arg, mapping))
    if isinstance(f, Implies):
        return Implies(substitute(f.lhs, mapping), substitute(f.rhs, mapping))
    raise TypeError(f"unknown formula node {f!r}")


def free_variables(f: Formula) -> set[str]:
    if isinstance(f, (TrueF, FalseF)):
        return set()
    if isinstance(f, Atom):
        return f.term.variables()
    if isinstance(f, And) or isinstance(f, Or):
        out: set[str] = set()
        for p in f.parts:
            out |= free_variables(p)
        return out
    if isinstance(f, Not):
        return free_variables(f.arg)
    if isinstance(f, Implies):
        return free_variables(f.lhs) | free_variables(f.rhs)
    raise TypeError(f"unknown formula node {f!r}")


def negate_atom(a: Atom) -> Formula:
    """Integer-exact negation.  not(t >= 0) is -t-1 >= 0; not(t = 0) splits."""
    if a.op == ">=":
        return Atom(">=", a.term.scaled(-1) - Term.const_of(1))
    return Or((Atom(">=", a.term - Term.const_of(1)),
               Atom(">=", a.term.scaled(-1) - Term.const_of(1))))


def nnf(f: Formula, negated: bool = False) -> Formula:
    """Negation normal form; negations are eliminated entirely (atoms absorb them)."""
    if isinstance(f, TrueF):
        return FALSE if negated else TRUE
    if isinstance(f, FalseF):
        return TRUE if negated else FALSE
    if isinstance(f, Atom):
        return negate_atom(f) if negated else f
    if isinstance(f, Not):
        return nnf(f.arg, not negated)
    if isinstance(f, Implies):
        if negated:
            return conj((nnf(f.lhs), nnf(f.rhs, True)))
        return disj((nnf(f.lhs, True), nnf(f.rhs)))
    if isinstance(f, And):
        parts = tuple(nnf(p, negated) for p in f.parts)
        return disj(parts) if negated else conj(parts)
    if isinstance(f, Or):
        parts = tuple(nnf(p, negated) for p in f.parts)
        return conj(parts) if negated else disj(parts)
    raise TypeError(f"unknown formula node {f!r}")


# --- SMT-LIB printing --------------------------------------------------------

def smt_int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def term_to_smt(t: Term) -> str:
    parts = []
    for v, c in t.coeffs:
        parts.append(v if c == 1 else f"(* {smt_int(c)} {v})")
    if t.const != 0 or not parts:
        parts.append(smt_int(t.const))
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def formula_to_smt(f: Formula) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Atom):
        return f"({'>=' if f.op == '>=' else '='} {term_to_smt(f.term)} 0)"
    if isinstance(f, And):
        return "(and " + " ".join(formula_to_smt(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(formula_to_smt(p) for p in f.parts) + ")"
    if isinstance(f, Not):
        return f"(not {formula_to_smt(f.arg)})"
    if isinstance(f, Implies):
        return f"(=> {formula_to_smt(f.lhs)} {formula_to_smt(f.rhs)})"
    raise TypeError(f"unknown formula node {f!r}")
