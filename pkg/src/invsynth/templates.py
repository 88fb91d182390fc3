"""Parametric candidate templates: disjunctions of conjunctions of linear
inequalities with budgeted coefficients.

A shape fixes the disjunct/conjunct grid and two expressiveness budgets:
the L1 norm of each inequality's coefficient row and the magnitude of each
constant.  ``math.inf`` disables a budget.  Bound clauses eliminate the
absolute values through auxiliary parameters, so everything handed to the
solver stays linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .backend import LabeledConstraint
from .chc import ExampleClause, ExampleInstance
from .logic import (And, Atom, Formula, Implies, Or, Term, conj, disj, nnf,
                    Not)

INF = math.inf
Bound = int | float  # a natural number or INF


def _check_bound(value: Bound, label: str) -> None:
    if value == INF:
        return
    if not isinstance(value, int) or value < 0:
        raise ValueError(f"{label} must be a natural number or INF, got {value!r}")


@dataclass(frozen=True)
class TemplateShape:
    """(conjunct counts per disjunct, coefficient budget, constant budget)."""

    conjuncts: tuple[int, ...]
    coeff_bound: Bound
    const_bound: Bound

    def __post_init__(self) -> None:
        if not self.conjuncts or any(n < 1 for n in self.conjuncts):
            raise ValueError("every disjunct needs at least one conjunct")
        _check_bound(self.coeff_bound, "coefficient budget")
        _check_bound(self.const_bound, "constant budget")

    @property
    def disjuncts(self) -> int:
        return len(self.conjuncts)

    def is_uniform(self) -> bool:
        return len(set(self.conjuncts)) == 1

    def describe(self) -> str:
        def b(v: Bound) -> str:
            return "inf" if v == INF else str(v)
        return f"({','.join(map(str, self.conjuncts))})/{b(self.coeff_bound)}/{b(self.const_bound)}"


INITIAL_SHAPE = TemplateShape((1,), 1, 0)


def coeff_param(i: int, j: int, k: int) -> str:
    return f"a_{i}_{j}_{k}"


def const_param(i: int, j: int) -> str:
    return f"c_{i}_{j}"


def slack_param(i: int, j: int, k: int) -> str:
    return f"b_{i}_{j}_{k}"


@dataclass(frozen=True)
class ParamLayout:
    """Canonical parameter naming and ordering for one (shape, arity) pair."""

    shape: TemplateShape
    arity: int
    order: tuple[str, ...]

    @staticmethod
    def of(shape: TemplateShape, arity: int) -> "ParamLayout":
        if arity < 1:
            raise ValueError("arity must be at least 1")
        order: list[str] = []
        for i, width in enumerate(shape.conjuncts, start=1):
            for j in range(1, width + 1):
                order.extend(coeff_param(i, j, k) for k in range(1, arity + 1))
                order.append(const_param(i, j))
        return ParamLayout(shape, arity, tuple(order))

    def rows(self) -> Iterable[tuple[int, int]]:
        for i, width in enumerate(self.shape.conjuncts, start=1):
            for j in range(1, width + 1):
                yield i, j

    def __len__(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class ParametricDnf:
    """The template body before either side (parameters or state) is fixed."""

    layout: ParamLayout

    def ground(self, point: Sequence[int]) -> Formula:
        """Template truth at a concrete state point, as a formula over parameters."""
        if len(point) != self.layout.arity:
            raise ValueError(f"point arity {len(point)} != {self.layout.arity}")
        disjuncts = []
        for i, width in enumerate(self.layout.shape.conjuncts, start=1):
            atoms = []
            for j in range(1, width + 1):
                coeffs = {coeff_param(i, j, k): point[k - 1]
                          for k in range(1, self.layout.arity + 1)}
                coeffs[const_param(i, j)] = -1
                atoms.append(Atom(">=", Term.of(coeffs, 0)))
            disjuncts.append(conj(atoms))
        return disj(disjuncts)

    def instantiate(self, variables: Sequence[str], sigma: Mapping[str, int]) -> Formula:
        """Fill in parameter values; literally-true conjuncts are dropped."""
        if len(variables) != self.layout.arity:
            raise ValueError("variable list does not match arity")
        for p in self.layout.order:
            if p not in sigma:
                raise ValueError(f"assignment missing parameter {p}")
        disjuncts = []
        for i, width in enumerate(self.layout.shape.conjuncts, start=1):
            atoms = []
            for j in range(1, width + 1):
                coeffs = {v: sigma[coeff_param(i, j, k)]
                          for k, v in enumerate(variables, start=1)}
                term = Term.of(coeffs, -sigma[const_param(i, j)])
                if term.is_constant() and term.const >= 0:
                    continue  # literally true
                atoms.append(Atom(">=", term))
            disjuncts.append(conj(atoms))
        return disj(disjuncts)

    def pretty(self) -> str:
        rows = []
        for i, width in enumerate(self.layout.shape.conjuncts, start=1):
            parts = []
            for j in range(1, width + 1):
                lhs = " + ".join(f"{coeff_param(i, j, k)}*x{k}"
                                 for k in range(1, self.layout.arity + 1))
                parts.append(f"{lhs} >= {const_param(i, j)}")
            rows.append("(" + " and ".join(parts) + ")")
        return " or ".join(rows)


def bound_clauses(layout: ParamLayout) -> tuple[tuple[str, Formula], ...]:
    """Budget clauses: one labeled clause per inequality row per finite budget."""
    shape = layout.shape
    out: list[tuple[str, Formula]] = []
    for i, j in layout.rows():
        if shape.coeff_bound != INF:
            parts: list[Formula] = []
            slack_sum: dict[str, int] = {}
            for k in range(1, layout.arity + 1):
                a = coeff_param(i, j, k)
                b = slack_param(i, j, k)
                parts.append(Atom(">=", Term.of({b: 1, a: -1}, 0)))  # b >= a
                parts.append(Atom(">=", Term.of({b: 1, a: 1}, 0)))   # b >= -a
                slack_sum[b] = -1
            parts.append(Atom(">=", Term.of(slack_sum, int(shape.coeff_bound))))
            out.append((f"P:{i}:{j}", And(tuple(parts))))
        if shape.const_bound != INF:
            c = const_param(i, j)
            q = int(shape.const_bound)
            out.append((f"Q:{i}:{j}", And((
                Atom(">=", Term.of({c: 1}, q)),    # c >= -q
                Atom(">=", Term.of({c: -1}, q)),   # c <= q
            ))))
    return tuple(out)


def materialize(shape: TemplateShape, arity: int) -> tuple[ParametricDnf, tuple[tuple[str, Formula], ...]]:
    layout = ParamLayout.of(shape, arity)
    dnf = ParametricDnf(layout)
    return dnf, bound_clauses(layout)


def build_constraint(shape: TemplateShape, arity: int,
                     examples: ExampleInstance | Iterable[ExampleClause]) -> LabeledConstraint:
    """Example clauses ground the template; budgets come along labeled."""
    clauses = list(examples)
    for c in clauses:
        for pt in c.points():
            if len(pt) != arity:
                raise ValueError(f"example tuple {pt} does not match arity {arity}")
    dnf, bounds = materialize(shape, arity)
    labeled: list[tuple[str, Formula]] = []
    for idx, c in enumerate(clauses):
        if c.kind == "pos":
            f: Formula = dnf.ground(c.point)
        elif c.kind == "neg":
            f = nnf(Not(dnf.ground(c.point)))
        else:
            f = disj((nnf(Not(dnf.ground(c.point))), dnf.ground(c.point2)))
        labeled.append((f"E:{idx}", f))
    labeled.extend(bounds)
    return LabeledConstraint.of(labeled)


@dataclass(frozen=True)
class Candidate:
    """A fully concrete template instantiation, with its provenance."""

    formula: Formula
    shape: TemplateShape
    assignment: tuple[tuple[str, int], ...]

    @property
    def sigma(self) -> dict[str, int]:
        return dict(self.assignment)


def instantiate(shape: TemplateShape, variables: Sequence[str],
                sigma: Mapping[str, int]) -> Candidate:
    dnf, _ = materialize(shape, len(variables))
    formula = dnf.instantiate(variables, sigma)
    relevant = tuple(sorted((p, sigma[p]) for p in dnf.layout.order))
    return Candidate(formula, shape, relevant)


def slack_bounds(layout: ParamLayout) -> dict[str, tuple[int, int]]:
    """Finite enumeration ranges for every parameter of a bounded layout.

    Only meaningful when both budgets are finite; used by the exhaustive
    oracle in tests.
    """
    shape = layout.shape
    if shape.coeff_bound == INF or shape.const_bound == INF:
        raise ValueError("enumeration ranges need finite budgets")
    p = int(shape.coeff_bound)
    q = int(shape.const_bound)
    out: dict[str, tuple[int, int]] = {}
    for i, j in layout.rows():
        for k in range(1, layout.arity + 1):
            out[coeff_param(i, j, k)] = (-p, p)
            out[slack_param(i, j, k)] = (0, p)
        out[const_param(i, j)] = (-q, q)
    return out
