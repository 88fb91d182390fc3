"""Single-predicate linear CHC systems and ground example clauses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .logic import Formula, Term, eval_formula, free_variables, substitute


@dataclass(frozen=True)
class CHCSystem:
    """A pre/trans/post triple over integer variables.

    ``variables`` fixes the canonical ordering (and hence the meaning of
    template coefficient indices).  ``primed`` names the post-state copies
    used by ``trans``.
    """

    variables: tuple[str, ...]
    primed: tuple[str, ...]
    pre: Formula
    trans: Formula
    post: Formula
    name: str = "chc"

    def __post_init__(self) -> None:
        if len(self.variables) < 1:
            raise ValueError("CHC arity must be at least 1")
        if len(self.primed) != len(self.variables):
            raise ValueError("primed variable list must match arity")
        if len(set(self.variables) | set(self.primed)) != 2 * len(self.variables):
            raise ValueError("variable names must be distinct")
        allowed = set(self.variables)
        for label, f in (("pre", self.pre), ("post", self.post)):
            extra = free_variables(f) - allowed
            if extra:
                raise ValueError(f"{label} mentions undeclared variables {sorted(extra)}")
        extra = free_variables(self.trans) - allowed - set(self.primed)
        if extra:
            raise ValueError(f"trans mentions undeclared variables {sorted(extra)}")

    @property
    def arity(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class ExampleClause:
    """Ground constraint on the unknown predicate.

    kind "pos":  predicate must hold at ``point``.
    kind "neg":  predicate must not hold at ``point``.
    kind "imp":  predicate at ``point`` implies predicate at ``point2``.
    """

    kind: str
    point: tuple[int, ...]
    point2: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("pos", "neg", "imp"):
            raise ValueError(f"bad example kind {self.kind!r}")
        if (self.kind == "imp") != (self.point2 is not None):
            raise ValueError("imp clauses need exactly two points")

    @staticmethod
    def positive(point: Iterable[int]) -> "ExampleClause":
        return ExampleClause("pos", tuple(point))

    @staticmethod
    def negative(point: Iterable[int]) -> "ExampleClause":
        return ExampleClause("neg", tuple(point))

    @staticmethod
    def implication(src: Iterable[int], dst: Iterable[int]) -> "ExampleClause":
        return ExampleClause("imp", tuple(src), tuple(dst))

    def points(self) -> tuple[tuple[int, ...], ...]:
        return (self.point,) if self.point2 is None else (self.point, self.point2)

    def holds_for(self, predicate: Formula, variables: tuple[str, ...]) -> bool:
        """Check this clause against a concrete predicate over ``variables``."""
        def at(pt: tuple[int, ...]) -> bool:
            return eval_formula(predicate, dict(zip(variables, pt)))

        if self.kind == "pos":
            return at(self.point)
        if self.kind == "neg":
            return not at(self.point)
        return (not at(self.point)) or at(self.point2)  # type: ignore[arg-type]


class ExampleInstance:
    """Ordered, deduplicated collection of example clauses.

    Grows monotonically during a CEGIS run; ``add`` reports whether the
    clause was new.
    """

    def __init__(self, clauses: Iterable[ExampleClause] = ()) -> None:
        self._clauses: list[ExampleClause] = []
        self._seen: set[ExampleClause] = set()
        for c in clauses:
            self.add(c)

    def add(self, clause: ExampleClause) -> bool:
        if clause in self._seen:
            return False
        self._seen.add(clause)
        self._clauses.append(clause)
        return True

    def __iter__(self) -> Iterator[ExampleClause]:
        return iter(self._clauses)

    def __len__(self) -> int:
        return len(self._clauses)

    def __contains__(self, clause: ExampleClause) -> bool:
        return clause in self._seen

    def clauses(self) -> tuple[ExampleClause, ...]:
        return tuple(self._clauses)

    def check_arity(self, arity: int) -> None:
        for c in self._clauses:
            for pt in c.points():
                if len(pt) != arity:
                    raise ValueError(f"example tuple {pt} does not match arity {arity}")


def primed_substitution(chc: CHCSystem) -> dict[str, Term]:
    """Mapping that renames each state variable to its primed copy."""
    return {v: Term.var(p) for v, p in zip(chc.variables, chc.primed)}


def rename_to_primed(chc: CHCSystem, f: Formula) -> Formula:
    return substitute(f, primed_substitution(chc))
