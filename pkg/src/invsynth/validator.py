"""Checks candidate predicates against the three CHC obligations and turns
solver models into example clauses."""

from __future__ import annotations

from dataclasses import dataclass

from .backend import LabeledConstraint, Sat, SolverHandle, Unknown, Unsat
from .chc import CHCSystem, ExampleClause, rename_to_primed
from .logic import And, Formula, Not
from .templates import Candidate


@dataclass(frozen=True)
class ValidationOutcome:
    kind: str  # "valid" | "cex" | "unknown"
    clause: ExampleClause | None = None
    source: str | None = None  # "pre" | "trans" | "post"
    reason: str = ""

    @property
    def is_valid(self) -> bool:
        return self.kind == "valid"


class Validator:
    """Owns its solver handle; one validator per engine, not reentrant."""

    def __init__(self, handle: SolverHandle | None = None) -> None:
        self._handle = handle or SolverHandle()
        self._owns = handle is None
        # Validity verdicts certify witnesses, so keep them off float paths.
        self._handle.set_exact_arithmetic(True)

    def close(self) -> None:
        if self._owns:
            self._handle.close()

    def validate(self, chc: CHCSystem, cand: Candidate | Formula,
                 timeout_s: float = 5.0) -> ValidationOutcome:
        """Query the three obligations in fixed order pre, trans, post."""
        psi = cand.formula if isinstance(cand, Candidate) else cand
        psi_primed = rename_to_primed(chc, psi)

        def point(model: dict[str, int], names: tuple[str, ...]) -> tuple[int, ...]:
            return tuple(model.get(v, 0) for v in names)

        checks = (
            ("pre", And((chc.pre, Not(psi)))),
            ("trans", And((chc.trans, psi, Not(psi_primed)))),
            ("post", And((psi, Not(chc.post)))),
        )
        for source, query in checks:
            result = self._handle.check_sat(
                LabeledConstraint.of([(source, query)]), timeout_s)
            if isinstance(result, Unsat):
                continue
            if isinstance(result, Sat):
                model = result.model
                if source == "pre":
                    clause = ExampleClause.positive(point(model, chc.variables))
                elif source == "trans":
                    clause = ExampleClause.implication(
                        point(model, chc.variables), point(model, chc.primed))
                else:
                    clause = ExampleClause.negative(point(model, chc.variables))
                return ValidationOutcome("cex", clause, source)
            assert isinstance(result, Unknown)
            return ValidationOutcome("unknown", reason=f"{source}: {result.reason}")
        return ValidationOutcome("valid")
