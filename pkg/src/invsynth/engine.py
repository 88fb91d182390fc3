"""The CEGIS main loop: propose candidates from the current template,
validate them, accumulate counterexamples, and delegate template growth to
a policy at every synthesis dead end.

Reward accounting: the clock anchors at each policy invocation; a trace
step's reward is minus the wall time from its action until the next
invocation (or termination), so the step rewards telescope to the span
between the first decision and the end of the run.  Work done before the
first dead end belongs to no action and is not rewarded.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable

from .backend import Sat, SolverHandle, SolverPool, Unknown, Unsat
from .chc import CHCSystem, ExampleClause, ExampleInstance
from .templates import (Candidate, INITIAL_SHAPE, ParamLayout, TemplateShape,
                        build_constraint, instantiate)
from .validator import ValidationOutcome, Validator


@dataclass
class EngineConfig:
    policy: object  # needs begin_episode() and decide(state) -> action
    total_timeout_s: float = 60.0
    query_timeout_s: float = 5.0
    initial_shape: TemplateShape = INITIAL_SHAPE
    seed: int | None = None


@dataclass(frozen=True)
class ConcreteState:
    """Synthesizer snapshot handed to the policy at a decision point."""

    shape: TemplateShape
    coeff_bound_in_core: bool  # last unsat core mentioned a coefficient budget
    const_bound_in_core: bool  # last unsat core mentioned a constant budget
    candidates_since_change: int
    elapsed_s: float  # wall time since the previous policy invocation


@dataclass
class TraceStep:
    state: ConcreteState
    action: object
    reward: float = 0.0  # negated seconds; filled when the step closes


@dataclass
class Outcome:
    kind: str  # "sat" | "unsat" | "timeout" | "error"
    candidate: Candidate | None
    trace: list[TraceStep]
    examples: tuple[ExampleClause, ...]
    iterations: int
    wall_time_s: float
    first_decision_s: float | None
    diagnostic: str = ""

    @property
    def total_reward(self) -> float:
        return sum(step.reward for step in self.trace)


def _lift_collapsed_model(model: dict[str, int], narrow: TemplateShape,
                          full: TemplateShape, arity: int) -> dict[str, int]:
    """Spread a single-disjunct model over every row of the full shape.

    Rows beyond the collapsed width repeat row 1, so each disjunct stays
    equivalent to the collapsed conjunction and the lifted assignment
    satisfies exactly the same example clauses.
    """
    from .templates import coeff_param, const_param, slack_param

    width = narrow.conjuncts[0]
    lifted: dict[str, int] = {}
    has_slack = any(name.startswith("b_") for name in model)
    for i, rows in enumerate(full.conjuncts, start=1):
        for j in range(1, rows + 1):
            src = j if j <= width else 1
            # Parameters with zero coefficients everywhere never reach the
            # solver, so absent entries default to 0.
            for k in range(1, arity + 1):
                lifted[coeff_param(i, j, k)] = model.get(coeff_param(1, src, k), 0)
                if has_slack:
                    lifted[slack_param(i, j, k)] = model.get(slack_param(1, src, k), 0)
            lifted[const_param(i, j)] = model.get(const_param(1, src), 0)
    return lifted


def detect_unsat(examples: Iterable[ExampleClause]) -> bool:
    """Propositional inconsistency of the accumulated ground constraints.

    Each distinct tuple is one boolean atom; positives and negatives are
    units and implications are two-literal clauses, so unit propagation to
    a fixpoint is a complete check.  True means no predicate at all can
    satisfy the examples, hence the CHC itself has no solution.
    """
    assignment: dict[tuple[int, ...], bool] = {}
    conflict = False

    def assign(pt: tuple[int, ...], val: bool) -> bool:
        if pt in assignment:
            return assignment[pt] == val
        assignment[pt] = val
        return True

    implications: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    for c in examples:
        if c.kind == "pos":
            conflict |= not assign(c.point, True)
        elif c.kind == "neg":
            conflict |= not assign(c.point, False)
        else:
            implications.append((c.point, c.point2))  # type: ignore[arg-type]
    if conflict:
        return True

    changed = True
    while changed:
        changed = False
        for src, dst in implications:
            if assignment.get(src) is True and assignment.get(dst) is not True:
                if not assign(dst, True):
                    return True
                changed = True
            if assignment.get(dst) is False and assignment.get(src) is not False:
                if not assign(src, False):
                    return True
                changed = True
    return False


class CegisEngine:
    """Single-threaded synthesis run over one CHC system.

    Solver handles may be injected (or borrowed from a pool) so trainers can
    amortize process startup; otherwise the engine owns fresh ones.
    """

    def __init__(self, chc: CHCSystem, cfg: EngineConfig,
                 synth_handle: SolverHandle | None = None,
                 validator: Validator | None = None,
                 pool: SolverPool | None = None) -> None:
        self.chc = chc
        self.cfg = cfg
        self._pool = pool
        self._borrowed: list[SolverHandle] = []
        if synth_handle is not None:
            self.synth = synth_handle
            self._owns_synth = False
        elif pool is not None:
            self.synth = pool.acquire()
            self._borrowed.append(self.synth)
            self._owns_synth = False
        else:
            self.synth = SolverHandle()
            self._owns_synth = True
        if hasattr(self.synth, "set_exact_arithmetic"):
            self.synth.set_exact_arithmetic(False)
        if validator is not None:
            self.validator = validator
            self._owns_validator = False
        elif pool is not None:
            h = pool.acquire()
            self._borrowed.append(h)
            self.validator = Validator(h)
            self._owns_validator = False
        else:
            self.validator = Validator()
            self._owns_validator = True

        self.shape = cfg.initial_shape
        self.examples = ExampleInstance()
        self.coeff_bound_in_core = False
        self.const_bound_in_core = False
        self.candidates_since_change = 0
        self._last_tick = 0.0

    def close(self) -> None:
        if self._owns_synth:
            self.synth.close()
        if self._owns_validator:
            self.validator.close()
        if self._pool is not None:
            for h in self._borrowed:
                self._pool.release(h)
            self._borrowed = []

    def observe(self) -> ConcreteState:
        return ConcreteState(
            shape=self.shape,
            coeff_bound_in_core=self.coeff_bound_in_core,
            const_bound_in_core=self.const_bound_in_core,
            candidates_since_change=self.candidates_since_change,
            elapsed_s=time.monotonic() - self._last_tick,
        )

    def _find_candidate_assignment(self, query_timeout: float):
        """Model search for the current template's ground constraint.

        A model of the collapsed single-disjunct template (conjunct count =
        the smallest disjunct width) lifts to the full shape by duplicating
        rows, and most solutions in practice need one distinct disjunct, so
        that much smaller query is tried first.  Its failure proves nothing
        about the full template, so anything but Sat falls through.
        """
        shape = self.shape
        if shape.disjuncts > 1:
            narrow = TemplateShape((min(shape.conjuncts),),
                                   shape.coeff_bound, shape.const_bound)
            quick = build_constraint(narrow, self.chc.arity, self.examples)
            probe = self.synth.check_sat(quick, min(query_timeout, 2.0))
            if isinstance(probe, Sat):
                return Sat(_lift_collapsed_model(probe.model, narrow, shape,
                                                 self.chc.arity))
        constraint = build_constraint(shape, self.chc.arity, self.examples)
        return self.synth.check_sat(constraint, query_timeout)

    def run(self) -> Outcome:
        cfg = self.cfg
        start = time.monotonic()
        self._last_tick = start
        trace: list[TraceStep] = []
        pending: TraceStep | None = None
        first_decision: float | None = None
        iterations = 0

        def close_pending(now: float) -> None:
            nonlocal pending
            if pending is not None:
                pending.reward = -(now - self._last_tick)
                trace.append(pending)
                pending = None

        def finish(kind: str, candidate: Candidate | None = None,
                   diagnostic: str = "") -> Outcome:
            now = time.monotonic()
            close_pending(now)
            return Outcome(kind, candidate, trace, self.examples.clauses(),
                           iterations, now - start, first_decision, diagnostic)

        try:
            cfg.policy.begin_episode()
        except Exception as e:
            return finish("error", diagnostic=f"policy failed to start: {e}")

        while True:
            now = time.monotonic()
            remaining = cfg.total_timeout_s - (now - start)
            if remaining <= 0:
                return finish("timeout")
            query_timeout = min(cfg.query_timeout_s, max(remaining, 0.05))

            result = self._find_candidate_assignment(query_timeout)
            iterations += 1

            if isinstance(result, Sat):
                # Parameters the constraint never mentioned default to 0,
                # mirroring the backend's model completion.
                layout = ParamLayout.of(self.shape, self.chc.arity)
                sigma = {p: result.model.get(p, 0) for p in layout.order}
                candidate = instantiate(self.shape, self.chc.variables, sigma)
                self.candidates_since_change += 1
                verdict = self.validator.validate(self.chc, candidate, query_timeout)
                if verdict.kind == "unknown":
                    verdict = self.validator.validate(self.chc, candidate,
                                                      query_timeout * 2)
                if verdict.kind == "valid":
                    return finish("sat", candidate)
                if verdict.kind == "cex":
                    assert verdict.clause is not None
                    if not self.examples.add(verdict.clause):
                        return finish("error", diagnostic=(
                            "validator repeated counterexample "
                            f"{verdict.clause}; solver model was unsound"))
                    continue
                return finish("timeout",
                              diagnostic=f"validation stalled: {verdict.reason}")

            if isinstance(result, Unknown) and result.reason == "solver-error":
                return finish("timeout",
                              diagnostic=f"solver failure: {result.detail}")

            # Unsat, or Unknown treated as "no candidate under this template".
            core = result.core if isinstance(result, Unsat) else frozenset()
            if detect_unsat(self.examples):
                return finish("unsat")
            self.coeff_bound_in_core = any(l.startswith("P:") for l in core)
            self.const_bound_in_core = any(l.startswith("Q:") for l in core)

            decision_time = time.monotonic()
            if decision_time - start >= cfg.total_timeout_s:
                return finish("timeout")
            close_pending(decision_time)
            state = ConcreteState(
                shape=self.shape,
                coeff_bound_in_core=self.coeff_bound_in_core,
                const_bound_in_core=self.const_bound_in_core,
                candidates_since_change=self.candidates_since_change,
                elapsed_s=decision_time - self._last_tick,
            )
            if first_decision is None:
                first_decision = decision_time - start
            try:
                action = cfg.policy.decide(state)
            except Exception as e:
                self._last_tick = decision_time
                return finish("error", diagnostic=f"policy failed: {e}")
            pending = TraceStep(state, action)
            self._last_tick = decision_time
            try:
                self.shape = action.apply(self.shape)
            except Exception as e:
                return finish("error", diagnostic=f"action not applicable: {e}")
            self.candidates_since_change = 0


def run_cegis(chc: CHCSystem, cfg: EngineConfig,
              pool: SolverPool | None = None) -> Outcome:
    engine = CegisEngine(chc, cfg, pool=pool)
    try:
        return engine.run()
    finally:
        engine.close()
