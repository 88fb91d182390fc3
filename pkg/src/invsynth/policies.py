"""Observation and action spaces for template growth, plus the built-in
growth policies: the hand-crafted expert heuristic, a uniform random
baseline, and epsilon-greedy selection over a state-action value table.

Observations are capped so the table stays small: conjunct counts saturate
at 4, budgets at 5 (infinity is its own symbol), and the candidate counter
at 4.  The raw action set is {0,1}-growth over at most four disjuncts and
{0,1,inf} budget bumps, minus the no-op, 143 actions in total.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .engine import ConcreteState
from .templates import INF, Bound, TemplateShape

GROW_WIDTH = 4


def _bound_token(value: Bound) -> str:
    return "inf" if value == INF else str(value)


# --- Actions ------------------------------------------------------------------

@dataclass(frozen=True)
class Action:
    """Template growth command: per-disjunct conjunct increments plus
    budget bumps.  The all-zero command is excluded from every action set."""

    grow: tuple[int, ...]
    coeff_add: Bound
    const_add: Bound

    def is_zero(self) -> bool:
        return not any(self.grow) and self.coeff_add == 0 and self.const_add == 0

    def key(self) -> str:
        bits = "".join(map(str, self.grow))
        return f"{bits}|{_bound_token(self.coeff_add)}|{_bound_token(self.const_add)}"

    def apply(self, shape: TemplateShape) -> TemplateShape:
        counts = list(shape.conjuncts)
        grow = list(self.grow)
        width = max(len(counts), len(grow))
        counts += [0] * (width - len(counts))
        grow += [0] * (width - len(grow))
        summed = [a + b for a, b in zip(counts, grow)]
        # Positions past the original shape that received no increment would
        # be empty disjuncts; drop them.
        summed = [v for v in summed if v > 0]
        return TemplateShape(tuple(summed),
                             _bump(shape.coeff_bound, self.coeff_add),
                             _bump(shape.const_bound, self.const_add))


def _bump(bound: Bound, add: Bound) -> Bound:
    return INF if bound == INF or add == INF else bound + add


def apply_action(shape: TemplateShape, action) -> TemplateShape:
    if action.is_zero():
        raise ValueError("the no-op action is excluded")
    return action.apply(shape)


def _bound_options() -> tuple[Bound, ...]:
    return (0, 1, INF)


def all_raw_actions() -> tuple[Action, ...]:
    out = []
    for bits in itertools.product((0, 1), repeat=GROW_WIDTH):
        for p in _bound_options():
            for q in _bound_options():
                a = Action(bits, p, q)
                if not a.is_zero():
                    out.append(a)
    return tuple(out)


RAW_ACTIONS = all_raw_actions()


@dataclass(frozen=True)
class ExpertAction:
    """Growth command over uniform shapes: bump the conjunct count, the
    disjunct count, and the budgets."""

    add_conjunct: int
    add_disjunct: int
    coeff_add: Bound
    const_add: Bound

    def is_zero(self) -> bool:
        return (self.add_conjunct == 0 and self.add_disjunct == 0
                and self.coeff_add == 0 and self.const_add == 0)

    def key(self) -> str:
        return (f"{self.add_conjunct}{self.add_disjunct}"
                f"|{_bound_token(self.coeff_add)}|{_bound_token(self.const_add)}")

    def apply(self, shape: TemplateShape) -> TemplateShape:
        if not shape.is_uniform():
            raise ValueError(f"expert actions need a uniform shape, got {shape.describe()}")
        n = shape.conjuncts[0] + self.add_conjunct
        m = shape.disjuncts + self.add_disjunct
        return TemplateShape((n,) * m,
                             _bump(shape.coeff_bound, self.coeff_add),
                             _bump(shape.const_bound, self.const_add))


def all_expert_actions() -> tuple[ExpertAction, ...]:
    out = []
    for n in (0, 1):
        for m in (0, 1):
            for p in _bound_options():
                for q in _bound_options():
                    a = ExpertAction(n, m, p, q)
                    if not a.is_zero():
                        out.append(a)
    return tuple(out)


EXPERT_ACTIONS = all_expert_actions()


# --- Observations -------------------------------------------------------------

CONJUNCT_CAP = 4
BUDGET_CAP = 5
CANDIDATE_CAP = 4


@dataclass(frozen=True)
class RawState:
    """Capped view of the synthesizer state.

    Conjunct counts saturate at 4 (a stored 4 means "4 or more"), budgets at
    5, the candidate counter at 4; infinity stays symbolic.
    """

    conjuncts: tuple[int, ...]
    coeff_bound: Bound
    const_bound: Bound
    coeff_bound_in_core: bool
    const_bound_in_core: bool
    candidates: int

    def key(self) -> str:
        padded = self.conjuncts + (0,) * (GROW_WIDTH - len(self.conjuncts))
        return (",".join(map(str, padded))
                + f"|{_bound_token(self.coeff_bound)}|{_bound_token(self.const_bound)}"
                + f"|{int(self.coeff_bound_in_core)}{int(self.const_bound_in_core)}"
                + f"|{self.candidates}")


def _cap(value: Bound, cap: int) -> Bound:
    if value == INF:
        return INF
    return min(int(value), cap)


def raw_abstract(state: ConcreteState) -> RawState:
    return RawState(
        conjuncts=tuple(_cap(n, CONJUNCT_CAP) for n in state.shape.conjuncts[:GROW_WIDTH]),
        coeff_bound=_cap(state.shape.coeff_bound, BUDGET_CAP),
        const_bound=_cap(state.shape.const_bound, BUDGET_CAP),
        coeff_bound_in_core=state.coeff_bound_in_core,
        const_bound_in_core=state.const_bound_in_core,
        candidates=int(_cap(state.candidates_since_change, CANDIDATE_CAP)),
    )


@dataclass(frozen=True)
class ExpertState:
    """Nine-bit abstraction over uniform shapes (512 possible states)."""

    fewer_disjuncts: bool       # disjuncts < conjuncts
    square: bool                # disjuncts == conjuncts
    coeff_at_least_2: bool
    coeff_at_least_5: bool
    const_at_least_2: bool
    const_at_least_5: bool
    coeff_bound_in_core: bool
    const_bound_in_core: bool
    has_candidates: bool

    def bits(self) -> tuple[bool, ...]:
        return (self.fewer_disjuncts, self.square, self.coeff_at_least_2,
                self.coeff_at_least_5, self.const_at_least_2, self.const_at_least_5,
                self.coeff_bound_in_core, self.const_bound_in_core,
                self.has_candidates)

    def key(self) -> str:
        return "".join("1" if b else "0" for b in self.bits())


def expert_abstract(state: ConcreteState) -> ExpertState:
    shape = state.shape
    if not shape.is_uniform():
        raise ValueError(f"expert abstraction needs a uniform shape, got {shape.describe()}")
    m = shape.disjuncts
    n = shape.conjuncts[0]
    p = shape.coeff_bound
    q = shape.const_bound
    return ExpertState(
        fewer_disjuncts=m < n,
        square=m == n,
        coeff_at_least_2=p == INF or p >= 2,
        coeff_at_least_5=p == INF or p >= 5,
        const_at_least_2=q == INF or q >= 2,
        const_at_least_5=q == INF or q >= 5,
        coeff_bound_in_core=state.coeff_bound_in_core,
        const_bound_in_core=state.const_bound_in_core,
        has_candidates=state.candidates_since_change > 0,
    )


# --- Value table --------------------------------------------------------------

class QTable:
    """State-action running means with visit counts."""

    def __init__(self) -> None:
        self._data: dict[tuple[str, str], tuple[float, int]] = {}

    def value(self, state_key: str, action_key: str) -> float:
        return self._data.get((state_key, action_key), (0.0, 0))[0]

    def visits(self, state_key: str, action_key: str) -> int:
        return self._data.get((state_key, action_key), (0.0, 0))[1]

    def record_return(self, state_key: str, action_key: str, ret: float) -> None:
        value, count = self._data.get((state_key, action_key), (0.0, 0))
        count += 1
        value += (ret - value) / count
        self._data[(state_key, action_key)] = (value, count)

    def snapshot(self) -> "QTable":
        copy = QTable()
        copy._data = dict(self._data)
        return copy

    def items(self):
        return self._data.items()

    def __len__(self) -> int:
        return len(self._data)

    def save(self, path: str) -> None:
        lines = [f"{s} {a} {value!r} {count}\n"
                 for (s, a), (value, count) in sorted(self._data.items())]
        with open(path, "w") as fh:
            fh.writelines(lines)

    @staticmethod
    def load(path: str) -> "QTable":
        table = QTable()
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 4:
                    raise ValueError(f"{path}:{lineno}: expected 4 fields")
                s, a, value, count = parts
                table._data[(s, a)] = (float(value), int(count))
        return table


def epsilon_greedy(table: QTable, state_key: str, actions: Sequence,
                   epsilon: float, rng) -> object:
    """Uniform with probability epsilon, else the argmax over stored values
    (unvisited pairs count as 0); ties go to the earliest action in the
    canonical ordering."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if epsilon > 0 and rng.random() < epsilon:
        return actions[rng.randrange(len(actions))]
    best = actions[0]
    best_value = table.value(state_key, best.key())
    for a in actions[1:]:
        v = table.value(state_key, a.key())
        if v > best_value:
            best, best_value = a, v
    return best


# --- Policies -----------------------------------------------------------------

class ExpertPolicy:
    """Alternates conjunct and disjunct growth (conjuncts first) and bumps a
    budget only when its clause shows up in the unsat core; the constant
    budget jumps to infinity once it has reached 3."""

    def __init__(self) -> None:
        self._grow_conjunct_next = True

    def begin_episode(self) -> None:
        self._grow_conjunct_next = True

    def decide(self, state: ConcreteState) -> ExpertAction:
        shape = state.shape
        if not shape.is_uniform():
            raise ValueError(f"expert policy needs a uniform shape, got {shape.describe()}")
        if self._grow_conjunct_next:
            n, m = 1, 0
        else:
            n, m = 0, 1
        self._grow_conjunct_next = not self._grow_conjunct_next
        p: Bound = 1 if state.coeff_bound_in_core else 0
        q: Bound = 0
        if state.const_bound_in_core:
            q = 1 if shape.const_bound < 3 else INF
        return ExpertAction(n, m, p, q)


class RandomPolicy:
    """Uniform over the 143 raw actions; reproducible from its rng."""

    def __init__(self, rng) -> None:
        self.rng = rng

    def begin_episode(self) -> None:
        pass

    def decide(self, state: ConcreteState) -> Action:
        return RAW_ACTIONS[self.rng.randrange(len(RAW_ACTIONS))]


class TablePolicy:
    """Epsilon-greedy over a value table; records the abstracted keys it saw
    so a trainer can align them with the engine's reward trace."""

    def __init__(self, table: QTable, epsilon: float, rng,
                 expert_states: bool = False) -> None:
        self.table = table
        self.epsilon = epsilon
        self.rng = rng
        self.expert_states = expert_states
        self.actions: Sequence = EXPERT_ACTIONS if expert_states else RAW_ACTIONS
        self.abstract: Callable[[ConcreteState], object] = (
            expert_abstract if expert_states else raw_abstract)
        self.recorded: list[tuple[str, str]] = []

    def begin_episode(self) -> None:
        self.recorded = []

    def decide(self, state: ConcreteState):
        state_key = self.abstract(state).key()
        action = epsilon_greedy(self.table, state_key, self.actions,
                                self.epsilon, self.rng)
        self.recorded.append((state_key, action.key()))
        return action
