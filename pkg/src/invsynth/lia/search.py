"""Satisfiability of boolean combinations of linear integer atoms.

Assertions are normalized to negation normal form and explored by a
DPLL-style depth-first search over the disjunctions.  Three structural
tricks carry the load:

* Partial problems are split into variable-connected components that are
  solved independently and cached, so sibling branches that only touch one
  group of variables never repeat theory work elsewhere.  Template queries
  decompose down to single-inequality parameter groups this way.
* Theory-backed unit propagation: a disjunction limb is dropped once it is
  inconsistent with the components of the current conjunction it touches
  (probed through a cache), empty disjunctions backtrack, and singletons
  commit without branching.
* When the current conjunction has a model, disjunction limbs already true
  under it are tried first, which makes the satisfiable case near greedy.

Unsat cores are computed at the assertion level by deletion filtering under
a time budget.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from ..logic import (And, Atom, FalseF, Formula, Or, TrueF, eval_formula,
                     free_variables, nnf)
from .theory import TheoryResult, check_atoms


@dataclass
class SearchResult:
    status: str  # "sat" | "unsat" | "unknown"
    model: dict[str, int] | None = None
    core: list[str] | None = None
    reason: str = ""


class _Deadline:
    def __init__(self, seconds: float | None) -> None:
        self.at = None if seconds is None else time.monotonic() + seconds

    def expired(self) -> bool:
        return self.at is not None and time.monotonic() > self.at


class _Stop(Exception):
    pass


@dataclass
class _ConjInfo:
    result: TheoryResult
    var_group: dict[str, frozenset]  # variable -> its component's atom set


class SessionCache:
    """Value-keyed theory and search lemmas, reusable across queries.

    Entries are facts about atom sets (not about any particular assertion
    stack), so a solver session may keep them for its whole lifetime.
    Results that depended on a wall-clock deadline are never stored here.
    """

    MAX_ENTRIES = 400_000

    def __init__(self) -> None:
        self.atom_cache: dict[frozenset, TheoryResult] = {}
        self.conj_cache: dict[frozenset, _ConjInfo] = {}
        self.search_memo: dict[tuple[frozenset, frozenset], tuple[str, dict | None]] = {}

    def trim(self) -> None:
        total = (len(self.atom_cache) + len(self.conj_cache) + len(self.search_memo))
        if total > self.MAX_ENTRIES:
            self.atom_cache.clear()
            self.conj_cache.clear()
            self.search_memo.clear()


class _Ctx:
    def __init__(self, deadline: _Deadline, node_budget: int, exact: bool,
                 session: SessionCache | None) -> None:
        self.deadline = deadline
        self.node_budget = node_budget
        self.exact = exact
        persistent = session or SessionCache()
        self.atom_cache = persistent.atom_cache
        self.conj_cache = persistent.conj_cache
        self.search_memo = persistent.search_memo
        # Query-local state: id-keyed memos are only safe while the formula
        # objects are alive, and transient results must not outlive the query.
        self.transient_atoms: dict[frozenset, TheoryResult] = {}
        self.transient_searches: dict[tuple[frozenset, frozenset], tuple[str, dict | None]] = {}
        self.vars_memo: dict[int, frozenset[str]] = {}
        self.limb_memo: dict[int, frozenset | None] = {}
        self.viability: dict[tuple[int, frozenset], bool] = {}
        self.saw_transient = False

    def variables_of(self, f: Formula) -> frozenset[str]:
        got = self.vars_memo.get(id(f))
        if got is None:
            got = frozenset(free_variables(f))
            self.vars_memo[id(f)] = got
        return got

    def check_component(self, atoms: frozenset) -> TheoryResult:
        res = self.atom_cache.get(atoms)
        if res is None:
            res = self.transient_atoms.get(atoms)
        if res is None:
            if self.deadline.expired():
                raise _Stop
            res = check_atoms(atoms, self.deadline.at, self.node_budget, self.exact)
            if res.transient:
                self.transient_atoms[atoms] = res
            else:
                self.atom_cache[atoms] = res
        if res.transient:
            self.saw_transient = True
        return res


def _holds(f: Formula, model: dict[str, int]) -> bool:
    if isinstance(f, Atom):
        value = f.term.const + sum(c * model.get(v, 0) for v, c in f.term.coeffs)
        return value >= 0 if f.op == ">=" else value == 0
    if isinstance(f, And):
        return all(_holds(p, model) for p in f.parts)
    if isinstance(f, Or):
        return any(_holds(p, model) for p in f.parts)
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    raise TypeError(f"non-NNF node {f!r}")


def _group_by_vars(items: list, ctx: _Ctx) -> list[list]:
    """Partition formulas into variable-connected components."""
    parent: dict[object, object] = {}

    def find(x):
        while parent[x] is not x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra is not rb:
            parent[ra] = rb

    owner: dict[str, object] = {}
    keys = []
    for item in items:
        key = object()
        keys.append(key)
        parent[key] = key
        for v in ctx.variables_of(item):
            if v in owner:
                union(key, owner[v])
            else:
                owner[v] = key
    groups: dict[object, list] = {}
    for item, key in zip(items, keys):
        groups.setdefault(find(key), []).append(item)
    return list(groups.values())


def _conj_info(conj: dict[Atom, None], ctx: _Ctx) -> _ConjInfo:
    """Component-cached theory verdict plus the variable-to-component map."""
    key = frozenset(conj)
    cached = ctx.conj_cache.get(key)
    if cached is not None:
        return cached
    model: dict[str, int] = {}
    var_group: dict[str, frozenset] = {}
    status = "sat"
    transient = False
    for group in _group_by_vars(list(conj), ctx):
        atoms = frozenset(group)
        res = ctx.check_component(atoms)
        transient = transient or res.transient
        if res.status == "unsat":
            status = "unsat"
            model = {}
            break
        for f in group:
            for v in ctx.variables_of(f):
                var_group[v] = atoms
        if res.status == "unknown":
            status = "unknown"
        elif res.model and status == "sat":
            model.update(res.model)
    result = TheoryResult(status, model if status == "sat" else None,
                          transient=transient)
    info = _ConjInfo(result, var_group)
    if not transient:
        ctx.conj_cache[key] = info
    return info


def _limb_atoms(limb: Formula, ctx: _Ctx) -> frozenset | None:
    """The atom set a limb contributes (nested disjunctions ignored);
    None when the limb is syntactically inconsistent."""
    got = ctx.limb_memo.get(id(limb))
    if got is None and id(limb) not in ctx.limb_memo:
        conj, _, consistent = _flatten({}, [limb])
        got = frozenset(conj) if consistent else None
        ctx.limb_memo[id(limb)] = got
    return got


def _limb_viable(limb: Formula, info: _ConjInfo, ctx: _Ctx) -> bool:
    """Can this limb still extend the current conjunction?

    Over-approximate: checks the limb's atoms against only the components
    they touch, ignoring the limb's nested disjunctions, so False is
    definitive while True may still fail deeper.
    """
    atoms = _limb_atoms(limb, ctx)
    if atoms is None:
        return False
    if not atoms:
        return True
    touched: set[frozenset] = set()
    for a in atoms:
        for v in ctx.variables_of(a):
            group = info.var_group.get(v)
            if group is not None:
                touched.add(group)
    cache_key = (id(limb), frozenset(touched))
    cached = ctx.viability.get(cache_key)
    if cached is not None:
        return cached
    candidate = atoms.union(*touched) if touched else atoms
    verdict = ctx.check_component(candidate).status != "unsat"
    ctx.viability[cache_key] = verdict
    return verdict


def _flatten(conj: dict[Atom, None], pending: list[Formula]) -> tuple[dict, list, bool]:
    """Push conjunctions into the atom set; returns (conj, ors, consistent)."""
    conj = dict(conj)
    ors: list[Or] = []
    stack = list(pending)
    while stack:
        f = stack.pop()
        if isinstance(f, TrueF):
            continue
        if isinstance(f, FalseF):
            return conj, ors, False
        if isinstance(f, Atom):
            conj[f] = None
        elif isinstance(f, And):
            stack.extend(f.parts)
        elif isinstance(f, Or):
            ors.append(f)
        else:
            raise TypeError(f"non-NNF node {f!r}")
    return conj, ors, True


def _propagate(conj: dict[Atom, None], ors: list[Or],
               ctx: _Ctx) -> tuple[dict, list[Or], _ConjInfo] | None:
    """Drop dead limbs, fail empty disjunctions, commit singletons."""
    while True:
        if ctx.deadline.expired():
            raise _Stop
        info = _conj_info(conj, ctx)
        if info.result.status == "unsat":
            return None
        changed = False
        remaining: list[Or] = []
        for o in ors:
            viable = [limb for limb in o.parts if _limb_viable(limb, info, ctx)]
            if not viable:
                return None
            if len(viable) == 1:
                conj, extra_ors, consistent = _flatten(conj, [viable[0]])
                if not consistent:
                    return None
                remaining.extend(extra_ors)
                changed = True
            elif len(viable) < len(o.parts):
                remaining.append(Or(tuple(viable)))
                changed = True
            else:
                remaining.append(o)
        ors = remaining
        if not changed:
            return conj, ors, info


def _search(conj: dict[Atom, None], ors: list[Or], ctx: _Ctx) -> tuple[str, dict | None]:
    """Returns ("sat", model) / ("unsat", None) / ("unknown", None)."""
    memo_key = (frozenset(conj), frozenset(ors))
    memoized = ctx.search_memo.get(memo_key)
    if memoized is None:
        memoized = ctx.transient_searches.get(memo_key)
    if memoized is not None:
        return memoized
    before = ctx.saw_transient
    ctx.saw_transient = False
    result = _search_inner(conj, ors, ctx)
    if ctx.saw_transient:
        ctx.transient_searches[memo_key] = result
    else:
        ctx.search_memo[memo_key] = result
    ctx.saw_transient = ctx.saw_transient or before
    return result


def _search_inner(conj: dict[Atom, None], ors: list[Or], ctx: _Ctx) -> tuple[str, dict | None]:
    propagated = _propagate(conj, ors, ctx)
    if propagated is None:
        return "unsat", None
    conj, ors, info = propagated
    probe = info.result
    if not ors:
        return probe.status, probe.model

    # Independent subproblems: solve each variable-connected component of
    # (atoms + remaining disjunctions) on its own and merge the models.
    components = _group_by_vars(list(conj) + list(ors), ctx)
    if len(components) > 1:
        merged: dict[str, int] = {}
        saw_unknown = False
        for component in components:
            sub_conj = {f: None for f in component if isinstance(f, Atom)}
            sub_ors = [f for f in component if isinstance(f, Or)]
            status, model = _search(sub_conj, sub_ors, ctx)
            if status == "unsat":
                return "unsat", None
            if status == "unknown":
                saw_unknown = True
            elif model:
                merged.update(model)
        return ("unknown" if saw_unknown else "sat"), (None if saw_unknown else merged)

    # Branch: prefer disjunctions that span many variables (they are what
    # keeps the component connected), then fewer limbs first.
    ors = sorted(ors, key=lambda o: (-len(ctx.variables_of(o)), len(o.parts)))
    chosen, rest = ors[0], ors[1:]
    limbs = list(chosen.parts)
    if probe.model is not None:
        limbs.sort(key=lambda limb: 0 if _holds(limb, probe.model) else 1)
    saw_unknown = False
    for limb in limbs:
        new_conj, new_ors, consistent = _flatten(conj, [limb])
        if not consistent:
            continue
        status, model = _search(new_conj, rest + new_ors, ctx)
        if status == "sat":
            return status, model
        if status == "unknown":
            saw_unknown = True
    return ("unknown" if saw_unknown else "unsat"), None


def check(assertions: list[tuple[str | None, Formula]], timeout_s: float | None = None,
          node_budget: int = 2000, want_core: bool = True,
          exact: bool = False, session: SessionCache | None = None) -> SearchResult:
    """Decide the conjunction of ``assertions``; names feed the unsat core."""
    started = time.monotonic()
    deadline = _Deadline(timeout_s)
    normalized = [(name, nnf(f)) for name, f in assertions]
    ctx = _Ctx(deadline, node_budget, exact, session)
    if session is not None:
        session.trim()

    def run(formulas: list[Formula]) -> tuple[str, dict | None]:
        conj, ors, consistent = _flatten({}, formulas)
        if not consistent:
            return "unsat", None
        try:
            return _search(conj, ors, ctx)
        except _Stop:
            return "unknown", None

    status, model = run([f for _, f in normalized])
    if status == "sat":
        full = dict(model or {})
        for _, f in normalized:
            for v in free_variables(f):
                full.setdefault(v, 0)
        for _, f in normalized:  # belt-and-braces model check
            if not eval_formula(f, full):
                return SearchResult("unknown", reason="internal model check failed")
        return SearchResult("sat", model=full)
    if status == "unknown":
        return SearchResult("unknown", reason="budget exhausted")

    core = [name for name, _ in normalized if name is not None]
    first_took = time.monotonic() - started
    if want_core and first_took < 2.0:
        # Deletion filter: drop assertions whose removal keeps unsatisfiability.
        # Budgeted: shrinking is an optimization, a superset core stays valid.
        shrink_until = time.monotonic() + min(3.0, (10 * first_took + 0.1) * max(1, len(core)) ** 0.5)
        for name in list(core):
            if deadline.expired() or time.monotonic() > shrink_until:
                break
            trial = [f for nm, f in normalized
                     if nm is None or (nm in core and nm != name)]
            st, _ = run(trial)
            if st == "unsat":
                core.remove(name)
    return SearchResult("unsat", core=core)
