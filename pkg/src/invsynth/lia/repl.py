"""SMT-LIB v2 front end for the bundled LIA solver.

Supports the dialect the synthesis engine emits: ``declare-const``/
``declare-fun`` over Int, ``assert`` with optional ``(! ... :named L)``
wrappers, ``check-sat``, ``get-model``, ``get-unsat-core``, ``push``/``pop``,
``reset``, ``echo``, ``set-option`` (``:timeout`` in milliseconds,
``:produce-unsat-cores``, ``:print-success``) and ``exit``.  Anything else
gets a standard ``(error ...)`` reply and leaves the state unchanged.
"""

from __future__ import annotations

import sys

from .. import sexpr
from ..logic import Formula, smt_int
from ..parsing import ParseError, parse_formula
from .search import SearchResult, SessionCache, check

# Theory lemmas are assertion-independent, so they persist across queries
# (and resets) for the lifetime of the process; consecutive synthesis
# queries overlap heavily and reuse most of the previous round's work.
# Kept per arithmetic mode so exact verdicts never come from float runs.
_SESSION_CACHES: dict[bool, SessionCache] = {}


class _FormSplitter:
    """Accumulates raw text and yields complete top-level s-expressions."""

    def __init__(self) -> None:
        self.buf: list[str] = []
        self.depth = 0
        self.in_string = False
        self.in_quote = False
        self.in_comment = False

    def feed(self, chunk: str):
        forms = []
        for ch in chunk:
            if self.in_comment:
                if ch == "\n":
                    self.in_comment = False
                if self.depth > 0:
                    self.buf.append(ch)
                continue
            if self.in_string:
                self.buf.append(ch)
                if ch == '"':
                    self.in_string = False
                continue
            if self.in_quote:
                self.buf.append(ch)
                if ch == "|":
                    self.in_quote = False
                continue
            if ch == ";":
                self.in_comment = True
                continue
            if self.depth == 0 and ch.isspace():
                continue
            self.buf.append(ch)
            if ch == '"':
                self.in_string = True
            elif ch == "|":
                self.in_quote = True
            elif ch == "(":
                self.depth += 1
            elif ch == ")":
                self.depth -= 1
                if self.depth <= 0:
                    forms.append("".join(self.buf))
                    self.buf = []
                    self.depth = 0
        return forms


class Repl:
    def __init__(self, out) -> None:
        self.out = out
        self.decls: dict[str, str] = {}
        self.assertions: list[tuple[str | None, Formula]] = []
        self.frames: list[tuple[int, dict[str, str]]] = []
        self.options: dict[str, str] = {}
        self.last: SearchResult | None = None

    # -- replies --

    def _emit(self, text: str) -> None:
        self.out.write(text + "\n")
        self.out.flush()

    def _error(self, message: str) -> None:
        self._emit(f'(error "{message}")')

    def _success(self) -> None:
        if self.options.get("print-success") == "true":
            self._emit("success")

    # -- command dispatch --

    def handle(self, text: str) -> bool:
        """Process one form; returns False when the session should end."""
        try:
            form = sexpr.parse_one(text)
        except sexpr.SExprError as e:
            self._error(str(e))
            return True
        if not isinstance(form, list) or not form or not isinstance(form[0], str):
            self._error("expected a command")
            return True
        head, args = form[0], form[1:]
        try:
            return self._dispatch(head, args)
        except ParseError as e:
            self._error(str(e))
            return True

    def _dispatch(self, head: str, args: list) -> bool:
        if head == "exit":
            return False
        if head in ("set-logic", "set-info"):
            self._success()
            return True
        if head == "set-option":
            if len(args) == 2 and isinstance(args[0], str) and args[0].startswith(":"):
                self.options[args[0][1:]] = args[1] if isinstance(args[1], str) else ""
                self._success()
            else:
                self._error("malformed set-option")
            return True
        if head == "echo":
            self._emit(args[0].strip('"') if args and isinstance(args[0], str) else "")
            return True
        if head in ("declare-const", "declare-fun"):
            return self._declare(head, args)
        if head == "assert":
            return self._assert(args)
        if head == "check-sat":
            return self._check_sat()
        if head == "get-model":
            return self._get_model()
        if head == "get-unsat-core":
            return self._get_unsat_core()
        if head == "push":
            n = int(args[0]) if args else 1
            for _ in range(n):
                self.frames.append((len(self.assertions), dict(self.decls)))
            self._success()
            return True
        if head == "pop":
            n = int(args[0]) if args else 1
            for _ in range(n):
                if not self.frames:
                    self._error("pop on empty stack")
                    return True
                length, decls = self.frames.pop()
                del self.assertions[length:]
                self.decls = decls
            self.last = None
            self._success()
            return True
        if head == "reset":
            self.__init__(self.out)
            self._success()
            return True
        self._error(f"unsupported command {head}")
        return True

    def _declare(self, head: str, args: list) -> bool:
        if head == "declare-const":
            if len(args) != 2 or not isinstance(args[0], str):
                self._error("malformed declare-const")
                return True
            name, sort = args[0], args[1]
        else:
            if len(args) != 3 or not isinstance(args[0], str) or args[1] != []:
                self._error("only zero-ary declare-fun is supported")
                return True
            name, sort = args[0], args[2]
        if sort != "Int":
            self._error(f"unsupported sort {sexpr.to_text(sort)}")
            return True
        self.decls[name] = "Int"
        self._success()
        return True

    def _assert(self, args: list) -> bool:
        if len(args) != 1:
            self._error("assert takes one term")
            return True
        term = args[0]
        name: str | None = None
        if isinstance(term, list) and term[:1] == ["!"]:
            if len(term) >= 4 and term[2] == ":named" and isinstance(term[3], str):
                name = term[3]
                term = term[1]
            else:
                self._error("malformed annotation")
                return True
        formula = parse_formula(term, set(self.decls))
        self.assertions.append((name, formula))
        self.last = None
        self._success()
        return True

    def _check_sat(self) -> bool:
        timeout_ms = self.options.get("timeout")
        timeout_s = int(timeout_ms) / 1000.0 if timeout_ms else None
        want_core = self.options.get("produce-unsat-cores") == "true"
        exact = self.options.get("invsynth-exact") == "true"
        session = _SESSION_CACHES.setdefault(exact, SessionCache())
        self.last = check(self.assertions, timeout_s=timeout_s, want_core=want_core,
                          exact=exact, session=session)
        status = self.last.status
        self._emit(status if status in ("sat", "unsat") else "unknown")
        return True

    def _get_model(self) -> bool:
        if self.last is None or self.last.status != "sat":
            self._error("model is not available")
            return True
        model = self.last.model or {}
        parts = [f"(define-fun {v} () Int {smt_int(model.get(v, 0))})"
                 for v in sorted(self.decls)]
        self._emit("(" + " ".join(parts) + ")")
        return True

    def _get_unsat_core(self) -> bool:
        if self.last is None or self.last.status != "unsat":
            self._error("core is not available")
            return True
        self._emit("(" + " ".join(self.last.core or []) + ")")
        return True


def main(argv: list[str] | None = None) -> int:
    repl = Repl(sys.stdout)
    splitter = _FormSplitter()
    for line in sys.stdin:
        for form in splitter.feed(line):
            if not repl.handle(form):
                return 0
    return 0
