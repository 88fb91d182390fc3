"""Satisfiability backend: an external SMT-LIB v2 solver process plus an
independent exhaustive-search oracle.

One :class:`SolverHandle` owns one solver subprocess and is not safe for
concurrent queries; create one handle per engine component.  The solver
command comes from ``INVSYNTH_SMT_BIN`` / ``INVSYNTH_SMT_ARGS`` (whitespace
split) and defaults to the bundled solver, ``python -m invsynth.lia``.

Every Sat model returned by :meth:`SolverHandle.check_sat` has been
completed (absent parameters default to 0) and re-checked against all
clauses by direct evaluation, so downstream code may rely on it.
"""

from __future__ import annotations

import os
import queue
import shlex
import subprocess
import sys
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import sexpr
from .logic import Formula, eval_formula, formula_to_smt, free_variables


@dataclass(frozen=True)
class LabeledConstraint:
    """Conjunction of uniquely labeled clauses over template parameters."""

    clauses: tuple[tuple[str, Formula], ...]

    def __post_init__(self) -> None:
        labels = [label for label, _ in self.clauses]
        if len(set(labels)) != len(labels):
            raise ValueError("clause labels must be unique")

    @staticmethod
    def of(clauses: Iterable[tuple[str, Formula]]) -> "LabeledConstraint":
        return LabeledConstraint(tuple(clauses))

    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.clauses)

    def parameters(self) -> tuple[str, ...]:
        out: set[str] = set()
        for _, f in self.clauses:
            out |= free_variables(f)
        return tuple(sorted(out))

    def holds_under(self, sigma: Mapping[str, int]) -> bool:
        return all(eval_formula(f, sigma) for _, f in self.clauses)


@dataclass(frozen=True)
class Sat:
    model: dict[str, int]


@dataclass(frozen=True)
class Unsat:
    core: frozenset[str]


@dataclass(frozen=True)
class Unknown:
    reason: str  # "timeout" | "solver-error"
    detail: str = ""


SmtResult = Sat | Unsat | Unknown


class SolverProtocolError(Exception):
    pass


def solver_command() -> list[str]:
    binary = os.environ.get("INVSYNTH_SMT_BIN", "").strip()
    if binary:
        cmd = shlex.split(binary)
    else:
        cmd = [sys.executable, "-m", "invsynth.lia"]
    extra = os.environ.get("INVSYNTH_SMT_ARGS", "").strip()
    if extra:
        cmd += shlex.split(extra)
    return cmd


def _is_bundled(command: Sequence[str]) -> bool:
    return "invsynth.lia" in command


class SolverHandle:
    """Wraps one persistent solver process; respawned after a watchdog kill."""

    def __init__(self, command: Sequence[str] | None = None) -> None:
        self.command = list(command) if command is not None else solver_command()
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue[str] = queue.Queue()
        self._stderr: deque[str] = deque(maxlen=50)
        self._session_options: tuple[str, ...] = ()

    def set_exact_arithmetic(self, enabled: bool) -> None:
        """Toggle the bundled solver's float fast path for this handle.

        External solvers already decide in exact arithmetic, so this is a
        no-op for them (they would reject the vendor option).
        """
        if _is_bundled(self.command) and enabled:
            self._session_options = ("(set-option :invsynth-exact true)",)
        else:
            self._session_options = ()

    # -- process management --

    def _ensure_process(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            return
        self._lines = queue.Queue()
        self._stderr = deque(maxlen=50)
        self._proc = subprocess.Popen(
            self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.PIPE, text=True, bufsize=1)
        threading.Thread(target=self._pump, args=(self._proc.stdout, self._lines),
                         daemon=True).start()
        threading.Thread(target=self._pump_err, args=(self._proc.stderr,),
                         daemon=True).start()

    @staticmethod
    def _pump(stream, sink: queue.Queue) -> None:
        try:
            for line in stream:
                sink.put(line.rstrip("\n"))
        except ValueError:
            pass

    def _pump_err(self, stream) -> None:
        try:
            for line in stream:
                self._stderr.append(line.rstrip("\n"))
        except ValueError:
            pass

    def kill(self) -> None:
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=5)
            except Exception:
                pass
        self._proc = None

    close = kill

    def __enter__(self) -> "SolverHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- wire helpers --

    def _send(self, text: str) -> None:
        assert self._proc is not None and self._proc.stdin is not None
        self._proc.stdin.write(text)
        self._proc.stdin.flush()

    def _read_line(self, timeout_s: float) -> str:
        try:
            return self._lines.get(timeout=timeout_s)
        except queue.Empty:
            raise TimeoutError

    def _read_sexpr(self, timeout_s: float) -> str:
        """Read until parentheses balance (solvers may pretty-print)."""
        buf = self._read_line(timeout_s)
        while buf.count("(") > buf.count(")"):
            buf += " " + self._read_line(timeout_s)
        return buf

    # -- main query --

    def check_sat(self, constraint: LabeledConstraint, timeout_s: float = 5.0) -> SmtResult:
        """Run one fresh query; Sat models are completed and re-checked."""
        label_for: dict[str, str] = {}
        script = ["(reset)",
                  "(set-option :produce-unsat-cores true)",
                  f"(set-option :timeout {max(1, int(timeout_s * 1000))})"]
        script.extend(self._session_options)
        for p in constraint.parameters():
            script.append(f"(declare-const {p} Int)")
        for i, (label, formula) in enumerate(constraint.clauses):
            name = f"L{i}"
            label_for[name] = label
            script.append(f"(assert (! {formula_to_smt(formula)} :named {name}))")
        script.append("(check-sat)")

        watchdog = timeout_s * 1.5 + 2.0
        try:
            self._ensure_process()
            self._send("\n".join(script) + "\n")
            answer = self._read_line(watchdog)
        except TimeoutError:
            self.kill()
            return Unknown("timeout", f"no answer within {watchdog:.1f}s")
        except (OSError, BrokenPipeError) as e:
            self.kill()
            return Unknown("solver-error", f"{e}; stderr: {self._stderr_text()}")

        try:
            if answer == "sat":
                return self._finish_sat(constraint, watchdog)
            if answer == "unsat":
                return self._finish_unsat(constraint, label_for, watchdog)
            if answer == "unknown":
                return Unknown("timeout", "solver reported unknown")
            raise SolverProtocolError(f"unexpected check-sat reply {answer!r}")
        except TimeoutError:
            self.kill()
            return Unknown("timeout", "stalled after check-sat")
        except (SolverProtocolError, OSError, sexpr.SExprError) as e:
            self.kill()
            return Unknown("solver-error", f"{e}; stderr: {self._stderr_text()}")

    def _finish_sat(self, constraint: LabeledConstraint, watchdog: float) -> SmtResult:
        self._send("(get-model)\n")
        reply = self._read_sexpr(watchdog)
        model = _parse_model(reply)
        for p in constraint.parameters():
            model.setdefault(p, 0)
        if not constraint.holds_under(model):
            raise SolverProtocolError("model does not satisfy the constraint")
        return Sat(model)

    def _finish_unsat(self, constraint: LabeledConstraint,
                      label_for: Mapping[str, str], watchdog: float) -> SmtResult:
        self._send("(get-unsat-core)\n")
        reply = self._read_sexpr(watchdog)
        expr = sexpr.parse_one(reply)
        if not isinstance(expr, list):
            raise SolverProtocolError(f"bad unsat core reply {reply!r}")
        if expr and expr[0] == "error":
            raise SolverProtocolError(f"solver error {reply!r}")
        core = set()
        for name in expr:
            if not isinstance(name, str) or name not in label_for:
                raise SolverProtocolError(f"core names unknown assertion {name!r}")
            core.add(label_for[name])
        return Unsat(frozenset(core))

    def _stderr_text(self) -> str:
        return " | ".join(self._stderr) or "<empty>"


def _parse_model(reply: str) -> dict[str, int]:
    expr = sexpr.parse_one(reply)
    if not isinstance(expr, list):
        raise SolverProtocolError(f"bad model reply {reply!r}")
    if expr and expr[0] == "error":
        raise SolverProtocolError(f"solver error {reply!r}")
    entries = expr[1:] if expr[:1] == ["model"] else expr
    model: dict[str, int] = {}
    for entry in entries:
        if not (isinstance(entry, list) and len(entry) == 5 and entry[0] == "define-fun"):
            raise SolverProtocolError(f"bad model entry {sexpr.to_text(entry)}")
        name, value = entry[1], entry[4]
        model[name] = _parse_int(value)
    return model


def _parse_int(value) -> int:
    if isinstance(value, str):
        return int(value)
    if isinstance(value, list) and len(value) == 2 and value[0] == "-":
        return -_parse_int(value[1])
    raise SolverProtocolError(f"bad integer literal {sexpr.to_text(value)}")


def check_sat(constraint: LabeledConstraint, timeout_s: float = 5.0,
              handle: SolverHandle | None = None) -> SmtResult:
    """One-shot convenience wrapper around a temporary handle."""
    if handle is not None:
        return handle.check_sat(constraint, timeout_s)
    with SolverHandle() as h:
        return h.check_sat(constraint, timeout_s)


# --- exhaustive oracle --------------------------------------------------------

ENUMERATION_GUARD = 10_000_000


class RangeTooLarge(Exception):
    pass


def brute_force_search(constraint: LabeledConstraint,
                       bounds: Mapping[str, tuple[int, int]]) -> dict[str, int] | None:
    """Lexicographically-first satisfying assignment by direct enumeration.

    Parameters are ordered by sorted name; each must carry a finite
    inclusive range.  Refuses (with a size report) when the assignment
    count exceeds the guard.  Entirely independent of the solver path:
    satisfaction is checked with eval_formula only.
    """
    params = constraint.parameters()
    missing = [p for p in params if p not in bounds]
    if missing:
        raise ValueError(f"no bounds for parameters {missing}")
    total = 1
    for p in params:
        lo, hi = bounds[p]
        if hi < lo:
            return None
        total *= hi - lo + 1
        if total > ENUMERATION_GUARD:
            raise RangeTooLarge(
                f"assignment space exceeds {ENUMERATION_GUARD} "
                f"(at least {total} after {p})")

    import itertools
    ranges = [range(bounds[p][0], bounds[p][1] + 1) for p in params]
    for values in itertools.product(*ranges):
        sigma = dict(zip(params, values))
        if constraint.holds_under(sigma):
            return sigma
    return None


class SolverPool:
    """Reusable solver handles; each borrower gets exclusive use of one."""

    def __init__(self, command: Sequence[str] | None = None) -> None:
        self._command = list(command) if command is not None else None
        self._free: list[SolverHandle] = []
        self._lock = threading.Lock()

    def acquire(self) -> SolverHandle:
        with self._lock:
            if self._free:
                return self._free.pop()
        return SolverHandle(self._command)

    def release(self, handle: SolverHandle) -> None:
        with self._lock:
            self._free.append(handle)

    def close_all(self) -> None:
        with self._lock:
            handles, self._free = self._free, []
        for h in handles:
            h.close()
