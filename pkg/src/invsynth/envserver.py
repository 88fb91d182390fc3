"""Line-delimited JSON protocol that exposes synthesis runs as RL episodes.

One session per connection; the engine for the active episode runs on a
worker thread and blocks at each template dead end until the client sends
an action.  Requests and replies are single-line JSON objects:

    {"type": "reset", "problem": "<file>", "time_limit_s": 60}
        -> {"type": "state", "state": S, "reward": 0.0, "done": false}
    {"type": "step", "action": {"n": [0,1,0,0], "p": 1, "q": "inf"}}
        -> {"type": "state", "state": S, "reward": -0.25, "done": false}
           (terminal replies carry "done": true and "outcome")
    {"type": "close"}
        -> {"type": "closed"}

State payloads are the capped observation: ``n`` zero-padded to length 4,
``p``/``q`` saturating at 5 with infinity as the string "inf", the two core
flags and the candidate counter.  Rewards are minus the seconds since the
previous reply on the session.  Malformed requests get an ``error`` reply
and leave the session usable; an action after the episode finished is a
protocol error.
"""

from __future__ import annotations

import json
import os
import queue
import socketserver
import sys
import threading
import time
from dataclasses import dataclass

from .backend import SolverPool
from .chc import CHCSystem
from .engine import ConcreteState, EngineConfig, Outcome, run_cegis
from .parsing import ParseError, parse_problem_file
from .policies import Action, GROW_WIDTH, RawState, raw_abstract
from .templates import INF


class ProtocolError(Exception):
    pass


def bound_to_wire(value) -> object:
    return "inf" if value == INF else int(value)


def bound_from_wire(value):
    if value == "inf":
        return INF
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProtocolError(f"expected an integer or \"inf\", got {value!r}")
    return value


def state_to_wire(state: RawState) -> dict:
    padded = list(state.conjuncts) + [0] * (GROW_WIDTH - len(state.conjuncts))
    return {
        "n": padded,
        "p": bound_to_wire(state.coeff_bound),
        "q": bound_to_wire(state.const_bound),
        "f1": state.coeff_bound_in_core,
        "f2": state.const_bound_in_core,
        "z": state.candidates,
    }


def action_from_wire(payload) -> Action:
    if not isinstance(payload, dict):
        raise ProtocolError("action must be an object")
    grow = payload.get("n")
    if (not isinstance(grow, list) or len(grow) > GROW_WIDTH
            or any(g not in (0, 1) for g in grow)):
        raise ProtocolError("action field n must be a list of 0/1, length <= 4")
    p = bound_from_wire(payload.get("p", 0))
    q = bound_from_wire(payload.get("q", 0))
    if p not in (0, 1, INF) or q not in (0, 1, INF):
        raise ProtocolError("action fields p and q must be 0, 1 or \"inf\"")
    action = Action(tuple(grow) + (0,) * (GROW_WIDTH - len(grow)), p, q)
    if action.is_zero():
        raise ProtocolError("the all-zero action is excluded")
    return action


class _Aborted(Exception):
    pass


_STOP = object()


class _RemotePolicy:
    """Engine-side policy that forwards decisions to the session owner."""

    def __init__(self) -> None:
        self.decisions: queue.Queue = queue.Queue()
        self.actions: queue.Queue = queue.Queue()

    def begin_episode(self) -> None:
        pass

    def decide(self, state: ConcreteState) -> Action:
        self.decisions.put(("decide", state))
        action = self.actions.get()
        if action is _STOP:
            raise _Aborted("session closed")
        return action


@dataclass
class _Event:
    kind: str  # "decide" | "done"
    state: ConcreteState | None = None
    outcome: Outcome | None = None


class EpisodeSession:
    """One engine run driven by remote actions."""

    def __init__(self, chc: CHCSystem, time_limit_s: float,
                 pool: SolverPool | None = None,
                 query_timeout_s: float = 5.0) -> None:
        self._policy = _RemotePolicy()
        self._last_state: ConcreteState | None = None
        self.done = False
        self.outcome: Outcome | None = None
        cfg = EngineConfig(policy=self._policy, total_timeout_s=time_limit_s,
                           query_timeout_s=query_timeout_s)

        def work() -> None:
            outcome = run_cegis(chc, cfg, pool=pool)
            self._policy.decisions.put(("done", outcome))

        self._thread = threading.Thread(target=work, daemon=True)
        self._thread.start()

    def _next_event(self) -> _Event:
        kind, payload = self._policy.decisions.get()
        if kind == "decide":
            self._last_state = payload
            return _Event("decide", state=payload)
        self.done = True
        self.outcome = payload
        return _Event("done", outcome=payload)

    def start(self) -> _Event:
        return self._next_event()

    def step(self, action: Action) -> _Event:
        if self.done:
            raise ProtocolError("episode already finished")
        self._policy.actions.put(action)
        return self._next_event()

    def last_state(self) -> ConcreteState | None:
        return self._last_state

    def abort(self) -> None:
        if not self.done:
            self._policy.actions.put(_STOP)
            self._thread.join(timeout=30)
            self.done = True


class SessionHandler:
    """Protocol state machine for one connection."""

    def __init__(self, problems_dir: str) -> None:
        self.problems_dir = problems_dir
        self.pool = SolverPool()
        self.session: EpisodeSession | None = None
        self._last_reply = time.monotonic()

    def close(self) -> None:
        if self.session is not None:
            self.session.abort()
            self.session = None
        self.pool.close_all()

    def _resolve(self, problem: str) -> CHCSystem:
        path = problem
        if not os.path.isabs(path):
            path = os.path.join(self.problems_dir, problem)
        if not os.path.exists(path):
            raise ProtocolError(f"unknown problem {path!r}")
        try:
            return parse_problem_file(path)
        except ParseError as e:
            raise ProtocolError(f"cannot parse {path!r}: {e}") from e

    def _state_payload(self, event: _Event, reward: float) -> dict:
        if event.kind == "decide":
            assert event.state is not None
            state = raw_abstract(event.state)
        else:
            assert self.session is not None
            concrete = self.session.last_state()
            if concrete is None:
                assert event.outcome is not None
                concrete = ConcreteState(_initial_shape(), False, False, 0, 0.0)
            state = raw_abstract(concrete)
        reply = {"type": "state", "state": state_to_wire(state),
                 "reward": reward, "done": event.kind == "done"}
        if event.kind == "done":
            assert event.outcome is not None
            reply["outcome"] = event.outcome.kind
        return reply

    def handle_line(self, line: str) -> dict | None:
        """Process one request; returns the reply object (None to hang up)."""
        try:
            reply = self._dispatch(line)
        except ProtocolError as e:
            reply = {"type": "error", "message": str(e)}
        except json.JSONDecodeError as e:
            reply = {"type": "error", "message": f"bad JSON: {e}"}
        self._last_reply = time.monotonic()
        return reply

    def _dispatch(self, line: str) -> dict | None:
        request = json.loads(line)
        if not isinstance(request, dict) or "type" not in request:
            raise ProtocolError("requests must be objects with a type field")
        kind = request["type"]
        if kind == "reset":
            chc = self._resolve(str(request.get("problem", "")))
            limit = request.get("time_limit_s", 60.0)
            if not isinstance(limit, (int, float)) or limit <= 0:
                raise ProtocolError("time_limit_s must be a positive number")
            if self.session is not None:
                self.session.abort()
            self.session = EpisodeSession(chc, float(limit), pool=self.pool)
            event = self.session.start()
            return self._state_payload(event, 0.0)
        if kind == "step":
            if self.session is None:
                raise ProtocolError("no active episode; send reset first")
            if self.session.done:
                raise ProtocolError("episode already finished; send reset")
            action = action_from_wire(request.get("action"))
            anchor = self._last_reply
            event = self.session.step(action)
            reward = -(time.monotonic() - anchor)
            return self._state_payload(event, reward)
        if kind == "close":
            if self.session is not None:
                self.session.abort()
                self.session = None
            return {"type": "closed"}
        raise ProtocolError(f"unknown request type {kind!r}")


def _initial_shape():
    from .templates import INITIAL_SHAPE
    return INITIAL_SHAPE


def serve_stdio(problems_dir: str, infile=None, outfile=None) -> None:
    """Single session over stdin/stdout."""
    infile = infile or sys.stdin
    outfile = outfile or sys.stdout
    handler = SessionHandler(problems_dir)
    try:
        for line in infile:
            line = line.strip()
            if not line:
                continue
            reply = handler.handle_line(line)
            if reply is None:
                break
            outfile.write(json.dumps(reply) + "\n")
            outfile.flush()
    finally:
        handler.close()


class _TcpHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        handler = SessionHandler(self.server.problems_dir)  # type: ignore[attr-defined]
        try:
            for raw in self.rfile:
                line = raw.decode("utf-8").strip()
                if not line:
                    continue
                reply = handler.handle_line(line)
                if reply is None:
                    break
                self.wfile.write((json.dumps(reply) + "\n").encode("utf-8"))
        except (ConnectionResetError, BrokenPipeError):
            pass
        finally:
            handler.close()


class EnvServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], problems_dir: str) -> None:
        super().__init__(address, _TcpHandler)
        self.problems_dir = problems_dir


def serve_tcp(problems_dir: str, port: int, host: str = "127.0.0.1",
              ready: threading.Event | None = None) -> EnvServer:
    server = EnvServer((host, port), problems_dir)
    if ready is not None:
        ready.set()
    return server
