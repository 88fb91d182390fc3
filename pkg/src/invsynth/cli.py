"""Command-line front end: solve, validate, train-mc, bench, serve-env."""

from __future__ import annotations

import argparse
import glob
import json
import os
import random
import signal
import socket
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed

from .backend import SolverPool
from .chc import CHCSystem
from .engine import EngineConfig, Outcome, run_cegis
from .envserver import (action_from_wire, serve_stdio, serve_tcp,
                        state_to_wire)
from .logic import formula_to_smt
from .mc import TrainConfig, train
from .parsing import ParseError, parse_problem_file, parse_witness, print_witness
from .policies import (ExpertPolicy, QTable, RandomPolicy, TablePolicy,
                       raw_abstract)
from .validator import Validator

EXIT_ANSWERED = 0
EXIT_ERROR = 1
EXIT_TIMEOUT = 2


class CliError(Exception):
    pass


# --- policies from specs ------------------------------------------------------

class RemotePolicy:
    """Thin client for a remote action server (newline JSON over TCP)."""

    def __init__(self, endpoint: str) -> None:
        host, _, port = endpoint.rpartition(":")
        if not host or not port.isdigit():
            raise CliError(f"remote endpoint must be host:port, got {endpoint!r}")
        self._address = (host, int(port))
        self._sock: socket.socket | None = None
        self._reader = None

    def _connect(self) -> None:
        if self._sock is None:
            self._sock = socket.create_connection(self._address, timeout=60)
            self._reader = self._sock.makefile("r", encoding="utf-8")

    def _round_trip(self, payload: dict) -> dict:
        self._connect()
        assert self._sock is not None and self._reader is not None
        self._sock.sendall((json.dumps(payload) + "\n").encode("utf-8"))
        line = self._reader.readline()
        if not line:
            raise CliError("remote policy disconnected")
        return json.loads(line)

    def begin_episode(self) -> None:
        reply = self._round_trip({"type": "begin"})
        if reply.get("type") != "ok":
            raise CliError(f"remote policy refused begin: {reply}")

    def decide(self, state):
        reply = self._round_trip({"type": "state",
                                  "state": state_to_wire(raw_abstract(state))})
        if reply.get("type") != "action":
            raise CliError(f"remote policy sent {reply.get('type')!r}, expected action")
        return action_from_wire(reply.get("action"))

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None


def make_policy(spec: str, seed: int, expert_states: bool):
    if spec == "expert":
        return ExpertPolicy()
    if spec == "random":
        return RandomPolicy(random.Random(seed))
    if spec.startswith("mc:"):
        table = QTable.load(spec[3:])
        return TablePolicy(table, epsilon=0.0, rng=random.Random(seed),
                           expert_states=expert_states)
    if spec.startswith("remote:"):
        return RemotePolicy(spec[len("remote:"):])
    raise CliError(f"unknown policy {spec!r} "
                   "(expected expert, random, mc:<table> or remote:<host:port>)")


def load_problem(path: str) -> CHCSystem:
    try:
        return parse_problem_file(path)
    except (ParseError, OSError) as e:
        raise CliError(f"cannot load {path}: {e}") from e


def problem_files(directory: str) -> list[str]:
    if not os.path.isdir(directory):
        raise CliError(f"not a directory: {directory}")
    files = sorted(p for p in glob.glob(os.path.join(directory, "*"))
                   if p.endswith(".chc") or p.endswith(".sl"))
    if not files:
        raise CliError(f"no .chc or .sl problems in {directory}")
    return files


# --- solve ---------------------------------------------------------------------

def run_solve_task(path: str, policy_spec: str, timeout_s: float,
                   query_timeout_s: float, seed: int,
                   expert_states: bool) -> tuple[str, str, float, str | None]:
    """Worker-safe solve: returns (name, outcome, seconds, witness text)."""
    chc = load_problem(path)
    policy = make_policy(policy_spec, seed, expert_states)
    cfg = EngineConfig(policy=policy, total_timeout_s=timeout_s,
                       query_timeout_s=query_timeout_s, seed=seed)
    started = time.monotonic()
    outcome = run_cegis(chc, cfg)
    took = time.monotonic() - started
    witness = None
    if outcome.kind == "sat":
        assert outcome.candidate is not None
        validator = Validator()
        try:
            verdict = validator.validate(chc, outcome.candidate,
                                         max(query_timeout_s, 5.0))
        finally:
            validator.close()
        if not verdict.is_valid:
            return (chc.name, "error", took,
                    f"internal: witness failed revalidation ({verdict.kind})")
        witness = print_witness(chc, outcome.candidate.formula)
    kind = outcome.kind
    if kind == "error":
        witness = outcome.diagnostic
    if isinstance(policy, RemotePolicy):
        policy.close()
    return (chc.name, kind, took, witness)


def cmd_solve(args) -> int:
    name, kind, took, payload = run_solve_task(
        args.file, args.policy, args.timeout, args.query_timeout,
        args.seed, args.expert_states)
    if kind == "sat":
        print("sat")
        print(payload, end="")
        if args.witness:
            with open(args.witness, "w") as fh:
                fh.write(payload)
        return EXIT_ANSWERED
    if kind == "unsat":
        print("unsat")
        return EXIT_ANSWERED
    if kind == "timeout":
        print("timeout")
        return EXIT_TIMEOUT
    print(f"error: {payload}", file=sys.stderr)
    return EXIT_ERROR


# --- validate ------------------------------------------------------------------

def cmd_validate(args) -> int:
    chc = load_problem(args.problem)
    try:
        with open(args.witness) as fh:
            predicate = parse_witness(fh.read(), chc)
    except (ParseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    validator = Validator()
    try:
        verdict = validator.validate(chc, predicate, args.query_timeout)
    finally:
        validator.close()
    if verdict.is_valid:
        print("valid")
        return 0
    if verdict.kind == "cex":
        print(f"invalid: {verdict.source} clause violated, "
              f"counterexample {verdict.clause}")
        return 1
    print(f"error: validation inconclusive ({verdict.reason})", file=sys.stderr)
    return EXIT_ERROR


# --- train-mc ------------------------------------------------------------------

def cmd_train_mc(args) -> int:
    files = problem_files(args.problems)
    problems = [(os.path.basename(p), load_problem(p)) for p in files]
    cfg = TrainConfig(epsilon=args.epsilon, gamma=args.gamma,
                      episode_timeout_s=args.episode_timeout,
                      epochs=args.epochs, seed=args.seed,
                      expert_states=args.expert_states,
                      query_timeout_s=args.query_timeout, jobs=args.jobs)
    table, report = train(problems, cfg,
                          progress=lambda msg: print(msg, file=sys.stderr))
    table.save(args.out)
    if args.report:
        report.write(args.report)
    print(f"saved table with {len(table)} entries to {args.out} "
          f"(best epoch {report.best_epoch})")
    return 0


# --- bench ---------------------------------------------------------------------

def cmd_bench(args) -> int:
    files = problem_files(args.problems)
    policies = args.policy or ["expert"]
    tasks = [(path, spec) for path in files for spec in policies]

    results: dict[tuple[str, str], tuple[str, str, float, str | None]] = {}
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            futures = {
                ex.submit(run_solve_task, path, spec, args.timeout,
                          args.query_timeout, args.seed, args.expert_states):
                (path, spec)
                for path, spec in tasks}
            for fut in as_completed(futures):
                results[futures[fut]] = fut.result()
    else:
        for path, spec in tasks:
            results[(path, spec)] = run_solve_task(
                path, spec, args.timeout, args.query_timeout, args.seed,
                args.expert_states)

    witness_dir = args.witness_dir
    if witness_dir:
        os.makedirs(witness_dir, exist_ok=True)

    rows = []
    for path in files:
        per_policy = [results[(path, spec)] for spec in policies]
        name = per_policy[0][0]
        answered = [r for r in per_policy if r[1] in ("sat", "unsat")]
        if answered:
            best = min(answered, key=lambda r: r[2])
            outcome, took, witness = best[1], best[2], best[3]
        else:
            outcome = "timeout"
            took = max(r[2] for r in per_policy)
            witness = None
        witness_path = ""
        if outcome == "sat" and witness and witness_dir:
            witness_path = os.path.join(witness_dir, f"{name}.smt2")
            with open(witness_path, "w") as fh:
                fh.write(witness)
        rows.append((name, outcome, took, witness_path))

    counts = {"sat": 0, "unsat": 0, "timeout": 0}
    total_time = 0.0
    for name, outcome, took, witness_path in rows:
        counts[outcome] = counts.get(outcome, 0) + 1
        total_time += took
        extra = f"  {witness_path}" if witness_path else ""
        print(f"{name:24s} {outcome:8s} {took:8.2f}{extra}")
    print(f"{'summary':24s} sat {counts['sat']} unsat {counts['unsat']} "
          f"timeout {counts['timeout']} time {total_time:.2f}")

    if args.out:
        with open(args.out, "w") as fh:
            for name, outcome, took, witness_path in rows:
                suffix = f" {witness_path}" if witness_path else ""
                fh.write(f"problem {name} {outcome} {took:.3f}{suffix}\n")
            fh.write(f"total sat {counts['sat']} unsat {counts['unsat']} "
                     f"timeout {counts['timeout']} time {total_time:.3f}\n")
    return 0


# --- serve-env -----------------------------------------------------------------

def cmd_serve_env(args) -> int:
    problem_files(args.problems)  # fail fast on an empty directory
    if args.transport == "stdio":
        serve_stdio(args.problems)
        return 0
    if args.transport.startswith("tcp:"):
        port_text = args.transport[4:]
        if not port_text.isdigit():
            raise CliError(f"bad tcp port {port_text!r}")
        server = serve_tcp(args.problems, int(port_text))

        def shutdown(signum, frame):
            # shutdown() blocks until serve_forever returns, so it must not
            # run on the thread that is inside serve_forever
            import threading
            threading.Thread(target=server.shutdown, daemon=True).start()

        signal.signal(signal.SIGTERM, shutdown)
        signal.signal(signal.SIGINT, shutdown)
        host, port = server.server_address[:2]
        print(f"serving environment on {host}:{port}", file=sys.stderr)
        try:
            server.serve_forever()
        finally:
            server.server_close()
        return 0
    raise CliError(f"unknown transport {args.transport!r} (stdio or tcp:<port>)")


# --- argument plumbing ----------------------------------------------------------

def _read_config(path: str) -> dict[str, object]:
    values: dict[str, object] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise CliError(f"{path}:{lineno}: expected '<key> <value>'")
            key, raw = parts
            key = key.replace("-", "_")
            if raw in ("true", "false"):
                values[key] = raw == "true"
            else:
                try:
                    values[key] = int(raw)
                except ValueError:
                    try:
                        values[key] = float(raw)
                    except ValueError:
                        values[key] = raw
    return values


def build_parser() -> tuple[argparse.ArgumentParser, list[argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="invsynth",
        description="Template-based synthesis of linear loop invariants")
    parser.add_argument("--config", help="file of '<flag> <value>' defaults")
    sub = parser.add_subparsers(dest="command", required=True)
    all_parsers: list[argparse.ArgumentParser] = [parser]

    def common(p):
        p.add_argument("--timeout", type=float, default=60.0,
                       help="total budget per problem in seconds")
        p.add_argument("--query-timeout", type=float, default=5.0,
                       help="per-solver-query budget in seconds")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--expert-states", action="store_true",
                       help="use the uniform-shape abstraction for mc tables")

    p = sub.add_parser("solve", help="solve one problem file")
    p.add_argument("file")
    p.add_argument("--policy", default="expert")
    p.add_argument("--witness", help="also write the witness to this path")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a witness against a problem")
    p.add_argument("problem")
    p.add_argument("witness")
    p.add_argument("--query-timeout", type=float, default=5.0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train-mc", help="train a value table by Monte Carlo control")
    p.add_argument("--problems", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--episode-timeout", type=float, default=120.0)
    p.add_argument("--query-timeout", type=float, default=5.0)
    p.add_argument("--expert-states", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="table file to write")
    p.add_argument("--report", help="training report file")
    p.set_defaults(func=cmd_train_mc)

    p = sub.add_parser("bench", help="run a problem directory and tabulate")
    p.add_argument("--problems", required=True)
    p.add_argument("--policy", action="append",
                   help="repeatable; two policies run jointly per problem")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="machine-readable report file")
    p.add_argument("--witness-dir", help="directory for sat witnesses")
    common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve-env", help="serve synthesis runs as RL episodes")
    p.add_argument("--transport", default="stdio", help="stdio or tcp:<port>")
    p.add_argument("--problems", required=True)
    p.set_defaults(func=cmd_serve_env)

    all_parsers.extend(sub.choices.values())
    return parser, all_parsers


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, all_parsers = build_parser()
    if "--config" in argv:  # config values become defaults; flags win
        path = argv[argv.index("--config") + 1] if argv.index("--config") + 1 < len(argv) else ""
        try:
            defaults = _read_config(path)
        except (OSError, CliError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_ERROR
        for p in all_parsers:
            p.set_defaults(**defaults)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
