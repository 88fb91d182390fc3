"""First-visit on-policy Monte Carlo control over synthesis episodes.

An episode is the sequence of template-growth decisions one engine run
made, abstracted to table keys at decision time, with the negated wall time
between decisions as rewards.  Returns are accumulated backward and folded
into running means, first visit per (state, action) pair only.
"""

from __future__ import annotations

import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .backend import SolverPool
from .chc import CHCSystem
from .engine import EngineConfig, Outcome, run_cegis
from .policies import QTable, TablePolicy


@dataclass
class Episode:
    steps: list[tuple[str, str, float]]  # (state key, action key, reward)
    outcome_kind: str

    def __len__(self) -> int:
        return len(self.steps)


@dataclass
class TrainConfig:
    epsilon: float = 0.05
    gamma: float = 1.0
    episode_timeout_s: float = 120.0
    epochs: int = 200
    seed: int = 0
    expert_states: bool = False
    query_timeout_s: float = 5.0
    jobs: int = 1  # >1 runs an epoch's episodes in parallel (updates stay ordered)


def discounted_returns(rewards: Sequence[float], gamma: float) -> list[float]:
    out = [0.0] * len(rewards)
    acc = 0.0
    for i in range(len(rewards) - 1, -1, -1):
        acc = rewards[i] + gamma * acc
        out[i] = acc
    return out


def mc_update(table: QTable, episode: Episode, gamma: float) -> QTable:
    """Fold one episode into the table (first-visit, running means)."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    returns = discounted_returns([r for _, _, r in episode.steps], gamma)
    seen: set[tuple[str, str]] = set()
    for (state_key, action_key, _), ret in zip(episode.steps, returns):
        pair = (state_key, action_key)
        if pair in seen:
            continue
        seen.add(pair)
        table.record_return(state_key, action_key, ret)
    return table


EpisodeRunner = Callable[[CHCSystem, QTable, TrainConfig, random.Random], tuple[Episode, Outcome]]


def run_episode(problem: CHCSystem, table: QTable, cfg: TrainConfig,
                rng: random.Random, pool: SolverPool | None = None) -> tuple[Episode, Outcome]:
    """One engine run under an epsilon-greedy policy bound to ``table``."""
    policy = TablePolicy(table, cfg.epsilon, rng, expert_states=cfg.expert_states)
    engine_cfg = EngineConfig(policy=policy,
                              total_timeout_s=cfg.episode_timeout_s,
                              query_timeout_s=cfg.query_timeout_s)
    outcome = run_cegis(problem, engine_cfg, pool=pool)
    keys = policy.recorded
    rewards = [step.reward for step in outcome.trace]
    if len(keys) != len(rewards):  # decision aborted mid-flight (error paths)
        n = min(len(keys), len(rewards))
        keys, rewards = keys[:n], rewards[:n]
    steps = [(s, a, r) for (s, a), r in zip(keys, rewards)]
    return Episode(steps, outcome.kind), outcome


@dataclass
class EpochRow:
    epoch: int
    problem: str
    outcome: str
    time_s: float
    steps: int


@dataclass
class TrainReport:
    rows: list[EpochRow] = field(default_factory=list)
    best_epoch: int = -1
    epoch_solved: list[int] = field(default_factory=list)
    epoch_time: list[float] = field(default_factory=list)

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(f"best-epoch {self.best_epoch}\n")
            for e, (solved, took) in enumerate(zip(self.epoch_solved, self.epoch_time)):
                fh.write(f"epoch {e} solved {solved} time {took:.3f}\n")
            for row in self.rows:
                fh.write(f"row {row.epoch} {row.problem} {row.outcome} "
                         f"{row.time_s:.3f} {row.steps}\n")


def train(problems: Sequence[tuple[str, CHCSystem]], cfg: TrainConfig,
          episode_runner: EpisodeRunner | None = None,
          pool: SolverPool | None = None,
          progress: Callable[[str], None] | None = None) -> tuple[QTable, TrainReport]:
    """Epochs of episodes with per-epoch snapshots; returns the snapshot with
    the best training performance (solved count first, then total time)."""
    if not problems:
        raise ValueError("training needs at least one problem")
    master = random.Random(cfg.seed)
    table = QTable()
    report = TrainReport()
    own_pool = pool is None and episode_runner is None
    if own_pool:
        pool = SolverPool()
    snapshots: list[QTable] = []

    def one_episode(name: str, chc: CHCSystem, seed: int) -> tuple[str, Episode, Outcome]:
        rng = random.Random(seed)
        if episode_runner is not None:
            episode, outcome = episode_runner(chc, table, cfg, rng)
        else:
            episode, outcome = run_episode(chc, table, cfg, rng, pool=pool)
        return name, episode, outcome

    try:
        for epoch in range(cfg.epochs):
            order = list(problems)
            master.shuffle(order)
            seeds = [master.randrange(2 ** 31) for _ in order]
            solved = 0
            took = 0.0
            if cfg.jobs > 1:
                # Episodes run concurrently; updates apply in completion order.
                from concurrent.futures import as_completed
                with ThreadPoolExecutor(max_workers=cfg.jobs) as ex:
                    futures = [ex.submit(one_episode, n, c, s)
                               for (n, c), s in zip(order, seeds)]
                    results = [f.result() for f in as_completed(futures)]
            else:
                results = [one_episode(n, c, s) for (n, c), s in zip(order, seeds)]
            for name, episode, outcome in results:
                mc_update(table, episode, cfg.gamma)
                solved += 1 if outcome.kind in ("sat", "unsat") else 0
                took += outcome.wall_time_s
                report.rows.append(EpochRow(epoch, name, outcome.kind,
                                            outcome.wall_time_s, len(episode)))
            report.epoch_solved.append(solved)
            report.epoch_time.append(took)
            snapshots.append(table.snapshot())
            if progress is not None:
                progress(f"epoch {epoch}: solved {solved}/{len(order)} in {took:.1f}s")
    finally:
        if own_pool:
            pool.close_all()

    # Rank epochs by solved count, then total time; ties go to the latest
    # epoch, whose snapshot has seen the most episodes.
    best = max(range(len(snapshots)),
               key=lambda e: (report.epoch_solved[e], -report.epoch_time[e], e))
    report.best_epoch = best
    return snapshots[best], report
