import { EnvClient } from "./client.js";
import { encodeState } from "./features.js";
import { Agent } from "./model.js";
import { ACTIONS, StateReply } from "./protocol.js";
import { discountedReturns } from "./returns.js";
import { Rng } from "./rng.js";

export interface EpisodeRecord {
  problem: string;
  states: number[][];
  actions: number[];
  rewards: number[];
  outcome: string;
  totalReward: number;
}

export type ActionPicker = (features: number[]) => number;

/** Roll one episode, choosing actions with the supplied picker. */
export async function runEpisode(
  client: EnvClient,
  problem: string,
  timeLimitS: number,
  pick: ActionPicker,
): Promise<EpisodeRecord> {
  const states: number[][] = [];
  const actions: number[] = [];
  const rewards: number[] = [];
  let reply: StateReply = await client.reset(problem, timeLimitS);
  while (!reply.done) {
    const features = encodeState(reply.state);
    const actionIdx = pick(features);
    states.push(features);
    actions.push(actionIdx);
    reply = await client.step(ACTIONS[actionIdx]);
    rewards.push(reply.reward);
  }
  return {
    problem,
    states,
    actions,
    rewards,
    outcome: reply.outcome ?? "sat",
    totalReward: rewards.reduce((a, b) => a + b, 0),
  };
}

export interface TrainOptions {
  epochs: number;
  timeLimitS: number;
  seed: number;
  onEpisode?: (epoch: number, record: EpisodeRecord) => void;
}

export interface TrainResult {
  episodes: EpisodeRecord[];
  meanReturn: number;
}

/**
 * On-policy advantage actor-critic: one gradient update per completed
 * episode, with whole-trajectory discounted returns as targets.
 */
export async function trainA2C(
  agent: Agent,
  client: EnvClient,
  problems: string[],
  options: TrainOptions,
): Promise<TrainResult> {
  const rng = new Rng(options.seed);
  const episodes: EpisodeRecord[] = [];
  for (let epoch = 0; epoch < options.epochs; epoch++) {
    for (const problem of problems) {
      const record = await runEpisode(client, problem, options.timeLimitS, (f) =>
        agent.sample(f, rng),
      );
      episodes.push(record);
      options.onEpisode?.(epoch, record);
      if (record.states.length > 0) {
        const returns = discountedReturns(record.rewards, agent.cfg.gamma);
        agent.update(record.states, record.actions, returns);
      }
    }
  }
  const meanReturn =
    episodes.reduce((a, e) => a + e.totalReward, 0) / Math.max(1, episodes.length);
  return { episodes, meanReturn };
}

export interface EvalRow {
  problem: string;
  outcome: string;
  timeS: number;
}

export interface EvalReport {
  rows: EvalRow[];
  sat: number;
  unsat: number;
  timeout: number;
  timeS: number;
}

/** Greedy evaluation; emits one row per problem in Table style. */
export async function evaluate(
  agent: Agent,
  client: EnvClient,
  problems: string[],
  timeLimitS: number,
): Promise<EvalReport> {
  const rows: EvalRow[] = [];
  for (const problem of problems) {
    const started = Date.now();
    const record = await runEpisode(client, problem, timeLimitS, (f) =>
      agent.greedy(f),
    );
    rows.push({
      problem,
      outcome: record.outcome === "error" ? "timeout" : record.outcome,
      timeS: (Date.now() - started) / 1000,
    });
  }
  const count = (kind: string) => rows.filter((r) => r.outcome === kind).length;
  return {
    rows,
    sat: count("sat"),
    unsat: count("unsat"),
    timeout: count("timeout"),
    timeS: rows.reduce((a, r) => a + r.timeS, 0),
  };
}

export function formatReport(report: EvalReport): string {
  const lines = report.rows.map(
    (r) => `problem ${r.problem} ${r.outcome} ${r.timeS.toFixed(3)}`,
  );
  lines.push(
    `total sat ${report.sat} unsat ${report.unsat} timeout ${report.timeout} ` +
      `time ${report.timeS.toFixed(3)}`,
  );
  return lines.join("\n") + "\n";
}

/** Uniform-random baseline over the same action set, for comparisons. */
export function randomPicker(seed: number): ActionPicker {
  const rng = new Rng(seed);
  return () => rng.int(ACTIONS.length);
}
