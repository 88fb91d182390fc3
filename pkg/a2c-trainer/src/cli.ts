import * as fs from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { evaluate, formatReport, randomPicker, runEpisode, trainA2C } from "./a2c.js";
import { EnvClient } from "./client.js";
import { Agent, DEFAULT_CONFIG } from "./model.js";

function parseEndpoint(endpoint: string): [string, number] {
  const idx = endpoint.lastIndexOf(":");
  if (idx <= 0) throw new Error(`endpoint must be host:port, got ${endpoint}`);
  return [endpoint.slice(0, idx), Number(endpoint.slice(idx + 1))];
}

function problemList(args: { problems?: string; problemsFile?: string }): string[] {
  if (args.problemsFile) {
    return fs
      .readFileSync(args.problemsFile, "utf-8")
      .split("\n")
      .map((l) => l.trim())
      .filter(Boolean);
  }
  if (args.problems) return args.problems.split(",").map((p) => p.trim());
  throw new Error("pass --problems or --problems-file");
}

await yargs(hideBin(process.argv))
  .command(
    "train",
    "train an actor-critic policy against a running environment server",
    (y) =>
      y
        .option("endpoint", { type: "string", demandOption: true })
        .option("problems", { type: "string" })
        .option("problems-file", { type: "string" })
        .option("epochs", { type: "number", default: 200 })
        .option("time-limit", { type: "number", default: 10 })
        .option("gamma", { type: "number", default: DEFAULT_CONFIG.gamma })
        .option("lr", { type: "number", default: DEFAULT_CONFIG.learningRate })
        .option("seed", { type: "number", default: 0 })
        .option("out", { type: "string", demandOption: true }),
    async (args) => {
      const [host, port] = parseEndpoint(args.endpoint);
      const client = await EnvClient.connect(host, port);
      const agent = new Agent({
        ...DEFAULT_CONFIG,
        gamma: args.gamma,
        learningRate: args.lr,
        seed: args.seed,
      });
      const result = await trainA2C(agent, client, problemList(args), {
        epochs: args.epochs,
        timeLimitS: args["time-limit"],
        seed: args.seed,
        onEpisode: (epoch, rec) =>
          console.error(
            `epoch ${epoch} ${rec.problem}: ${rec.outcome} return ${rec.totalReward.toFixed(3)}`,
          ),
      });
      await agent.save(args.out);
      await client.close();
      console.log(
        `trained ${result.episodes.length} episodes, mean return ` +
          `${result.meanReturn.toFixed(3)}; saved to ${args.out}`,
      );
    },
  )
  .command(
    "eval",
    "greedy evaluation of a checkpoint",
    (y) =>
      y
        .option("endpoint", { type: "string", demandOption: true })
        .option("checkpoint", { type: "string", demandOption: true })
        .option("problems", { type: "string" })
        .option("problems-file", { type: "string" })
        .option("time-limit", { type: "number", default: 60 })
        .option("out", { type: "string" }),
    async (args) => {
      const [host, port] = parseEndpoint(args.endpoint);
      const client = await EnvClient.connect(host, port);
      const agent = await Agent.load(args.checkpoint);
      const report = await evaluate(
        agent,
        client,
        problemList(args),
        args["time-limit"],
      );
      await client.close();
      const text = formatReport(report);
      if (args.out) fs.writeFileSync(args.out, text);
      process.stdout.write(text);
    },
  )
  .command(
    "baseline",
    "uniform-random rollouts over the same problems, for comparison",
    (y) =>
      y
        .option("endpoint", { type: "string", demandOption: true })
        .option("problems", { type: "string" })
        .option("problems-file", { type: "string" })
        .option("episodes", { type: "number", default: 1 })
        .option("time-limit", { type: "number", default: 10 })
        .option("seed", { type: "number", default: 0 }),
    async (args) => {
      const [host, port] = parseEndpoint(args.endpoint);
      const client = await EnvClient.connect(host, port);
      const pick = randomPicker(args.seed);
      let total = 0;
      let count = 0;
      for (let round = 0; round < args.episodes; round++) {
        for (const problem of problemList(args)) {
          const rec = await runEpisode(client, problem, args["time-limit"], pick);
          console.error(`${problem}: ${rec.outcome} return ${rec.totalReward.toFixed(3)}`);
          total += rec.totalReward;
          count += 1;
        }
      }
      await client.close();
      console.log(`mean return ${(total / Math.max(1, count)).toFixed(3)} over ${count} episodes`);
    },
  )
  .demandCommand(1)
  .strict()
  .parse();
