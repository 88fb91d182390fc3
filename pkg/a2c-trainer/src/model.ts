import * as tf from "@tensorflow/tfjs";
import * as fs from "node:fs";
import * as path from "node:path";

import { FEATURE_LENGTH, FEATURE_VERSION } from "./features.js";
import { ACTION_COUNT } from "./protocol.js";
import { Rng } from "./rng.js";

export interface AgentConfig {
  gamma: number;
  learningRate: number;
  hidden: [number, number];
  seed: number;
}

export const DEFAULT_CONFIG: AgentConfig = {
  gamma: 0.99,
  learningRate: 5e-5,
  hidden: [256, 512],
  seed: 0,
};

function trainableVars(model: tf.Sequential): tf.Variable[] {
  // LayerVariable.val is the backing tf.Variable; the field is protected in
  // the typings but stable across tfjs releases.
  return model.trainableWeights.map(
    (w) => (w as unknown as { val: tf.Variable }).val,
  );
}

function mlp(outputs: number, cfg: AgentConfig, seedOffset: number): tf.Sequential {
  const model = tf.sequential();
  model.add(
    tf.layers.dense({
      inputShape: [FEATURE_LENGTH],
      units: cfg.hidden[0],
      activation: "relu",
      kernelInitializer: tf.initializers.glorotUniform({ seed: cfg.seed + seedOffset }),
    }),
  );
  model.add(
    tf.layers.dense({
      units: cfg.hidden[1],
      activation: "relu",
      kernelInitializer: tf.initializers.glorotUniform({ seed: cfg.seed + seedOffset + 1 }),
    }),
  );
  model.add(
    tf.layers.dense({
      units: outputs,
      kernelInitializer: tf.initializers.glorotUniform({ seed: cfg.seed + seedOffset + 2 }),
    }),
  );
  return model;
}

/** Actor (143-way categorical head) and critic (scalar value) pair. */
export class Agent {
  readonly cfg: AgentConfig;
  readonly actor: tf.Sequential;
  readonly critic: tf.Sequential;
  private actorOpt: tf.Optimizer;
  private criticOpt: tf.Optimizer;

  constructor(cfg: AgentConfig = DEFAULT_CONFIG) {
    this.cfg = cfg;
    this.actor = mlp(ACTION_COUNT, cfg, 101);
    this.critic = mlp(1, cfg, 707);
    this.actorOpt = tf.train.rmsprop(cfg.learningRate);
    this.criticOpt = tf.train.rmsprop(cfg.learningRate);
  }

  /** Action distribution for one encoded state; sums to 1. */
  policy(features: number[]): Float32Array {
    return tf.tidy(() => {
      const logits = this.actor.predict(tf.tensor2d([features])) as tf.Tensor2D;
      return tf.softmax(logits).dataSync() as Float32Array;
    });
  }

  sample(features: number[], rng: Rng): number {
    return rng.categorical(this.policy(features));
  }

  greedy(features: number[]): number {
    const probs = this.policy(features);
    let best = 0;
    for (let i = 1; i < probs.length; i++) {
      if (probs[i] > probs[best]) best = i;
    }
    return best;
  }

  value(features: number[]): number {
    return tf.tidy(() => {
      const out = this.critic.predict(tf.tensor2d([features])) as tf.Tensor2D;
      return out.dataSync()[0];
    });
  }

  /**
   * One policy-gradient and critic step on a whole trajectory.
   * Advantages are returns minus the critic baseline (detached); the critic
   * regresses onto the discounted returns.  Returns the critic loss before
   * the update.
   */
  update(states: number[][], actions: number[], returns: number[]): number {
    if (states.length === 0) return 0;
    const x = tf.tensor2d(states);
    const g = tf.tensor1d(returns);
    const actionIdx = tf.tensor1d(actions, "int32");

    const baseline = tf.tidy(
      () => (this.critic.predict(x) as tf.Tensor2D).squeeze([1]),
    );
    const advantage = tf.tidy(() => g.sub(baseline));

    const criticLossBefore = tf.tidy(() => {
      const v = (this.critic.predict(x) as tf.Tensor2D).squeeze([1]);
      return g.sub(v).square().sum().dataSync()[0];
    });

    this.actorOpt.minimize(
      () =>
        tf.tidy(() => {
          const logits = this.actor.predict(x) as tf.Tensor2D;
          const logProbs = tf.logSoftmax(logits);
          const picked = tf
            .oneHot(actionIdx, ACTION_COUNT)
            .mul(logProbs)
            .sum(1);
          return picked.mul(advantage).sum().neg() as tf.Scalar;
        }),
      false,
      trainableVars(this.actor),
    );

    this.criticOpt.minimize(
      () =>
        tf.tidy(() => {
          const v = (this.critic.predict(x) as tf.Tensor2D).squeeze([1]);
          return g.sub(v).square().sum() as tf.Scalar;
        }),
      false,
      trainableVars(this.critic),
    );

    x.dispose();
    g.dispose();
    actionIdx.dispose();
    baseline.dispose();
    advantage.dispose();
    return criticLossBefore;
  }

  criticLoss(states: number[][], returns: number[]): number {
    return tf.tidy(() => {
      const v = (this.critic.predict(tf.tensor2d(states)) as tf.Tensor2D).squeeze([1]);
      return tf.tensor1d(returns).sub(v).square().sum().dataSync()[0];
    });
  }

  async save(dir: string): Promise<void> {
    fs.mkdirSync(dir, { recursive: true });
    await saveModel(this.actor, path.join(dir, "actor"));
    await saveModel(this.critic, path.join(dir, "critic"));
    fs.writeFileSync(
      path.join(dir, "meta.json"),
      JSON.stringify(
        {
          featureVersion: FEATURE_VERSION,
          featureLength: FEATURE_LENGTH,
          actionCount: ACTION_COUNT,
          gamma: this.cfg.gamma,
          learningRate: this.cfg.learningRate,
          hidden: this.cfg.hidden,
          seed: this.cfg.seed,
        },
        null,
        2,
      ),
    );
  }

  static async load(dir: string): Promise<Agent> {
    const meta = JSON.parse(fs.readFileSync(path.join(dir, "meta.json"), "utf-8"));
    if (meta.featureVersion !== FEATURE_VERSION) {
      throw new Error(
        `checkpoint feature version ${meta.featureVersion} != ${FEATURE_VERSION}`,
      );
    }
    const agent = new Agent({
      gamma: meta.gamma,
      learningRate: meta.learningRate,
      hidden: meta.hidden,
      seed: meta.seed,
    });
    const actor = await loadModel(path.join(dir, "actor"));
    const critic = await loadModel(path.join(dir, "critic"));
    agent.actor.setWeights(actor.getWeights());
    agent.critic.setWeights(critic.getWeights());
    actor.dispose();
    critic.dispose();
    return agent;
  }
}

// The plain tfjs bundle has no file:// IO handler (that lives in tfjs-node),
// so checkpoints go through explicit memory handlers.

async function saveModel(model: tf.LayersModel, dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightData = tf.io.CompositeArrayBuffer.join(artifacts.weightData);
      fs.writeFileSync(
        path.join(dir, "model.json"),
        JSON.stringify({
          modelTopology: artifacts.modelTopology,
          weightSpecs: artifacts.weightSpecs,
        }),
      );
      fs.writeFileSync(path.join(dir, "weights.bin"), Buffer.from(weightData));
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: "JSON" as const,
        },
      };
    }),
  );
}

async function loadModel(dir: string): Promise<tf.LayersModel> {
  const meta = JSON.parse(fs.readFileSync(path.join(dir, "model.json"), "utf-8"));
  const raw = fs.readFileSync(path.join(dir, "weights.bin"));
  const weightData = raw.buffer.slice(
    raw.byteOffset,
    raw.byteOffset + raw.byteLength,
  );
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: meta.modelTopology,
      weightSpecs: meta.weightSpecs,
      weightData,
    }),
  );
}
