import { describe, expect, it } from "vitest";

import { discountedReturns } from "../src/returns.js";
import { Rng } from "../src/rng.js";

function bruteForce(rewards: number[], gamma: number): number[] {
  return rewards.map((_, i) => {
    let total = 0;
    for (let j = i; j < rewards.length; j++) {
      total += rewards[j] * Math.pow(gamma, j - i);
    }
    return total;
  });
}

describe("discounted returns", () => {
  it("matches the worked two-step example at gamma 0.99", () => {
    const out = discountedReturns([-1, -1], 0.99);
    expect(out[0]).toBeCloseTo(-1.99, 10);
    expect(out[1]).toBeCloseTo(-1, 10);
  });

  it("agrees with the double loop to 1e-9 on random sequences", () => {
    const rng = new Rng(99);
    for (let trial = 0; trial < 200; trial++) {
      const n = 1 + rng.int(14);
      const rewards = Array.from({ length: n }, () => -5 * rng.next());
      const gamma = [0, 0.5, 0.9, 0.99, 1][rng.int(5)];
      const fast = discountedReturns(rewards, gamma);
      const slow = bruteForce(rewards, gamma);
      for (let i = 0; i < n; i++) {
        expect(Math.abs(fast[i] - slow[i])).toBeLessThanOrEqual(1e-9);
      }
    }
  });

  it("handles the empty trajectory", () => {
    expect(discountedReturns([], 0.99)).toEqual([]);
  });
});
