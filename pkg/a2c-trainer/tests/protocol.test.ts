import { execFileSync } from "node:child_process";
import { describe, expect, it } from "vitest";

import { ACTIONS, ACTION_COUNT } from "../src/protocol.js";

describe("action catalogue", () => {
  it("has exactly 143 actions and no no-op", () => {
    expect(ACTION_COUNT).toBe(143);
    for (const a of ACTIONS) {
      const zero = a.n.every((b) => b === 0) && a.p === 0 && a.q === 0;
      expect(zero).toBe(false);
    }
  });

  it("matches the solver side's canonical ordering exactly", () => {
    const script = [
      "from invsynth.policies import RAW_ACTIONS",
      "import json",
      "rows = [{'n': list(a.grow),",
      "         'p': 'inf' if a.coeff_add == float('inf') else a.coeff_add,",
      "         'q': 'inf' if a.const_add == float('inf') else a.const_add}",
      "        for a in RAW_ACTIONS]",
      "print(json.dumps(rows))",
    ].join("\n");
    const theirs = JSON.parse(
      execFileSync("python3", ["-c", script], { encoding: "utf-8" }),
    );
    expect(ACTIONS).toEqual(theirs);
  });
});
