/** Wire types for the synthesis environment's line-delimited JSON protocol. */

export type WireBound = number | "inf";

export interface WireState {
  n: number[]; // conjunct counts, zero-padded to length 4, capped at 4
  p: WireBound; // coefficient budget, capped at 5
  q: WireBound; // constant budget, capped at 5
  f1: boolean; // coefficient budget appeared in the last unsat core
  f2: boolean; // constant budget appeared in the last unsat core
  z: number; // candidates since the last template change, capped at 4
}

export interface WireAction {
  n: number[];
  p: WireBound;
  q: WireBound;
}

export interface StateReply {
  type: "state";
  state: WireState;
  reward: number;
  done: boolean;
  outcome?: "sat" | "unsat" | "timeout" | "error";
}

export interface ErrorReply {
  type: "error";
  message: string;
}

export interface ClosedReply {
  type: "closed";
}

export type Reply = StateReply | ErrorReply | ClosedReply;

export function isStateReply(reply: Reply): reply is StateReply {
  return reply.type === "state";
}

/**
 * The canonical action list: every (n in {0,1}^4, p in {0,1,inf},
 * q in {0,1,inf}) except the all-zero no-op, ordered lexicographically with
 * infinity last. Must match the solver side exactly; index = action id.
 */
export function allActions(): WireAction[] {
  const bounds: WireBound[] = [0, 1, "inf"];
  const out: WireAction[] = [];
  for (let bits = 0; bits < 16; bits++) {
    const n = [8, 4, 2, 1].map((m) => ((bits & m) ? 1 : 0));
    for (const p of bounds) {
      for (const q of bounds) {
        if (n.every((b) => b === 0) && p === 0 && q === 0) continue;
        out.push({ n, p, q });
      }
    }
  }
  return out;
}

export const ACTIONS = allActions();
export const ACTION_COUNT = ACTIONS.length; // 143
