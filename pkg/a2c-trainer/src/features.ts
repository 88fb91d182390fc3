import { WireBound, WireState } from "./protocol.js";

/** Version stamp stored with checkpoints; bump on any encoding change. */
export const FEATURE_VERSION = 1;
export const FEATURE_LENGTH = 9;

function boundToUnit(value: WireBound): number {
  // 0..4 stay themselves, 5 stands for "5 or more", infinity maps to 6.
  const raw = value === "inf" ? 6 : Math.min(value, 5);
  return raw / 6;
}

/** Fixed-length [0,1] encoding of an observation. */
export function encodeState(state: WireState): number[] {
  const n = [...state.n];
  while (n.length < 4) n.push(0);
  return [
    Math.min(n[0], 4) / 4,
    Math.min(n[1], 4) / 4,
    Math.min(n[2], 4) / 4,
    Math.min(n[3], 4) / 4,
    boundToUnit(state.p),
    boundToUnit(state.q),
    state.f1 ? 1 : 0,
    state.f2 ? 1 : 0,
    Math.min(state.z, 4) / 4,
  ];
}
