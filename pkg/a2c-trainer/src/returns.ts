/** Discounted returns, accumulated backward in one pass. */
export function discountedReturns(rewards: number[], gamma: number): number[] {
  const out = new Array<number>(rewards.length);
  let acc = 0;
  for (let i = rewards.length - 1; i >= 0; i--) {
    acc = rewards[i] + gamma * acc;
    out[i] = acc;
  }
  return out;
}
