/** Small deterministic PRNG (mulberry32) so runs replay exactly. */
export class Rng {
  private state: number;

  constructor(seed: number) {
    this.state = seed >>> 0;
  }

  next(): number {
    this.state = (this.state + 0x6d2b79f5) >>> 0;
    let t = this.state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  }

  /** Sample an index from an (unnormalized-tolerant) probability vector. */
  categorical(probs: Float32Array | number[]): number {
    let total = 0;
    for (let i = 0; i < probs.length; i++) total += probs[i];
    let r = this.next() * total;
    for (let i = 0; i < probs.length; i++) {
      r -= probs[i];
      if (r <= 0) return i;
    }
    return probs.length - 1;
  }

  int(bound: number): number {
    return Math.floor(this.next() * bound);
  }
}
