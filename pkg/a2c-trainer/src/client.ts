import * as net from "node:net";
import * as readline from "node:readline";

import { Reply, StateReply, WireAction, isStateReply } from "./protocol.js";

/** Blocking-style client for one environment session over TCP. */
export class EnvClient {
  private socket: net.Socket;
  private replies: Reply[] = [];
  private waiters: Array<(reply: Reply) => void> = [];
  private failure: Error | null = null;

  private constructor(socket: net.Socket) {
    this.socket = socket;
    const lines = readline.createInterface({ input: socket });
    lines.on("line", (line) => {
      if (!line.trim()) return;
      const reply = JSON.parse(line) as Reply;
      const waiter = this.waiters.shift();
      if (waiter) waiter(reply);
      else this.replies.push(reply);
    });
    socket.on("error", (err) => {
      this.failure = err;
      const waiter = this.waiters.shift();
      if (waiter) waiter({ type: "error", message: String(err) });
    });
    socket.on("close", () => {
      this.failure = this.failure ?? new Error("connection closed");
      for (const waiter of this.waiters.splice(0)) {
        waiter({ type: "error", message: "connection closed" });
      }
    });
  }

  static connect(host: string, port: number): Promise<EnvClient> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () =>
        resolve(new EnvClient(socket)),
      );
      socket.on("error", reject);
    });
  }

  private send(payload: object): Promise<Reply> {
    if (this.failure) return Promise.reject(this.failure);
    this.socket.write(JSON.stringify(payload) + "\n");
    const queued = this.replies.shift();
    if (queued) return Promise.resolve(queued);
    return new Promise((resolve) => this.waiters.push(resolve));
  }

  private async expectState(payload: object): Promise<StateReply> {
    const reply = await this.send(payload);
    if (!isStateReply(reply)) {
      const message = reply.type === "error" ? reply.message : reply.type;
      throw new Error(`environment replied ${message}`);
    }
    return reply;
  }

  reset(problem: string, timeLimitS: number): Promise<StateReply> {
    return this.expectState({ type: "reset", problem, time_limit_s: timeLimitS });
  }

  step(action: WireAction): Promise<StateReply> {
    return this.expectState({ type: "step", action });
  }

  async close(): Promise<void> {
    try {
      await this.send({ type: "close" });
    } catch {
      // already gone
    }
    this.socket.end();
    this.socket.destroy();
  }
}
