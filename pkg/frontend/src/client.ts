/**
 * Bridge client: spawns the primary toolkit's line-protocol subprocess and
 * exposes its three ops as typed async methods.
 *
 * One subprocess serves one client; requests are written in call order and
 * paired to responses by id, so a single instance serializes its traffic.
 * Callers that need parallelism create multiple instances. The adapter does
 * no statistics of its own: membership and detection come back verbatim
 * from the primary implementation, which is what makes the golden-vector
 * parity guarantee meaningful.
 */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { createInterface, type Interface } from "node:readline";

import { BridgeUnavailableError, errorFromCode } from "./errors.js";
import {
  PROTOCOL_VERSION,
  type BridgeOp,
  type BridgeResponse,
  type DetectionReportJson,
  type GroupFlag,
  type LogitDtype,
  type SchemeJson,
} from "./protocol.js";

export interface BridgeOptions {
  /** Command used to start the bridge (default: "python3"). */
  pythonCommand?: string;
  /** Arguments before the module entry point (default: []). */
  pythonArgs?: string[];
  /** Working directory for the subprocess. */
  cwd?: string;
  /** Per-request timeout in milliseconds; 0 disables (default: 30000). */
  requestTimeoutMs?: number;
}

interface PendingCall {
  resolve: (value: unknown) => void;
  reject: (reason: Error) => void;
  timer?: NodeJS.Timeout;
}

export class WatermarkBridge {
  private readonly options: Required<BridgeOptions>;
  private child: ChildProcessWithoutNullStreams | null = null;
  private reader: Interface | null = null;
  private readonly pending = new Map<number, PendingCall>();
  private nextId = 1;
  private closed = false;

  constructor(options: BridgeOptions = {}) {
    this.options = {
      pythonCommand: options.pythonCommand ?? "python3",
      pythonArgs: options.pythonArgs ?? [],
      cwd: options.cwd ?? process.cwd(),
      requestTimeoutMs: options.requestTimeoutMs ?? 30_000,
    };
  }

  /** Group flags for every candidate token at the next position. */
  async membershipMask(
    prefix: number[],
    scheme: SchemeJson,
    vocabSize: number,
  ): Promise<GroupFlag[]> {
    const result = (await this.request("membership_mask", {
      scheme,
      vocab_size: vocabSize,
      prefix,
    })) as { flags: GroupFlag[] };
    return result.flags;
  }

  /** Biased copy of a logit array under a membership mask. */
  async applyBias(
    logits: number[],
    mask: GroupFlag[],
    delta1: number,
    delta2: number,
  ): Promise<number[]> {
    const result = (await this.request("bias", {
      logits,
      mask,
      delta1,
      delta2,
    })) as { logits: number[] };
    return result.logits;
  }

  /**
   * Same as applyBias but shipping the array as base64 raw floats, for
   * vocabularies where JSON number lists get heavy.
   */
  async applyBiasPacked(
    logits: Float32Array | Float64Array,
    mask: GroupFlag[],
    delta1: number,
    delta2: number,
  ): Promise<Float32Array | Float64Array> {
    const dtype: LogitDtype = logits instanceof Float32Array ? "f32" : "f64";
    const packed = Buffer.from(logits.buffer, logits.byteOffset, logits.byteLength);
    const result = (await this.request("bias", {
      logits_b64: packed.toString("base64"),
      dtype,
      mask,
      delta1,
      delta2,
    })) as { logits_b64: string; dtype: LogitDtype };
    const raw = Buffer.from(result.logits_b64, "base64");
    return dtype === "f32"
      ? new Float32Array(raw.buffer, raw.byteOffset, raw.byteLength / 4)
      : new Float64Array(raw.buffer, raw.byteOffset, raw.byteLength / 8);
  }

  /** Forward a token stream for detection; the report comes back verbatim. */
  async detect(tokens: number[], scheme: SchemeJson): Promise<DetectionReportJson> {
    return (await this.request("detect", {
      scheme,
      tokens,
    })) as DetectionReportJson;
  }

  /** Stop the subprocess and fail any in-flight requests. */
  close(): void {
    this.closed = true;
    this.failPending(new BridgeUnavailableError("bridge closed by caller"));
    this.reader?.close();
    this.reader = null;
    if (this.child) {
      this.child.kill();
      this.child = null;
    }
  }

  private request(op: BridgeOp, payload: Record<string, unknown>): Promise<unknown> {
    if (this.closed) {
      return Promise.reject(new BridgeUnavailableError("bridge already closed"));
    }
    const child = this.ensureStarted();
    const id = this.nextId++;
    const line = JSON.stringify({ id, v: PROTOCOL_VERSION, op, ...payload });

    return new Promise<unknown>((resolve, reject) => {
      const call: PendingCall = { resolve, reject };
      if (this.options.requestTimeoutMs > 0) {
        call.timer = setTimeout(() => {
          this.pending.delete(id);
          reject(new BridgeUnavailableError(`request ${id} timed out`));
        }, this.options.requestTimeoutMs);
        call.timer.unref();
      }
      this.pending.set(id, call);
      child.stdin.write(line + "\n", (err) => {
        if (err) {
          this.settle(id, undefined, new BridgeUnavailableError(err.message));
        }
      });
    });
  }

  private ensureStarted(): ChildProcessWithoutNullStreams {
    if (this.child) {
      return this.child;
    }
    const child = spawn(
      this.options.pythonCommand,
      [...this.options.pythonArgs, "-m", "nestmark.bridge"],
      { cwd: this.options.cwd, stdio: ["pipe", "pipe", "pipe"] },
    );
    child.on("error", (err) => {
      this.child = null;
      this.failPending(
        new BridgeUnavailableError(`bridge failed to start: ${err.message}`),
      );
    });
    child.on("exit", (code) => {
      this.child = null;
      this.failPending(
        new BridgeUnavailableError(`bridge exited with code ${code}`),
      );
    });

    this.reader = createInterface({ input: child.stdout });
    this.reader.on("line", (line) => this.handleLine(line));
    this.child = child;
    return child;
  }

  private handleLine(line: string): void {
    let response: BridgeResponse;
    try {
      response = JSON.parse(line) as BridgeResponse;
    } catch {
      return; // not protocol traffic; ignore
    }
    if (typeof response.id !== "number") {
      return; // unroutable (e.g. server-side parse failure); ignore
    }
    if (response.error) {
      this.settle(
        response.id,
        undefined,
        errorFromCode(response.error.code, response.error.message),
      );
    } else {
      this.settle(response.id, response.result, undefined);
    }
  }

  private settle(id: number, value: unknown, error: Error | undefined): void {
    const call = this.pending.get(id);
    if (!call) {
      return;
    }
    this.pending.delete(id);
    if (call.timer) {
      clearTimeout(call.timer);
    }
    if (error) {
      call.reject(error);
    } else {
      call.resolve(value);
    }
  }

  private failPending(error: Error): void {
    for (const [id] of this.pending) {
      this.settle(id, undefined, error);
    }
  }
}
