/**
 * Wire types for the nestmark bridge protocol.
 *
 * Transport is newline-delimited JSON over the subprocess's stdio: one
 * request object per line, answered by exactly one response object carrying
 * the same integer `id`. Every message declares protocol version `v: 1`.
 * Failures arrive as `{ id, v, error: { code, message } }`, never as a
 * dropped line or broken pipe.
 */

export const PROTOCOL_VERSION = 1;

/** Group verdict for one vocabulary slot at one position. */
export type GroupFlag = "none" | "g1" | "g2" | "skip";

/** One keyed watermark layer, JSON form (keys are hex-encoded bytes). */
export interface SchemeLayerJson {
  key_hex: string;
  offset: number;
  delta: number;
}

/** Full scheme configuration, JSON form. */
export interface SchemeJson {
  gamma: number;
  theta: number;
  layers: SchemeLayerJson[];
}

/** Detection report as emitted by the primary detector. */
export interface DetectionReportJson {
  scoreable_count: number;
  c1: number;
  c2: number;
  z1: number | null;
  z2: number | null;
  watermark1_detected: boolean;
  watermark2_detected: boolean;
  z1_degenerate: boolean;
  z2_degenerate: boolean;
  per_token_flags: GroupFlag[];
}

export type BridgeOp = "membership_mask" | "bias" | "detect";

export interface BridgeRequest {
  id: number;
  v: typeof PROTOCOL_VERSION;
  op: BridgeOp;
  [key: string]: unknown;
}

export interface BridgeErrorBody {
  code: string;
  message: string;
}

export interface BridgeResponse {
  id: number | null;
  v: number;
  result?: unknown;
  error?: BridgeErrorBody;
}

/** Encoding for logit arrays crossing the boundary. */
export type LogitDtype = "f32" | "f64";

/** Convert a secret key to the hex form the scheme JSON carries. */
export function keyToHex(key: Uint8Array | string): string {
  const bytes = typeof key === "string" ? Buffer.from(key, "utf-8") : key;
  return Buffer.from(bytes).toString("hex");
}

/**
 * Convenience constructor for the canonical two-layer scheme JSON:
 * gamma 0.5, biases 1.5/2.5, threshold 4.0, offsets 1 and 2.
 */
export function defaultSchemeJson(
  key1: Uint8Array | string,
  key2: Uint8Array | string,
): SchemeJson {
  return {
    gamma: 0.5,
    theta: 4.0,
    layers: [
      { key_hex: keyToHex(key1), offset: 1, delta: 1.5 },
      { key_hex: keyToHex(key2), offset: 2, delta: 2.5 },
    ],
  };
}
