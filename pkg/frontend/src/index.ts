export { WatermarkBridge, type BridgeOptions } from "./client.js";
export {
  BridgeRemoteError,
  BridgeUnavailableError,
  SchemaError,
  ShapeMismatchError,
} from "./errors.js";
export {
  PROTOCOL_VERSION,
  defaultSchemeJson,
  keyToHex,
  type BridgeOp,
  type BridgeRequest,
  type BridgeResponse,
  type DetectionReportJson,
  type GroupFlag,
  type LogitDtype,
  type SchemeJson,
  type SchemeLayerJson,
} from "./protocol.js";
