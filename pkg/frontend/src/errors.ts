/** Typed failures surfaced by the bridge client. */

/** The bridge subprocess could not be started, died, or was closed. */
export class BridgeUnavailableError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "BridgeUnavailableError";
  }
}

/** The request or its payload was malformed (bad scheme, bad fields). */
export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

/** Array lengths disagree with the declared vocabulary size. */
export class ShapeMismatchError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ShapeMismatchError";
  }
}

/** Any other error reported by the remote side, tagged with its code. */
export class BridgeRemoteError extends Error {
  readonly code: string;

  constructor(code: string, message: string) {
    super(message);
    this.name = "BridgeRemoteError";
    this.code = code;
  }
}

export function errorFromCode(code: string, message: string): Error {
  switch (code) {
    case "SchemaError":
      return new SchemaError(message);
    case "ShapeMismatch":
      return new ShapeMismatchError(message);
    default:
      return new BridgeRemoteError(code, message);
  }
}
