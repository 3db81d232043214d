"""Line-delimited JSON bridge for embedding the watermark in external
decoding stacks.

Run as ``python -m nestmark.bridge``. Each stdin line is one request object
``{"id": <int>, "v": 1, "op": ..., ...}`` and produces exactly one stdout
response with the same id: ``{"id", "v", "result"}`` on success or
``{"id", "v", "error": {"code", "message"}}`` on failure. Malformed input
is answered, never dropped, so callers never see a broken pipe mid-stream.

Ops:
- ``membership_mask``: scheme + vocab_size + prefix -> per-candidate flags
  ("g1"/"g2"/"none") for the next position, or all-"skip" while the prefix
  is shorter than the largest context offset.
- ``bias``: logits + mask flags + delta1/delta2 -> biased logits. Logits
  travel as a JSON number array, or base64 little-endian floats via
  ``logits_b64`` + ``dtype`` ("f32"/"f64") for large vocabularies.
- ``detect``: scheme + tokens -> the standard detection report object.
"""

from __future__ import annotations

import base64
import json
import sys
from typing import IO

import numpy as np

from .core import WatermarkError, scheme_from_dict, validate_scheme
from .detector import detect
from .generator import FLAG_G1, FLAG_G2, FLAG_NONE, FLAG_SKIP, bias_logits
from .partition import nested_group_masks, prf_seed

PROTOCOL_VERSION = 1


class _BridgeError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _require(obj: dict, field: str):
    if field not in obj:
        raise _BridgeError("SchemaError", f"request missing field {field!r}")
    return obj[field]


def _scheme_from(obj: dict):
    try:
        return validate_scheme(scheme_from_dict(_require(obj, "scheme")))
    except WatermarkError as exc:
        raise _BridgeError("SchemaError", f"bad scheme: {exc}") from exc


def _op_membership_mask(request: dict) -> dict:
    scheme = _scheme_from(request)
    vocab_size = int(_require(request, "vocab_size"))
    if vocab_size < 2:
        raise _BridgeError("SchemaError", f"vocab_size must be >= 2, got {vocab_size}")
    # Context tokens are hashed, never indexed, so the prefix may carry ids
    # from a tokenizer wider than the logit slice being masked.
    prefix = [int(t) for t in _require(request, "prefix")]
    if any(t < 0 for t in prefix):
        raise _BridgeError("SchemaError", "prefix token ids must be non-negative")

    position = len(prefix)
    if position < scheme.max_offset():
        return {"flags": [FLAG_SKIP] * vocab_size}
    seeds = [
        prf_seed(prefix[position - layer.offset], layer.key)
        for layer in scheme.layers
    ]
    masks = nested_group_masks(seeds, scheme.gamma, vocab_size)
    g1 = masks[0]
    g2 = masks[1] if len(masks) > 1 else np.zeros(vocab_size, dtype=bool)
    flags = [
        FLAG_G2 if g2[k] else (FLAG_G1 if g1[k] else FLAG_NONE)
        for k in range(vocab_size)
    ]
    return {"flags": flags}


_B64_DTYPES = {"f32": "<f4", "f64": "<f8"}


def _decode_logits(request: dict) -> tuple[np.ndarray, str | None]:
    if "logits_b64" in request:
        dtype = request.get("dtype", "f32")
        if dtype not in _B64_DTYPES:
            raise _BridgeError("SchemaError", f"unknown dtype {dtype!r}")
        try:
            raw = base64.b64decode(request["logits_b64"], validate=True)
        except (ValueError, TypeError) as exc:
            raise _BridgeError("SchemaError", f"bad base64 logits: {exc}") from exc
        return np.frombuffer(raw, dtype=_B64_DTYPES[dtype]).astype(np.float64), dtype
    logits = _require(request, "logits")
    return np.asarray([float(x) for x in logits], dtype=np.float64), None


def _encode_logits(values: np.ndarray, dtype: str | None) -> dict:
    if dtype is None:
        return {"logits": values.tolist()}
    raw = values.astype(_B64_DTYPES[dtype]).tobytes()
    return {"logits_b64": base64.b64encode(raw).decode("ascii"), "dtype": dtype}


def _op_bias(request: dict) -> dict:
    logits, dtype = _decode_logits(request)
    flags = [str(f) for f in _require(request, "mask")]
    if len(flags) != logits.shape[0]:
        raise _BridgeError(
            "ShapeMismatch",
            f"logits length {logits.shape[0]} != mask length {len(flags)}",
        )
    delta1 = float(_require(request, "delta1"))
    delta2 = float(_require(request, "delta2"))
    g1 = np.array([f in (FLAG_G1, FLAG_G2) for f in flags], dtype=bool)
    g2 = np.array([f == FLAG_G2 for f in flags], dtype=bool)
    biased = bias_logits(logits, g1, g2, delta1, delta2)
    return _encode_logits(biased, dtype)


def _op_detect(request: dict) -> dict:
    scheme = _scheme_from(request)
    tokens = [int(t) for t in _require(request, "tokens")]
    try:
        return detect(tokens, scheme).to_dict()
    except WatermarkError as exc:
        raise _BridgeError(type(exc).__name__, str(exc)) from exc


_OPS = {
    "membership_mask": _op_membership_mask,
    "bias": _op_bias,
    "detect": _op_detect,
}


def handle_line(line: str) -> dict:
    """One request line -> one response object (never raises)."""
    request_id = None
    try:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            raise _BridgeError("SchemaError", f"request is not valid JSON: {exc}")
        if not isinstance(request, dict):
            raise _BridgeError("SchemaError", "request must be a JSON object")
        request_id = request.get("id")
        version = request.get("v")
        if version != PROTOCOL_VERSION:
            raise _BridgeError(
                "SchemaError", f"unsupported protocol version {version!r}"
            )
        op = request.get("op")
        handler = _OPS.get(op)
        if handler is None:
            raise _BridgeError("UnknownOp", f"unknown op {op!r}")
        result = handler(request)
        return {"id": request_id, "v": PROTOCOL_VERSION, "result": result}
    except _BridgeError as exc:
        return {
            "id": request_id,
            "v": PROTOCOL_VERSION,
            "error": {"code": exc.code, "message": str(exc)},
        }
    except Exception as exc:  # defensive: keep the stream alive
        return {
            "id": request_id,
            "v": PROTOCOL_VERSION,
            "error": {"code": "InternalError", "message": f"{type(exc).__name__}: {exc}"},
        }


def serve(stdin: IO[str], stdout: IO[str]) -> None:
    for line in stdin:
        if not line.strip():
            continue
        stdout.write(json.dumps(handle_line(line)))
        stdout.write("\n")
        stdout.flush()


def main() -> int:
    serve(sys.stdin, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
