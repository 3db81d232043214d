"""Domain types, configuration, and validation shared by all nestmark modules.

A watermark scheme is a stack of keyed layers. Each layer owns a secret key,
a context offset (how far back the seeding token sits), and a logit bias.
Layer order defines nesting: layer 2's group is drawn from inside layer 1's.
All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import binascii
import json
from dataclasses import dataclass, replace


class WatermarkError(Exception):
    """Base class for all nestmark errors."""


class SchemeValidationError(WatermarkError):
    """A watermark scheme violates one of its invariants."""


class EmptyLayersError(SchemeValidationError):
    """Scheme has no layers."""


class DuplicateOffsetError(SchemeValidationError):
    """Two layers share a context offset; offsets must be pairwise distinct."""


class GammaOutOfRangeError(SchemeValidationError):
    """gamma must lie strictly inside (0, 1)."""


class VocabMismatchError(WatermarkError):
    """Token ids or logit vectors do not fit the declared vocabulary size."""


class EmptyStreamError(WatermarkError):
    """Detection was asked to score an empty token stream."""


class DegenerateSampleError(WatermarkError):
    """A z-score denominator would be zero (no scoreable positions / no hits)."""


class PositionOutOfRangeError(WatermarkError):
    """Requested position is outside the token stream."""


class UnknownAxisError(WatermarkError):
    """Sweep axis name is not one of the supported parameters."""


class ModelMismatchError(WatermarkError):
    """Two trial configs that must share a model or length do not."""


class ModelSpecError(WatermarkError):
    """A synthetic-model descriptor string could not be parsed."""


# Token ids are plain non-negative ints below the vocabulary size.
TokenId = int

DEFAULT_GAMMA = 0.5
DEFAULT_THETA = 4.0
DEFAULT_DELTA_1 = 1.5
DEFAULT_DELTA_2 = 2.5
DEFAULT_OFFSET_1 = 1
DEFAULT_OFFSET_2 = 2
DEFAULT_MAX_TOKENS = 300
DEFAULT_KEY_1 = b"default-first-key"
DEFAULT_KEY_2 = b"default-second-key"


@dataclass(frozen=True)
class VocabSpec:
    """Size of the token vocabulary; ids run over [0, vocab_size)."""

    vocab_size: int

    def __post_init__(self) -> None:
        if self.vocab_size < 2:
            raise ValueError(f"vocab_size must be >= 2, got {self.vocab_size}")


@dataclass(frozen=True)
class WatermarkLayer:
    """One keyed watermark layer: secret key, context offset, logit bias."""

    key: bytes
    offset: int
    delta: float

    def __post_init__(self) -> None:
        if not isinstance(self.key, bytes):
            raise TypeError("layer key must be bytes")
        if self.offset < 1:
            raise ValueError(f"layer offset must be >= 1, got {self.offset}")
        if self.delta < 0:
            raise ValueError(f"layer delta must be >= 0, got {self.delta}")


@dataclass(frozen=True)
class WatermarkScheme:
    """Full embedding/detection configuration.

    ``layers`` is ordered outermost-first: the second layer's group is a
    subset of the first layer's. Two layers is the canonical construction;
    one or more is accepted.
    """

    layers: tuple[WatermarkLayer, ...]
    gamma: float = DEFAULT_GAMMA
    theta: float = DEFAULT_THETA

    def max_offset(self) -> int:
        return max(layer.offset for layer in self.layers)

    def with_deltas(self, *deltas: float) -> "WatermarkScheme":
        """Copy of this scheme with layer biases replaced (one per layer)."""
        if len(deltas) != len(self.layers):
            raise ValueError(
                f"expected {len(self.layers)} deltas, got {len(deltas)}"
            )
        new_layers = tuple(
            replace(layer, delta=d) for layer, d in zip(self.layers, deltas)
        )
        return replace(self, layers=new_layers)


@dataclass(frozen=True)
class GenerationParams:
    """Decoding-loop settings.

    ``temperature`` and ``rng_seed`` only matter in ``sample`` mode; greedy
    decoding is fully deterministic and breaks ties toward the lowest id.
    """

    max_tokens: int = DEFAULT_MAX_TOKENS
    decode_mode: str = "sample"
    temperature: float = 1.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")
        if self.decode_mode not in ("greedy", "sample"):
            raise ValueError(f"unknown decode_mode {self.decode_mode!r}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")


def validate_scheme(
    scheme: WatermarkScheme, vocab: VocabSpec | None = None
) -> WatermarkScheme:
    """Check all scheme invariants and return the scheme unchanged.

    Raises EmptyLayersError, DuplicateOffsetError, or GammaOutOfRangeError.
    ``vocab`` is accepted for call-site symmetry; no scheme invariant depends
    on the vocabulary size today. Idempotent by construction.
    """
    if len(scheme.layers) == 0:
        raise EmptyLayersError("scheme must have at least one layer")
    offsets = [layer.offset for layer in scheme.layers]
    if len(set(offsets)) != len(offsets):
        raise DuplicateOffsetError(
            f"layer offsets must be pairwise distinct, got {offsets}"
        )
    if not (0.0 < scheme.gamma < 1.0):
        raise GammaOutOfRangeError(
            f"gamma must be strictly between 0 and 1, got {scheme.gamma}"
        )
    return scheme


def default_scheme(
    key1: bytes = DEFAULT_KEY_1, key2: bytes = DEFAULT_KEY_2
) -> WatermarkScheme:
    """Canonical two-layer scheme: gamma 0.5, biases 1.5/2.5, threshold 4.0,
    context offsets 1 and 2."""
    return WatermarkScheme(
        layers=(
            WatermarkLayer(key=key1, offset=DEFAULT_OFFSET_1, delta=DEFAULT_DELTA_1),
            WatermarkLayer(key=key2, offset=DEFAULT_OFFSET_2, delta=DEFAULT_DELTA_2),
        ),
        gamma=DEFAULT_GAMMA,
        theta=DEFAULT_THETA,
    )


def scheme_to_dict(scheme: WatermarkScheme) -> dict:
    return {
        "gamma": scheme.gamma,
        "theta": scheme.theta,
        "layers": [
            {
                "key_hex": layer.key.hex(),
                "offset": layer.offset,
                "delta": layer.delta,
            }
            for layer in scheme.layers
        ],
    }


def scheme_from_dict(obj: dict) -> WatermarkScheme:
    try:
        layers = tuple(
            WatermarkLayer(
                key=binascii.unhexlify(entry["key_hex"]),
                offset=int(entry["offset"]),
                delta=float(entry["delta"]),
            )
            for entry in obj["layers"]
        )
        scheme = WatermarkScheme(
            layers=layers, gamma=float(obj["gamma"]), theta=float(obj["theta"])
        )
    except (KeyError, TypeError, ValueError, binascii.Error) as exc:
        raise SchemeValidationError(f"malformed scheme object: {exc}") from exc
    return validate_scheme(scheme)


def scheme_to_json(scheme: WatermarkScheme) -> str:
    return json.dumps(scheme_to_dict(scheme), indent=2)


def scheme_from_json(text: str) -> WatermarkScheme:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemeValidationError(f"scheme is not valid JSON: {exc}") from exc
    return scheme_from_dict(obj)


def load_scheme(path: str) -> WatermarkScheme:
    with open(path, "r", encoding="utf-8") as fh:
        return scheme_from_json(fh.read())


def save_scheme(scheme: WatermarkScheme, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scheme_to_json(scheme))
        fh.write("\n")
