"""Keyed pseudorandom partition of the vocabulary into nested token groups.

The generator and the detector must agree bit-for-bit on group membership,
so the constructions here are pinned exactly:

- seed derivation: HMAC-SHA256 keyed with the layer's secret key over the
  8-byte little-endian context token id; the first 8 digest bytes, read
  little-endian, form a 64-bit seed.
- per-token uniform draw: SplitMix64(seed XOR SplitMix64(token_id)) / 2**64,
  with SplitMix64 the standard published 64-bit mixer. A token belongs to a
  group iff its draw is below gamma.

Nesting comes from applying the level-2 draw only to level-1 members, so the
subset relation holds by construction and the level-2 group is a gamma
fraction of the level-1 group in expectation.

Scalar functions define the reference semantics; the numpy paths vectorize
the same arithmetic and are required (and tested) to match bit-exactly.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import PositionOutOfRangeError, TokenId, WatermarkScheme

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB
_TWO64 = float(2**64)


def splitmix64(x: int) -> int:
    """One SplitMix64 step applied to a 64-bit value."""
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * _MIX_1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX_2) & _MASK64
    return x ^ (x >> 31)


def splitmix64_array(values: np.ndarray) -> np.ndarray:
    """SplitMix64 over a uint64 array; wraps modulo 2**64 like the scalar."""
    x = values.astype(np.uint64, copy=True)
    x += np.uint64(_GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX_1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX_2)
    return x ^ (x >> np.uint64(31))


@lru_cache(maxsize=1 << 20)
def prf_seed(context_token: TokenId, key: bytes) -> int:
    """64-bit seed derived from one context token under a secret key.

    Deterministic: equal (token, key) pairs always yield equal seeds.
    """
    digest = hmac.new(key, context_token.to_bytes(8, "little"), hashlib.sha256)
    return int.from_bytes(digest.digest()[:8], "little")


def uniform_draw(seed: int, token_id: TokenId) -> float:
    """Deterministic uniform value in [0, 1) for a candidate token under a seed."""
    return splitmix64((seed ^ splitmix64(token_id)) & _MASK64) / _TWO64


@dataclass(frozen=True)
class GroupMembership:
    """Verdicts for one token: outer-group and nested inner-group membership."""

    in_g1: bool
    in_g2: bool

    def __post_init__(self) -> None:
        if self.in_g2 and not self.in_g1:
            raise ValueError("inner-group membership requires outer-group membership")


def membership(
    candidate_token: TokenId, seed1: int, seed2: int, gamma: float
) -> GroupMembership:
    """Nested membership of a candidate token under the two layer seeds."""
    in_g1 = uniform_draw(seed1, candidate_token) < gamma
    in_g2 = in_g1 and uniform_draw(seed2, candidate_token) < gamma
    return GroupMembership(in_g1=in_g1, in_g2=in_g2)


def groups_at(
    position: int,
    token_stream: Sequence[TokenId],
    scheme: WatermarkScheme,
) -> GroupMembership | None:
    """Membership of the token at ``position`` given its in-stream context.

    Returns None when any layer's context token would fall before the start
    of the stream; such positions carry no bias and are never scored. Layers
    beyond the second contribute bias during generation but are not part of
    the two-level membership reported here.
    """
    if not 0 <= position < len(token_stream):
        raise PositionOutOfRangeError(
            f"position {position} outside stream of length {len(token_stream)}"
        )
    if position < scheme.max_offset():
        return None
    token = token_stream[position]
    seeds = [
        prf_seed(token_stream[position - layer.offset], layer.key)
        for layer in scheme.layers[:2]
    ]
    if len(seeds) == 1:
        in_g1 = uniform_draw(seeds[0], token) < scheme.gamma
        return GroupMembership(in_g1=in_g1, in_g2=False)
    return membership(token, seeds[0], seeds[1], scheme.gamma)


@lru_cache(maxsize=32)
def _token_mix(vocab_size: int) -> np.ndarray:
    """SplitMix64 of every token id in the vocabulary; read-only cache."""
    mixed = splitmix64_array(np.arange(vocab_size, dtype=np.uint64))
    mixed.flags.writeable = False
    return mixed


@lru_cache(maxsize=64)
def seed_table(key: bytes, vocab_size: int) -> np.ndarray:
    """Seeds for every possible context token under one key; read-only cache."""
    table = np.empty(vocab_size, dtype=np.uint64)
    for token in range(vocab_size):
        table[token] = prf_seed(token, key)
    table.flags.writeable = False
    return table


def draws_under_seed(seed: int, vocab_size: int) -> np.ndarray:
    """Uniform draws for all vocabulary tokens under one seed."""
    mixed = np.uint64(seed) ^ _token_mix(vocab_size)
    return splitmix64_array(mixed) / _TWO64


def draws_for_stream(seeds: np.ndarray, token_ids: np.ndarray) -> np.ndarray:
    """Elementwise uniform draws for (seed, token) pairs along a stream."""
    mixed = seeds.astype(np.uint64) ^ splitmix64_array(
        token_ids.astype(np.uint64)
    )
    return splitmix64_array(mixed) / _TWO64


def nested_group_masks(
    seeds: Sequence[int], gamma: float, vocab_size: int
) -> list[np.ndarray]:
    """Boolean vocabulary masks for each nesting level, outermost first.

    Level l's mask is the intersection of level l-1's mask with the fresh
    draw under level l's seed, so masks shrink monotonically.
    """
    masks: list[np.ndarray] = []
    current: np.ndarray | None = None
    for seed in seeds:
        level = draws_under_seed(seed, vocab_size) < gamma
        current = level if current is None else (current & level)
        masks.append(current)
    return masks
