"""Nested logit biasing and the autoregressive decoding loop.

At every step whose context is complete, each layer's group receives that
layer's bias on top of any outer-layer bias, so inner-group tokens collect
the summed biases before the softmax renormalizes. Steps too early to have
full context are emitted from the raw distribution and flagged ``skip``.

Watermark context is measured inside the generated continuation only; the
prompt conditions the logit source but never seeds a group. That keeps the
record self-contained: a detector holding just the continuation recomputes
the exact memberships used here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    GenerationParams,
    TokenId,
    VocabMismatchError,
    WatermarkScheme,
    validate_scheme,
)
from .partition import nested_group_masks, seed_table
from .synthetic_lm import LogitSource

FLAG_NONE = "none"
FLAG_G1 = "g1"
FLAG_G2 = "g2"
FLAG_SKIP = "skip"
FLAGS = (FLAG_NONE, FLAG_G1, FLAG_G2, FLAG_SKIP)


@dataclass
class GenerationRecord:
    """One generated stream plus everything needed to audit it.

    ``flags`` aligns with ``tokens``: the group the emitted token fell in
    ("g2" implies membership in both groups) or "skip" for positions without
    full context. ``unbiased_logprob_sum`` accumulates the log-probability
    of each emitted token under the *unwatermarked* distribution and serves
    as the text-quality proxy.
    """

    tokens: list[TokenId] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    unbiased_logprob_sum: float = 0.0

    def unbiased_logprob_mean(self) -> float:
        if not self.tokens:
            return 0.0
        return self.unbiased_logprob_sum / len(self.tokens)

    def to_dict(self) -> dict:
        return {
            "tokens": [int(t) for t in self.tokens],
            "flags": list(self.flags),
            "unbiased_logprob_sum": self.unbiased_logprob_sum,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "GenerationRecord":
        tokens = [int(t) for t in obj["tokens"]]
        flags = [str(f) for f in obj.get("flags", [])]
        if flags and len(flags) != len(tokens):
            raise ValueError("record flags and tokens have different lengths")
        return cls(
            tokens=tokens,
            flags=flags,
            unbiased_logprob_sum=float(obj.get("unbiased_logprob_sum", 0.0)),
        )


def softmax(logits: np.ndarray) -> np.ndarray:
    """Probability vector for a logit vector; stable under large magnitudes."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    exps = np.exp(shifted)
    return exps / exps.sum()


def log_softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    return shifted - math.log(np.exp(shifted).sum())


def bias_logits(
    logits: np.ndarray,
    in_g1: np.ndarray,
    in_g2: np.ndarray,
    delta1: float,
    delta2: float,
) -> np.ndarray:
    """Raise group members' logits: +delta1 inside group 1, +delta2 more
    inside group 2. ``in_g2`` must be nested inside ``in_g1``."""
    in_g1 = np.asarray(in_g1, dtype=bool)
    in_g2 = np.asarray(in_g2, dtype=bool)
    if np.any(in_g2 & ~in_g1):
        raise ValueError("group-2 mask must be a subset of group-1 mask")
    out = np.asarray(logits, dtype=np.float64).copy()
    out[in_g1] += delta1
    out[in_g2] += delta2
    return out


def _flag_for(token: TokenId, masks: list[np.ndarray]) -> str:
    if len(masks) >= 2 and masks[1][token]:
        return FLAG_G2
    if masks[0][token]:
        return FLAG_G1
    return FLAG_NONE


def generate(
    prompt: Sequence[TokenId],
    source: LogitSource,
    scheme: WatermarkScheme,
    params: GenerationParams,
) -> GenerationRecord:
    """Decode up to ``max_tokens`` watermarked tokens after ``prompt``.

    Greedy mode picks the highest biased logit (lowest id on ties); sample
    mode draws from softmax(biased_logits / temperature) using an RNG seeded
    from ``params.rng_seed``, so runs are reproducible bit-for-bit.
    """
    validate_scheme(scheme, source.vocab)
    vocab_size = source.vocab.vocab_size
    if any(not 0 <= t < vocab_size for t in prompt):
        raise VocabMismatchError(
            f"prompt token outside vocabulary of size {vocab_size}"
        )
    tables = [seed_table(layer.key, vocab_size) for layer in scheme.layers]
    deltas = [layer.delta for layer in scheme.layers]
    max_offset = scheme.max_offset()
    rng = np.random.Generator(np.random.PCG64(params.rng_seed))

    stream = list(prompt)
    record = GenerationRecord()
    for position in range(params.max_tokens):
        logits = np.asarray(source.next_logits(stream), dtype=np.float64)
        if logits.shape != (vocab_size,):
            raise VocabMismatchError(
                f"logit vector of shape {logits.shape} for vocab {vocab_size}"
            )
        masks: list[np.ndarray] | None = None
        if position >= max_offset:
            seeds = [
                int(tables[i][record.tokens[position - layer.offset]])
                for i, layer in enumerate(scheme.layers)
            ]
            masks = nested_group_masks(seeds, scheme.gamma, vocab_size)
            biased = logits + sum(
                delta * mask for delta, mask in zip(deltas, masks)
            )
        else:
            biased = logits

        if params.decode_mode == "greedy":
            token = int(np.argmax(biased))
        else:
            probs = softmax(biased / params.temperature)
            cdf = np.cumsum(probs)
            token = int(min(np.searchsorted(cdf, rng.random(), side="right"),
                            vocab_size - 1))

        record.unbiased_logprob_sum += float(
            log_softmax(logits / params.temperature)[token]
        )
        record.flags.append(FLAG_SKIP if masks is None else _flag_for(token, masks))
        record.tokens.append(token)
        stream.append(token)
    return record
