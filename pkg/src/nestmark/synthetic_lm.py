"""Deterministic toy logit sources for desk-scale experiments.

Neither model runs any inference: UniformLM is the maximum-entropy source
(every continuation equally likely) and SeededGaussianLM draws a fresh
i.i.d. normal logit vector per prefix, with sigma controlling how peaked
(low-entropy) the next-token distribution is. Both are pure functions of
their construction arguments and the prefix, so repeated calls are free of
hidden state and safe to share across threads.
"""

from __future__ import annotations

import hashlib
import hmac
from typing import Protocol, Sequence

import numpy as np

from .core import ModelSpecError, TokenId, VocabSpec

# Public key for prefix hashing; this is not a secret, it only decorrelates
# SeededGaussianLM streams from any watermark key a user might pick.
_PREFIX_HASH_KEY = b"synthetic-lm-prefix-hash"


class LogitSource(Protocol):
    """Anything that maps a token prefix to a full-vocabulary logit vector.

    Implementations must be deterministic (same prefix, same logits) and
    safe for concurrent read-only use.
    """

    vocab: VocabSpec

    def next_logits(self, prefix: Sequence[TokenId]) -> np.ndarray: ...


class UniformLM:
    """All-zero logits: the next token is uniform over the vocabulary."""

    def __init__(self, vocab: VocabSpec):
        self.vocab = vocab
        self._zeros = np.zeros(vocab.vocab_size, dtype=np.float64)
        self._zeros.flags.writeable = False

    def next_logits(self, prefix: Sequence[TokenId]) -> np.ndarray:
        return self._zeros


class SeededGaussianLM:
    """Logits drawn i.i.d. normal(0, sigma^2), keyed by (seed, prefix).

    Larger sigma concentrates the softmax on fewer tokens, emulating the
    low-entropy regime where watermark hits are harder to force.
    """

    def __init__(self, vocab: VocabSpec, seed: int, sigma: float):
        if sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {sigma}")
        self.vocab = vocab
        self.seed = seed
        self.sigma = sigma

    def _prefix_seed(self, prefix: Sequence[TokenId]) -> int:
        mac = hmac.new(_PREFIX_HASH_KEY, digestmod=hashlib.sha256)
        mac.update(int(self.seed).to_bytes(8, "little", signed=False))
        for token in prefix:
            mac.update(int(token).to_bytes(8, "little"))
        return int.from_bytes(mac.digest()[:8], "little")

    def next_logits(self, prefix: Sequence[TokenId]) -> np.ndarray:
        rng = np.random.Generator(np.random.PCG64(self._prefix_seed(prefix)))
        return rng.normal(0.0, self.sigma, self.vocab.vocab_size)


def parse_model_spec(spec: str) -> LogitSource:
    """Build a synthetic model from a descriptor string.

    Formats: ``uniform:<vocab>`` or ``gauss:<vocab>:<sigma>:<seed>``.
    """
    parts = spec.split(":")
    try:
        if parts[0] == "uniform" and len(parts) == 2:
            return UniformLM(VocabSpec(int(parts[1])))
        if parts[0] == "gauss" and len(parts) == 4:
            return SeededGaussianLM(
                VocabSpec(int(parts[1])), sigma=float(parts[2]), seed=int(parts[3])
            )
    except (ValueError, TypeError) as exc:
        raise ModelSpecError(f"bad model spec {spec!r}: {exc}") from exc
    raise ModelSpecError(
        f"bad model spec {spec!r}; expected uniform:<vocab> or gauss:<vocab>:<sigma>:<seed>"
    )


def format_model_spec(model: LogitSource) -> str:
    """Inverse of parse_model_spec for the two shipped model types."""
    if isinstance(model, UniformLM):
        return f"uniform:{model.vocab.vocab_size}"
    if isinstance(model, SeededGaussianLM):
        return f"gauss:{model.vocab.vocab_size}:{model.sigma:g}:{model.seed}"
    raise ModelSpecError(f"no spec string for model type {type(model).__name__}")
