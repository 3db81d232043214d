"""Softmax, logit biasing, and the decoding loop.

The bias math is checked against a direct evaluation of the adjusted
probabilities: exponentiate each branch (outer-only, inner, untouched),
normalize by the explicit total, and compare. That path never reuses the
library's bias-then-softmax composition.
"""

import json
import math

import numpy as np
import pytest

from nestmark import (
    GenerationParams,
    UniformLM,
    VocabMismatchError,
    VocabSpec,
    WatermarkLayer,
    WatermarkScheme,
    bias_logits,
    default_scheme,
    generate,
    softmax,
)
from nestmark.generator import GenerationRecord, log_softmax
from nestmark.synthetic_lm import SeededGaussianLM


def direct_adjusted_probs(logits, in_g1, in_g2, delta1, delta2):
    """Branch-by-branch evaluation of the adjusted distribution."""
    exps = np.empty(len(logits))
    for k, logit in enumerate(logits):
        if in_g2[k]:
            exps[k] = math.exp(logit + delta1 + delta2)
        elif in_g1[k]:
            exps[k] = math.exp(logit + delta1)
        else:
            exps[k] = math.exp(logit)
    return exps / exps.sum()


def test_softmax_uniform_and_hand_cases():
    assert np.allclose(softmax(np.zeros(4)), [0.25, 0.25, 0.25, 0.25])
    probs = softmax(np.array([math.log(2.0), 0.0]))
    assert np.allclose(probs, [2 / 3, 1 / 3], atol=1e-12)


def test_softmax_stable_under_huge_logits():
    probs = softmax(np.array([1000.0, 0.0]))
    assert np.isfinite(probs).all()
    assert probs[0] > 0.999999
    assert abs(probs.sum() - 1.0) < 1e-9


def test_softmax_normalizes_random_vectors():
    rng = np.random.default_rng(0)
    for _ in range(50):
        probs = softmax(rng.normal(0, 10, size=257))
        assert abs(probs.sum() - 1.0) < 1e-9
        assert (probs >= 0).all()


def test_bias_worked_example_four_tokens():
    logits = np.zeros(4)
    in_g1 = np.array([True, True, False, False])
    in_g2 = np.array([True, False, False, False])
    biased = bias_logits(logits, in_g1, in_g2, 1.5, 2.5)
    assert np.allclose(biased, [4.0, 1.5, 0.0, 0.0])
    probs = softmax(biased)
    total = math.exp(4.0) + math.exp(1.5) + 2.0
    assert abs(total - 61.0799) < 5e-4
    assert np.allclose(probs, [0.8939, 0.0734, 0.0164, 0.0164], atol=5e-5)
    direct = direct_adjusted_probs(logits, in_g1, in_g2, 1.5, 2.5)
    assert np.abs(probs - direct).max() < 1e-15


def test_zero_bias_is_identity():
    rng = np.random.default_rng(1)
    logits = rng.normal(size=100)
    g1 = rng.random(100) < 0.5
    g2 = g1 & (rng.random(100) < 0.5)
    biased = bias_logits(logits, g1, g2, 0.0, 0.0)
    assert (biased == logits).all()


def test_bias_rejects_nonsubset_masks():
    with pytest.raises(ValueError):
        bias_logits(np.zeros(3), np.array([True, False, False]),
                    np.array([False, True, False]), 1.0, 1.0)


def test_bias_math_matches_direct_evaluation_randomized():
    rng = np.random.default_rng(2)
    for _ in range(200):
        size = int(rng.integers(2, 64))
        logits = rng.uniform(-5, 5, size=size)
        g1 = rng.random(size) < rng.uniform(0.2, 0.8)
        g2 = g1 & (rng.random(size) < 0.5)
        d1, d2 = rng.uniform(0, 4, size=2)
        probs = softmax(bias_logits(logits, g1, g2, d1, d2))
        direct = direct_adjusted_probs(logits, g1, g2, d1, d2)
        assert np.abs(probs - direct).max() <= 1e-12


def test_bias_never_lowers_inner_group_probability():
    rng = np.random.default_rng(3)
    for _ in range(100):
        logits = rng.normal(0, 3, size=50)
        g1 = rng.random(50) < 0.5
        g2 = g1 & (rng.random(50) < 0.5)
        before = softmax(logits)
        after = softmax(bias_logits(logits, g1, g2, 1.5, 2.5))
        assert (after[g2] >= before[g2]).all()


def _tiny_scheme(**kwargs):
    return default_scheme(key1=b"gk1", key2=b"gk2")


def test_generate_zero_bias_greedy_equals_plain_greedy():
    vocab = VocabSpec(50)
    model = SeededGaussianLM(vocab, seed=9, sigma=1.0)
    scheme = _tiny_scheme().with_deltas(0.0, 0.0)
    record = generate([], model, scheme,
                      GenerationParams(max_tokens=20, decode_mode="greedy"))

    prefix: list[int] = []
    for _ in range(20):
        prefix.append(int(np.argmax(model.next_logits(prefix))))
    assert record.tokens == prefix


def test_generate_greedy_breaks_ties_toward_lowest_id():
    model = UniformLM(VocabSpec(10))
    scheme = _tiny_scheme().with_deltas(0.0, 0.0)
    record = generate([], model, scheme,
                      GenerationParams(max_tokens=5, decode_mode="greedy"))
    assert record.tokens == [0, 0, 0, 0, 0]


def test_generate_deterministic_per_seed():
    model = UniformLM(VocabSpec(200))
    scheme = _tiny_scheme()
    params = GenerationParams(max_tokens=60, decode_mode="sample", rng_seed=77)
    rec1 = generate([], model, scheme, params)
    rec2 = generate([], model, scheme, params)
    assert rec1.tokens == rec2.tokens
    assert rec1.flags == rec2.flags
    assert rec1.unbiased_logprob_sum == rec2.unbiased_logprob_sum
    rec3 = generate([], model, scheme,
                    GenerationParams(max_tokens=60, decode_mode="sample", rng_seed=78))
    assert rec3.tokens != rec1.tokens


def test_generate_flags_align_with_tokens_and_head_is_skipped():
    model = UniformLM(VocabSpec(100))
    record = generate([], model, _tiny_scheme(),
                      GenerationParams(max_tokens=30, rng_seed=5))
    assert len(record.flags) == len(record.tokens) == 30
    assert record.flags[0] == "skip"
    assert record.flags[1] == "skip"
    assert all(f in ("none", "g1", "g2") for f in record.flags[2:])


def test_generate_hit_rates_match_closed_form():
    # Uniform logits let the watermarked hit probabilities be computed
    # exactly from the adjusted-probability formula.
    gamma, d1, d2 = 0.5, 1.5, 2.5
    w2 = gamma * gamma * math.exp(d1 + d2)
    w1 = gamma * (1 - gamma) * math.exp(d1)
    w0 = 1 - gamma
    p_g1 = (w2 + w1) / (w2 + w1 + w0)
    p_g2_given_g1 = w2 / (w2 + w1)

    model = UniformLM(VocabSpec(1000))
    scheme = _tiny_scheme()
    in_g1 = in_g2 = scoreable = 0
    for trial in range(100):
        record = generate([], model, scheme,
                          GenerationParams(max_tokens=300, rng_seed=1000 + trial))
        for flag in record.flags:
            if flag == "skip":
                continue
            scoreable += 1
            in_g1 += flag in ("g1", "g2")
            in_g2 += flag == "g2"
    assert abs(in_g1 / scoreable - p_g1) < 0.02
    assert abs(in_g2 / in_g1 - p_g2_given_g1) < 0.02
    assert abs(p_g1 - 0.9673) < 1e-4
    assert abs(p_g2_given_g1 - 0.9241) < 1e-4


def test_generate_rejects_bad_prompt_and_bad_source():
    model = UniformLM(VocabSpec(100))
    with pytest.raises(VocabMismatchError):
        generate([5000], model, _tiny_scheme(), GenerationParams(max_tokens=3))

    class WrongShape:
        vocab = VocabSpec(100)

        def next_logits(self, prefix):
            return np.zeros(64)

    with pytest.raises(VocabMismatchError):
        generate([], WrongShape(), _tiny_scheme(), GenerationParams(max_tokens=3))


def test_generate_single_layer_scheme_flags_only_g1():
    scheme = WatermarkScheme(
        layers=(WatermarkLayer(key=b"solo", offset=1, delta=3.0),)
    )
    model = UniformLM(VocabSpec(100))
    record = generate([], model, scheme, GenerationParams(max_tokens=40, rng_seed=2))
    assert record.flags[0] == "skip"
    assert set(record.flags[1:]) <= {"none", "g1"}


def test_prompt_conditions_model_but_not_watermark_context():
    # Same seed, different prompts: the skip head stays put because context
    # is measured inside the continuation.
    model = SeededGaussianLM(VocabSpec(100), seed=4, sigma=1.0)
    scheme = _tiny_scheme()
    rec_a = generate([], model, scheme, GenerationParams(max_tokens=10, rng_seed=1))
    rec_b = generate([3, 1, 4], model, scheme,
                     GenerationParams(max_tokens=10, rng_seed=1))
    assert rec_a.flags[:2] == ["skip", "skip"]
    assert rec_b.flags[:2] == ["skip", "skip"]
    assert rec_a.tokens != rec_b.tokens  # prompt reached the logit source


def test_record_jsonl_round_trip():
    record = GenerationRecord(tokens=[1, 2, 3], flags=["skip", "g1", "none"],
                              unbiased_logprob_sum=-4.25)
    back = GenerationRecord.from_dict(json.loads(record.to_json_line()))
    assert back == record
    assert back.unbiased_logprob_mean() == pytest.approx(-4.25 / 3)


def test_log_softmax_consistent_with_softmax():
    rng = np.random.default_rng(4)
    logits = rng.normal(0, 5, size=64)
    assert np.allclose(np.exp(log_softmax(logits)), softmax(logits), atol=1e-12)
