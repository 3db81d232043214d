"""Monte-Carlo harness: error rates, z-score sweeps, and the quality proxy.

Trials are independent generate-then-detect runs with per-trial RNG seeds
derived as base_seed + index, so a batch is reproducible bit-for-bit and
sweeps reuse the same seeds at every axis value (paired samples). The
``unwatermarked`` mode pushes zero-bias generations through the full
pipeline so false positives include any pipeline artifacts; ``random`` is
a faster pure-null mode that draws i.i.d. uniform tokens and only detects.

Text-quality comparisons use the unbiased log-probability proxy: each
config is paired against a zero-bias twin sharing its seeds, and the mean
per-token log-probability shortfall is the degradation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import (
    GenerationParams,
    ModelMismatchError,
    UnknownAxisError,
    WatermarkScheme,
    validate_scheme,
)
from .detector import DetectionReport, detect
from .generator import generate
from .synthetic_lm import SeededGaussianLM, parse_model_spec

MODES = ("watermarked", "unwatermarked", "single_watermark", "random")
SWEEP_AXES = (
    "gamma",
    "delta1",
    "delta2",
    "tokens_per_trial",
    "single_delta",
    "sigma",
)


@dataclass(frozen=True)
class TrialConfig:
    """One batch's worth of experiment settings."""

    scheme: WatermarkScheme
    model_spec: str
    trials: int
    tokens_per_trial: int = 300
    mode: str = "watermarked"
    single_delta: float = 4.0
    base_seed: int = 0

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.tokens_per_trial < 1:
            raise ValueError(
                f"tokens_per_trial must be >= 1, got {self.tokens_per_trial}"
            )
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")


@dataclass
class TrialRecord:
    """Detection statistics for a single trial."""

    z1: float | None
    z2: float | None
    c1: int
    c2: int
    scoreable_count: int
    unbiased_logprob_mean: float | None

    def to_dict(self) -> dict:
        return {
            "z1": self.z1,
            "z2": self.z2,
            "c1": self.c1,
            "c2": self.c2,
            "scoreable_count": self.scoreable_count,
            "unbiased_logprob_mean": self.unbiased_logprob_mean,
        }


@dataclass
class TrialBatch:
    """Aggregated results of one run_batch call.

    Rate fields are populated according to the mode: false-positive rates
    for the null modes, miss rates for the watermarked modes; the rest stay
    None. Every rate is a count divided by the trial count.
    """

    mode: str
    trials: int
    per_trial: list[TrialRecord] = field(default_factory=list)
    type1_rate_w1: float | None = None
    type1_rate_w2: float | None = None
    type2_rate_w1: float | None = None
    type2_rate_w2: float | None = None
    z1_mean: float | None = None
    z2_mean: float | None = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "trials": self.trials,
            "type1_rate_w1": self.type1_rate_w1,
            "type1_rate_w2": self.type1_rate_w2,
            "type2_rate_w1": self.type2_rate_w1,
            "type2_rate_w2": self.type2_rate_w2,
            "z1_mean": self.z1_mean,
            "z2_mean": self.z2_mean,
            "per_trial": [rec.to_dict() for rec in self.per_trial],
        }


def generation_scheme(config: TrialConfig) -> WatermarkScheme:
    """The scheme actually used to generate in this config's mode."""
    scheme = config.scheme
    if config.mode == "watermarked":
        return scheme
    if config.mode in ("unwatermarked", "random"):
        return scheme.with_deltas(*([0.0] * len(scheme.layers)))
    # single_watermark: first layer only, carrying the baseline bias
    layer = replace(scheme.layers[0], delta=config.single_delta)
    return replace(scheme, layers=(layer,))


def detection_scheme(config: TrialConfig) -> WatermarkScheme:
    """Detection uses the same keys/offsets; single mode drops layer 2."""
    if config.mode == "single_watermark":
        return generation_scheme(config)
    return config.scheme


def _mean_or_none(values: list[float]) -> float | None:
    if not values:
        return None
    return float(np.mean(values))


def run_batch(config: TrialConfig) -> TrialBatch:
    """Run all trials of one config and aggregate rates and mean z-scores."""
    validate_scheme(config.scheme)
    model = parse_model_spec(config.model_spec)
    gen_scheme = generation_scheme(config)
    det_scheme = detection_scheme(config)

    batch = TrialBatch(mode=config.mode, trials=config.trials)
    hits1 = misses1 = hits2 = misses2 = 0
    z1_values: list[float] = []
    z2_values: list[float] = []

    for index in range(config.trials):
        seed = config.base_seed + index
        logprob_mean: float | None
        if config.mode == "random":
            rng = np.random.Generator(np.random.PCG64(seed))
            tokens = rng.integers(
                0, model.vocab.vocab_size, size=config.tokens_per_trial
            ).tolist()
            logprob_mean = None
        else:
            params = GenerationParams(
                max_tokens=config.tokens_per_trial,
                decode_mode="sample",
                temperature=1.0,
                rng_seed=seed,
            )
            record = generate([], model, gen_scheme, params)
            tokens = record.tokens
            logprob_mean = record.unbiased_logprob_mean()
        report: DetectionReport = detect(tokens, det_scheme)

        batch.per_trial.append(
            TrialRecord(
                z1=report.z1,
                z2=report.z2,
                c1=report.c1,
                c2=report.c2,
                scoreable_count=report.scoreable_count,
                unbiased_logprob_mean=logprob_mean,
            )
        )
        if report.z1 is not None:
            z1_values.append(report.z1)
        if report.z2 is not None:
            z2_values.append(report.z2)
        hits1 += report.watermark1_detected
        misses1 += not report.watermark1_detected
        hits2 += report.watermark2_detected
        misses2 += not report.watermark2_detected

    batch.z1_mean = _mean_or_none(z1_values)
    batch.z2_mean = _mean_or_none(z2_values)
    if config.mode in ("unwatermarked", "random"):
        batch.type1_rate_w1 = hits1 / config.trials
        batch.type1_rate_w2 = hits2 / config.trials
    elif config.mode == "watermarked":
        batch.type2_rate_w1 = misses1 / config.trials
        batch.type2_rate_w2 = misses2 / config.trials
    else:  # single_watermark: only the first watermark exists
        batch.type2_rate_w1 = misses1 / config.trials
    return batch


def _with_axis(config: TrialConfig, axis: str, value: float) -> TrialConfig:
    if axis == "gamma":
        return replace(config, scheme=replace(config.scheme, gamma=float(value)))
    if axis == "delta1":
        layers = (replace(config.scheme.layers[0], delta=float(value)),) + tuple(
            config.scheme.layers[1:]
        )
        return replace(config, scheme=replace(config.scheme, layers=layers))
    if axis == "delta2":
        if len(config.scheme.layers) < 2:
            raise UnknownAxisError("delta2 sweep requires a two-layer scheme")
        layers = (
            config.scheme.layers[0],
            replace(config.scheme.layers[1], delta=float(value)),
        ) + tuple(config.scheme.layers[2:])
        return replace(config, scheme=replace(config.scheme, layers=layers))
    if axis == "tokens_per_trial":
        return replace(config, tokens_per_trial=int(value))
    if axis == "single_delta":
        return replace(config, single_delta=float(value))
    if axis == "sigma":
        model = parse_model_spec(config.model_spec)
        if not isinstance(model, SeededGaussianLM):
            raise UnknownAxisError("sigma sweep requires a gauss model spec")
        spec = f"gauss:{model.vocab.vocab_size}:{float(value):g}:{model.seed}"
        return replace(config, model_spec=spec)
    raise UnknownAxisError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def sweep(
    base: TrialConfig, axis: str, values: Sequence[float]
) -> list[tuple[float, TrialBatch]]:
    """One batch per axis value, all other parameters (and seeds) held fixed."""
    if axis not in SWEEP_AXES:
        raise UnknownAxisError(
            f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}"
        )
    return [(float(v), run_batch(_with_axis(base, axis, v))) for v in values]


@dataclass
class QualityComparison:
    """Paired unbiased-logprob comparison between two configs.

    Degradation is each config's shortfall against its own zero-bias twin
    (same model, same seeds). ``difference`` = degradation_b - degradation_a,
    so positive means config A degrades less; the bootstrap interval covers
    the mean paired difference.
    """

    mean_logprob_a: float
    mean_logprob_b: float
    degradation_a: float
    degradation_b: float
    difference: float
    ci_low: float
    ci_high: float
    bootstrap_resamples: int

    def to_dict(self) -> dict:
        return {
            "mean_logprob_a": self.mean_logprob_a,
            "mean_logprob_b": self.mean_logprob_b,
            "degradation_a": self.degradation_a,
            "degradation_b": self.degradation_b,
            "difference": self.difference,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "bootstrap_resamples": self.bootstrap_resamples,
        }


def _logprob_means(config: TrialConfig) -> np.ndarray:
    batch = run_batch(config)
    values = [rec.unbiased_logprob_mean for rec in batch.per_trial]
    if any(v is None for v in values):
        raise ModelMismatchError("quality proxy needs generated trials, not random mode")
    return np.asarray(values, dtype=np.float64)


def quality_proxy(
    config_a: TrialConfig,
    config_b: TrialConfig,
    bootstrap_resamples: int = 1000,
    bootstrap_seed: int = 0,
) -> QualityComparison:
    """Compare mean unbiased log-probability degradation of two configs.

    Both configs must share model_spec, tokens_per_trial, and trial count so
    their per-trial values pair up.
    """
    if config_a.model_spec != config_b.model_spec:
        raise ModelMismatchError(
            f"model specs differ: {config_a.model_spec!r} vs {config_b.model_spec!r}"
        )
    if config_a.tokens_per_trial != config_b.tokens_per_trial:
        raise ModelMismatchError("tokens_per_trial differs between configs")
    if config_a.trials != config_b.trials:
        raise ModelMismatchError("trial counts differ between configs")

    lp_a = _logprob_means(config_a)
    lp_b = _logprob_means(config_b)
    base_a = _logprob_means(replace(config_a, mode="unwatermarked"))
    base_b = _logprob_means(replace(config_b, mode="unwatermarked"))

    deg_a = base_a - lp_a
    deg_b = base_b - lp_b
    paired_diff = deg_b - deg_a

    rng = np.random.Generator(np.random.PCG64(bootstrap_seed))
    n = len(paired_diff)
    resampled = np.empty(bootstrap_resamples, dtype=np.float64)
    for i in range(bootstrap_resamples):
        idx = rng.integers(0, n, size=n)
        resampled[i] = paired_diff[idx].mean()
    ci_low, ci_high = np.percentile(resampled, [2.5, 97.5])

    return QualityComparison(
        mean_logprob_a=float(lp_a.mean()),
        mean_logprob_b=float(lp_b.mean()),
        degradation_a=float(deg_a.mean()),
        degradation_b=float(deg_b.mean()),
        difference=float(paired_diff.mean()),
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        bootstrap_resamples=bootstrap_resamples,
    )


def write_batch_json(batch: TrialBatch, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(batch.to_dict(), fh, indent=2)
        fh.write("\n")


SUMMARY_FIELDS = [
    "axis",
    "value",
    "mode",
    "trials",
    "type1_rate_w1",
    "type1_rate_w2",
    "type2_rate_w1",
    "type2_rate_w2",
    "z1_mean",
    "z2_mean",
    "quality_difference",
]


def summary_row(
    batch: TrialBatch,
    axis: str = "",
    value: float | None = None,
    quality: QualityComparison | None = None,
) -> dict:
    return {
        "axis": axis,
        "value": value,
        "mode": batch.mode,
        "trials": batch.trials,
        "type1_rate_w1": batch.type1_rate_w1,
        "type1_rate_w2": batch.type1_rate_w2,
        "type2_rate_w1": batch.type2_rate_w1,
        "type2_rate_w2": batch.type2_rate_w2,
        "z1_mean": batch.z1_mean,
        "z2_mean": batch.z2_mean,
        "quality_difference": None if quality is None else quality.difference,
    }


def write_summary_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_zhist_csv(batch: TrialBatch, path: str, bins: int = 40) -> None:
    """Histogram of z1 and z2 over shared bins, for plotting."""
    z1 = np.asarray([r.z1 for r in batch.per_trial if r.z1 is not None])
    z2 = np.asarray([r.z2 for r in batch.per_trial if r.z2 is not None])
    combined = np.concatenate([z1, z2]) if z2.size else z1
    if combined.size == 0:
        edges = np.linspace(-1.0, 1.0, bins + 1)
    else:
        lo, hi = float(combined.min()), float(combined.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, bins + 1)
    counts1, _ = np.histogram(z1, bins=edges)
    counts2, _ = np.histogram(z2, bins=edges)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "z1_count", "z2_count"])
        for i in range(bins):
            writer.writerow(
                [f"{edges[i]:.6g}", f"{edges[i + 1]:.6g}", counts1[i], counts2[i]]
            )
