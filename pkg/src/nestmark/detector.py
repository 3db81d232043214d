"""Recomputes nested group membership with the secret keys and runs the
two-stage z-tests.

The first test compares the group-1 hit count against its null mean over
all scoreable positions; the second conditions on the observed group-1
count, since the inner group is by construction a gamma fraction of the
outer one under the null. Positions whose context reaches past the start
of the stream never enter any count. Verdicts use strict comparison: a
z-score exactly equal to the threshold is not a detection.
"""

from __future__ import annotations

import html
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DegenerateSampleError,
    EmptyStreamError,
    TokenId,
    WatermarkScheme,
    validate_scheme,
)
from .generator import FLAG_G1, FLAG_G2, FLAG_NONE, FLAG_SKIP
from .partition import draws_for_stream, prf_seed


@dataclass
class DetectionReport:
    """Counts, scores, and verdicts for one token stream.

    ``z1``/``z2`` are None when their statistic is undefined (no scoreable
    positions, or no group-1 hits to condition on); the matching
    ``*_degenerate`` flag is then set and the verdict is False.
    """

    scoreable_count: int
    c1: int
    c2: int
    z1: float | None
    z2: float | None
    watermark1_detected: bool
    watermark2_detected: bool
    per_token_flags: list[str]
    z1_degenerate: bool = False
    z2_degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "scoreable_count": self.scoreable_count,
            "c1": self.c1,
            "c2": self.c2,
            "z1": self.z1,
            "z2": self.z2,
            "watermark1_detected": self.watermark1_detected,
            "watermark2_detected": self.watermark2_detected,
            "z1_degenerate": self.z1_degenerate,
            "z2_degenerate": self.z2_degenerate,
            "per_token_flags": list(self.per_token_flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "DetectionReport":
        return cls(
            scoreable_count=int(obj["scoreable_count"]),
            c1=int(obj["c1"]),
            c2=int(obj["c2"]),
            z1=None if obj["z1"] is None else float(obj["z1"]),
            z2=None if obj["z2"] is None else float(obj["z2"]),
            watermark1_detected=bool(obj["watermark1_detected"]),
            watermark2_detected=bool(obj["watermark2_detected"]),
            per_token_flags=[str(f) for f in obj["per_token_flags"]],
            z1_degenerate=bool(obj.get("z1_degenerate", False)),
            z2_degenerate=bool(obj.get("z2_degenerate", False)),
        )


def count_hits(
    tokens: Sequence[TokenId], scheme: WatermarkScheme
) -> tuple[int, int, int, list[str]]:
    """Group hit counts over all scoreable positions.

    Returns (scoreable_count, c1, c2, per_token_flags). Only the first two
    layers are scored; schemes with one layer report c2 = 0.
    """
    if len(tokens) == 0:
        raise EmptyStreamError("cannot score an empty token stream")
    validate_scheme(scheme)
    max_offset = scheme.max_offset()
    length = len(tokens)
    if length <= max_offset:
        return 0, 0, 0, [FLAG_SKIP] * length

    arr = np.asarray(tokens, dtype=np.uint64)
    positions = np.arange(max_offset, length)
    scored = arr[positions]

    hit_levels: list[np.ndarray] = []
    nested: np.ndarray | None = None
    for layer in scheme.layers[:2]:
        contexts = tokens[max_offset - layer.offset : length - layer.offset]
        seeds = np.fromiter(
            (prf_seed(int(t), layer.key) for t in contexts),
            dtype=np.uint64,
            count=len(positions),
        )
        level = draws_for_stream(seeds, scored) < scheme.gamma
        nested = level if nested is None else (nested & level)
        hit_levels.append(nested)

    c1 = int(hit_levels[0].sum())
    c2 = int(hit_levels[1].sum()) if len(hit_levels) > 1 else 0

    flags = [FLAG_SKIP] * max_offset
    if len(hit_levels) > 1:
        for g1, g2 in zip(hit_levels[0], hit_levels[1]):
            flags.append(FLAG_G2 if g2 else (FLAG_G1 if g1 else FLAG_NONE))
    else:
        flags.extend(FLAG_G1 if g1 else FLAG_NONE for g1 in hit_levels[0])
    return len(positions), c1, c2, flags


def z_first(c1: int, total: int, gamma: float) -> float:
    """First-stage z-score: c1 against a null mean of gamma * total."""
    if total < 1:
        raise DegenerateSampleError("no scoreable positions to test")
    return (c1 - gamma * total) / math.sqrt(total * gamma * (1.0 - gamma))


def z_second(c2: int, c1: int, gamma: float) -> float:
    """Second-stage z-score: c2 against a null mean of gamma * c1."""
    if c1 < 1:
        raise DegenerateSampleError("no group-1 hits to condition on")
    return (c2 - gamma * c1) / math.sqrt(c1 * gamma * (1.0 - gamma))


def detect(tokens: Sequence[TokenId], scheme: WatermarkScheme) -> DetectionReport:
    """Full detection: counts, both z-scores, and threshold verdicts."""
    total, c1, c2, flags = count_hits(tokens, scheme)

    z1: float | None = None
    z1_degenerate = total == 0
    if not z1_degenerate:
        z1 = z_first(c1, total, scheme.gamma)

    z2: float | None = None
    z2_degenerate = total == 0 or c1 == 0 or len(scheme.layers) < 2
    if not z2_degenerate:
        z2 = z_second(c2, c1, scheme.gamma)

    return DetectionReport(
        scoreable_count=total,
        c1=c1,
        c2=c2,
        z1=z1,
        z2=z2,
        watermark1_detected=z1 is not None and z1 > scheme.theta,
        watermark2_detected=z2 is not None and z2 > scheme.theta,
        per_token_flags=flags,
        z1_degenerate=z1_degenerate,
        z2_degenerate=z2_degenerate,
    )


_FLAG_STYLE = {
    FLAG_G2: "background:#1b5e20;color:#fff",
    FLAG_G1: "background:#a5d6a7;color:#1b1b1b",
    FLAG_NONE: "background:#e0e0e0;color:#1b1b1b",
    FLAG_SKIP: "background:#f5f5f5;color:#9e9e9e;border:1px dashed #bdbdbd",
}


def render_html(
    report: DetectionReport,
    tokens: Sequence[TokenId],
    title: str = "Watermark detection",
) -> str:
    """Self-contained HTML page highlighting each token by its group.

    Dark green marks inner-group hits, light green outer-group-only hits,
    gray misses; context-less positions are dashed.
    """

    def fmt(z: float | None) -> str:
        return "n/a" if z is None else f"{z:.3f}"

    spans = []
    for token, flag in zip(tokens, report.per_token_flags):
        style = _FLAG_STYLE.get(flag, _FLAG_STYLE[FLAG_NONE])
        spans.append(
            f'<span class="tok" style="{style}" title="{html.escape(flag)}">'
            f"{int(token)}</span>"
        )
    legend = " ".join(
        f'<span class="tok" style="{style}">{name}</span>'
        for name, style in _FLAG_STYLE.items()
    )
    verdicts = (
        f"watermark 1: <b>{'detected' if report.watermark1_detected else 'not detected'}</b>"
        f" (z={fmt(report.z1)}) &middot; "
        f"watermark 2: <b>{'detected' if report.watermark2_detected else 'not detected'}</b>"
        f" (z={fmt(report.z2)})"
    )
    stats = (
        f"scoreable positions: {report.scoreable_count}, "
        f"group-1 hits: {report.c1}, group-2 hits: {report.c2}"
    )
    return f"""<!DOCTYPE html>
<html><head><meta charset="utf-8"><title>{html.escape(title)}</title>
<style>
body {{ font-family: sans-serif; margin: 2em; }}
.tok {{ display:inline-block; padding:2px 6px; margin:2px; border-radius:4px;
        font-family: monospace; font-size: 13px; }}
</style></head>
<body>
<h2>{html.escape(title)}</h2>
<p>{verdicts}</p>
<p>{stats}</p>
<p>legend: {legend}</p>
<div>{''.join(spans)}</div>
</body></html>
"""
