"""Golden test vectors pinning the keyed partition across implementations.

Each line fixes the full seed-and-draw chain for one (key, context token,
candidate token, gamma) tuple: any reimplementation in any language must
reproduce every boolean bit-exactly. Both membership levels on a line are
evaluated under the single listed key, so the two booleans coincide by
construction; distinct-key layer separation is covered by the property
tests instead.

The checked-in file lives in the package data directory and is verified by
``nestmark vectors --check``.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .partition import membership, prf_seed

GOLDEN_KEYS = (b"k1", b"k2", b"nested-watermark-golden", bytes(range(16)))
GOLDEN_CONTEXT_TOKENS = (0, 1, 7, 8, 255, 999, 65535, 1_000_000)
GOLDEN_CANDIDATE_TOKENS = (0, 1, 2, 7, 500, 999)
GOLDEN_GAMMAS = (0.25, 0.5)

_DATA_PACKAGE = "nestmark.data"
_DATA_FILENAME = "golden_vectors.jsonl"


def golden_entries() -> list[dict]:
    """Deterministic spread of vector entries, in file order."""
    entries = []
    for key in GOLDEN_KEYS:
        for context in GOLDEN_CONTEXT_TOKENS:
            seed = prf_seed(context, key)
            for candidate in GOLDEN_CANDIDATE_TOKENS:
                for gamma in GOLDEN_GAMMAS:
                    verdict = membership(candidate, seed, seed, gamma)
                    entries.append(
                        {
                            "key_hex": key.hex(),
                            "context_token": context,
                            "candidate_token": candidate,
                            "gamma": gamma,
                            "in_g1": verdict.in_g1,
                            "in_g2": verdict.in_g2,
                        }
                    )
    return entries


def default_vectors_path() -> Path:
    return Path(str(resources.files(_DATA_PACKAGE).joinpath(_DATA_FILENAME)))


def write_golden_vectors(path: str | Path) -> int:
    """Write the vector file; returns the number of lines written."""
    entries = golden_entries()
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry))
            fh.write("\n")
    return len(entries)


def check_golden_vectors(path: str | Path) -> list[str]:
    """Recompute every line and return human-readable mismatch descriptions.

    An empty list means the file matches the current implementation
    bit-exactly (count, order, and every field).
    """
    problems: list[str] = []
    expected = golden_entries()
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if len(lines) != len(expected):
        problems.append(f"expected {len(expected)} entries, file has {len(lines)}")
    for i, (line, want) in enumerate(zip(lines, expected)):
        try:
            got = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append(f"line {i + 1}: not valid JSON ({exc})")
            continue
        if got != want:
            problems.append(f"line {i + 1}: {got} != expected {want}")
    return problems
