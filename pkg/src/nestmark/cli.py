"""Command-line interface: generate, detect, eval, sweep, vectors.

Detection verdicts live in the JSON payload, never the exit code; exit 0
means the tool ran, 1 means an I/O or domain error (one machine-parsable
line on stderr), 2 means bad usage. All randomness flows from explicit
--seed flags, so identical invocations produce identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .core import (
    GenerationParams,
    WatermarkError,
    default_scheme,
    load_scheme,
    validate_scheme,
)
from .detector import detect, render_html
from .evaluation import (
    TrialConfig,
    quality_proxy,
    run_batch,
    summary_row,
    sweep,
    write_batch_json,
    write_summary_csv,
    write_zhist_csv,
)
from .generator import GenerationRecord, generate
from .synthetic_lm import parse_model_spec
from .vectors import check_golden_vectors, default_vectors_path, write_golden_vectors


def _parse_token_list(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    return [int(part) for part in text.split(",")]


def _add_scheme_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scheme",
        metavar="PATH",
        default=None,
        help="scheme JSON file (omit for the built-in default scheme)",
    )


def _load_scheme_arg(path: str | None):
    if path is None:
        return default_scheme()
    return validate_scheme(load_scheme(path))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nestmark",
        description="Embed and detect nested two-key watermarks in token streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate watermarked token streams")
    _add_scheme_flag(p_gen)
    p_gen.add_argument("--model", required=True, help="uniform:<v> or gauss:<v>:<sigma>:<seed>")
    p_gen.add_argument("--tokens", type=int, default=300, help="tokens per stream")
    p_gen.add_argument("--seed", type=int, default=0, help="stream RNG seed")
    p_gen.add_argument("--count", type=int, default=1, help="streams to generate (seeds seed..seed+count-1)")
    p_gen.add_argument("--mode", choices=("greedy", "sample"), default="sample")
    p_gen.add_argument("--temperature", type=float, default=1.0)
    p_gen.add_argument("--prompt", default="", help="comma-separated prompt token ids")
    p_gen.add_argument("--out", required=True, metavar="PATH", help="output JSONL file")

    p_det = sub.add_parser("detect", help="detect watermarks in token streams")
    _add_scheme_flag(p_det)
    p_det.add_argument("--in", dest="infile", required=True, metavar="PATH",
                       help="JSONL of generation records, or a bare JSON token array")
    p_det.add_argument("--out", default=None, metavar="PATH",
                       help="report JSONL (default: stdout)")
    p_det.add_argument("--render", choices=("html",), default=None,
                       help="also write a per-token highlight page")
    p_det.add_argument("--render-out", default=None, metavar="PATH",
                       help="path for the rendered page (default: <in>.html)")

    p_eval = sub.add_parser("eval", help="run a Monte-Carlo trial batch")
    _add_scheme_flag(p_eval)
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--trials", type=int, required=True)
    p_eval.add_argument("--tokens", type=int, default=300)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--mode", choices=("watermarked", "unwatermarked", "single_watermark", "random"),
                        default="watermarked")
    p_eval.add_argument("--single-delta", type=float, default=4.0)
    p_eval.add_argument("--compare-single", type=float, default=None, metavar="DELTA",
                        help="also run the quality proxy against a single-layer "
                             "baseline with this bias (watermarked mode only)")
    p_eval.add_argument("--out-dir", required=True, metavar="DIR")

    p_sweep = sub.add_parser("sweep", help="run batches across one parameter axis")
    _add_scheme_flag(p_sweep)
    p_sweep.add_argument("--model", required=True)
    p_sweep.add_argument("--trials", type=int, required=True)
    p_sweep.add_argument("--tokens", type=int, default=300)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--mode", choices=("watermarked", "unwatermarked", "single_watermark", "random"),
                         default="watermarked")
    p_sweep.add_argument("--single-delta", type=float, default=4.0)
    p_sweep.add_argument("--axis", required=True,
                         choices=("gamma", "delta1", "delta2", "tokens_per_trial", "single_delta", "sigma"))
    p_sweep.add_argument("--values", required=True, help="comma-separated axis values")
    p_sweep.add_argument("--out-dir", required=True, metavar="DIR")

    p_vec = sub.add_parser("vectors", help="regenerate or verify golden vectors")
    group = p_vec.add_mutually_exclusive_group()
    group.add_argument("--check", action="store_true", help="verify the vector file (default)")
    group.add_argument("--write", action="store_true", help="rewrite the vector file")
    p_vec.add_argument("--path", default=None, metavar="PATH",
                       help="vector file (default: the packaged file)")

    return parser


def _cmd_generate(args: argparse.Namespace) -> int:
    scheme = _load_scheme_arg(args.scheme)
    model = parse_model_spec(args.model)
    prompt = _parse_token_list(args.prompt)
    with open(args.out, "w", encoding="utf-8") as fh:
        for i in range(args.count):
            params = GenerationParams(
                max_tokens=args.tokens,
                decode_mode=args.mode,
                temperature=args.temperature,
                rng_seed=args.seed + i,
            )
            record = generate(prompt, model, scheme, params)
            fh.write(record.to_json_line())
            fh.write("\n")
    return 0


def _read_streams(path: str) -> list[list[int]]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        whole = json.loads(text)
    except json.JSONDecodeError:
        whole = None
    if isinstance(whole, list) and all(isinstance(t, int) for t in whole):
        return [whole]
    streams = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        if isinstance(obj, list):
            streams.append([int(t) for t in obj])
        else:
            streams.append(GenerationRecord.from_dict(obj).tokens)
    if not streams:
        raise WatermarkError(f"no token streams found in {path}")
    return streams


def _cmd_detect(args: argparse.Namespace) -> int:
    scheme = _load_scheme_arg(args.scheme)
    streams = _read_streams(args.infile)
    reports = [detect(tokens, scheme) for tokens in streams]

    lines = [report.to_json() for report in reports]
    if args.out is None:
        for line in lines:
            print(line)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines))
            fh.write("\n")

    if args.render == "html":
        render_path = args.render_out or f"{args.infile}.html"
        pages = [render_html(rep, toks) for rep, toks in zip(reports, streams)]
        Path(render_path).write_text("\n".join(pages), encoding="utf-8")
    return 0


def _trial_config(args: argparse.Namespace) -> TrialConfig:
    return TrialConfig(
        scheme=_load_scheme_arg(args.scheme),
        model_spec=args.model,
        trials=args.trials,
        tokens_per_trial=args.tokens,
        mode=args.mode,
        single_delta=args.single_delta,
        base_seed=args.seed,
    )


def _cmd_eval(args: argparse.Namespace) -> int:
    config = _trial_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    batch = run_batch(config)

    quality = None
    if args.compare_single is not None:
        if config.mode != "watermarked":
            raise WatermarkError("--compare-single requires --mode watermarked")
        single = replace(
            config, mode="single_watermark", single_delta=args.compare_single
        )
        quality = quality_proxy(config, single)
        with open(out_dir / "quality.json", "w", encoding="utf-8") as fh:
            json.dump(quality.to_dict(), fh, indent=2)
            fh.write("\n")

    write_batch_json(batch, str(out_dir / "batch.json"))
    write_summary_csv([summary_row(batch, quality=quality)], str(out_dir / "summary.csv"))
    write_zhist_csv(batch, str(out_dir / "zhist.csv"))
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _trial_config(args)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise WatermarkError("--values must list at least one number")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    results = sweep(config, args.axis, values)
    rows = []
    for i, (value, batch) in enumerate(results):
        write_batch_json(batch, str(out_dir / f"batch_{i:03d}.json"))
        write_zhist_csv(batch, str(out_dir / f"zhist_{i:03d}.csv"))
        rows.append(summary_row(batch, axis=args.axis, value=value))
    write_summary_csv(rows, str(out_dir / "summary.csv"))
    return 0


def _cmd_vectors(args: argparse.Namespace) -> int:
    path = Path(args.path) if args.path else default_vectors_path()
    if args.write:
        count = write_golden_vectors(path)
        print(f"wrote {count} vectors to {path}")
        return 0
    problems = check_golden_vectors(path)
    if problems:
        for problem in problems[:20]:
            print(f"error: golden vector mismatch: {problem}", file=sys.stderr)
        return 1
    print(f"golden vectors verified: {path}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "detect": _cmd_detect,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "vectors": _cmd_vectors,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (WatermarkError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
