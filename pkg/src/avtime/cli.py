"""Command-line entry point.

Subcommands cover the full pipeline: ``gen-st`` / ``gen-mt`` generate
transition-QA records from caption manifests, ``convert-mt`` turns real
audio-visual annotations into dialogues, ``assemble-prompt`` renders the
marker-token prompt, ``train-toy`` runs the toy model, ``eval`` scores
predictions, and ``grad-check`` verifies model gradients.

Flag values override the optional JSON config file, which overrides the
built-in defaults.  All randomness flows from --seed; no subcommand
touches the network unless --llm-endpoint is given.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import evaluate as ev
from . import synth
from .figures import render_eval_summary, render_training_curves
from .llmclient import HttpLlmClient, LlmClientError
from .prompts import PromptSpec, assemble
from .toydata import VARIABLE, make_dataset
from .toymodel import (
    DEFAULT_BATCH,
    DEFAULT_EPOCHS,
    DEFAULT_LR,
    ModelConfig,
    TimeEncoding,
    grad_check,
    train,
)

DEFAULTS = {
    "seed": 0,
    "m": 10.0,
    "T": 30.0,
    "K": 100,
    "time_encoding": "rote",
    "judge_mode": "deterministic",
    "llm_endpoint": None,
    "jobs": 1,
    "match_label_prob": 0.3,
}

_CONFIG_KEYS = tuple(DEFAULTS)


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Apply the flags > config file > defaults precedence."""
    file_values = {}
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
        unknown = set(file_values) - set(_CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key in _CONFIG_KEYS:
        if getattr(args, key, None) is None:
            setattr(args, key, file_values.get(key, DEFAULTS[key]))
    return args


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _figure_path(out: str) -> Path:
    return Path(out).with_suffix(".png")


def _maybe_client(args: argparse.Namespace) -> HttpLlmClient | None:
    return HttpLlmClient(args.llm_endpoint) if args.llm_endpoint else None


def _cmd_generate(args: argparse.Namespace, variant: str) -> int:
    _resolve(args)
    manifests = synth.load_manifests(args.manifest)
    sounds = synth.load_sound_library(args.sounds)
    client = _maybe_client(args)

    def run_one(manifest: synth.CaptionManifest) -> list[synth.ClipQARecord]:
        if variant == synth.ST:
            records = synth.build_st_records(manifest, sounds, args.seed, args.m, args.T)
        else:
            records = synth.build_mt_records(
                manifest, sounds, args.seed, args.m, args.T, args.match_label_prob
            )
        if client is not None:
            records = [_paraphrased(record, client) for record in records]
        return records

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            per_manifest = list(pool.map(run_one, manifests))
    else:
        per_manifest = [run_one(m) for m in manifests]
    records = [record for batch in per_manifest for record in batch]
    synth.write_records_jsonl(records, args.out)
    print(f"wrote {len(records)} {variant} records to {args.out}")
    return 0


def _paraphrased(record: synth.ClipQARecord, client: HttpLlmClient) -> synth.ClipQARecord:
    turns, ok = synth.paraphrase_via_llm(
        record.turns, client, record.timeline, record.edit_plan
    )
    if ok:
        record.turns = turns
        record.validate()
    else:
        record.flags = record.flags + ("unparaphrased",)
    return record


def _cmd_gen_st(args: argparse.Namespace) -> int:
    return _cmd_generate(args, synth.ST)


def _cmd_gen_mt(args: argparse.Namespace) -> int:
    return _cmd_generate(args, synth.MT)


def _cmd_convert_mt(args: argparse.Namespace) -> int:
    _resolve(args)
    records = []
    for video_id, rows in synth.load_annotations(args.annotations):
        records.append(synth.convert_mt_record(video_id, rows))
    synth.write_records_jsonl(records, args.out)
    print(f"wrote {len(records)} converted records to {args.out}")
    return 0


def _cmd_assemble_prompt(args: argparse.Namespace) -> int:
    spec = PromptSpec(
        system_prompt=args.system_prompt,
        question=args.question,
        has_video=args.video_tokens > 0,
        has_audio=args.audio_tokens > 0,
        joint=args.joint,
        video_token_count=args.video_tokens,
        audio_token_count=args.audio_tokens,
    )
    text = assemble(spec)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_train_toy(args: argparse.Namespace) -> int:
    _resolve(args)
    config = ModelConfig(
        dim=args.dim,
        layers=args.layers,
        heads=args.heads,
        time_encoding=TimeEncoding(args.time_encoding),
        K=args.K,
        seed=args.seed,
    )
    train_set = make_dataset(
        args.train_samples, args.classes, args.frame_rate_mode, args.seed,
        frames=args.frames,
    )
    test_set = make_dataset(
        args.test_samples, args.classes, args.frame_rate_mode, args.seed + 10_000,
        frames=args.frames,
    )
    report = train(
        config, train_set, test_set,
        epochs=args.epochs, lr=args.lr, batch_size=args.batch_size,
    )
    payload = report.to_dict()
    _write_json(payload, args.out)
    if not args.no_figures:
        render_training_curves(payload, _figure_path(args.out))
    print(
        f"{args.time_encoding}: train accuracy {report.train_accuracy:.3f}, "
        f"test accuracy {report.test_accuracy:.3f} -> {args.out}"
    )
    return 0


def _load_predictions(path: str) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def _cmd_eval(args: argparse.Namespace) -> int:
    _resolve(args)
    records = synth.read_records_jsonl(args.records)
    rows = _load_predictions(args.predictions)
    if all("id" in row for row in rows):
        by_id = {row["id"]: str(row["text"]) for row in rows}
        missing = [r.record_id for r in records if r.record_id not in by_id]
        if missing:
            raise ValueError(f"predictions missing for records: {missing[:5]}")
        predictions = [by_id[r.record_id] for r in records]
    else:
        predictions = [str(row["text"]) for row in rows]
    config = ev.EvalConfig(
        judge_mode=args.judge_mode,
        threshold=args.threshold,
        client=_maybe_client(args),
        jobs=args.jobs,
    )
    report = ev.evaluate_dataset(records, predictions, config)
    payload = report.to_dict()
    _write_json(payload, args.out)
    if not args.no_figures:
        render_eval_summary(payload, _figure_path(args.out))
    print(
        f"accuracy {report.accuracy:.3f}, R@1@0.5 {report.r1_iou_05:.3f}, "
        f"R@1@0.7 {report.r1_iou_07:.3f} over {report.n} items -> {args.out}"
    )
    return 0


def _cmd_grad_check(args: argparse.Namespace) -> int:
    _resolve(args)
    encodings = (
        [e.value for e in TimeEncoding]
        if args.time_encoding == "all"
        else [args.time_encoding]
    )
    worst = 0.0
    for encoding in encodings:
        config = ModelConfig(
            dim=args.dim, layers=args.layers, heads=args.heads,
            time_encoding=TimeEncoding(encoding), K=args.K, seed=args.seed,
        )
        error = grad_check(config)
        worst = max(worst, error)
        print(f"{encoding}: max relative gradient error {error:.3e}")
    if worst >= args.tolerance:
        print(f"FAILED: {worst:.3e} >= {args.tolerance:.1e}", file=sys.stderr)
        return 1
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file mirroring the run options")
    parser.add_argument("--seed", type=int, default=None, help="master random seed (default 0)")
    parser.add_argument("--jobs", type=int, default=None, help="parallel workers (default 1)")
    parser.add_argument("--llm-endpoint", dest="llm_endpoint", default=None,
                        help="HTTP endpoint for the optional LLM client")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avtime",
        description="Audio-visual temporal grounding toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, variant_help in ((
        "gen-st", "Generate single-turn transition QA records"),
        ("gen-mt", "Generate multi-turn transition QA records"),
    ):
        p = sub.add_parser(name, help=variant_help)
        p.add_argument("--manifest", required=True, help="caption manifest JSON")
        p.add_argument("--sounds", required=True, help="sound library JSON")
        p.add_argument("--out", required=True, help="output records JSONL")
        p.add_argument("--m", type=float, default=None,
                       help="max gap between captions in seconds (default 10)")
        p.add_argument("--T", type=float, default=None,
                       help="max chunk span in seconds (default 30)")
        p.add_argument("--match-label-prob", dest="match_label_prob", type=float,
                       default=None, help="chance the two sounds share a label (default 0.3)")
        _add_common(p)
        p.set_defaults(func=_cmd_gen_st if name == "gen-st" else _cmd_gen_mt)

    p = sub.add_parser("convert-mt", help="Convert real audio-visual annotations to dialogues")
    p.add_argument("--annotations", required=True,
                   help='JSON file: {"video_id", "annotations": [{"start","end","label","modality"}]}')
    p.add_argument("--out", required=True, help="output records JSONL")
    _add_common(p)
    p.set_defaults(func=_cmd_convert_mt)

    p = sub.add_parser("assemble-prompt", help="Render the marker-token instruction prompt")
    p.add_argument("--system-prompt", default="You are a helpful assistant.")
    p.add_argument("--question", required=True)
    p.add_argument("--video-tokens", type=int, default=0)
    p.add_argument("--audio-tokens", type=int, default=0)
    p.add_argument("--joint", action="store_true",
                   help="wrap both modalities in the joint markers")
    p.add_argument("--out", help="write the prompt here instead of stdout")
    p.set_defaults(func=_cmd_assemble_prompt)

    p = sub.add_parser("train-toy", help="Train the toy attention model")
    p.add_argument("--time-encoding", dest="time_encoding", default=None,
                   choices=[e.value for e in TimeEncoding],
                   help="temporal conditioning (default rote)")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--train-samples", type=int, default=2000)
    p.add_argument("--test-samples", type=int, default=500)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--frame-rate-mode", default=VARIABLE, choices=("uniform", "variable"))
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--K", type=int, default=None, help="time token budget (default 100)")
    p.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    p.add_argument("--lr", type=float, default=DEFAULT_LR)
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH)
    p.add_argument("--no-figures", action="store_true", help="skip the PNG rendering")
    _add_common(p)
    p.set_defaults(func=_cmd_train_toy)

    p = sub.add_parser("eval", help="Score predictions against generated records")
    p.add_argument("--records", required=True, help="records JSONL from gen-st/gen-mt")
    p.add_argument("--predictions", required=True, help='JSONL of {"id", "text"}')
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--judge-mode", dest="judge_mode", default=None,
                   choices=(ev.DETERMINISTIC, ev.LLM_CLIENT))
    p.add_argument("--threshold", type=int, default=3,
                   help="minimum judge score that counts as accurate")
    p.add_argument("--no-figures", action="store_true", help="skip the PNG rendering")
    _add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("grad-check", help="Finite-difference check of model gradients")
    p.add_argument("--time-encoding", dest="time_encoding", default="all",
                   choices=["all"] + [e.value for e in TimeEncoding])
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--K", type=int, default=None, help="time token budget (default 100)")
    p.add_argument("--tolerance", type=float, default=1e-4)
    _add_common(p)
    p.set_defaults(func=_cmd_grad_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError, LlmClientError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
