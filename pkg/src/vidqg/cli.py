"""Command-line entry point.

Subcommands: validate, stats, split, generate, score, report, sample,
serve, agreement. Configuration comes from an optional JSON file plus
flags (flags win); VIDQG_PROVIDER_URL and VIDQG_BACKEND_<NAME>_URL
environment variables override backend/provider URLs. All randomness is
controlled by --seed. Exit codes: 0 success, 1 domain error, 2 usage
error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from . import agreement as agreement_mod
from . import annosvc, harness, metrics, report
from .corpus import (
    FilterPolicy,
    SplitAssignment,
    corpus_stats,
    filter_questions,
    format_duration,
    load_corpus,
    split_corpus,
)
from .embed import LocalHashEmbedding, RemoteEmbedding
from .errors import VidqgError

DEFAULT_SEED = 1234
DEFAULT_RATIOS = (0.8, 0.1, 0.1)


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three comma-separated numbers")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _parse_modes(text: str) -> list[harness.PromptMode]:
    try:
        return [harness.PromptMode(int(p)) for p in text.split(",") if p]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"modes must be from 1,2,3: {exc}")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _env_backend_url(name: str) -> str | None:
    key = "VIDQG_BACKEND_" + re.sub(r"[^A-Z0-9]", "_", name.upper()) + "_URL"
    return os.environ.get(key)


def _make_provider(spec: str):
    url = os.environ.get("VIDQG_PROVIDER_URL") or spec
    if url == "local":
        return LocalHashEmbedding()
    return RemoteEmbedding(url)


def _make_backends(names: list[str], config: dict) -> list:
    profiles = {p["name"]: p for p in config.get("backends", [])}
    backends = []
    for name in names:
        if name in profiles:
            doc = dict(profiles[name])
            mask = doc.pop("modality_mask", None) or {}
            profile = harness.BackendProfile(
                name=doc["name"],
                base_url=_env_backend_url(name) or doc.get("base_url"),
                supports_session=doc.get("supports_session", False),
                needs_question_list=doc.get("needs_question_list", False),
                needs_transcript=doc.get("needs_transcript", False),
                accepts_media=doc.get("accepts_media", True),
                modality_mask=harness.ModalityMask(
                    use_video=mask.get("use_video", True),
                    use_audio=mask.get("use_audio", True),
                ),
                params=doc.get("params", {}),
            )
            if profile.base_url:
                backends.append(harness.HttpBackend(profile))
            elif name == "mock":
                backends.append(harness.EchoMockBackend(profile))
            else:
                raise VidqgError(f"backend {name!r} has no base_url")
        elif name == "mock":
            backends.append(harness.EchoMockBackend())
        else:
            env_url = _env_backend_url(name)
            if not env_url:
                raise VidqgError(
                    f"unknown backend {name!r}: not in config and no "
                    f"VIDQG_BACKEND_..._URL set"
                )
            backends.append(
                harness.HttpBackend(harness.BackendProfile(name=name, base_url=env_url))
            )
    return backends


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    print(path)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    corpus = load_corpus(args.corpus)
    total = sum(len(v.questions) for v in corpus.videos)
    print(f"ok: {len(corpus.videos)} videos, {total} questions")
    return 0


def cmd_stats(args) -> int:
    corpus = load_corpus(args.corpus)
    if args.filtered:
        corpus = filter_questions(corpus, FilterPolicy())
    stats = corpus_stats(corpus)

    def row(label, s):
        return {
            "dataset": label,
            "videos": s.videos,
            "questions": s.questions,
            "avg_questions": round(s.avg_questions, 2),
            "min_duration": format_duration(s.min_duration),
            "avg_duration": format_duration(s.avg_duration),
            "max_duration": format_duration(s.max_duration),
        }

    rows = [row(src, s) for src, s in sorted(stats.by_source.items())]
    rows.append(row("total", stats.total))
    doc: dict = {"corpus": rows}
    if args.split:
        assignment = SplitAssignment.from_json(
            Path(args.split).read_text(encoding="utf-8")
        )
        by_id = {v.id: v for v in corpus.videos}
        doc["split"] = {
            name: {
                "videos": len(ids),
                "questions": sum(len(by_id[i].questions) for i in ids),
            }
            for name, ids in (
                ("train", assignment.train),
                ("val", assignment.val),
                ("test", assignment.test),
            )
        }
    print(json.dumps(doc, indent=2))
    return 0


def cmd_split(args) -> int:
    corpus = load_corpus(args.corpus)
    assignment = split_corpus(corpus, args.ratios, args.seed)
    out = Path(args.out) if args.out else Path("split.json")
    _write(out, assignment.to_json())
    return 0


def _select_ids(args, corpus) -> list[str]:
    if args.split and args.subset:
        assignment = SplitAssignment.from_json(
            Path(args.split).read_text(encoding="utf-8")
        )
        return list(getattr(assignment, args.subset))
    return corpus.video_ids()


def cmd_generate(args) -> int:
    config = _load_config(args.config)
    corpus = load_corpus(args.corpus)
    backends = _make_backends(args.backends.split(","), config)
    modes = args.modes
    exp = harness.ExperimentConfig(
        out_dir=Path(args.out),
        seed=args.seed,
        parallelism=args.parallelism,
        backoff=args.backoff,
    )
    artifact = harness.run_experiment(
        _select_ids(args, corpus), corpus, backends, modes, exp
    )
    print(
        f"{artifact.manifest['new_records']} new records, "
        f"{artifact.manifest['total_records']} total -> {artifact.records_path}"
    )
    if artifact.manifest["errors"]:
        print(f"backend errors: {artifact.manifest['errors']}", file=sys.stderr)
        return 1
    return 0


def cmd_score(args) -> int:
    config = _load_config(args.config)
    corpus = load_corpus(args.corpus)
    artifact = harness.RunArtifact.load(args.run_dir)
    provider = _make_provider(args.provider)
    domains = config.get("icd_domains", list(metrics.DEFAULT_ICD_DOMAINS))
    pools = metrics.build_domain_pools(
        corpus, domains, provider, cap=args.pool_cap, seed=args.seed
    )
    rows = metrics.score_records(artifact.records, corpus, provider, pools)
    out = Path(args.run_dir) / "scores.jsonl"
    out.write_text(
        "".join(json.dumps(r.to_dict()) + "\n" for r in rows), encoding="utf-8"
    )
    print(f"{len(rows)} score rows -> {out}")
    return 0


def cmd_report(args) -> int:
    artifact = harness.RunArtifact.load(args.run_dir)
    scores_path = Path(args.run_dir) / "scores.jsonl"
    scores = []
    if scores_path.exists():
        with open(scores_path, "r", encoding="utf-8") as fh:
            scores = [
                metrics.ScoreRow.from_dict(json.loads(line))
                for line in fh
                if line.strip()
            ]
    run_dir = Path(args.run_dir)
    fmt = args.format
    _write(
        run_dir / f"report.summary.{fmt}",
        report.render(report.summarize_run(artifact.records, scores), fmt, report.SummaryRow),
    )
    _write(
        run_dir / f"report.qwords.{fmt}",
        report.render(report.question_word_table(artifact.records), fmt, report.QuestionWordRow),
    )
    _write(
        run_dir / f"report.length.{fmt}",
        report.render(report.length_flesch_table(artifact.records), fmt, report.LengthFleschRow),
    )
    qual_rows = []
    if args.annotations and args.batch:
        annotations = agreement_mod.annotations_from_csv(
            Path(args.annotations).read_text(encoding="utf-8")
        )
        batch = agreement_mod.EvaluationBatch.load(args.batch)
        qual_rows = agreement_mod.aggregate_annotations(
            annotations, batch, resolution=args.resolution
        )
    _write(
        run_dir / f"report.qual.{fmt}",
        report.render(qual_rows, fmt, agreement_mod.QualRow),
    )
    return 0


def cmd_sample(args) -> int:
    corpus = load_corpus(args.corpus)
    artifact = harness.RunArtifact.load(args.run_dir)
    spec = agreement_mod.SampleSpec(
        videos_per_source=args.per_source,
        response_iteration=args.iteration,
    )
    batch = agreement_mod.sample_batch(artifact.records, corpus, spec, args.seed)
    out = Path(args.out) if args.out else Path(args.run_dir) / "batch.json"
    _write(out, batch.to_json())
    print(f"{len(batch.items)} items")
    return 0


def cmd_serve(args) -> int:
    annosvc.serve(
        args.batch,
        args.store,
        bind=args.bind,
        cors_origins=tuple(args.cors_origin),
    )
    return 0


def cmd_agreement(args) -> int:
    annotations = agreement_mod.annotations_from_csv(
        Path(args.annotations_csv).read_text(encoding="utf-8")
    )
    print(json.dumps(annosvc.compute_agreement(annotations), indent=2))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vidqg",
        description="Evaluation harness for question generation from educational videos",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load a corpus file and check invariants")
    p.add_argument("corpus")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="corpus statistics per source (and per split)")
    p.add_argument("corpus")
    p.add_argument("--split", help="split file for per-split counts")
    p.add_argument("--filtered", action="store_true", help="apply the default filter policy first")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="deterministic train/val/test split")
    p.add_argument("corpus")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--ratios", type=_parse_ratios, default=DEFAULT_RATIOS)
    p.add_argument("--out", help="output path (default split.json)")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("generate", help="run generation backends over a corpus")
    p.add_argument("corpus")
    p.add_argument("--config", help="JSON config with backend profiles")
    p.add_argument("--backends", required=True, help="NAME[,NAME...]")
    p.add_argument("--modes", type=_parse_modes, default=_parse_modes("1,2,3"))
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--split", help="restrict to a split file subset")
    p.add_argument("--subset", choices=("train", "val", "test"))
    p.add_argument("--parallelism", type=int, default=4)
    p.add_argument("--backoff", type=float, default=1.0)
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", help="score a run artifact")
    p.add_argument("corpus")
    p.add_argument("run_dir")
    p.add_argument("--config", help="JSON config (icd_domains)")
    p.add_argument("--provider", default="local", help="embedding provider URL or 'local'")
    p.add_argument("--pool-cap", type=int, default=None)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="write report tables for a run")
    p.add_argument("run_dir")
    p.add_argument("--format", choices=report.FORMATS, default="csv")
    p.add_argument("--annotations", help="annotation CSV for the qual table")
    p.add_argument("--batch", help="evaluation batch JSON for the qual table")
    p.add_argument(
        "--resolution",
        choices=("pre_discussion", "post_discussion"),
        default="post_discussion",
    )
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sample", help="sample an evaluation batch for rating")
    p.add_argument("corpus")
    p.add_argument("run_dir")
    p.add_argument("--per-source", type=int, default=3)
    p.add_argument("--iteration", type=int, default=1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("batch")
    p.add_argument("--store", required=True, help="annotation CSV store path")
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument(
        "--cors-origin",
        action="append",
        default=["*"],
        help="allowed UI origin (repeatable)",
    )
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("agreement", help="inter-rater agreement over an annotation CSV")
    p.add_argument("annotations_csv")
    p.set_defaults(func=cmd_agreement)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except VidqgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
