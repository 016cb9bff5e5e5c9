"""Command-line pipeline: synthesize, fit, build timelines, evaluate, inspect.

Every artifact embeds the config and seed that produced it, and every
subcommand is deterministic at a fixed seed.  Exit codes: 0 success,
1 usage, 2 bad data or paths, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

from .baselines import (LdaConfig, fit_multilevel_lda, fit_person_dp,
                        fit_public_dp, timeline_view)
from .corpus import (Corpus, IngestConfig, corpus_from_records, fingerprint,
                     read_records, restrict_to_user, to_records, write_records)
from .dpm import (Hyperparams, PosteriorSummary, Schedule, load_summary,
                  run_chain, save_summary, type_proportions)
from .errors import DataError, NumericalError
from .evaluate import evaluate_run, read_gold_timeline, render_report, write_report
from .synth import gold_lines, generate, separable_preset, write_ground_truth
from .timeline import SMOOTH, build_timeline, write_timeline


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the interface contract says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_schedule_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--thin", type=int, default=1)


def _add_ingest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epoch-days", type=int, default=7)
    p.add_argument("--min-count", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pietimeline",
                     description="personal-important-event timelines from "
                                 "timestamped document streams")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    p.add_argument("--preset", choices=["separable"], default="separable")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--users", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--docs-per-cell", type=int)
    p.add_argument("--vocab", type=int)
    p.add_argument("--truncation", type=int)
    p.add_argument("--doc-len", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit a model and write its posterior summary")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", choices=["dpm", "mlda", "person-dp", "public-dp"],
                   default="dpm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="summary file")
    p.add_argument("--user", help="restrict to one user (person-dp)")
    p.add_argument("--eta-x", type=float, default=20.0)
    p.add_argument("--eta-y", type=float, default=20.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    _add_schedule_flags(p)
    _add_ingest_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("timeline", help="chronological event timeline for one user")
    p.add_argument("--summary", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--mode", choices=["ordinary", "celebrity"], default="ordinary")
    p.add_argument("--names-file", help="jsonl lines with user_id and names")
    p.add_argument("--lambda", dest="lam", type=float, default=SMOOTH)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--format", choices=["text", "jsonl"], default="text")
    p.add_argument("--out", required=True)
    _add_ingest_flags(p)
    p.set_defaults(func=cmd_timeline)

    p = sub.add_parser("eval", help="score predicted event documents against gold")
    p.add_argument("--summary", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--mode", choices=["ordinary", "celebrity"], default="ordinary")
    p.add_argument("--names-file")
    p.add_argument("--lambda", dest="lam", type=float, default=SMOOTH)
    p.add_argument("--out", required=True, help="report path prefix")
    _add_ingest_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="topic top-words and type proportions")
    p.add_argument("--summary", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--out", help="write to a file instead of stdout")
    _add_ingest_flags(p)
    p.set_defaults(func=cmd_inspect)
    return parser


def _gen_config(args):
    overrides = {}
    for flag, field_name in (("users", "I"), ("epochs", "T"),
                             ("docs_per_cell", "docs_per_cell"),
                             ("vocab", "V"), ("truncation", "truncation"),
                             ("doc_len", "doc_len")):
        value = getattr(args, flag)
        if value is not None:
            overrides[field_name] = value
    return separable_preset(**overrides)


def cmd_synth(args) -> int:
    cfg = _gen_config(args)
    corpus, truth = generate(cfg, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    header = (f"generator config: {json.dumps(truth.config, sort_keys=True)}\n"
              f"seed: {args.seed}")
    write_records(to_records(corpus), os.path.join(args.out, "corpus.jsonl"),
                  header=header)
    write_ground_truth(truth, os.path.join(args.out, "truth.json"))
    with open(os.path.join(args.out, "gold.tsv"), "w", encoding="utf-8") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        for row in gold_lines(truth):
            fh.write(row + "\n")
    print(f"synth: {corpus.D} documents, {corpus.I} users, {corpus.T} epochs"
          f" -> {args.out}")
    return 0


def _ingest_config(args) -> IngestConfig:
    return IngestConfig(min_count=args.min_count,
                        epoch_length=args.epoch_days * 86400)


def _load_corpus(args) -> Corpus:
    return corpus_from_records(read_records(args.corpus), _ingest_config(args))


def cmd_fit(args) -> int:
    corpus = _load_corpus(args)
    schedule = Schedule(burn_in=args.burn_in, samples=args.samples, thin=args.thin)
    if args.user is not None:
        corpus = restrict_to_user(corpus, args.user)
    if args.model == "mlda":
        config = LdaConfig(lam=args.lam, eta_x=args.eta_x, eta_y=args.eta_y,
                           schedule=schedule)
        summary = fit_multilevel_lda(corpus, config, seed=args.seed)
    else:
        hyper = Hyperparams(eta_x=args.eta_x, eta_y=args.eta_y, lam=args.lam)
        if args.model == "person-dp":
            summary = fit_person_dp(corpus, hyper, schedule, seed=args.seed)
        elif args.model == "public-dp":
            summary = fit_public_dp(corpus, hyper, schedule, seed=args.seed)
        else:
            summary = run_chain(corpus, hyper, schedule, seed=args.seed)
    summary.config = {**summary.config, "ingest": asdict(_ingest_config(args)),
                      "corpus_sha": fingerprint(corpus)}
    save_summary(summary, args.out)
    print(f"fit: model={summary.model} seed={summary.seed}"
          f" topics={len(summary.topic_ids)} -> {args.out}")
    return 0


def _aligned(args) -> tuple[Corpus, PosteriorSummary]:
    corpus = _load_corpus(args)
    summary = load_summary(args.summary)
    fitted = summary.config.get("ingest")
    if fitted is not None and fitted != asdict(_ingest_config(args)):
        raise DataError("summary was fitted under different ingest settings;"
                        " pass the same --epoch-days/--min-count")
    if summary.users != corpus.users:
        if len(summary.users) == 1 and summary.users[0] in corpus.user_index:
            corpus = restrict_to_user(corpus, summary.users[0])
        else:
            raise DataError("summary does not match this corpus")
    sha = summary.config.get("corpus_sha")
    if (summary.V != corpus.V
            or summary.doc_ids != [d.doc_id for d in corpus.documents]
            or (sha is not None and sha != fingerprint(corpus))):
        raise DataError("summary does not match this corpus")
    return corpus, summary


def _read_names(path: str | None) -> dict[str, list[str]]:
    if path is None:
        return {}
    names: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise DataError(f"names line {n}: not valid JSON") from None
            if "user_id" not in obj or "names" not in obj:
                raise DataError(f"names line {n}: expected user_id and names")
            names[obj["user_id"]] = [str(x) for x in obj["names"]]
    return names


def cmd_timeline(args) -> int:
    corpus, summary = _aligned(args)
    summary = timeline_view(summary)
    names = _read_names(args.names_file)
    timeline = build_timeline(args.user, args.mode, summary, corpus,
                              names=names.get(args.user, []), lam=args.lam,
                              top_n=args.top_n)
    header = (f"user={args.user} mode={args.mode}"
              f" model={summary.model} seed={summary.seed}\n"
              f"config={json.dumps(summary.config, sort_keys=True)}")
    write_timeline(timeline, args.out, fmt=args.format, header=header)
    print(f"timeline: {len(timeline.entries)} entries for {args.user}"
          f" -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    corpus, summary = _aligned(args)
    summary = timeline_view(summary)
    gold = read_gold_timeline(args.gold)
    metrics = evaluate_run(summary, corpus, gold, mode=args.mode,
                           names_by_user=_read_names(args.names_file),
                           lam=args.lam)
    write_report(metrics, args.out + ".txt", args.out + ".json")
    sys.stdout.write(render_report(metrics))
    return 0


def cmd_inspect(args) -> int:
    corpus, summary = _aligned(args)
    lines = [f"model={summary.model} seed={summary.seed}"
             f" samples={summary.n_samples} topics={len(summary.topic_ids)}",
             f"config={json.dumps(summary.config, sort_keys=True)}"]
    if summary.y_labeled:
        props = type_proportions(summary)
        lines.append("type proportions: " + " ".join(
            f"{k}={v:.4f}" for k, v in props.items()))
    else:
        person = float((summary.modal_x == 1).mean())
        lines.append(f"type proportions: public={1 - person:.4f}"
                     f" person={person:.4f} (y unlabeled)")
    lines.append("topics:")
    for tid in summary.topic_ids:
        row = summary.topic_row(tid)
        order = row.argsort()[::-1][:args.top_n]
        words = " ".join(corpus.vocab.id2word[int(w)] for w in order)
        ndocs = int((summary.modal_z == tid).sum())
        lines.append(f"  id={tid} docs={ndocs} top: {words}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, FileNotFoundError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
