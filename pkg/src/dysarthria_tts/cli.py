"""Command-line entry point: ``dystts <subcommand> ...``.

Exit status: 0 success, 1 usage error, 2 data/validation error, 3 internal
error. Data goes to standard output or ``--out``; diagnostics to standard
error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import RawSeverity, parse_manifest, pause_ratio_vs_normal, pause_statistics, severity_counts
from .errors import DataError

log = logging.getLogger("dystts")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_ingest(args):
    records = parse_manifest(args.manifest, lenient=args.lenient, load_alignments=False)
    summary = {"records": len(records), "speakers": len({r.speaker_id for r in records}),
               "severity_counts": severity_counts(records)}
    _emit(json.dumps(summary) + "\n", None)


def cmd_pause_stats(args):
    stats = pause_statistics(parse_manifest(args.manifest))
    lines = ["group\tsentences\tmean_pauses\tmean_slots\tratio_vs_normal"]
    for group, g in stats.items():
        try:
            ratio = f"{round(pause_ratio_vs_normal(stats, group)):d}%"
        except DataError:
            ratio = "n/a"
        lines.append(f"{group.value}\t{g.sentence_count}\t{g.mean_pauses:.4f}\t{g.mean_slots:.4f}\t{ratio}")
    _emit("\n".join(lines) + "\n", None)


def cmd_calibrate_pauses(args):
    from .pause_model import calibrate

    model = calibrate(pause_statistics(parse_manifest(args.manifest)))
    model.save(args.out)
    log.info("wrote pause model to %s: %s", args.out, model.to_json()["slot_prob"])


def cmd_plan(args):
    from .augmentation import builtin_grid, plan, plan_to_text

    records = parse_manifest(args.manifest, load_alignments=False)
    speakers = args.speakers.split(",") if args.speakers else None
    specs = plan(records, builtin_grid(args.experiment), args.seed, speakers)
    _emit(plan_to_text(specs), args.out)
    log.info("planned %d syntheses from %d records", len(specs), len(records))


def cmd_train(args):
    from .acoustic_model import build_model, train
    from .config import load_config
    from .io_formats import save_checkpoint
    from .text_frontend import load_lexicon
    from .toy_corpus import speaker_index, training_example

    cfg = load_config(args.config)
    if args.steps is not None:
        from dataclasses import replace
        cfg = replace(cfg, steps=args.steps)
    lexicon = load_lexicon(cfg.lexicon or None)
    records = parse_manifest(args.manifest)
    speakers = speaker_index(records)
    examples = [training_example(r, lexicon, speakers, cfg.n_mels) for r in records]
    model = build_model(cfg.model_config(len(lexicon.phone_inventory), len(speakers)), cfg.init_seed)
    curve = train(model, examples, cfg.train_config(),
                  log=lambda step, loss, parts: log.info("step %d loss %.4f", step, loss))
    meta = {"phones": list(lexicon.phone_inventory), "speakers": sorted(speakers),
            "lexicon": cfg.lexicon}
    save_checkpoint(model, args.out, meta)
    loss_path = args.loss_csv or f"{args.out}.loss.csv"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step", "loss"])
    writer.writerows((i, repr(v)) for i, v in enumerate(curve))
    Path(loss_path).write_text(buf.getvalue(), encoding="utf-8")
    log.info("saved checkpoint %s and loss curve %s", args.out, loss_path)


def cmd_synth(args):
    from .acoustic_model import synthesize
    from .augmentation import read_plan
    from .io_formats import load_checkpoint, write_mel
    from .pause_model import PauseModel
    from .text_frontend import load_lexicon, phonemize

    model, meta = load_checkpoint(args.ckpt)
    lexicon = load_lexicon(args.lexicon or meta.get("lexicon") or None)
    if list(lexicon.phone_inventory) != meta.get("phones"):
        raise DataError("lexicon phone inventory differs from the checkpoint's")
    speakers = {s: i for i, s in enumerate(meta.get("speakers", []))}
    pause_model = PauseModel.load(args.pause_model) if args.pause_model else None
    specs = read_plan(args.plan)
    if pause_model is None and any(s.controls.pause_insertion for s in specs):
        raise DataError("plan inserts pauses; pass --pause-model")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    diag_lines = []
    for spec in specs:
        if spec.speaker_id not in speakers:
            raise DataError(f"speaker {spec.speaker_id!r} unknown to the checkpoint")
        phrase = phonemize(spec.transcript, lexicon)
        rng = np.random.default_rng(spec.seed)
        result = synthesize(model, phrase, speakers[spec.speaker_id], spec.controls, pause_model, rng)
        name = f"{spec.utterance_id}.{spec.variant_index}.mel"
        write_mel(result.mel, out_dir / name)
        diag = {"utterance_id": spec.utterance_id, "variant_index": spec.variant_index, "file": name}
        diag.update(result.diagnostics())
        diag_lines.append(json.dumps(diag))
    (out_dir / "diagnostics.jsonl").write_text("".join(l + "\n" for l in diag_lines), encoding="utf-8")
    log.info("synthesized %d utterances into %s", len(specs), out_dir)


def cmd_wer(args):
    from .evaluation import format_group_table, read_transcripts, score_transcripts, speaker_report

    scores = score_transcripts(read_transcripts(args.ref), read_transcripts(args.hyp))
    total = None
    for b in scores.values():
        total = b if total is None else total + b
    result = {"utterances": {uid: b.to_json() for uid, b in scores.items()},
              "overall": total.to_json() if total else None}
    if args.groups:
        report = speaker_report(scores, parse_manifest(args.groups, load_alignments=False))
        result["report"] = report.to_json()
        if args.table:
            order = [s.value for s in RawSeverity if s.value in report.per_group]
            sys.stderr.write(format_group_table({"wer": report}, "wer", order))
    _emit(json.dumps(result, sort_keys=True) + "\n", args.out)


def cmd_splits(args):
    from .evaluation import loso_splits

    splits = loso_splits(parse_manifest(args.manifest, load_alignments=False))
    _emit("".join(json.dumps(s.to_json()) + "\n" for s in splits), None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dystts", description="Dysarthric speech augmentation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate a manifest and count records per severity")
    p.add_argument("--manifest", required=True, help="JSON-lines manifest")
    p.add_argument("--lenient", action="store_true", help="ignore unknown manifest keys")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("pause-stats", help="between-word pause statistics per severity group")
    p.add_argument("--manifest", required=True, help="manifest whose records all have alignments")
    p.set_defaults(func=cmd_pause_stats)

    p = sub.add_parser("calibrate-pauses", help="fit per-class pause slot probabilities")
    p.add_argument("--manifest", required=True, help="manifest whose records all have alignments")
    p.add_argument("--out", required=True, help="pause model JSON to write")
    p.set_defaults(func=cmd_calibrate_pauses)

    p = sub.add_parser("plan", help="expand a manifest into a synthesis plan")
    p.add_argument("--manifest", required=True, help="JSON-lines manifest")
    p.add_argument("--experiment", required=True, choices=["exp1", "exp2"], help="built-in coefficient grid")
    p.add_argument("--seed", required=True, type=int, help="plan seed")
    p.add_argument("--speakers", help="comma-separated speaker ids to keep (default: all)")
    p.add_argument("--out", help="plan file (default: stdout)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("train", help="train the toy acoustic model on an aligned manifest")
    p.add_argument("--manifest", required=True, help="aligned JSON-lines manifest")
    p.add_argument("--config", help="key = value config file (default: built-in toy settings)")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--loss-csv", help="loss curve CSV (default: <out>.loss.csv)")
    p.add_argument("--steps", type=int, help="override the config's step count")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("synth", help="synthesize mel files for every plan line")
    p.add_argument("--plan", required=True, help="plan JSON-lines file")
    p.add_argument("--ckpt", required=True, help="checkpoint from `train`")
    p.add_argument("--pause-model", help="pause model JSON (needed when the plan inserts pauses)")
    p.add_argument("--lexicon", help="lexicon file (default: the one recorded at training)")
    p.add_argument("--out-dir", required=True, help="directory for .mel files and diagnostics.jsonl")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("wer", help="score hypotheses against references")
    p.add_argument("--ref", required=True, help="utterance_id<TAB>text references")
    p.add_argument("--hyp", required=True, help="utterance_id<TAB>text hypotheses")
    p.add_argument("--groups", help="manifest mapping utterances to speakers and severity groups")
    p.add_argument("--table", action="store_true", help="also print a per-group table to stderr")
    p.add_argument("--out", help="JSON report path (default: stdout)")
    p.set_defaults(func=cmd_wer)

    p = sub.add_parser("splits", help="list leave-one-speaker-out splits")
    p.add_argument("--manifest", required=True, help="JSON-lines manifest")
    p.set_defaults(func=cmd_splits)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
    except UsageError as exc:
        sys.stderr.write(f"dystts: error: {exc}\n")
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except DataError as exc:
        sys.stderr.write(f"dystts: {exc}\n")
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        sys.stderr.write(f"dystts: internal error: {exc}\n")
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
