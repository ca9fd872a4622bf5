"""End-to-end toy augmentation run through the command-line interface.

calibrate-pauses -> plan -> train -> synth, for exp1 or exp2, on the bundled
toy corpus. Prints per-severity mean frame counts of the synthesized set.

    python3 scripts/run_toy_augmentation.py --work runs/exp1 [--experiment exp1] [--steps 1500]
"""

import argparse
import json
import sys
from collections import defaultdict
from pathlib import Path

from dysarthria_tts.augmentation import read_plan
from dysarthria_tts.cli import main as dystts
from dysarthria_tts.toy_corpus import bundled_manifest


def step(*argv):
    print("dystts", " ".join(argv))
    code = dystts(list(argv))
    if code:
        sys.exit(code)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--work", type=Path, required=True, help="output directory")
    parser.add_argument("--experiment", choices=["exp1", "exp2"], default="exp1")
    parser.add_argument("--steps", type=int, default=1500)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    work = args.work
    work.mkdir(parents=True, exist_ok=True)
    manifest = str(bundled_manifest())
    step("-v", "calibrate-pauses", "--manifest", manifest, "--out", str(work / "pauses.json"))
    step("plan", "--manifest", manifest, "--experiment", args.experiment, "--seed", str(args.seed),
         "--out", str(work / "plan.jsonl"))
    step("-v", "train", "--manifest", manifest, "--out", str(work / "model.ckpt"), "--steps", str(args.steps))
    step("-v", "synth", "--plan", str(work / "plan.jsonl"), "--ckpt", str(work / "model.ckpt"),
         "--pause-model", str(work / "pauses.json"), "--out-dir", str(work / "mels"))

    severity = {(s.utterance_id, s.variant_index): s.controls.severity_coef
                for s in read_plan(work / "plan.jsonl")}
    frames, pauses = defaultdict(list), defaultdict(list)
    for line in (work / "mels" / "diagnostics.jsonl").read_text().splitlines():
        d = json.loads(line)
        key = severity[d["utterance_id"], d["variant_index"]]
        frames[key].append(d["n_frames"])
        pauses[key].append(len(d["inserted_slots"]))
    for s in sorted(frames):
        n = len(frames[s])
        print(f"severity {s:.1f}: {n} utterances, mean frames {sum(frames[s]) / n:.1f}, "
              f"mean inserted pauses {sum(pauses[s]) / n:.2f}")


if __name__ == "__main__":
    main()
