"""Train the toy model and measure synthesized length against severity.

For each held-out prompt and speaker, synthesizes at severity 0, 1 and 2
(other coefficients 1.0, no pause insertion) and reports total frames.
Writes a CSV and prints per-severity means.

    python3 scripts/severity_durations.py [--steps 1500] [--out severity_frames.csv]
"""

import argparse
import csv
import time

import numpy as np

from dysarthria_tts.acoustic_model import ModelConfig, TrainConfig, build_model, synthesize, train
from dysarthria_tts.text_frontend import load_lexicon, phonemize
from dysarthria_tts.toy_corpus import HELD_OUT_PROMPTS, load_toy_corpus, speaker_index, training_example
from dysarthria_tts.variance_adaptor import ProsodyControls

SEVERITIES = (0.0, 0.5, 1.0, 1.5, 2.0)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=1500)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="severity_frames.csv")
    args = parser.parse_args()

    lexicon = load_lexicon()
    records = load_toy_corpus()
    speakers = speaker_index(records)
    examples = [training_example(r, lexicon, speakers) for r in records]
    model = build_model(ModelConfig(len(lexicon.phone_inventory), len(speakers)), seed=args.seed)
    start = time.perf_counter()
    curve = train(model, examples, TrainConfig(steps=args.steps, seed=args.seed),
                  log=lambda step, loss, parts: print(f"step {step:5d}  loss {loss:.4f}"))
    print(f"trained {args.steps} steps in {time.perf_counter() - start:.0f}s, "
          f"loss {curve[0]:.3f} -> {curve[-1]:.3f}")

    rows = []
    for text in HELD_OUT_PROMPTS:
        spec = phonemize(text, lexicon)
        for name, idx in sorted(speakers.items()):
            frames = [synthesize(model, spec, idx, ProsodyControls(severity_coef=s)).mel.n_frames
                      for s in SEVERITIES]
            rows.append([text, name, *frames])
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prompt", "speaker", *[f"frames_sev{s}" for s in SEVERITIES]])
        writer.writerows(rows)

    means = np.mean([r[2:] for r in rows], axis=0)
    monotone = sum(all(a < b for a, b in zip(r[2:], r[3:])) for r in rows)
    for s, m in zip(SEVERITIES, means):
        print(f"severity {s:.1f}: mean frames {m:.1f}")
    print(f"{monotone}/{len(rows)} prompt/speaker pairs strictly increasing over all severities")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
