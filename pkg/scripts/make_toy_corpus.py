"""Regenerate the bundled toy corpus (manifest + alignment JSON files).

    python3 scripts/make_toy_corpus.py [--out DIR] [--seed 7]

Without --out the package's own data/toy_corpus directory is rewritten.
"""

import argparse
from pathlib import Path

from dysarthria_tts.corpus import parse_manifest, pause_statistics
from dysarthria_tts.toy_corpus import bundled_manifest, write_toy_corpus


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=bundled_manifest().parent)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    manifest = write_toy_corpus(args.out, seed=args.seed)
    stats = pause_statistics(parse_manifest(manifest))
    print(f"wrote {manifest}")
    for group, g in stats.items():
        print(f"  {group.value:9s} sentences {g.sentence_count}  mean pauses {g.mean_pauses:.2f}  "
              f"mean slots {g.mean_slots:.2f}")


if __name__ == "__main__":
    main()
