"""Recompute the per-severity WER summary from per-speaker WER columns.

Reads a JSON file shaped like tests/fixtures/torgo_tables.json (a "speakers"
map of group label and one WER per column) and prints the group table with
relative improvements over the first column.

    python3 scripts/group_table.py [tests/fixtures/torgo_tables.json]
"""

import json
import sys
from pathlib import Path

from dysarthria_tts.evaluation import format_group_table, group_average

DEFAULT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "torgo_tables.json"


def main():
    path = Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT
    speakers = json.loads(path.read_text())["speakers"]
    groups = {spk: row["group"] for spk, row in speakers.items()}
    columns = [k for k in next(iter(speakers.values())) if k != "group"]
    reports = {c: group_average({spk: row[c] for spk, row in speakers.items()}, groups) for c in columns}
    order = list(dict.fromkeys(groups.values()))
    sys.stdout.write(format_group_table(reports, columns[0], order))


if __name__ == "__main__":
    main()
