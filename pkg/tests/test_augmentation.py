import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from dysarthria_tts.augmentation import (
    BUILTIN_GRIDS,
    PLAN_KEYS,
    ExperimentGrid,
    builtin_grid,
    plan,
    plan_to_text,
    read_plan,
    write_plan,
)
from dysarthria_tts.corpus import RawSeverity, UtteranceRecord
from dysarthria_tts.errors import DataError


def records(n, speakers=("F01", "M01", "FC01")):
    return [UtteranceRecord(f"u{i:05d}", speakers[i % len(speakers)], RawSeverity.LOW, f"word{i} two")
            for i in range(n)]


def test_exp1_grid():
    g = builtin_grid("exp1")
    assert g.severity == (0.0, 1.0, 2.0)
    assert g.pitch == g.energy == g.duration == (1.0,)
    assert g.pause_insertion and g.multiplier == 3


def test_exp2_grid():
    g = builtin_grid("exp2")
    assert g.pitch == (0.1, 0.6, 1.2, 1.75)
    assert g.energy == (0.1, 1.0, 2.0)
    assert g.duration == (1.0, 1.3, 1.6, 1.8)
    assert g.severity == (0.0, 1.0, 2.0)
    assert g.pause_insertion and g.multiplier == 10
    assert len(g.combinations()) == 144


def test_unknown_grid():
    with pytest.raises(DataError):
        builtin_grid("exp3")


@pytest.mark.parametrize("kw", [{"pitch": ()}, {"energy": (0.0,)}, {"severity": (2.5,)},
                                {"multiplier": 0}])
def test_grid_validation(kw):
    base = dict(pitch=(1,), energy=(1,), duration=(1,), severity=(0,), pause_insertion=False,
                multiplier=1)
    base.update(kw)
    with pytest.raises(ValueError):
        ExperimentGrid(**base)


def test_exp1_enumerates_severities():
    specs = plan(records(100), builtin_grid("exp1"), plan_seed=1)
    assert len(specs) == 300
    by_utt = {}
    for s in specs:
        by_utt.setdefault(s.utterance_id, []).append(s.controls.severity_coef)
    assert all(sorted(v) == [0.0, 1.0, 2.0] for v in by_utt.values())
    assert all(s.controls.pause_insertion for s in specs)


def test_exp2_distinct_combinations():
    specs = plan(records(100), builtin_grid("exp2"), plan_seed=1)
    assert len(specs) == 1000
    combos = {}
    for s in specs:
        c = s.controls
        combos.setdefault(s.utterance_id, set()).add(
            (c.pitch_coef, c.energy_coef, c.duration_coef, c.severity_coef))
    assert all(len(v) == 10 for v in combos.values())


def test_singleton_grid():
    g = ExperimentGrid((0.6,), (2.0,), (1.3,), (1.0,), False, 1)
    [spec] = plan(records(1), g, plan_seed=0)
    c = spec.controls
    assert (c.pitch_coef, c.energy_coef, c.duration_coef, c.severity_coef, c.pause_insertion) == \
        (0.6, 2.0, 1.3, 1.0, False)


def test_small_grid_cycles():
    g = ExperimentGrid((1.0,), (1.0,), (1.0,), (0.0, 2.0), True, 5)
    sev = [s.controls.severity_coef for s in plan(records(1), g, 0)]
    assert sev == [0.0, 2.0, 0.0, 2.0, 0.0]


def test_duplicate_ids():
    recs = records(2)
    with pytest.raises(DataError):
        plan(recs + recs[:1], builtin_grid("exp1"), 0)


def test_empty():
    with pytest.raises(DataError):
        plan([], builtin_grid("exp1"), 0)


def test_speaker_filter():
    specs = plan(records(30), builtin_grid("exp1"), 0, speakers=["F01"])
    assert len(specs) == 30
    assert {s.speaker_id for s in specs} == {"F01"}


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.sampled_from(sorted(BUILTIN_GRIDS)), st.integers(0, 2**63 - 1))
def test_cardinality_and_membership(n, name, seed):
    grid = builtin_grid(name)
    specs = plan(records(n), grid, seed)
    assert len(specs) == n * grid.multiplier
    keys = {(s.utterance_id, s.variant_index) for s in specs}
    assert len(keys) == len(specs)
    for s in specs:
        c = s.controls
        assert c.pitch_coef in grid.pitch and c.energy_coef in grid.energy
        assert c.duration_coef in grid.duration and c.severity_coef in grid.severity


def test_reproducible_and_seed_sensitive():
    recs = records(50)
    a = plan_to_text(plan(recs, builtin_grid("exp2"), 5))
    b = plan_to_text(plan(recs, builtin_grid("exp2"), 5))
    c = plan_to_text(plan(recs, builtin_grid("exp2"), 6))
    assert a == b
    assert a != c
    assert len(a.splitlines()) == len(c.splitlines())


def test_order_independent():
    recs = records(40)
    forward = {(s.utterance_id, s.variant_index): s for s in plan(recs, builtin_grid("exp2"), 3)}
    backward = {(s.utterance_id, s.variant_index): s for s in plan(recs[::-1], builtin_grid("exp2"), 3)}
    assert forward == backward


def test_marginals_are_uniform():
    grid = builtin_grid("exp2")
    specs = plan(records(1200), grid, plan_seed=2024)
    for name in ("pitch", "energy", "duration", "severity"):
        values = getattr(grid, name)
        counts = Counter(getattr(s.controls, f"{name}_coef") for s in specs)
        observed = [counts[v] for v in values]
        # each value sits in the same share of the 144 combinations
        expected = [len(specs) / len(values)] * len(values)
        assert chisquare(observed, expected).pvalue > 0.01, name


def test_plan_file_round_trip(tmp_path):
    specs = plan(records(20), builtin_grid("exp2"), 9)
    path = tmp_path / "plan.jsonl"
    write_plan(specs, path)
    assert read_plan(path) == specs
    first = json.loads(path.read_text().splitlines()[0])
    assert list(first) == list(PLAN_KEYS)
    write_plan(read_plan(path), tmp_path / "again.jsonl")
    assert (tmp_path / "again.jsonl").read_bytes() == path.read_bytes()


def test_read_plan_rejects(tmp_path):
    specs = plan(records(1), builtin_grid("exp1"), 0)
    path = tmp_path / "p.jsonl"
    path.write_text(plan_to_text(specs[:1] * 2))
    with pytest.raises(DataError, match=":2:"):
        read_plan(path)
    obj = specs[0].to_json()
    obj["extra"] = 1
    path.write_text(json.dumps(obj) + "\n")
    with pytest.raises(DataError):
        read_plan(path)
