import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dysarthria_tts.corpus import (
    Alignment,
    GroupPauseStats,
    RawSeverity,
    SeverityClass,
    UtteranceRecord,
    parse_manifest,
    pause_ratio_vs_normal,
    pause_statistics,
    severity_class,
    write_manifest,
)
from dysarthria_tts.errors import AlignmentError, DataError, ManifestError


def write_lines(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")
    return path


def rec(uid="u1", severity="medium", **kw):
    obj = {"utterance_id": uid, "speaker_id": "F01", "severity": severity, "transcript": "we play"}
    obj.update(kw)
    return obj


class TestSeverity:
    def test_mapping(self):
        assert severity_class(RawSeverity.NORMAL) == 0
        assert severity_class(RawSeverity.VERY_LOW) == 1
        assert severity_class(RawSeverity.LOW) == 1
        assert severity_class(RawSeverity.MEDIUM) == 2

    def test_surjective_and_pooling(self):
        images = [severity_class(s) for s in RawSeverity]
        assert set(images) == {0, 1, 2}
        assert images.count(SeverityClass.MILD) == 2

    def test_parse_is_case_insensitive(self):
        assert RawSeverity.parse("Very_Low") is RawSeverity.VERY_LOW
        assert RawSeverity.parse("MEDIUM").value == "medium"

    def test_unknown_label(self):
        with pytest.raises(DataError):
            RawSeverity.parse("severe")

    def test_class_values_closed(self):
        with pytest.raises(ValueError):
            SeverityClass(3)


class TestManifest:
    def test_medium_line(self, tmp_path):
        records = parse_manifest(write_lines(tmp_path / "m.jsonl", [rec()]))
        assert records[0].severity is RawSeverity.MEDIUM

    def test_empty_file(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("")
        assert parse_manifest(path) == []

    def test_duplicate_id_named(self, tmp_path):
        path = write_lines(tmp_path / "m.jsonl", [rec("u1"), rec("u1")])
        with pytest.raises(ManifestError, match="u1") as info:
            parse_manifest(path)
        assert info.value.line == 2

    def test_unknown_severity_reports_line(self, tmp_path):
        path = write_lines(tmp_path / "m.jsonl", [rec("u1"), rec("u2", severity="extreme")])
        with pytest.raises(ManifestError) as info:
            parse_manifest(path)
        assert info.value.line == 2

    def test_malformed_json_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(json.dumps(rec()) + "\n{not json\n")
        with pytest.raises(ManifestError) as info:
            parse_manifest(path)
        assert info.value.line == 2

    def test_unknown_keys_strict_and_lenient(self, tmp_path):
        path = write_lines(tmp_path / "m.jsonl", [rec(gender="f")])
        with pytest.raises(ManifestError, match="unknown keys"):
            parse_manifest(path)
        assert len(parse_manifest(path, lenient=True)) == 1

    def test_missing_key(self, tmp_path):
        obj = rec()
        del obj["transcript"]
        with pytest.raises(ManifestError, match="missing"):
            parse_manifest(write_lines(tmp_path / "m.jsonl", [obj]))

    def test_transcript_needs_words(self, tmp_path):
        with pytest.raises(ManifestError):
            parse_manifest(write_lines(tmp_path / "m.jsonl", [rec(transcript=" ... ")]))

    def test_alignment_loaded_relative_to_manifest(self, tmp_path):
        (tmp_path / "ali").mkdir()
        (tmp_path / "ali" / "u1.json").write_text(json.dumps(
            {"frame_seconds": 0.01, "entries": [["W", 3, 0], ["sp", 5, -1], ["P", 2, 1]]}))
        records = parse_manifest(write_lines(tmp_path / "m.jsonl", [rec(alignment_path="ali/u1.json")]))
        assert records[0].alignment.total_frames == 10
        assert records[0].alignment.frame_seconds == 0.01

    def test_bad_alignment_reports_line(self, tmp_path):
        (tmp_path / "a.json").write_text(json.dumps({"frame_seconds": 0.01, "entries": [["W", -3, 0]]}))
        with pytest.raises(ManifestError) as info:
            parse_manifest(write_lines(tmp_path / "m.jsonl", [rec(alignment_path="a.json")]))
        assert info.value.line == 1

    def test_round_trip(self, tmp_path, toy_records):
        subset = toy_records[::37]
        out = tmp_path / "copy" / "manifest.jsonl"
        write_manifest(subset, out)
        assert parse_manifest(out) == subset
        # and the manifest text itself is stable
        first = out.read_bytes()
        write_manifest(parse_manifest(out), out)
        assert out.read_bytes() == first


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(list(RawSeverity)),
                          st.text(alphabet="abc xyz", min_size=1).filter(lambda t: t.strip())),
                min_size=0, max_size=8))
def test_manifest_round_trip_property(tmp_path_factory, items):
    records = [UtteranceRecord(f"u{i}", f"s{i % 3}", sev, text) for i, (sev, text) in enumerate(items)
               if any(c.isalnum() for c in text)]
    path = tmp_path_factory.mktemp("rt") / "m.jsonl"
    write_manifest(records, path)
    assert parse_manifest(path) == records


class TestAlignment:
    def test_defaults(self):
        a = Alignment((("A", 3, 0),))
        assert a.frame_seconds == pytest.approx(256 / 22050)

    def test_word_indices_nondecreasing(self):
        with pytest.raises(AlignmentError):
            Alignment((("A", 3, 1), ("B", 3, 0)))

    def test_zero_total(self):
        with pytest.raises(AlignmentError):
            Alignment((("A", 0, 0),))

    def test_pause_counting(self):
        a = Alignment((("sp", 2, -1), ("A", 3, 0), ("sp", 4, -1), ("B", 2, 1),
                       ("sp", 1, -1), ("sp", 1, -1), ("C", 2, 2), ("sp", 3, -1)))
        assert a.between_word_pauses() == 3  # edges excluded, adjacent entries both counted

    def test_silence_inside_word_is_not_a_pause(self):
        a = Alignment((("W", 3, 0), ("sp", 2, -1), ("W", 3, 0)))
        assert a.between_word_pauses() == 0


def aligned(uid, severity, words, pauses):
    entries = [("sp", 3, -1)]
    for w in range(words):
        entries.append(("A", 3, w))
        if w < pauses:
            entries.append(("sp", 5, -1))
    entries.append(("sp", 3, -1))
    return UtteranceRecord(uid, "s", severity, "x " * words, Alignment(tuple(entries)))


class TestPauseStatistics:
    def test_single_word(self):
        stats = pause_statistics([aligned("u", RawSeverity.NORMAL, 1, 0)])
        g = stats[RawSeverity.NORMAL]
        assert (g.mean_pauses, g.mean_slots, g.sentence_count) == (0, 0, 1)

    def test_intra_word_silence(self):
        r = UtteranceRecord("u", "s", RawSeverity.LOW, "w",
                            Alignment((("W", 3, 0), ("sp", 2, -1), ("W", 3, 0))))
        assert pause_statistics([r])[RawSeverity.LOW].mean_pauses == 0

    def test_missing_alignment(self):
        with pytest.raises(DataError, match="u9"):
            pause_statistics([UtteranceRecord("u9", "s", RawSeverity.LOW, "w")])

    def test_bundled_fixture_means(self, toy_records):
        stats = pause_statistics(toy_records)
        assert stats[RawSeverity.NORMAL].mean_pauses == 0.26
        assert stats[RawSeverity.VERY_LOW].mean_pauses == 0.57
        assert stats[RawSeverity.LOW].mean_pauses == 1.21
        assert stats[RawSeverity.MEDIUM].mean_pauses == 2.51

    def test_permutation_and_duplication_invariant(self, toy_records):
        base = pause_statistics(toy_records)
        shuffled = pause_statistics(list(reversed(toy_records)))
        doubled = pause_statistics(list(toy_records) + list(toy_records))
        for g in base:
            assert shuffled[g] == base[g]
            assert doubled[g].mean_pauses == base[g].mean_pauses
            assert doubled[g].mean_slots == base[g].mean_slots
            assert doubled[g].sentence_count == 2 * base[g].sentence_count


class TestPauseRatio:
    def stats(self, **means):
        return {RawSeverity(k): GroupPauseStats(v, 5.0, 10) for k, v in means.items()}

    def test_very_low(self):
        r = pause_ratio_vs_normal(self.stats(normal=0.26, very_low=0.57), RawSeverity.VERY_LOW)
        assert r == pytest.approx(119.2308, abs=1e-4)
        assert round(r) == 119

    def test_low(self):
        r = pause_ratio_vs_normal(self.stats(normal=0.26, low=1.21), RawSeverity.LOW)
        assert round(r) == 365

    def test_equal_means(self):
        assert pause_ratio_vs_normal(self.stats(normal=0.4, medium=0.4), RawSeverity.MEDIUM) == 0

    def test_normal_vs_itself(self, toy_records):
        assert pause_ratio_vs_normal(pause_statistics(toy_records), RawSeverity.NORMAL) == 0

    def test_zero_normal_mean(self):
        with pytest.raises(DataError):
            pause_ratio_vs_normal(self.stats(normal=0.0, low=1.0), RawSeverity.LOW)
