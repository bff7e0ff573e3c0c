"""Manifest schema, vocabulary, and validation reporting."""

import json

import pytest

from weldwatch.dataset import (
    CATEGORIES,
    REFERENCE_CATEGORY_COUNTS,
    DatasetManifest,
    Sample,
    load_manifest,
    save_manifest,
    validate_manifest,
)
from weldwatch.errors import DataError


def make_sample(i, category="Good"):
    return Sample(
        sample_id=f"sample-{i:04d}",
        category=category,
        weld_type="fillet",
        material="7mm-FE410",
        audio_path=f"audio/sample-{i:04d}.wav",
        embedding_path=f"video/sample-{i:04d}.wwemb",
        duration_s=2.0,
    )


class TestVocabulary:
    def test_twelve_categories(self):
        assert len(CATEGORIES) == 12
        assert CATEGORIES[0] == "Good"

    def test_reference_counts_sum_to_corpus_size(self):
        assert sum(REFERENCE_CATEGORY_COUNTS.values()) == 4040
        assert set(REFERENCE_CATEGORY_COUNTS) == set(CATEGORIES)


class TestManifestRoundTrip:
    def test_save_load_identity(self, tmp_path):
        manifest = DatasetManifest(
            [make_sample(i, c) for i, c in enumerate(["Good", "Spatter",
                                                      "Porosity"])]
        )
        path = tmp_path / "manifest.jsonl"
        save_manifest(path, manifest)
        loaded = load_manifest(path)
        assert loaded.samples == manifest.samples

    def test_empty_manifest_is_valid(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert len(load_manifest(path)) == 0

    def test_good_iff_category_good(self):
        assert not make_sample(0, "Good").is_defect
        assert make_sample(1, "Warping").is_defect
        assert make_sample(1, "Warping").label == "defect"


class TestSchemaErrors:
    def test_duplicate_id_rejected_naming_it(self, tmp_path):
        manifest_path = tmp_path / "dup.jsonl"
        row = make_sample(1).to_row()
        manifest_path.write_text(
            json.dumps(row) + "\n" + json.dumps(row) + "\n"
        )
        with pytest.raises(DataError, match="sample-0001"):
            load_manifest(manifest_path)

    def test_unknown_category_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        row = make_sample(1).to_row()
        row["category"] = "Dents"
        path.write_text(json.dumps(row) + "\n")
        with pytest.raises(DataError, match=":1"):
            load_manifest(path)

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "short.jsonl"
        row = make_sample(1).to_row()
        del row["audio"]
        path.write_text(json.dumps(row) + "\n")
        with pytest.raises(DataError, match="audio"):
            load_manifest(path)

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text('{"id": "x"\n')
        with pytest.raises(DataError, match=":1"):
            load_manifest(path)

    def test_by_id_lookup(self):
        manifest = DatasetManifest([make_sample(3)])
        assert manifest.by_id("sample-0003").sample_id == "sample-0003"
        with pytest.raises(DataError):
            manifest.by_id("missing")


class TestValidateManifest:
    def test_complete_corpus_validates_clean(self, tmp_path):
        samples = [make_sample(i) for i in range(3)]
        (tmp_path / "audio").mkdir()
        (tmp_path / "video").mkdir()
        for s in samples:
            (tmp_path / s.audio_path).write_bytes(b"")
            (tmp_path / s.embedding_path).write_bytes(b"")
        path = tmp_path / "manifest.jsonl"
        save_manifest(path, DatasetManifest(samples))
        report = validate_manifest(path)
        assert report.ok

    def test_missing_files_reported_not_raised(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        save_manifest(path, DatasetManifest([make_sample(5)]))
        report = validate_manifest(path)
        assert not report.ok
        assert any("audio" in issue for issue in report.issues)
        assert any("embedding" in issue for issue in report.issues)

    def test_duplicates_and_typos_collected(self, tmp_path):
        good = make_sample(1).to_row()
        typo = make_sample(2).to_row()
        typo["category"] = "Dents"
        path = tmp_path / "manifest.jsonl"
        path.write_text(
            "\n".join([json.dumps(good), json.dumps(good), json.dumps(typo)])
            + "\n"
        )
        report = validate_manifest(path)
        assert any("duplicate" in issue for issue in report.issues)
        assert any("Dents" in issue for issue in report.issues)
