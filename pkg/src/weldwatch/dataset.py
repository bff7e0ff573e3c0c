"""Dataset manifest schema and validation.

A manifest is a JSONL file, one sample per line, carrying the closed
weld-category vocabulary plus weld type and material tags. Samples are
good exactly when their category is "Good"; everything else is a defect.
"""

import json
import os
from dataclasses import dataclass

from .errors import DataError

GOOD_CATEGORY = "Good"

CATEGORIES = (
    "Good",
    "Excessive Convexity",
    "Undercut",
    "Crater Cracks",
    "Overlap",
    "Excessive Penetration",
    "Porosity w/Excessive Penetration",
    "Spatter",
    "Lack Of Fusion",
    "Warping",
    "Porosity",
    "Burnthrough",
)

DEFECT_CATEGORIES = CATEGORIES[1:]

# Reference corpus composition; synthetic corpora may use any counts.
REFERENCE_CATEGORY_COUNTS = {
    "Good": 819,
    "Excessive Convexity": 160,
    "Undercut": 160,
    "Crater Cracks": 161,
    "Overlap": 160,
    "Excessive Penetration": 480,
    "Porosity w/Excessive Penetration": 480,
    "Spatter": 320,
    "Lack Of Fusion": 320,
    "Warping": 320,
    "Porosity": 340,
    "Burnthrough": 320,
}

WELD_TYPES = ("fillet", "non-fillet")

MATERIALS = ("7mm-FE410", "3mm-FE410", "7mm-BSK46", "3mm-BSK46")

_REQUIRED_FIELDS = (
    "id",
    "category",
    "weld_type",
    "material",
    "audio",
    "embedding",
    "duration_s",
)


@dataclass(frozen=True)
class Sample:
    """One corpus entry; paths are relative to the manifest directory."""

    sample_id: str
    category: str
    weld_type: str
    material: str
    audio_path: str
    embedding_path: str
    duration_s: float

    @property
    def is_defect(self):
        return self.category != GOOD_CATEGORY

    @property
    def label(self):
        return "defect" if self.is_defect else "good"

    def to_row(self):
        return {
            "id": self.sample_id,
            "category": self.category,
            "weld_type": self.weld_type,
            "material": self.material,
            "audio": self.audio_path,
            "embedding": self.embedding_path,
            "duration_s": self.duration_s,
        }


def _check_sample_fields(row, where):
    for field in _REQUIRED_FIELDS:
        if field not in row:
            raise DataError(f"{where}: missing field {field!r}")
    if row["category"] not in CATEGORIES:
        raise DataError(
            f"{where}: unknown category {row['category']!r} "
            f"(vocabulary: {', '.join(CATEGORIES)})"
        )
    if row["weld_type"] not in WELD_TYPES:
        raise DataError(f"{where}: unknown weld_type {row['weld_type']!r}")
    if row["material"] not in MATERIALS:
        raise DataError(f"{where}: unknown material {row['material']!r}")
    if not isinstance(row["duration_s"], (int, float)) or row["duration_s"] <= 0:
        raise DataError(f"{where}: duration_s must be a positive number")


def _sample_from_row(row, where):
    _check_sample_fields(row, where)
    return Sample(
        sample_id=str(row["id"]),
        category=row["category"],
        weld_type=row["weld_type"],
        material=row["material"],
        audio_path=str(row["audio"]),
        embedding_path=str(row["embedding"]),
        duration_s=float(row["duration_s"]),
    )


class DatasetManifest:
    """Ordered collection of samples with unique ids."""

    def __init__(self, samples):
        self.samples = list(samples)
        seen = set()
        for s in self.samples:
            if s.sample_id in seen:
                raise DataError(f"duplicate sample id {s.sample_id!r}")
            seen.add(s.sample_id)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def by_id(self, sample_id):
        for s in self.samples:
            if s.sample_id == sample_id:
                return s
        raise DataError(f"sample id {sample_id!r} not in manifest")

    def category_counts(self):
        counts = {}
        for s in self.samples:
            counts[s.category] = counts.get(s.category, 0) + 1
        return counts


def save_manifest(path, manifest):
    with open(path, "w", encoding="utf-8") as fh:
        for s in manifest:
            fh.write(json.dumps(s.to_row(), sort_keys=True))
            fh.write("\n")


def load_manifest(path):
    """Parse a JSONL manifest; schema violations name the line and field."""
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{where}: invalid JSON: {exc}") from exc
            if not isinstance(row, dict):
                raise DataError(f"{where}: entry must be a JSON object")
            samples.append(_sample_from_row(row, where))
    return DatasetManifest(samples)


@dataclass
class ValidationReport:
    issues: list

    @property
    def ok(self):
        return not self.issues


def validate_manifest(path, base_dir=None):
    """Scan a manifest file and report every problem found.

    Unlike load_manifest, which raises on the first schema violation,
    this collects issues: parse errors, unknown vocabulary, duplicate
    ids, and referenced files that do not exist (relative to base_dir,
    default the manifest's directory).
    """
    base = os.path.dirname(os.fspath(path)) if base_dir is None else base_dir
    issues = []
    seen_ids = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"line {lineno}"
            try:
                row = json.loads(line)
                if not isinstance(row, dict):
                    raise DataError(f"{where}: entry must be a JSON object")
                _check_sample_fields(row, where)
            except (json.JSONDecodeError, DataError) as exc:
                issues.append(str(exc))
                continue
            sid = str(row["id"])
            if sid in seen_ids:
                issues.append(f"{where}: duplicate sample id {sid!r}")
            seen_ids.add(sid)
            for key in ("audio", "embedding"):
                rel = str(row[key])
                if not os.path.exists(os.path.join(base, rel)):
                    issues.append(f"{where}: {key} file not found: {rel}")
    return ValidationReport(issues)
