"""CSV readers/writers for annotations, GCPs, matches, image pairs and biases.

The annotation writer appends atomically (write temp + rename) so an
interrupted annotation session never corrupts the file. One writer per file;
the CLI enforces that contract.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from pathlib import Path

from ..geodesy import GeoPoint

ANNOTATION_HEADER = ["gcp_id", "image_id", "row", "col", "status"]
MATCH_HEADER = ["row_i", "col_i", "row_j", "col_j"]
GCP_HEADER = ["gcp_id", "lat", "lon", "h"]
PAIR_HEADER = ["image_i", "image_j", "alpha_v", "alpha_t", "dt", "split"]
BIAS_HEADER = ["image_id", "db_row", "db_col"]

STATUS_ANNOTATED = "annotated"
STATUS_CANNOT = "cannot_annotate"


class TableFormatError(ValueError):
    """Malformed CSV row or header."""


@dataclass(frozen=True)
class AnnotationRecord:
    gcp_id: str
    image_id: str
    row: float | None
    col: float | None
    status: str

    def __post_init__(self):
        if self.status not in (STATUS_ANNOTATED, STATUS_CANNOT):
            raise TableFormatError(f"unknown status {self.status!r}")
        has_pixel = self.row is not None and self.col is not None
        if self.status == STATUS_ANNOTATED and not has_pixel:
            raise TableFormatError("annotated record requires row and col")
        if self.status == STATUS_CANNOT and (self.row is not None or self.col is not None):
            raise TableFormatError("cannot_annotate record must not carry pixels")


@dataclass(frozen=True)
class GcpRecord:
    gcp_id: str
    position: GeoPoint


@dataclass(frozen=True)
class MatchRecord:
    row_i: float
    col_i: float
    row_j: float
    col_j: float

    def __post_init__(self):
        for v in (self.row_i, self.col_i, self.row_j, self.col_j):
            if not math.isfinite(v) or v < 0:
                raise TableFormatError(f"match coordinates must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class PairRecord:
    image_i: str
    image_j: str
    alpha_v: float
    alpha_t: float
    dt: float
    split: str = ""


def _check_header(row, expected, what):
    if row != expected:
        raise TableFormatError(f"{what} header is {row}, expected {expected}")


def parse_annotations(text: str) -> list[AnnotationRecord]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise TableFormatError("empty annotation file")
    _check_header(rows[0], ANNOTATION_HEADER, "annotation")
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 5:
            raise TableFormatError(f"line {lineno}: expected 5 columns, got {len(row)}")
        gcp_id, image_id, row_s, col_s, status = row
        try:
            r = float(row_s) if row_s != "" else None
            c = float(col_s) if col_s != "" else None
        except ValueError as exc:
            raise TableFormatError(f"line {lineno}: bad pixel value") from exc
        try:
            records.append(AnnotationRecord(gcp_id, image_id, r, c, status))
        except TableFormatError as exc:
            raise TableFormatError(f"line {lineno}: {exc}") from exc
    return records


def serialize_annotations(records) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ANNOTATION_HEADER)
    for rec in records:
        writer.writerow([
            rec.gcp_id,
            rec.image_id,
            "" if rec.row is None else repr(rec.row),
            "" if rec.col is None else repr(rec.col),
            rec.status,
        ])
    return out.getvalue()


def read_annotations(path) -> list[AnnotationRecord]:
    p = Path(path)
    if not p.exists():
        return []
    return parse_annotations(p.read_text(encoding="utf-8"))


def append_annotation(path, record: AnnotationRecord) -> None:
    """Append one record atomically: rewrite to a temp file, then rename."""
    p = Path(path)
    records = read_annotations(p)
    records.append(record)
    tmp = p.with_suffix(p.suffix + ".tmp")
    tmp.write_text(serialize_annotations(records), encoding="utf-8")
    os.replace(tmp, p)


def write_annotations(records, path) -> None:
    p = Path(path)
    tmp = p.with_suffix(p.suffix + ".tmp")
    tmp.write_text(serialize_annotations(records), encoding="utf-8")
    os.replace(tmp, p)


def parse_matches(text: str) -> list[MatchRecord]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise TableFormatError("empty match file")
    _check_header(rows[0], MATCH_HEADER, "match")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise TableFormatError(f"line {lineno}: expected 4 columns")
        try:
            out.append(MatchRecord(*[float(v) for v in row]))
        except ValueError as exc:
            raise TableFormatError(f"line {lineno}: bad value") from exc
    return out


def serialize_matches(records) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MATCH_HEADER)
    for m in records:
        writer.writerow([repr(m.row_i), repr(m.col_i), repr(m.row_j), repr(m.col_j)])
    return out.getvalue()


def read_matches(path) -> list[MatchRecord]:
    return parse_matches(Path(path).read_text(encoding="utf-8"))


def write_matches(records, path) -> None:
    Path(path).write_text(serialize_matches(records), encoding="utf-8")


def parse_gcps(text: str) -> list[GcpRecord]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise TableFormatError("empty GCP file")
    _check_header(rows[0], GCP_HEADER, "GCP")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise TableFormatError(f"line {lineno}: expected 4 columns")
        try:
            out.append(GcpRecord(row[0], GeoPoint(float(row[1]), float(row[2]), float(row[3]))))
        except ValueError as exc:
            raise TableFormatError(f"line {lineno}: bad value") from exc
    return out


def write_gcps(records, path) -> None:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(GCP_HEADER)
    for g in records:
        writer.writerow([g.gcp_id, repr(g.position.lat), repr(g.position.lon), repr(g.position.h)])
    Path(path).write_text(out.getvalue(), encoding="utf-8")


def read_gcps(path) -> list[GcpRecord]:
    return parse_gcps(Path(path).read_text(encoding="utf-8"))


def parse_pairs(text: str) -> list[PairRecord]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise TableFormatError("empty pair file")
    _check_header(rows[0], PAIR_HEADER, "pair")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 6:
            raise TableFormatError(f"line {lineno}: expected 6 columns")
        try:
            out.append(PairRecord(row[0], row[1], float(row[2]), float(row[3]),
                                  float(row[4]), row[5]))
        except ValueError as exc:
            raise TableFormatError(f"line {lineno}: bad value") from exc
    return out


def write_pairs(records, path) -> None:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(PAIR_HEADER)
    for r in records:
        writer.writerow([r.image_i, r.image_j, repr(r.alpha_v), repr(r.alpha_t),
                         repr(r.dt), r.split])
    Path(path).write_text(out.getvalue(), encoding="utf-8")


def read_pairs(path) -> list[PairRecord]:
    return parse_pairs(Path(path).read_text(encoding="utf-8"))


def write_biases(biases: dict[str, tuple[float, float]], path) -> None:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(BIAS_HEADER)
    for image_id, (db_row, db_col) in biases.items():
        writer.writerow([image_id, repr(db_row), repr(db_col)])
    Path(path).write_text(out.getvalue(), encoding="utf-8")


def read_biases(path) -> dict[str, tuple[float, float]]:
    rows = list(csv.reader(io.StringIO(Path(path).read_text(encoding="utf-8"))))
    if not rows:
        raise TableFormatError("empty bias file")
    _check_header(rows[0], BIAS_HEADER, "bias")
    out = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise TableFormatError(f"line {lineno}: expected 3 columns")
        out[row[0]] = (float(row[1]), float(row[2]))
    return out
