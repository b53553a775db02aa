"""Prediction-log parsing and certificate report rendering.

A prediction log is JSON Lines. The first line is a header::

    {"schema_version": 1, "num_classes": 10, "v_samples": 1, "splits": {"U": 1000, "L": 200}}

and every following line is one record::

    {"id": "u0", "split": "U", "y": null, "f": [...C floats], "h": [[...C floats] x V]}

Labels are 0-based class indices.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .certify import CertificateReport
from .errors import DataError, SchemaError
from .losses import PredictionRecord

SCHEMA_VERSION = 1
SPLITS = ("S", "U", "L")
DEFAULT_SEED = 0
SEED_ENV = "RISKCERT_SEED"


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise DataError(f"{SEED_ENV}={raw!r} is not an integer") from None


@dataclass(frozen=True)
class LogHeader:
    num_classes: int
    v_samples: int
    count_per_split: dict
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise SchemaError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.v_samples < 1:
            raise SchemaError(f"v_samples must be >= 1, got {self.v_samples}")
        for split, n in self.count_per_split.items():
            if split not in SPLITS:
                raise SchemaError(f"unknown split {split!r} in header")
            if n <= 0:
                raise SchemaError(f"declared split {split!r} must have a positive count")

    @property
    def splits_present(self) -> frozenset:
        return frozenset(self.count_per_split)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "num_classes": self.num_classes,
            "v_samples": self.v_samples,
            "splits": dict(self.count_per_split),
        }


def _int_field(obj: dict, key: str, where: str) -> int:
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}: field {key!r} must be an integer")
    return v


def _parse_header(obj, lineno: int) -> LogHeader:
    where = f"line {lineno}"
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: header must be an object")
    version = _int_field(obj, "schema_version", where)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{where}: unsupported schema_version {version}")
    splits = obj.get("splits")
    if not isinstance(splits, dict) or not splits:
        raise SchemaError(f"{where}: header needs a nonempty 'splits' map")
    counts = {str(k): _int_field(splits, k, where) for k in splits}
    return LogHeader(_int_field(obj, "num_classes", where), _int_field(obj, "v_samples", where), counts, version)


def _parse_record(obj, header: LogHeader, lineno: int) -> PredictionRecord:
    where = f"line {lineno}"
    if not isinstance(obj, dict):
        raise DataError(f"{where}: record must be an object")
    for key in ("id", "split", "f", "h"):
        if key not in obj:
            raise DataError(f"{where}: missing field {key!r}")
    split = obj["split"]
    if split not in header.count_per_split:
        raise SchemaError(f"{where}: split {split!r} not declared in header")
    f, h, y = obj["f"], obj["h"], obj.get("y")
    C, V = header.num_classes, header.v_samples
    if not isinstance(f, list) or len(f) != C:
        raise SchemaError(f"{where}: 'f' must hold {C} values")
    if not isinstance(h, list) or len(h) != V or any(not isinstance(r, list) or len(r) != C for r in h):
        raise SchemaError(f"{where}: 'h' must be {V} rows of {C} values")
    if y is not None and (isinstance(y, bool) or not isinstance(y, int)):
        raise DataError(f"{where}: label must be an integer or null")
    try:
        return PredictionRecord(str(obj["id"]), split, f, h, y)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{where}: {exc}") from None


def parse_lines(lines: Iterable[str]) -> tuple[LogHeader, list[PredictionRecord]]:
    header = None
    records: list[PredictionRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {lineno}: malformed JSON ({exc.msg})") from None
        if header is None:
            header = _parse_header(obj, lineno)
            continue
        rec = _parse_record(obj, header, lineno)
        if rec.id in seen:
            raise SchemaError(f"line {lineno}: duplicate id {rec.id!r}")
        seen.add(rec.id)
        records.append(rec)
    if header is None:
        raise DataError("empty log: no header line")
    actual: dict[str, int] = {}
    for r in records:
        actual[r.split] = actual.get(r.split, 0) + 1
    for split, n in header.count_per_split.items():
        if actual.get(split, 0) != n:
            raise SchemaError(f"header declares {n} {split!r} records, found {actual.get(split, 0)}")
    return header, records


def parse_log(path) -> tuple[LogHeader, list[PredictionRecord]]:
    """Read and validate a prediction log, preserving record order."""
    p = Path(path)
    try:
        with p.open("r", encoding="utf-8") as fh:
            return parse_lines(fh)
    except OSError as exc:
        raise DataError(f"cannot read {p}: {exc.strerror}") from None


def file_digest(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def select_split(records: Sequence[PredictionRecord], split: str) -> list[PredictionRecord]:
    out = [r for r in records if r.split == split]
    if not out:
        raise DataError(f"split missing: no {split!r} records in the log")
    return out


def write_log(path, header: LogHeader, records: Sequence[PredictionRecord]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header.to_dict()) + "\n")
        for r in records:
            obj = {
                "id": r.id,
                "split": r.split,
                "y": r.label,
                "f": r.f_logits.tolist(),
                "h": r.h_logits.tolist(),
            }
            fh.write(json.dumps(obj) + "\n")


# --- reports -----------------------------------------------------------------


@dataclass(frozen=True)
class TermRow:
    term: str
    value: float
    delta_share: float | None = None


@dataclass
class ReportDocument:
    certificate: CertificateReport
    term_table: list
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "certificate": self.certificate.to_dict(),
            "term_table": [{"term": r.term, "value": r.value, "delta_share": r.delta_share} for r in self.term_table],
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReportDocument":
        try:
            rows = [TermRow(str(r["term"]), float(r["value"]), r["delta_share"]) for r in d["term_table"]]
            return cls(CertificateReport.from_dict(d["certificate"]), rows, dict(d.get("metadata", {})))
        except (KeyError, TypeError) as exc:
            raise DataError(f"not a report document: {exc}") from None


def term_table(cert: CertificateReport) -> list[TermRow]:
    """Additive decomposition of the target bound."""
    rows = []
    sb = cert.surrogate_bound
    budget = cert.budget
    if sb is not None:
        emp = float(sb.terms.get("empirical", 0.0))
        rows.append(TermRow("surrogate_empirical", emp, None))
        rows.append(TermRow("surrogate_complexity", sb.risk_bound - emp, budget.surrogate_delta))
    rows.append(TermRow("disagreement", cert.disagreement_term, budget.disagreement_delta))
    return rows


def build_report(cert: CertificateReport, *, seed: int | None = None, extra: dict | None = None) -> ReportDocument:
    meta = {"tool_version": __version__}
    if seed is not None:
        meta["seed"] = seed
    if extra:
        meta.update(extra)
    return ReportDocument(cert, term_table(cert), meta)


def emit_report(doc: ReportDocument, fmt: str = "json") -> bytes:
    """Serialize a report; JSON carries everything, CSV only the term table."""
    if fmt == "json":
        return (json.dumps(doc.to_dict(), indent=2) + "\n").encode("utf-8")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["term", "value", "delta_share"])
        for r in doc.term_table:
            w.writerow([r.term, repr(r.value), "" if r.delta_share is None else repr(r.delta_share)])
        w.writerow(["total", repr(doc.certificate.target_bound), repr(doc.certificate.budget.total)])
        return buf.getvalue().encode("utf-8")
    raise DataError(f"unknown report format {fmt!r}")


def parse_report(data: bytes) -> ReportDocument:
    try:
        return ReportDocument.from_dict(json.loads(data.decode("utf-8")))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"malformed report: {exc}") from None


def parse_term_csv(data: bytes) -> tuple[list[TermRow], float]:
    """Rows and total of a CSV term table."""
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    head = next(reader, None)
    if head != ["term", "value", "delta_share"]:
        raise DataError("not a term table")
    rows, total = [], None
    for term, value, share in reader:
        if term == "total":
            total = float(value)
        else:
            rows.append(TermRow(term, float(value), None if share == "" else float(share)))
    if total is None:
        raise DataError("term table has no total row")
    return rows, total
