"""Document-level material clustering, record assembly, export and batch runs."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from .material import (
    DecompositionError, _formula_variables, compositions_equal, decompose_formula, resolved_compositions,
)
from .model import LinkType, SuperconLabel, Subsection

log = logging.getLogger(__name__)

SCHEMA_FIELDS = (
    "raw_material", "name", "formula", "doping", "shape", "variables", "class",
    "fabrication", "substrate", "critical_temperature", "applied_pressure",
    "measurement_method", "section", "subsection", "authors", "title", "doi",
    "publisher", "journal", "year", "hash", "timestamp",
)
# columns beyond the published schema
EXTENSION_FIELDS = (
    "document_id", "cluster_id", "resolved_formulas", "critical_temperature_k", "applied_pressure_gpa",
)
FIELDS = SCHEMA_FIELDS + EXTENSION_FIELDS

HEADER_SUBSECTIONS = frozenset({Subsection.TITLE, Subsection.ABSTRACT})


@dataclass(frozen=True)
class SuperconRecord:
    """One database row.  Every value is a string; absent values are empty."""

    raw_material: str
    critical_temperature: str
    name: str = ""
    formula: str = ""
    doping: str = ""
    shape: str = ""
    variables: str = ""
    material_class: str = ""
    fabrication: str = ""
    substrate: str = ""
    applied_pressure: str = ""
    measurement_method: str = ""
    section: str = ""
    subsection: str = ""
    authors: str = ""
    title: str = ""
    doi: str = ""
    publisher: str = ""
    journal: str = ""
    year: str = ""
    hash: str = ""
    timestamp: str = ""
    document_id: str = ""
    cluster_id: str = ""
    resolved_formulas: str = ""
    critical_temperature_k: str = ""
    applied_pressure_gpa: str = ""

    def __post_init__(self):
        if not self.raw_material:
            raise ValueError("raw_material must not be empty")
        if not self.critical_temperature:
            raise ValueError("critical_temperature must not be empty")

    def to_dict(self):
        data = asdict(self)
        data["class"] = data.pop("material_class")
        return {name: data[name] for name in FIELDS}

    @classmethod
    def from_dict(cls, data):
        values = {name: "" if data.get(name) is None else str(data.get(name)) for name in FIELDS}
        values["material_class"] = values.pop("class")
        return cls(**values)

    @property
    def dedup_key(self):
        return (self.hash, self.raw_material, self.critical_temperature_k or self.critical_temperature)


@dataclass(frozen=True)
class MaterialCluster:
    id: str
    representative: object  # MaterialStructure
    members: tuple  # ((sentence index, Entity), ...)
    shared_formulas: tuple


def _material_mentions(doc):
    out = []
    for si, sentence in enumerate(doc.sentences):
        for entity in sentence.entities:
            if entity.label is SuperconLabel.MATERIAL and entity.attributes is not None:
                out.append((si, entity))
    return out


def _intersects(comps_a, comps_b):
    return any(compositions_equal(a, b) for a in comps_a for b in comps_b)


def cluster_materials(doc):
    """Group material mentions whose resolved compositions intersect.

    Clusters are the connected components of the intersection graph, in
    order of their first mention.
    """
    mentions = _material_mentions(doc)
    comps = [resolved_compositions(e.attributes) for _, e in mentions]
    parent = list(range(len(mentions)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(mentions)):
        for j in range(i + 1, len(mentions)):
            if _intersects(comps[i], comps[j]):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(len(mentions)):
        groups.setdefault(find(i), []).append(i)
    clusters = []
    for n, root in enumerate(sorted(groups)):
        members = groups[root]
        # the member with the most resolved formulas speaks for the cluster
        rep = max(members, key=lambda i: (len(comps[i]), mentions[i][1].attributes.formula is not None, -i))
        structure = mentions[rep][1].attributes
        if len(members) == 1:
            shared = structure.resolved_formulas
        else:
            others = [c for i in members if i != rep for c in comps[i]]
            shared = tuple(
                text for text, comp in zip(_resolved_texts(structure), comps[rep])
                if any(compositions_equal(comp, o) for o in others)
            )
        clusters.append(MaterialCluster(f"c{n}", structure, tuple(mentions[i] for i in members), shared))
    return clusters


def _resolved_texts(structure):
    # resolved_compositions skips formulas that fail to decompose; keep the texts aligned
    out = []
    for text in structure.resolved_formulas:
        try:
            if decompose_formula(text, _formula_variables(structure)).resolved:
                out.append(text)
        except (DecompositionError, ValueError):
            pass
    return out


def _number(x):
    if x is None:
        return ""
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _quantity_value(entity, kind):
    q = entity.attributes
    if q is None or q.kind != kind:
        return ""
    if q.normalized_high is None:
        return _number(q.normalized)
    return f"{_number(q.normalized)}-{_number(q.normalized_high)}"


def _variables_text(structure):
    return "; ".join(f"{name}={','.join(values)}" for name, values in structure.variables)


def build_records(doc, links=None, clusters=None):
    """One record per (material mention, linked accepted tcValue), in document order.

    ``links`` defaults to the links stored on the sentences, given as
    ``(sentence index, Link)`` pairs.
    """
    if links is None:
        links = [(si, link) for si, s in enumerate(doc.sentences) for link in s.links]
    clusters = cluster_materials(doc) if clusters is None else clusters
    cluster_of = {}
    for cluster in clusters:
        for si, entity in cluster.members:
            cluster_of[(si, entity.key)] = cluster.id

    pressure_of = {}
    method_of = {}
    for si, link in links:
        if link.type is LinkType.TCVALUE_PRESSURE:
            pressure_of.setdefault((si, link.source.key), link.target)
        elif link.type is LinkType.ME_METHOD_TCVALUE:
            method_of.setdefault((si, link.target.key), link.source)

    biblio = {k: "" if v is None else (", ".join(v) if isinstance(v, list) else str(v))
              for k, v in doc.biblio.items()}
    material_links = sorted(
        ((si, link) for si, link in links if link.type is LinkType.MATERIAL_TCVALUE),
        key=lambda item: (item[0], item[1].source.start, item[1].target.start),
    )
    records = []
    for si, link in material_links:
        sentence = doc.sentences[si]
        material, tc = link.source, link.target
        structure = material.attributes
        pressure = pressure_of.get((si, tc.key))
        method = method_of.get((si, tc.key))
        fields = {}
        if structure is not None:
            fields = {
                "name": structure.name or "",
                "formula": structure.effective_formula or "",
                "doping": structure.doping or "",
                "shape": structure.shape or "",
                "variables": _variables_text(structure),
                "material_class": ", ".join(structure.classes),
                "fabrication": structure.fabrication or "",
                "substrate": structure.substrate or "",
                "resolved_formulas": "; ".join(structure.resolved_formulas),
            }
        records.append(SuperconRecord(
            raw_material=material.surface,
            critical_temperature=tc.surface,
            applied_pressure=pressure.surface if pressure is not None else "",
            measurement_method=method.surface if method is not None else "",
            section="header" if sentence.subsection in HEADER_SUBSECTIONS else "body",
            subsection=sentence.subsection.value,
            hash=doc.digest,
            timestamp=doc.timestamp,
            document_id=doc.id,
            cluster_id=cluster_of.get((si, material.key), ""),
            critical_temperature_k=_quantity_value(tc, "temperature"),
            applied_pressure_gpa=_quantity_value(pressure, "pressure") if pressure is not None else "",
            **fields,
            **{k: biblio.get(k, "") for k in ("authors", "title", "doi", "publisher", "journal", "year")},
        ))
    return records


class ExportError(OSError):
    """The export destination cannot be written."""


_DELIMITERS = {"csv": ",", "tsv": "\t"}


def format_for(path, fmt=None):
    if fmt:
        return fmt
    ext = os.path.splitext(path)[1].lower().lstrip(".")
    return ext if ext in ("csv", "tsv", "json") else "json"


def render_records(records, fmt):
    """Serialise records to text in one of the export formats."""
    rows = [r.to_dict() for r in records]
    if fmt == "json":
        return json.dumps(rows, ensure_ascii=False, indent=2) + "\n"
    if fmt not in _DELIMITERS:
        raise ValueError(f"unknown export format {fmt!r}")
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, FIELDS, delimiter=_DELIMITERS[fmt], lineterminator="\r\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def export(records, path, fmt=None):
    fmt = format_for(path, fmt)
    text = render_records(records, fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror}") from None
    return path


def parse_records(text, fmt):
    if fmt == "json":
        return [SuperconRecord.from_dict(row) for row in json.loads(text)]
    if fmt == "ndjson":
        return [SuperconRecord.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
    reader = csv.DictReader(io.StringIO(text, newline=""), delimiter=_DELIMITERS[fmt])
    return [SuperconRecord.from_dict(row) for row in reader]


def read_records(path, fmt=None):
    fmt = fmt or ("ndjson" if path.endswith(".ndjson") or path.endswith(".jsonl") else format_for(path))
    with open(path, encoding="utf-8", newline="") as handle:
        return parse_records(handle.read(), fmt)


def read_database(path):
    return read_records(path, "ndjson")


# -- batch ------------------------------------------------------------------

INPUT_SUFFIXES = (".json", ".txt")


def _map_document(task):
    """Map step: process one file; never raises."""
    from .pipeline import process_bytes

    path, config, timestamp = task
    started = time.perf_counter()
    entry = {"file": os.path.basename(path)}
    try:
        with open(path, "rb") as handle:
            data = handle.read()
        result = process_bytes(data, path, config, timestamp)
        entry.update(status="ok", id=result.document.id, records=len(result.records), error=None, error_type=None)
        rows = [r.to_dict() for r in result.records]
    except Exception as exc:  # one bad document must not stop the run
        entry.update(status="failed", id=None, records=0, error=str(exc), error_type=type(exc).__name__)
        rows = []
    entry["seconds"] = round(time.perf_counter() - started, 4)
    return entry, rows


def reduce_records(per_document):
    """Concatenate per-document rows in (document id, file) order and drop duplicates."""
    seen = set()
    out = []
    for _, rows in sorted(per_document, key=lambda item: (item[0]["id"] or "", item[0]["file"])):
        for row in rows:
            record = SuperconRecord.from_dict(row)
            if record.dedup_key in seen:
                continue
            seen.add(record.dedup_key)
            out.append(record)
    return out


def database_text(records):
    return "".join(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n" for r in records)


def process_corpus(input_dir, output, workers=1, config=None, report_path=None, timestamp=None):
    """Map-reduce run over a directory of ``.json`` / ``.txt`` documents.

    Writes the newline-delimited JSON database to ``output`` and the run
    report to ``report_path`` (default: ``output`` + ``.report.json``), and
    returns the report.  The database depends only on the inputs and the
    configuration, never on ``workers``.
    """
    from .pipeline import PipelineConfig, resolve_timestamp

    config = config or PipelineConfig()
    if not os.path.isdir(input_dir):
        raise NotADirectoryError(f"input directory not found: {input_dir}")
    # one timestamp per run for documents that carry none
    timestamp = resolve_timestamp(timestamp or config.timestamp)
    names = sorted(os.listdir(input_dir))
    paths = [os.path.join(input_dir, n) for n in names if n.lower().endswith(INPUT_SUFFIXES)]
    skipped = [n for n in names if not n.lower().endswith(INPUT_SUFFIXES)
               and os.path.isfile(os.path.join(input_dir, n))]
    tasks = [(p, config, timestamp) for p in paths]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_map_document, tasks))
    else:
        results = [_map_document(t) for t in tasks]

    for entry, _ in results:
        if entry["status"] == "failed":
            log.warning("%s: %s: %s", entry["file"], entry["error_type"], entry["error"])
        else:
            log.info("%s: %d records", entry["file"], entry["records"])
    records = reduce_records(results)
    with open(output, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(database_text(records))

    error_types = {}
    for entry, _ in results:
        if entry["error_type"]:
            error_types[entry["error_type"]] = error_types.get(entry["error_type"], 0) + 1
    report = {
        "input": os.path.abspath(input_dir),
        "database": os.path.abspath(output),
        "workers": workers,
        "documents": [entry for entry, _ in results],
        "skipped": skipped,
        "totals": {
            "documents": len(results),
            "ok": sum(1 for e, _ in results if e["status"] == "ok"),
            "failed": sum(1 for e, _ in results if e["status"] == "failed"),
            "records_before_dedup": sum(len(rows) for _, rows in results),
            "records": len(records),
        },
        "error_types": dict(sorted(error_types.items())),
    }
    report_path = report_path or output + ".report.json"
    with open(report_path, "w", encoding="utf-8") as handle:
        json.dump(report, handle, ensure_ascii=False, indent=2, sort_keys=True)
        handle.write("\n")
    return report
