"""End-to-end processing of one document: tag, parse, classify, link, tabulate."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from datetime import datetime, timezone

from .aggregator import build_records
from .linker import link_all, load_penalties
from .material import analyze_material, load_names, load_rules
from .model import AnnotatedDocument, SuperconLabel, digest_bytes, document_from_json
from .quantities import QuantityError, parse_quantity
from .segmenter import split_document
from .tagger import load_lexicon, tag
from .tc_classifier import classify_tc, load_terms

EXPORT_FORMATS = ("csv", "tsv", "json")


class ConfigError(ValueError):
    """A configuration file or option that cannot be used."""


@dataclass(frozen=True)
class PipelineConfig:
    """Paths of the editable data files plus run options.

    A path left as None selects the file shipped with the package.
    """

    lexicon: str | None = None
    taxonomy: str | None = None
    names: str | None = None
    penalties: str | None = None
    tc_terms: str | None = None
    tc_window: int | None = None
    workers: int = 1
    format: str | None = None  # None: from the destination's extension
    timestamp: str | None = None

    @classmethod
    def from_file(cls, path, **overrides):
        try:
            with open(path, encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"config {path}: unknown keys {unknown}")
        base = os.path.dirname(os.path.abspath(path))
        for key in ("lexicon", "taxonomy", "names", "penalties", "tc_terms"):
            value = data.get(key)
            if isinstance(value, str) and not os.path.isabs(value):
                data[key] = os.path.join(base, value)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data).checked()

    def checked(self):
        """Validate option values and make sure every data file exists and parses."""
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"workers must be a positive integer, got {self.workers!r}")
        if self.format is not None and self.format not in EXPORT_FORMATS:
            raise ConfigError(f"format must be one of {', '.join(EXPORT_FORMATS)}, got {self.format!r}")
        if self.tc_window is not None and (not isinstance(self.tc_window, int) or self.tc_window < 0):
            raise ConfigError(f"tc_window must be a non-negative integer, got {self.tc_window!r}")
        if self.timestamp is not None and not isinstance(self.timestamp, str):
            raise ConfigError("timestamp must be a string")
        load_resources(self)
        return self


@dataclass(frozen=True)
class Resources:
    lexicon: object
    rules: tuple
    names: dict
    penalties: object
    terms: object


_CACHE = {}


def load_resources(config=None):
    """Parse the data files named by ``config`` once per process."""
    config = config or PipelineConfig()
    key = (config.lexicon, config.taxonomy, config.names, config.penalties, config.tc_terms, config.tc_window)
    cached = _CACHE.get(key)
    if cached is not None:
        return cached
    loaders = (
        ("lexicon", lambda: load_lexicon(config.lexicon)),
        ("taxonomy", lambda: load_rules(config.taxonomy)),
        ("names", lambda: load_names(config.names)),
        ("penalties", lambda: load_penalties(config.penalties)),
        ("tc_terms", lambda: load_terms(config.tc_terms, config.tc_window)),
    )
    loaded = []
    for name, load in loaders:
        try:
            loaded.append(load())
        except OSError as exc:
            raise ConfigError(f"{name}: cannot read {getattr(config, name)}: {exc.strerror}") from None
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from None
    resources = Resources(*loaded)
    _CACHE[key] = resources
    return resources


def resolve_timestamp(explicit=None):
    """``explicit``, else SOURCE_DATE_EPOCH, else the current UTC time (ISO 8601)."""
    if explicit:
        return explicit
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return moment.replace(microsecond=0).isoformat().replace("+00:00", "Z")


@dataclass(frozen=True)
class TcDecisionRecord:
    sentence: int
    start: int
    end: int
    surface: str
    accepted: bool
    reason: str

    def to_dict(self):
        return {
            "sentence": self.sentence, "span": [self.start, self.end], "surface": self.surface,
            "accepted": self.accepted, "reason": self.reason,
        }


def _with_attributes(entity, resources):
    if entity.attributes is not None:
        return entity
    if entity.label is SuperconLabel.MATERIAL:
        return replace(entity, attributes=analyze_material(entity.surface, resources.names, resources.rules))
    if entity.label in (SuperconLabel.TC_VALUE, SuperconLabel.PRESSURE):
        try:
            return replace(entity, attributes=parse_quantity(entity.surface))
        except QuantityError:
            return entity
    return entity


TAG_AUTO = "auto"
TAG_ALWAYS = "always"
TAG_NEVER = "never"


def annotate(doc, resources=None, tagging=TAG_AUTO):
    """Run the extraction stages over a segmented document.

    With ``tagging="auto"`` the tagger runs only when the document carries no
    entities at all; "never" keeps the given entities (gold input) and
    "always" replaces them.  Returns the annotated document and one decision
    per tcValue candidate.
    """
    resources = resources or load_resources()
    if tagging == TAG_AUTO:
        tagging = TAG_NEVER if any(s.entities for s in doc.sentences) else TAG_ALWAYS
    sentences = []
    decisions = []
    for si, sentence in enumerate(doc.sentences):
        entities = sentence.entities
        if tagging == TAG_ALWAYS:
            entities = tuple(tag(sentence, resources.lexicon)) if sentence.text else ()
        entities = tuple(_with_attributes(e, resources) for e in entities)
        sentence = replace(sentence, entities=entities, links=())
        accepted = []
        for entity in sentence.of_label(SuperconLabel.TC_VALUE):
            decision = classify_tc(entity, sentence, resources.terms, resources.penalties)
            decisions.append(TcDecisionRecord(si, entity.start, entity.end, entity.surface,
                                              decision.accepted, decision.reason))
            if decision.accepted:
                accepted.append(entity)
        links = link_all(sentence, accepted, resources.penalties)
        sentences.append(replace(sentence, links=tuple(links)))
    return replace(doc, sentences=tuple(sentences)), decisions


@dataclass(frozen=True)
class Result:
    document: AnnotatedDocument
    decisions: tuple
    records: tuple

    def to_dict(self):
        return {
            "document": self.document.to_dict(),
            "tc_decisions": [d.to_dict() for d in self.decisions],
            "records": [r.to_dict() for r in self.records],
        }


def process_document(doc, config=None, tagging=TAG_AUTO):
    doc, decisions = annotate(doc, load_resources(config), tagging)
    return Result(doc, tuple(decisions), tuple(build_records(doc)))


def document_from_text(text, doc_id=None, timestamp=None, biblio=None):
    raw = text.encode("utf-8")
    digest = digest_bytes(raw)
    return AnnotatedDocument(
        id=doc_id or digest[:16],
        sentences=tuple(split_document(text)),
        biblio=dict(biblio or {}),
        digest=digest,
        timestamp=resolve_timestamp(timestamp),
    )


def process_text(text, config=None, doc_id=None, timestamp=None, biblio=None):
    """Full pipeline on raw text."""
    config = config or PipelineConfig()
    doc = document_from_text(text, doc_id, timestamp or config.timestamp, biblio)
    return process_document(doc, config)


def process_bytes(data, name, config=None, timestamp=None, doc_id=None):
    """Process file content: canonical JSON documents or UTF-8 text.

    A canonical document that already carries entities is not re-tagged.
    Its own digest and timestamp are kept when present.
    """
    config = config or PipelineConfig()
    stamp = timestamp or config.timestamp
    if name.lower().endswith(".pdf") or data[:5] == b"%PDF-":
        raise ValueError(f"{name or 'input'}: PDF input is not supported; convert the document to text first")
    text = data.decode("utf-8")
    if name.lower().endswith(".json"):
        doc = document_from_json(text)
        doc = replace(
            doc,
            id=doc_id or doc.id,
            digest=doc.digest or digest_bytes(data),
            timestamp=doc.timestamp or resolve_timestamp(stamp),
        )
        return process_document(doc, config)
    stem = os.path.splitext(os.path.basename(name))[0] if name else None
    return process_text(text, config, doc_id=doc_id or stem or None, timestamp=stamp)
