"""Shared domain types, label vocabularies and the canonical JSON format.

Offsets are counted in Unicode code points and are relative to the text of
the sentence that contains the entity.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field

from .material import MaterialStructure
from .quantities import Quantity


class SuperconLabel(str, enum.Enum):
    MATERIAL = "material"
    CLASS = "class"
    TC_VALUE = "tcValue"
    TC = "tc"
    ME_METHOD = "me_method"
    PRESSURE = "pressure"


class MaterialLabel(str, enum.Enum):
    NAME = "name"
    FORMULA = "formula"
    DOPING = "doping"
    SHAPE = "shape"
    VARIABLE = "variable"
    VALUE = "value"
    SUBSTRATE = "substrate"
    FABRICATION = "fabrication"


class Subsection(str, enum.Enum):
    TITLE = "title"
    ABSTRACT = "abstract"
    PARAGRAPH = "paragraph"
    FIGURE_CAPTION = "figure_caption"
    TABLE_CAPTION = "table_caption"
    UNKNOWN = "unknown"


class LinkType(str, enum.Enum):
    MATERIAL_TCVALUE = "material_tcValue"
    TCVALUE_PRESSURE = "tcValue_pressure"
    ME_METHOD_TCVALUE = "me_method_tcValue"

    @property
    def endpoints(self):
        return _ENDPOINTS[self]


_ENDPOINTS = {
    LinkType.MATERIAL_TCVALUE: (SuperconLabel.MATERIAL, SuperconLabel.TC_VALUE),
    LinkType.TCVALUE_PRESSURE: (SuperconLabel.TC_VALUE, SuperconLabel.PRESSURE),
    LinkType.ME_METHOD_TCVALUE: (SuperconLabel.ME_METHOD, SuperconLabel.TC_VALUE),
}

LINK_METHODS = ("pair_rule", "order_linking", "distance_linking")


class FormatError(ValueError):
    """Canonical JSON that does not describe a valid document."""


def _enum(kind, value, where):
    try:
        return kind(value)
    except ValueError:
        raise FormatError(f"{where}: unknown {kind.__name__} {value!r}") from None


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    def __len__(self):
        return self.end - self.start

    def overlaps(self, other):
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class Entity:
    span: Span
    label: SuperconLabel
    surface: str
    attributes: Quantity | MaterialStructure | None = None

    @property
    def start(self):
        return self.span.start

    @property
    def end(self):
        return self.span.end

    @property
    def key(self):
        return (self.span.start, self.span.end, self.label.value)

    def to_dict(self):
        out = {"span": [self.span.start, self.span.end], "label": self.label.value, "surface": self.surface}
        if self.attributes is not None:
            out["attributes"] = self.attributes.to_dict()
        return out

    @classmethod
    def from_dict(cls, data, where="entity"):
        label = _enum(SuperconLabel, data["label"], where)
        start, end = data["span"]
        attributes = None
        raw = data.get("attributes")
        if raw is not None:
            if label in (SuperconLabel.TC_VALUE, SuperconLabel.PRESSURE):
                attributes = Quantity.from_dict(raw)
            elif label is SuperconLabel.MATERIAL:
                attributes = MaterialStructure.from_dict(raw)
            else:
                raise FormatError(f"{where}: label {label.value} takes no attributes")
        return cls(Span(start, end), label, data["surface"], attributes)


@dataclass(frozen=True)
class Link:
    type: LinkType
    source: Entity
    target: Entity
    method: str
    distance: int | float | None = None


@dataclass(frozen=True)
class Sentence:
    text: str
    offset: int = 0
    entities: tuple = ()
    subsection: Subsection = Subsection.PARAGRAPH
    links: tuple = ()

    def __post_init__(self):
        if not isinstance(self.subsection, Subsection):
            object.__setattr__(self, "subsection", Subsection(self.subsection))

    def of_label(self, label):
        return [e for e in self.entities if e.label is label]

    def to_dict(self):
        index = {e.key: i for i, e in enumerate(self.entities)}
        out = {
            "text": self.text,
            "offset": self.offset,
            "subsection": self.subsection.value,
            "entities": [e.to_dict() for e in self.entities],
        }
        if self.links:
            out["links"] = [
                {
                    "type": link.type.value,
                    "source": index[link.source.key],
                    "target": index[link.target.key],
                    "method": link.method,
                    "distance": link.distance,
                }
                for link in self.links
            ]
        return out

    @classmethod
    def from_dict(cls, data, where="sentence"):
        entities = tuple(
            Entity.from_dict(e, f"{where} entity {i}") for i, e in enumerate(data.get("entities", []))
        )
        links = []
        for i, raw in enumerate(data.get("links", [])):
            try:
                source, target = entities[raw["source"]], entities[raw["target"]]
            except (IndexError, TypeError):
                raise FormatError(f"{where} link {i}: entity index out of range") from None
            if raw.get("method") not in LINK_METHODS:
                raise FormatError(f"{where} link {i}: unknown method {raw.get('method')!r}")
            links.append(Link(_enum(LinkType, raw["type"], f"{where} link {i}"), source, target,
                              raw["method"], raw.get("distance")))
        return cls(
            text=data["text"],
            offset=data.get("offset", 0),
            entities=entities,
            subsection=_enum(Subsection, data.get("subsection", "paragraph"), where),
            links=tuple(links),
        )


BIBLIO_FIELDS = ("title", "authors", "doi", "publisher", "journal", "year")


@dataclass(frozen=True)
class AnnotatedDocument:
    id: str
    sentences: tuple = ()
    biblio: dict = field(default_factory=dict)
    digest: str = ""
    timestamp: str = ""

    def to_dict(self):
        return {
            "id": self.id,
            "biblio": {k: self.biblio.get(k) for k in BIBLIO_FIELDS if self.biblio.get(k) is not None},
            "digest": self.digest,
            "timestamp": self.timestamp,
            "sentences": [s.to_dict() for s in self.sentences],
        }

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or "id" not in data:
            raise FormatError("document must be an object with an 'id'")
        biblio = data.get("biblio") or {}
        unknown = set(biblio) - set(BIBLIO_FIELDS)
        if unknown:
            raise FormatError(f"document {data['id']}: unknown biblio fields {sorted(unknown)}")
        sentences = []
        for i, raw in enumerate(data.get("sentences", [])):
            try:
                sentences.append(Sentence.from_dict(raw, f"document {data['id']} sentence {i}"))
            except (KeyError, TypeError, ValueError) as exc:
                if isinstance(exc, FormatError):
                    raise
                raise FormatError(f"document {data['id']} sentence {i}: {exc}") from None
        return cls(
            id=str(data["id"]),
            sentences=tuple(sentences),
            biblio=dict(biblio),
            digest=data.get("digest", ""),
            timestamp=data.get("timestamp", ""),
        )


def digest_bytes(data):
    return hashlib.sha256(data).hexdigest()


def dumps(obj):
    """Stable JSON text used for every file and HTTP body we write."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def document_to_json(doc):
    return dumps(doc.to_dict())


def document_from_json(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    return AnnotatedDocument.from_dict(data)


def load_document(path):
    with open(path, encoding="utf-8") as handle:
        return document_from_json(handle.read())


def validate_document(doc):
    """List invariant violations of a document; an empty list means valid."""
    problems = []
    for si, sentence in enumerate(doc.sentences):
        n = len(sentence.text)
        previous = None
        for ei, entity in enumerate(sentence.entities):
            where = f"sentence {si} entity {ei} ({entity.label.value})"
            if entity.end > n:
                problems.append(f"{where}: span [{entity.start}, {entity.end}) exceeds sentence length {n}")
                continue
            if sentence.text[entity.start:entity.end] != entity.surface:
                problems.append(f"{where}: surface {entity.surface!r} does not match text at span")
            if previous is not None and entity.start < previous.start:
                problems.append(f"{where}: entities not sorted by start")
            previous = entity
            if entity.attributes is not None:
                if entity.label in (SuperconLabel.TC_VALUE, SuperconLabel.PRESSURE):
                    ok = isinstance(entity.attributes, Quantity)
                else:
                    ok = entity.label is SuperconLabel.MATERIAL and isinstance(entity.attributes, MaterialStructure)
                if not ok:
                    problems.append(f"{where}: attributes not allowed for this label")
        ents = sentence.entities
        for i in range(len(ents)):
            for j in range(i + 1, len(ents)):
                a, b = ents[i], ents[j]
                if a.label is b.label and a.span.overlaps(b.span):
                    problems.append(
                        f"sentence {si}: overlapping {a.label.value} entities "
                        f"[{a.start}, {a.end}) and [{b.start}, {b.end})"
                    )
        for li, link in enumerate(sentence.links):
            src_label, tgt_label = link.type.endpoints
            if link.source.label is not src_label or link.target.label is not tgt_label:
                problems.append(f"sentence {si} link {li}: endpoint labels do not match {link.type.value}")
            if (link.distance is not None) != (link.method == "distance_linking"):
                problems.append(f"sentence {si} link {li}: distance present iff distance_linking")
    return problems
