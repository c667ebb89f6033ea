"""Baseline entity tagger, multi-source entity merging and annotation ingestion.

The baseline tagger is a gazetteer plus regular expressions.  It is a
deterministic stand-in for a trained sequence labeller; anything that yields
:class:`~supercon_extract.model.Entity` lists can be merged with it through
:func:`merge_entities`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .material import DEFAULT_VARIABLES, _read_data, looks_like_formula
from .model import AnnotatedDocument, Entity, SuperconLabel, Span, validate_document
from .quantities import PRESSURE, TEMPERATURE, QuantityError, parse_quantity
from .segmenter import split_document

_LABEL_ORDER = {label: i for i, label in enumerate(SuperconLabel)}


@dataclass(frozen=True)
class TaggerSource:
    name: str
    priority: int = 0  # lower wins ties


_QUANTITY_RE = re.compile(
    r"(?<![\w.])"
    r"(?:(?:above|below|about|around|approximately|nearly|over|up to)\s+|[~∼≈≃><≥≤]\s*)?"
    r"[-−]?\d+(?:\.\d+)?"
    r"(?:\s*(?:-|–|—|to)\s*[-−]?\d+(?:\.\d+)?)?"
    r"\s*(?:mK|K|°C|℃|GPa|MPa|kbar|bar|Pa)"
    r"(?![\w])"
)

_TC_RE = re.compile(r"(?<![\wΔ])(?:T_?\{?c\}?|T c)(?:'s)?(?![\w])(?:\s*(?:=|≈|~|∼|of|is|was|at|around|near)(?![\w]))?")

_TOKEN_RE = re.compile(r"[A-Za-z0-9δ()\[\]\-+−.]+")
_NUM_LIST = r"\d+(?:\.\d+)?(?:\s*(?:,|and|or)\s*\d+(?:\.\d+)?)*"
_EL_LIST = r"[A-Z][a-z]?(?:\s*(?:,|and|or)\s*[A-Z][a-z]?)*"
_ASSIGN = rf"(?:[a-zδ]\s*=\s*{_NUM_LIST}|[A-Z][A-Za-z]?\s*=\s*{_EL_LIST})"
_ASSIGNMENT_TAIL_RE = re.compile(rf"\s*\(\s*{_ASSIGN}(?:\s*[;,]\s*{_ASSIGN})*\s*\)")


@dataclass
class Lexicon:
    """Term gazetteer plus the regular expressions of the baseline tagger."""

    terms: dict = field(default_factory=dict)  # key -> (label, case_sensitive, term as written)
    quantity_pattern: re.Pattern = _QUANTITY_RE
    tc_pattern: re.Pattern = _TC_RE

    def add(self, term, label, case_sensitive=False):
        label = SuperconLabel(label)
        key = term if case_sensitive else term.lower()
        existing = self.terms.get(key)
        if existing is not None and existing[0] is not label:
            raise ValueError(f"lexicon term {term!r} mapped to both {existing[0].value} and {label.value}")
        self.terms[key] = (label, case_sensitive, term)

    def _compiled(self):
        cached = getattr(self, "_cache", None)
        if cached is not None and cached[0] == len(self.terms):
            return cached[1]
        ordered = sorted(self.terms.values(), key=lambda t: -len(t[2]))
        patterns = []
        for label, cs, term in ordered:
            body = r"\s+".join(re.escape(part) for part in term.split())
            flags = 0 if cs else re.IGNORECASE
            patterns.append((re.compile(rf"(?<![\w-]){body}(?![\w-])", flags), label))
        self._cache = (len(self.terms), patterns)
        return patterns


def parse_lexicon(text):
    lexicon = Lexicon()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) not in (2, 3):
            raise ValueError(f"lexicon line {lineno}: expected term<TAB>label[<TAB>cs]")
        term, label = parts[0].strip(), parts[1].strip()
        try:
            SuperconLabel(label)
        except ValueError:
            raise ValueError(f"lexicon line {lineno}: unknown label {label!r}") from None
        cs = len(parts) == 3 and parts[2].strip() == "cs"
        lexicon.add(term, label, cs)
    return lexicon


def load_lexicon(path=None):
    return parse_lexicon(_read_data(path, "lexicon.tsv"))


_DEFAULT_LEXICON = None


def default_lexicon():
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = load_lexicon()
    return _DEFAULT_LEXICON


def _formula_entities(text):
    found = []
    for match in _TOKEN_RE.finditer(text):
        start, end = match.start(), match.end()
        token = text[start:end]
        # trailing punctuation and unbalanced brackets are not part of a formula
        while token and (token[-1] in ".-+−" or (token[-1] in ")]" and token.count("(") + token.count("[") < token.count(")") + token.count("]"))):
            token = token[:-1]
            end -= 1
        while token and token[0] in "([" and token.count("(") + token.count("[") > token.count(")") + token.count("]"):
            token = token[1:]
            start += 1
        if not token:
            continue
        tail = _ASSIGNMENT_TAIL_RE.match(text, end)
        declared = set(re.findall(r"([A-Za-zδ][A-Za-z]?)\s*=", tail.group(0))) if tail else set()
        if not looks_like_formula(token, DEFAULT_VARIABLES | declared):
            continue
        if tail:
            end = tail.end()
        found.append((start, end))
    return found


_DOPING_PREFIX_RE = re.compile(
    r"(?:(?<![\w.])\d+(?:\.\d+)?\s*%\s*)?"
    r"(?:(?<![\w-])[A-Z][a-z]?(?:\s*(?:,|and|/)\s*[A-Z][a-z]?)*-doped|(?<![\w-])(?i:over|under|optimally|un)[- ]?doped)\s+$"
)
_ACRONYM_RE = re.compile(r"\s*\(\s*[A-Z][A-Z0-9\-]+\s*\)")
_SHAPE_RE = re.compile(
    r"\s+(?:single[- ]crystals?|poly-?crystals?|polycrystalline\s+samples?|thin\s+films?|films?|"
    r"powders?|nano-?wires?|wires?|tapes?|whiskers?|crystals?)(?![\w-])"
)
_SUBSTRATE_RE = re.compile(r"\s+(?:grown\s+on|deposited\s+on|on\s+top\s+of|onto|on)\s+([A-Za-z0-9().\-/]+)")


def _substrate_ok(token):
    pieces = [p for p in re.split(r"[/()]", token.rstrip(".,;")) if p]
    return bool(pieces) and all(looks_like_formula(p) or re.fullmatch(r"[A-Z]{2,6}", p) for p in pieces)


def extend_material(text, start, end):
    """Grow a material span over its doping prefix, acronym, shape and substrate."""
    prefix = _DOPING_PREFIX_RE.search(text, 0, start)
    if prefix:
        start = prefix.start()
    match = _ACRONYM_RE.match(text, end)
    if match:
        end = match.end()
    match = _SHAPE_RE.match(text, end)
    if match:
        end = match.end()
        match = _SUBSTRATE_RE.match(text, end)
        if match and _substrate_ok(match.group(1)):
            end = match.start(1) + len(match.group(1).rstrip(".,;"))
    return start, end


def tag(sentence, lexicon=None):
    """Tag one sentence with the baseline gazetteer/regex rules.

    Candidates from all rules are merged with the same longest-wins policy
    as :func:`merge_entities`, so the output never overlaps.
    """
    lexicon = lexicon if lexicon is not None else default_lexicon()
    text = sentence.text
    if not text:
        return []
    candidates = []

    def add(start, end, label):
        candidates.append(Entity(Span(start, end), label, text[start:end]))

    for match in lexicon.quantity_pattern.finditer(text):
        try:
            kind = parse_quantity(match.group(0)).kind
        except QuantityError:
            continue
        add(match.start(), match.end(), SuperconLabel.TC_VALUE if kind == TEMPERATURE else SuperconLabel.PRESSURE)
    for match in lexicon.tc_pattern.finditer(text):
        add(match.start(), match.end(), SuperconLabel.TC)
    for pattern, label in lexicon._compiled():
        for match in pattern.finditer(text):
            add(match.start(), match.end(), label)
    for start, end in _formula_entities(text):
        add(start, end, SuperconLabel.MATERIAL)
    for entity in [c for c in candidates if c.label is SuperconLabel.MATERIAL]:
        start, end = extend_material(text, entity.start, entity.end)
        if (start, end) != (entity.start, entity.end):
            add(start, end, SuperconLabel.MATERIAL)
    return merge_entities([(TaggerSource("baseline"), candidates)])


def _rank(item):
    entity, priority, order = item
    return (-len(entity.surface), priority, entity.start, _LABEL_ORDER[entity.label], order)


def merge_entities(streams):
    """Merge entity lists from several sources.

    Exact duplicates (same span and label) collapse to one.  Among
    overlapping entities the one with the longest surface survives; ties go
    to the higher-priority source, then the leftmost start.  An entity is
    dropped whenever a better entity overlaps it, even if that better entity
    is itself dropped, so a survivor is never shorter than anything it
    overlapped in the input.
    """
    pool = {}
    for order, (source, entities) in enumerate(streams):
        for entity in entities:
            item = (entity, source.priority, order)
            key = entity.key
            if key not in pool or _rank(item) < _rank(pool[key]):
                pool[key] = item
    items = sorted(pool.values(), key=_rank)
    kept = []
    for i, item in enumerate(items):
        span = item[0].span
        if any(better[0].span.overlaps(span) for better in items[:i]):
            continue
        kept.append(item[0])
    kept.sort(key=lambda e: (e.start, e.end, _LABEL_ORDER[e.label]))
    return kept


class AnnotationError(ValueError):
    """An annotation file entry that cannot be attached to the document."""


def ingest_annotations(text, annotations, doc_id="doc", digest="", timestamp="", biblio=None):
    """Attach externally produced entities to a segmented document.

    ``annotations`` is a list (or a JSON string / file path holding a list)
    of ``{"sentence_index", "start", "end", "label"}`` objects with offsets
    relative to the sentence.  Overlapping entries are normalised through
    :func:`merge_entities`.
    """
    if isinstance(annotations, str):
        if annotations.lstrip().startswith("["):
            annotations = json.loads(annotations)
        else:
            with open(annotations, encoding="utf-8") as handle:
                annotations = json.load(handle)
    sentences = split_document(text)
    per_sentence = {i: [] for i in range(len(sentences))}
    for n, item in enumerate(annotations):
        where = f"annotation {n}"
        try:
            index, start, end, label = item["sentence_index"], item["start"], item["end"], item["label"]
        except (KeyError, TypeError):
            raise AnnotationError(f"{where}: expected sentence_index, start, end and label") from None
        try:
            label = SuperconLabel(label)
        except ValueError:
            raise AnnotationError(f"{where}: unknown label {label!r}") from None
        if not isinstance(index, int) or not 0 <= index < len(sentences):
            raise AnnotationError(f"{where}: sentence_index {index!r} out of range (0..{len(sentences) - 1})")
        sentence = sentences[index]
        if not (isinstance(start, int) and isinstance(end, int) and 0 <= start < end <= len(sentence.text)):
            raise AnnotationError(
                f"{where} ({label.value}): span [{start}, {end}) out of bounds for sentence {index} "
                f"of length {len(sentence.text)}"
            )
        per_sentence[index].append(Entity(Span(start, end), label, sentence.text[start:end]))
    gold = TaggerSource("annotations")
    out = []
    for i, sentence in enumerate(sentences):
        merged = merge_entities([(gold, per_sentence[i])])
        out.append(type(sentence)(sentence.text, sentence.offset, tuple(merged), sentence.subsection))
    doc = AnnotatedDocument(doc_id, tuple(out), dict(biblio or {}), digest, timestamp)
    problems = validate_document(doc)
    if problems:
        raise AnnotationError("; ".join(problems))
    return doc
