"""Scoring and corpus statistics: strict-span NER scores, link scores,
holdout statistics and the tally of end-to-end error types.

Scores are percentages computed in full precision; rounding happens only
when a report is rendered.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field

from .model import LinkType, Subsection, SuperconLabel

ERROR_TYPES = ("from_table", "extraction", "quantity_extraction", "tc_classification", "linking")


class AlignmentError(ValueError):
    """Gold and predicted corpora do not describe the same sentences."""


def prf(tp, fp, fn):
    """Precision, recall and F1 in percent.  P is 0 with no predictions."""
    p = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    r = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass(frozen=True)
class Score:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self):
        return prf(self.tp, self.fp, self.fn)[0]

    @property
    def recall(self):
        return prf(self.tp, self.fp, self.fn)[1]

    @property
    def f1(self):
        return prf(self.tp, self.fp, self.fn)[2]

    @property
    def support(self):
        return self.tp + self.fn

    def __add__(self, other):
        return Score(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def to_dict(self):
        return {
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "support": self.support, "tp": self.tp, "fp": self.fp, "fn": self.fn,
        }


@dataclass(frozen=True)
class EvalReport:
    labels: dict  # label name -> Score, in display order
    subsection: str | None = None

    @property
    def micro(self):
        total = Score()
        for score in self.labels.values():
            total = total + score
        return total

    def to_dict(self):
        return {
            "subsection": self.subsection,
            "labels": {name: s.to_dict() for name, s in self.labels.items()},
            "micro": self.micro.to_dict(),
        }

    def rows(self):
        """Display rows ``(label, P, R, F1, support)`` rounded to two decimals."""
        out = [(name, round(s.precision, 2), round(s.recall, 2), round(s.f1, 2), s.support)
               for name, s in self.labels.items()]
        m = self.micro
        out.append(("All (micro avg)", round(m.precision, 2), round(m.recall, 2), round(m.f1, 2), m.support))
        return out


def _align(gold, predicted):
    pred_by_id = {d.id: d for d in predicted}
    if len(pred_by_id) != len(predicted):
        raise AlignmentError("predicted corpus has duplicate document ids")
    gold_ids = [d.id for d in gold]
    extra = sorted(set(pred_by_id) - set(gold_ids))
    if extra:
        raise AlignmentError(f"document {extra[0]} is predicted but has no gold counterpart")
    pairs = []
    for g in gold:
        p = pred_by_id.get(g.id)
        if p is None:
            raise AlignmentError(f"document {g.id} has no predicted counterpart")
        if len(g.sentences) != len(p.sentences):
            raise AlignmentError(
                f"document {g.id}: {len(g.sentences)} gold sentences but {len(p.sentences)} predicted"
            )
        for i, (gs, ps) in enumerate(zip(g.sentences, p.sentences)):
            if gs.text != ps.text:
                raise AlignmentError(f"document {g.id} sentence {i}: texts differ")
            pairs.append((g.id, i, gs, ps))
    return pairs


def _score_sets(gold_items, pred_items, keys):
    out = {}
    for key in keys:
        g = {item for item in gold_items if item[0] == key}
        p = {item for item in pred_items if item[0] == key}
        out[key] = Score(len(g & p), len(p - g), len(g - p))
    return out


def _subsection(value):
    return None if value is None else Subsection(value)


def score_ner(gold, predicted, subsection=None):
    """Strict (span, label) matching of entities, per label and micro-averaged.

    ``subsection`` restricts scoring to sentences of that subsection.
    """
    only = _subsection(subsection)
    gold_items, pred_items = set(), set()
    for doc_id, i, gs, ps in _align(gold, predicted):
        if only is not None and gs.subsection is not only:
            continue
        for e in gs.entities:
            gold_items.add((e.label.value, doc_id, i, e.start, e.end))
        for e in ps.entities:
            pred_items.add((e.label.value, doc_id, i, e.start, e.end))
    seen = {item[0] for item in gold_items | pred_items}
    keys = [label.value for label in SuperconLabel if label.value in seen]
    return EvalReport(_score_sets(gold_items, pred_items, keys), only.value if only else None)


def _link_item(doc_id, i, link):
    s, t = link.source, link.target
    return (link.type.value, doc_id, i, s.start, s.end, s.label.value, t.start, t.end, t.label.value)


def score_links(gold, predicted, subsection=None):
    """Per link type scores; a link is correct when type and both endpoints match exactly."""
    only = _subsection(subsection)
    gold_items, pred_items = set(), set()
    for doc_id, i, gs, ps in _align(gold, predicted):
        if only is not None and gs.subsection is not only:
            continue
        gold_items.update(_link_item(doc_id, i, link) for link in gs.links)
        pred_items.update(_link_item(doc_id, i, link) for link in ps.links)
    seen = {item[0] for item in gold_items | pred_items}
    keys = [lt.value for lt in LinkType if lt.value in seen]
    return EvalReport(_score_sets(gold_items, pred_items, keys), only.value if only else None)


# -- corpus statistics --------------------------------------------------------

def normalize_surface(text):
    return " ".join(text.split())


@dataclass(frozen=True)
class CorpusStats:
    documents: int
    examples: int
    entities: int
    unique_entities: int
    positive_examples: int
    negative_examples: int
    label_counts: dict = field(default_factory=dict)
    unique_counts: dict = field(default_factory=dict)
    out_of_domain: dict = field(default_factory=dict)  # label -> percent, only with a training set
    variability: dict = field(default_factory=dict)  # label -> percent

    def to_dict(self):
        return {
            "documents": self.documents, "examples": self.examples, "entities": self.entities,
            "unique_entities": self.unique_entities, "positive_examples": self.positive_examples,
            "negative_examples": self.negative_examples, "label_counts": dict(self.label_counts),
            "unique_counts": dict(self.unique_counts), "out_of_domain": dict(self.out_of_domain),
            "variability": dict(self.variability),
        }


def _surfaces(docs, normalize):
    by_label = {}
    for doc in docs:
        for sentence in doc.sentences:
            for e in sentence.entities:
                surface = normalize_surface(e.surface) if normalize else e.surface
                by_label.setdefault(e.label.value, []).append(surface)
    return by_label


def corpus_stats(holdout, training=None):
    """Counts for ``holdout``; with ``training``, also the out-of-domain ratio per label.

    Unique entities are counted on the exact surface (case-sensitive); the
    out-of-domain comparison uses whitespace-normalised surfaces.
    """
    examples = positive = 0
    for doc in holdout:
        for sentence in doc.sentences:
            examples += 1
            positive += bool(sentence.entities)
    raw = _surfaces(holdout, normalize=False)
    order = [label.value for label in SuperconLabel if label.value in raw]
    label_counts = {k: len(raw[k]) for k in order}
    unique_counts = {k: len(set(raw[k])) for k in order}
    variability = {k: 100.0 * unique_counts[k] / label_counts[k] for k in order}
    ood = {}
    if training is not None:
        held = _surfaces(holdout, normalize=True)
        seen = _surfaces(training, normalize=True)
        for k in order:
            unique = set(held[k])
            unseen = unique - set(seen.get(k, ()))
            ood[k] = 100.0 * len(unseen) / len(unique)
    return CorpusStats(
        documents=len(holdout),
        examples=examples,
        entities=sum(label_counts.values()),
        unique_entities=sum(unique_counts.values()),
        positive_examples=positive,
        negative_examples=examples - positive,
        label_counts=label_counts,
        unique_counts=unique_counts,
        out_of_domain=ood,
        variability=variability,
    )


# -- end-to-end error tally ---------------------------------------------------

MARK_COLUMNS = ("record_id", "valid", "error_type", "subsection")

_TRUE = {"1", "true", "yes", "y", "valid", "ok"}
_FALSE = {"0", "false", "no", "n", "invalid", "ko"}
_SUBSECTION_ALIASES = {
    "figure": Subsection.FIGURE_CAPTION, "figures": Subsection.FIGURE_CAPTION,
    "figure_captions": Subsection.FIGURE_CAPTION, "table": Subsection.TABLE_CAPTION,
    "tables": Subsection.TABLE_CAPTION, "table_captions": Subsection.TABLE_CAPTION,
    "paragraphs": Subsection.PARAGRAPH,
}

# the exclusion variants reported next to the plain micro average
VARIANTS = (
    ("all", frozenset()),
    ("excl_figures", frozenset({Subsection.FIGURE_CAPTION})),
    ("excl_unknown", frozenset({Subsection.UNKNOWN})),
    ("excl_figures_unknown", frozenset({Subsection.FIGURE_CAPTION, Subsection.UNKNOWN})),
)


class MarkError(ValueError):
    """A marked-records row that cannot be interpreted."""


def _key(text):
    return re.sub(r"[\s\-]+", "_", text.strip().lower())


def parse_subsection(text):
    key = _key(text)
    if key in _SUBSECTION_ALIASES:
        return _SUBSECTION_ALIASES[key]
    return Subsection(key)


@dataclass(frozen=True)
class Mark:
    record_id: str
    valid: bool
    error_type: str | None
    subsection: Subsection


@dataclass(frozen=True)
class ErrorTypeTally:
    counts: dict  # error type -> count, every type present

    def __post_init__(self):
        if tuple(self.counts) != ERROR_TYPES:
            raise ValueError("counts must list exactly the five error types in order")

    @property
    def total(self):
        return sum(self.counts.values())

    def to_dict(self):
        return dict(self.counts)


@dataclass(frozen=True)
class Precision:
    valid: int
    total: int

    @property
    def precision(self):
        return 100.0 * self.valid / self.total if self.total else 0.0

    def to_dict(self):
        return {"precision": self.precision, "valid": self.valid, "support": self.total}


@dataclass(frozen=True)
class ErrorReport:
    tally: ErrorTypeTally
    subsections: dict  # subsection value -> Precision, in enumeration order
    micro: dict  # variant name -> Precision

    def to_dict(self):
        return {
            "error_types": self.tally.to_dict(),
            "subsections": {k: v.to_dict() for k, v in self.subsections.items()},
            "micro": {k: v.to_dict() for k, v in self.micro.items()},
        }


def parse_marks(text):
    """Read the marked-records CSV (header ``record_id,valid,error_type,subsection``)."""
    reader = csv.DictReader(io.StringIO(text, newline=""))
    missing = [c for c in MARK_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise MarkError(f"marked records file lacks columns {missing}")
    marks = []
    for lineno, row in enumerate(reader, 2):
        valid_text = (row["valid"] or "").strip().lower()
        if valid_text in _TRUE:
            valid = True
        elif valid_text in _FALSE:
            valid = False
        else:
            raise MarkError(f"line {lineno}: valid must be true or false, got {row['valid']!r}")
        error_type = _key(row["error_type"] or "") or None
        if error_type is not None and error_type not in ERROR_TYPES:
            raise MarkError(f"line {lineno}: unknown error type {row['error_type']!r}")
        if valid and error_type:
            raise MarkError(f"line {lineno}: a valid record cannot carry an error type")
        if not valid and not error_type:
            raise MarkError(f"line {lineno}: an invalid record needs an error type")
        try:
            subsection = parse_subsection(row["subsection"] or "unknown")
        except ValueError:
            raise MarkError(f"line {lineno}: unknown subsection {row['subsection']!r}") from None
        marks.append(Mark(row["record_id"], valid, error_type, subsection))
    return marks


def load_marks(path):
    with open(path, encoding="utf-8", newline="") as handle:
        return parse_marks(handle.read())


def tally_errors(marks):
    """Error type counts, per-subsection precision and the micro-average variants.

    ``marks`` is a list of :class:`Mark`, CSV text, or a path to a CSV file.
    """
    if isinstance(marks, str):
        marks = load_marks(marks) if "\n" not in marks else parse_marks(marks)
    counts = {t: 0 for t in ERROR_TYPES}
    per = {s: [0, 0] for s in Subsection}
    for mark in marks:
        per[mark.subsection][1] += 1
        if mark.valid:
            per[mark.subsection][0] += 1
        else:
            counts[mark.error_type] += 1
    subsections = {s.value: Precision(*per[s]) for s in Subsection if per[s][1]}
    micro = {}
    for name, excluded in VARIANTS:
        valid = sum(v for s, (v, _) in per.items() if s not in excluded)
        total = sum(t for s, (_, t) in per.items() if s not in excluded)
        micro[name] = Precision(valid, total)
    return ErrorReport(ErrorTypeTally(counts), subsections, micro)
