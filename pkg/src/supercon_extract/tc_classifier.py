"""Rule-based decision whether a temperature is a superconducting Tc.

Evidence is collected from the sentence: ``tc`` entities and standard
acceptance terms on one side, rejection terms (other transition
temperatures, transition widths, relative values, negations) on the other.
Evidence in the candidate's own clause is preferred; within that scope the
closest item decides and a rejection wins ties.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .linker import default_penalties
from .material import _read_data
from .model import SuperconLabel

LINKED_TC_EXPRESSION = "linked_tc_expression"
STANDARD_TERM = "standard_term"
REJECTED_NON_TC_KEYWORD = "rejected_non_tc_keyword"
REJECTED_RELATIVE = "rejected_relative"
REJECTED_WIDTH = "rejected_width"
REJECTED_NEGATION = "rejected_negation"
NO_EVIDENCE = "no_evidence"

REASONS = (
    LINKED_TC_EXPRESSION, STANDARD_TERM, REJECTED_NON_TC_KEYWORD,
    REJECTED_RELATIVE, REJECTED_WIDTH, REJECTED_NEGATION, NO_EVIDENCE,
)
ACCEPTING = frozenset({LINKED_TC_EXPRESSION, STANDARD_TERM})

_CATEGORY_REASON = {
    "non_tc": REJECTED_NON_TC_KEYWORD,
    "relative": REJECTED_RELATIVE,
    "width": REJECTED_WIDTH,
    "negation": REJECTED_NEGATION,
}
CATEGORIES = ("accept",) + tuple(_CATEGORY_REASON)


@dataclass(frozen=True)
class TcDecision:
    accepted: bool
    reason: str

    def __post_init__(self):
        if self.reason not in REASONS:
            raise ValueError(f"unknown reason {self.reason!r}")
        if self.accepted != (self.reason in ACCEPTING):
            raise ValueError("accepted must agree with the reason")


@dataclass(frozen=True)
class TermLists:
    """Compiled term lists; ``window`` bounds the evidence distance in characters."""

    patterns: tuple  # ((compiled regex, category), ...)
    window: int | None = None


def _term_regex(term):
    body = r"\s*".join(re.escape(part) for part in term.split())
    return re.compile(rf"(?<![\w]){body}(?![\w])", re.IGNORECASE)


def parse_terms(text, window=None):
    patterns = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[1].strip() not in CATEGORIES:
            raise ValueError(f"tc term line {lineno}: expected term<TAB>{{{','.join(CATEGORIES)}}}")
        patterns.append((_term_regex(parts[0].strip()), parts[1].strip()))
    return TermLists(tuple(patterns), window)


def load_terms(path=None, window=None):
    return parse_terms(_read_data(path, "tc_terms.tsv"), window)


_DEFAULT_TERMS = None


def default_terms():
    global _DEFAULT_TERMS
    if _DEFAULT_TERMS is None:
        _DEFAULT_TERMS = load_terms()
    return _DEFAULT_TERMS


def _gap(a_start, a_end, b_start, b_end):
    if a_end <= b_start:
        return b_start - a_end
    if b_end <= a_start:
        return a_start - b_end
    return 0


def classify_tc(candidate, sentence, terms=None, penalties=None):
    """Decide whether a ``tcValue`` entity is a superconducting critical temperature.

    Evidence in the candidate's own clause (no penalty token in between) is
    considered first; only when there is none does evidence elsewhere in the
    sentence count.
    """
    if candidate.label is not SuperconLabel.TC_VALUE:
        raise ValueError("classify_tc expects a tcValue entity")
    terms = terms if terms is not None else default_terms()
    text = sentence.text
    rejections = []
    acceptances = []
    for regex, category in terms.patterns:
        for match in regex.finditer(text):
            start, end = match.start(), match.end()
            if start < candidate.end and candidate.start < end:
                continue  # terms inside the candidate itself say nothing
            if category == "accept":
                acceptances.append((start, end, STANDARD_TERM))
            else:
                rejections.append((start, end, _CATEGORY_REASON[category]))
    for entity in sentence.entities:
        if entity.label is SuperconLabel.TC:
            acceptances.append((entity.start, entity.end, LINKED_TC_EXPRESSION))
    # acceptance evidence swallowed by a rejection phrase ("ΔTc", "no superconductivity") does not count
    acceptances = [
        a for a in acceptances
        if not any(r[0] < a[1] and a[0] < r[1] for r in rejections)
    ]

    penalties = penalties if penalties is not None else default_penalties()
    own = (candidate.start, candidate.end)

    def nearest(items, same_clause):
        best = None
        for start, end, reason in items:
            if same_clause and penalties.between(text, (start, end), own):
                continue
            d = _gap(start, end, candidate.start, candidate.end)
            if terms.window is not None and d > terms.window:
                continue
            # tc entities beat standard terms at equal distance; then leftmost
            key = (d, reason != LINKED_TC_EXPRESSION, start)
            if best is None or key < best[0]:
                best = (key, reason)
        return best

    # evidence in the candidate's own clause takes precedence over evidence
    # across a separator such as ",", "while" or "and"
    rej = nearest(rejections, True)
    acc = nearest(acceptances, True)
    if rej is None and acc is None:
        rej = nearest(rejections, False)
        acc = nearest(acceptances, False)
    if rej is not None and (acc is None or rej[0][0] <= acc[0][0]):
        return TcDecision(False, rej[1])
    if acc is not None:
        return TcDecision(True, acc[1])
    return TcDecision(False, NO_EVIDENCE)


def accepted_tc_values(sentence, terms=None, penalties=None):
    """The tcValue entities of a sentence that pass :func:`classify_tc`."""
    return [
        e for e in sentence.entities
        if e.label is SuperconLabel.TC_VALUE and classify_tc(e, sentence, terms, penalties).accepted
    ]
