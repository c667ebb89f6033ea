"""Rule-based sentence segmentation that never splits inside a reference callout."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .elements import ELEMENTS
from .model import Sentence, Subsection

NUMERIC = "numeric"
AUTHOR_YEAR = "author_year"

ABBREVIATIONS = frozenset({
    "et.", "al.", "fig.", "figs.", "e.g.", "i.e.", "vs.", "cf.", "ref.", "refs.", "eq.", "eqs.",
    "no.", "nos.", "approx.", "ca.", "resp.", "dr.", "prof.", "tab.", "sec.", "ch.", "vol.", "pp.",
    "etc.",  # usually sentence-final, but splitting after it is the riskier error
})


@dataclass(frozen=True, order=True)
class ReferenceMarker:
    start: int
    end: int
    style: str = NUMERIC


_BRACKET_RE = re.compile(r"\[\s*\d+[^\[\]]{0,40}?\]")
_AUTHOR_RE = re.compile(
    r"(?<![\w-])[A-Z][\w'\-]+(?:\s+(?:and|&)\s+[A-Z][\w'\-]+)?\s+et\.?\s*al\.?"
    r"(?:,?\s*(?:\(\s*\d{4}[a-z]?\s*\)|\[\s*\d+[^\[\]]{0,20}\]|\d{4}[a-z]?))?"
)


def detect_reference_markers(paragraph):
    """Find bracketed numeric citations and ``Name et al. (year)`` callouts."""
    found = []
    for match in _BRACKET_RE.finditer(paragraph):
        found.append(ReferenceMarker(match.start(), match.end(), NUMERIC))
    for match in _AUTHOR_RE.finditer(paragraph):
        found.append(ReferenceMarker(match.start(), match.end(), AUTHOR_YEAR))
    found.sort()
    merged = []
    for marker in found:
        if merged and marker.start < merged[-1].end:
            last = merged[-1]
            if marker.end > last.end:
                merged[-1] = ReferenceMarker(last.start, marker.end, last.style)
            continue
        merged.append(marker)
    return merged


_CANDIDATE_RE = re.compile(r"[.!?]+[\"')\]]*(?=\s+[\"'(\[]?[A-Z0-9])")


def _blocked_token(paragraph, stop):
    """True when the word ending at ``stop`` (the terminator) is an abbreviation."""
    start = stop
    while start > 0 and not paragraph[start - 1].isspace():
        start -= 1
    word = paragraph[start:stop + 1].lstrip("([\"'")
    if word.lower() in ABBREVIATIONS:
        return True
    bare = word.rstrip(".")
    before = paragraph[:start].rstrip().rsplit(None, 1)
    if before and re.fullmatch(r"[-−]?\d+(?:[.,]\d+)?", before[-1]):
        return False  # a unit after a number: "39 K."
    if 1 <= len(bare) <= 2 and bare in ELEMENTS:
        return True
    return False


def segment(paragraph, markers=()):
    """Return ``(start, end)`` spans that partition ``paragraph`` into sentences.

    Each span runs from the first character of a sentence to the first
    character of the next one, so trailing whitespace stays with the sentence
    it follows and the spans concatenate back to the input.  A candidate
    boundary strictly inside a marker is dropped.
    """
    if not paragraph:
        return []
    for m in markers:
        if m.start < 0 or m.end > len(paragraph):
            raise ValueError(f"marker [{m.start}, {m.end}) outside paragraph")
    boundaries = []
    for match in _CANDIDATE_RE.finditer(paragraph):
        if paragraph[match.start()] == "." and _blocked_token(paragraph, match.start()):
            continue
        nxt = match.end()
        while nxt < len(paragraph) and paragraph[nxt].isspace():
            nxt += 1
        if any(m.start < nxt < m.end or m.start < match.end() <= m.end - 1 for m in markers):
            continue
        boundaries.append(nxt)
    spans = []
    start = 0
    for b in boundaries:
        if b > start:
            spans.append((start, b))
            start = b
    if start < len(paragraph):
        spans.append((start, len(paragraph)))
    return spans


def split_sentences(paragraph, markers=None, offset=0, subsection=Subsection.PARAGRAPH):
    """Segment a paragraph into :class:`Sentence` objects with trailing space trimmed."""
    if markers is None:
        markers = detect_reference_markers(paragraph)
    sentences = []
    for start, end in segment(paragraph, markers):
        text = paragraph[start:end].rstrip()
        lead = len(text) - len(text.lstrip())
        text = text.strip()
        if text:
            sentences.append(Sentence(text=text, offset=offset + start + lead, subsection=subsection))
    return sentences


def split_document(text):
    """Split raw text into paragraphs (blank-line separated) and sentences."""
    sentences = []
    for match in re.finditer(r"\S(?:.|\n(?!\s*\n))*", text):
        sentences.extend(split_sentences(match.group(0), offset=match.start()))
    return sentences
