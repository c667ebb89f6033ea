"""Rule-based linking of entities inside one sentence.

Two candidates are linked directly.  With more candidates, a sentence that
contains "respectively" is linked by position (order linking); otherwise each
target goes to the source whose centroid is nearest (distance linking).

Centroids are the 1-based position of the middle character of a span (the
right one of the two middle characters for even lengths), i.e.
``(start + end) // 2 + 1`` for a half-open ``[start, end)`` span.  An entity
enclosed in parentheses is measured from the whole parenthesised group, and
the distance doubles when a penalty token sits between the two entities.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .material import _read_data
from .model import Link, LinkType, SuperconLabel

PAIR_RULE = "pair_rule"
ORDER_LINKING = "order_linking"
DISTANCE_LINKING = "distance_linking"

_RESPECTIVELY_RE = re.compile(r"(?<!\w)respectively(?!\w)", re.IGNORECASE)


class Penalties:
    """Tokens that mark a logical break between two entities."""

    def __init__(self, tokens):
        self.tokens = tuple(tokens)
        parts = []
        for tok in self.tokens:
            if tok == ".":
                parts.append(r"(?<!\d)\.|\.(?!\d)")  # a decimal point is not a break
            elif re.fullmatch(r"\w+", tok):
                parts.append(rf"(?<!\w){re.escape(tok)}(?!\w)")
            else:
                parts.append(re.escape(tok))
        self._regex = re.compile("|".join(parts), re.IGNORECASE) if parts else None

    def found_in(self, text):
        return self._regex is not None and self._regex.search(text) is not None

    def between(self, text, a, b):
        """True when a penalty token occurs strictly between spans ``a`` and ``b``."""
        lo, hi = (a, b) if a[0] <= b[0] else (b, a)
        return self.found_in(text[lo[1]:hi[0]])


def parse_penalties(text):
    tokens = []
    for line in text.splitlines():
        token = line.strip()
        if token and not token.startswith("#"):
            tokens.append(token)
    return Penalties(tokens)


def load_penalties(path=None):
    return parse_penalties(_read_data(path, "penalties.txt"))


_DEFAULT_PENALTIES = None


def default_penalties():
    global _DEFAULT_PENALTIES
    if _DEFAULT_PENALTIES is None:
        _DEFAULT_PENALTIES = load_penalties()
    return _DEFAULT_PENALTIES


def centroid(start, end):
    return (start + end) // 2 + 1


def _paren_pairs(text):
    pairs = []
    stack = []
    for i, ch in enumerate(text):
        if ch == "(":
            stack.append(i)
        elif ch == ")" and stack:
            pairs.append((stack.pop(), i + 1))
    return pairs


def expand_span(text, start, end, pairs=None):
    """Widen ``[start, end)`` to the innermost parenthesised group enclosing it."""
    pairs = _paren_pairs(text) if pairs is None else pairs
    best = None
    for open_at, close_end in pairs:
        if open_at < start and end < close_end:
            if best is None or close_end - open_at < best[1] - best[0]:
                best = (open_at, close_end)
    return best if best is not None else (start, end)


@dataclass(frozen=True)
class Distance:
    raw: int
    expanded: int
    penalized: bool

    @property
    def adjusted(self):
        return self.expanded * 2 if self.penalized else self.expanded


def measure(text, source, target, penalties=None, pairs=None):
    """Centroid distances between two entities (or ``(start, end)`` tuples)."""
    penalties = penalties if penalties is not None else default_penalties()
    pairs = _paren_pairs(text) if pairs is None else pairs
    a = _bounds(source)
    b = _bounds(target)
    raw = abs(centroid(*a) - centroid(*b))
    ea = expand_span(text, *a, pairs=pairs)
    eb = expand_span(text, *b, pairs=pairs)
    expanded = abs(centroid(*ea) - centroid(*eb))
    return Distance(raw, expanded, penalties.between(text, a, b))


def _bounds(item):
    if isinstance(item, tuple):
        return item
    return (item.start, item.end)


def _link_type_for(sources, targets):
    labels = (sources[0].label, targets[0].label)
    for lt in LinkType:
        if lt.endpoints == labels:
            return lt
    raise ValueError(f"no link type between {labels[0].value} and {labels[1].value}")


def order_link(sources, targets, link_type=None):
    """Pair the i-th source with the i-th target, in textual order."""
    if not sources or not targets:
        return []
    link_type = link_type or _link_type_for(sources, targets)
    sources = sorted(sources, key=lambda e: e.start)
    targets = sorted(targets, key=lambda e: e.start)
    return [Link(link_type, s, t, ORDER_LINKING) for s, t in zip(sources, targets)]


def distance_link(text, sources, targets, penalties=None, link_type=None):
    """Link every target to the source with the smallest adjusted distance.

    Ties go to the leftmost source.
    """
    if not sources or not targets:
        return []
    link_type = link_type or _link_type_for(sources, targets)
    penalties = penalties if penalties is not None else default_penalties()
    pairs = _paren_pairs(text)
    ordered = sorted(sources, key=lambda e: (e.start, e.end))
    links = []
    for target in sorted(targets, key=lambda e: (e.start, e.end)):
        best = None
        for source in ordered:
            d = measure(text, source, target, penalties, pairs).adjusted
            if best is None or d < best[0]:
                best = (d, source)
        links.append(Link(link_type, best[1], target, DISTANCE_LINKING, best[0]))
    return links


def candidates(sentence, link_type, accepted=None):
    """Source and target entities of a sentence for one link type.

    ``accepted`` restricts the tcValue entities that may take part; None
    keeps all of them.
    """
    src_label, tgt_label = link_type.endpoints

    def pick(label):
        found = [e for e in sentence.entities if e.label is label]
        if label is SuperconLabel.TC_VALUE and accepted is not None:
            keys = {e.key for e in accepted}
            found = [e for e in found if e.key in keys]
        return found

    return pick(src_label), pick(tgt_label)


def link_sentence(sentence, link_type, accepted=None, penalties=None):
    sources, targets = candidates(sentence, link_type, accepted)
    if not sources or not targets:
        return []
    if len(sources) == 1 and len(targets) == 1:
        return [Link(link_type, sources[0], targets[0], PAIR_RULE)]
    if _RESPECTIVELY_RE.search(sentence.text):
        return order_link(sources, targets, link_type)
    return distance_link(sentence.text, sources, targets, penalties, link_type)


def link_all(sentence, accepted=None, penalties=None):
    links = []
    for link_type in LinkType:
        links.extend(link_sentence(sentence, link_type, accepted, penalties))
    return links
