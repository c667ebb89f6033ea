"""Small builders shared by the test modules."""

from supercon_extract.model import AnnotatedDocument, Entity, Sentence, Span, SuperconLabel


def entity(text, surface, label, occurrence=0):
    """Entity for the ``occurrence``-th appearance of ``surface`` in ``text``."""
    start = -1
    for _ in range(occurrence + 1):
        start = text.index(surface, start + 1)
    return Entity(Span(start, start + len(surface)), SuperconLabel(label), surface)


def sentence(text, *pieces, **kwargs):
    """``pieces`` are ``(surface, label)`` or ``(surface, label, occurrence)`` tuples."""
    ents = sorted((entity(text, *p) for p in pieces), key=lambda e: (e.start, e.end))
    return Sentence(text, entities=tuple(ents), **kwargs)


def document(doc_id, *sentences, **kwargs):
    return AnnotatedDocument(doc_id, tuple(sentences), **kwargs)
