import os

import pytest
from hypothesis import given, strategies as st

from helpers import document, sentence
from supercon_extract.evaluation import (
    ERROR_TYPES, AlignmentError, ErrorTypeTally, MarkError, corpus_stats, parse_subsection, prf, score_links,
    score_ner, tally_errors,
)
from supercon_extract.model import Entity, Link, LinkType, Sentence, Span, SuperconLabel, Subsection

MARKS = os.path.join(os.path.dirname(__file__), "fixtures", "subsection_marks.csv")
TEXT = "MgB2 and FeSe and NbN and Nb3Sn are studied at 39 K."


def ner_doc(*pieces, doc_id="d"):
    return document(doc_id, sentence(TEXT, *pieces))


GOLD = [("MgB2", "material"), ("FeSe", "material"), ("NbN", "material"), ("Nb3Sn", "material")]


# -- NER -----------------------------------------------------------------------

def test_perfect_prediction():
    report = score_ner([ner_doc(*GOLD)], [ner_doc(*GOLD)])
    m = report.micro
    assert (m.precision, m.recall, m.f1) == (100.0, 100.0, 100.0)


def test_two_of_three_against_four():
    predicted = ner_doc(("MgB2", "material"), ("FeSe", "material"), ("39 K", "material"))
    m = score_ner([ner_doc(*GOLD)], [predicted]).micro
    assert (m.tp, m.fp, m.fn) == (2, 1, 2)
    assert round(m.precision, 2) == 66.67
    assert round(m.recall, 2) == 50.00
    assert round(m.f1, 2) == 57.14


def test_empty_prediction_scores_zero():
    m = score_ner([ner_doc(*GOLD)], [ner_doc()]).micro
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)
    assert m.support == 4


def test_label_must_match():
    m = score_ner([ner_doc(("39 K", "tcValue"))], [ner_doc(("39 K", "pressure"))]).micro
    assert (m.tp, m.fp, m.fn) == (0, 1, 1)


def test_span_must_match_exactly():
    gold = document("d", sentence(TEXT, ("39 K", "tcValue")))
    start = TEXT.index("39 K")
    shifted = Entity(Span(start, start + 2), SuperconLabel.TC_VALUE, "39")
    pred = document("d", Sentence(TEXT, entities=(shifted,)))
    assert score_ner([gold], [pred]).micro.tp == 0


def test_subsection_filter():
    gold = document("d", sentence(TEXT, *GOLD), sentence(TEXT, *GOLD, subsection="abstract"))
    pred = document("d", sentence(TEXT, *GOLD), sentence(TEXT, subsection="abstract"))
    assert score_ner([gold], [pred], "abstract").micro.recall == 0.0
    assert score_ner([gold], [pred], "paragraph").micro.recall == 100.0


def test_micro_average_pools_counts():
    gold = ner_doc(*GOLD, ("39 K", "tcValue"))
    pred = ner_doc(("MgB2", "material"), ("39 K", "tcValue"), ("FeSe", "tcValue"))
    report = score_ner([gold], [pred])
    tp = sum(s.tp for s in report.labels.values())
    fp = sum(s.fp for s in report.labels.values())
    assert report.micro.precision == pytest.approx(100.0 * tp / (tp + fp))
    assert list(report.labels) == ["material", "tcValue"]


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_swapping_gold_and_prediction_swaps_p_and_r(tp, fp, fn):
    p, r, f = prf(tp, fp, fn)
    p2, r2, f2 = prf(tp, fn, fp)
    assert (p, r) == (r2, p2)
    assert f == pytest.approx(f2)
    assert 0 <= min(p, r, f) and max(p, r, f) <= 100
    assert min(p, r) - 1e-9 <= f <= max(p, r) + 1e-9


def test_alignment_errors_name_the_problem():
    with pytest.raises(AlignmentError, match="document x has no predicted"):
        score_ner([ner_doc(doc_id="x")], [])
    with pytest.raises(AlignmentError, match="document x"):
        score_ner([ner_doc(doc_id="x")], [document("x", sentence("Other text."))])
    with pytest.raises(AlignmentError, match="sentences"):
        score_ner([ner_doc(doc_id="x")], [document("x")])


# -- links ---------------------------------------------------------------------

def link_doc(pairs, doc_id="d"):
    s = sentence(TEXT, *GOLD, ("39 K", "tcValue"))
    by_surface = {e.surface: e for e in s.entities}
    links = tuple(Link(LinkType.MATERIAL_TCVALUE, by_surface[a], by_surface[b], "distance") for a, b in pairs)
    return document(doc_id, Sentence(s.text, entities=s.entities, links=links))


def test_link_scores():
    gold = link_doc([("MgB2", "39 K"), ("FeSe", "39 K")])
    pred = link_doc([("MgB2", "39 K"), ("NbN", "39 K")])
    score = score_links([gold], [pred]).labels["material_tcValue"]
    assert (score.tp, score.fp, score.fn) == (1, 1, 1)


def test_link_endpoint_off_by_one_is_wrong():
    gold = link_doc([("MgB2", "39 K")])
    pred = link_doc([])
    s = pred.sentences[0]
    mgb2 = next(e for e in s.entities if e.surface == "MgB2")
    tc = next(e for e in s.entities if e.surface == "39 K")
    shifted = Entity(Span(tc.start, tc.end + 1), tc.label, TEXT[tc.start:tc.end + 1])
    broken = Sentence(s.text, entities=s.entities, links=(Link(LinkType.MATERIAL_TCVALUE, mgb2, shifted, "x"),))
    m = score_links([gold], [document("d", broken)]).micro
    assert (m.tp, m.fp, m.fn) == (0, 1, 1)


def test_link_scores_at_scale():
    # 90 gold links over 30 sentences; the prediction keeps 60 and adds 15 wrong ones
    golds, preds = [], []
    for n in range(30):
        golds.append(link_doc([("MgB2", "39 K"), ("FeSe", "39 K"), ("NbN", "39 K")], doc_id=f"d{n}"))
        keep = [("MgB2", "39 K"), ("FeSe", "39 K")]
        extra = [("Nb3Sn", "39 K")] if n % 2 else []
        preds.append(link_doc(keep + extra, doc_id=f"d{n}"))
    m = score_links(golds, preds).micro
    assert (m.tp, m.fp, m.fn) == (60, 15, 30)
    assert m.precision == pytest.approx(80.0)
    assert m.recall == pytest.approx(200 / 3)


# -- corpus statistics ---------------------------------------------------------

def test_corpus_stats_counts():
    holdout = [document("h", sentence(TEXT, *GOLD, ("39 K", "tcValue")), sentence("Nothing here."))]
    stats = corpus_stats(holdout)
    assert (stats.examples, stats.positive_examples, stats.negative_examples) == (2, 1, 1)
    assert stats.label_counts == {"material": 4, "tcValue": 1}
    assert stats.entities == 5 and stats.unique_entities == 5
    assert stats.out_of_domain == {}


def _surfaces_doc(doc_id, surfaces):
    text = " ; ".join(surfaces) + "."
    return document(doc_id, sentence(text, *((s, "material") for s in surfaces)))


def test_out_of_domain_extremes():
    held = _surfaces_doc("h", ["MgB2", "FeSe"])
    assert corpus_stats([held], [held]).out_of_domain["material"] == 0.0
    assert corpus_stats([held], [_surfaces_doc("t", ["NbN"])]).out_of_domain["material"] == 100.0
    seven = _surfaces_doc("h", [f"M{n}X" for n in range(10)])
    known = _surfaces_doc("t", [f"M{n}X" for n in range(3)])
    assert corpus_stats([seven], [known]).out_of_domain["material"] == pytest.approx(70.0)


def test_unique_counts_are_case_sensitive():
    s = sentence("MgB2 ; mgb2 ; MgB2.", ("MgB2", "material"), ("mgb2", "material"), ("MgB2", "material", 1))
    stats = corpus_stats([document("h", s)])
    assert stats.label_counts["material"] == 3 and stats.unique_counts["material"] == 2


# -- error tally ---------------------------------------------------------------

HEADER = "record_id,valid,error_type,subsection\n"


def test_all_valid():
    report = tally_errors(HEADER + "1,true,,paragraph\n2,yes,,abstract\n")
    assert report.micro["all"].precision == 100.0
    assert report.tally.total == 0


def test_one_of_two():
    report = tally_errors(HEADER + "1,true,,paragraph\n2,false,linking,paragraph\n")
    assert report.micro["all"].precision == 50.0
    assert report.tally.counts["linking"] == 1
    assert list(report.tally.counts) == list(ERROR_TYPES)


@pytest.mark.parametrize("row,message", [
    ("1,false,typo,paragraph", "unknown error type"),
    ("1,true,linking,paragraph", "valid record"),
    ("1,false,,paragraph", "needs an error type"),
    ("1,maybe,,paragraph", "valid must be"),
    ("1,true,,appendix", "unknown subsection"),
])
def test_bad_marks(row, message):
    with pytest.raises(MarkError, match=message):
        tally_errors(HEADER + row + "\n")


def test_missing_columns():
    with pytest.raises(MarkError, match="lacks columns"):
        tally_errors("record_id,valid\n1,true\n")


def test_tally_requires_every_type():
    with pytest.raises(ValueError):
        ErrorTypeTally({"linking": 1})


def test_subsection_aliases():
    assert parse_subsection("Figures") is Subsection.FIGURE_CAPTION
    assert parse_subsection("figure caption") is Subsection.FIGURE_CAPTION
    assert parse_subsection("Paragraph") is Subsection.PARAGRAPH


def test_marks_fixture_totals():
    report = tally_errors(MARKS)
    assert {k: (v.valid, v.total) for k, v in report.subsections.items()} == {
        "title": (2, 2), "abstract": (49, 61), "paragraph": (469, 623),
        "figure_caption": (83, 140), "unknown": (12, 21),
    }
    assert report.tally.total == 847 - 615
