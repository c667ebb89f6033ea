import pytest

from helpers import sentence
from supercon_extract.model import Sentence, SuperconLabel
from supercon_extract.tagger import tag
from supercon_extract.tc_classifier import (
    LINKED_TC_EXPRESSION, NO_EVIDENCE, REJECTED_NEGATION, REJECTED_NON_TC_KEYWORD, REJECTED_RELATIVE,
    REJECTED_WIDTH, STANDARD_TERM, TcDecision, accepted_tc_values, classify_tc, parse_terms,
)


def decide(text, value):
    s = Sentence(text)
    s = Sentence(text, entities=tuple(tag(s)))
    [candidate] = [e for e in s.entities if e.label is SuperconLabel.TC_VALUE and e.surface == value]
    return classify_tc(candidate, s)


@pytest.mark.parametrize("text,value,accepted,reason", [
    ("MgB2 superconducts at 39 K", "39 K", True, LINKED_TC_EXPRESSION),
    ("The sample was annealed at 400 K for two hours", "400 K", False, REJECTED_NON_TC_KEYWORD),
    ("The Curie temperature is 300 K", "300 K", False, REJECTED_NON_TC_KEYWORD),
    ("The width ΔTc = 2 K is small", "2 K", False, REJECTED_WIDTH),
    ("We found that at 70 K there is no superconductivity", "70 K", False, REJECTED_NEGATION),
    ("Its transition is 1 K higher than material X", "1 K", False, REJECTED_RELATIVE),
    ("Measurements were done at 300 K", "300 K", False, NO_EVIDENCE),
])
def test_examples(text, value, accepted, reason):
    assert decide(text, value) == TcDecision(accepted, reason)


def test_standard_term_without_tc_entity():
    s = sentence("The critical temperature of the film is 9 K", ("9 K", "tcValue"))
    assert classify_tc(s.entities[0], s) == TcDecision(True, STANDARD_TERM)


def test_clause_scoping():
    text = "The Curie temperature is 300 K while Tc = 20 K"
    assert not decide(text, "300 K").accepted
    assert decide(text, "20 K").accepted


def test_accepted_values_filter():
    s = sentence("Tc = 20 K after annealing at 600 K", ("Tc =", "tc"), ("20 K", "tcValue"), ("600 K", "tcValue"))
    assert [e.surface for e in accepted_tc_values(s)] == ["20 K"]


def test_window_limits_standard_terms():
    terms = parse_terms("critical temperature\taccept\n", window=5)
    s = sentence("The critical temperature was measured long ago and is 9 K", ("9 K", "tcValue"))
    assert classify_tc(s.entities[0], s, terms).reason == NO_EVIDENCE


def test_decision_invariant():
    with pytest.raises(ValueError):
        TcDecision(True, REJECTED_WIDTH)
    with pytest.raises(ValueError):
        classify_tc(sentence("MgB2", ("MgB2", "material")).entities[0], sentence("MgB2"))
