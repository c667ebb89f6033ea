import itertools
from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from supercon_extract.material import (
    DEFAULT_VARIABLES, DecompositionError, MaterialStructure, analyze_material, classify, decompose_formula,
    default_rules, load_names, name_to_formula, parse_material, parse_rules, parse_stoich,
    substitute_variables,
)


def numeric(formula, variables=DEFAULT_VARIABLES):
    return decompose_formula(formula, variables).numeric()


def test_simple_formulas():
    assert numeric("MgB2") == {"Mg": 1.0, "B": 2.0}
    assert numeric("YBa2Cu3O7")["O"] == 7.0
    assert numeric("Ca(OH)2") == {"Ca": 1.0, "O": 2.0, "H": 2.0}


def test_symbolic_formula_is_unresolved():
    comp = decompose_formula("La 2-x Sr x CuO 4")
    assert not comp.resolved
    assert comp.as_dict() == {"La": "2-x", "Sr": "x", "Cu": 1.0, "O": 4.0}


def test_oxygen_deficiency():
    comp = decompose_formula("Pr1.869Ce0.131CuO4−δ")
    assert comp.as_dict()["O"] == "4-δ" and not comp.resolved


def test_unknown_token_is_reported():
    with pytest.raises(DecompositionError) as info:
        decompose_formula("MgQ2")
    assert info.value.token == "Q2"
    with pytest.raises(DecompositionError):
        decompose_formula("La4Fe2A1-xO7")  # A is only a variable once declared
    assert decompose_formula("La4Fe2A1-xO7", DEFAULT_VARIABLES | {"A"}).placeholders


def test_stoich_arithmetic():
    assert parse_stoich("1-x").substitute({"x": Decimal("0.1")}).render() == "0.9"
    assert parse_stoich("2").render() == "2"
    assert parse_stoich("0.50").render() == "0.5"


def test_parse_material_examples():
    s = parse_material("2% Zn-doped MgB2 single crystal")
    assert (s.doping, s.formula, s.shape) == ("2% Zn-doped", "MgB2", "single crystal")
    s = parse_material("hydrogen")
    assert (s.name, s.formula, s.doping, s.shape) == ("hydrogen", None, None, None)
    s = parse_material("PCCO films onto Pr2CuO4(PCO)/SrTiO3")
    assert (s.name, s.shape, s.substrate) == ("PCCO", "films", "Pr2CuO4(PCO)/SrTiO3")


def test_unparsed_residue_is_fabrication_and_low_confidence():
    s = parse_material("synthesized by MBE method")
    assert s.fabrication and s.low_confidence


def test_name_lookup():
    assert name_to_formula("hydrogen") == "H"
    assert name_to_formula("Carbon") == "C"
    assert name_to_formula("unobtainium") is None
    assert analyze_material("hydrogen").looked_up_formula == "H"


def test_custom_name_table(tmp_path):
    path = tmp_path / "names.tsv"
    path.write_text("unobtainium\tUo\nfoo\t-\n", encoding="utf-8")
    table = load_names(str(path))
    assert name_to_formula("unobtainium", table) == "Uo"
    assert name_to_formula("foo", table) is None


def test_classify_examples():
    assert set(classify(decompose_formula("La2-xSrxCuO4"))) >= {"cuprate", "oxide"}
    assert set(classify(numeric("MgB2"))) >= {"boride", "alloy"}
    assert classify(frozenset()) == ()


def test_classify_is_monotone_in_rules():
    base = default_rules()
    extra = parse_rules("diboride\tall:B min:2 max:2\n")
    for formula in ("MgB2", "La2CuO4", "H3S", "Nb", "FeSe"):
        comp = numeric(formula)
        assert set(classify(comp, base)) <= set(classify(comp, base + extra))


def test_substitution_example():
    s = analyze_material("La 4 Fe 2 A 1-x O 7 (A=Mg,Co; x=0.1,0.2)")
    norm = {"".join(f.split()) for f in s.resolved_formulas}
    assert norm == {"La4Fe2Mg0.9O7", "La4Fe2Mg0.8O7", "La4Fe2Co0.9O7", "La4Fe2Co0.8O7"}


def test_six_assignments():
    s = analyze_material("La2-xSrxCuO4-y (x=0.1,0.2,0.3; y=0,1)")
    expected = {
        f"La{Decimal(2) - Decimal(x)}Sr{x}CuO{4 - y}" for x, y in itertools.product(("0.1", "0.2", "0.3"), (0, 1))
    }
    assert set(s.resolved_formulas) == expected


def test_variable_without_values_stays_symbolic():
    s = MaterialStructure("La2-xSrxCuO4-y", variables=(("x", ("0.1",)),))
    s = MaterialStructure(s.raw, parse_material("La2-xSrxCuO4-y").segments, s.variables)
    results = substitute_variables(s)
    assert len(results) == 1 and not results[0].composition.resolved
    assert results[0].formula == "La1.9Sr0.1CuO4-y"


def test_repeated_variable_values_are_merged():
    s = parse_material("La2-xSrxCuO4 (x=0.1) with x = 0.2")
    assert s.variable_map["x"] == ["0.1", "0.2"]


elements = st.sampled_from(["La", "Sr", "Cu", "O", "Fe", "As", "Ba", "K", "Mg", "B", "Y", "Se"])
amounts = st.sampled_from(["", "2", "0.5", "1.25", "3", "1-x", "x", "2-x", "0.5+x"])


@st.composite
def formulas(draw):
    parts = draw(st.lists(st.tuples(elements, amounts), min_size=1, max_size=5, unique_by=lambda p: p[0]))
    return parts, "".join(el + amt for el, amt in parts)


def _value(text, x):
    if not text:
        return 1.0
    return float(eval(text, {}, {"x": x}))  # the generator only emits + and - over x


@given(formulas(), st.sampled_from(["0.1", "0.25", "0.4"]))
def test_evaluate_matches_substitution(case, x):
    parts, formula = case
    comp = decompose_formula(formula)
    evaluated = comp.evaluate({"x": x})
    assert evaluated.resolved
    expected = {el: _value(amt, float(x)) for el, amt in parts}
    got = dict((s, float(st_.constant)) for s, st_ in evaluated.elements)
    assert set(got) == set(expected)
    for el in expected:
        assert got[el] == pytest.approx(expected[el], abs=1e-9)
    s = MaterialStructure(formula, parse_material(formula).segments, (("x", (x,)),))
    for resolved in substitute_variables(s):
        assert resolved.composition.resolved
        for el, value in resolved.composition.numeric().items():
            assert value == pytest.approx(expected[el], abs=1e-9)


@given(formulas())
def test_render_preserves_elements(case):
    parts, formula = case
    comp = decompose_formula(formula)
    again = decompose_formula(comp.render())
    assert [s for s, _ in again.elements] == [s for s, _ in comp.elements]
    assert again.as_dict() == comp.as_dict()


@given(st.lists(st.sampled_from(["0.1", "0.2", "0.3", "0.4"]), min_size=1, max_size=3, unique=True),
       st.lists(st.sampled_from(["Mg", "Co", "Ni", "Zn"]), min_size=1, max_size=3, unique=True))
def test_cartesian_completeness(xs, subs):
    s = parse_material(f"La4Fe2A1-xO7 (A={','.join(subs)}; x={','.join(xs)})")
    results = substitute_variables(s)
    assert len(results) == len(xs) * len(subs)
    assert len({r.formula for r in results}) == len(results)
