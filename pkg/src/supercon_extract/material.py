"""Material mention parsing: segmentation, formula decomposition, lookup,
classification and substitution-variable expansion.

A material mention such as ``"2% Zn-doped MgB2 single crystal"`` is split into
labelled segments (name, formula, doping, shape, variable, value, substrate,
fabrication).  Formulas are decomposed into compositions whose stoichiometries
may be symbolic (``"1-x"``); substituting variable values produces resolved
formulas.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from importlib import resources

from .elements import ELEMENTS, GROUPS

DEFAULT_VARIABLES = frozenset({"x", "y", "z", "δ"})

# Labels of the material layer; kept as plain strings, validated by model.MaterialLabel.
NAME = "name"
FORMULA = "formula"
DOPING = "doping"
SHAPE = "shape"
VARIABLE = "variable"
VALUE = "value"
SUBSTRATE = "substrate"
FABRICATION = "fabrication"


class DecompositionError(ValueError):
    """A formula contains a token that is not an element, number or variable."""

    def __init__(self, token, position, formula):
        super().__init__(f"unexpected token {token!r} at position {position} in formula {formula!r}")
        self.token = token
        self.position = position
        self.formula = formula


def _fmt(number):
    """Render a Decimal without exponent or trailing zeros."""
    if number == number.to_integral_value():
        return str(int(number))
    text = format(number.normalize(), "f")
    return text.rstrip("0").rstrip(".") if "." in text else text


@dataclass(frozen=True)
class Stoich:
    """Linear stoichiometry ``constant + sum(coefficient * variable)``."""

    constant: Decimal = Decimal(0)
    terms: tuple = ()  # sorted ((variable, coefficient), ...), no zero coefficients

    @classmethod
    def number(cls, value):
        return cls(Decimal(value))

    @classmethod
    def variable(cls, name, coefficient=Decimal(1)):
        return cls(Decimal(0), ((name, Decimal(coefficient)),))

    @property
    def is_numeric(self):
        return not self.terms

    @property
    def variables(self):
        return frozenset(name for name, _ in self.terms)

    def __add__(self, other):
        merged = dict(self.terms)
        for name, coeff in other.terms:
            merged[name] = merged.get(name, Decimal(0)) + coeff
        terms = tuple(sorted((n, c) for n, c in merged.items() if c != 0))
        return Stoich(self.constant + other.constant, terms)

    def scale(self, factor):
        factor = Decimal(factor)
        terms = tuple((n, c * factor) for n, c in self.terms if c * factor != 0)
        return Stoich(self.constant * factor, terms)

    def multiply(self, other):
        if self.is_numeric:
            return other.scale(self.constant)
        if other.is_numeric:
            return self.scale(other.constant)
        raise ValueError("product of two symbolic stoichiometries is not linear")

    def substitute(self, assignment):
        """Replace variables that have a numeric value in ``assignment``."""
        constant = self.constant
        terms = []
        for name, coeff in self.terms:
            if name in assignment:
                constant += coeff * Decimal(assignment[name])
            else:
                terms.append((name, coeff))
        return Stoich(constant, tuple(terms))

    def value(self):
        if self.terms:
            raise ValueError(f"stoichiometry {self.render()} is symbolic")
        return self.constant

    def render(self):
        parts = []
        if self.constant != 0 or not self.terms:
            parts.append(_fmt(self.constant))
        for name, coeff in self.terms:
            sign = "-" if coeff < 0 else "+"
            mag = abs(coeff)
            text = name if mag == 1 else f"{_fmt(mag)}{name}"
            if not parts:
                parts.append(text if sign == "+" else f"-{text}")
            else:
                parts.append(f"{sign}{text}")
        return "".join(parts)

    def __str__(self):
        return self.render()


_TERM_RE = re.compile(r"(?P<num>\d+(?:\.\d+)?|\.\d+)?(?P<var>[A-Za-zδε]+)?")


def parse_stoich(text, variables=DEFAULT_VARIABLES):
    """Parse a stoichiometry expression like ``"2-x"``, ``"4−δ"`` or ``"0.131"``."""
    cleaned = text.replace("−", "-").replace("–", "-").replace(" ", "")
    if not cleaned:
        raise ValueError("empty stoichiometry")
    total = Stoich()
    pos = 0
    sign = Decimal(1)
    if cleaned[0] in "+-":
        sign = Decimal(-1) if cleaned[0] == "-" else Decimal(1)
        pos = 1
    while True:
        match = _TERM_RE.match(cleaned, pos)
        num, var = match.group("num"), match.group("var")
        if not num and not var:
            raise ValueError(f"bad stoichiometry {text!r}")
        if var is not None and var not in variables:
            raise ValueError(f"unknown variable {var!r} in {text!r}")
        coeff = Decimal(num) if num else Decimal(1)
        term = Stoich.variable(var, coeff * sign) if var else Stoich.number(coeff * sign)
        total = total + term
        pos = match.end()
        if pos == len(cleaned):
            return total
        if cleaned[pos] not in "+-":
            raise ValueError(f"bad stoichiometry {text!r}")
        sign = Decimal(-1) if cleaned[pos] == "-" else Decimal(1)
        pos += 1


@dataclass(frozen=True)
class Composition:
    """Element to stoichiometry map.

    ``placeholders`` holds substitution variables standing in for an element
    (the ``A`` of ``La4Fe2A1-xO7``); a composition with placeholders or any
    symbolic stoichiometry is unresolved.
    """

    elements: tuple = ()  # ((symbol, Stoich), ...) in first-appearance order
    placeholders: tuple = ()

    @property
    def resolved(self):
        if self.placeholders:
            return False
        return all(s.is_numeric for _, s in self.elements)

    def as_dict(self):
        """Numeric stoichiometries as floats, symbolic ones as strings."""
        out = {}
        for symbol, stoich in self.elements + self.placeholders:
            out[symbol] = float(stoich.constant) if stoich.is_numeric else stoich.render()
        return out

    def numeric(self):
        """Element -> float, dropping zero entries.  Only for resolved compositions."""
        if not self.resolved:
            raise ValueError("composition is not resolved")
        return {s: float(st.constant) for s, st in self.elements if st.constant != 0}

    def element_set(self):
        return frozenset(
            s for s, st in self.elements if not (st.is_numeric and st.constant == 0)
        )

    def evaluate(self, assignment):
        """Evaluate symbolic stoichiometries and placeholders under an assignment.

        Element-valued entries of ``assignment`` replace placeholders; numeric
        ones are substituted into the stoichiometries.
        """
        numbers = {}
        for name, value in assignment.items():
            try:
                numbers[name] = Decimal(str(value))
            except InvalidOperation:
                pass
        acc = {}
        order = []
        left = []
        for symbol, stoich in self.elements:
            _accumulate(acc, order, symbol, stoich.substitute(numbers))
        for name, stoich in self.placeholders:
            target = assignment.get(name)
            if isinstance(target, str) and target in ELEMENTS:
                _accumulate(acc, order, target, stoich.substitute(numbers))
            else:
                left.append((name, stoich.substitute(numbers)))
        return Composition(tuple((s, acc[s]) for s in order), tuple(left))

    def render(self):
        parts = []
        for symbol, stoich in self.elements + self.placeholders:
            if stoich.is_numeric and stoich.constant == 1:
                parts.append(symbol)
            else:
                parts.append(symbol + stoich.render())
        return "".join(parts)


def _accumulate(acc, order, symbol, stoich):
    if symbol in acc:
        acc[symbol] = acc[symbol] + stoich
    else:
        acc[symbol] = stoich
        order.append(symbol)


def compositions_equal(a, b, tol=1e-9):
    """Element-wise equality of two numeric composition dicts (missing = 0)."""
    for key in set(a) | set(b):
        if abs(a.get(key, 0.0) - b.get(key, 0.0)) > tol:
            return False
    return True


# -- formula tokenizer -------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    kind: str  # element | placeholder | stoich | open | close
    text: str
    start: int
    end: int
    lead: str  # whitespace preceding the token


_EXPR_TERM = r"(?:(?:\d+(?:\.\d+)?|\.\d+)(?:{v})?|(?:{v}))"


def _expr_regex(lower_vars):
    alternatives = "|".join(re.escape(v) for v in sorted(lower_vars, key=len, reverse=True))
    term = _EXPR_TERM.format(v=f"(?:{alternatives})" if alternatives else "(?!)")
    return re.compile(rf"{term}(?:\s*[-+−–]\s*{term})*")


def _split_vars(variables):
    upper = {v for v in variables if v[:1].isupper()}
    lower = set(variables) - upper
    return upper, lower


def _tokenize(formula, variables):
    upper_vars, lower_vars = _split_vars(variables)
    expr_re = _expr_regex(lower_vars)
    tokens = []
    pos = 0
    n = len(formula)
    expect_stoich = False
    while pos < n:
        lead_start = pos
        while pos < n and formula[pos].isspace():
            pos += 1
        if pos == n:
            break
        lead = formula[lead_start:pos]
        ch = formula[pos]
        if expect_stoich:
            match = expr_re.match(formula, pos)
            if match and match.end() > pos:
                text = match.group(0)
                tokens.append(_Token("stoich", text, pos, match.end(), lead))
                pos = match.end()
                expect_stoich = False
                continue
        expect_stoich = False
        if ch in "([":
            tokens.append(_Token("open", ch, pos, pos + 1, lead))
            pos += 1
            continue
        if ch in ")]":
            tokens.append(_Token("close", ch, pos, pos + 1, lead))
            pos += 1
            expect_stoich = True
            continue
        best = None
        for cand in (formula[pos:pos + 2], formula[pos:pos + 1]):
            if cand in ELEMENTS and ch.isupper():
                best = ("element", cand)
                break
        for var in sorted(upper_vars, key=len, reverse=True):
            if formula.startswith(var, pos) and (best is None or len(var) > len(best[1])):
                best = ("placeholder", var)
                break
        if best is None:
            end = pos + 1
            while end < n and not formula[end].isspace() and not formula[end].isupper():
                end += 1
            raise DecompositionError(formula[pos:end], pos, formula)
        kind, text = best
        tokens.append(_Token(kind, text, pos, pos + len(text), lead))
        pos += len(text)
        expect_stoich = True
    return tokens


def _parse_tokens(tokens, formula, variables):
    """Recursive-descent fold of tokens into (symbol, Stoich, is_placeholder) triples."""
    stack = [[]]
    last_unit = None  # list of entries the next stoich applies to
    for tok in tokens:
        if tok.kind in ("element", "placeholder"):
            entry = [tok.text, Stoich.number(1), tok.kind == "placeholder"]
            stack[-1].append(entry)
            last_unit = [entry]
        elif tok.kind == "stoich":
            if last_unit is None:
                raise DecompositionError(tok.text, tok.start, formula)
            try:
                stoich = parse_stoich(tok.text, variables)
            except ValueError:
                raise DecompositionError(tok.text, tok.start, formula) from None
            for entry in last_unit:
                try:
                    entry[1] = entry[1].multiply(stoich)
                except ValueError:
                    raise DecompositionError(tok.text, tok.start, formula) from None
            last_unit = None
        elif tok.kind == "open":
            stack.append([])
            last_unit = None
        elif tok.kind == "close":
            if len(stack) == 1:
                raise DecompositionError(tok.text, tok.start, formula)
            group = stack.pop()
            if not group:
                raise DecompositionError(tok.text, tok.start, formula)
            stack[-1].extend(group)
            last_unit = group
    if len(stack) != 1:
        raise DecompositionError("(", len(formula), formula)
    return stack[0]


def decompose_formula(formula, variables=DEFAULT_VARIABLES):
    """Decompose a formula string into a :class:`Composition`.

    Whitespace between tokens is ignored, an omitted stoichiometry counts as 1
    and parenthesised groups multiply through.  ``variables`` lists the names
    allowed as symbols: lowercase ones appear in stoichiometries, capitalised
    ones (``A``, ``RE``) stand in for elements.

    >>> decompose_formula("MgB2").as_dict()
    {'Mg': 1.0, 'B': 2.0}
    """
    if not formula or not formula.strip():
        raise ValueError("empty formula")
    variables = frozenset(variables) | DEFAULT_VARIABLES
    tokens = _tokenize(formula, variables)
    if not tokens:
        raise ValueError("empty formula")
    entries = _parse_tokens(tokens, formula, variables)
    acc, order, pacc, porder = {}, [], {}, []
    for symbol, stoich, is_placeholder in entries:
        if is_placeholder:
            _accumulate(pacc, porder, symbol, stoich)
        else:
            _accumulate(acc, order, symbol, stoich)
    return Composition(
        tuple((s, acc[s]) for s in order),
        tuple((s, pacc[s]) for s in porder),
    )


def looks_like_formula(text, variables=DEFAULT_VARIABLES, allow_single=False):
    """Heuristic guard used before treating a token run as a formula."""
    stripped = text.strip()
    if not stripped or not stripped[0].isupper():
        return False
    letters = [c for c in stripped if c.isalpha()]
    for group in re.findall(r"\(([^()]*)\)", stripped):
        if group.isalpha() and group.isupper() and len(group) > 1:
            return False
    if not any(c.isdigit() for c in stripped) and all(c.isupper() for c in letters):
        # acronyms such as PCCO, YBCO, BCS
        return len(letters) == 1 and allow_single
    try:
        comp = decompose_formula(stripped, variables)
    except (DecompositionError, ValueError):
        return False
    units = len(comp.elements) + len(comp.placeholders)
    has_stoich = any(c.isdigit() for c in stripped) or any(
        not s.is_numeric for _, s in comp.elements + comp.placeholders
    )
    if units >= 2 or has_stoich:
        return True
    return allow_single


# -- material structure ------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    label: str
    start: int
    end: int
    text: str

    def to_dict(self):
        return {"label": self.label, "span": [self.start, self.end], "text": self.text}

    @classmethod
    def from_dict(cls, data):
        start, end = data["span"]
        return cls(data["label"], start, end, data["text"])


@dataclass(frozen=True)
class MaterialStructure:
    """Segmented material mention plus the results derived from it."""

    raw: str
    segments: tuple = ()
    variables: tuple = ()  # ((name, (value, ...)), ...)
    notes: tuple = ()
    looked_up_formula: str | None = None
    classes: tuple = ()
    resolved_formulas: tuple = ()

    def _joined(self, label):
        parts = [s.text for s in self.segments if s.label == label]
        return ", ".join(parts) if parts else None

    @property
    def name(self):
        return self._joined(NAME)

    @property
    def formula(self):
        return self._joined(FORMULA)

    @property
    def doping(self):
        return self._joined(DOPING)

    @property
    def shape(self):
        return self._joined(SHAPE)

    @property
    def substrate(self):
        return self._joined(SUBSTRATE)

    @property
    def fabrication(self):
        return self._joined(FABRICATION)

    @property
    def variable_map(self):
        return {name: list(values) for name, values in self.variables}

    @property
    def low_confidence(self):
        return self.name is None and self.formula is None

    @property
    def effective_formula(self):
        """The written formula, else the one looked up from the name."""
        return self.formula or self.looked_up_formula

    def to_dict(self):
        return {
            "raw": self.raw,
            "segments": [s.to_dict() for s in self.segments],
            "variables": {name: list(values) for name, values in self.variables},
            "notes": list(self.notes),
            "looked_up_formula": self.looked_up_formula,
            "classes": list(self.classes),
            "resolved_formulas": list(self.resolved_formulas),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            raw=data["raw"],
            segments=tuple(Segment.from_dict(s) for s in data.get("segments", [])),
            variables=tuple((k, tuple(v)) for k, v in data.get("variables", {}).items()),
            notes=tuple(data.get("notes", [])),
            looked_up_formula=data.get("looked_up_formula"),
            classes=tuple(data.get("classes", [])),
            resolved_formulas=tuple(data.get("resolved_formulas", [])),
        )


@dataclass(frozen=True)
class ResolvedFormula:
    formula: str
    composition: Composition
    assignment: tuple  # ((variable, value), ...)


SHAPES = (
    "single crystals", "single crystal", "single-crystalline", "single-crystal",
    "polycrystalline samples", "polycrystalline", "polycrystals", "polycrystal",
    "thin films", "thin film", "nanowires", "nanowire", "nanoparticles", "nanotubes",
    "films", "film", "powders", "powder", "wires", "wire", "whiskers", "whisker",
    "ceramics", "ceramic", "crystals", "crystal", "tapes", "tape", "ribbons", "ribbon",
    "flakes", "monolayer", "bilayer", "multilayers",
)

_SHAPE_RE = re.compile(
    r"(?<![\w-])(?:" + "|".join(re.escape(s) for s in SHAPES) + r")(?![\w-])",
    re.IGNORECASE,
)

_ELEMENT_LIST = r"(?:[A-Z][a-z]?)(?:\s*(?:,|and|/)\s*[A-Z][a-z]?)*"
_DOPING_RE = re.compile(
    r"(?<![\w-])(?:"
    rf"(?:\d+(?:\.\d+)?\s*(?:%|at\.?\s*%)\s*)?{_ELEMENT_LIST}[- ](?:doped|substituted)"
    r"|(?:over|under|optimally[- ]|un|heavily[- ]|lightly[- ])doped"
    r"|pure"
    r")(?![\w-])"
)

_FABRICATION_RE = re.compile(
    r"(?<![\w-])(?:"
    r"(?:synthesi[sz]ed|prepared|grown|fabricated|made)\s+by\s+(?:the\s+)?[\w-]+(?:\s+method)?"
    r"|(?:electron|hole)[- ]doped"
    r"|intercalated|annealed|quenched|irradiated|as-grown|deintercalated|oxygenated"
    r")(?![\w-])",
    re.IGNORECASE,
)

_SUBSTRATE_RE = re.compile(
    r"(?<![\w-])(?:(?:grown|deposited|prepared|epitaxially grown)\s+)?(?:on|onto|on top of)\s+(?P<sub>\S.*)$",
)

_ASSIGN_NAME = r"(?:[A-Za-zδε][A-Za-z]?)"
_ASSIGNMENT_RE = re.compile(rf"^\s*{_ASSIGN_NAME}\s*=")

_STOPWORDS = frozenset({"the", "a", "an", "of", "and", "with", "for", "sample", "samples", "in", "as"})


def _find_assignment_groups(text):
    """Yield (start, end, content_start, content_end) for variable assignments.

    Handles ``(A=Mg,Co; x=0.1,0.2)`` and a trailing ``with x = 0.1, 0.2``.
    """
    groups = []
    depth = 0
    open_at = None
    for i, ch in enumerate(text):
        if ch == "(":
            if depth == 0:
                open_at = i
            depth += 1
        elif ch == ")" and depth:
            depth -= 1
            if depth == 0 and open_at is not None:
                inner = text[open_at + 1:i]
                if _ASSIGNMENT_RE.match(inner):
                    groups.append((open_at, i + 1, open_at + 1, i))
    trailing = re.search(rf"(?:,\s*|\s+(?:with|for|where)\s+)(?={_ASSIGN_NAME}\s*=)", text)
    if trailing and not any(s <= trailing.start() < e for s, e, _, _ in groups):
        groups.append((trailing.start(), len(text), trailing.end(), len(text)))
    return groups


def _parse_assignments(text, offset):
    """Parse ``A=Mg,Co; x=0.1,0.2`` into segments and a variable map."""
    segments = []
    values = {}
    order = []
    current = None
    pieces = re.finditer(r"[^,;]+", text)
    for piece in pieces:
        chunk = piece.group(0)
        start = piece.start() + offset
        match = re.match(rf"\s*({_ASSIGN_NAME})\s*=\s*", chunk)
        if match:
            current = match.group(1)
            segments.append(Segment(VARIABLE, start + match.start(1), start + match.end(1), current))
            if current not in values:
                values[current] = []
                order.append(current)
            rest_start = match.end()
        elif current is None:
            continue
        else:
            rest_start = 0
        for value in re.finditer(r"[^\s]+(?:\s+[^\s]+)*", chunk[rest_start:]):
            val_text = value.group(0)
            for part in re.split(r"\s+(?:and|or)\s+", val_text):
                part = part.strip()
                if not part or part in ("and", "or"):
                    continue
                pstart = start + rest_start + value.start() + val_text.find(part)
                segments.append(Segment(VALUE, pstart, pstart + len(part), part))
                values[current].append(part)
    return segments, values, order


def _covered(spans, start, end):
    return any(s < end and start < e for s, e in spans)


def parse_material(surface, names=None):
    """Segment a material mention into labelled parts.

    Variable assignments, substrate, shapes, doping and fabrication phrases
    are recognised first; the remaining tokens are scanned for the longest
    run that decomposes as a formula, then for names.  Anything left over is
    recorded as fabrication.
    """
    if not surface or not surface.strip():
        raise ValueError("empty material surface")
    names = names if names is not None else default_names()
    segments = []
    taken = []
    variables = {}
    order = []
    notes = []

    for start, end, cstart, cend in _find_assignment_groups(surface):
        segs, vals, names_order = _parse_assignments(surface[cstart:cend], cstart)
        segments.extend(segs)
        for var in names_order:
            if var in variables:
                notes.append(f"variable {var} assigned more than once; values merged")
                variables[var].extend(v for v in vals[var] if v not in variables[var])
            else:
                variables[var] = list(vals[var])
                order.append(var)
        taken.append((start, end))

    sub = _SUBSTRATE_RE.search(surface)
    if sub and not _covered(taken, sub.start("sub"), sub.end("sub")):
        sub_text = sub.group("sub").rstrip()
        segments.append(Segment(SUBSTRATE, sub.start("sub"), sub.start("sub") + len(sub_text), sub_text))
        taken.append((sub.start(), len(surface)))

    for regex, label in ((_FABRICATION_RE, FABRICATION), (_DOPING_RE, DOPING), (_SHAPE_RE, SHAPE)):
        for match in regex.finditer(surface):
            if _covered(taken, match.start(), match.end()):
                continue
            segments.append(Segment(label, match.start(), match.end(), match.group(0)))
            taken.append((match.start(), match.end()))

    known_vars = set(variables) | DEFAULT_VARIABLES
    free = _free_tokens(surface, taken)

    i = 0
    have_formula = False
    leftovers = []
    while i < len(free):
        found = None
        if not have_formula:
            for j in range(len(free) - 1, i - 1, -1):
                if any(_covered(taken, free[k][1], free[k + 1][0]) for k in range(i, j)):
                    continue
                start, end = free[i][0], free[j][1]
                candidate = surface[start:end]
                trimmed = candidate.rstrip(",.;:")
                if looks_like_formula(trimmed, known_vars, allow_single=True):
                    found = (j, start, start + len(trimmed))
                    break
        if found:
            j, start, end = found
            segments.append(Segment(FORMULA, start, end, surface[start:end]))
            have_formula = True
            i = j + 1
            continue
        leftovers.append(free[i])
        i += 1

    # group contiguous leftovers into names or fabrication residue
    runs = []
    for start, end in leftovers:
        if runs and not surface[runs[-1][1]:start].strip():
            runs[-1][1] = end
        else:
            runs.append([start, end])
    for start, end in runs:
        words = [
            (start + m.start(), start + m.end())
            for m in re.finditer(r"\S+", surface[start:end])
        ]
        words = [(s, e) for s, e in words if surface[s:e].strip(",.;:()").lower() not in _STOPWORDS]
        if not words:
            continue
        cstart, cend = words[0][0], words[-1][1]
        while cend > cstart and surface[cend - 1] in ",.;:":
            cend -= 1
        if surface[cstart] == "(" and surface[cend - 1] == ")":
            cstart, cend = cstart + 1, cend - 1
        core = surface[cstart:cend]
        if not core.strip():
            continue
        label = NAME if _is_name(core, names) else FABRICATION
        segments.append(Segment(label, cstart, cend, core))

    segments.sort(key=lambda s: (s.start, s.end))
    return MaterialStructure(
        raw=surface,
        segments=tuple(segments),
        variables=tuple((v, tuple(variables[v])) for v in order),
        notes=tuple(notes),
    )


def _free_tokens(surface, taken):
    """Whitespace tokens of the text left outside already-labelled spans."""
    mask = [False] * len(surface)
    for start, end in taken:
        for i in range(start, min(end, len(surface))):
            mask[i] = True
    tokens = []
    start = None
    for i, ch in enumerate(surface + " "):
        free = i < len(surface) and not mask[i] and not ch.isspace()
        if free and start is None:
            start = i
        elif not free and start is not None:
            tokens.append((start, i))
            start = None
    return tokens


def _is_name(text, names):
    if text.lower() in names:
        return True
    if any(c.isupper() for c in text) or any(c.isdigit() for c in text):
        return True
    return False


# -- lookup, classification, substitution ------------------------------------

def load_names(path=None):
    """Read a ``name<TAB>formula`` file into a case-normalised dict.

    A formula of ``-`` marks a known name with no formula.
    """
    text = _read_data(path, "names.tsv")
    table = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"names file line {lineno}: expected name<TAB>formula")
        name, formula = parts[0].strip(), parts[1].strip()
        table[name.lower()] = None if formula == "-" else formula
    return table


_DEFAULT_NAMES = None


def default_names():
    global _DEFAULT_NAMES
    if _DEFAULT_NAMES is None:
        _DEFAULT_NAMES = load_names()
    return _DEFAULT_NAMES


def name_to_formula(name, table=None):
    """Exact, case-insensitive lookup of a material name; None when unknown."""
    table = table if table is not None else default_names()
    if not name:
        return None
    return table.get(name.strip().lower())


@dataclass(frozen=True)
class Rule:
    tag: str
    all_of: frozenset = frozenset()
    any_of: tuple = ()  # each set needs at least one member present
    none_of: frozenset = frozenset()
    only: frozenset | None = None
    min_count: int = 0
    max_count: int | None = None

    def matches(self, elements):
        if not elements:
            return False
        if not self.all_of <= elements:
            return False
        if any(not (group & elements) for group in self.any_of):
            return False
        if self.none_of & elements:
            return False
        if self.only is not None and not elements <= self.only:
            return False
        if len(elements) < self.min_count:
            return False
        if self.max_count is not None and len(elements) > self.max_count:
            return False
        return True


def _expand_symbols(spec, lineno):
    out = set()
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        if item.startswith("@"):
            group = GROUPS.get(item[1:])
            if group is None:
                raise ValueError(f"taxonomy line {lineno}: unknown group {item}")
            out |= group
        elif item in ELEMENTS:
            out.add(item)
        else:
            raise ValueError(f"taxonomy line {lineno}: unknown element {item}")
    return frozenset(out)


def parse_rules(text):
    """Parse taxonomy rules: ``tag<TAB>clause clause ...``.

    Clauses: ``all:Cu,O`` ``any:As,P`` ``none:O`` ``only:@metal,B``
    ``min:2`` ``max:1``; ``@group`` names expand to element groups.
    """
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"taxonomy line {lineno}: expected tag<TAB>clauses")
        tag, clauses = parts[0].strip(), parts[1].split()
        kwargs = {}
        for clause in clauses:
            key, _, value = clause.partition(":")
            if key == "all":
                kwargs["all_of"] = _expand_symbols(value, lineno)
            elif key == "any":
                kwargs["any_of"] = kwargs.get("any_of", ()) + (_expand_symbols(value, lineno),)
            elif key == "none":
                kwargs["none_of"] = _expand_symbols(value, lineno)
            elif key == "only":
                kwargs["only"] = _expand_symbols(value, lineno)
            elif key == "min":
                kwargs["min_count"] = int(value)
            elif key == "max":
                kwargs["max_count"] = int(value)
            else:
                raise ValueError(f"taxonomy line {lineno}: unknown clause {clause!r}")
        rules.append(Rule(tag, **kwargs))
    return rules


def load_rules(path=None):
    return parse_rules(_read_data(path, "taxonomy.tsv"))


_DEFAULT_RULES = None


def default_rules():
    global _DEFAULT_RULES
    if _DEFAULT_RULES is None:
        _DEFAULT_RULES = load_rules()
    return _DEFAULT_RULES


def classify(composition, rules=None):
    """Return the sorted tuple of class tags whose rules match the element set."""
    rules = rules if rules is not None else default_rules()
    elements = composition.element_set() if isinstance(composition, Composition) else frozenset(composition)
    return tuple(sorted({rule.tag for rule in rules if rule.matches(elements)}))


def _formula_variables(structure):
    return set(structure.variable_map) | DEFAULT_VARIABLES


def substitute_variables(structure):
    """Expand a formula over the Cartesian product of its variable values.

    Only variables that occur in the formula and have values take part; a
    variable occurring without values stays symbolic and the resulting
    formulas are then unresolved.
    """
    formula = structure.effective_formula
    if not formula:
        return []
    value_map = structure.variable_map
    variables = _formula_variables(structure)
    tokens = _tokenize(formula, variables)
    present = set()
    for tok in tokens:
        if tok.kind == "placeholder":
            present.add(tok.text)
        elif tok.kind == "stoich":
            present |= parse_stoich(tok.text, variables).variables
    active = [v for v in value_map if v in present and value_map[v]]
    if not active:
        return []

    results = []
    for combo in itertools.product(*(value_map[v] for v in active)):
        assignment = dict(zip(active, combo))
        numbers = {}
        for name, value in assignment.items():
            try:
                numbers[name] = Decimal(value)
            except InvalidOperation:
                pass
        out = []
        for tok in tokens:
            text = tok.text
            if tok.kind == "placeholder" and tok.text in assignment:
                text = assignment[tok.text]
            elif tok.kind == "stoich":
                stoich = parse_stoich(tok.text, variables)
                if stoich.variables & set(numbers):
                    text = stoich.substitute(numbers).render()
            out.append(tok.lead + text)
        resolved_text = "".join(out)
        remaining = variables - set(active)
        try:
            comp = decompose_formula(resolved_text, remaining)
        except DecompositionError:
            comp = Composition()
        results.append(ResolvedFormula(resolved_text, comp, tuple(assignment.items())))
    return results


def analyze_material(surface, names=None, rules=None):
    """Parse a mention and fill in lookup, classes and resolved formulas."""
    names = names if names is not None else default_names()
    structure = parse_material(surface, names)
    looked_up = None
    if structure.formula is None and structure.name is not None:
        looked_up = name_to_formula(structure.name, names)
    structure = replace(structure, looked_up_formula=looked_up)
    formula = structure.effective_formula
    classes = ()
    resolved = ()
    if formula:
        try:
            comp = decompose_formula(formula, _formula_variables(structure))
        except (DecompositionError, ValueError):
            comp = None
        if comp is not None:
            expanded = substitute_variables(structure)
            if expanded:
                resolved = tuple(r.formula for r in expanded)
                tags = set()
                for r in expanded:
                    tags.update(classify(r.composition, rules))
                classes = tuple(sorted(tags | set(classify(comp, rules))))
            else:
                classes = classify(comp, rules)
                if comp.resolved:
                    resolved = (formula,)
    return replace(structure, classes=classes, resolved_formulas=resolved)


def resolved_compositions(structure):
    """Numeric compositions of every resolved formula of a mention."""
    out = []
    variables = _formula_variables(structure)
    for text in structure.resolved_formulas:
        try:
            comp = decompose_formula(text, variables)
        except (DecompositionError, ValueError):
            continue
        if comp.resolved:
            out.append(comp.numeric())
    return out


def _read_data(path, default_name):
    if path is None:
        return resources.files("supercon_extract.data").joinpath(default_name).read_text(encoding="utf-8")
    with open(path, encoding="utf-8") as handle:
        return handle.read()
