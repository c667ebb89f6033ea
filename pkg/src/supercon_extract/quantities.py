"""Parsing and normalisation of temperature and pressure expressions.

Only two measurement families are handled: temperatures (normalised to
kelvin) and pressures (normalised to GPa).  A surface such as ``"above 100K"``
or ``"30-35 K"`` becomes a :class:`Quantity` carrying the value as written,
the qualifier, and the normalised value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal

TEMPERATURE = "temperature"
PRESSURE = "pressure"

# unit -> (kind, factor, offset); normalised = value * factor + offset
UNITS = {
    "K": (TEMPERATURE, Decimal(1), Decimal(0)),
    "mK": (TEMPERATURE, Decimal("0.001"), Decimal(0)),
    "°C": (TEMPERATURE, Decimal(1), Decimal("273.15")),
    "GPa": (PRESSURE, Decimal(1), Decimal(0)),
    "MPa": (PRESSURE, Decimal("0.001"), Decimal(0)),
    "kbar": (PRESSURE, Decimal("0.1"), Decimal(0)),
    "bar": (PRESSURE, Decimal("0.0001"), Decimal(0)),
    "Pa": (PRESSURE, Decimal("1e-9"), Decimal(0)),
}

_UNIT_ALIASES = {"℃": "°C", "º C": "°C", "° C": "°C", "ºC": "°C", "Kbar": "kbar", "kBar": "kbar"}

_QUALIFIERS = {
    "above": ">",
    "over": ">",
    "higher than": ">",
    ">": ">",
    "≥": ">",
    ">=": ">",
    "below": "<",
    "under": "<",
    "lower than": "<",
    "<": "<",
    "≤": "<",
    "<=": "<",
    "about": "≈",
    "around": "≈",
    "approximately": "≈",
    "nearly": "≈",
    "~": "≈",
    "∼": "≈",
    "≈": "≈",
    "≃": "≈",
}

_QUALIFIER_RE = "|".join(
    re.escape(q) for q in sorted(_QUALIFIERS, key=len, reverse=True)
)
_NUMBER = r"[-−–]?\s?\d+(?:[.,]\d+)?"
_UNIT_RE = "|".join(
    re.escape(u) for u in sorted(list(UNITS) + list(_UNIT_ALIASES), key=len, reverse=True)
)

_QUANTITY_RE = re.compile(
    rf"""^\s*
    (?:(?P<qualifier>{_QUALIFIER_RE})\s*)?
    (?P<low>{_NUMBER})\s*(?P<low_unit>{_UNIT_RE})?
    (?:\s*(?:-|–|—|to|~|∼)\s*(?P<high>{_NUMBER}))?
    \s*(?P<unit>{_UNIT_RE})?
    \s*$""",
    re.VERBOSE | re.IGNORECASE,
)


class QuantityError(ValueError):
    """Raised when a surface cannot be read as a temperature or pressure."""


@dataclass(frozen=True)
class Quantity:
    kind: str
    unit: str
    value: float
    high: float | None = None
    qualifier: str | None = None
    normalized: float = 0.0
    normalized_high: float | None = None
    surface: str = ""

    @property
    def is_interval(self):
        return self.high is not None

    @property
    def midpoint(self):
        """Normalised midpoint; equals the normalised value for points."""
        if self.normalized_high is None:
            return self.normalized
        return (self.normalized + self.normalized_high) / 2

    def to_dict(self):
        return {
            "kind": self.kind,
            "unit": self.unit,
            "value": self.value,
            "high": self.high,
            "qualifier": self.qualifier,
            "normalized": self.normalized,
            "normalized_high": self.normalized_high,
            "surface": self.surface,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def _to_decimal(text):
    text = text.replace("−", "-").replace("–", "-").replace(" ", "").replace(",", ".")
    return Decimal(text)


def _canonical_unit(unit):
    for alias, canonical in _UNIT_ALIASES.items():
        if unit.lower() == alias.lower():
            return canonical
    for known in UNITS:
        if unit == known:
            return known
    # mK/MPa are case-significant; fall back to case-insensitive only when unique
    matches = [known for known in UNITS if known.lower() == unit.lower()]
    if len(matches) == 1:
        return matches[0]
    raise QuantityError(f"unrecognised unit {unit!r}")


def _normalize(value, unit):
    kind, factor, offset = UNITS[unit]
    out = value * factor + offset
    if kind == TEMPERATURE and out < 0:
        raise QuantityError(f"temperature below absolute zero: {value} {unit}")
    if kind == PRESSURE and out < 0:
        raise QuantityError(f"negative pressure: {value} {unit}")
    return float(out)


def parse_quantity(surface):
    """Parse a temperature or pressure surface into a :class:`Quantity`.

    Accepts single values, ranges (``"30-35 K"``, ``"30 to 35 K"``) and a
    leading qualifier (``above``, ``below``, ``~``, ``≈``, ``about`` ...).
    Raises :class:`QuantityError` when no number or no known unit is found.
    """
    if not surface or not surface.strip():
        raise QuantityError("empty quantity surface")
    match = _QUANTITY_RE.match(surface)
    if match is None:
        if not re.search(r"\d", surface):
            raise QuantityError(f"no numeric token in {surface!r}")
        raise QuantityError(f"cannot read {surface!r} as a temperature or pressure")

    unit_text = match.group("unit") or match.group("low_unit")
    if unit_text is None:
        raise QuantityError(f"missing unit in {surface!r}")
    unit = _canonical_unit(unit_text)
    if match.group("low_unit") and match.group("unit"):
        if _canonical_unit(match.group("low_unit")) != unit:
            raise QuantityError(f"mixed units in {surface!r}")
    if match.group("low_unit") and match.group("high") and not match.group("unit"):
        # "30 K - 35" is not a range we understand
        raise QuantityError(f"cannot read {surface!r} as a range")

    kind = UNITS[unit][0]
    low = _to_decimal(match.group("low"))
    if kind == TEMPERATURE and unit != "°C" and low < 0:
        raise QuantityError(f"negative absolute temperature in {surface!r}")
    high = _to_decimal(match.group("high")) if match.group("high") else None
    if high is not None and high < low:
        raise QuantityError(f"interval bounds out of order in {surface!r}")

    qualifier = None
    if match.group("qualifier"):
        qualifier = _QUALIFIERS[match.group("qualifier").lower()]

    return Quantity(
        kind=kind,
        unit=unit,
        value=float(low),
        high=None if high is None else float(high),
        qualifier=qualifier,
        normalized=_normalize(low, unit),
        normalized_high=None if high is None else _normalize(high, unit),
        surface=surface,
    )


def unit_kind(surface):
    """Return the measurement family of a surface, or None if unparseable."""
    try:
        return parse_quantity(surface).kind
    except QuantityError:
        return None
