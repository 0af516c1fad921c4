"""Parser/serializer for RPC00B camera files (RPB key/value grammar).

The grammar is `NAME = value;` with parenthesized, comma-separated coefficient
lists. Scientific notation is accepted. Unknown keys are preserved on parse but
ignored by consumers; serialization emits only the canonical fields so a
parse/serialize round trip is byte-stable modulo whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

SCALAR_FIELDS = (
    "LINE_OFF",
    "SAMP_OFF",
    "LAT_OFF",
    "LONG_OFF",
    "HEIGHT_OFF",
    "LINE_SCALE",
    "SAMP_SCALE",
    "LAT_SCALE",
    "LONG_SCALE",
    "HEIGHT_SCALE",
)
COEFF_FIELDS = (
    "LINE_NUM_COEFF",
    "LINE_DEN_COEFF",
    "SAMP_NUM_COEFF",
    "SAMP_DEN_COEFF",
)
_SCALE_FIELDS = tuple(f for f in SCALAR_FIELDS if f.endswith("_SCALE"))


class RpbParseError(ValueError):
    """Malformed or incomplete RPB document."""


@dataclass
class RpbDocument:
    """All RPC00B fields of one camera, plus any extra keys found in the file."""

    scalars: dict[str, float]
    coeffs: dict[str, list[float]]
    extras: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for name in SCALAR_FIELDS:
            if name not in self.scalars:
                raise RpbParseError(f"missing mandatory field {name}")
        for name in COEFF_FIELDS:
            values = self.coeffs.get(name)
            if values is None:
                raise RpbParseError(f"missing mandatory field {name}")
            if len(values) != 20:
                raise RpbParseError(f"{name} has {len(values)} entries, expected 20")
        for name in _SCALE_FIELDS:
            if not self.scalars[name] > 0:
                raise RpbParseError(f"{name} must be strictly positive")

    def __eq__(self, other):
        if not isinstance(other, RpbDocument):
            return NotImplemented
        return self.scalars == other.scalars and self.coeffs == other.coeffs


# a value is either a parenthesized (possibly multi-line) list or a single-line
# token; lines without a terminating semicolon (group markers) are skipped
_STATEMENT = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(\([^()]*\)|[^;\n]*);")
_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def _parse_number(text: str, name: str) -> float:
    token = text.strip()
    if not _NUMBER.match(token):
        raise RpbParseError(f"non-numeric value for {name}: {token!r}")
    return float(token)


def parse_rpb(text: str) -> RpbDocument:
    """Parse RPB text into an RpbDocument.

    Raises RpbParseError on missing mandatory fields, wrong coefficient list
    lengths, or non-numeric values.
    """
    scalars: dict[str, float] = {}
    coeffs: dict[str, list[float]] = {}
    extras: dict[str, str] = {}
    for match in _STATEMENT.finditer(text):
        name, raw = match.group(1), match.group(2).strip()
        if name in SCALAR_FIELDS:
            scalars[name] = _parse_number(raw, name)
        elif name in COEFF_FIELDS:
            if not (raw.startswith("(") and raw.endswith(")")):
                raise RpbParseError(f"{name} must be a parenthesized list")
            items = [s for s in raw[1:-1].split(",") if s.strip()]
            if len(items) != 20:
                raise RpbParseError(f"{name} has {len(items)} entries, expected 20")
            coeffs[name] = [_parse_number(s, name) for s in items]
        else:
            extras[name] = raw
    return RpbDocument(scalars, coeffs, extras)


def serialize_rpb(doc: RpbDocument) -> str:
    """Serialize the canonical RPC00B fields. parse_rpb(serialize_rpb(d)) == d."""
    lines = []
    for name in SCALAR_FIELDS:
        lines.append(f"{name} = {float(doc.scalars[name])!r};")
    for name in COEFF_FIELDS:
        body = ",\n".join(f"    {float(v)!r}" for v in doc.coeffs[name])
        lines.append(f"{name} = (\n{body});")
    return "\n".join(lines) + "\n"


def read_rpb(path) -> RpbDocument:
    with open(path, "r", encoding="utf-8") as f:
        return parse_rpb(f.read())


def write_rpb(doc: RpbDocument, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize_rpb(doc))
