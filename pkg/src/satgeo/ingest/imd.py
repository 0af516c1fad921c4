"""Parser for image metadata (IMD-style key/value) files.

Key names follow WorldView conventions (meanSatAz, meanSatEl, meanSunAz,
meanSunEl, firstLineTime) but are remappable through an alias table since
vendors vary.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timezone

DEFAULT_ALIASES = {
    "sat_azimuth": ("meanSatAz",),
    "sat_elevation": ("meanSatEl",),
    "sun_azimuth": ("meanSunAz",),
    "sun_elevation": ("meanSunEl",),
    "acquisition_time": ("firstLineTime",),
    "image_id": ("imageId", "imageID"),
}


class ImdParseError(ValueError):
    """Missing key or unparseable value in an IMD document."""


@dataclass(frozen=True)
class ImdRecord:
    image_id: str
    sat_azimuth: float
    sat_elevation: float
    sun_azimuth: float
    sun_elevation: float
    acquisition_time: datetime

    def __post_init__(self):
        for name in ("sat_azimuth", "sun_azimuth"):
            az = getattr(self, name)
            if not 0.0 <= az < 360.0:
                raise ImdParseError(f"{name} {az} outside [0, 360)")
        for name in ("sat_elevation", "sun_elevation"):
            el = getattr(self, name)
            if not 0.0 < el <= 90.0:
                raise ImdParseError(f"{name} {el} outside (0, 90]")


_STATEMENT = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*\"?([^\";]*)\"?\s*;")


def _parse_timestamp(raw: str) -> datetime:
    text = raw.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ImdParseError(f"unparseable timestamp {raw!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def parse_imd(text: str, image_id: str | None = None,
              aliases: dict[str, tuple[str, ...]] | None = None) -> ImdRecord:
    """Parse IMD text. Extra keys are ignored; missing mandatory keys raise.

    image_id, when given, overrides anything found in the file (callers
    usually derive it from the file basename).
    """
    aliases = aliases or DEFAULT_ALIASES
    found: dict[str, str] = {}
    for match in _STATEMENT.finditer(text):
        found[match.group(1)] = match.group(2).strip()

    def pick(field: str, required: bool = True) -> str | None:
        for key in aliases.get(field, ()):
            if key in found:
                return found[key]
        if required:
            raise ImdParseError(f"missing key {aliases[field][0]}")
        return None

    def angle(field: str) -> float:
        raw = pick(field)
        try:
            return float(raw)
        except ValueError as exc:
            raise ImdParseError(f"non-numeric value for {field}: {raw!r}") from exc

    return ImdRecord(
        image_id=image_id if image_id is not None else (pick("image_id", required=False) or ""),
        sat_azimuth=angle("sat_azimuth"),
        sat_elevation=angle("sat_elevation"),
        sun_azimuth=angle("sun_azimuth"),
        sun_elevation=angle("sun_elevation"),
        acquisition_time=_parse_timestamp(pick("acquisition_time")),
    )


def read_imd(path, image_id: str | None = None) -> ImdRecord:
    from pathlib import Path

    p = Path(path)
    if image_id is None:
        image_id = p.stem
    with open(p, "r", encoding="utf-8") as f:
        return parse_imd(f.read(), image_id=image_id)
