"""The closed discipline taxonomy and its grouping into fields.

Every author and paper in the simulator carries one of these 19 discipline
labels; the field grouping is used for cross-discipline reporting.
"""

from __future__ import annotations

from .errors import DataError

FIELD_TO_DISCIPLINES: dict[str, tuple[str, ...]] = {
    "Humanities, Literature & Arts": ("Art", "History", "Philosophy", "Psychology"),
    "Life Science & Earth Sciences": ("Biology", "Environmental Science", "Geography", "Geology"),
    "Business, Economics & Management": ("Business", "Economics"),
    "Engineering & Computer Science": ("Computer Science", "Engineering"),
    "Chemical & Material Sciences": ("Chemistry", "Materials Science"),
    "Physics & Mathematics": ("Mathematics", "Physics"),
    "Health & Medical Sciences": ("Medicine",),
    "Social Sciences": ("Political Science", "Sociology"),
}

DISCIPLINE_TO_FIELD: dict[str, str] = {
    d: f for f, ds in FIELD_TO_DISCIPLINES.items() for d in ds
}

DISCIPLINES: tuple[str, ...] = tuple(sorted(DISCIPLINE_TO_FIELD))


def map_discipline_to_field(discipline: str) -> str:
    """Return the unique field owning ``discipline``.

    Raises DataError for labels outside the 19-discipline set.
    """
    try:
        return DISCIPLINE_TO_FIELD[discipline]
    except KeyError:
        raise DataError(f"unknown discipline label: {discipline!r}") from None


def normalize_discipline(label: str) -> str | None:
    """Case-insensitive exact match into the valid set; None when rejected."""
    cleaned = label.strip()
    if cleaned in DISCIPLINE_TO_FIELD:
        return cleaned
    folded = cleaned.casefold()
    for valid in DISCIPLINE_TO_FIELD:
        if valid.casefold() == folded:
            return valid
    return None
