"""Temporal constraint parsing, classification, and scoring.

A question's temporal constraint is reduced to one of six constraint classes
(FirstBefore, FirstAfter, FirstBetween, LastBefore, LastAfter, LastBetween)
over fractional-year anchors. Evidence dates are scored against the class with
a piecewise curve:

- admissible side near the anchor: Cauchy proximity 1 / (1 + (d/h)^2)
- plateau sides (e.g. everything before a FirstBefore anchor): constant 1
- violating side: exponential grace, rescaled to reach exactly 0 at five
  grace scales and floored at eps_v
- between windows: 1 at the favored edge, linear down to tau at the far edge

A passage's score is the max over its extracted dates; passages with no dates
score a neutral default delta.
"""

from __future__ import annotations

import calendar
import datetime
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

__all__ = [
    "TimePoint",
    "TemporalRelation",
    "ImplicitCondition",
    "TemporalConstraint",
    "ConstraintKind",
    "ConstraintClass",
    "CurveParams",
    "parse_timepoints",
    "parse_timepoints_with_spans",
    "to_fractional_year",
    "classify_constraint",
    "temporal_score",
]


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class TimePoint:
    """A calendar reference at year, month, or day granularity."""

    year: int
    month: Optional[int] = None
    day: Optional[int] = None

    def __post_init__(self) -> None:
        if self.month is None and self.day is not None:
            raise ValueError("day requires a month")
        if self.month is not None and not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")
        if self.day is not None:
            last = calendar.monthrange(self.year, self.month)[1]
            if not 1 <= self.day <= last:
                raise ValueError(f"invalid day {self.day} for {self.year}-{self.month}")

    def __str__(self) -> str:
        if self.month is None:
            return f"{self.year:04d}"
        if self.day is None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"


class TemporalRelation(Enum):
    AS_OF = "as of"
    FROM_TO = "from to"
    UNTIL = "until"
    BEFORE = "before"
    AFTER = "after"
    AROUND = "around"
    BETWEEN = "between"
    BY = "by"
    IN = "in"
    ON = "on"
    SINCE = "since"


class ImplicitCondition(Enum):
    NONE = "none"
    FIRST = "first"
    EARLIEST = "earliest"
    LAST = "last"
    LATEST = "latest"


@dataclass(frozen=True)
class TemporalConstraint:
    """The time condition extracted from a question."""

    condition: ImplicitCondition
    relation: TemporalRelation
    t1: TimePoint
    t2: Optional[TimePoint] = None
    raw_text: str = ""

    def __post_init__(self) -> None:
        two_sided = self.relation in (TemporalRelation.BETWEEN, TemporalRelation.FROM_TO)
        if two_sided:
            if self.t2 is None:
                raise ValueError(f"{self.relation.value} requires two time points")
            if to_fractional_year(self.t1) > to_fractional_year(self.t2):
                raise ValueError("descending time range")
        elif self.t2 is not None:
            raise ValueError(f"{self.relation.value} takes a single time point")


class ConstraintKind(Enum):
    FIRST_BEFORE = "first_before"
    FIRST_AFTER = "first_after"
    FIRST_BETWEEN = "first_between"
    LAST_BEFORE = "last_before"
    LAST_AFTER = "last_after"
    LAST_BETWEEN = "last_between"


_BETWEEN_KINDS = (ConstraintKind.FIRST_BETWEEN, ConstraintKind.LAST_BETWEEN)


@dataclass(frozen=True)
class ConstraintClass:
    """A scoring class with fractional-year anchors."""

    kind: ConstraintKind
    a1: float
    a2: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind in _BETWEEN_KINDS:
            if self.a2 is None:
                raise ValueError(f"{self.kind.value} requires two anchors")
            if self.a2 < self.a1:
                raise ValueError("anchors out of order")
        elif self.a2 is not None:
            raise ValueError(f"{self.kind.value} takes a single anchor")


@dataclass(frozen=True)
class CurveParams:
    """Shape parameters for the scoring curve.

    h: proximity decay scale in years; sigma_v: violation grace scale in
    years; eps_v: violation floor; delta: score for dateless passages;
    tau: between-window value at the far edge.
    """

    h: float = 30.0
    sigma_v: float = 1.0
    eps_v: float = 0.01
    delta: float = 0.3
    tau: float = 0.8

    def __post_init__(self) -> None:
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.sigma_v <= 0:
            raise ValueError("sigma_v must be positive")
        if not 0.0 <= self.eps_v < 1.0:
            raise ValueError("eps_v must be in [0, 1)")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("delta must be in [0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        if self.eps_v >= self.tau:
            raise ValueError("eps_v must be below tau")


# ---------------------------------------------------------------------------
# Fractional years
# ---------------------------------------------------------------------------

def to_fractional_year(point: TimePoint) -> float:
    """Map a time point to a fractional year at the midpoint of its span.

    Year only sits at mid-year (+0.5); year+month at mid-month; a full date at
    (day_of_year - 0.5) / 365.
    """
    if point.month is None:
        return point.year + 0.5
    if point.day is None:
        return point.year + (point.month - 0.5) / 12.0
    doy = datetime.date(point.year, point.month, point.day).timetuple().tm_yday
    return point.year + (doy - 0.5) / 365.0


# ---------------------------------------------------------------------------
# Date extraction
# ---------------------------------------------------------------------------

_MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6,
    "july": 7, "august": 8, "september": 9, "october": 10, "november": 11,
    "december": 12,
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "jun": 6, "jul": 7, "aug": 8,
    "sep": 9, "oct": 10, "nov": 11, "dec": 12,
}

_MONTH_PAT = r"(?:%s)\.?" % "|".join(sorted(_MONTHS, key=len, reverse=True))
_YEAR_PAT = r"[12]\d{3}"

# Ordered by specificity; earlier patterns consume their span so substrings
# (like the bare year inside a full date) are not re-emitted.
_DMY_RE = re.compile(
    rf"\b(\d{{1,2}})(?:st|nd|rd|th)?\s+({_MONTH_PAT})\s+({_YEAR_PAT})\b", re.IGNORECASE
)
_MDY_RE = re.compile(
    rf"\b({_MONTH_PAT})\s+(\d{{1,2}})(?:st|nd|rd|th)?,?\s+({_YEAR_PAT})\b", re.IGNORECASE
)
_MY_RE = re.compile(rf"\b({_MONTH_PAT})\s+({_YEAR_PAT})\b", re.IGNORECASE)
_RANGE_FROM_RE = re.compile(rf"\bfrom\s+({_YEAR_PAT})\s+to\s+({_YEAR_PAT})\b", re.IGNORECASE)
_RANGE_DASH_RE = re.compile(rf"\b({_YEAR_PAT})\s*[-–—]\s*({_YEAR_PAT})\b")
_YEAR_RE = re.compile(rf"\b({_YEAR_PAT})\b")


def _month_number(name: str) -> int:
    return _MONTHS[name.rstrip(".").lower()]


def _year_in_range(year: int) -> bool:
    return 1000 <= year <= 2100


def _safe_point(year: int, month: Optional[int] = None, day: Optional[int] = None) -> Optional[TimePoint]:
    # A matched but calendar-invalid day (e.g. February 30) keeps year+month.
    try:
        return TimePoint(year, month, day)
    except ValueError:
        if day is not None:
            return TimePoint(year, month)
        return None


def parse_timepoints_with_spans(text: str) -> List[Tuple[TimePoint, Tuple[int, int]]]:
    """Extract time points with their character spans, most specific first.

    Spans never overlap; each match consumes its span so contained substrings
    are skipped. Results are ordered by position, duplicates preserved here
    (parse_timepoints deduplicates).
    """
    taken: List[Tuple[int, int]] = []
    found: List[Tuple[TimePoint, Tuple[int, int]]] = []

    def overlaps(start: int, end: int) -> bool:
        return any(start < e and s < end for s, e in taken)

    def claim(point: Optional[TimePoint], start: int, end: int) -> None:
        if point is None or overlaps(start, end):
            return
        taken.append((start, end))
        found.append((point, (start, end)))

    for m in _DMY_RE.finditer(text):
        if _year_in_range(int(m.group(3))):
            claim(_safe_point(int(m.group(3)), _month_number(m.group(2)), int(m.group(1))),
                  m.start(), m.end())
    for m in _MDY_RE.finditer(text):
        if _year_in_range(int(m.group(3))):
            claim(_safe_point(int(m.group(3)), _month_number(m.group(1)), int(m.group(2))),
                  m.start(), m.end())
    for m in _MY_RE.finditer(text):
        if _year_in_range(int(m.group(2))):
            claim(_safe_point(int(m.group(2)), _month_number(m.group(1))), m.start(), m.end())
    for pattern in (_RANGE_FROM_RE, _RANGE_DASH_RE):
        for m in pattern.finditer(text):
            y1, y2 = int(m.group(1)), int(m.group(2))
            if _year_in_range(y1) and _year_in_range(y2) and not overlaps(m.start(), m.end()):
                taken.append((m.start(), m.end()))
                found.append((TimePoint(y1), (m.start(), m.end())))
                found.append((TimePoint(y2), (m.start(), m.end())))
    for m in _YEAR_RE.finditer(text):
        if _year_in_range(int(m.group(1))):
            claim(TimePoint(int(m.group(1))), m.start(), m.end())

    found.sort(key=lambda item: (item[1][0], item[1][1], to_fractional_year(item[0])))
    return found


def parse_timepoints(text: str) -> List[TimePoint]:
    """Extract deduplicated time points in order of first occurrence."""
    seen = set()
    out: List[TimePoint] = []
    for point, _ in parse_timepoints_with_spans(text):
        if point not in seen:
            seen.add(point)
            out.append(point)
    return out


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

_FIRST_CONDITIONS = (ImplicitCondition.FIRST, ImplicitCondition.EARLIEST)

_BEFORE_RELATIONS = (
    TemporalRelation.AS_OF,
    TemporalRelation.BEFORE,
    TemporalRelation.UNTIL,
    TemporalRelation.BY,
)
_AFTER_RELATIONS = (TemporalRelation.AFTER, TemporalRelation.SINCE)
_RANGE_RELATIONS = (TemporalRelation.BETWEEN, TemporalRelation.FROM_TO)

# Half-width in years of the implied window for point-in-time relations.
_POINT_WINDOW = {TemporalRelation.IN: 0.5, TemporalRelation.ON: 0.5, TemporalRelation.AROUND: 1.0}


def classify_constraint(constraint: TemporalConstraint) -> ConstraintClass:
    """Reduce a relation + implicit condition to one of the six score classes."""
    first = constraint.condition in _FIRST_CONDITIONS
    a1 = to_fractional_year(constraint.t1)

    if constraint.relation in _BEFORE_RELATIONS:
        kind = ConstraintKind.FIRST_BEFORE if first else ConstraintKind.LAST_BEFORE
        return ConstraintClass(kind, a1)
    if constraint.relation in _AFTER_RELATIONS:
        kind = ConstraintKind.FIRST_AFTER if first else ConstraintKind.LAST_AFTER
        return ConstraintClass(kind, a1)

    between = ConstraintKind.FIRST_BETWEEN if first else ConstraintKind.LAST_BETWEEN
    if constraint.relation in _RANGE_RELATIONS:
        a2 = to_fractional_year(constraint.t2)
        return ConstraintClass(between, min(a1, a2), max(a1, a2))
    width = _POINT_WINDOW[constraint.relation]
    return ConstraintClass(between, a1 - width, a1 + width)


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

_EXP5 = math.exp(-5.0)


def _proximity(d: float, params: CurveParams) -> float:
    return 1.0 / (1.0 + (d / params.h) ** 2)


def _violation(d: float, params: CurveParams, start: float = 1.0) -> float:
    # Exponential grace rescaled to hit 0 at 5*sigma_v, so the floor eps_v is
    # reached within five grace scales for every eps_v in [0, 1).
    decay = (math.exp(-d / params.sigma_v) - _EXP5) / (1.0 - _EXP5)
    return max(params.eps_v, start * decay)


def _point_score(cls: ConstraintClass, params: CurveParams, t: float) -> float:
    kind = cls.kind
    if kind is ConstraintKind.LAST_BEFORE:
        return _proximity(cls.a1 - t, params) if t <= cls.a1 else _violation(t - cls.a1, params)
    if kind is ConstraintKind.FIRST_AFTER:
        return _proximity(t - cls.a1, params) if t >= cls.a1 else _violation(cls.a1 - t, params)
    if kind is ConstraintKind.FIRST_BEFORE:
        return 1.0 if t <= cls.a1 else _violation(t - cls.a1, params)
    if kind is ConstraintKind.LAST_AFTER:
        return 1.0 if t >= cls.a1 else _violation(cls.a1 - t, params)

    a1, a2 = cls.a1, cls.a2
    if a2 == a1:
        # Collapsed point window: decay from 1 on both sides.
        if t == a1:
            return 1.0
        return _violation(abs(t - a1), params)
    if kind is ConstraintKind.LAST_BETWEEN:
        if t < a1:
            return _violation(a1 - t, params, start=params.tau)
        if t > a2:
            return _violation(t - a2, params)
        return params.tau + (1.0 - params.tau) * (t - a1) / (a2 - a1)
    # FIRST_BETWEEN mirrors LAST_BETWEEN: favored edge is a1.
    if t < a1:
        return _violation(a1 - t, params)
    if t > a2:
        return _violation(t - a2, params, start=params.tau)
    return 1.0 - (1.0 - params.tau) * (t - a1) / (a2 - a1)


def temporal_score(
    cls: ConstraintClass, params: CurveParams, points: Sequence[TimePoint] | Iterable[TimePoint]
) -> float:
    """Score a set of evidence dates against a constraint class.

    Returns the max over per-date scores, or delta when no dates are given.
    Always within [0, 1].
    """
    points = list(points)
    if not points:
        return params.delta
    return max(_point_score(cls, params, to_fractional_year(p)) for p in points)
