"""Plot temporal score curves as ASCII bars over a grid of years.

Shows how each constraint class rewards dates: a proximity peak decaying
into a violation tail for "latest before", a plateau for "last after",
and the window ramp for "between".

Usage: python3 demos/curve_sweep.py
"""

from chronorag import ConstraintClass, ConstraintKind, CurveParams, TimePoint, sweep

PARAMS = CurveParams()
WIDTH = 48


def show(title: str, cls: ConstraintClass, years: range) -> None:
    print(title)
    rows = sweep(cls, PARAMS, [TimePoint(y) for y in years])
    for row in rows:
        bar = "#" * round(row.temporal * WIDTH)
        print(f"  {row.date} |{bar:<{WIDTH}}| {row.temporal:.4f}")
    print()


def main() -> None:
    show(
        "last_before 1981.5 (latest event by mid-1981)",
        ConstraintClass(ConstraintKind.LAST_BEFORE, 1981.5),
        range(1966, 1991, 2),
    )
    show(
        "last_after 1960.5 (latest event since mid-1960)",
        ConstraintClass(ConstraintKind.LAST_AFTER, 1960.5),
        range(1950, 1975, 2),
    )
    show(
        "last_between 1994.5 and 2004.5 (latest event inside the window)",
        ConstraintClass(ConstraintKind.LAST_BETWEEN, 1994.5, 2004.5),
        range(1988, 2013, 2),
    )


if __name__ == "__main__":
    main()
