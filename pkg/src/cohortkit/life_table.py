"""Tabulated survival functions and conditional survival probabilities.

A life table is a list of (age, S(age)) knots with S(0) = 1. Between knots
the survival function is interpolated linearly in ``log S`` (a constant
hazard on each interval), which keeps it positive and nonincreasing.
Evaluation beyond the last tabulated age is an error; there is no tail model.
"""

import bisect
import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, TextIO, Tuple, Union

from .errors import DomainError, LifeTableError

__all__ = [
    "LifeTable",
    "load_life_table",
    "bundled_life_table",
    "survival",
    "conditional_survival",
]


@dataclass(frozen=True)
class LifeTable:
    """Immutable survival function tabulated at strictly increasing ages.

    Use :meth:`from_entries` or :func:`load_life_table` rather than the
    constructor; both validate the invariants.
    """

    ages: Tuple[float, ...]
    values: Tuple[float, ...]
    name: str = ""

    def __post_init__(self):
        _validate(self.ages, self.values)
        # cached for interpolation; not part of equality
        object.__setattr__(self, "_log_values", tuple(math.log(s) for s in self.values))

    @classmethod
    def from_entries(cls, entries: Iterable[Tuple[float, float]], name: str = ""):
        """Build a table from ``(age, survival)`` pairs given in increasing age order."""
        entries = list(entries)
        ages = tuple(float(a) for a, _ in entries)
        values = tuple(float(s) for _, s in entries)
        return cls(ages, values, name)

    @property
    def max_age(self) -> float:
        return self.ages[-1]

    @property
    def entries(self):
        return list(zip(self.ages, self.values))

    def __len__(self):
        return len(self.ages)

    def survival(self, x: float) -> float:
        return survival(self, x)

    def conditional_survival(self, x: float, tau: float) -> float:
        return conditional_survival(self, x, tau)


def _validate(ages, values):
    if len(ages) != len(values):
        raise LifeTableError("ages and survival values differ in length")
    if len(ages) < 2:
        raise LifeTableError("a life table needs at least 2 entries")
    for a, s in zip(ages, values):
        if not (math.isfinite(a) and math.isfinite(s)):
            raise LifeTableError(f"non-finite entry ({a}, {s})")
    if ages[0] != 0:
        raise LifeTableError(f"first age must be 0, got {ages[0]}")
    for prev, cur in zip(ages, ages[1:]):
        if cur <= prev:
            raise LifeTableError(f"ages not strictly increasing: {prev} then {cur}")
    if values[0] != 1.0:
        raise LifeTableError(f"survival at age 0 must be 1, got {values[0]}")
    for a, s in zip(ages, values):
        if not 0.0 < s <= 1.0:
            raise LifeTableError(f"survival at age {a} outside (0, 1]: {s}")
    for (a0, s0), (a1, s1) in zip(zip(ages, values), zip(ages[1:], values[1:])):
        if s1 > s0:
            raise LifeTableError(f"survival increases from age {a0} ({s0}) to age {a1} ({s1})")


def load_life_table(source: Union[TextIO, str], name: str = "") -> LifeTable:
    """Parse a life table from CSV with header ``age,survival``.

    ``source`` is an open text stream or a string holding the CSV text. Rows
    may appear in any order; they are sorted by age, and a repeated age is an
    error.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise LifeTableError("empty life table input") from None
    if [h.strip().lstrip("﻿") for h in header] != ["age", "survival"]:
        raise LifeTableError(f"expected header 'age,survival', got {','.join(header)!r}")

    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise LifeTableError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            age, value = float(row[0]), float(row[1])
        except ValueError:
            raise LifeTableError(f"line {lineno}: malformed number in {row!r}") from None
        rows.append((age, value))

    rows.sort(key=lambda r: r[0])
    for (a0, _), (a1, _) in zip(rows, rows[1:]):
        if a0 == a1:
            raise LifeTableError(f"duplicate age {a0}")
    return LifeTable.from_entries(rows, name=name)


def bundled_life_table() -> LifeTable:
    """The synthetic five-year life table shipped with the package (ages 0 to 115)."""
    text = resources.files("cohortkit").joinpath("data/synthetic_life_table.csv").read_text("utf-8")
    return load_life_table(text, name="synthetic")


def _check_age(lt, x):
    if not math.isfinite(x) or x < 0:
        raise DomainError(f"age must be a nonnegative finite number, got {x}")
    if x > lt.max_age:
        raise DomainError(f"age {x} beyond last tabulated age {lt.max_age}")


def survival(lt: LifeTable, x: float) -> float:
    """S(x): tabulated value at knots, log-linear interpolation between them."""
    _check_age(lt, x)
    ages = lt.ages
    i = bisect.bisect_left(ages, x)
    if ages[i] == x:
        return lt.values[i]
    lo, hi = lt.values[i], lt.values[i - 1]
    if lo == hi:
        return hi
    logs = lt._log_values
    w = (x - ages[i - 1]) / (ages[i] - ages[i - 1])
    s = math.exp(logs[i - 1] + w * (logs[i] - logs[i - 1]))
    # rounding in exp must not step outside the bracketing knots
    return min(max(s, lo), hi)


def conditional_survival(lt: LifeTable, x: float, tau: float) -> float:
    """Probability that a person aged ``x`` survives to age ``x + tau``."""
    if not math.isfinite(tau) or tau < 0:
        raise DomainError(f"tau must be a nonnegative finite number, got {tau}")
    _check_age(lt, x)
    if tau == 0:
        return 1.0
    return survival(lt, x + tau) / survival(lt, x)
