"""Direct and reverse cohort-component projection.

Forward, a cohort of N persons aged x in year t projects to age x + tau in
year t + tau with mean N S(x+tau)/S(x) and binomial variance. Backward, the
same cohort projects to age x - tau in year t - tau with mean
N S(x-tau)/S(x) and variance N (S(x-tau)/S(x) - 1), the moments of the
shifted-Poisson posterior in :mod:`cohortkit.distribution`.

Every coefficient of variation factors as ``factor / sqrt(N)``, where the
factor depends only on the life table. ``factor`` is reported alongside
``cv`` so that sweeps can be read independently of cohort size.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .errors import DomainError
from .life_table import LifeTable, survival

__all__ = [
    "FORWARD",
    "BACKWARD",
    "CohortState",
    "ProjectionEstimate",
    "SweepRow",
    "DirectionComparison",
    "AgeStructure",
    "DroppedBin",
    "LadderResult",
    "project",
    "project_forward",
    "project_backward",
    "round_trip",
    "project_ladder",
    "load_age_structure",
    "cv_sweep",
    "sweep_maximum",
    "compare_directions",
]

FORWARD = "forward"
BACKWARD = "backward"
_DIRECTIONS = (FORWARD, BACKWARD)


def _check_direction(direction):
    if direction not in _DIRECTIONS:
        raise DomainError(f"direction must be 'forward' or 'backward', got {direction!r}")
    return direction


@dataclass(frozen=True)
class CohortState:
    """``count`` persons aged ``age`` in ``year``. Counts may be non-integer estimates."""

    age: float
    year: float
    count: float

    def __post_init__(self):
        if not (math.isfinite(self.count) and self.count >= 0):
            raise DomainError(f"count must be finite and nonnegative, got {self.count}")
        if not (math.isfinite(self.age) and self.age >= 0):
            raise DomainError(f"age must be finite and nonnegative, got {self.age}")


@dataclass(frozen=True)
class ProjectionEstimate:
    direction: str
    tau: float
    mean: float
    variance: float
    cv: Optional[float]
    factor: float
    source: CohortState

    @property
    def target_age(self):
        sign = 1 if self.direction == FORWARD else -1
        return self.source.age + sign * self.tau

    @property
    def target_year(self):
        sign = 1 if self.direction == FORWARD else -1
        return self.source.year + sign * self.tau

    @property
    def target(self) -> CohortState:
        return CohortState(self.target_age, self.target_year, self.mean)


def _check_tau(tau):
    if not (math.isfinite(tau) and tau > 0):
        raise DomainError(f"tau must be a positive finite number, got {tau}")


def _cv(factor, count):
    return factor / math.sqrt(count) if count > 0 else None


def project_forward(lt: LifeTable, c: CohortState, tau: float) -> ProjectionEstimate:
    """Survivors of ``c`` after ``tau`` years: binomial mean, variance and CV."""
    _check_tau(tau)
    s_from = survival(lt, c.age)
    s_to = survival(lt, c.age + tau)
    p = s_to / s_from
    factor = math.sqrt(s_from / s_to - 1.0)
    return ProjectionEstimate(
        direction=FORWARD,
        tau=tau,
        mean=c.count * p,
        variance=c.count * p * (1.0 - p),
        cv=_cv(factor, c.count),
        factor=factor,
        source=c,
    )


def project_backward(lt: LifeTable, c: CohortState, tau: float) -> ProjectionEstimate:
    """Size of the cohort ``tau`` years earlier, given ``c`` survivors now."""
    _check_tau(tau)
    if c.age - tau < 0:
        raise DomainError(f"cannot project age {c.age} back by {tau} years")
    s_now = survival(lt, c.age)
    s_then = survival(lt, c.age - tau)
    inflate = s_then / s_now
    q = s_now / s_then
    factor = math.sqrt(q * (1.0 - q))
    return ProjectionEstimate(
        direction=BACKWARD,
        tau=tau,
        mean=c.count * inflate,
        variance=c.count * (inflate - 1.0),
        cv=_cv(factor, c.count),
        factor=factor,
        source=c,
    )


def project(lt, c, tau, direction):
    if _check_direction(direction) == FORWARD:
        return project_forward(lt, c, tau)
    return project_backward(lt, c, tau)


def round_trip(lt: LifeTable, c: CohortState, tau: float) -> Tuple[ProjectionEstimate, float]:
    """Project ``c`` backward, then the backward mean forward again.

    Returns the backward estimate and the recovered count, which equals
    ``c.count`` up to rounding.
    """
    back = project_backward(lt, c, tau)
    recovered = project_forward(lt, back.target, tau).mean
    return back, recovered


@dataclass(frozen=True)
class AgeStructure:
    """Counts by age in one year, on a uniform age step."""

    year: float
    ages: Tuple[float, ...]
    counts: Tuple[float, ...]

    def __post_init__(self):
        ages = tuple(float(a) for a in self.ages)
        counts = tuple(float(c) for c in self.counts)
        if len(ages) != len(counts):
            raise DomainError("ages and counts differ in length")
        for c in counts:
            if not (math.isfinite(c) and c >= 0):
                raise DomainError(f"counts must be finite and nonnegative, got {c}")
        steps = [b - a for a, b in zip(ages, ages[1:])]
        if any(s <= 0 for s in steps):
            raise DomainError("ages must be strictly increasing")
        if steps and any(not math.isclose(s, steps[0], rel_tol=1e-9) for s in steps):
            raise DomainError("ages must lie on a uniform step")
        object.__setattr__(self, "ages", ages)
        object.__setattr__(self, "counts", counts)

    @property
    def step(self) -> Optional[float]:
        return self.ages[1] - self.ages[0] if len(self.ages) > 1 else None

    @property
    def bins(self):
        return list(zip(self.ages, self.counts))

    @property
    def total(self):
        return math.fsum(self.counts)

    def __len__(self):
        return len(self.ages)


def load_age_structure(source, year=0.0) -> AgeStructure:
    """Parse CSV with header ``age,count``; rows may be unsorted."""
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or [h.strip().lstrip("﻿") for h in header] != ["age", "count"]:
        raise DomainError("expected header 'age,count'")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise DomainError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            rows.append((float(row[0]), float(row[1])))
        except ValueError:
            raise DomainError(f"line {lineno}: malformed number in {row!r}") from None
    rows.sort()
    return AgeStructure(year, tuple(a for a, _ in rows), tuple(c for _, c in rows))


@dataclass(frozen=True)
class DroppedBin:
    """A bin whose shifted age left the life table; ``count`` is its pre-shift count."""

    step: int
    year: float
    source_age: float
    target_age: float
    count: float


@dataclass
class LadderResult:
    structures: List[AgeStructure]
    dropped: List[DroppedBin] = field(default_factory=list)


def project_ladder(lt: LifeTable, s: AgeStructure, steps: int, direction: str,
                   tau: Optional[float] = None) -> LadderResult:
    """Apply one projection step ``steps`` times to every bin of ``s``.

    The step tau is the age step of ``s`` (required explicitly for a single
    bin). No births or migration: bins only age. Bins whose shifted age falls
    outside the life table are removed and listed in ``dropped``.
    """
    _check_direction(direction)
    if len(s) == 0:
        raise DomainError("empty age structure")
    if steps < 1 or int(steps) != steps:
        raise DomainError(f"steps must be a positive integer, got {steps}")
    if s.step is None:
        if tau is None:
            raise DomainError("tau is required for a single-bin structure")
    elif tau is None:
        tau = s.step
    elif not math.isclose(tau, s.step, rel_tol=1e-9):
        raise DomainError(f"step mismatch: structure step {s.step}, tau {tau}")
    _check_tau(tau)

    sign = 1 if direction == FORWARD else -1
    result = LadderResult([])
    current = s
    for k in range(1, int(steps) + 1):
        year = current.year + sign * tau
        ages, counts = [], []
        for age, count in current.bins:
            target = age + sign * tau
            if target < 0 or target > lt.max_age:
                result.dropped.append(DroppedBin(k, year, age, target, count))
                continue
            est = project(lt, CohortState(age, current.year, count), tau, direction)
            ages.append(target)
            counts.append(est.mean)
        current = AgeStructure(year, tuple(ages), tuple(counts))
        result.structures.append(current)
    return result


@dataclass(frozen=True)
class SweepRow:
    x: float
    tau: float
    factor: float
    cv: float


def _grid(lt, x_min, x_max, tau_min, tau_max):
    for v in (x_min, x_max, tau_min, tau_max):
        if not math.isfinite(v):
            raise DomainError("sweep bounds must be finite")
    if x_min < 0 or x_max > lt.max_age:
        raise DomainError(f"x range [{x_min}, {x_max}] outside life table [0, {lt.max_age}]")
    if tau_min <= 0:
        raise DomainError(f"tau_min must be positive, got {tau_min}")
    xs = range(math.ceil(x_min), math.floor(x_max) + 1)
    taus = range(math.ceil(tau_min), math.floor(tau_max) + 1)
    return xs, taus


def _valid(lt, x, tau, direction):
    if direction == FORWARD:
        return x + tau <= lt.max_age
    return x - tau >= 0


def cv_sweep(lt: LifeTable, x_max=70, tau_min=1, tau_max=45, N=1.0,
             direction=FORWARD, x_min=0) -> List[SweepRow]:
    """CV factor and CV at every integer (x, tau) of the grid, ordered by (x, tau).

    Grid points whose target age leaves the table are skipped.
    """
    _check_direction(direction)
    if not (math.isfinite(N) and N > 0):
        raise DomainError(f"N must be positive, got {N}")
    xs, taus = _grid(lt, x_min, x_max, tau_min, tau_max)
    rows = []
    for x in xs:
        for tau in taus:
            if not _valid(lt, x, tau, direction):
                continue
            est = project(lt, CohortState(x, 0.0, N), tau, direction)
            rows.append(SweepRow(x, tau, est.factor, est.cv))
    if not rows:
        raise DomainError("empty sweep grid")
    return rows


def sweep_maximum(rows: List[SweepRow]) -> SweepRow:
    """Row with the largest factor; ties go to the smallest (x, tau)."""
    if not rows:
        raise DomainError("empty sweep")
    best = None
    for row in sorted(rows, key=lambda r: (r.x, r.tau)):
        if best is None or row.factor > best.factor:
            best = row
    return best


@dataclass(frozen=True)
class DirectionComparison:
    """Forward and backward CVs at the same age x and horizon tau."""

    x: float
    tau: float
    v1: float
    v2: float
    ratio: Optional[float]


def compare_directions(lt: LifeTable, x_max=70, tau_min=1, tau_max=45, N=1.0,
                       x_min=0) -> List[DirectionComparison]:
    """V2 / V1 at each grid point valid in both directions (``ratio`` absent where V1 = 0)."""
    if not (math.isfinite(N) and N > 0):
        raise DomainError(f"N must be positive, got {N}")
    xs, taus = _grid(lt, x_min, x_max, tau_min, tau_max)
    out = []
    for x in xs:
        for tau in taus:
            if not (_valid(lt, x, tau, FORWARD) and _valid(lt, x, tau, BACKWARD)):
                continue
            c = CohortState(x, 0.0, N)
            v1 = project_forward(lt, c, tau).cv
            v2 = project_backward(lt, c, tau).cv
            out.append(DirectionComparison(x, tau, v1, v2, v2 / v1 if v1 > 0 else None))
    if not out:
        raise DomainError("empty comparison grid")
    return out
