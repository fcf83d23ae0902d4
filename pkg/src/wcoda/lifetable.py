"""Life-table ingestion, death-count derivation and descriptive summaries.

Death counts are rebuilt from death probabilities through the survivorship
recursion ``l_0 = radix``, ``d_x = l_x q_x``, ``l_{x+1} = l_x - d_x``. Cells that
still come out (numerically) zero are floored and the row is closed back to
the radix so that every count is usable on the log scale.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .errors import DomainError, ParseError, StructuralError

DEFAULT_RADIX = 100_000.0
TERMINAL_AGE = 110
ZERO_FLOOR = 1e-6
SEXES = ("female", "male", "total")


@dataclass(frozen=True)
class MortalityInputs:
    """Death probabilities ``qx`` indexed by (year, age)."""

    years: np.ndarray
    ages: np.ndarray
    qx: np.ndarray
    radix: float = DEFAULT_RADIX
    sex: str = "total"

    def __post_init__(self):
        qx = np.asarray(self.qx, dtype=float)
        years, ages = _check_axes(self.years, self.ages, qx.shape)
        if not np.all(np.isfinite(qx)):
            raise DomainError("qx contains non-finite values")
        if np.any(qx < 0) or np.any(qx > 1):
            r, c = np.argwhere((qx < 0) | (qx > 1))[0]
            raise DomainError(
                f"qx outside [0, 1] at year {years[r]}, age {ages[c]}: {qx[r, c]}"
            )
        if qx.shape[1] > 1 and np.any(qx[:, :-1] >= 1):
            r, c = np.argwhere(qx[:, :-1] >= 1)[0]
            raise DomainError(
                f"qx = 1 below the terminal age at year {years[r]}, age {ages[c]}"
            )
        if np.any(np.abs(qx[:, -1] - 1.0) > 1e-9):
            r = int(np.argmax(np.abs(qx[:, -1] - 1.0)))
            raise DomainError(
                f"table is not closed: terminal qx = {qx[r, -1]} in year {years[r]}"
            )
        if not self.radix > 0:
            raise DomainError("radix must be positive")
        qx = qx.copy()
        qx[:, -1] = 1.0
        qx.setflags(write=False)
        object.__setattr__(self, "qx", qx)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "ages", ages)

    @property
    def shape(self):
        return self.qx.shape


@dataclass(frozen=True)
class LifeTableSeries:
    """Years x ages matrix of strictly positive death counts under a radix.

    ``repairs`` counts the cells that were floored during construction; it is
    carried along so that outputs can flag repaired inputs.
    """

    years: np.ndarray
    ages: np.ndarray
    counts: np.ndarray
    radix: float = DEFAULT_RADIX
    sex: str = "total"
    repairs: int = 0
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        counts = np.array(self.counts, dtype=float)
        years, ages = _check_axes(self.years, self.ages, counts.shape)
        if not self.radix > 0:
            raise DomainError("radix must be positive")
        if not np.all(np.isfinite(counts)):
            raise DomainError("death counts contain non-finite values")
        if np.any(counts <= 0):
            r, c = np.argwhere(counts <= 0)[0]
            raise DomainError(
                f"non-positive death count at year {years[r]}, age {ages[c]}"
            )
        sums = counts.sum(axis=1)
        bad = np.abs(sums - self.radix) > 1e-6 * self.radix
        if np.any(bad):
            r = int(np.argmax(bad))
            raise DomainError(
                f"year {years[r]} sums to {sums[r]!r}, expected radix {self.radix}"
            )
        if self.sex not in SEXES:
            raise DomainError(f"unknown sex label {self.sex!r}")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "ages", ages)

    @property
    def n_years(self) -> int:
        return self.counts.shape[0]

    @property
    def n_ages(self) -> int:
        return self.counts.shape[1]

    def densities(self) -> np.ndarray:
        return self.counts / self.radix

    def select_years(self, start=None, end=None) -> "LifeTableSeries":
        """Sub-series for ``start <= year <= end`` (inclusive, either may be None)."""
        mask = np.ones(self.n_years, dtype=bool)
        if start is not None:
            mask &= self.years >= start
        if end is not None:
            mask &= self.years <= end
        if not mask.any():
            raise DomainError(f"no years in [{start}, {end}]")
        return LifeTableSeries(
            self.years[mask],
            self.ages,
            self.counts[mask],
            self.radix,
            self.sex,
            self.repairs,
            dict(self.metadata),
        )

    @classmethod
    def from_counts(cls, years, ages, counts, radix=DEFAULT_RADIX, sex="total"):
        """Build a series from arbitrary nonnegative counts.

        Each row is closed to ``radix`` and zero cells are repaired with the
        same floor-and-renormalize rule used for derived counts.
        """
        counts = np.array(counts, dtype=float)
        if counts.ndim != 2:
            raise StructuralError("counts must be a years x ages matrix")
        if np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise DomainError("counts must be finite and nonnegative")
        sums = counts.sum(axis=1, keepdims=True)
        if np.any(sums <= 0):
            raise DomainError("a year has no deaths")
        counts = counts / sums * radix
        counts, repairs = repair_zero_cells(counts, radix)
        return cls(years, ages, counts, radix, sex, repairs)


def _check_axes(years, ages, shape):
    years = np.asarray(years, dtype=np.int64).copy()
    ages = np.asarray(ages, dtype=np.int64).copy()
    if len(shape) != 2:
        raise StructuralError(f"expected a 2-D years x ages table, got shape {shape}")
    if shape != (len(years), len(ages)):
        raise StructuralError(
            f"table shape {shape} does not match axes ({len(years)}, {len(ages)})"
        )
    if len(years) == 0 or len(ages) == 0:
        raise StructuralError("empty table")
    if np.any(np.diff(years) != 1):
        i = int(np.argmax(np.diff(years) != 1))
        raise StructuralError(f"years not consecutive: {years[i]} -> {years[i + 1]}")
    if ages[0] != 0 or np.any(np.diff(ages) != 1):
        raise StructuralError("ages must be contiguous from 0")
    years.setflags(write=False)
    ages.setflags(write=False)
    return years, ages


def repair_zero_cells(counts: np.ndarray, radix: float, floor: float = ZERO_FLOOR):
    """Floor cells below ``floor`` and close each row back to ``radix``.

    Returns the repaired matrix and the number of floored cells.
    """
    counts = np.array(counts, dtype=float)
    low = counts < floor
    n = int(low.sum())
    if n:
        counts[low] = floor
        counts *= radix / counts.sum(axis=1, keepdims=True)
    return counts, n


def derive_death_counts(inputs: MortalityInputs) -> LifeTableSeries:
    """Rebuild life-table death counts from death probabilities and the radix."""
    qx = inputs.qx
    n_years, n_ages = qx.shape
    d = np.empty_like(qx)
    lx = np.full(n_years, float(inputs.radix))
    for x in range(n_ages):
        d[:, x] = lx * qx[:, x]
        lx = lx - d[:, x]
    # qx[-1] == 1 makes every row telescope to the radix; clean the rounding.
    d *= inputs.radix / d.sum(axis=1, keepdims=True)
    d, repairs = repair_zero_cells(d, inputs.radix)
    meta = {"zero_floor": ZERO_FLOOR, "repaired_cells": repairs}
    return LifeTableSeries(
        inputs.years, inputs.ages, d, inputs.radix, inputs.sex, repairs, meta
    )


def gini_coefficient(d) -> float:
    """Discrete Gini coefficient of an age-at-death distribution.

    Shares are sorted ascending, accumulated into a Lorenz polyline through
    ``(0, 0)`` and ``(i / N, L_i)``, and ``2 * integral(p - L(p))`` is taken by
    the trapezoid rule. A point mass over N ages gives ``1 - 1/N``; a uniform
    distribution gives 0.
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 1 or d.size == 0:
        raise DomainError("gini_coefficient expects a non-empty vector")
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise DomainError("death counts must be finite and nonnegative")
    total = d.sum()
    if total <= 0:
        raise DomainError("death-count vector has zero total")
    n = d.size
    lorenz = np.concatenate(([0.0], np.cumsum(np.sort(d)) / total))
    area = (lorenz[:-1] + lorenz[1:]).sum() / (2.0 * n)
    return float(min(max(1.0 - 2.0 * area, 0.0), 1.0))


def life_expectancy_at_birth(d, radix=DEFAULT_RADIX, ax=0.5, rtol=1e-6) -> float:
    """Period life expectancy at birth, ``sum((x + a_x) d_x) / radix``."""
    d = np.asarray(d, dtype=float)
    total = d.sum()
    if abs(total - radix) > rtol * radix:
        raise DomainError(f"death counts sum to {total}, expected radix {radix}")
    ages = np.arange(d.size, dtype=float)
    return float(np.dot(ages + ax, d) / radix)


# --------------------------------------------------------------------------
# parsing

_AGE_RE = re.compile(r"^(\d+)\+?$")


def _parse_age(token, line):
    m = _AGE_RE.match(token.strip())
    if not m:
        raise ParseError(f"bad age token {token!r}", line)
    return int(m.group(1))


def _parse_number(token, line, what):
    token = token.strip()
    if token in ("", ".", "NA", "NaN", "nan", "-"):
        raise ParseError(f"missing {what}", line)
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad {what} {token!r}", line) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite {what}", line)
    if value < 0:
        raise DomainError(f"line {line}: negative {what} {value}")
    return value


def _grid(records, line_of):
    """Assemble {(year, age): value} records into a validated matrix."""
    years = sorted({y for y, _ in records})
    ages = sorted({a for _, a in records})
    if not records:
        raise ParseError("no data rows")
    for a, b in zip(years, years[1:]):
        if b != a + 1:
            raise StructuralError(f"years not consecutive: {a} -> {b}")
    if ages[0] != 0 or ages != list(range(ages[-1] + 1)):
        raise StructuralError("ages must be contiguous from 0")
    out = np.full((len(years), len(ages)), np.nan)
    y0 = years[0]
    for (y, a), v in records.items():
        out[y - y0, a] = v
    if np.isnan(out).any():
        r, c = np.argwhere(np.isnan(out))[0]
        raise StructuralError(f"missing cell for year {years[r]}, age {ages[c]}")
    return np.array(years), np.array(ages), out


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _parse_hmd(text, sex):
    """Whitespace table with a ``Year Age ...`` header, preamble lines skipped."""
    lines = text.splitlines()
    header_at = None
    for i, raw in enumerate(lines):
        toks = raw.split()
        if len(toks) >= 3 and toks[0].lower() == "year" and toks[1].lower() == "age":
            header_at = i
            break
    if header_at is None:
        raise ParseError("no 'Year Age ...' header found")
    header = [t.lower() for t in lines[header_at].split()]
    if sex in header:
        col = header.index(sex)
    elif "qx" in header:
        col = header.index("qx")
    elif "dx" in header:
        col = header.index("dx")
    else:
        raise ParseError(f"no column for sex {sex!r} in header", header_at + 1)
    records = {}
    lines_of = {}
    for i in range(header_at + 1, len(lines)):
        lineno = i + 1
        toks = lines[i].split()
        if not toks:
            continue
        if len(toks) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, found {len(toks)}", lineno
            )
        try:
            year = int(toks[0])
        except ValueError:
            raise ParseError(f"bad year token {toks[0]!r}", lineno) from None
        age = _parse_age(toks[1], lineno)
        key = (year, age)
        if key in records:
            raise ParseError(f"duplicate cell year {year}, age {age}", lineno)
        records[key] = _parse_number(toks[col], lineno, header[col])
        lines_of[key] = lineno
    return _grid(records, lines_of)


def _parse_csv(text):
    reader = csv.reader(io.StringIO(text))
    rows = iter(enumerate(reader, start=1))
    try:
        _, header = next(rows)
    except StopIteration:
        raise ParseError("empty CSV") from None
    header = [h.strip().lower() for h in header]
    if header[:2] != ["year", "age"] or len(header) != 3:
        raise ParseError("CSV header must be 'year,age,<value|qx|count>'", 1)
    kind = header[2]
    if kind not in ("value", "qx", "count"):
        raise ParseError(f"unknown value column {kind!r}", 1)
    records = {}
    for lineno, row in rows:
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, found {len(row)}", lineno)
        try:
            year = int(row[0])
        except ValueError:
            raise ParseError(f"bad year token {row[0]!r}", lineno) from None
        age = _parse_age(row[1], lineno)
        if (year, age) in records:
            raise ParseError(f"duplicate cell year {year}, age {age}", lineno)
        records[(year, age)] = _parse_number(row[2], lineno, kind)
    years, ages, values = _grid(records, None)
    return kind, years, ages, values


def parse_life_table(source, format="csv", sex="total", radix=DEFAULT_RADIX):
    """Parse a life-table file.

    Parameters
    ----------
    source : bytes, str or binary/text stream
        File content.
    format : {"hmd_deaths", "hmd_qx", "csv"}
        ``hmd_qx`` returns :class:`MortalityInputs`; ``hmd_deaths`` closes the
        selected column to the radix and returns :class:`LifeTableSeries`.
        ``csv`` (header ``year,age,value``) returns ``MortalityInputs`` for
        ``value``/``qx`` columns and ``LifeTableSeries`` for ``count``.
    sex : {"female", "male", "total"}
        Column picked from HMD files with per-sex columns.
    """
    if sex not in SEXES:
        raise DomainError(f"unknown sex label {sex!r}")
    text = _read_text(source)
    if format == "hmd_qx":
        years, ages, values = _parse_hmd(text, sex)
        return MortalityInputs(years, ages, values, radix, sex)
    if format == "hmd_deaths":
        years, ages, values = _parse_hmd(text, sex)
        return LifeTableSeries.from_counts(years, ages, values, radix, sex)
    if format == "csv":
        kind, years, ages, values = _parse_csv(text)
        if kind == "count":
            return LifeTableSeries.from_counts(years, ages, values, radix, sex)
        return MortalityInputs(years, ages, values, radix, sex)
    raise DomainError(f"unknown format {format!r}")


def load_series(source, format="csv", sex="total", radix=DEFAULT_RADIX):
    """Parse and, if the file holds probabilities, derive death counts."""
    parsed = parse_life_table(source, format, sex, radix)
    if isinstance(parsed, MortalityInputs):
        return derive_death_counts(parsed)
    return parsed


def write_counts_csv(series: LifeTableSeries, stream: IO[str]) -> None:
    """Canonical ``year,age,count`` CSV with six decimals."""
    stream.write("year,age,count\n")
    for i, year in enumerate(series.years):
        for j, age in enumerate(series.ages):
            stream.write(f"{year},{age},{series.counts[i, j]:.6f}\n")


def summarize(series: LifeTableSeries) -> list[tuple[int, float, float]]:
    """Per-year (year, Gini, e0) triples for plotting."""
    return [
        (
            int(y),
            gini_coefficient(series.counts[i]),
            life_expectancy_at_birth(series.counts[i], series.radix),
        )
        for i, y in enumerate(series.years)
    ]
