"""Datasets: loading, validation, standardization, event matching.

Wide CSV layout is one row per sample (outcome, 0/1 treatment, covariates).
Long CSV layout is one row per meter reading
(``user_id,timestamp,consumption,<covariates...>``) and is turned into a wide
dataset by :func:`build_event_dataset`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateColumn,
    EmptyGroup,
    InvalidTreatmentValue,
    LengthMismatch,
    MissingColumn,
    NoEligibleRecords,
    NonFiniteValue,
    ParseError,
    ValidationError,
)


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Outcomes ``y``, binary treatments ``t`` and an ``(n, d)`` covariate matrix ``x``."""

    y: np.ndarray
    t: np.ndarray
    x: np.ndarray
    column_names: tuple = ()

    def __post_init__(self):
        y = _frozen(self.y).reshape(-1)
        t = _frozen(self.t).reshape(-1)
        x = np.array(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if x.size else np.empty((y.size, 0))
        x.setflags(write=False)
        if t.shape != y.shape or x.ndim != 2 or x.shape[0] != y.size:
            raise LengthMismatch(
                f"inconsistent lengths: y={y.size}, t={t.size}, x={x.shape}"
            )
        if y.size < 2:
            raise ValidationError("a dataset needs at least 2 samples")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise NonFiniteValue("dataset contains non-finite values")
        if not np.all((t == 0.0) | (t == 1.0)):
            raise InvalidTreatmentValue("treatment values must be exactly 0 or 1")
        names = tuple(self.column_names) or tuple(f"x{j + 1}" for j in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise LengthMismatch(f"{len(names)} column names for {x.shape[1]} covariates")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def n_treated(self) -> int:
        return int(self.t.sum())

    @property
    def treated_fraction(self) -> float:
        return float(self.t.mean())


def _parse_float(text, line, column):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line=line, column=column) from None
    if not math.isfinite(value):
        raise NonFiniteValue(f"non-finite value {text!r}", line=line, column=column)
    return value


def load_csv(
    path,
    y_column: str = "y",
    t_column: str = "t",
    covariate_columns: Sequence[str] | None = None,
) -> Dataset:
    """Read a wide-format CSV (comma separated, header row, '.' decimals).

    ``covariate_columns=None`` takes every column other than the outcome and
    treatment, in file order. Line numbers in errors are 1-based and count the
    header.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        if covariate_columns is None:
            covariate_columns = [h for h in header if h not in (y_column, t_column)]
        for name in (y_column, t_column, *covariate_columns):
            if name not in header:
                raise MissingColumn(f"missing column {name!r}", line=1, column=name)
        iy, it = header.index(y_column), header.index(t_column)
        ix = [header.index(c) for c in covariate_columns]

        ys, ts, xs = [], [], []
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(row)}", line=line
                )
            ys.append(_parse_float(row[iy], line, y_column))
            tv = _parse_float(row[it], line, t_column)
            if tv not in (0.0, 1.0):
                raise InvalidTreatmentValue(
                    f"treatment must be 0 or 1, got {row[it]!r}", line=line, column=t_column
                )
            ts.append(tv)
            xs.append([_parse_float(row[j], line, header[j]) for j in ix])
    if len(ys) < 2:
        raise ParseError(f"need at least 2 data rows, found {len(ys)}")
    x = np.array(xs, dtype=np.float64).reshape(len(ys), len(ix))
    return Dataset(np.array(ys), np.array(ts), x, tuple(covariate_columns))


def write_csv(dataset: Dataset, path, y_column="y", t_column="t") -> None:
    """Write ``dataset`` in wide format; floats use ``repr`` so they round-trip exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([y_column, t_column, *dataset.column_names])
        for i in range(dataset.n):
            w.writerow(
                [repr(float(dataset.y[i])), str(int(dataset.t[i]))]
                + [repr(float(v)) for v in dataset.x[i]]
            )


def standardize_covariates(dataset: Dataset, min_variance: float = 1e-12):
    """Shift and scale every covariate to mean 0, variance 1 (1/N divisor).

    Returns ``(standardized, means, scales)``; the original covariates are
    ``standardized.x * scales + means`` up to rounding.
    """
    x = dataset.x
    means = x.mean(axis=0)
    var = ((x - means) ** 2).mean(axis=0)
    for j, v in enumerate(var):
        if not v > min_variance:
            raise DegenerateColumn(
                f"covariate {dataset.column_names[j]!r} has variance {v:.3g}"
            )
    scales = np.sqrt(var)
    z = (x - means) / scales
    # the float mean is off by up to half an ulp of the offset, which the
    # division amplifies when the offset dwarfs the spread; finish in z units
    z -= z.mean(axis=0)
    z /= np.sqrt((z**2).mean(axis=0))
    return Dataset(dataset.y, dataset.t, z, dataset.column_names), means, scales


# -- long format / event matching ------------------------------------------


def parse_timestamp(text: str) -> datetime:
    """ISO-8601 date-hour; minutes and seconds are truncated."""
    try:
        ts = datetime.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(f"bad timestamp {text!r}") from None
    return ts.replace(minute=0, second=0, microsecond=0, tzinfo=None)


@dataclass(frozen=True)
class LongRecord:
    user_id: str
    timestamp: datetime
    consumption: float
    covariates: tuple = ()


def load_long_csv(path, covariate_columns: Sequence[str] | None = None):
    """Read ``user_id,timestamp,consumption,<covariates...>`` rows.

    Returns ``(records, covariate_names)``.
    """
    required = ("user_id", "timestamp", "consumption")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        if covariate_columns is None:
            covariate_columns = [h for h in header if h not in required]
        for name in (*required, *covariate_columns):
            if name not in header:
                raise MissingColumn(f"missing column {name!r}", line=1, column=name)
        iu, its, ic = (header.index(c) for c in required)
        ix = [header.index(c) for c in covariate_columns]
        records = []
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=line)
            try:
                ts = parse_timestamp(row[its])
            except ParseError as exc:
                raise ParseError(str(exc), line=line, column="timestamp") from None
            records.append(
                LongRecord(
                    user_id=row[iu].strip(),
                    timestamp=ts,
                    consumption=_parse_float(row[ic], line, "consumption"),
                    covariates=tuple(_parse_float(row[j], line, header[j]) for j in ix),
                )
            )
    return records, tuple(covariate_columns)


@dataclass
class DropReport:
    """Bookkeeping from :func:`build_event_dataset`."""

    events: int = 0
    treated: int = 0
    control: int = 0
    dropped: int = 0
    dropped_pairs: list = field(default_factory=list)

    def to_dict(self):
        return {
            "events": self.events,
            "treated": self.treated,
            "control": self.control,
            "dropped": self.dropped,
            "dropped_pairs": [
                {"user_id": u, "event": e.isoformat()} for u, e in self.dropped_pairs
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _nearest_same_hour(readings, event):
    """Reading at ``event.hour`` on the date closest to the event (earlier wins ties)."""
    best, best_key = None, None
    for ts, rec in readings.items():
        if ts.hour != event.hour or ts == event:
            continue
        days = abs((ts.date() - event.date()).days)
        key = (days, ts > event)
        if best_key is None or key < best_key:
            best, best_key = rec, key
    return best


def build_event_dataset(
    records: Sequence[LongRecord],
    event_times: Sequence[datetime],
    covariate_names: Sequence[str] | None = None,
):
    """Treatment/control samples around price events.

    For each event, a user with a reading at the event hour is a treated
    sample. Every other user is a control sample, using their reading at the
    same hour of day on the nearest other date. Users with no such reading are
    dropped for that event. Each (user, event) pair is its own sample.

    Returns ``(dataset, drop_report)``.
    """
    if not records:
        raise NoEligibleRecords("no records")
    if not event_times:
        raise NoEligibleRecords("no events")
    by_user: dict = {}
    for rec in records:
        by_user.setdefault(rec.user_id, {})[rec.timestamp] = rec
    d = len(records[0].covariates)
    if any(len(r.covariates) != d for r in records):
        raise LengthMismatch("records carry different numbers of covariates")

    report = DropReport()
    ys, ts, xs = [], [], []
    for event in event_times:
        event = event.replace(minute=0, second=0, microsecond=0, tzinfo=None)
        report.events += 1
        for user in sorted(by_user):
            readings = by_user[user]
            if event in readings:
                rec, treated = readings[event], 1.0
            else:
                rec, treated = _nearest_same_hour(readings, event), 0.0
            if rec is None:
                report.dropped += 1
                report.dropped_pairs.append((user, event))
                continue
            ys.append(rec.consumption)
            ts.append(treated)
            xs.append(rec.covariates)
            if treated:
                report.treated += 1
            else:
                report.control += 1
    if not ys:
        raise NoEligibleRecords("no user could be matched to any event")
    if report.treated == 0 or report.control == 0:
        raise EmptyGroup(
            f"treated={report.treated}, control={report.control} after matching"
        )
    names = tuple(covariate_names) if covariate_names is not None else None
    x = np.array(xs, dtype=np.float64).reshape(len(ys), d)
    return Dataset(np.array(ys), np.array(ts), x, names or ()), report


def dataset_from_columns(columns: dict, y="y", t="t", covariates=None) -> Dataset:
    """Convenience constructor from a mapping of column name to values."""
    if covariates is None:
        covariates = [k for k in columns if k not in (y, t)]
    x = np.column_stack([np.asarray(columns[c], float) for c in covariates]) if covariates else None
    n = len(columns[y])
    return Dataset(columns[y], columns[t], x if x is not None else np.empty((n, 0)), tuple(covariates))


def read_event_times(path) -> list:
    """One ISO-8601 timestamp per line; blank lines and ``#`` comments skipped."""
    out = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            out.append(parse_timestamp(line))
        except ParseError as exc:
            raise ParseError(str(exc), line=line_no) from None
    return out
