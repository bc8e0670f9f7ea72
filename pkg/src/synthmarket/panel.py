"""Return panels: the rectangular date-by-ticker arrays everything else consumes.

A panel is n rows of simple daily returns for d tickers, with strictly
increasing ISO dates and no gaps in the rectangle (missing cells are a load
error, not a NaN). Standardization is per column with the population (divisor
n) standard deviation; the fitted means/stds travel with the standardized
panel so synthesis can map back to return units.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PanelError",
    "ReturnsPanel",
    "StandardizedPanel",
    "load_csv",
    "write_csv",
    "standardize",
    "split",
    "synthetic_dates",
]


class PanelError(ValueError):
    """Raised for malformed panel files or invalid panel operations."""


def _as_date(text: str) -> _dt.date:
    try:
        return _dt.date.fromisoformat(text)
    except ValueError as exc:
        raise PanelError(f"bad ISO date {text!r}: {exc}") from None


@dataclass(frozen=True)
class ReturnsPanel:
    """n x d panel of simple daily returns.

    dates are datetime.date, strictly increasing; values is float64 with no
    non-finite entries.
    """

    dates: tuple[_dt.date, ...]
    tickers: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "values", values)
        n, d = self.shape
        if n < 2:
            raise PanelError(f"panel needs at least 2 rows, got {n}")
        if d < 1:
            raise PanelError("panel needs at least 1 ticker")
        if values.ndim != 2 or values.shape != (len(self.dates), len(self.tickers)):
            raise PanelError(
                f"values shape {values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if len(set(self.tickers)) != d:
            raise PanelError("duplicate ticker names")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise PanelError(f"dates not strictly increasing at {cur}")
        if not np.isfinite(values).all():
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise PanelError(
                f"non-finite value at row {self.dates[i]}, column {self.tickers[j]}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.dates), len(self.tickers)

    @property
    def n(self) -> int:
        return len(self.dates)

    @property
    def d(self) -> int:
        return len(self.tickers)


@dataclass(frozen=True)
class StandardizedPanel:
    """Column-standardized panel plus the fitted per-ticker mean/std.

    values[:, j] = (raw[:, j] - mu[j]) / sigma[j] with sigma the population
    (divisor n) standard deviation; each column has mean 0 and variance 1
    exactly up to roundoff.
    """

    dates: tuple[_dt.date, ...]
    tickers: tuple[str, ...]
    values: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=np.float64))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=np.float64))
        n, d = self.values.shape
        if self.mu.shape != (d,) or self.sigma.shape != (d,):
            raise PanelError("mu/sigma must have one entry per ticker")
        if np.any(self.sigma <= 0):
            j = int(np.argmin(self.sigma))
            raise PanelError(f"non-positive sigma for ticker {self.tickers[j]}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def to_returns(self) -> ReturnsPanel:
        """Invert the standardization (exact up to float roundoff)."""
        raw = self.values * self.sigma + self.mu
        return ReturnsPanel(self.dates, self.tickers, raw)


def load_csv(path) -> ReturnsPanel:
    """Read a returns panel from ``date,<t1>,<t2>,...`` CSV.

    Errors name the offending row/column: unsorted or duplicate dates,
    non-numeric or missing cells, ragged rows, and empty panels are all
    rejected.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelError(f"{path}: empty file") from None
        if len(header) < 2 or header[0] != "date":
            raise PanelError(f"{path}: header must be 'date,<ticker>,...', got {header!r}")
        tickers = tuple(header[1:])
        dates: list[_dt.date] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise PanelError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            day = _as_date(row[0])
            parsed = []
            for name, cell in zip(tickers, row[1:]):
                cell = cell.strip()
                if cell == "":
                    raise PanelError(f"{path}:{lineno}: missing value for {name} on {day}")
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise PanelError(
                        f"{path}:{lineno}: non-numeric value {cell!r} for {name}"
                    ) from None
            dates.append(day)
            rows.append(parsed)
    if not rows:
        raise PanelError(f"{path}: no data rows")
    try:
        return ReturnsPanel(tuple(dates), tickers, np.array(rows, dtype=np.float64))
    except PanelError as exc:
        raise PanelError(f"{path}: {exc}") from None


def write_csv(panel: ReturnsPanel, path) -> None:
    """Write a panel back to CSV with shortest round-trip float formatting.

    repr() of a Python float is the shortest decimal string that parses back
    to the same float64, so load_csv(write_csv(p)) reproduces values bitwise.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", *panel.tickers])
        for day, row in zip(panel.dates, panel.values):
            writer.writerow([day.isoformat(), *[repr(float(x)) for x in row]])


def standardize(panel: ReturnsPanel) -> StandardizedPanel:
    """Center and scale each column by its population mean/std (divisor n)."""
    mu = panel.values.mean(axis=0)
    sigma = panel.values.std(axis=0)  # population: ddof=0
    if np.any(sigma == 0):
        j = int(np.argmin(sigma))
        raise PanelError(f"zero variance column {panel.tickers[j]}")
    return StandardizedPanel(
        panel.dates, panel.tickers, (panel.values - mu) / sigma, mu, sigma
    )


def split(panel: ReturnsPanel, boundary: _dt.date | str) -> tuple[ReturnsPanel, ReturnsPanel]:
    """Split into (rows with date <= boundary, rows after). Both must be non-empty."""
    if isinstance(boundary, str):
        boundary = _as_date(boundary)
    k = sum(1 for day in panel.dates if day <= boundary)
    if k < 2 or panel.n - k < 2:
        raise PanelError(
            f"split at {boundary} leaves {k} / {panel.n - k} rows; both sides need >= 2"
        )
    head = ReturnsPanel(panel.dates[:k], panel.tickers, panel.values[:k])
    tail = ReturnsPanel(panel.dates[k:], panel.tickers, panel.values[k:])
    return head, tail


def synthetic_dates(n: int, start: _dt.date | None = None) -> tuple[_dt.date, ...]:
    """Weekday calendar of length n for synthetic panels (metadata only)."""
    day = start or _dt.date(2000, 1, 3)
    out = []
    while len(out) < n:
        if day.weekday() < 5:
            out.append(day)
        day += _dt.timedelta(days=1)
    return tuple(out)
