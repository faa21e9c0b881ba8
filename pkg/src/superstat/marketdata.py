"""Price ingestion, bar resampling and log-return construction."""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable

import numpy as np


class ParseError(ValueError):
    """Malformed price or series input; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"{message} at line {line}")


class Timescale(enum.Enum):
    RAW = "raw"
    MINUTE = "minute"
    HOUR = "hour"
    FOUR_HOUR = "4hour"
    DAY = "day"

    @property
    def seconds(self) -> int:
        return _BAR_SECONDS[self]


_BAR_SECONDS = {
    Timescale.RAW: 0,
    Timescale.MINUTE: 60,
    Timescale.HOUR: 3600,
    Timescale.FOUR_HOUR: 4 * 3600,
    Timescale.DAY: 86400,
}

BAR_TIMESCALES = (Timescale.MINUTE, Timescale.HOUR, Timescale.FOUR_HOUR, Timescale.DAY)


class ReturnKind(enum.Enum):
    SIGNED = "signed"
    ABSOLUTE = "absolute"


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Prices at strictly increasing UTC instants (integer epoch seconds)."""

    timestamps: np.ndarray
    prices: np.ndarray
    timescale: Timescale = Timescale.RAW

    def __post_init__(self):
        ts = _frozen(self.timestamps, np.int64)
        px = _frozen(self.prices, np.float64)
        if ts.ndim != 1 or ts.shape != px.shape:
            raise ValueError("timestamps and prices must be 1-d and equally long")
        if ts.size and np.any(np.diff(ts) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if px.size and not np.all(np.isfinite(px) & (px > 0)):
            raise ValueError("prices must be finite and positive")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)

    def __len__(self) -> int:
        return self.prices.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return (
            self.timescale == other.timescale
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.prices, other.prices)
        )


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Log-returns at one timescale.

    ``timestamps`` is optional; when present, entry i is the start instant of
    the bar whose close realises return i.
    """

    values: np.ndarray
    timescale: Timescale = Timescale.RAW
    kind: ReturnKind = ReturnKind.SIGNED
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        vals = _frozen(self.values, np.float64)
        if vals.ndim != 1:
            raise ValueError("values must be 1-d")
        if self.kind is ReturnKind.ABSOLUTE and np.any(vals < 0):
            raise ValueError("absolute returns must be nonnegative")
        object.__setattr__(self, "values", vals)
        if self.timestamps is not None:
            ts = _frozen(self.timestamps, np.int64)
            if ts.shape != vals.shape:
                raise ValueError("timestamps and values must be equally long")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, ReturnSeries):
            return NotImplemented
        if (self.timestamps is None) != (other.timestamps is None):
            return False
        return (
            self.timescale == other.timescale
            and self.kind == other.kind
            and np.array_equal(self.values, other.values)
            and (self.timestamps is None or np.array_equal(self.timestamps, other.timestamps))
        )


# --- timestamps -------------------------------------------------------------

def parse_timestamp(text: str) -> int:
    """ISO-8601 instant to epoch seconds. Naive stamps are taken as UTC."""
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    if dt.microsecond:
        raise ValueError("sub-second timestamps are not supported")
    return int(dt.timestamp())


def format_timestamp(seconds: int) -> str:
    return datetime.fromtimestamp(int(seconds), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _lines(raw) -> Iterable[str]:
    if isinstance(raw, (bytes, bytearray)):
        raw = raw.decode("utf-8")
    if isinstance(raw, str):
        return io.StringIO(raw)
    return (ln.decode("utf-8") if isinstance(ln, bytes) else ln for ln in raw)


# --- CSV I/O ----------------------------------------------------------------

def parse_prices(raw) -> PriceSeries:
    """Parse ``timestamp,price`` CSV text (bytes, str or a line iterable).

    Lines starting with ``#`` and blank lines are skipped. Rows are validated
    in file order; an out-of-order row is an error, never re-sorted.
    """
    header_seen = False
    stamps: list[int] = []
    prices: list[float] = []
    for lineno, line in enumerate(_lines(raw), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if [c.strip() for c in line.split(",")] != ["timestamp", "price"]:
                raise ParseError("expected header 'timestamp,price'", lineno)
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError("malformed row", lineno)
        try:
            ts = parse_timestamp(parts[0])
            price = float(parts[1])
        except ValueError:
            raise ParseError("malformed row", lineno) from None
        if not np.isfinite(price) or price <= 0:
            raise ParseError("non-positive price", lineno)
        if stamps and ts <= stamps[-1]:
            raise ParseError("non-increasing timestamp", lineno)
        stamps.append(ts)
        prices.append(price)
    if not prices:
        raise ParseError("empty file: no price rows")
    return PriceSeries(np.array(stamps, dtype=np.int64), np.array(prices), Timescale.RAW)


def serialize_prices(p: PriceSeries) -> str:
    out = ["timestamp,price"]
    out.extend(f"{format_timestamp(t)},{v!r}" for t, v in zip(p.timestamps.tolist(), p.prices.tolist()))
    return "\n".join(out) + "\n"


def serialize_returns(r: ReturnSeries) -> str:
    if r.timestamps is None:
        stamps = [str(i) for i in range(len(r))]
    else:
        stamps = [format_timestamp(t) for t in r.timestamps.tolist()]
    out = ["timestamp,value"]
    out.extend(f"{t},{v!r}" for t, v in zip(stamps, r.values.tolist()))
    return "\n".join(out) + "\n"


def parse_returns(raw, timescale: Timescale = Timescale.RAW,
                  kind: ReturnKind | None = None) -> ReturnSeries:
    """Parse a ``timestamp,value`` series CSV.

    The timestamp column may hold ISO instants or plain integer indices (as
    written for synthetic series without a calendar). ``kind`` defaults to
    Absolute when every value is nonnegative and the caller does not say.
    """
    header_seen = False
    stamps: list[int] = []
    values: list[float] = []
    iso = None
    for lineno, line in enumerate(_lines(raw), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if [c.strip() for c in line.split(",")] != ["timestamp", "value"]:
                raise ParseError("expected header 'timestamp,value'", lineno)
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError("malformed row", lineno)
        try:
            if iso is None:
                iso = not parts[0].strip().lstrip("-").isdigit()
            stamps.append(parse_timestamp(parts[0]) if iso else int(parts[0]))
            values.append(float(parts[1]))
        except ValueError:
            raise ParseError("malformed row", lineno) from None
        if not np.isfinite(values[-1]):
            raise ParseError("non-finite value", lineno)
    if not values:
        raise ParseError("empty file: no series rows")
    vals = np.array(values)
    if kind is None:
        kind = ReturnKind.ABSOLUTE if np.all(vals >= 0) else ReturnKind.SIGNED
    return ReturnSeries(vals, timescale, kind, np.array(stamps, dtype=np.int64) if iso else None)


# --- transforms -------------------------------------------------------------

def resample(p: PriceSeries, target: Timescale) -> PriceSeries:
    """Last-close bars on UTC-midnight-aligned buckets; empty buckets are dropped."""
    if target is Timescale.RAW:
        raise ValueError("cannot resample to the raw timescale")
    if p.timescale is target:
        return p
    if p.timescale is not Timescale.RAW and p.timescale.seconds > target.seconds:
        raise ValueError(f"cannot resample {p.timescale.value} bars to finer {target.value} bars")
    width = target.seconds
    buckets = p.timestamps // width
    # last observation of each run of equal bucket ids
    last = np.flatnonzero(np.r_[buckets[1:] != buckets[:-1], True])
    if last.size < 2:
        raise ValueError(
            f"series spans fewer than 2 {target.value} buckets; cannot form returns")
    return PriceSeries(buckets[last] * width, p.prices[last], target)


def log_returns(p: PriceSeries) -> ReturnSeries:
    if len(p) < 2:
        raise ValueError("need at least 2 prices to form a return")
    vals = np.diff(np.log(p.prices))
    return ReturnSeries(vals, p.timescale, ReturnKind.SIGNED, p.timestamps[1:])


def abs_returns(r: ReturnSeries) -> ReturnSeries:
    if r.kind is ReturnKind.ABSOLUTE:
        return r
    return ReturnSeries(np.abs(r.values), r.timescale, ReturnKind.ABSOLUTE, r.timestamps)
