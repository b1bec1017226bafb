"""Daily OHLC ingestion: cleaning, indicators, scaling, splits, labeling.

Input CSV contract: header ``date,open,high,low,close``, ISO-8601 dates,
decimal prices. Cleaning keeps the last record for a duplicated date and
drops rows without a positive finite close (rows missing any other price
field are dropped as well so downstream feature matrices stay finite).
Everything here is a pure function over immutable rows.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

# features fed to the trend forecaster, in window-column order
FORECAST_FEATURES = ("open", "high", "low", "close", "ma5", "ma10")

CLAMP_LO = -0.5
CLAMP_HI = 1.5

MA_WINDOWS = (5, 10, 20, 60)
VOL_WINDOW = 20
WARMUP = 60  # bars before all indicators exist

LABEL_UP = 0
LABEL_DOWN = 1


class MarketDataError(ValueError):
    """Base class for ingestion/preparation failures."""


class MalformedRowError(MarketDataError):
    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.line_no = line_no


@dataclass(frozen=True)
class Quote:
    date: dt.date
    open: float
    high: float
    low: float
    close: float


@dataclass(frozen=True)
class EnrichedBar:
    """One trading day with trailing indicators (None until enough history)."""

    quote: Quote
    ma5: float | None = None
    ma10: float | None = None
    ma20: float | None = None
    ma60: float | None = None
    vol20: float | None = None

    @property
    def usable(self) -> bool:
        return self.ma60 is not None  # 60-bar window is the last to fill

    def feature(self, name: str) -> float:
        if name in ("open", "high", "low", "close"):
            return getattr(self.quote, name)
        value = getattr(self, name)
        if value is None:
            raise MarketDataError(f"indicator {name} undefined on {self.quote.date}")
        return value


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-feature (min, max) ranges fitted on the training split."""

    features: tuple
    lo: np.ndarray
    hi: np.ndarray

    def to_dict(self) -> dict:
        return {
            "features": list(self.features),
            "lo": [float(v) for v in self.lo],
            "hi": [float(v) for v in self.hi],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizationSpec":
        return cls(
            features=tuple(data["features"]),
            lo=np.asarray(data["lo"], dtype=np.float64),
            hi=np.asarray(data["hi"], dtype=np.float64),
        )


@dataclass(frozen=True)
class ForecastSample:
    window: np.ndarray  # (seq_len, n_features) normalized
    label: int  # LABEL_UP or LABEL_DOWN
    anchor_index: int


def _parse_price(path, line_no: int, name: str, raw: str) -> float | None:
    raw = raw.strip()
    if not raw:
        return None
    try:
        return float(raw)
    except ValueError:
        raise MalformedRowError(path, line_no, f"unparsable {name} value {raw!r}") from None


def load_quotes(path) -> list[Quote]:
    """Parse, de-duplicate (last record wins), drop invalid rows, sort."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise MarketDataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MarketDataError(f"{path}: empty file") from None
        cols = [c.strip().lower() for c in header]
        if cols[:5] != ["date", "open", "high", "low", "close"]:
            raise MarketDataError(
                f"{path}: expected header date,open,high,low,close, got {','.join(cols)}"
            )
        by_date: dict[dt.date, Quote | None] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 5:
                raise MalformedRowError(path, line_no, f"expected 5 columns, got {len(row)}")
            try:
                date = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise MalformedRowError(
                    path, line_no, f"unparsable date {row[0].strip()!r}"
                ) from None
            o = _parse_price(path, line_no, "open", row[1])
            h = _parse_price(path, line_no, "high", row[2])
            lo = _parse_price(path, line_no, "low", row[3])
            c = _parse_price(path, line_no, "close", row[4])
            prices = (o, h, lo, c)
            bad = any(p is None or not math.isfinite(p) for p in prices) or c == 0
            # last occurrence wins, including when it invalidates the date
            by_date[date] = None if bad else Quote(date, o, h, lo, c)
    quotes = [q for _, q in sorted(by_date.items()) if q is not None]
    if not quotes:
        raise MarketDataError(f"{path}: no valid rows after cleaning")
    return quotes


def write_quotes_csv(path, quotes) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "open", "high", "low", "close"])
        for q in quotes:
            writer.writerow([q.date.isoformat(), repr(q.open), repr(q.high), repr(q.low), repr(q.close)])


def compute_indicators(quotes) -> list[EnrichedBar]:
    """Trailing MAs over 5/10/20/60 closes plus 20-day relative volatility.

    vol20 is population-stdev/mean of the trailing 20 closes. Bars with an
    incomplete window keep None in the affected fields; the first 59 bars
    are therefore not usable.
    """
    if len(quotes) < WARMUP:
        raise MarketDataError(f"need at least {WARMUP} quotes, got {len(quotes)}")
    closes = np.array([q.close for q in quotes], dtype=np.float64)

    def rolling_mean(window: int) -> np.ndarray:
        return np.lib.stride_tricks.sliding_window_view(closes, window).mean(axis=1)

    means = {w: rolling_mean(w) for w in MA_WINDOWS}
    vol_view = np.lib.stride_tricks.sliding_window_view(closes, VOL_WINDOW)
    vol = vol_view.std(axis=1) / vol_view.mean(axis=1)

    bars = []
    for i, q in enumerate(quotes):
        fields = {}
        for w in MA_WINDOWS:
            fields[f"ma{w}"] = float(means[w][i - w + 1]) if i >= w - 1 else None
        fields["vol20"] = float(vol[i - VOL_WINDOW + 1]) if i >= VOL_WINDOW - 1 else None
        bars.append(EnrichedBar(quote=q, **fields))
    return bars


def temporal_split(bars, train_fraction: float = 0.8):
    """Chronological split at floor(len * fraction); no shuffling."""
    if not 0 < train_fraction < 1:
        raise MarketDataError(f"train_fraction must be in (0,1), got {train_fraction}")
    if not bars:
        raise MarketDataError("cannot split an empty series")
    k = math.floor(len(bars) * train_fraction)
    return bars[:k], bars[k:]


def fit_minmax(train_bars, features=FORECAST_FEATURES) -> NormalizationSpec:
    """Per-feature min/max over the training bars (indicators must exist)."""
    rows = [b for b in train_bars if b.usable]
    if not rows:
        raise MarketDataError("no usable training bars to fit normalization")
    matrix = np.array([[b.feature(f) for f in features] for b in rows], dtype=np.float64)
    return NormalizationSpec(
        features=tuple(features), lo=matrix.min(axis=0), hi=matrix.max(axis=0)
    )


def apply_minmax(spec: NormalizationSpec, bars) -> np.ndarray:
    """Map features into [0,1] on the training range, clamped to [-0.5, 1.5].

    Degenerate features (max == min on the fit range) map to 0.5.
    """
    matrix = np.array(
        [[b.feature(f) for f in spec.features] for b in bars], dtype=np.float64
    )
    span = spec.hi - spec.lo
    degenerate = span == 0
    safe_span = np.where(degenerate, 1.0, span)
    scaled = (matrix - spec.lo) / safe_span
    scaled[:, degenerate] = 0.5
    return np.clip(scaled, CLAMP_LO, CLAMP_HI)


def build_forecast_dataset(
    bars,
    norm: NormalizationSpec,
    start: int = 0,
    stop: int | None = None,
    seq_len: int = 4,
    horizon: int = 5,
    threshold: float = 0.012,
) -> list[ForecastSample]:
    """Labeled windows for anchors t in [start, stop) with t+horizon inside.

    Label is up/down when the forward close return strictly exceeds the
    threshold in magnitude; intermediate moves yield no sample. Windows are
    the normalized feature rows of days t-seq_len+1 .. t; anchors whose
    window reaches into the indicator warm-up are skipped.
    """
    stop = len(bars) if stop is None else stop
    # indicator warm-up rows cannot be normalized; offset into the usable tail
    base = WARMUP - 1
    if len(bars) <= base:
        return []
    normalized = np.full((len(bars), len(norm.features)), np.nan)
    normalized[base:] = apply_minmax(norm, bars[base:])
    samples = []
    for t in range(max(start, seq_len - 1), min(stop, len(bars)) - horizon):
        window_lo = t - seq_len + 1
        if window_lo < base or not all(bars[i].usable for i in range(window_lo, t + 1)):
            continue
        ret = (bars[t + horizon].quote.close - bars[t].quote.close) / bars[t].quote.close
        if ret > threshold:
            label = LABEL_UP
        elif ret < -threshold:
            label = LABEL_DOWN
        else:
            continue
        samples.append(
            ForecastSample(window=normalized[window_lo : t + 1].copy(), label=label, anchor_index=t)
        )
    return samples
