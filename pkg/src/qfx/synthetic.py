"""Seeded synthetic OHLC generator: exponential trend + sine + noise.

Ships with the package so every pipeline stage can be exercised without a
proprietary market feed. Default settings produce 5-day swings large enough
to cross the +-1.2% labeling threshold in both directions.
"""

from __future__ import annotations

import datetime as dt

import numpy as np

from .market_data import Quote


def generate_quotes(
    n_days: int,
    seed: int = 0,
    base: float = 30.0,
    trend: float = 2e-4,
    sine_amp: float = 1.5,
    sine_period: float = 40.0,
    noise: float = 0.08,
    start_date: dt.date = dt.date(2015, 1, 1),
) -> list[Quote]:
    """Daily quotes close[t] = base*exp(trend*t) + sine + gaussian noise."""
    if n_days < 1:
        raise ValueError("n_days must be positive")
    rng = np.random.default_rng(seed)
    t = np.arange(n_days, dtype=np.float64)
    close = base * np.exp(trend * t)
    if sine_amp:
        close = close + sine_amp * np.sin(2.0 * np.pi * t / sine_period)
    if noise:
        close = close + noise * rng.standard_normal(n_days)
    if np.any(close <= 0):
        raise ValueError("parameters produced non-positive prices")

    quotes = []
    prev = close[0] * 0.999
    for i in range(n_days):
        o = prev
        c = close[i]
        wiggle = abs(close[i]) * 1e-3
        quotes.append(
            Quote(
                date=start_date + dt.timedelta(days=i),
                open=float(o),
                high=float(max(o, c) + wiggle),
                low=float(min(o, c) - wiggle),
                close=float(c),
            )
        )
        prev = c
    return quotes


def monotone_uptrend(n_days: int, base: float = 30.0, daily_gain: float = 1e-3) -> list[Quote]:
    """Strictly increasing close series (no sine, no noise)."""
    return generate_quotes(
        n_days, seed=0, base=base, trend=daily_gain, sine_amp=0.0, noise=0.0
    )
