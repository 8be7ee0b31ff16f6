"""Electricity billing: hourly energy price, per-kWh adjustment and monthly demand charge.

Monthly cost::

    C_m = sum_n (P_ep[n] + P_icra) * E[n] + P_pd * max_n E[n] / I

Sums use ``math.fsum`` so monthly totals reconcile with annual totals to
machine precision.
"""
import csv
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

MARKET_COLUMNS = ("timestamp_iso8601", "hoep_dollars_per_kwh", "market_demand_mw", "gen_nuclear_mw",
                  "gen_gas_mw", "gen_hydro_mw", "gen_wind_mw", "gen_solar_mw", "gen_biofuel_mw",
                  "is_holiday")
FUELS = ("nuclear", "gas", "hydro", "wind", "solar", "biofuel")
MAX_FILL_HOURS = 3
HOUR = timedelta(hours=1)

# per-kWh adjustment by calendar month (adjustment cost / energy) and demand rate
# (demand charge / peak), both backed out of a 1 ha reference greenhouse year
DEFAULT_ICRA = (0.0501, 0.0850, 0.0709, 0.0663, 0.0459, 0.0664,
                0.0818, 0.0743, 0.0776, 0.0783, 0.0637, 0.0632)
DEFAULT_PEAK_RATE = 10.8

MONTH_NAMES = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
               "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")


class TariffError(Exception):
    pass


class MarketDataError(TariffError):
    pass


class AlignmentError(TariffError):
    pass


@dataclass
class PriceSeries:
    """Hourly price in $/kWh plus the market features used for forecasting."""

    timestamps: list
    price: np.ndarray
    demand_mw: np.ndarray = None
    generation: dict = field(default_factory=dict)
    is_holiday: np.ndarray = None
    interpolated: np.ndarray = None

    def __post_init__(self):
        n = len(self.timestamps)
        self.price = np.asarray(self.price, dtype=float)
        if self.price.shape != (n,):
            raise TariffError(f"{self.price.size} prices for {n} timestamps")
        self.demand_mw = np.zeros(n) if self.demand_mw is None else np.asarray(self.demand_mw, float)
        self.is_holiday = (np.zeros(n, dtype=bool) if self.is_holiday is None
                           else np.asarray(self.is_holiday, dtype=bool))
        self.interpolated = (np.zeros(n, dtype=bool) if self.interpolated is None
                             else np.asarray(self.interpolated, dtype=bool))
        self.generation = {f: np.asarray(self.generation.get(f, np.zeros(n)), dtype=float)
                           for f in FUELS}
        for i in range(1, n):
            if self.timestamps[i] - self.timestamps[i - 1] != HOUR:
                raise TariffError(f"prices not hourly-contiguous at {self.timestamps[i]}")

    def __len__(self):
        return len(self.timestamps)

    def index_of(self, ts):
        if not self.timestamps:
            raise AlignmentError("empty price series")
        off = (ts - self.timestamps[0]) / HOUR
        i = int(round(off))
        if i != off or not 0 <= i < len(self):
            raise AlignmentError(f"no price for {ts}")
        return i

    def slice(self, start, stop):
        return PriceSeries(self.timestamps[start:stop], self.price[start:stop],
                           self.demand_mw[start:stop],
                           {f: g[start:stop] for f, g in self.generation.items()},
                           self.is_holiday[start:stop], self.interpolated[start:stop])

    @classmethod
    def from_market(cls, market):
        """Build from a ``synthetic.MarketYear``."""
        return cls(list(market.timestamps), market.price, market.demand_mw, market.generation,
                   market.is_holiday)


@dataclass(frozen=True)
class TariffConfig:
    """``icra_rate`` is one $/kWh value or twelve, one per calendar month."""

    icra_rate: object = DEFAULT_ICRA
    peak_demand_rate: float = DEFAULT_PEAK_RATE

    def __post_init__(self):
        rates = self.icra_rate
        if np.ndim(rates) == 0:
            rates = (float(rates),)
        else:
            rates = tuple(float(r) for r in rates)
            if len(rates) != 12:
                raise ValueError("icra_rate table needs 12 monthly values")
        if any(r < 0 for r in rates) or self.peak_demand_rate < 0:
            raise ValueError("tariff rates must be non-negative")
        object.__setattr__(self, "icra_rate", rates[0] if len(rates) == 1 else rates)

    def icra_for(self, month):
        if isinstance(self.icra_rate, tuple):
            return self.icra_rate[month - 1]
        return self.icra_rate


@dataclass(frozen=True)
class CostBreakdown:
    energy_cost: float = 0.0
    icra_cost: float = 0.0
    peak_charge: float = 0.0
    total: float = 0.0
    peak_kw: float = 0.0
    energy_kwh: float = 0.0
    month: str = ""


def monthly_cost(timestamps, energy_kwh, prices, tariff, interval_hours=1.0):
    """Evaluate one calendar month of billing for interval energy in kWh."""
    e = np.asarray(energy_kwh, dtype=float)
    if e.shape != (len(timestamps),):
        raise AlignmentError(f"{e.size} energy values for {len(timestamps)} timestamps")
    if e.size == 0:
        return CostBreakdown()
    if np.any(e < 0):
        raise TariffError("negative interval energy")
    months = {(t.year, t.month) for t in timestamps}
    if len(months) != 1:
        raise AlignmentError("monthly_cost needs intervals from a single calendar month")
    i0 = prices.index_of(timestamps[0])
    if i0 + e.size > len(prices):
        raise AlignmentError(f"prices end before {timestamps[-1]}")
    for k, t in enumerate(timestamps):
        if prices.timestamps[i0 + k] != t:
            raise AlignmentError(f"energy interval {t} does not line up with prices")
    p = prices.price[i0:i0 + e.size]
    year, month = months.pop()
    icra = tariff.icra_for(month)
    energy_cost = math.fsum((p * e).tolist())
    kwh = math.fsum(e.tolist())
    icra_cost = icra * kwh
    peak_kw = float(e.max()) / interval_hours
    peak_charge = tariff.peak_demand_rate * peak_kw
    total = math.fsum((energy_cost, icra_cost, peak_charge))
    return CostBreakdown(energy_cost, icra_cost, peak_charge, total, peak_kw, kwh,
                         f"{year:04d}-{month:02d}")


def monthly_costs(timestamps, energy_kwh, prices, tariff, interval_hours=1.0):
    """Split a multi-month series at calendar-month edges and bill each month."""
    e = np.asarray(energy_kwh, dtype=float)
    out = []
    start = 0
    for i in range(1, len(timestamps) + 1):
        if i == len(timestamps) or (timestamps[i].year, timestamps[i].month) != \
                (timestamps[start].year, timestamps[start].month):
            out.append(monthly_cost(timestamps[start:i], e[start:i], prices, tariff,
                                    interval_hours))
            start = i
    return out


def reduction_pct(base, opt):
    """``(base - opt) / base * 100``; zero when both are zero, None when base alone is."""
    if base == 0:
        return 0.0 if opt == 0 else None
    return (base - opt) / base * 100.0


REPORT_COLUMNS = (
    "month", "energy_kwh_baseline", "energy_kwh_optimized", "peak_kw_baseline",
    "peak_kw_optimized", "energy_cost_baseline", "energy_cost_optimized",
    "peak_charge_baseline", "peak_charge_optimized", "icra_cost_baseline", "icra_cost_optimized",
    "total_cost_baseline", "total_cost_optimized", "energy_reduction_pct", "cost_reduction_pct",
    "peak_reduction_pct",
)


def _annual(months, label="Annual"):
    return CostBreakdown(
        energy_cost=math.fsum(m.energy_cost for m in months),
        icra_cost=math.fsum(m.icra_cost for m in months),
        peak_charge=math.fsum(m.peak_charge for m in months),
        total=math.fsum(m.total for m in months),
        peak_kw=max((m.peak_kw for m in months), default=0.0),
        energy_kwh=math.fsum(m.energy_kwh for m in months),
        month=label)


@dataclass
class AnnualReport:
    rows: list
    baseline: list
    optimized: list

    @property
    def annual(self):
        return self.rows[-1]

    def write_csv(self, path):
        with Path(path).open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(REPORT_COLUMNS)
            for r in self.rows:
                wr.writerow(["" if r[c] is None else (r[c] if isinstance(r[c], str) else repr(r[c]))
                             for c in REPORT_COLUMNS])

    def summary(self):
        base = _annual(self.baseline)
        opt = _annual(self.optimized)

        def shares(b):
            if b.total == 0:
                return {"energy_cost": 0.0, "peak_charge": 0.0, "icra_cost": 0.0}
            return {k: getattr(b, k) / b.total * 100 for k in ("energy_cost", "peak_charge",
                                                               "icra_cost")}
        return {"baseline": asdict(base), "optimized": asdict(opt),
                "baseline_share_pct": shares(base), "optimized_share_pct": shares(opt),
                "energy_reduction_pct": self.annual["energy_reduction_pct"],
                "cost_reduction_pct": self.annual["cost_reduction_pct"],
                "peak_reduction_pct": self.annual["peak_reduction_pct"],
                "months": [r["month"] for r in self.rows[:-1]]}

    def write_json(self, path):
        Path(path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def _row(label, b, o):
    return {
        "month": label,
        "energy_kwh_baseline": b.energy_kwh, "energy_kwh_optimized": o.energy_kwh,
        "peak_kw_baseline": b.peak_kw, "peak_kw_optimized": o.peak_kw,
        "energy_cost_baseline": b.energy_cost, "energy_cost_optimized": o.energy_cost,
        "peak_charge_baseline": b.peak_charge, "peak_charge_optimized": o.peak_charge,
        "icra_cost_baseline": b.icra_cost, "icra_cost_optimized": o.icra_cost,
        "total_cost_baseline": b.total, "total_cost_optimized": o.total,
        "energy_reduction_pct": reduction_pct(b.energy_kwh, o.energy_kwh),
        "cost_reduction_pct": reduction_pct(b.total, o.total),
        "peak_reduction_pct": reduction_pct(b.peak_kw, o.peak_kw),
    }


def annual_report(baseline, optimized):
    """Per-month and annual comparison rows; the annual peak is the largest month."""
    if len(baseline) != len(optimized):
        raise TariffError("baseline and optimized need the same months")
    rows = []
    for b, o in zip(baseline, optimized):
        if b.month and o.month and b.month != o.month:
            raise TariffError(f"month mismatch {b.month} vs {o.month}")
        label = b.month or o.month
        if len(label) == 7:
            label = MONTH_NAMES[int(label[5:]) - 1]
        rows.append(_row(label, b, o))
    rows.append(_row("Annual", _annual(baseline), _annual(optimized)))
    return AnnualReport(rows, list(baseline), list(optimized))


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes"):
        return True
    if t in ("0", "false", "no", ""):
        return False
    raise ValueError(f"bad holiday flag {text!r}")


def ingest_market_csv(path):
    """Read and validate a market CSV.

    Gaps of up to three missing hours are filled by linear interpolation and
    flagged in ``interpolated``; longer gaps, repeated or decreasing
    timestamps and malformed rows raise MarketDataError naming the line.
    """
    path = Path(path)
    if not path.exists():
        raise MarketDataError(f"{path}: market file not found")
    ts, vals, hol, lines = [], [], [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MARKET_COLUMNS:
            raise MarketDataError(f"{path}:1: expected columns {', '.join(MARKET_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(MARKET_COLUMNS):
                raise MarketDataError(f"{path}:{lineno}: expected {len(MARKET_COLUMNS)} fields, "
                                      f"got {len(row)}")
            try:
                t = datetime.fromisoformat(row[0].strip())
                v = [float(c) for c in row[1:-1]]
                h = _parse_bool(row[-1])
            except ValueError as exc:
                raise MarketDataError(f"{path}:{lineno}: {exc}") from None
            if not all(math.isfinite(x) for x in v):
                raise MarketDataError(f"{path}:{lineno}: non-finite value")
            if t.minute or t.second or t.microsecond:
                raise MarketDataError(f"{path}:{lineno}: timestamp {t} is not on the hour")
            if ts and t <= ts[-1]:
                raise MarketDataError(f"{path}:{lineno}: timestamp {t} not after {ts[-1]}")
            ts.append(t)
            vals.append(v)
            hol.append(h)
            lines.append(lineno)
    if not ts:
        raise MarketDataError(f"{path}: no data rows")

    out_t, out_v, out_h, filled = [ts[0]], [vals[0]], [hol[0]], [False]
    for i in range(1, len(ts)):
        steps = int((ts[i] - ts[i - 1]) / HOUR)
        missing = steps - 1
        if missing > MAX_FILL_HOURS:
            raise MarketDataError(f"{path}:{lines[i]}: gap of {missing} h before {ts[i]} "
                                  f"exceeds {MAX_FILL_HOURS} h")
        a, b = np.array(vals[i - 1]), np.array(vals[i])
        for k in range(1, steps):
            t = ts[i - 1] + k * HOUR
            out_t.append(t)
            out_v.append((a + (b - a) * k / steps).tolist())
            out_h.append(hol[i - 1] if t.date() == ts[i - 1].date() else hol[i])
            filled.append(True)
        out_t.append(ts[i])
        out_v.append(vals[i])
        out_h.append(hol[i])
        filled.append(False)
    v = np.array(out_v)
    gen = {f: v[:, 2 + j] for j, f in enumerate(FUELS)}
    return PriceSeries(out_t, v[:, 0], v[:, 1], gen, np.array(out_h), np.array(filled))


def write_market_csv(series, path):
    with Path(path).open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(MARKET_COLUMNS)
        for i, t in enumerate(series.timestamps):
            wr.writerow([t.isoformat(), repr(float(series.price[i])),
                         repr(float(series.demand_mw[i]))]
                        + [repr(float(series.generation[f][i])) for f in FUELS]
                        + [int(series.is_holiday[i])])
