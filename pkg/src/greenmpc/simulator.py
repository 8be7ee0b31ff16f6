"""Greenhouse climate and electrical-load simulation.

Lumped single-zone model: temperature from a heat balance, relative humidity
and CO2 from rate balances, each held in its band by a dead-band controller
that actuates only when the free-running state would leave the band. Energy
per interval is the sum of ``w * P_rated * I`` over every device.
"""
import csv
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

RHO_CP_AIR = 1.2  # kJ m-3 degC-1
SECONDS_PER_HOUR = 3600.0
BAND_TOL = 1e-6

ENERGY_COLUMNS = ("timestamp", "lighting_kwh", "heating_kwh", "cooling_kwh", "humidity_kwh",
                  "co2_kwh", "fans_kwh", "total_kwh")
WEATHER_COLUMNS = ("timestamp_iso8601", "ghi_wm2", "temp_c", "dew_point_c", "wind_speed_ms",
                   "station_pressure_kpa", "sea_level_pressure_kpa", "wind_dir_deg", "rh_pct")

# load class -> energy report category
CATEGORY = {"led": "lighting", "heater": "heating", "chiller": "cooling",
            "fog": "humidity", "dehumidifier": "humidity", "co2": "co2", "fans": "fans"}


class SimulationError(Exception):
    pass


class WeatherDataError(SimulationError):
    pass


@dataclass(frozen=True)
class DeviceClass:
    name: str
    count: int
    rated_kw: float

    @property
    def capacity_kw(self):
        return self.count * self.rated_kw


DEFAULT_INVENTORY = (
    DeviceClass("fans", 200, 0.13),
    DeviceClass("dehumidifier", 40, 2.2),
    DeviceClass("fog", 40, 2.2),
    DeviceClass("led", 6000, 0.6),
    DeviceClass("co2", 10, 8.0),
    DeviceClass("chiller", 300, 6.6),
    DeviceClass("heater", 1000, 3.3),
)


@dataclass(frozen=True)
class GreenhouseConfig:
    """Static plant and building parameters for a one-zone greenhouse.

    Rates: ``fog_rate``/``dehum_rate`` are %RH per hour per unit at full power,
    ``co2_inject_rate`` is ppm per hour per injector.
    """

    area: float = 10_000.0
    height: float = 5.0
    cover_transmittance: float = 0.6
    c_air: float = 3.0e5
    day_temp_band: tuple = (20.0, 24.0)
    night_temp_band: tuple = (12.0, 16.0)
    day_start: int = 6
    day_end: int = 18
    rh_band: tuple = (60.0, 70.0)
    co2_setpoint: float = 820.0
    co2_ambient: float = 380.0
    device_inventory: tuple = DEFAULT_INVENTORY
    led_efficacy: float = 2.5
    solar_to_ppfd: float = 2.02
    envelope_ua: float = 60.0
    vent_rate_max: float = 30.0
    infiltration_ach: float = 0.0
    heater_cop: float = 0.95
    chiller_cop: float = 3.0
    fog_rate: float = 0.5
    dehum_rate: float = 0.5
    co2_inject_rate: float = 60.0
    substeps: int = 6

    def __post_init__(self):
        positive = ("area", "height", "c_air", "led_efficacy", "solar_to_ppfd", "envelope_ua",
                    "vent_rate_max", "heater_cop", "chiller_cop", "fog_rate", "dehum_rate",
                    "co2_inject_rate", "co2_setpoint", "co2_ambient")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.cover_transmittance <= 1:
            raise ValueError("cover_transmittance must lie in (0, 1]")
        if self.infiltration_ach < 0 or self.infiltration_ach > self.vent_rate_max:
            raise ValueError("infiltration_ach must lie in [0, vent_rate_max]")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        for name in ("day_temp_band", "night_temp_band", "rh_band"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} needs min < max")
        inv = tuple(d if isinstance(d, DeviceClass) else DeviceClass(*d)
                    for d in self.device_inventory)
        names = [d.name for d in inv]
        if len(set(names)) != len(names):
            raise ValueError("duplicate load class in device_inventory")
        for d in inv:
            if d.count < 0 or d.rated_kw <= 0:
                raise ValueError(f"device {d.name}: count >= 0 and rated_kw > 0 required")
        object.__setattr__(self, "device_inventory", inv)
        for name in ("day_temp_band", "night_temp_band", "rh_band"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @property
    def volume(self):
        return self.area * self.height

    def device(self, name):
        for d in self.device_inventory:
            if d.name == name:
                return d
        return DeviceClass(name, 0, 1.0)

    def band_at(self, hour_of_day):
        if self.day_start <= hour_of_day < self.day_end:
            return self.day_temp_band
        return self.night_temp_band

    def with_inventory(self, **counts):
        """Copy with device counts replaced, e.g. ``with_inventory(led=12000)``."""
        inv = tuple(replace(d, count=counts.pop(d.name)) if d.name in counts else d
                    for d in self.device_inventory)
        if counts:
            raise KeyError(f"unknown load classes {sorted(counts)}")
        return replace(self, device_inventory=inv)


@dataclass(frozen=True)
class EnvironmentState:
    t_in: float = 20.0
    rh_in: float = 65.0
    co2: float = 820.0
    timestamp: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rh_in <= 100.0:
            raise ValueError(f"rh_in {self.rh_in} outside [0, 100]")
        if not self.co2 > 0:
            raise ValueError("co2 must be positive")


@dataclass(frozen=True)
class WeatherRecord:
    timestamp: datetime
    ghi: float
    t_out: float
    dew_point: float
    wind_speed: float = 0.0
    station_pressure: float = 101.3
    sea_level_pressure: float = 101.3
    wind_direction: float = 0.0
    rh_out: float = 50.0

    def __post_init__(self):
        if self.ghi < 0:
            raise ValueError("ghi must be non-negative")
        if not 0.0 <= self.rh_out <= 100.0:
            raise ValueError("rh_out outside [0, 100]")


@dataclass
class LoadDispatch:
    """Device scaling factors and the flows they produce.

    ``scaling`` maps a load class to either one factor shared by every unit or
    a per-unit sequence. Signs follow the balances: ``g_dehum <= 0``.
    """

    scaling: dict = field(default_factory=dict)
    q_solar: float = 0.0
    q_heater: float = 0.0
    q_chil: float = 0.0
    q_vent: float = 0.0
    q_conv: float = 0.0
    g_fog: float = 0.0
    g_dehum: float = 0.0
    g_vent: float = 0.0
    j_inj: float = 0.0
    j_vent: float = 0.0
    vent_ach: float = 0.0
    shortfall: bool = False

    def __post_init__(self):
        for name, w in self.scaling.items():
            if isinstance(w, float):
                ok = -1e-12 <= w <= 1.0 + 1e-12
            else:
                arr = np.asarray(w, dtype=float)
                ok = not (np.any(arr < -1e-12) or np.any(arr > 1.0 + 1e-12))
            if not ok:
                raise ValueError(f"scaling for {name} outside [0, 1]")
        if self.q_heater > 0 and self.q_chil > 0:
            raise ValueError("heater and chiller cannot run together")

    def merged(self, other):
        """Combine two partial dispatches (flows add, scalings union)."""
        sc = dict(self.scaling)
        sc.update(other.scaling)
        kw = {f: getattr(self, f) + getattr(other, f)
              for f in ("q_solar", "q_heater", "q_chil", "q_vent", "q_conv", "g_fog",
                        "g_dehum", "g_vent", "j_inj", "j_vent")}
        return LoadDispatch(scaling=sc, vent_ach=max(self.vent_ach, other.vent_ach),
                            shortfall=self.shortfall or other.shortfall, **kw)


def saturation_pressure(t_c):
    """Saturation vapour pressure in kPa (Magnus form, Alduchov-Eskridge coefficients)."""
    return 0.61094 * math.exp(17.625 * t_c / (t_c + 243.04))


def relative_humidity(vapour_pressure, t_c):
    """RH in percent from actual and saturation vapour pressure."""
    return 100.0 * vapour_pressure / saturation_pressure(t_c)


def solar_ppfd(ghi, config):
    """Solar PPFD inside the cover (umol m-2 s-1) for GHI in W m-2."""
    return np.asarray(ghi, dtype=float) * config.cover_transmittance * config.solar_to_ppfd


def integrate_temperature(t_in, c_air, dt_hours, q_solar=0.0, q_heater=0.0, q_chil=0.0,
                          q_vent=0.0, q_conv=0.0):
    """One explicit-Euler step of the heat balance; flows in kW, ``c_air`` in kJ/degC."""
    net = q_solar + q_heater - q_chil - q_vent - q_conv
    return t_in + net * dt_hours * SECONDS_PER_HOUR / c_air


def _fraction(value, capacity):
    return 0.0 if capacity <= 0 else min(1.0, max(0.0, value / capacity))


def step_thermal(state, weather, config, band, dt_hours=1.0):
    """Hold ``t_in`` in ``band``: heat below it; ventilate, then chill, above it.

    Returns ``(t_new, dispatch)``. ``dispatch.shortfall`` marks an update that
    ended outside the band because the actuators were saturated.
    """
    lo, hi = band
    if not lo < hi:
        raise ValueError("band needs min < max")
    a = dt_hours * SECONDS_PER_HOUR / config.c_air
    dT = state.t_in - weather.t_out
    vent_k = RHO_CP_AIR * config.volume / SECONDS_PER_HOUR  # kW per (ACH degC)
    q_solar = config.cover_transmittance * weather.ghi * config.area * 1e-3
    q_conv = config.envelope_ua * dT
    ach = config.infiltration_ach
    q_vent = vent_k * ach * dT
    free = integrate_temperature(state.t_in, config.c_air, dt_hours, q_solar=q_solar,
                                 q_vent=q_vent, q_conv=q_conv)
    heater = config.device("heater")
    chiller = config.device("chiller")
    heat_cap = heater.capacity_kw * config.heater_cop
    chil_cap = chiller.capacity_kw * config.chiller_cop
    q_heat = q_chil = 0.0
    if free < lo:
        q_heat = min((lo - free) / a, heat_cap)
    elif free > hi:
        need = (free - hi) / a
        if dT > 0 and config.vent_rate_max > ach:
            extra = min(need, vent_k * (config.vent_rate_max - ach) * dT)
            ach += extra / (vent_k * dT)
            q_vent += extra
            need -= extra
        q_chil = min(max(need, 0.0), chil_cap)
    t_new = integrate_temperature(state.t_in, config.c_air, dt_hours, q_solar=q_solar,
                                  q_heater=q_heat, q_chil=q_chil, q_vent=q_vent, q_conv=q_conv)
    short = t_new < lo - BAND_TOL or t_new > hi + BAND_TOL
    disp = LoadDispatch(scaling={"heater": _fraction(q_heat, heat_cap),
                                 "chiller": _fraction(q_chil, chil_cap)},
                        q_solar=q_solar, q_heater=q_heat, q_chil=q_chil, q_vent=q_vent,
                        q_conv=q_conv, vent_ach=ach, shortfall=short)
    return t_new, disp


def _exchange(value, outside, ach, dt_hours):
    # exact decay toward the outside value; ach * dt reaches 5 at full ventilation,
    # where a forward-Euler step would overshoot
    return outside + (value - outside) * math.exp(-ach * dt_hours)


def step_humidity(state, weather, config, band, vent_ach=0.0, dt_hours=1.0):
    """RH balance ``dRH/dt = G_fog + G_dehum - G_vent`` with a dead-band controller.

    Ventilation exchanges indoor air with outside air brought to indoor
    temperature; its RH there follows from the outdoor dew point. ``g_vent``
    is the mean exchange rate over the step.
    """
    lo, hi = band
    if not 0.0 <= lo < hi <= 100.0:
        raise ValueError("RH band must satisfy 0 <= min < max <= 100")
    rh_out_in = min(100.0, relative_humidity(saturation_pressure(weather.dew_point), state.t_in))
    free = _exchange(state.rh_in, rh_out_in, vent_ach, dt_hours)
    g_vent = (state.rh_in - free) / dt_hours
    fog = config.device("fog")
    dehum = config.device("dehumidifier")
    fog_cap = fog.count * config.fog_rate
    dehum_cap = dehum.count * config.dehum_rate
    g_fog = g_dehum = 0.0
    if free < lo:
        g_fog = min((lo - free) / dt_hours, fog_cap)
    elif free > hi:
        g_dehum = -min((free - hi) / dt_hours, dehum_cap)
    rh_new = min(100.0, max(0.0, state.rh_in + dt_hours * (g_fog + g_dehum - g_vent)))
    disp = LoadDispatch(scaling={"fog": _fraction(g_fog, fog_cap),
                                 "dehumidifier": _fraction(-g_dehum, dehum_cap)},
                        g_fog=g_fog, g_dehum=g_dehum, g_vent=g_vent)
    return rh_new, disp


def step_co2(state, config, vent_rate=0.0, dt_hours=1.0):
    """CO2 balance ``dCO2/dt = J_inj - J_vent``; injection tops up to the setpoint.

    ``j_vent`` is the mean exchange rate over the step, ``vent_rate`` in ACH.
    """
    free = _exchange(state.co2, config.co2_ambient, vent_rate, dt_hours)
    j_vent = (state.co2 - free) / dt_hours
    inj = config.device("co2")
    cap = inj.count * config.co2_inject_rate
    j_inj = min((config.co2_setpoint - free) / dt_hours, cap) if free < config.co2_setpoint else 0.0
    co2_new = state.co2 + dt_hours * (j_inj - j_vent)
    disp = LoadDispatch(scaling={"co2": _fraction(j_inj, cap)}, j_inj=j_inj, j_vent=j_vent)
    return co2_new, disp


def lighting_power(ppfd_artificial, config):
    """Electrical LED power in kW for an artificial PPFD over the growing area."""
    ppfd = np.asarray(ppfd_artificial, dtype=float)
    if np.any(ppfd < 0):
        raise ValueError("PPFD must be non-negative")
    out = ppfd * config.area / (config.led_efficacy * 1000.0)
    return float(out) if out.ndim == 0 else out


def led_dispatch(ppfd_artificial, config):
    """Spread the lighting load evenly over the LED fleet.

    Returns ``(dispatch, over_capacity)``; demand beyond the fleet is clipped.
    """
    led = config.device("led")
    p = lighting_power(ppfd_artificial, config)
    over = p > led.capacity_kw * (1 + 1e-12)
    return LoadDispatch(scaling={"led": _fraction(p, led.capacity_kw)}), bool(over)


def class_energy(dispatch, config, interval_hours):
    """kWh per load class: ``sum_n w[l, n] * P_rated[l] * I``."""
    out = {}
    for d in config.device_inventory:
        w = dispatch.scaling.get(d.name, 0.0)
        arr = np.asarray(w, dtype=float)
        if arr.ndim == 0:
            units = float(arr) * d.count
        else:
            if arr.size != d.count:
                raise ValueError(f"{d.name}: {arr.size} scaling factors for {d.count} units")
            units = math.fsum(arr.tolist())
        out[d.name] = units * d.rated_kw * interval_hours
    return out


def interval_energy(dispatch, config, interval_hours):
    """Facility energy in kWh over one interval."""
    return math.fsum(class_energy(dispatch, config, interval_hours).values())


@dataclass
class WeatherSeries:
    """Hourly weather as columns; ``timestamps`` must be contiguous."""

    timestamps: list
    ghi: np.ndarray
    t_out: np.ndarray
    dew_point: np.ndarray
    wind_speed: np.ndarray = None
    station_pressure: np.ndarray = None
    sea_level_pressure: np.ndarray = None
    wind_direction: np.ndarray = None
    rh_out: np.ndarray = None

    def __post_init__(self):
        n = len(self.timestamps)
        defaults = {"wind_speed": 0.0, "station_pressure": 101.3, "sea_level_pressure": 101.3,
                    "wind_direction": 0.0, "rh_out": 50.0}
        for name in ("ghi", "t_out", "dew_point", *defaults):
            val = getattr(self, name)
            arr = np.full(n, defaults[name]) if val is None else np.asarray(val, dtype=float)
            if arr.shape != (n,):
                raise WeatherDataError(f"{name} has {arr.size} values for {n} timestamps")
            setattr(self, name, arr)
        if np.any(self.ghi < 0):
            raise WeatherDataError("negative GHI")
        for i in range(1, n):
            if self.timestamps[i] - self.timestamps[i - 1] != timedelta(hours=1):
                raise WeatherDataError(f"weather not hourly-contiguous at {self.timestamps[i]}")

    def __len__(self):
        return len(self.timestamps)

    def record(self, i):
        return WeatherRecord(self.timestamps[i], float(self.ghi[i]), float(self.t_out[i]),
                             float(self.dew_point[i]), float(self.wind_speed[i]),
                             float(self.station_pressure[i]), float(self.sea_level_pressure[i]),
                             float(self.wind_direction[i]), float(self.rh_out[i]))

    def slice(self, start, stop):
        cols = {f: getattr(self, f)[start:stop] for f in
                ("ghi", "t_out", "dew_point", "wind_speed", "station_pressure",
                 "sea_level_pressure", "wind_direction", "rh_out")}
        return WeatherSeries(self.timestamps[start:stop], **cols)


def read_weather_csv(path):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != WEATHER_COLUMNS:
            raise WeatherDataError(f"{path}: expected columns {', '.join(WEATHER_COLUMNS)}")
        ts, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(WEATHER_COLUMNS):
                raise WeatherDataError(f"{path}:{lineno}: expected {len(WEATHER_COLUMNS)} fields")
            try:
                ts.append(datetime.fromisoformat(row[0].strip()))
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise WeatherDataError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise WeatherDataError(f"{path}: no data rows")
    a = np.array(rows)
    try:
        return WeatherSeries(ts, a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4], a[:, 5], a[:, 6],
                             a[:, 7])
    except WeatherDataError as exc:
        raise WeatherDataError(f"{path}: {exc}") from None


def write_weather_csv(weather, path):
    with Path(path).open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(WEATHER_COLUMNS)
        for i in range(len(weather)):
            wr.writerow([weather.timestamps[i].isoformat()] + [
                repr(float(getattr(weather, f)[i])) for f in
                ("ghi", "t_out", "dew_point", "wind_speed", "station_pressure",
                 "sea_level_pressure", "wind_direction", "rh_out")])


@dataclass
class SimulationResult:
    timestamps: list
    energy: dict
    t_in: np.ndarray
    rh_in: np.ndarray
    co2: np.ndarray
    temp_lo: np.ndarray
    temp_hi: np.ndarray
    shortfall: np.ndarray
    led_over_capacity: np.ndarray
    ppfd_artificial: np.ndarray

    @property
    def total_kwh(self):
        return self.energy["total"]

    def shortfall_hours(self):
        return [self.timestamps[i] for i in np.nonzero(self.shortfall)[0]]


def _recipe_for(recipes, day):
    if callable(recipes):
        return recipes(day)
    if hasattr(recipes, "artificial"):
        return recipes
    return recipes[day]


def simulate(weather, recipes, config=None, initial_state=None, hours=None):
    """Run the climate and load model hour by hour.

    ``recipes`` is one LightingRecipe used every day, a sequence indexed by
    day, or a callable ``day -> LightingRecipe``; only its artificial part
    drives the LEDs. Each hour is split into ``config.substeps`` Euler steps.
    """
    config = config or GreenhouseConfig()
    n = len(weather) if hours is None else int(hours)
    if n > len(weather):
        raise WeatherDataError(f"weather covers {len(weather)} h, simulation needs {n} h")
    if n and weather.timestamps[0].hour != 0:
        raise WeatherDataError("weather must start at midnight")
    state = initial_state or EnvironmentState(
        t_in=float(np.mean(config.band_at(0))), rh_in=float(np.mean(config.rh_band)),
        co2=config.co2_setpoint)
    dt = 1.0 / config.substeps
    cats = ("lighting", "heating", "cooling", "humidity", "co2", "fans")
    energy = {c: np.zeros(n) for c in cats}
    t_in = np.zeros(n)
    rh = np.zeros(n)
    co2 = np.zeros(n)
    lo_arr = np.zeros(n)
    hi_arr = np.zeros(n)
    short = np.zeros(n, dtype=bool)
    over = np.zeros(n, dtype=bool)
    ppfd = np.zeros(n)
    recipe = None
    for k in range(n):
        hod = k % 24
        if hod == 0:
            recipe = _recipe_for(recipes, k // 24)
            if recipe.n_intervals != 24:
                raise SimulationError("simulation needs hourly recipes")
        wx = weather.record(k)
        band = config.band_at(hod)
        ppfd[k] = recipe.artificial[hod]
        light, over[k] = led_dispatch(ppfd[k], config)
        lit = ppfd[k] > 0.0
        acc = {c: 0.0 for c in cats}
        hour_short = False
        for _ in range(config.substeps):
            t_new, thermal = step_thermal(state, wx, config, band, dt)
            rh_new, moist = step_humidity(state, wx, config, config.rh_band, thermal.vent_ach, dt)
            c_new, gas = step_co2(state, config, thermal.vent_ach, dt)
            fans_on = lit or thermal.vent_ach > config.infiltration_ach
            disp = light.merged(thermal).merged(moist).merged(gas)
            disp.scaling["fans"] = 1.0 if fans_on else 0.0
            for name, kwh in class_energy(disp, config, dt).items():
                acc[CATEGORY.get(name, name)] += kwh
            hour_short = thermal.shortfall
            state = EnvironmentState(t_new, rh_new, c_new, k)
        for c in cats:
            energy[c][k] = acc[c]
        t_in[k], rh[k], co2[k] = state.t_in, state.rh_in, state.co2
        lo_arr[k], hi_arr[k] = band
        short[k] = hour_short
    energy["total"] = sum(energy[c] for c in cats)
    return SimulationResult(timestamps=list(weather.timestamps[:n]), energy=energy, t_in=t_in,
                            rh_in=rh, co2=co2, temp_lo=lo_arr, temp_hi=hi_arr, shortfall=short,
                            led_over_capacity=over, ppfd_artificial=ppfd)


def write_energy_csv(result, path):
    with Path(path).open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(ENERGY_COLUMNS)
        e = result.energy
        for i, ts in enumerate(result.timestamps):
            wr.writerow([ts.isoformat()] + [repr(float(e[c][i])) for c in
                                            ("lighting", "heating", "cooling", "humidity",
                                             "co2", "fans", "total")])
