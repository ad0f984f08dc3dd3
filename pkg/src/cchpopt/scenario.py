"""Scenario construction: config files, load CSVs, tariffs and builtin cases.

Scenario files are INI documents::

    [scenario]
    name = my-site
    case = full                  ; full | pgu-off | boiler-off
    cost_basis = fuel            ; fuel | output

    [demand]
    electricity_kwh = 3070       ; comma-separated, one value per period
    cooling_kwh = 5400
    heating_kwh = 0
    ; csv = loads.csv            ; alternative: path relative to the file

    [tariff]
    building = commercial        ; commercial | residential
    flat_electricity = 0.65      ; optional, overrides the hourly bands

Optional ``[constants]``, ``[factors]`` and ``[bounds]`` sections override
the defaults; only ``[demand]`` is mandatory.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import re
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .cchp import (
    CaseMode,
    ConversionConstants,
    DemandProfile,
    EmissionAndEnergyFactors,
    reference_decision,
)

__all__ = [
    "BUILTIN_NAMES",
    "DEFAULT_HOUR_BANDS",
    "Scenario",
    "ScenarioError",
    "TariffSchedule",
    "builtin_scenario",
    "default_bounds",
    "dump_load_csv",
    "dump_scenario",
    "gas_price_at",
    "load_scenario",
    "parse_load_csv",
    "parse_scenario",
    "price_at",
]

BANDS = ("average", "peak", "low")

# peak 08-11 and 18-22, low 23-06, average otherwise
DEFAULT_HOUR_BANDS: tuple[str, ...] = tuple(
    "peak" if 8 <= h <= 11 or 18 <= h <= 22 else "low" if h >= 23 or h <= 6 else "average"
    for h in range(24)
)

TABLE2_PRICES = {
    "commercial": {"average": 0.87, "peak": 1.305, "low": 0.435},
    "residential": {"average": 0.5, "peak": 0.65, "low": 0.45},
}
GAS_PRICE = 0.22

LOAD_CSV_HEADER = ("hour", "electricity_kwh", "cooling_kwh", "heating_kwh")


class ScenarioError(ValueError):
    """Invalid scenario document or load profile."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


@dataclass(frozen=True)
class TariffSchedule:
    building: str = "residential"
    average: float = 0.5
    peak: float = 0.65
    low: float = 0.45
    gas: float = GAS_PRICE
    hour_bands: tuple[str, ...] = DEFAULT_HOUR_BANDS

    def __post_init__(self):
        if self.building not in TABLE2_PRICES:
            raise ValueError(f"unknown building class {self.building!r}")
        for name in (*BANDS, "gas"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} price must be positive")
        if len(self.hour_bands) != 24 or any(b not in BANDS for b in self.hour_bands):
            raise ValueError("hour map needs 24 entries drawn from average/peak/low")

    @classmethod
    def for_building(cls, building: str, **overrides) -> "TariffSchedule":
        if building not in TABLE2_PRICES:
            raise ValueError(f"unknown building class {building!r}")
        return cls(building=building, **{**TABLE2_PRICES[building], **overrides})


def price_at(schedule: TariffSchedule, t: int) -> float:
    """Electricity price (Yuan/kWh) in hour ``t``; periodic over days."""
    return getattr(schedule, schedule.hour_bands[t % 24])


def gas_price_at(schedule: TariffSchedule, t: int) -> float:
    return schedule.gas


@dataclass(frozen=True)
class Scenario:
    name: str
    demand: DemandProfile
    tariff: TariffSchedule = TariffSchedule()
    constants: ConversionConstants = ConversionConstants()
    factors: EmissionAndEnergyFactors = EmissionAndEnergyFactors()
    case: CaseMode = CaseMode.FULL
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()
    cost_basis: str = "fuel"
    flat_electricity: float | None = None
    start_hour: int = 0
    synthetic: bool = False

    def __post_init__(self):
        n = 3 * self.demand.periods
        if not self.lower and not self.upper:
            lo, hi = default_bounds(self.demand, self.case)
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
        if len(self.lower) != n or len(self.upper) != n:
            raise ValueError(f"bounds must have {n} entries (3 per period)")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)) or any(lo < 0 for lo in self.lower):
            raise ValueError("bounds must satisfy 0 <= lower <= upper")
        if self.cost_basis not in ("fuel", "output"):
            raise ValueError(f"cost_basis must be 'fuel' or 'output', got {self.cost_basis!r}")
        if self.flat_electricity is not None and not self.flat_electricity > 0:
            raise ValueError("flat_electricity must be positive")

    @property
    def periods(self) -> int:
        return self.demand.periods

    @property
    def electricity_prices(self) -> np.ndarray:
        if self.flat_electricity is not None:
            return np.full(self.periods, self.flat_electricity)
        return np.array([price_at(self.tariff, self.start_hour + t) for t in range(self.periods)])

    @property
    def gas_price(self) -> float:
        return self.tariff.gas

    def with_case(self, case: CaseMode) -> "Scenario":
        """Same scenario under another case, bounds re-forced for switched-off units."""
        lo, hi = _force_case(np.array(self.lower), np.array(self.upper), case)
        return replace(self, case=case, lower=lo, upper=hi)


def _force_case(lower, upper, case):
    lower = np.asarray(lower, dtype=float).copy()
    upper = np.asarray(upper, dtype=float).copy()
    if case is CaseMode.PGU_OFF:
        lower[1::3] = upper[1::3] = 0.0
    elif case is CaseMode.BOILER_OFF:
        lower[2::3] = upper[2::3] = 0.0
    return tuple(float(v) for v in lower), tuple(float(v) for v in upper)


def default_bounds(demand: DemandProfile, case: CaseMode = CaseMode.FULL):
    """``[0, 2 * total demand of the period]`` for every variable."""
    e, c, h = demand.arrays()
    upper = np.repeat(2.0 * (e + c + h), 3)
    return _force_case(np.zeros_like(upper), upper, case)


# --------------------------------------------------------------------------
# load profiles


def parse_load_csv(text: str) -> DemandProfile:
    """Parse ``hour,electricity_kwh,cooling_kwh,heating_kwh`` rows into a profile."""
    reader = csv.reader(io.StringIO(text))
    rows = [(reader.line_num, r) for r in reader if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ScenarioError("load CSV is empty")
    header = tuple(cell.strip() for cell in rows[0][1])
    if header != LOAD_CSV_HEADER:
        raise ScenarioError(f"load CSV header must be {','.join(LOAD_CSV_HEADER)}", line=rows[0][0])
    if len(rows) == 1:
        raise ScenarioError("no data rows")
    cols = ([], [], [])
    for lineno, row in rows[1:]:
        if len(row) != 4:
            raise ScenarioError(f"row {lineno}: expected 4 cells, got {len(row)}", line=lineno)
        try:
            float(row[0])
            values = [float(cell) for cell in row[1:]]
        except ValueError:
            raise ScenarioError(f"row {lineno}: non-numeric cell", line=lineno) from None
        for name, v, col in zip(LOAD_CSV_HEADER[1:], values, cols):
            if not math.isfinite(v) or v < 0:
                raise ScenarioError(f"row {lineno}: {name} must be finite and >= 0, got {v}", key=name, line=lineno)
            col.append(v)
    return DemandProfile(*(tuple(c) for c in cols))


def dump_load_csv(profile: DemandProfile) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOAD_CSV_HEADER)
    for t, (e, c, h) in enumerate(zip(profile.electricity, profile.cooling, profile.heating)):
        writer.writerow([t, repr(e), repr(c), repr(h)])
    return buf.getvalue()


# --------------------------------------------------------------------------
# scenario documents


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return lineno
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", line):
            return lineno
    return None


class _Reader:
    """Typed accessors over a parsed document that report key and line on failure."""

    def __init__(self, parser: configparser.ConfigParser, text: str):
        self.parser = parser
        self.text = text

    def error(self, message, section, key=None):
        name = f"{section}.{key}" if key else section
        return ScenarioError(message, key=name, line=_line_of(self.text, section, key))

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def string(self, section, key, default=None):
        if not self.has(section, key):
            if default is None:
                raise self.error("missing mandatory key", section, key)
            return default
        return self.parser.get(section, key).strip()

    def number(self, section, key, default=None, positive=False):
        if not self.has(section, key):
            if default is None:
                raise self.error("missing mandatory key", section, key)
            return default
        raw = self.parser.get(section, key)
        try:
            value = float(raw)
        except ValueError:
            raise self.error(f"not a number: {raw.strip()!r}", section, key) from None
        if not math.isfinite(value) or value < 0 or (positive and value == 0):
            raise self.error(f"must be {'positive' if positive else 'non-negative'}, got {value}", section, key)
        return value

    def numbers(self, section, key):
        if not self.has(section, key):
            raise self.error("missing mandatory key", section, key)
        raw = self.parser.get(section, key)
        out = []
        for cell in raw.replace("\n", ",").split(","):
            if not cell.strip():
                continue
            try:
                value = float(cell)
            except ValueError:
                raise self.error(f"not a number: {cell.strip()!r}", section, key) from None
            if not math.isfinite(value) or value < 0:
                raise self.error(f"values must be finite and non-negative, got {value}", section, key)
            out.append(value)
        if not out:
            raise self.error("empty list", section, key)
        return tuple(out)


def parse_scenario(text: str, base_dir: str | Path | None = None) -> Scenario:
    """Parse and validate a scenario document, filling defaults for omitted keys."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed document: {exc.message.splitlines()[0]}", line=getattr(exc, "lineno", None)) from None
    r = _Reader(parser, text)

    if not parser.has_section("demand"):
        raise ScenarioError("missing mandatory section [demand]", key="demand")
    if r.has("demand", "csv"):
        path = Path(r.string("demand", "csv"))
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        if not path.exists():
            raise r.error(f"load CSV not found: {path}", "demand", "csv")
        demand = parse_load_csv(path.read_text(encoding="utf-8"))
    else:
        cols = [r.numbers("demand", key) for key in ("electricity_kwh", "cooling_kwh", "heating_kwh")]
        if len({len(c) for c in cols}) != 1:
            raise r.error("electricity, cooling and heating lists differ in length", "demand")
        demand = DemandProfile(*cols)

    try:
        case = CaseMode.parse(r.string("scenario", "case", "full"))
    except ValueError as exc:
        raise r.error(str(exc), "scenario", "case") from None
    cost_basis = r.string("scenario", "cost_basis", "fuel")
    if cost_basis not in ("fuel", "output"):
        raise r.error(f"cost_basis must be fuel or output, got {cost_basis!r}", "scenario", "cost_basis")

    building = r.string("tariff", "building", "residential")
    if building not in TABLE2_PRICES:
        raise r.error(f"unknown building class {building!r}", "tariff", "building")
    prices = {band: r.number("tariff", band, TABLE2_PRICES[building][band], positive=True) for band in BANDS}
    gas = r.number("tariff", "gas", GAS_PRICE, positive=True)
    hour_bands = DEFAULT_HOUR_BANDS
    if r.has("tariff", "hours"):
        hour_bands = tuple(h.strip() for h in r.string("tariff", "hours").split(",") if h.strip())
        if len(hour_bands) != 24 or any(h not in BANDS for h in hour_bands):
            raise r.error("hours must list 24 bands drawn from average/peak/low", "tariff", "hours")
    tariff = TariffSchedule(building, hour_bands=hour_bands, gas=gas, **prices)
    flat = r.number("tariff", "flat_electricity", positive=True) if r.has("tariff", "flat_electricity") else None
    start_hour = int(r.number("tariff", "start_hour", 0.0))

    kwargs = {}
    for section, cls in (("constants", ConversionConstants), ("factors", EmissionAndEnergyFactors)):
        values = {f.name: r.number(section, f.name, f.default, positive=f.name != "b") for f in fields(cls)}
        try:
            kwargs[section] = cls(**values)
        except ValueError as exc:
            raise r.error(str(exc), section) from None

    if r.has("bounds", "lower") or r.has("bounds", "upper"):
        lower, upper = r.numbers("bounds", "lower"), r.numbers("bounds", "upper")
        if len(lower) != 3 * demand.periods or len(upper) != 3 * demand.periods:
            raise r.error(f"bounds need {3 * demand.periods} entries (3 per period)", "bounds")
        lower, upper = _force_case(lower, upper, case)
    else:
        lower, upper = default_bounds(demand, case)

    synthetic = r.string("scenario", "synthetic", "false").lower() in ("1", "true", "yes")
    try:
        return Scenario(
            name=r.string("scenario", "name", "scenario"),
            demand=demand,
            tariff=tariff,
            case=case,
            lower=lower,
            upper=upper,
            cost_basis=cost_basis,
            flat_electricity=flat,
            start_hour=start_hour,
            synthetic=synthetic,
            **kwargs,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc.strerror}") from None
    return parse_scenario(text, base_dir=path.parent)


def _join(values) -> str:
    return ", ".join(repr(float(v)) for v in values)


def dump_scenario(s: Scenario) -> str:
    """Serialize a scenario (demand inline) so that ``parse_scenario`` restores it exactly."""
    lines = [
        "[scenario]",
        f"name = {s.name}",
        f"case = {s.case.value}",
        f"cost_basis = {s.cost_basis}",
        f"synthetic = {'true' if s.synthetic else 'false'}",
        "",
        "[demand]",
        f"electricity_kwh = {_join(s.demand.electricity)}",
        f"cooling_kwh = {_join(s.demand.cooling)}",
        f"heating_kwh = {_join(s.demand.heating)}",
        "",
        "[tariff]",
        f"building = {s.tariff.building}",
        *(f"{band} = {getattr(s.tariff, band)!r}" for band in BANDS),
        f"gas = {s.tariff.gas!r}",
        f"hours = {', '.join(s.tariff.hour_bands)}",
        f"start_hour = {s.start_hour}",
    ]
    if s.flat_electricity is not None:
        lines.append(f"flat_electricity = {s.flat_electricity!r}")
    for section, obj in (("constants", s.constants), ("factors", s.factors)):
        lines += ["", f"[{section}]", *(f"{f.name} = {getattr(obj, f.name)!r}" for f in fields(obj))]
    lines += ["", "[bounds]", f"lower = {_join(s.lower)}", f"upper = {_join(s.upper)}", ""]
    return "\n".join(lines)


# --------------------------------------------------------------------------
# builtin scenarios

PEAK_LOADS = {
    # electricity, cooling, heating (kW)
    "hotel": (3070.0, 5400.0, 7657.0),
    "office": (3198.0, 7056.0, 7050.0),
    "residential": (4166.0, 6145.0, 7080.0),
}
PEAK_PRICE = 0.65

_PEAK_CASES = {
    "hotel-summer-peak": ("hotel", "summer", "commercial"),
    "office-winter-peak": ("office", "winter", "commercial"),
    "residential-transition-peak": ("residential", "transition", "residential"),
}
_SYNTHETIC_CASES = {
    "hotel-summer-24h": ("hotel", "summer", "commercial"),
    "office-winter-24h": ("office", "winter", "commercial"),
    "residential-transition-24h": ("residential", "transition", "residential"),
}
BUILTIN_NAMES = tuple(_PEAK_CASES) + tuple(_SYNTHETIC_CASES)


def _seasonal(loads, season):
    e, c, h = loads
    if season == "summer":
        h = 0.0
    elif season == "winter":
        c = 0.0
    return e, c, h


def _bump(hours, centre, width):
    return np.exp(-0.5 * ((hours - centre) / width) ** 2)


def _day_shapes(building):
    """Smooth hourly shapes (max 1) for electricity, cooling and heating."""
    h = np.arange(24, dtype=float)
    if building == "hotel":
        elec = 0.7 + 0.2 * _bump(h, 9, 2.5) + 0.3 * _bump(h, 20, 3)
        cool = 0.55 + 0.45 * _bump(h, 15, 4)
        heat = 0.6 + 0.25 * _bump(h, 7, 2.5) + 0.3 * _bump(h, 21, 3)
    elif building == "office":
        work = 1.0 / (1.0 + np.exp(-(h - 7.5) * 1.5)) / (1.0 + np.exp((h - 18.5) * 1.5))
        elec = 0.2 + 0.8 * work
        cool = 0.1 + 0.9 * work * (0.75 + 0.25 * _bump(h, 14, 3))
        heat = 0.15 + 0.85 * work * (0.8 + 0.2 * _bump(h, 9, 2))
    else:
        elec = 0.35 + 0.35 * _bump(h, 7.5, 1.5) + 0.65 * _bump(h, 20, 2.2)
        cool = 0.3 + 0.7 * _bump(h, 16, 3.5)
        heat = 0.35 + 0.5 * _bump(h, 7, 2) + 0.6 * _bump(h, 21, 2.5)
    return [s / s.max() for s in (elec, cool, heat)]


def builtin_scenario(name: str) -> Scenario:
    """Builtin scenarios: single-period peak loads and synthetic 24 h profiles.

    Peak scenarios price grid electricity at a flat 0.65 Yuan/kWh; the 24 h
    variants use the hourly tariff of their building class.
    """
    if name in _PEAK_CASES:
        building, season, tariff_class = _PEAK_CASES[name]
        e, c, h = _seasonal(PEAK_LOADS[building], season)
        demand = DemandProfile((e,), (c,), (h,))
        return Scenario(
            name=name,
            demand=demand,
            tariff=TariffSchedule.for_building(tariff_class),
            flat_electricity=PEAK_PRICE,
        )
    if name in _SYNTHETIC_CASES:
        building, season, tariff_class = _SYNTHETIC_CASES[name]
        peaks = _seasonal(PEAK_LOADS[building], season)
        cols = [tuple(float(v) for v in np.round(p * s, 1)) for p, s in zip(peaks, _day_shapes(building))]
        return Scenario(
            name=name,
            demand=DemandProfile(*cols),
            tariff=TariffSchedule.for_building(tariff_class),
            synthetic=True,
        )
    raise ValueError(f"unknown builtin scenario {name!r}; valid names: {', '.join(BUILTIN_NAMES)}")


def reference_point_is_feasible(s: Scenario) -> bool:
    """Whether the all-grid-and-boiler dispatch fits the scenario's bounds."""
    x = reference_decision(s)
    return bool(np.all(x >= np.array(s.lower) - 1e-9) and np.all(x <= np.array(s.upper) + 1e-9))

