"""CCHP energy model: flows, objectives, constraint violations and baselines.

Decision vectors hold one ``(X1, X2, X3)`` triple per period: grid electricity,
PGU fuel and boiler fuel, all in kWh. Functions accept a single vector of
length ``3T`` or a ``(pop, 3T)`` batch and answer in the same shape.

Objective conventions:

* cost (Yuan) prices gas on the fuel burned, ``C_gas * (X2 + X3)``; the
  ``"output"`` cost basis instead prices PGU electricity and boiler heat
  over efficiency.
* PEC (kWh primary) and CDE (g CO2) use the site-to-primary and emission
  factors on grid electricity and on fuel.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields

import numpy as np

__all__ = [
    "CCHPProblem",
    "CaseMode",
    "ConversionConstants",
    "DemandProfile",
    "EmissionAndEnergyFactors",
    "EnergyFlows",
    "change_rates",
    "derive_flows",
    "objectives",
    "pgu_power_from_fuel",
    "reference_objectives",
    "thermal_fuel_requirement",
    "violations",
]

OBJECTIVE_NAMES = ("cost", "pec", "cde")


class CaseMode(enum.Enum):
    FULL = "full"
    PGU_OFF = "pgu-off"
    BOILER_OFF = "boiler-off"

    @classmethod
    def parse(cls, text: str) -> "CaseMode":
        key = text.strip().lower().replace("_", "-")
        for mode in cls:
            if mode.value == key:
                return mode
        raise ValueError(f"unknown case mode {text!r} (expected full, pgu-off or boiler-off)")


@dataclass(frozen=True)
class ConversionConstants:
    a: float = 2.67
    b: float = 11.43
    eta_pgu_th: float = 0.51
    eta_boiler: float = 0.9
    eta_cool: float = 0.7
    eta_heat: float = 0.85

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not self.b >= 0:
            raise ValueError(f"b must be non-negative, got {self.b}")
        for name in ("eta_pgu_th", "eta_boiler", "eta_cool", "eta_heat"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")
        if 1.0 / self.a + self.eta_pgu_th > 1.0:
            raise ValueError("PGU electric plus thermal yield exceeds its fuel input (1/a + eta_pgu_th > 1)")


@dataclass(frozen=True)
class EmissionAndEnergyFactors:
    ecf_pec: float = 3.336
    fcf_pec_pgu: float = 1.047
    fcf_pec_boiler: float = 1.047
    ecf_cde: float = 203.74
    fcf_cde_pgu: float = 200.0
    fcf_cde_boiler: float = 200.0

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be positive, got {getattr(self, f.name)}")


@dataclass(frozen=True)
class DemandProfile:
    electricity: tuple[float, ...]
    cooling: tuple[float, ...]
    heating: tuple[float, ...]

    def __post_init__(self):
        n = len(self.electricity)
        if n < 1:
            raise ValueError("demand profile needs at least one period")
        if len(self.cooling) != n or len(self.heating) != n:
            raise ValueError("demand columns differ in length")
        for name in ("electricity", "cooling", "heating"):
            col = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(col)) or np.any(col < 0):
                raise ValueError(f"{name} demand must be finite and non-negative")

    @property
    def periods(self) -> int:
        return len(self.electricity)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            np.asarray(self.electricity, dtype=float),
            np.asarray(self.cooling, dtype=float),
            np.asarray(self.heating, dtype=float),
        )


@dataclass(frozen=True)
class EnergyFlows:
    """Per-period energy quantities (kWh) of the trigeneration network.

    ``Q_th_surplus`` is the part of recovered plus boiler heat exceeding what
    the cooling and heating components need to meet demand.
    """

    E_grid: np.ndarray
    E_pgu: np.ndarray
    F_pgu: np.ndarray
    F_boiler: np.ndarray
    Q_rcv: np.ndarray
    Q_boiler: np.ndarray
    Q_th_cool: np.ndarray
    Q_th_heat: np.ndarray
    Q_cool: np.ndarray
    Q_heat: np.ndarray
    E_facility: np.ndarray
    E_excess: np.ndarray
    Q_th_surplus: np.ndarray
    Energy_loss_pgu: np.ndarray
    Energy_loss_boiler: np.ndarray
    Energy_loss_c: np.ndarray
    Energy_loss_h: np.ndarray
    Energy_loss_total: np.ndarray


def pgu_power_from_fuel(fuel, constants: ConversionConstants = ConversionConstants()):
    """PGU electricity from fuel via the affine fuel curve ``F = a E + b``.

    Fuel below ``b`` lies in the dead zone and yields no power.
    """
    fuel = np.asarray(fuel, dtype=float)
    if np.any(fuel < 0):
        raise ValueError("PGU fuel must be non-negative")
    power = np.where(fuel >= constants.b, (fuel - constants.b) / constants.a, 0.0)
    return power if power.ndim else float(power)


def thermal_fuel_requirement(cooling, heating, constants: ConversionConstants):
    """Heat (kWh) the cooling and heating components must receive to meet demand."""
    return np.asarray(cooling, dtype=float) / constants.eta_cool + np.asarray(heating, dtype=float) / constants.eta_heat


def _split(x, mode: CaseMode):
    """Reshape to ``(..., T, 3)`` columns with switched-off units zeroed."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] % 3:
        raise ValueError(f"decision length {x.shape[-1]} is not a multiple of 3")
    trip = x.reshape(x.shape[:-1] + (x.shape[-1] // 3, 3))
    x1, x2, x3 = trip[..., 0], trip[..., 1], trip[..., 2]
    if mode is CaseMode.PGU_OFF:
        x2 = np.zeros_like(x2)
    elif mode is CaseMode.BOILER_OFF:
        x3 = np.zeros_like(x3)
    return x1, x2, x3


def derive_flows(x, demand: DemandProfile, constants: ConversionConstants, mode: CaseMode = CaseMode.FULL) -> EnergyFlows:
    """Energy flows for one decision vector.

    All recovered and boiler heat passes to the cooling and heating components,
    split in proportion to their demand-side needs (equally when there is no
    thermal demand). Losses are the residuals of each conservation balance.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("derive_flows takes a single decision vector")
    if np.any(x < 0):
        raise ValueError("decision variables must be non-negative")
    trip = x.reshape(-1, 3)
    if mode is CaseMode.PGU_OFF and np.any(trip[:, 1] != 0):
        raise ValueError("PGU fuel must be zero when the PGU is off")
    if mode is CaseMode.BOILER_OFF and np.any(trip[:, 2] != 0):
        raise ValueError("boiler fuel must be zero when the boiler is off")
    e_d, q_c, q_h = demand.arrays()
    if len(e_d) != len(trip):
        raise ValueError(f"decision covers {len(trip)} periods, demand covers {len(e_d)}")
    c = constants

    e_grid, f_pgu, f_boiler = trip[:, 0], trip[:, 1], trip[:, 2]
    e_pgu = np.asarray(pgu_power_from_fuel(f_pgu, c), dtype=float)
    q_rcv = c.eta_pgu_th * f_pgu
    q_boiler = c.eta_boiler * f_boiler

    need_c = q_c / c.eta_cool
    need_h = q_h / c.eta_heat
    need = need_c + need_h
    share_c = np.divide(need_c, need, out=np.full_like(need, 0.5), where=need > 0)
    supply = q_rcv + q_boiler
    q_th_cool = supply * share_c
    q_th_heat = supply - q_th_cool
    q_cool = c.eta_cool * q_th_cool
    q_heat = c.eta_heat * q_th_heat

    e_avail = e_grid + e_pgu
    e_facility = np.minimum(e_d, e_avail)
    e_excess = e_avail - e_facility

    loss_pgu = f_pgu - e_pgu - q_rcv
    loss_boiler = f_boiler - q_boiler
    loss_c = q_th_cool - q_cool
    loss_h = q_th_heat - q_heat
    return EnergyFlows(
        E_grid=e_grid,
        E_pgu=e_pgu,
        F_pgu=f_pgu,
        F_boiler=f_boiler,
        Q_rcv=q_rcv,
        Q_boiler=q_boiler,
        Q_th_cool=q_th_cool,
        Q_th_heat=q_th_heat,
        Q_cool=q_cool,
        Q_heat=q_heat,
        E_facility=e_facility,
        E_excess=e_excess,
        Q_th_surplus=np.maximum(0.0, supply - need),
        Energy_loss_pgu=loss_pgu,
        Energy_loss_boiler=loss_boiler,
        Energy_loss_c=loss_c,
        Energy_loss_h=loss_h,
        Energy_loss_total=loss_pgu + loss_boiler + loss_c + loss_h,
    )


def _mode(scenario, mode):
    return scenario.case if mode is None else mode


def objectives(x, scenario, mode: CaseMode | None = None) -> np.ndarray:
    """(cost, PEC, CDE) of a decision vector or batch under ``scenario``."""
    mode = _mode(scenario, mode)
    x1, x2, x3 = _split(x, mode)
    c = scenario.constants
    k = scenario.factors
    prices = np.asarray(scenario.electricity_prices, dtype=float)
    gas = scenario.gas_price
    if scenario.cost_basis == "output":
        e_pgu = np.where(x2 >= c.b, (x2 - c.b) / c.a, 0.0)
        gas_cost = gas * (e_pgu + x3)
    else:
        gas_cost = gas * (x2 + x3)
    cost = np.sum(prices * x1 + gas_cost, axis=-1)
    pec = np.sum(k.ecf_pec * x1 + k.fcf_pec_pgu * x2 + k.fcf_pec_boiler * x3, axis=-1)
    cde = np.sum(k.ecf_cde * x1 + k.fcf_cde_pgu * x2 + k.fcf_cde_boiler * x3, axis=-1)
    return np.stack([cost, pec, cde], axis=-1)


def violations(x, scenario, mode: CaseMode | None = None) -> np.ndarray:
    """Shortfalls (kWh): unmet electricity, unmet component heat, PGU dead-zone depth."""
    mode = _mode(scenario, mode)
    x1, x2, x3 = _split(x, mode)
    c = scenario.constants
    e_d, q_c, q_h = scenario.demand.arrays()
    e_pgu = np.where(x2 >= c.b, (x2 - c.b) / c.a, 0.0)
    v_elec = np.maximum(0.0, e_d - x1 - e_pgu)
    need = thermal_fuel_requirement(q_c, q_h, c)
    v_thermal = np.maximum(0.0, need - c.eta_pgu_th * x2 - c.eta_boiler * x3)
    v_dead = np.where((x2 > 0) & (x2 < c.b), c.b - x2, 0.0)
    return np.stack([v_elec.sum(axis=-1), v_thermal.sum(axis=-1), v_dead.sum(axis=-1)], axis=-1)


def reference_objectives(scenario) -> np.ndarray:
    """Objectives of the supply without CCHP: grid electricity and gas-fired heat."""
    c = scenario.constants
    k = scenario.factors
    e_d, q_c, q_h = scenario.demand.arrays()
    fuel = thermal_fuel_requirement(q_c, q_h, c) / c.eta_boiler
    prices = np.asarray(scenario.electricity_prices, dtype=float)
    cost = np.sum(prices * e_d + scenario.gas_price * fuel)
    pec = np.sum(k.ecf_pec * e_d + k.fcf_pec_boiler * fuel)
    cde = np.sum(k.ecf_cde * e_d + k.fcf_cde_boiler * fuel)
    return np.array([cost, pec, cde])


def reference_decision(scenario) -> np.ndarray:
    """The all-grid-and-boiler decision vector, feasible for any demand."""
    c = scenario.constants
    e_d, q_c, q_h = scenario.demand.arrays()
    fuel = thermal_fuel_requirement(q_c, q_h, c) / c.eta_boiler
    return np.stack([e_d, np.zeros_like(e_d), fuel], axis=1).reshape(-1)


def change_rates(ref, sys) -> np.ndarray:
    """Percentage reduction of ``sys`` relative to ``ref`` per objective."""
    ref = np.asarray(ref, dtype=float)
    sys = np.asarray(sys, dtype=float)
    if np.any(ref == 0):
        raise ValueError("reference objective is zero; change rate undefined")
    return 100.0 * (ref - sys) / ref


class CCHPProblem:
    """Batch problem adapter for the evolutionary engine."""

    n_obj = 3
    n_con = 3

    def __init__(self, scenario, mode: CaseMode | None = None):
        self.scenario = scenario
        self.mode = _mode(scenario, mode)
        lower = np.asarray(scenario.lower, dtype=float).copy()
        upper = np.asarray(scenario.upper, dtype=float).copy()
        if self.mode is CaseMode.PGU_OFF:
            lower[1::3] = upper[1::3] = 0.0
        elif self.mode is CaseMode.BOILER_OFF:
            lower[2::3] = upper[2::3] = 0.0
        self.lower = lower
        self.upper = upper
        self.n_var = lower.size
        e_d, q_c, q_h = scenario.demand.arrays()
        scale = float(np.max(e_d + thermal_fuel_requirement(q_c, q_h, scenario.constants)))
        self.feasibility_tol = 1e-6 * max(1.0, scale)

    def evaluate(self, X):
        return objectives(X, self.scenario, self.mode), violations(X, self.scenario, self.mode)
