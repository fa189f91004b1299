"""Closed-form heat flows and the steady-state balance of the bus cabin.

The cabin is modelled as four thermal reservoirs: cabin air, radiant-heater
(RH) panels, inner shell, and outer shell.  Each function below computes one
signed heat flow in watts; ``balance_residuals`` assembles the reservoir
energy-conservation rows.  All temperatures are kelvin internally; degrees
Celsius appear only in configuration files and reports.

Sign conventions:
  * door/shell losses are positive when heat leaves the cabin,
  * ``Q_hvac`` is positive when heating, negative when cooling,
  * radiative exchange terms are positive from the hotter to the colder
    surface named first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, EvaluationError

#: Stefan-Boltzmann constant, W/(m^2 K^4)
SIGMA = 5.67e-8

KELVIN = 273.15


def c_to_k(t_c: float) -> float:
    return t_c + KELVIN


def k_to_c(t_k: float) -> float:
    return t_k - KELVIN


@dataclass(frozen=True)
class CopCurve:
    """Piecewise-linear COP as a function of the temperature lift.

    ``breakpoints`` maps the positive temperature difference between the warm
    and the cold reservoir (K) to a COP value.  Evaluation interpolates
    linearly between breakpoints and extrapolates flat beyond either end, so
    a single breakpoint describes a constant-COP machine (e.g. a PTC element
    with COP 1).
    """

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.breakpoints) < 1:
            raise ConfigError("COP curve needs at least one breakpoint")
        deltas = [b[0] for b in self.breakpoints]
        if any(b <= a for a, b in zip(deltas, deltas[1:])):
            raise ConfigError("COP curve breakpoints must be strictly increasing in delta_T")
        if any(b[1] <= 0 for b in self.breakpoints):
            raise ConfigError("COP values must be positive")

    def __call__(self, delta_t: float) -> float:
        pts = self.breakpoints
        if delta_t <= pts[0][0]:
            return pts[0][1]
        if delta_t >= pts[-1][0]:
            return pts[-1][1]
        for (d0, c0), (d1, c1) in zip(pts, pts[1:]):
            if delta_t <= d1:
                w = (delta_t - d0) / (d1 - d0)
                return c0 + w * (c1 - c0)
        return pts[-1][1]  # unreachable

    def scaled(self, factor: float) -> "CopCurve":
        """Curve with every COP value multiplied by ``factor``."""
        return CopCurve(tuple((d, c * factor) for d, c in self.breakpoints))

    @staticmethod
    def constant(cop: float) -> "CopCurve":
        return CopCurve(((0.0, cop),))


def _check_fraction(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must be in [0, 1], got {value}")


def _check_positive(name: str, value: float) -> None:
    if not value > 0.0:
        raise ConfigError(f"{name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class BusConfig:
    """Geometry, material and HVAC parameters of one vehicle concept.

    Defaults describe an articulated trolleybus with a heat-pump HVAC unit
    and no radiant heaters.  The convection coefficients ``h_in``, ``h_out``,
    ``h_rh`` and the shell conductance ``k_body`` are reconstructed defaults
    (engineering estimates), not measured values; they are all configurable.
    """

    # door geometry and the Bernoulli door-flow constants
    h_door: float = 1.95          # m
    w_door_tot: float = 4.4       # m
    C_d: float = 0.6              # discharge coefficient
    rho_inf: float = 1.25         # kg/m^3
    c_p_a: float = 1005.0         # J/(kg K)
    g: float = 9.81               # m/s^2

    # surfaces
    A_roof: float = 48.6          # m^2
    A_wall: float = 102.0         # m^2
    A_body: float = 150.6         # m^2, outer radiating shell area
    A_rh: float = 0.0             # m^2, total radiant-heater panel area

    # optical properties
    alpha_paint: float = 0.3
    tau_win: float = 0.8
    zeta_roof: float = 0.7        # roof fraction shaded by rooftop components
    zeta_win: float = 0.35        # window fraction of the walls
    zeta_cab: float = 0.5         # transmitted solar share absorbed by cabin air

    sigma: float = SIGMA

    # reconstructed convection/conduction chain
    k_body: float = 450.0         # W/K, total shell conductance
    h_in: float = 7.0             # W/(m^2 K)
    h_out: float = 20.0           # W/(m^2 K)
    h_rh: float = 3.0             # W/(m^2 K)

    q_met_per_pass: float = 125.6  # W per passenger (1.2 met, 1.8 m^2 body)

    # radiant heaters
    T_rh_tgt: float = c_to_k(90.0)  # K
    rh_enabled: bool = False

    cop_heating: CopCurve = field(
        default_factory=lambda: CopCurve(((10.0, 3.0), (20.0, 2.5), (30.0, 2.0), (40.0, 1.6)))
    )
    cop_cooling: CopCurve = field(
        default_factory=lambda: CopCurve(((5.0, 3.0), (10.0, 2.6), (15.0, 2.2), (20.0, 1.9)))
    )

    def __post_init__(self):
        for name in ("h_door", "w_door_tot", "C_d", "rho_inf", "c_p_a", "g",
                     "A_roof", "A_wall", "A_body", "k_body", "h_in", "h_out",
                     "h_rh", "q_met_per_pass", "T_rh_tgt", "sigma"):
            _check_positive(name, getattr(self, name))
        if self.A_rh < 0:
            raise ConfigError(f"A_rh must be non-negative, got {self.A_rh}")
        for name in ("alpha_paint", "tau_win", "zeta_roof", "zeta_win", "zeta_cab"):
            _check_fraction(name, getattr(self, name))
        if self.A_body < self.A_wall:
            raise ConfigError("A_body must be at least A_wall (outer shell includes the walls)")
        if any(c < 1.0 for _, c in self.cop_heating.breakpoints):
            raise ConfigError("heating COP values must be >= 1")

    def with_changes(self, **kwargs) -> "BusConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class Scenario:
    """One hour of operation: ambient conditions plus ridership."""

    T_inf: float                  # K
    I_dni: float                  # W/m^2, direct normal irradiance
    I_dhi: float                  # W/m^2, diffuse horizontal irradiance
    beta: float                   # rad, solar altitude
    N_pass: int
    zeta_door: float              # door-open time fraction
    zeta_sh: float                # shade time fraction
    month: int                    # 1..12
    id: str = ""

    def __post_init__(self):
        if not self.T_inf > 0:
            raise ConfigError(f"T_inf must be positive kelvin, got {self.T_inf}")
        if self.I_dni < 0 or self.I_dhi < 0:
            raise ConfigError("irradiances must be non-negative")
        if not -math.pi / 2 <= self.beta <= math.pi / 2:
            raise ConfigError(f"beta must be in [-pi/2, pi/2], got {self.beta}")
        if self.beta <= 0 and (self.I_dni > 0 or self.I_dhi > 0):
            raise ConfigError("irradiances must be zero when the sun is below the horizon")
        if self.N_pass < 0:
            raise ConfigError("N_pass must be non-negative")
        _check_fraction("zeta_door", self.zeta_door)
        _check_fraction("zeta_sh", self.zeta_sh)
        if not 1 <= self.month <= 12:
            raise ConfigError(f"month must be 1..12, got {self.month}")


@dataclass(frozen=True)
class ThermalState:
    """The unknowns of the steady-state balance plus the HVAC actuation."""

    T_cab: float                  # K, cabin air
    T_rh: float                   # K, radiant-heater panel
    T_si: float                   # K, inner shell
    T_so: float                   # K, outer shell
    Q_hvac: float                 # W, signed (heating positive)
    P_rh: float                   # W, electric panel power

    def __post_init__(self):
        if self.P_rh < -1e-9:
            raise ConfigError(f"P_rh must be non-negative, got {self.P_rh}")
        if self.P_rh > 1e-9 and self.T_rh < self.T_cab - 1e-9:
            raise ConfigError("a powered RH panel cannot be colder than the cabin air")


@dataclass(frozen=True)
class HeatFlows:
    """Every heat flow and electric power of one solved operating point (W)."""

    Q_pass: float
    Q_door: float
    Q_sol_cab: float
    Q_sol_si: float
    Q_sol_so: float
    Q_r_so: float
    Q_r_rh: float
    Q_h_rh: float
    Q_h_si: float
    Q_h_so: float
    Q_k: float
    Q_hvac: float
    P_rh: float
    P_hvac: float
    P_tot: float

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


# ---------------------------------------------------------------------------
# individual heat flows
# ---------------------------------------------------------------------------

def passenger_heat(n_pass: int, cfg: BusConfig) -> float:
    """Metabolic heat released to the cabin air by ``n_pass`` passengers (W)."""
    if n_pass < 0:
        raise ConfigError("n_pass must be non-negative")
    return n_pass * cfg.q_met_per_pass


def door_loss(T_cab: float, T_inf: float, zeta_door: float, cfg: BusConfig) -> float:
    """Air-exchange heat loss through open doors (W).

    Buoyancy-driven exchange flow through the door openings; positive when
    the cabin is warmer than the ambient.  The magnitude grows with
    |dT|^(3/2) and is linear in the combined door width and the door-open
    time fraction.
    """
    dt = T_cab - T_inf
    pre = cfg.rho_inf * cfg.c_p_a * cfg.C_d * math.sqrt(cfg.g * cfg.h_door ** 3) / 3.0
    return pre * math.sqrt(abs(dt) / T_inf) * dt * cfg.w_door_tot * zeta_door


def irradiance_roof(beta: float, I_dni: float, I_dhi: float) -> float:
    """Solar irradiance on the horizontal roof (W/m^2)."""
    return max(math.sin(beta) * I_dni + I_dhi, 0.0)


def irradiance_wall_directional(beta: float, phi: float, psi: float,
                                I_dni: float, I_dhi: float) -> float:
    """Irradiance on a vertical wall with surface azimuth ``psi`` (W/m^2).

    ``phi`` is the solar azimuth; the diffuse sky contributes half of the
    horizontal diffuse irradiance to a vertical surface.
    """
    return math.cos(beta) * max(math.cos(phi - psi), 0.0) * I_dni + 0.5 * I_dhi


def irradiance_wall_mean(beta: float, I_dni: float, I_dhi: float) -> float:
    """Wall irradiance averaged over all driving directions (W/m^2)."""
    return math.cos(beta) / math.pi * I_dni + 0.5 * I_dhi


def solar_heat_flows(scn: Scenario, cfg: BusConfig) -> tuple[float, float, float]:
    """Solar heat absorbed by outer shell, cabin air, and inner shell (W).

    Returns ``(Q_sol_so, Q_sol_cab, Q_sol_si)``.  The window-transmitted
    power is split ``zeta_cab : (1 - zeta_cab)`` between cabin air and inner
    shell.  All three are zero at night (``beta <= 0``) or in full shade.
    """
    if scn.beta <= 0.0:
        return 0.0, 0.0, 0.0
    sun = 1.0 - scn.zeta_sh
    i_roof = irradiance_roof(scn.beta, scn.I_dni, scn.I_dhi)
    i_wall = irradiance_wall_mean(scn.beta, scn.I_dni, scn.I_dhi)
    q_so = sun * (cfg.A_roof * i_roof * cfg.alpha_paint * (1.0 - cfg.zeta_roof)
                  + cfg.A_wall * i_wall * (1.0 - cfg.zeta_win) * cfg.alpha_paint)
    q_trans = sun * cfg.A_wall * i_wall * cfg.zeta_win * cfg.tau_win
    return q_so, q_trans * cfg.zeta_cab, q_trans * (1.0 - cfg.zeta_cab)


def radiative_loss_outer(T_so: float, T_inf: float, cfg: BusConfig) -> float:
    """Net long-wave radiation from the outer shell to the surroundings (W)."""
    return cfg.sigma * cfg.A_body * (T_so ** 4 - T_inf ** 4)


def radiative_rh_to_shell(T_rh: float, T_si: float, cfg: BusConfig) -> float:
    """Net radiation from the RH panels to the inner shell (W).

    Coplanar ceiling panels have zero mutual view factor, so everything a
    panel emits lands on the inner shell.
    """
    return cfg.sigma * cfg.A_rh * (T_rh ** 4 - T_si ** 4)


def convective_rh_to_cabin(T_rh: float, T_cab: float, cfg: BusConfig) -> float:
    """Convective heat from the RH panels to the cabin air (W)."""
    return cfg.h_rh * cfg.A_rh * (T_rh - T_cab)


def convective_cabin_to_shell(T_cab: float, T_si: float, cfg: BusConfig) -> float:
    """Convective heat from the cabin air to the inner shell (W)."""
    return cfg.h_in * (cfg.A_roof + cfg.A_wall) * (T_cab - T_si)


def conduction_shell(T_si: float, T_so: float, cfg: BusConfig) -> float:
    """Conduction through the shell, inner to outer (W)."""
    return cfg.k_body * (T_si - T_so)


def convective_shell_to_ambient(T_so: float, T_inf: float, cfg: BusConfig) -> float:
    """Convective heat from the outer shell to the ambient air (W)."""
    return cfg.h_out * cfg.A_body * (T_so - T_inf)


def hvac_power(Q_hvac: float, T_cab: float, T_inf: float, cfg: BusConfig) -> float:
    """Electric power drawn by the vapor-compression HVAC unit (W).

    The COP is evaluated at the positive temperature lift of the active
    mode: ``T_cab - T_inf`` when heating, ``T_inf - T_cab`` when cooling.
    """
    if Q_hvac == 0.0:
        return 0.0
    if Q_hvac > 0.0:
        gamma = cfg.cop_heating(T_cab - T_inf)
    else:
        gamma = cfg.cop_cooling(T_inf - T_cab)
    return abs(Q_hvac) / gamma


def hvac_power_split(Q_hp: float, Q_ac: float, T_cab: float, T_inf: float,
                     cfg: BusConfig) -> float:
    """Electric power for separately metered heating and cooling heat (W).

    Absolute-value-free reformulation used by the optimizer: ``Q_hp`` and
    ``Q_ac`` are both non-negative and the net HVAC heat is their
    difference.  Agrees with :func:`hvac_power` whenever one of them is
    zero; simultaneous operation is never cheaper.
    """
    if Q_hp < 0 or Q_ac < 0:
        raise ConfigError("Q_hp and Q_ac must be non-negative")
    p = 0.0
    if Q_hp > 0:
        p += Q_hp / cfg.cop_heating(T_cab - T_inf)
    if Q_ac > 0:
        p += Q_ac / cfg.cop_cooling(T_inf - T_cab)
    return p


# ---------------------------------------------------------------------------
# balance
# ---------------------------------------------------------------------------

def compute_heat_flows(state: ThermalState, scn: Scenario, cfg: BusConfig,
                       rh_on: bool) -> HeatFlows:
    """Evaluate every heat flow of ``state`` under scenario ``scn``."""
    q_sol_so, q_sol_cab, q_sol_si = solar_heat_flows(scn, cfg)
    if rh_on:
        q_r_rh = radiative_rh_to_shell(state.T_rh, state.T_si, cfg)
        q_h_rh = convective_rh_to_cabin(state.T_rh, state.T_cab, cfg)
        p_rh = state.P_rh
    else:
        q_r_rh = q_h_rh = p_rh = 0.0
    p_hvac = hvac_power(state.Q_hvac, state.T_cab, scn.T_inf, cfg)
    return HeatFlows(
        Q_pass=passenger_heat(scn.N_pass, cfg),
        Q_door=door_loss(state.T_cab, scn.T_inf, scn.zeta_door, cfg),
        Q_sol_cab=q_sol_cab,
        Q_sol_si=q_sol_si,
        Q_sol_so=q_sol_so,
        Q_r_so=radiative_loss_outer(state.T_so, scn.T_inf, cfg),
        Q_r_rh=q_r_rh,
        Q_h_rh=q_h_rh,
        Q_h_si=convective_cabin_to_shell(state.T_cab, state.T_si, cfg),
        Q_h_so=convective_shell_to_ambient(state.T_so, scn.T_inf, cfg),
        Q_k=conduction_shell(state.T_si, state.T_so, cfg),
        Q_hvac=state.Q_hvac,
        P_rh=p_rh,
        P_hvac=p_hvac,
        P_tot=p_rh + p_hvac,
    )


def residuals_from_flows(f: HeatFlows, rh_on: bool) -> np.ndarray:
    """Reservoir balance residuals (W) from precomputed flows.

    Rows: cabin air, RH panel (only when ``rh_on``), inner shell, outer
    shell.  A residual of zero means the reservoir is in steady state.
    """
    for name, val in f.as_dict().items():
        if not math.isfinite(val):
            raise EvaluationError(f"non-finite heat flow {name} = {val}")
    cab = f.Q_pass + f.Q_h_rh - f.Q_h_si - f.Q_door + f.Q_sol_cab + f.Q_hvac
    si = f.Q_r_rh + f.Q_h_si + f.Q_sol_si - f.Q_k
    so = f.Q_k - f.Q_h_so - f.Q_r_so + f.Q_sol_so
    if rh_on:
        rh = f.P_rh - f.Q_r_rh - f.Q_h_rh
        return np.array([cab, rh, si, so])
    return np.array([cab, si, so])


def balance_residuals(state: ThermalState, scn: Scenario, cfg: BusConfig,
                      rh_on: bool) -> np.ndarray:
    """Energy-conservation residuals of the reservoirs (W).

    Four rows with radiant heaters active, three without (the RH row is
    removed and the RH flows are zero).
    """
    return residuals_from_flows(compute_heat_flows(state, scn, cfg, rh_on), rh_on)


def max_abs_flow(f: HeatFlows) -> float:
    """Largest heat-flow magnitude, used to scale residual tolerances."""
    return max(abs(v) for v in f.as_dict().values())
