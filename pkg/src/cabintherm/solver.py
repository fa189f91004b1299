"""Minimum-power solves of the cabin heat balance under comfort constraints.

Two independent routes produce the same operating points:

* **root finding** -- the causality-inverted approach: prescribe the mean
  PMV, append it as an equation to the reservoir balance, and solve the
  square nonlinear system with a damped Newton iteration.  For a PMV
  *window*, the passive system (zero HVAC heat) is solved first; only if
  its comfort is outside the window is the system re-solved with the PMV
  pinned to the violated limit.
* **optimization** -- a constrained nonlinear program over separately
  metered heating/cooling heat and panel power, with the balance as
  equality constraints and the PMV window as inequalities on a polynomial
  PMV surrogate.  The surrogate bound is nudged until the *exact* PMV of
  the solution meets the requested window, so reported comfort is always
  exact.

Radiant heaters are handled by solving once with the panels held at their
target temperature and once with them removed, keeping whichever needs
less total electric power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .comfort import (ComfortSpec, clothing_insulation, get_pmv_surrogate,
                      mean_pmv, pmv_array, ppd as ppd_of)
from .errors import ConfigError, SolverError
from .model_core import (BusConfig, HeatFlows, KELVIN, Scenario, ThermalState,
                         compute_heat_flows, passenger_heat,
                         residuals_from_flows, solar_heat_flows)
from .radiant_geometry import (CabinLayout, ceiling_panel_strip,
                               panel_view_weights, place_passengers)
from .scenario import placement_seed

MAX_NEWTON_ITER = 100
MAX_RESTARTS = 5
LINESEARCH_FACTOR = 0.5
LINESEARCH_MIN = 1e-4
BALANCE_RTOL = 1e-6     # per watt of the largest flow
PSI_ROW_TOL = 1e-8      # PMV units
PIN_ROW_TOL = 1e-8      # K
PSI_FD_STEP = 1e-3      # K, finite-difference step for the PMV row gradient
T_BOX = (210.0, 400.0)  # K, Newton iterate clamp

MODE_HEATING = "heating"
MODE_COOLING = "cooling"
MODE_PASSIVE = "passive"


@dataclass(frozen=True)
class SolveResult:
    """One solved operating point with its full heat-flow breakdown."""

    scenario_id: str
    state: ThermalState
    flows: HeatFlows
    per_passenger_pmv: tuple[float, ...]
    mean_psi: float            # clamped to [-3, 3]; NaN for an empty bus
    ppd: float                 # %, NaN for an empty bus
    P_tot: float               # W
    mode: str                  # heating | cooling | passive
    rh_used: bool
    solver: str                # rootfind | optimization
    iterations: int


def balance_tolerance_report(result: "SolveResult", scn: Scenario,
                             cfg: BusConfig) -> tuple[float, float, bool]:
    """Re-check the reservoir balance of a returned state.

    Returns (worst residual W, tolerance W, within-tolerance flag); the
    tolerance is relative to the largest flow of the operating point.
    """
    from .model_core import balance_residuals, max_abs_flow
    res = balance_residuals(result.state, scn, cfg, result.rh_used)
    tol = BALANCE_RTOL * max(1.0, max_abs_flow(result.flows))
    worst = float(np.max(np.abs(res)))
    return worst, tol, worst <= tol


def default_layout(cfg: BusConfig, length: float = 18.0, width: float = 2.4,
                   height: float = 2.3) -> CabinLayout:
    """Cabin layout matching ``cfg``: a centered ceiling strip of panels
    whose total area equals ``cfg.A_rh`` (no panels when it is zero)."""
    panels = ceiling_panel_strip(length, width, height, cfg.A_rh) if cfg.A_rh > 0 else ()
    return CabinLayout(length, width, height, panels)


class ViewWeightsCache:
    """Memoizes per-passenger panel view weights across solves.

    Placement and view factors depend only on (scenario id, passenger
    count, seed, panel geometry), so one entry serves every window and
    every concept that shares the layout.
    """

    def __init__(self):
        self._store: dict[tuple, np.ndarray] = {}

    def get(self, scn: Scenario, layout: CabinLayout, seed: int) -> np.ndarray:
        key = (scn.id, scn.N_pass, seed,
               tuple((p.origin, p.edge1, p.edge2) for p in layout.rh_panels))
        w = self._store.get(key)
        if w is None:
            passengers = place_passengers(scn.N_pass, seed, layout)
            w = panel_view_weights(passengers, layout)
            self._store[key] = w
        return w


# ---------------------------------------------------------------------------
# per-scenario model with precomputed disturbances
# ---------------------------------------------------------------------------

class _BranchModel:
    """Heat balance of one scenario with the RH branch fixed on or off.

    Precomputes everything that does not depend on the unknowns: solar
    gains, passenger heat, clothing insulation, door-flow prefactor, and
    per-passenger panel view weights.
    """

    def __init__(self, scn: Scenario, cfg: BusConfig, spec: ComfortSpec,
                 rh_on: bool, layout: CabinLayout | None = None,
                 seed: int = 0, weights_cache: ViewWeightsCache | None = None):
        self.scn = scn
        self.cfg = cfg
        self.spec = spec
        self.rh_on = rh_on and cfg.A_rh > 0
        self.q_sol_so, self.q_sol_cab, self.q_sol_si = solar_heat_flows(scn, cfg)
        self.q_pass = passenger_heat(scn.N_pass, cfg)
        self.r_clo = clothing_insulation(scn.T_inf, scale=getattr(spec, "clo_scale", 1.0))
        self.a_in = cfg.h_in * (cfg.A_roof + cfg.A_wall)
        self.door_pre = (cfg.rho_inf * cfg.c_p_a * cfg.C_d
                         * math.sqrt(cfg.g * cfg.h_door ** 3) / 3.0
                         * cfg.w_door_tot * scn.zeta_door)
        self.inv_sqrt_tinf = 1.0 / math.sqrt(scn.T_inf)
        if self.rh_on and scn.N_pass > 0:
            layout = layout if layout is not None else default_layout(cfg)
            if abs(layout.panel_area - cfg.A_rh) > 1e-6:
                raise ConfigError(
                    f"layout panel area {layout.panel_area:.6f} m^2 does not match "
                    f"A_rh = {cfg.A_rh:.6f} m^2")
            pseed = placement_seed(scn.id, seed)
            if weights_cache is not None:
                self.b_weights = weights_cache.get(scn, layout, pseed)
            else:
                passengers = place_passengers(scn.N_pass, pseed, layout)
                self.b_weights = panel_view_weights(passengers, layout)
        else:
            self.b_weights = np.zeros(scn.N_pass)
        # without panel view weights every passenger sees the same T_mr,
        # so the mean PMV needs a single evaluation
        self.uniform_tmr = scn.N_pass == 0 or not np.any(self.b_weights > 0.0)
        self._passive: tuple[ThermalState, int] | None = None
        self._passive_psi: float | None = None
        self._last_pinned: np.ndarray | None = None

    # -- heat flow pieces ---------------------------------------------------

    def _door(self, t_cab: float) -> float:
        dt = t_cab - self.scn.T_inf
        return self.door_pre * math.sqrt(abs(dt)) * self.inv_sqrt_tinf * dt

    def _door_deriv(self, t_cab: float) -> float:
        dt = t_cab - self.scn.T_inf
        return 1.5 * self.door_pre * math.sqrt(abs(dt)) * self.inv_sqrt_tinf

    # -- exact comfort ------------------------------------------------------

    def mean_psi_batch(self, t_cab, t_si, t_rh) -> np.ndarray:
        """Unclamped mean PMV for batched states (arrays of equal length)."""
        t_cab = np.atleast_1d(np.asarray(t_cab, float))
        t_si = np.atleast_1d(np.asarray(t_si, float))
        t_rh = np.atleast_1d(np.asarray(t_rh, float))
        if self.uniform_tmr:
            return pmv_array(t_cab - KELVIN, t_si - KELVIN, self.r_clo,
                             self.spec.v_cab, self.spec.phi_cab * 100.0,
                             self.spec.met)
        b = self.b_weights[None, :]
        tmr4 = (1.0 - b) * t_si[:, None] ** 4 + b * t_rh[:, None] ** 4
        tmr_c = tmr4 ** 0.25 - KELVIN
        vals = pmv_array(t_cab[:, None] - KELVIN, tmr_c, self.r_clo,
                         self.spec.v_cab, self.spec.phi_cab * 100.0, self.spec.met)
        return vals.mean(axis=1)

    def mean_psi(self, t_cab: float, t_si: float, t_rh: float) -> float:
        return float(self.mean_psi_batch([t_cab], [t_si], [t_rh])[0])

    def psi_gradient(self, t_cab: float, t_si: float, t_rh: float,
                     base: float) -> np.ndarray:
        """d(mean PMV)/d(T_cab, T_si, T_rh) by vectorized forward differences
        around an already-known base value."""
        h = PSI_FD_STEP
        if self.rh_on:
            vals = self.mean_psi_batch([t_cab + h, t_cab, t_cab],
                                       [t_si, t_si + h, t_si],
                                       [t_rh, t_rh, t_rh + h])
        else:
            vals = self.mean_psi_batch([t_cab + h, t_cab],
                                       [t_si, t_si + h],
                                       [t_rh, t_rh])
            vals = np.array([vals[0], vals[1], base])
        return (vals - base) / h

    def per_passenger_pmv(self, state: ThermalState) -> np.ndarray:
        """Exact per-passenger PMV, clamped to the reporting range."""
        if self.scn.N_pass == 0:
            return np.zeros(0)
        if self.uniform_tmr:
            val = float(pmv_array(state.T_cab - KELVIN, state.T_si - KELVIN,
                                  self.r_clo, self.spec.v_cab,
                                  self.spec.phi_cab * 100.0, self.spec.met))
            return np.full(self.scn.N_pass, min(3.0, max(-3.0, val)))
        b = self.b_weights
        tmr4 = (1.0 - b) * state.T_si ** 4 + b * state.T_rh ** 4
        vals = pmv_array(state.T_cab - KELVIN, tmr4 ** 0.25 - KELVIN, self.r_clo,
                         self.spec.v_cab, self.spec.phi_cab * 100.0, self.spec.met)
        return np.clip(vals, -3.0, 3.0)

    # -- residual system ----------------------------------------------------
    # unknown order: rh on  -> [T_cab, T_rh, T_si, T_so, Q_hvac, P_rh]
    #                rh off -> [T_cab, T_si, T_so, Q_hvac]

    def n_unknowns(self) -> int:
        return 6 if self.rh_on else 4

    def _unpack_temps(self, x: np.ndarray) -> tuple[float, float, float]:
        """(T_cab, T_si, T_rh) regardless of branch layout."""
        if self.rh_on:
            return x[0], x[2], x[1]
        return x[0], x[1], x[1]

    def residual(self, x: np.ndarray, psi_tgt: float | None,
                 psi_val: float | None = None) -> tuple[np.ndarray, float]:
        """Residual rows and the flow magnitude used for relative tolerance.

        ``psi_val`` lets callers reuse an already computed exact mean PMV;
        absent, it is evaluated here.
        """
        cfg = self.cfg
        scn = self.scn
        if self.rh_on:
            t_cab, t_rh, t_si, t_so, q_hvac, p_rh = x
        else:
            t_cab, t_si, t_so, q_hvac = x
            t_rh, p_rh = t_cab, 0.0
        q_door = self._door(t_cab)
        q_h_si = self.a_in * (t_cab - t_si)
        q_k = cfg.k_body * (t_si - t_so)
        q_h_so = cfg.h_out * cfg.A_body * (t_so - scn.T_inf)
        q_r_so = cfg.sigma * cfg.A_body * (t_so ** 4 - scn.T_inf ** 4)
        if self.rh_on:
            q_r_rh = cfg.sigma * cfg.A_rh * (t_rh ** 4 - t_si ** 4)
            q_h_rh = cfg.h_rh * cfg.A_rh * (t_rh - t_cab)
        else:
            q_r_rh = q_h_rh = 0.0

        rows = [self.q_pass + q_h_rh - q_h_si - q_door + self.q_sol_cab + q_hvac]
        if self.rh_on:
            rows.append(p_rh - q_r_rh - q_h_rh)
        rows.append(q_r_rh + q_h_si + self.q_sol_si - q_k)
        rows.append(q_k - q_h_so - q_r_so + self.q_sol_so)
        if self.rh_on:
            rows.append(t_rh - cfg.T_rh_tgt)
        if psi_tgt is not None:
            if psi_val is None:
                t_rh_eff = t_rh if self.rh_on else t_si
                psi_val = self.mean_psi(t_cab, t_si, t_rh_eff)
            rows.append(psi_val - psi_tgt)
        scale = max(1.0, abs(self.q_pass), abs(q_door), abs(q_h_si), abs(q_k),
                    abs(q_h_so), abs(q_r_so), abs(q_r_rh), abs(q_h_rh),
                    abs(q_hvac), abs(p_rh), self.q_sol_so)
        return np.array(rows), scale

    def jacobian(self, x: np.ndarray, psi_tgt: float | None,
                 psi_grad: np.ndarray | None) -> np.ndarray:
        cfg = self.cfg
        scn = self.scn
        if self.rh_on:
            t_cab, t_rh, t_si, t_so = x[0], x[1], x[2], x[3]
        else:
            t_cab, t_si, t_so = x[0], x[1], x[2]
            t_rh = t_cab
        d_door = self._door_deriv(t_cab)
        a_in = self.a_in
        k = cfg.k_body
        h_so = cfg.h_out * cfg.A_body
        r_so = 4.0 * cfg.sigma * cfg.A_body * t_so ** 3
        if self.rh_on:
            hr = cfg.h_rh * cfg.A_rh
            rr_rh = 4.0 * cfg.sigma * cfg.A_rh * t_rh ** 3
            rr_si = 4.0 * cfg.sigma * cfg.A_rh * t_si ** 3
            n = 6 if psi_tgt is not None else 5
            jac = np.zeros((n, 6))
            # cabin air: q_pass + q_h_rh - q_h_si - q_door + q_sol_cab + q_hvac
            jac[0] = [-hr - a_in - d_door, hr, a_in, 0.0, 1.0, 0.0]
            # panel: p_rh - q_r_rh - q_h_rh
            jac[1] = [hr, -rr_rh - hr, rr_si, 0.0, 0.0, 1.0]
            # inner shell: q_r_rh + q_h_si + q_sol_si - q_k
            jac[2] = [a_in, rr_rh, -rr_si - a_in - k, k, 0.0, 0.0]
            # outer shell: q_k - q_h_so - q_r_so + q_sol_so
            jac[3] = [0.0, 0.0, k, -k - h_so - r_so, 0.0, 0.0]
            # panel temperature pin
            jac[4] = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0]
            if psi_tgt is not None:
                jac[5] = [psi_grad[0], psi_grad[2], psi_grad[1], 0.0, 0.0, 0.0]
            return jac
        n = 4 if psi_tgt is not None else 3
        jac = np.zeros((n, 4))
        jac[0] = [-a_in - d_door, a_in, 0.0, 1.0]
        jac[1] = [a_in, -a_in - k, k, 0.0]
        jac[2] = [0.0, k, -k - h_so - r_so, 0.0]
        if psi_tgt is not None:
            # no panels: T_mr tracks the inner shell only
            jac[3] = [psi_grad[0], psi_grad[1], 0.0, 0.0]
        return jac

    def row_weights(self, psi_tgt: float | None) -> np.ndarray:
        w = [1e-3]                       # balance rows counted in kW
        if self.rh_on:
            w.append(1e-3)
        w += [1e-3, 1e-3]
        if self.rh_on:
            w.append(1.0)                # pin row in K
        if psi_tgt is not None:
            w.append(10.0)               # 0.1 PMV weighs like 1 kW
        return np.array(w)

    def converged(self, r: np.ndarray, scale: float, psi_tgt: float | None) -> bool:
        nb = 4 if self.rh_on else 3
        if np.max(np.abs(r[:nb])) > BALANCE_RTOL * scale:
            return False
        idx = nb
        if self.rh_on:
            if abs(r[idx]) > PIN_ROW_TOL:
                return False
            idx += 1
        if psi_tgt is not None and abs(r[idx]) > PSI_ROW_TOL:
            return False
        return True

    def init_vector(self, psi_tgt: float | None) -> np.ndarray:
        t_inf = self.scn.T_inf
        t_cab = min(max(t_inf, 285.0), 299.0)
        if self.rh_on:
            return np.array([t_cab, self.cfg.T_rh_tgt, t_inf, t_inf, 0.0, 0.0])
        return np.array([t_cab, t_inf, t_inf, 0.0])

    def state_from(self, x: np.ndarray, frozen_q: float | None = None) -> ThermalState:
        if self.rh_on:
            t_cab, t_rh, t_si, t_so, q_hvac, p_rh = x
        else:
            t_cab, t_si, t_so, q_hvac = x
            t_rh, p_rh = x[0], 0.0
        if frozen_q is not None:
            q_hvac = frozen_q
        if abs(q_hvac) < 1e-9:
            q_hvac = 0.0
        return ThermalState(T_cab=float(t_cab), T_rh=float(t_rh), T_si=float(t_si),
                            T_so=float(t_so), Q_hvac=float(q_hvac),
                            P_rh=float(max(p_rh, 0.0)))

    # -- damped Newton ------------------------------------------------------

    def newton(self, x0: np.ndarray, psi_tgt: float | None,
               frozen_q: float | None = None) -> tuple[np.ndarray, int]:
        """Damped Newton on the square system.

        ``frozen_q`` removes Q_hvac from the unknowns and holds it at the
        given value (passive solves use 0).  Backtracking line search on the
        weighted residual norm; up to 5 restarts from perturbed starting
        points on stagnation.
        """
        nfull = self.n_unknowns()
        q_idx = 4 if self.rh_on else 3
        cols = [i for i in range(nfull) if frozen_q is None or i != q_idx]
        n_temps = 4 if self.rh_on else 3
        weights = self.row_weights(psi_tgt)
        use_psi = psi_tgt is not None
        total_iters = 0
        last_r = None
        last_x = None

        def evaluate(xv):
            if use_psi:
                psi = self.mean_psi(*self._unpack_temps(xv))
                rv, sv = self.residual(xv, psi_tgt, psi)
                return rv, sv, psi
            rv, sv = self.residual(xv, None)
            return rv, sv, None

        for attempt in range(MAX_RESTARTS + 1):
            x = x0.copy()
            if frozen_q is not None:
                x[q_idx] = frozen_q
            if attempt > 0:
                rng = np.random.default_rng(1000 + attempt)
                x[:n_temps] += rng.uniform(-5.0, 5.0, n_temps)
            psi_grad = None
            r, scale, psi_val = evaluate(x)
            norm = float(np.linalg.norm(r * weights))
            for it in range(MAX_NEWTON_ITER):
                if self.converged(r, scale, psi_tgt):
                    return x, total_iters
                total_iters += 1
                if use_psi and (psi_grad is None or it % 4 == 0):
                    psi_grad = self.psi_gradient(*self._unpack_temps(x), psi_val)
                jac = self.jacobian(x, psi_tgt, psi_grad)[:, cols]
                try:
                    dx = np.linalg.solve(jac, -r)
                except np.linalg.LinAlgError:
                    break
                step = 1.0
                improved = False
                while step >= LINESEARCH_MIN:
                    x_new = x.copy()
                    for ci, col in enumerate(cols):
                        x_new[col] += step * dx[ci]
                    np.clip(x_new[:n_temps], T_BOX[0], T_BOX[1], out=x_new[:n_temps])
                    r_new, scale_new, psi_new = evaluate(x_new)
                    norm_new = float(np.linalg.norm(r_new * weights))
                    if norm_new < norm or not math.isfinite(norm):
                        x, r, scale, norm, psi_val = x_new, r_new, scale_new, norm_new, psi_new
                        improved = True
                        break
                    step *= LINESEARCH_FACTOR
                if not improved:
                    break
            last_r, last_x = r, x
            if self.converged(r, scale, psi_tgt):
                return x, total_iters
        raise SolverError(
            f"Newton did not converge for scenario {self.scn.id!r} "
            f"(rh_on={self.rh_on}, psi_tgt={psi_tgt})",
            last_x=last_x, last_residuals=last_r)

    # -- branch-level solves ------------------------------------------------

    def passive(self) -> tuple[ThermalState, int]:
        """Zero-HVAC-heat solution (panels, when on, still at target)."""
        if self._passive is None:
            x, iters = self.newton(self.init_vector(None), None, frozen_q=0.0)
            self._passive = (self.state_from(x, frozen_q=0.0), iters)
        return self._passive

    def passive_psi(self) -> float:
        if self._passive_psi is None:
            st, _ = self.passive()
            t_rh = st.T_rh if self.rh_on else st.T_si
            self._passive_psi = self.mean_psi(st.T_cab, st.T_si, t_rh)
        return self._passive_psi

    def pinned(self, psi_tgt: float) -> tuple[ThermalState, int]:
        """Solve with the mean PMV pinned to ``psi_tgt``."""
        x0 = self._last_pinned if self._last_pinned is not None else self.init_vector(psi_tgt)
        try:
            x, iters = self.newton(x0.copy(), psi_tgt)
        except SolverError:
            x, iters = self.newton(self.init_vector(psi_tgt), psi_tgt)
        self._last_pinned = x
        return self.state_from(x), iters

    def balance_with_q(self, q_hvac: float, x0: np.ndarray | None = None) -> tuple[ThermalState, int]:
        """Solve temperatures (and panel power) for a prescribed HVAC heat."""
        x0 = x0 if x0 is not None else self.init_vector(None)
        x, iters = self.newton(x0, None, frozen_q=q_hvac)
        return self.state_from(x, frozen_q=q_hvac), iters

    def window(self, psi_min: float, psi_max: float) -> tuple[ThermalState, int]:
        """Passive-first window logic; pin to the violated limit if needed.

        The vote saturates at +/-3, so a window bound at the end of the
        scale never binds: the comparison uses the clamped passive PMV.
        """
        st, iters = self.passive()
        if self.scn.N_pass == 0:
            return st, iters
        psi_pass = min(3.0, max(-3.0, self.passive_psi()))
        if psi_min - 1e-12 <= psi_pass <= psi_max + 1e-12:
            return st, iters
        tgt = psi_min if psi_pass < psi_min else psi_max
        st2, iters2 = self.pinned(tgt)
        return st2, iters + iters2


# ---------------------------------------------------------------------------
# result assembly
# ---------------------------------------------------------------------------

def _finalize(model: _BranchModel, state: ThermalState, solver_name: str,
              iterations: int) -> SolveResult:
    flows = compute_heat_flows(state, model.scn, model.cfg, model.rh_on)
    per_pax = model.per_passenger_pmv(state)
    if per_pax.size:
        psi = float(np.clip(mean_pmv(per_pax), -3.0, 3.0))
        dissat = ppd_of(psi)
    else:
        psi = float("nan")
        dissat = float("nan")
    q = flows.Q_hvac
    if abs(q) <= 1e-9 and flows.P_rh <= 1e-9:
        mode = MODE_PASSIVE
    elif q >= 0.0:
        mode = MODE_HEATING
    else:
        mode = MODE_COOLING
    return SolveResult(
        scenario_id=model.scn.id,
        state=state,
        flows=flows,
        per_passenger_pmv=tuple(float(v) for v in per_pax),
        mean_psi=psi,
        ppd=dissat,
        P_tot=flows.P_tot,
        mode=mode,
        rh_used=model.rh_on,
        solver=solver_name,
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# public solves: root finding
# ---------------------------------------------------------------------------

def solve_fixed_pmv(scn: Scenario, cfg: BusConfig, spec: ComfortSpec,
                    rh_on: bool, layout: CabinLayout | None = None,
                    seed: int = 0) -> SolveResult:
    """Solve the square system with the mean PMV pinned to ``spec.psi_tgt``.

    Six unknowns and equations with radiant heaters on, four without.  An
    empty bus has no comfort constraint and falls back to the passive
    solution.
    """
    if spec.psi_tgt is None:
        raise ConfigError("solve_fixed_pmv requires spec.psi_tgt")
    model = _BranchModel(scn, cfg, spec, rh_on, layout, seed)
    if scn.N_pass == 0:
        state, iters = model.passive()
        return _finalize(model, state, "rootfind", iters)
    state, iters = model.pinned(spec.psi_tgt)
    return _finalize(model, state, "rootfind", iters)


def solve_window_rootfind(scn: Scenario, cfg: BusConfig, spec: ComfortSpec,
                          rh_on: bool, layout: CabinLayout | None = None,
                          seed: int = 0) -> SolveResult:
    """Minimum-power solve for the PMV window via the passive-first logic."""
    model = _BranchModel(scn, cfg, spec, rh_on, layout, seed)
    state, iters = model.window(spec.psi_min, spec.psi_max)
    return _finalize(model, state, "rootfind", iters)


# ---------------------------------------------------------------------------
# public solves: optimization
# ---------------------------------------------------------------------------

_OPT_REFINE_MAX = 10
_OPT_PSI_TOL = 1e-7


def _opt_solve_branch(model: _BranchModel, psi_min: float | None,
                      psi_max: float | None) -> tuple[ThermalState, int]:
    """SLSQP minimization of electric power for one RH branch.

    Decision vector (scaled): temperatures in K, heat/power in kW.  The PMV
    window constrains the polynomial surrogate; an outer loop shifts the
    surrogate bounds until the exact PMV of the polished solution is within
    ``_OPT_PSI_TOL`` of the requested window.
    """
    cfg = model.cfg
    scn = model.scn
    spec = model.spec
    rh_on = model.rh_on
    surr = get_pmv_surrogate(spec)
    b = model.b_weights
    use_psi = psi_min is not None and scn.N_pass > 0

    if rh_on:
        idx_tc, idx_trh, idx_tsi, idx_tso, idx_hp, idx_ac, idx_prh = range(7)
        nvar = 7
    else:
        idx_tc, idx_tsi, idx_tso, idx_hp, idx_ac = range(5)
        idx_trh = idx_tc
        nvar = 5

    def surrogate_psi(z):
        t_cab, t_si = z[idx_tc], z[idx_tsi]
        if model.uniform_tmr:
            return float(surr.evaluate(t_cab - KELVIN, t_si - KELVIN, model.r_clo))
        t_rh = z[idx_trh] if rh_on else t_si
        tmr4 = (1.0 - b) * t_si ** 4 + b * t_rh ** 4
        tmr_c = tmr4 ** 0.25 - KELVIN
        vals = surr.evaluate(np.full_like(tmr_c, t_cab - KELVIN), tmr_c, model.r_clo)
        return float(np.mean(vals))

    def equalities(z):
        t_cab, t_si, t_so = z[idx_tc], z[idx_tsi], z[idx_tso]
        q_hvac = (z[idx_hp] - z[idx_ac]) * 1000.0
        q_door = model._door(t_cab)
        q_h_si = model.a_in * (t_cab - t_si)
        q_k = cfg.k_body * (t_si - t_so)
        q_h_so = cfg.h_out * cfg.A_body * (t_so - scn.T_inf)
        q_r_so = cfg.sigma * cfg.A_body * (t_so ** 4 - scn.T_inf ** 4)
        if rh_on:
            t_rh = z[idx_trh]
            p_rh = z[idx_prh] * 1000.0
            q_r_rh = cfg.sigma * cfg.A_rh * (t_rh ** 4 - t_si ** 4)
            q_h_rh = cfg.h_rh * cfg.A_rh * (t_rh - t_cab)
            return np.array([
                (model.q_pass + q_h_rh - q_h_si - q_door + model.q_sol_cab + q_hvac) * 1e-3,
                (p_rh - q_r_rh - q_h_rh) * 1e-3,
                (q_r_rh + q_h_si + model.q_sol_si - q_k) * 1e-3,
                (q_k - q_h_so - q_r_so + model.q_sol_so) * 1e-3,
                t_rh - cfg.T_rh_tgt,
            ])
        return np.array([
            (model.q_pass - q_h_si - q_door + model.q_sol_cab + q_hvac) * 1e-3,
            (q_h_si + model.q_sol_si - q_k) * 1e-3,
            (q_k - q_h_so - q_r_so + model.q_sol_so) * 1e-3,
        ])

    def objective(z):
        t_cab = z[idx_tc]
        p = z[idx_hp] / cfg.cop_heating(t_cab - scn.T_inf)
        p += z[idx_ac] / cfg.cop_cooling(scn.T_inf - t_cab)
        if rh_on:
            p += z[idx_prh]
        return p

    t_inf = scn.T_inf
    z0 = np.zeros(nvar)
    z0[idx_tc] = min(max(t_inf, 285.0), 299.0)
    z0[idx_tsi] = t_inf
    z0[idx_tso] = t_inf
    if rh_on:
        z0[idx_trh] = cfg.T_rh_tgt

    bounds = [(T_BOX[0], T_BOX[1])] * (4 if rh_on else 3) + [(0.0, 500.0)] * 2
    if rh_on:
        bounds.append((0.0, 500.0))

    # the vote saturates at +/-3: a window bound on the end of the scale
    # never binds and is dropped from the program
    use_lo = use_psi and psi_min > -3.0 + 1e-12
    use_hi = use_psi and psi_max < 3.0 - 1e-12
    pin_equal = use_lo and use_hi and (psi_max - psi_min) < 1e-12
    lo, hi = psi_min, psi_max
    total_nit = 0
    z_start = z0
    state = None
    iters_polish = 0

    for _ in range(_OPT_REFINE_MAX):
        cons = [{"type": "eq", "fun": equalities}]
        if pin_equal:
            cons.append({"type": "eq", "fun": lambda z, b=lo: surrogate_psi(z) - b})
        else:
            if use_lo:
                cons.append({"type": "ineq",
                             "fun": lambda z, lo_=lo: surrogate_psi(z) - lo_})
            if use_hi:
                cons.append({"type": "ineq",
                             "fun": lambda z, hi_=hi: hi_ - surrogate_psi(z)})
        res = None
        for start in (z_start, z0):
            res = minimize(objective, start, method="SLSQP", bounds=bounds,
                           constraints=cons,
                           options={"maxiter": 300, "ftol": 1e-12})
            viol = float(np.max(np.abs(equalities(res.x))))
            if viol < 1e-6:
                break
        if res is None or float(np.max(np.abs(equalities(res.x)))) > 1e-4:
            raise SolverError(
                f"optimization failed for scenario {scn.id!r} (rh_on={rh_on}): "
                f"{res.message if res is not None else 'no result'}",
                last_x=None if res is None else res.x)
        total_nit += int(res.nit)
        z = res.x.copy()

        # simultaneous heating and cooling is never optimal; cancel overlap
        m = min(z[idx_hp], z[idx_ac])
        if m > 0:
            z[idx_hp] -= m
            z[idx_ac] -= m

        # polish the balance exactly with the decided HVAC heat
        q_hvac = (z[idx_hp] - z[idx_ac]) * 1000.0
        x0 = model.init_vector(None)
        x0[0] = z[idx_tc]
        if rh_on:
            x0[2], x0[3] = z[idx_tsi], z[idx_tso]
        else:
            x0[1], x0[2] = z[idx_tsi], z[idx_tso]
        state, iters_polish = model.balance_with_q(q_hvac, x0)

        if not (use_lo or use_hi):
            break
        t_rh_eff = state.T_rh if rh_on else state.T_si
        psi_e = model.mean_psi(state.T_cab, state.T_si, t_rh_eff)
        if pin_equal:
            if abs(psi_e - psi_min) <= _OPT_PSI_TOL:
                break
            lo += psi_min - psi_e
            z_start = z
            continue
        lo_ok = not use_lo or psi_e >= psi_min - _OPT_PSI_TOL
        hi_ok = not use_hi or psi_e <= psi_max + _OPT_PSI_TOL
        if lo_ok and hi_ok:
            # exact feasibility; also pin the active bound tightly
            s_psi = surrogate_psi(z)
            if use_lo and abs(s_psi - lo) < 1e-6 and abs(psi_e - psi_min) > _OPT_PSI_TOL:
                lo += psi_min - psi_e
                z_start = z
                continue
            if use_hi and abs(hi - s_psi) < 1e-6 and abs(psi_e - psi_max) > _OPT_PSI_TOL:
                hi += psi_max - psi_e
                z_start = z
                continue
            break
        # exact PMV outside the window: shift the violated surrogate bound
        if not lo_ok:
            lo += psi_min - psi_e
        else:
            hi += psi_max - psi_e
        z_start = z
    else:
        raise SolverError(f"surrogate refinement did not settle for scenario {scn.id!r}")

    return state, total_nit + iters_polish


def solve_window_opt(scn: Scenario, cfg: BusConfig, spec: ComfortSpec,
                     rh_on: bool, layout: CabinLayout | None = None,
                     seed: int = 0) -> SolveResult:
    """Minimum-power solve for the PMV window via constrained optimization."""
    model = _BranchModel(scn, cfg, spec, rh_on, layout, seed)
    if scn.N_pass == 0:
        state, iters = model.passive()
        return _finalize(model, state, "optimization", iters)
    state, iters = _opt_solve_branch(model, spec.psi_min, spec.psi_max)
    return _finalize(model, state, "optimization", iters)


# ---------------------------------------------------------------------------
# branch selection
# ---------------------------------------------------------------------------

def solve_best(scn: Scenario, cfg: BusConfig, spec: ComfortSpec,
               method: str = "rootfind", layout: CabinLayout | None = None,
               seed: int = 0,
               weights_cache: ViewWeightsCache | None = None) -> SolveResult:
    """Solve with and (when available) without radiant heaters, keep the
    cheaper operating point.  Ties go to the simpler RH-off actuation."""
    if method == "rootfind":
        off_model = _BranchModel(scn, cfg, spec, False, layout, seed, weights_cache)
        st, iters = off_model.window(spec.psi_min, spec.psi_max)
        result_off = _finalize(off_model, st, "rootfind", iters)
    elif method == "opt":
        result_off = solve_window_opt(scn, cfg, spec, False, layout, seed)
    else:
        raise ConfigError(f"unknown solver method {method!r}")

    if not (cfg.rh_enabled and cfg.A_rh > 0):
        return result_off

    if method == "rootfind":
        on_model = _BranchModel(scn, cfg, spec, True, layout, seed, weights_cache)
        st, iters = on_model.window(spec.psi_min, spec.psi_max)
        result_on = _finalize(on_model, st, "rootfind", iters)
    else:
        result_on = solve_window_opt(scn, cfg, spec, True, layout, seed)

    if result_on.P_tot < result_off.P_tot - 1e-9:
        return result_on
    return result_off


class ScenarioSweeper:
    """Reusable per-scenario solver for window sweeps.

    Keeps the passive solutions, placement view weights, and the last
    pinned iterate alive across windows so a Pareto sweep pays the
    scenario-level setup once.
    """

    def __init__(self, scn: Scenario, cfg: BusConfig, spec: ComfortSpec,
                 layout: CabinLayout | None = None, seed: int = 0,
                 weights_cache: ViewWeightsCache | None = None):
        self.cfg = cfg
        self.models = [_BranchModel(scn, cfg, spec, False, layout, seed, weights_cache)]
        if cfg.rh_enabled and cfg.A_rh > 0:
            self.models.append(_BranchModel(scn, cfg, spec, True, layout, seed,
                                            weights_cache))

    def solve(self, psi_min: float, psi_max: float) -> SolveResult:
        best = None
        for model in self.models:
            st, iters = model.window(psi_min, psi_max)
            res = _finalize(model, st, "rootfind", iters)
            if best is None or res.P_tot < best.P_tot - 1e-9:
                best = res
        return best
