"""Year-round aggregation, Pareto sweeps, concept comparison, sensitivities.

Scenario datasets are not uniform across the year, so all annual figures
average month-first: per-month means over that month's scenarios, then the
plain mean of the twelve monthly values.  Comfort aggregates as PPD, never
as PMV -- a fleet that is +1 in summer and -1 in winter is *not* neutral.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .comfort import ComfortSpec
from .errors import ConfigError, DataError
from .model_core import BusConfig
from .radiant_geometry import CabinLayout
from .scenario import ScenarioSet
from .solver import (MODE_COOLING, MODE_HEATING, MODE_PASSIVE, ScenarioSweeper,
                     SolveResult, ViewWeightsCache, default_layout, solve_best)


@dataclass(frozen=True)
class MonthlySummary:
    """Per-month means; ``n == 0`` marks a month absent from the dataset."""

    month: int
    n: int
    P_hvac: float
    P_rh: float
    P_tot: float
    Q_heat: float       # mean of the positive part of Q_hvac
    Q_cool: float       # mean of the negative part, reported positive
    frac_heating: float
    frac_cooling: float
    frac_passive: float
    ppd: float


@dataclass(frozen=True)
class AnnualSummary:
    """Month-first annual averages over one solved scenario set."""

    monthly: tuple[MonthlySummary, ...]
    annual_mean_P_hvac: float
    annual_mean_P_rh: float
    annual_mean_P_tot: float
    annual_mean_Q_heat: float
    annual_mean_Q_cool: float
    annual_mean_ppd: float
    heating_cooling_ratio: float


@dataclass(frozen=True)
class ParetoPoint:
    half_width: float           # PMV window half-width
    annual_mean_P_tot: float    # W
    annual_mean_ppd: float      # %


@dataclass(frozen=True)
class SensitivityEntry:
    parameter: str
    direction: int              # +1, -1, or 0 for the baseline row
    rel_change_pct: float       # relative change of annual mean P_tot, %
    p5_pct: float               # 5th percentile of per-scenario changes, %
    p95_pct: float


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def _monthly_rows(results, sset: ScenarioSet) -> list[MonthlySummary]:
    month_of = {s.id: s.month for s in sset}
    if len(results) != len(sset):
        raise DataError(f"{len(results)} results for {len(sset)} scenarios")
    by_month: dict[int, list[SolveResult]] = {m: [] for m in range(1, 13)}
    for r in results:
        if r.scenario_id not in month_of:
            raise DataError(f"result for unknown scenario id {r.scenario_id!r}")
        by_month[month_of[r.scenario_id]].append(r)

    rows = []
    for m in range(1, 13):
        rs = by_month[m]
        if not rs:
            rows.append(MonthlySummary(m, 0, *(float("nan"),) * 9))
            continue
        n = len(rs)
        q = np.array([r.flows.Q_hvac for r in rs])
        ppds = np.array([r.ppd for r in rs])
        modes = [r.mode for r in rs]
        rows.append(MonthlySummary(
            month=m,
            n=n,
            P_hvac=float(np.mean([r.flows.P_hvac for r in rs])),
            P_rh=float(np.mean([r.flows.P_rh for r in rs])),
            P_tot=float(np.mean([r.P_tot for r in rs])),
            Q_heat=float(np.maximum(q, 0.0).mean()),
            Q_cool=float(np.maximum(-q, 0.0).mean()),
            frac_heating=modes.count(MODE_HEATING) / n,
            frac_cooling=modes.count(MODE_COOLING) / n,
            frac_passive=modes.count(MODE_PASSIVE) / n,
            ppd=float(np.nanmean(ppds)) if not np.all(np.isnan(ppds)) else float("nan"),
        ))
    return rows


def monthly_table(results, sset: ScenarioSet) -> list[MonthlySummary]:
    """Monthly means; months without scenarios are flagged with ``n == 0``."""
    return _monthly_rows(results, sset)


def aggregate_annual(results, sset: ScenarioSet) -> AnnualSummary:
    """Month-first annual aggregation.

    Every month must be represented; empty-bus scenarios contribute power
    but no PPD (there is nobody aboard to be dissatisfied).
    """
    rows = _monthly_rows(results, sset)
    missing = [r.month for r in rows if r.n == 0]
    if missing:
        raise DataError(f"months without scenarios: {missing}")
    mean_q_cool = float(np.mean([r.Q_cool for r in rows]))
    ratio = (float(np.mean([r.Q_heat for r in rows])) / mean_q_cool
             if mean_q_cool > 0 else math.inf)
    return AnnualSummary(
        monthly=tuple(rows),
        annual_mean_P_hvac=float(np.mean([r.P_hvac for r in rows])),
        annual_mean_P_rh=float(np.mean([r.P_rh for r in rows])),
        annual_mean_P_tot=float(np.mean([r.P_tot for r in rows])),
        annual_mean_Q_heat=float(np.mean([r.Q_heat for r in rows])),
        annual_mean_Q_cool=mean_q_cool,
        annual_mean_ppd=float(np.nanmean([r.ppd for r in rows])),
        heating_cooling_ratio=ratio,
    )


# ---------------------------------------------------------------------------
# batch solving
# ---------------------------------------------------------------------------

def _solve_chunk(args):
    scenarios, cfg, spec, windows, layout, seed = args
    out = []
    cache = ViewWeightsCache()
    for scn in scenarios:
        sweeper = ScenarioSweeper(scn, cfg, spec, layout, seed, cache)
        out.append([sweeper.solve(lo, hi) for lo, hi in windows])
    return out


def _run_windows(sset: ScenarioSet, cfg: BusConfig, spec: ComfortSpec,
                 windows, layout: CabinLayout | None, seed: int,
                 jobs: int = 1, weights_cache: ViewWeightsCache | None = None
                 ) -> list[list[SolveResult]]:
    """Solve every scenario at every window; returns results[window][scenario]."""
    scenarios = list(sset)
    if jobs <= 1:
        cache = weights_cache or ViewWeightsCache()
        per_scn = []
        for scn in scenarios:
            sweeper = ScenarioSweeper(scn, cfg, spec, layout, seed, cache)
            per_scn.append([sweeper.solve(w[0], w[1]) for w in windows])
    else:
        chunks = max(1, math.ceil(len(scenarios) / (jobs * 4)))
        batches = [scenarios[i:i + chunks] for i in range(0, len(scenarios), chunks)]
        per_scn = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(_solve_chunk,
                                 [(b, cfg, spec, windows, layout, seed) for b in batches]):
                per_scn.extend(part)
    return [[per_scn[i][wi] for i in range(len(scenarios))]
            for wi in range(len(windows))]


def solve_set(sset: ScenarioSet, cfg: BusConfig, spec: ComfortSpec,
              layout: CabinLayout | None = None, seed: int = 0,
              jobs: int = 1, method: str = "rootfind") -> list[SolveResult]:
    """Solve every scenario at the window of ``spec``, in dataset order."""
    if method == "rootfind":
        return _run_windows(sset, cfg, spec, [(spec.psi_min, spec.psi_max)],
                            layout, seed, jobs)[0]
    return [solve_best(scn, cfg, spec, method=method, layout=layout, seed=seed)
            for scn in sset]


# ---------------------------------------------------------------------------
# Pareto sweeps and concept comparison
# ---------------------------------------------------------------------------

def pareto_sweep(sset: ScenarioSet, cfg: BusConfig, half_widths,
                 spec: ComfortSpec | None = None,
                 layout: CabinLayout | None = None, seed: int = 0,
                 jobs: int = 1,
                 weights_cache: ViewWeightsCache | None = None) -> list[ParetoPoint]:
    """Annual power/discomfort trade-off over symmetric PMV windows."""
    hw = [float(w) for w in half_widths]
    if not hw:
        raise ConfigError("half_widths must not be empty")
    if any(w < 0.0 or w > 2.0 for w in hw):
        raise ConfigError("window half-widths must lie in [0, 2]")
    if any(b < a for a, b in zip(hw, hw[1:])):
        raise ConfigError("half_widths must be sorted ascending")
    spec = spec or ComfortSpec()
    windows = [(-w, w) for w in hw]
    results = _run_windows(sset, cfg, spec, windows, layout, seed, jobs, weights_cache)
    points = []
    for w, res in zip(hw, results):
        summary = aggregate_annual(res, sset)
        points.append(ParetoPoint(half_width=w,
                                  annual_mean_P_tot=summary.annual_mean_P_tot,
                                  annual_mean_ppd=summary.annual_mean_ppd))
    return points


_CONCEPT_FIELDS_ALLOWED = {"cop_heating", "rh_enabled", "A_rh", "T_rh_tgt"}


def compare_concepts(sset: ScenarioSet, concepts: dict[str, BusConfig],
                     half_widths, spec: ComfortSpec | None = None,
                     seed: int = 0, jobs: int = 1) -> dict[str, list[ParetoPoint]]:
    """One Pareto curve per HVAC concept on the same scenarios and windows.

    Concepts may differ only in the heating COP curve and the radiant-heater
    configuration; anything else would make the comparison meaningless.
    """
    if not concepts:
        raise ConfigError("need at least one concept")
    names = list(concepts)
    ref = concepts[names[0]]
    for name in names[1:]:
        c = concepts[name]
        for fld in BusConfig.__dataclass_fields__:
            if fld in _CONCEPT_FIELDS_ALLOWED:
                continue
            if getattr(c, fld) != getattr(ref, fld):
                raise ConfigError(
                    f"concept {name!r} differs from {names[0]!r} in {fld!r}; only "
                    "the heating COP and RH configuration may vary")
    cache = ViewWeightsCache()
    curves = {}
    for name in names:
        cfg = concepts[name]
        curves[name] = pareto_sweep(sset, cfg, half_widths, spec,
                                    default_layout(cfg), seed, jobs,
                                    weights_cache=cache if jobs <= 1 else None)
    return curves


# ---------------------------------------------------------------------------
# one-at-a-time sensitivity
# ---------------------------------------------------------------------------

DEFAULT_SENSITIVITY_PARAMS = (
    "q_met_per_pass", "clothing", "cop_heating", "cop_cooling", "k_body",
    "door_loss", "tau_win", "alpha_paint", "h_out", "zeta_win",
)


def _apply_param(cfg: BusConfig, spec: ComfortSpec, name: str,
                 factor: float) -> tuple[BusConfig, ComfortSpec]:
    if name == "clothing":
        return cfg, replace(spec, clo_scale=spec.clo_scale * factor)
    if name == "cop_heating":
        return cfg.with_changes(cop_heating=cfg.cop_heating.scaled(factor)), spec
    if name == "cop_cooling":
        return cfg.with_changes(cop_cooling=cfg.cop_cooling.scaled(factor)), spec
    if name == "door_loss":
        return cfg.with_changes(C_d=cfg.C_d * factor), spec
    if name in BusConfig.__dataclass_fields__:
        return cfg.with_changes(**{name: getattr(cfg, name) * factor}), spec
    raise ConfigError(f"unknown sensitivity parameter {name!r}")


def oat_sensitivity(sset: ScenarioSet, cfg: BusConfig, spec: ComfortSpec,
                    parameters=DEFAULT_SENSITIVITY_PARAMS, delta: float = 0.01,
                    layout: CabinLayout | None = None, seed: int = 0,
                    jobs: int = 1) -> list[SensitivityEntry]:
    """One-at-a-time multiplicative perturbation study.

    Every parameter is scaled by (1 +/- delta), the whole set re-solved, and
    the relative change of the annual mean total power reported together
    with the 5th/95th percentiles of the per-scenario relative changes
    (scenarios with a baseline below 1 W carry no meaningful relative
    change and are excluded from the percentiles).
    """
    for name in parameters:
        _apply_param(cfg, spec, name, 1.0)  # fail fast on unknown names

    base_results = solve_set(sset, cfg, spec, layout, seed, jobs)
    base_annual = aggregate_annual(base_results, sset).annual_mean_P_tot
    base_by_id = {r.scenario_id: r.P_tot for r in base_results}

    entries = [SensitivityEntry("baseline", 0, 0.0, 0.0, 0.0)]
    for name in parameters:
        for direction in (+1, -1):
            cfg2, spec2 = _apply_param(cfg, spec, name, 1.0 + direction * delta)
            layout2 = default_layout(cfg2) if layout is None else layout
            results = solve_set(sset, cfg2, spec2, layout2, seed, jobs)
            annual = aggregate_annual(results, sset).annual_mean_P_tot
            rel = ((annual - base_annual) / base_annual * 100.0
                   if base_annual > 0 else 0.0)
            per = [(r.P_tot - base_by_id[r.scenario_id]) / base_by_id[r.scenario_id] * 100.0
                   for r in results if base_by_id[r.scenario_id] > 1.0]
            if per:
                p5, p95 = np.quantile(per, [0.05, 0.95])
            else:
                p5 = p95 = 0.0
            entries.append(SensitivityEntry(name, direction, rel, float(p5), float(p95)))
    return entries
