"""Experiment drivers: pulse transmission, convergence study, harmonic generation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import analytic
from ..model import ConfigError, FieldState, Grid, initial_condition
from .config import SimConfig
from .diagnostics import ErrorTable, HarmonicSpectrum, fourier_harmonics, l1_error, sample_at
from .io import snapshot_name, write_csv, write_snapshot, write_station
from .simulate import InterfaceHistory, Simulation

log = logging.getLogger(__name__)


def build_simulation(cfg: SimConfig, grid: Grid | None = None, **kwargs) -> Simulation:
    return Simulation(cfg.media, grid or cfg.grid, cfg.order, cfg.fracture, cfg.esim,
                      source=kwargs.pop("source", None), **kwargs)


# -- test 1: pulse through the fracture ----------------------------------------

@dataclass
class IvpResult:
    grid: Grid
    snapshots: dict[float, FieldState]
    history: InterfaceHistory
    energy_t: np.ndarray
    energy: np.ndarray
    boundary_leak: float

    @property
    def final(self) -> FieldState:
        return self.snapshots[max(self.snapshots)]

    @property
    def energy_drift(self) -> float:
        """max_t |E(t)/E(t0) - 1|."""
        if self.energy.size == 0 or self.energy[0] == 0.0:
            return 0.0
        return float(np.max(np.abs(self.energy / self.energy[0] - 1.0)))

    @property
    def min_jump(self) -> float:
        u = self.history.as_arrays()["jump_u"]
        return float(u.min()) if u.size else 0.0

    def save(self, out: Path) -> list[Path]:
        x = self.grid.x
        paths = [write_snapshot(out / snapshot_name(t), x, s.v, s.sigma)
                 for t, s in sorted(self.snapshots.items())]
        if self.history.t:
            paths.append(write_csv(out / "interface.csv", self.history.as_arrays()))
        paths.append(write_csv(out / "energy.csv", {"t": self.energy_t, "energy": self.energy}))
        return paths


def run_ivp(cfg: SimConfig, grid: Grid | None = None, record_energy: bool = True) -> IvpResult:
    """March the wavelet initial value problem from t0 to the final time."""
    if cfg.wavelet is None or cfg.final_time is None:
        raise ConfigError("run_ivp needs a wavelet and a final time")
    grid = grid or cfg.grid
    sim = build_simulation(cfg, grid)
    alpha = cfg.fracture.alpha if cfg.fracture is not None else None
    state = initial_condition(grid, cfg.wavelet, cfg.left, alpha)
    history = InterfaceHistory()
    e_t, e_val = [], []

    def on_step(st, sol):
        if record_energy:
            e_t.append(st.t)
            e_val.append(sim.energy(st, sol))

    times = sorted({t for t in cfg.snapshot_times if t <= cfg.final_time} | {cfg.final_time})
    snapshots, sol = {}, None
    for t in times:
        state, sol = sim.march(state, t, sol, history=history if cfg.fracture else None,
                               on_step=on_step)
        snapshots[t] = state
    return IvpResult(grid, snapshots, history, np.asarray(e_t), np.asarray(e_val),
                     sim.boundary_leak(state))


# -- semi-analytical reference -------------------------------------------------

@dataclass
class ReferenceResult:
    grid: Grid
    snapshots: dict[float, FieldState]
    trace_t: np.ndarray
    v_minus: np.ndarray
    v_plus: np.ndarray
    sigma: np.ndarray
    jump_u: np.ndarray
    ode: analytic.OdeSolution

    def save(self, out: Path) -> list[Path]:
        x = self.grid.x
        paths = [write_snapshot(out / snapshot_name(t), x, s.v, s.sigma)
                 for t, s in sorted(self.snapshots.items())]
        paths.append(write_csv(out / "interface.csv", {
            "t": self.trace_t, "sigma_minus": self.sigma, "v_minus": self.v_minus,
            "v_plus": self.v_plus, "jump_u": self.jump_u}))
        return paths


def reference_ode(cfg: SimConfig, t_end: float, dt_ode: float | None = None) -> analytic.OdeSolution:
    if cfg.fracture is None or cfg.wavelet is None:
        raise ConfigError("the semi-analytical reference needs a fracture and a wavelet")
    if dt_ode is None:
        dt_ode = cfg.dt_ode or cfg.grid.dt / 20.0
    return analytic.integrate_interface_ode(cfg.fracture, cfg.media, cfg.wavelet, t_end, dt_ode)


def run_reference(cfg: SimConfig) -> ReferenceResult:
    """Characteristics solution on the configured nodes and time levels."""
    from ..fracture import displacement_jump

    ode = reference_ode(cfg, cfg.final_time)
    times = sorted({t for t in cfg.snapshot_times if t <= cfg.final_time} | {cfg.final_time})
    snaps = {}
    for t in times:
        v, s = analytic.reconstruct(cfg.fracture, cfg.media, cfg.wavelet, ode, cfg.grid.x, t)
        snaps[t] = FieldState(t, v, s)
    tt = ode.t_grid
    vm, vp, sig = analytic.boundary_traces(cfg.fracture, cfg.media, cfg.wavelet, ode, tt)
    return ReferenceResult(cfg.grid, snaps, tt, vm, vp, sig,
                           np.asarray(displacement_jump(cfg.fracture, sig)), ode)


# -- test 2: convergence -------------------------------------------------------

@dataclass
class ConvergenceResult:
    table: ErrorTable
    trace_errors: list[float] = field(default_factory=list)
    energy_drifts: list[float] = field(default_factory=list)

    def trace_slope(self) -> float:
        return float(np.polyfit(np.log(self.table.dx), np.log(self.trace_errors), 1)[0])

    def save(self, out: Path) -> list[Path]:
        t = self.table
        return [write_csv(out / "convergence.csv", {
            "n": t.n, "dx": t.dx, "l1_error": t.l1_error, "observed_order": t.observed_order,
            "trace_error": self.trace_errors, "energy_drift": self.energy_drifts})]


def run_convergence(cfg: SimConfig) -> ConvergenceResult:
    """L1(sigma) error at the final time on each grid of ``cfg.convergence_n``."""
    if cfg.fracture is None:
        raise ConfigError("the convergence study needs a fracture")
    grids = [cfg.with_n(n).grid for n in cfg.convergence_n]
    for g in grids:
        off = (cfg.fracture.alpha - g.x_min) / g.dx
        if abs(off - round(off)) < 1e-9:
            log.warning("alpha coincides with a node on the n = %d grid", g.n)
    dt_ode = cfg.dt_ode or min(g.dt for g in grids) / 20.0
    ode = reference_ode(cfg, cfg.final_time, dt_ode)
    result = ConvergenceResult(ErrorTable())
    for g in grids:
        run = run_ivp(cfg, g)
        _, s_ref = analytic.reconstruct(cfg.fracture, cfg.media, cfg.wavelet, ode, g.x,
                                        cfg.final_time)
        result.table.add(g.n, g.dx, l1_error(run.final.sigma, s_ref, g.dx))
        h = run.history.as_arrays()
        vm, _, _ = analytic.boundary_traces(cfg.fracture, cfg.media, cfg.wavelet, ode, h["t"])
        result.trace_errors.append(float(np.max(np.abs(h["v_minus"] - vm))))
        result.energy_drifts.append(run.energy_drift)
        log.info("n = %d: L1 = %.6e", g.n, result.table.l1_error[-1])
    return result


# -- test 3: harmonic generation -----------------------------------------------

@dataclass
class HarmonicResult:
    spectrum: HarmonicSpectrum
    t: np.ndarray          # recorded window
    v: np.ndarray
    sigma: np.ndarray
    samples_per_period: int
    periodicity: float     # max L-inf gap between successive periods / peak
    station: float

    def one_period(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        m = self.samples_per_period
        return self.t[-m:], self.v[-m:], self.sigma[-m:]

    def save(self, out: Path) -> list[Path]:
        amps = self.spectrum.amplitudes
        h = np.arange(1, amps.size + 1)
        return [write_station(out / "station.csv", self.t, self.v, self.sigma),
                write_station(out / "waveform.csv", *self.one_period()),
                write_csv(out / "spectrum.csv", {"harmonic": h,
                                                 "frequency": h * self.spectrum.fundamental,
                                                 "amplitude": amps})]


def padded_grid(cfg: SimConfig, t_end: float, station: float) -> Grid:
    """Extend the configured grid (same nodes, same dx) so that no boundary
    reflection reaches the station before ``t_end``."""
    g, c = cfg.grid, cfg.c_max
    dx = g.dx
    margin = 20 * dx
    x_lo = min(g.x_min, 0.5 * (cfg.source.x_s + station - c * t_end) - margin)
    x_hi = max(g.x_max, 0.5 * (c * t_end + cfg.source.x_s + station) + margin)
    n_lo = math.ceil((g.x_min - x_lo) / dx)
    n_hi = math.ceil((x_hi - g.x_max) / dx)
    return Grid(g.x_min - n_lo * dx, g.x_max + n_hi * dx, g.n + n_lo + n_hi, g.cfl, g.dt)


def _periodicity(samples: np.ndarray, m: int) -> float:
    per = samples.reshape(-1, m)
    peak = float(np.max(np.abs(samples)))
    if per.shape[0] < 2 or peak == 0.0:
        return 0.0
    return float(np.max(np.abs(np.diff(per, axis=0))) / peak)


def run_harmonic(cfg: SimConfig, station: float | None = None) -> HarmonicResult:
    """Drive the source, wait out the transient, record whole periods, take the DFT."""
    src = cfg.source
    if src is None:
        raise ConfigError("run_harmonic needs a source")
    station = cfg.stations[0] if station is None else station
    T = 1.0 / src.f_c
    if cfg.fracture is not None:
        a = cfg.fracture.alpha
        arrival = (a - src.x_s) / cfg.left.c + max(station - a, 0.0) / cfg.right.c
    else:
        arrival = abs(station - src.x_s) / cfg.left.c
    t_rec = math.ceil(arrival / T + cfg.settle_periods) * T
    t_end = t_rec + cfg.record_periods * T

    grid = padded_grid(cfg, t_end, station)
    m = math.ceil(T / (grid.cfl * grid.dx / cfg.c_max) - 1e-9)
    dt = T / m
    sim = build_simulation(cfg, grid, source=src)
    if cfg.fracture is not None:
        s = sim.spec.s
        for x in (station, src.x_s):
            if abs(x - cfg.fracture.alpha) < (s + 2) * grid.dx:
                raise ConfigError(f"position {x} m overlaps the fracture stencil")
    if abs(station - src.x_s) < 4 * grid.dx:
        raise ConfigError("station overlaps the source stencil")

    state, sol = FieldState.zeros(grid.n), None
    n_wait = round(t_rec / dt)
    n_rec = cfg.record_periods * m
    tv, vv, sv = [], [], []
    for i in range(n_wait + n_rec):
        if i >= n_wait:
            tv.append(state.t)
            vv.append(sample_at(grid, state.v, station))
            sv.append(sample_at(grid, state.sigma, station))
        state, sol = sim.step(state, dt, sol)
        state = FieldState((i + 1) * dt, state.v, state.sigma)
    v = np.asarray(vv)
    periodicity = _periodicity(v, m)
    if periodicity > 0.01:
        log.warning("station signal not periodic to 1%% (gap %.3g); lengthen the transient",
                    periodicity)
    spectrum = fourier_harmonics(v, m, cfg.harmonics, src.f_c)
    return HarmonicResult(spectrum, np.asarray(tv), v, np.asarray(sv), m, periodicity, station)
