"""Time marching: regular ADER sweep + ESIM at the fracture + optional point source."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..esim import EsimConfig, InterfaceSolution, InterfaceSystem, locate_interface, \
    modified_values, step_irregular
from ..fracture import JumpOperatorSet, LeftTraces, build_jump_operators, displacement_jump
from ..model import FieldState, FractureParams, Grid, MaterialParams, SourceSpec
from ..scheme import SchemeSpec, check_finite, node_terms, sweep_increments
from .diagnostics import inject_source, total_energy

log = logging.getLogger(__name__)


@dataclass
class InterfaceHistory:
    """Per-step interface diagnostics (one row per solved time level)."""

    t: list[float] = field(default_factory=list)
    sigma_minus: list[float] = field(default_factory=list)
    v_minus: list[float] = field(default_factory=list)
    v_plus: list[float] = field(default_factory=list)
    jump_u: list[float] = field(default_factory=list)
    newton_iters: list[int] = field(default_factory=list)
    residual: list[float] = field(default_factory=list)

    COLUMNS = ("t", "sigma_minus", "v_minus", "v_plus", "jump_u", "newton_iters", "residual")

    def append(self, **row) -> None:
        for key in self.COLUMNS:
            getattr(self, key).append(row[key])

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {key: np.asarray(getattr(self, key)) for key in self.COLUMNS}


class Simulation:
    """One fractured (or unfractured) 1-D configuration on a fixed grid.

    ``fracture=None`` runs the plain scheme with ``media[0]`` everywhere.
    """

    def __init__(self, media: tuple[MaterialParams, MaterialParams], grid: Grid,
                 order: int, fracture: FractureParams | None = None,
                 esim: EsimConfig | None = None, source: SourceSpec | None = None,
                 ops: JumpOperatorSet | None = None, linear_jump: bool = False):
        self.media = media
        self.grid = grid
        self.spec = SchemeSpec(order)
        self.fracture = fracture
        self.source = source
        self.J = None
        self.system = None
        if fracture is not None:
            if esim is None:
                raise ValueError("a fractured run needs an ESIM configuration")
            self.esim = esim
            self.J = locate_interface(grid, fracture.alpha, max(self.spec.s, esim.k))
            if ops is None:
                ops = build_jump_operators(fracture, media[0], media[1], 2 * esim.k - 1,
                                           linear=linear_jump)
            self.ops = ops
            self.system = InterfaceSystem(ops, grid, self.J, esim.k, media[0])
        self.cfl = grid.cfl
        self._dt = None
        self._terms = None

    def _set_dt(self, dt: float) -> None:
        if dt != self._dt:
            self.grid = self.grid.with_dt(dt, max(m.c for m in self.media))
            self._terms = node_terms(self.spec, self.media, self.grid, self.J)
            self._dt = dt

    # -- interface ----------------------------------------------------------
    def solve_interface(self, state: FieldState, guess: InterfaceSolution | None) -> InterfaceSolution:
        start = guess.traces if guess is not None else LeftTraces.zeros(2 * self.esim.k - 1)
        return self.system.solve(state, start, self.esim)

    def interface_limits(self, sol: InterfaceSolution):
        """((v-, sigma-), (v+, sigma+)) at alpha from a converged solution."""
        vals, _ = self.ops.evaluate_all(sol.traces)
        return ((sol.traces.dv[0], sol.traces.dsigma[0]), (vals[0, 0], vals[0, 1]))

    def energy(self, state: FieldState, sol: InterfaceSolution | None = None) -> float:
        if self.fracture is None:
            return total_energy(state, self.grid, self.media)
        minus, plus = self.interface_limits(sol) if sol is not None else (None, None)
        return total_energy(state, self.grid, self.media, self.fracture, self.J, minus, plus)

    # -- stepping -----------------------------------------------------------
    def step(self, state: FieldState, dt: float,
             guess: InterfaceSolution | None = None) -> tuple[FieldState, InterfaceSolution | None]:
        """Advance one step; returns the new state and the interface solution at t_n."""
        self._set_dt(dt)
        dv, ds = sweep_increments(self.spec, self._terms, self.grid.dx, state.v, state.sigma)
        sol = None
        if self.fracture is not None:
            sol = self.solve_interface(state, guess)
            mod = modified_values(self.ops, self.grid, self.J, self.esim.k, self.spec.s, sol)
            inc = step_irregular(self.spec, self.media, self.grid, self.J, state, mod)
            irr = slice(self.J - self.spec.s + 1, self.J + self.spec.s + 1)
            dv[irr] = inc[:, 0]
            ds[irr] = inc[:, 1]
        if self.source is not None:
            ds += inject_source(state, self.source, self.grid, dt, state.t)
        v = state.v + dv
        sigma = state.sigma + ds
        check_finite(v, sigma, state.t + dt)
        return FieldState(state.t + dt, v, sigma), sol

    def record(self, history: InterfaceHistory, t: float, sol: InterfaceSolution) -> None:
        (vm, sm), (vp, _) = self.interface_limits(sol)
        history.append(t=t, sigma_minus=sm, v_minus=vm, v_plus=vp,
                       jump_u=displacement_jump(self.fracture, sm),
                       newton_iters=sol.iterations, residual=sol.residual)

    def march(self, state: FieldState, t_end: float, guess: InterfaceSolution | None = None,
              history: InterfaceHistory | None = None, dt: float | None = None,
              on_step: Callable[[FieldState, InterfaceSolution | None], None] | None = None):
        """March to exactly ``t_end`` with a uniform step no larger than the CFL step.

        Returns ``(state, last_solution)`` where the solution belongs to the
        last solved level (t_end excluded).
        """
        dt_max = dt if dt is not None else self.cfl * self.grid.dx / max(m.c for m in self.media)
        span = t_end - state.t
        if span <= 0:
            return state, guess
        nsteps = max(1, math.ceil(span / dt_max - 1e-9))
        h = span / nsteps
        sol = guess
        for n in range(nsteps):
            t_n = state.t
            new, sol = self.step(state, h, sol)
            if history is not None and sol is not None:
                self.record(history, t_n, sol)
            if on_step is not None:
                on_step(state, sol)
            state = new
        state = FieldState(t_end, state.v, state.sigma)
        return state, sol

    def boundary_leak(self, state: FieldState, width: int | None = None) -> float:
        """max |U| near either end relative to max |U| overall (stress scaled by Z0)."""
        width = width or 2 * self.spec.s + 2
        z = self.media[0].impedance
        mag = np.maximum(np.abs(state.v), np.abs(state.sigma) / z)
        peak = float(mag.max())
        if peak == 0.0:
            return 0.0
        return float(max(mag[:width].max(), mag[-width:].max()) / peak)
