"""Semi-analytical reference solution by the method of characteristics.

With initial data supported left of the fracture, the whole solution is
determined by the transmitted velocity y(t) = v(alpha^+, t), which obeys a
scalar nonlinear ODE driven by the incident Riemann invariant.  The ODE is
integrated with classical RK4; a cubic Hermite interpolant on the RK4
nodes gives dense output.  The field at any (x, t) then follows by tracing
characteristics back either to the initial data or to the interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .fracture import InadmissibleStress, fracture_potential_energy
from .model import FractureParams, MaterialParams, WaveletSpec, initial_fields


@dataclass(frozen=True)
class RiemannPair:
    jr: np.ndarray | float
    jl: np.ndarray | float


def riemann_decompose(medium: MaterialParams, v, sigma) -> RiemannPair:
    z = medium.impedance
    return RiemannPair(0.5 * (v - sigma / z), 0.5 * (v + sigma / z))


def riemann_compose(medium: MaterialParams, pair: RiemannPair):
    """Inverse of :func:`riemann_decompose`: v = jr + jl, sigma = Z (jl - jr)."""
    return pair.jr + pair.jl, medium.impedance * (pair.jl - pair.jr)


def _initial_jr(spec: WaveletSpec, left: MaterialParams, x):
    v, sigma = initial_fields(spec, left, x)
    return riemann_decompose(left, v, sigma).jr


def _initial_jl(spec: WaveletSpec, left: MaterialParams, x):
    v, sigma = initial_fields(spec, left, x)
    return riemann_decompose(left, v, sigma).jl


def forcing_g(spec: WaveletSpec, left: MaterialParams, alpha: float, t):
    """g(t) = 2 J^R_0(alpha - c0 (t - t0), t0): twice the incident invariant at alpha."""
    t = np.asarray(t, dtype=float)
    out = 2.0 * _initial_jr(spec, left, alpha - left.c * (t - spec.t0))
    return out if np.ndim(out) else float(out)


def ode_rhs(params: FractureParams, media: tuple[MaterialParams, MaterialParams],
            g_value, y):
    """dy/dt = (K/Z1) (1 + Z1 y/(K d))^2 (g - (1 + Z1/Z0) y)."""
    z0, z1 = media[0].impedance, media[1].impedance
    theta = 1.0 + z1 * y / params.Kd
    if np.any(np.asarray(theta) <= 0.0):
        raise InadmissibleStress("transmitted velocity drives sigma(alpha-) onto the pole K d")
    return params.K / z1 * theta**2 * (g_value - (1.0 + z1 / z0) * y)


@dataclass(frozen=True)
class OdeSolution:
    """RK4 samples of y(t) = v(alpha^+, t) with Hermite dense output (y = 0 before t0)."""

    t_grid: np.ndarray
    y: np.ndarray
    slope: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_spline", CubicHermiteSpline(self.t_grid, self.y, self.slope))

    @property
    def t0(self) -> float:
        return float(self.t_grid[0])

    @property
    def t_end(self) -> float:
        return float(self.t_grid[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t > self.t_end * (1 + 1e-14) + 1e-300):
            raise ValueError(f"reference requested past its end time {self.t_end}")
        out = np.where(t >= self.t0, self._spline(np.clip(t, self.t0, self.t_end)), 0.0)
        return out if out.ndim else float(out)


def integrate_interface_ode(params: FractureParams, media: tuple[MaterialParams, MaterialParams],
                            spec: WaveletSpec, t_end: float, dt_ode: float) -> OdeSolution:
    """Classical RK4 on [t0, t_end] with y(t0) = 0 (step shrunk to land on t_end)."""
    if not dt_ode > 0:
        raise ValueError("dt_ode must be positive")
    t0 = spec.t0
    nsteps = max(1, math.ceil((t_end - t0) / dt_ode - 1e-9))
    h = (t_end - t0) / nsteps
    t_nodes = t0 + h * np.arange(nsteps + 1)
    g_nodes = np.asarray(forcing_g(spec, media[0], params.alpha, t_nodes))
    g_mid = np.asarray(forcing_g(spec, media[0], params.alpha, t_nodes[:-1] + 0.5 * h))

    z0, z1 = media[0].impedance, media[1].impedance
    a, b, kd = params.K / z1, 1.0 + z1 / z0, params.Kd / z1

    def f(g, y):
        theta = 1.0 + y / kd
        if theta <= 0.0:
            raise InadmissibleStress
        return a * theta * theta * (g - b * y)

    y = np.zeros(nsteps + 1)
    slope = np.zeros(nsteps + 1)
    yn = 0.0
    try:
        for n in range(nsteps):
            k1 = f(g_nodes[n], yn)
            slope[n] = k1
            k2 = f(g_mid[n], yn + 0.5 * h * k1)
            k3 = f(g_mid[n], yn + 0.5 * h * k2)
            k4 = f(g_nodes[n + 1], yn + h * k3)
            yn = yn + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            y[n + 1] = yn
        slope[nsteps] = f(g_nodes[nsteps], yn)
    except InadmissibleStress:
        raise InadmissibleStress(
            f"reference ODE left the admissible branch near t = {t_nodes[n]:.9g} s") from None
    return OdeSolution(t_nodes, y, slope)


def boundary_traces(params: FractureParams, media: tuple[MaterialParams, MaterialParams],
                    spec: WaveletSpec, ode: OdeSolution, t):
    """(v(alpha^-), v(alpha^+), sigma(alpha^+-)) at time(s) t >= t0."""
    y = np.asarray(ode(t))
    g = np.asarray(forcing_g(spec, media[0], params.alpha, t))
    z0, z1 = media[0].impedance, media[1].impedance
    return -z1 / z0 * y + g, y, -z1 * y


def reconstruct(params: FractureParams, media: tuple[MaterialParams, MaterialParams],
                spec: WaveletSpec, ode: OdeSolution, x, t: float):
    """Exact (v, sigma) at positions x and time t from characteristics."""
    x = np.asarray(x, dtype=float)
    left, right = media
    alpha, t0 = params.alpha, spec.t0
    v = np.zeros_like(x)
    sigma = np.zeros_like(x)

    lm = x < alpha
    if lm.any():
        xl = x[lm]
        jr = _initial_jr(spec, left, xl - left.c * (t - t0))
        t_a = t - (alpha - xl) / left.c
        hit = t_a >= t0
        delta = np.asarray(_initial_jl(spec, left, xl + left.c * (t - t0)), dtype=float).copy()
        if hit.any():
            ta = t_a[hit]
            delta[hit] = (-right.impedance / left.impedance * np.asarray(ode(ta))
                          + _initial_jr(spec, left, alpha - left.c * (ta - t0)))
        v[lm], sigma[lm] = riemann_compose(left, RiemannPair(jr, delta))

    rm = ~lm
    if rm.any():
        t_b = t - (x[rm] - alpha) / right.c
        y = np.where(t_b >= t0, ode(np.minimum(np.maximum(t_b, t0), ode.t_end)), 0.0)
        v[rm] = y
        sigma[rm] = -right.impedance * y
    return v, sigma


def reference_energy(params: FractureParams, media: tuple[MaterialParams, MaterialParams],
                     spec: WaveletSpec, ode: OdeSolution, t: float,
                     x_min: float, x_max: float, dx: float) -> float:
    """Bulk energy of the exact field plus the fracture potential energy.

    Composite 5-point Gauss-Legendre on cells of width <= dx, with alpha
    a cell boundary so the integrand is smooth on every cell.
    """
    from .harness.diagnostics import bulk_energy_density

    nodes, weights = np.polynomial.legendre.leggauss(5)
    total = 0.0
    for a, b, medium in ((x_min, params.alpha, media[0]), (params.alpha, x_max, media[1])):
        ncell = max(1, math.ceil((b - a) / dx))
        edges = np.linspace(a, b, ncell + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        xq = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        v, sigma = reconstruct(params, media, spec, ode, xq, t)
        dens = bulk_energy_density(medium, v, sigma).reshape(ncell, -1)
        total += float(np.sum(dens @ weights * half))
    _, _, s_minus = boundary_traces(params, media, spec, ode, t)
    return total + float(fracture_potential_energy(params, s_minus))
