"""Physical configuration: media, fracture, grid, field state, wavelet and source."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

WAVELET_A = (1.0, -21.0 / 32.0, 63.0 / 768.0, -1.0 / 512.0)
WAVELET_BETA = (1.0, 2.0, 4.0, 8.0)


class ConfigError(ValueError):
    """Raised for physically or geometrically invalid configurations."""


@dataclass(frozen=True)
class MaterialParams:
    rho: float
    c: float

    def __post_init__(self):
        if not (self.rho > 0 and self.c > 0):
            raise ConfigError(f"need rho > 0 and c > 0, got rho={self.rho}, c={self.c}")

    @property
    def impedance(self) -> float:
        return self.rho * self.c

    @property
    def modulus(self) -> float:
        """rho c^2, the P-wave modulus."""
        return self.rho * self.c**2

    def matrix(self) -> np.ndarray:
        """The 2x2 matrix A of dU/dt + A dU/dx = 0 for U = (v, sigma)."""
        return np.array([[0.0, -1.0 / self.rho], [-self.modulus, 0.0]])


@dataclass(frozen=True)
class FractureParams:
    """Bandis-Barton fracture located at ``alpha``.

    ``sigma_bar`` and ``h_bar`` (static prestress and rest thickness) are
    only validated; they do not enter the dynamics.
    """

    alpha: float
    K: float
    d: float
    sigma_bar: float | None = None
    h_bar: float | None = None

    def __post_init__(self):
        if not (self.K > 0 and self.d > 0):
            raise ConfigError(f"need K > 0 and d > 0, got K={self.K}, d={self.d}")
        if self.sigma_bar is not None and not (0 < self.sigma_bar < self.K * self.d):
            raise ConfigError("prestress must satisfy 0 < sigma_bar < K d")
        if self.h_bar is not None and not self.h_bar > self.d:
            raise ConfigError("rest thickness must exceed the maximum closure d")

    @property
    def Kd(self) -> float:
        return self.K * self.d


@dataclass(frozen=True)
class Grid:
    """Endpoint-inclusive uniform grid ``x_i = x_min + i dx``, i = 0..n-1."""

    x_min: float
    x_max: float
    n: int
    cfl: float
    dt: float

    def __post_init__(self):
        if self.n < 2 or not self.x_max > self.x_min:
            raise ConfigError("grid needs n >= 2 and x_max > x_min")
        if not 0 < self.cfl <= 1:
            raise ConfigError(f"CFL must lie in (0, 1], got {self.cfl}")
        if not self.dt > 0:
            raise ConfigError("time step must be positive")

    @classmethod
    def from_cfl(cls, x_min: float, x_max: float, n: int, cfl: float, c_max: float) -> Grid:
        dx = (x_max - x_min) / (n - 1)
        return cls(x_min, x_max, n, cfl, cfl * dx / c_max)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + np.arange(self.n) * self.dx

    def with_dt(self, dt: float, c_max: float) -> Grid:
        """Same nodes, smaller time step (the CFL number is recomputed)."""
        return Grid(self.x_min, self.x_max, self.n, c_max * dt / self.dx, dt)


@dataclass(frozen=True)
class FieldState:
    t: float
    v: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if self.v.shape != self.sigma.shape or self.v.ndim != 1:
            raise ValueError("v and sigma must be 1-D arrays of equal length")

    @classmethod
    def zeros(cls, n: int, t: float = 0.0) -> FieldState:
        return cls(t, np.zeros(n), np.zeros(n))


@dataclass(frozen=True)
class WaveletSpec:
    """C^6 compactly supported combination of four sinusoids."""

    epsilon: float
    f_c: float
    t0: float
    a: tuple[float, ...] = field(default=WAVELET_A, repr=False)
    beta: tuple[float, ...] = field(default=WAVELET_BETA, repr=False)

    @property
    def omega_c(self) -> float:
        return 2.0 * math.pi * self.f_c

    @property
    def duration(self) -> float:
        return 1.0 / self.f_c


@dataclass(frozen=True)
class SourceSpec:
    """Time-harmonic mass source ``delta(x - x_s) (0, epsilon sin(omega_c t))``."""

    x_s: float
    epsilon: float
    omega_c: float

    def __post_init__(self):
        if self.epsilon < 0:
            raise ConfigError("source amplitude must be non-negative")

    @property
    def f_c(self) -> float:
        return self.omega_c / (2.0 * math.pi)


def _wavelet_shape(spec: WaveletSpec, xi):
    xi = np.asarray(xi, dtype=float)
    total = np.zeros_like(xi)
    for a_m, b_m in zip(spec.a, spec.beta):
        total += a_m * np.sin(b_m * spec.omega_c * xi)
    return total


def wavelet_eval(spec: WaveletSpec, xi):
    """h(xi): ``epsilon * sum a_m sin(beta_m omega_c xi)`` on (0, 1/f_c), else 0."""
    xi = np.asarray(xi, dtype=float)
    inside = (xi > 0.0) & (xi < spec.duration)
    out = np.where(inside, spec.epsilon * _wavelet_shape(spec, xi), 0.0)
    return out if out.ndim else float(out)


def wavelet_peak(spec: WaveletSpec) -> float:
    """max over xi of |sum a_m sin(beta_m omega_c xi)| (unit epsilon)."""
    xi = np.linspace(0.0, spec.duration, 4001)
    vals = np.abs(_wavelet_shape(spec, xi))
    i = int(np.argmax(vals))
    lo, hi = xi[max(i - 1, 0)], xi[min(i + 1, xi.size - 1)]
    res = minimize_scalar(
        lambda s: -abs(float(_wavelet_shape(spec, s))),
        bracket=(lo, xi[i], hi),
        method="golden",
        tol=1e-12,
    )
    return max(-float(res.fun), float(vals[i]))


def epsilon_for_peak_velocity(v0: float, f_c: float, medium: MaterialParams) -> float:
    """Wavelet amplitude giving peak |v| = v0 for the right-going initial pulse."""
    unit = WaveletSpec(1.0, f_c, 0.0)
    return v0 * medium.c / wavelet_peak(unit)


def source_epsilon_for_velocity(v0: float, medium: MaterialParams) -> float:
    """Source amplitude radiating a velocity wave of amplitude v0.

    A stress-rate point source of strength eps splits into two waves of
    velocity amplitude eps / (2 rho c^2).
    """
    return 2.0 * medium.modulus * v0


def initial_fields(spec: WaveletSpec, medium: MaterialParams, x):
    """Right-going pulse U0(x) = (-1/c0, rho0) h(t0 - x/c0)."""
    h = wavelet_eval(spec, spec.t0 - np.asarray(x, dtype=float) / medium.c)
    return -h / medium.c, medium.rho * h


def initial_support(spec: WaveletSpec, medium: MaterialParams) -> tuple[float, float]:
    """Open x-interval carrying the initial pulse."""
    return medium.c * (spec.t0 - spec.duration), medium.c * spec.t0


def initial_condition(grid: Grid, spec: WaveletSpec, medium: MaterialParams,
                      alpha: float | None = None) -> FieldState:
    if alpha is not None and initial_support(spec, medium)[1] > alpha:
        raise ConfigError("initial pulse support overlaps the fracture; it must lie left of alpha")
    v, sigma = initial_fields(spec, medium, grid.x)
    return FieldState(spec.t0, np.asarray(v, dtype=float), np.asarray(sigma, dtype=float))


def peak_velocity(state: FieldState) -> float:
    return float(np.max(np.abs(state.v))) if state.v.size else 0.0
