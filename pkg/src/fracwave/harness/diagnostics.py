"""Energy, error norms, convergence orders, source injection and harmonic analysis."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..fracture import fracture_potential_energy
from ..model import FieldState, FractureParams, Grid, MaterialParams, SourceSpec

log = logging.getLogger(__name__)


def bulk_energy_density(medium: MaterialParams, v, sigma):
    return 0.5 * (medium.rho * np.square(v) + np.square(sigma) / medium.modulus)


def total_energy(state: FieldState, grid: Grid, media: tuple[MaterialParams, MaterialParams],
                 params: FractureParams | None = None, J: int | None = None,
                 minus: tuple[float, float] | None = None,
                 plus: tuple[float, float] | None = None) -> float:
    """Trapezoid bulk energy split at alpha plus the fracture potential energy.

    ``minus``/``plus`` are the (v, sigma) limits at alpha^-/alpha^+ used to
    close the two partial cells; they default to the nearest nodal values.
    Without a fracture the whole grid is one medium (``media[0]``).
    """
    x = grid.x
    if params is None or J is None:
        return float(np.trapezoid(bulk_energy_density(media[0], state.v, state.sigma), x))
    if minus is None:
        minus = (state.v[J], state.sigma[J])
    if plus is None:
        plus = (state.v[J + 1], state.sigma[J + 1])
    alpha = params.alpha
    xl = np.append(x[:J + 1], alpha)
    el = bulk_energy_density(media[0], np.append(state.v[:J + 1], minus[0]),
                             np.append(state.sigma[:J + 1], minus[1]))
    xr = np.insert(x[J + 1:], 0, alpha)
    er = bulk_energy_density(media[1], np.insert(state.v[J + 1:], 0, plus[0]),
                             np.insert(state.sigma[J + 1:], 0, plus[1]))
    return float(np.trapezoid(el, xl) + np.trapezoid(er, xr) + fracture_potential_energy(params, minus[1]))


def l1_error(numeric, reference, dx: float) -> float:
    """sum_i |numeric_i - reference_i| dx over every node."""
    numeric = np.asarray(numeric, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if numeric.shape != reference.shape:
        raise ValueError(f"grid mismatch: {numeric.shape} vs {reference.shape}")
    return float(np.sum(np.abs(numeric - reference)) * dx)


@dataclass
class ErrorTable:
    n: list[int] = field(default_factory=list)
    dx: list[float] = field(default_factory=list)
    l1_error: list[float] = field(default_factory=list)

    def add(self, n: int, dx: float, err: float) -> None:
        self.n.append(n)
        self.dx.append(dx)
        self.l1_error.append(err)

    @property
    def observed_order(self) -> list[float]:
        """log(e_coarse/e_fine) / log(dx_coarse/dx_fine); NaN on the first row."""
        out = [math.nan]
        for i in range(1, len(self.n)):
            out.append(math.log(self.l1_error[i - 1] / self.l1_error[i])
                       / math.log(self.dx[i - 1] / self.dx[i]))
        return out

    def slope(self) -> float:
        """Least-squares slope of log(error) against log(dx)."""
        return float(np.polyfit(np.log(self.dx), np.log(self.l1_error), 1)[0])

    def rows(self):
        return list(zip(self.n, self.dx, self.l1_error, self.observed_order))


def cubic_delta_weights(grid: Grid, x_s: float) -> tuple[np.ndarray, np.ndarray]:
    """Indices and weights of the 4-point cubic discrete delta at x_s.

    The weights are the cubic Lagrange basis values at x_s: they sum to one
    and reproduce moments up to order three.
    """
    dx = grid.dx
    i0 = int(math.floor((x_s - grid.x_min) / dx))
    idx = np.arange(i0 - 1, i0 + 3)
    if idx[0] < 0 or idx[-1] >= grid.n:
        raise ValueError("source or station too close to the grid boundary")
    xn = grid.x[idx]
    w = np.ones(4)
    for j in range(4):
        for l in range(4):
            if l != j:
                w[j] *= (x_s - xn[l]) / (xn[j] - xn[l])
    return idx, w


def inject_source(state: FieldState, source: SourceSpec, grid: Grid, dt: float,
                  t: float) -> np.ndarray:
    """Stress increment over [t, t + dt] from the point mass source.

    Uses the exact time integral of ``epsilon sin(omega t)`` over the step.
    """
    inc = np.zeros_like(state.sigma)
    if source.epsilon == 0.0:
        return inc
    w_ = source.omega_c
    impulse = source.epsilon * (math.cos(w_ * t) - math.cos(w_ * (t + dt))) / w_
    idx, w = cubic_delta_weights(grid, source.x_s)
    inc[idx] = impulse * w / grid.dx
    return inc


def sample_at(grid: Grid, values: np.ndarray, x: float) -> float:
    """Cubic Lagrange interpolation of nodal values at x."""
    idx, w = cubic_delta_weights(grid, x)
    return float(w @ values[idx])


@dataclass(frozen=True)
class HarmonicSpectrum:
    fundamental: float
    amplitudes: np.ndarray  # normalised, amplitudes[0] is harmonic 1

    @property
    def empty(self) -> bool:
        return self.amplitudes.size == 0


def fourier_harmonics(samples, samples_per_period: int, n_harmonics: int,
                      fundamental: float) -> HarmonicSpectrum:
    """Normalised Fourier-series amplitudes of harmonics 1..n_harmonics.

    ``samples`` must span an integer number of periods.
    """
    samples = np.asarray(samples, dtype=float)
    N = samples.size
    if samples_per_period <= 0 or N == 0 or N % samples_per_period:
        raise ValueError("samples must cover an integer number of periods")
    periods = N // samples_per_period
    if n_harmonics * periods > N // 2:
        raise ValueError("too few samples per period for the requested harmonics")
    spec = np.fft.rfft(samples)
    amps = 2.0 / N * np.abs(spec[periods * np.arange(1, n_harmonics + 1)])
    if amps[0] == 0.0 or not np.isfinite(amps[0]):
        log.warning("zero fundamental: harmonic spectrum undefined")
        return HarmonicSpectrum(fundamental, np.array([]))
    return HarmonicSpectrum(fundamental, amps / amps[0])
