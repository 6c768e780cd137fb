"""ADER-r time marching (r = 2, 4) for dU/dt + A dU/dx = 0 at regular points.

For constant-coefficient linear systems the ADER scheme reduces to the
Cauchy-Kowalewski / Lax-Wendroff update::

    U_i^{n+1} = U_i^n + sum_{m=1}^{r} dt^m / m! (-A)^m D_x^m U_i^n

with centred (2s+1)-point difference operators D_x^m, s = r/2.  The
resulting update shifts the degree-2s interpolant of the stencil exactly
along each characteristic, which is stable up to CFL = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import FieldState, Grid, MaterialParams

_TABLES = {
    2: (
        np.array([-0.5, 0.0, 0.5]),
        np.array([1.0, -2.0, 1.0]),
    ),
    4: (
        np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
        np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0,
        np.array([-1.0, 2.0, 0.0, -2.0, 1.0]) / 2.0,
        np.array([1.0, -4.0, 6.0, -4.0, 1.0]),
    ),
}


class NumericBlowup(FloatingPointError):
    def __init__(self, index: int, t: float):
        super().__init__(f"non-finite field value at grid index {index}, t = {t:.9g} s")
        self.index = index
        self.t = t


@dataclass(frozen=True)
class SchemeSpec:
    """ADER order ``r``; ``tables[m-1]`` holds the unscaled D_x^m weights on offsets -s..s."""

    r: int

    def __post_init__(self):
        if self.r not in _TABLES:
            raise ValueError(f"ADER order must be 2 or 4, got {self.r}")

    @property
    def s(self) -> int:
        return self.r // 2

    @property
    def tables(self) -> tuple[np.ndarray, ...]:
        return _TABLES[self.r]

    def derivative(self, m: int, f, dx: float):
        """D_x^m applied to a (2s+1, ...) window."""
        return np.tensordot(self.tables[m - 1], np.asarray(f, dtype=float), axes=1) / dx**m


def propagator_terms(spec: SchemeSpec, medium: MaterialParams, dt: float) -> np.ndarray:
    """Stack of dt^m / m! (-A)^m for m = 1..r, shape (r, 2, 2)."""
    minus_a = -medium.matrix()
    out = np.empty((spec.r, 2, 2))
    power = np.eye(2)
    for m in range(1, spec.r + 1):
        power = power @ minus_a
        out[m - 1] = dt**m / math.factorial(m) * power
    return out


def regular_step(spec: SchemeSpec, medium: MaterialParams, grid: Grid, window) -> np.ndarray:
    """Increment H(window) at the centre of a (2s+1, 2) window of (v, sigma) pairs."""
    window = np.asarray(window, dtype=float)
    if window.shape != (2 * spec.s + 1, 2):
        raise ValueError(f"window must have shape {(2 * spec.s + 1, 2)}")
    terms = propagator_terms(spec, medium, grid.dt)
    inc = np.zeros(2)
    for m in range(1, spec.r + 1):
        inc += terms[m - 1] @ spec.derivative(m, window, grid.dx)
    return inc


def irregular_indices(spec: SchemeSpec, J: int) -> range:
    return range(J - spec.s + 1, J + spec.s + 1)


def sweep_increments(spec: SchemeSpec, terms_per_node: np.ndarray, dx: float,
                     v: np.ndarray, sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Increments at every node; outside the grid the field is taken as zero.

    ``terms_per_node`` has shape (r, n, 2, 2) (one propagator stack per node).
    """
    s, n = spec.s, v.size
    vp = np.concatenate([np.zeros(s), v, np.zeros(s)])
    sp = np.concatenate([np.zeros(s), sigma, np.zeros(s)])
    dv = np.zeros(n)
    ds = np.zeros(n)
    for m in range(1, spec.r + 1):
        w = spec.tables[m - 1]
        Dv = sum(w[k] * vp[k:k + n] for k in range(2 * s + 1) if w[k] != 0.0) / dx**m
        Ds = sum(w[k] * sp[k:k + n] for k in range(2 * s + 1) if w[k] != 0.0) / dx**m
        P = terms_per_node[m - 1]
        dv += P[:, 0, 0] * Dv + P[:, 0, 1] * Ds
        ds += P[:, 1, 0] * Dv + P[:, 1, 1] * Ds
    return dv, ds


def node_terms(spec: SchemeSpec, media: tuple[MaterialParams, MaterialParams],
               grid: Grid, J: int | None) -> np.ndarray:
    """Per-node propagator stacks: left medium for i <= J, right medium beyond."""
    left = propagator_terms(spec, media[0], grid.dt)
    out = np.broadcast_to(left[:, None], (spec.r, grid.n, 2, 2)).copy()
    if J is not None:
        out[:, J + 1:] = propagator_terms(spec, media[1], grid.dt)[:, None]
    return out


def full_sweep(spec: SchemeSpec, media, grid: Grid, J: int | None, state: FieldState,
               terms: np.ndarray | None = None) -> FieldState:
    """Advance every regular point by one step; irregular points keep U^n.

    ``J`` is the interface cell index (``None`` for an unfractured medium).
    """
    if terms is None:
        terms = node_terms(spec, media, grid, J)
    dv, ds = sweep_increments(spec, terms, grid.dx, state.v, state.sigma)
    if J is not None:
        irr = slice(J - spec.s + 1, J + spec.s + 1)
        dv[irr] = 0.0
        ds[irr] = 0.0
    v = state.v + dv
    sigma = state.sigma + ds
    check_finite(v, sigma, state.t + grid.dt)
    return FieldState(state.t + grid.dt, v, sigma)


def check_finite(v: np.ndarray, sigma: np.ndarray, t: float) -> None:
    bad = ~(np.isfinite(v) & np.isfinite(sigma))
    if bad.any():
        raise NumericBlowup(int(np.flatnonzero(bad)[0]), t)
