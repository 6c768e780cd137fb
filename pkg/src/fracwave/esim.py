"""Explicit simplified interface method (ESIM) for the nonlinear fracture.

At each time level the one-sided derivatives d^m U(alpha^-), m < 2k, are
estimated by fitting Taylor expansions to the 2k nodes around the interface,
the right-hand nodes being reached through the jump operators D_m.  The
resulting 4k x 4k nonlinear system is solved by damped Newton.  Its solution
yields smooth extensions (modified values) of each side across alpha, which
replace the foreign values in the stencils of the 2s irregular points.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .fracture import POLE_MARGIN, JumpOperatorSet, LeftTraces
from .model import ConfigError, FieldState, Grid, MaterialParams
from .scheme import SchemeSpec, propagator_terms

log = logging.getLogger(__name__)


class NewtonFailure(RuntimeError):
    """The interface system did not converge."""


@dataclass(frozen=True)
class EsimConfig:
    k: int
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    damping: int = 30

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("ESIM half-width k must be >= 1")


@dataclass(frozen=True)
class InterfaceSolution:
    traces: LeftTraces
    converged: bool
    iterations: int
    residual: float


def select_k(r: int, s: int, p: int) -> int:
    """Smallest k with k >= s, 2k - 1 >= r and 2k - 1 <= p."""
    if p < 1:
        raise ConfigError("data regularity p must be >= 1")
    k = max(s, math.ceil((r + 1) / 2), 1)
    if 2 * k - 1 > p:
        raise ConfigError(
            f"initial data not smooth enough: order {r} needs 2k-1 >= {r} but C^{p} data allows 2k-1 <= {p}")
    return k


def locate_interface(grid: Grid, alpha: float, s: int = 1) -> int:
    """Index J with x_J <= alpha < x_{J+1}."""
    dx = grid.dx
    if not (grid.x_min + s * dx < alpha < grid.x_max - s * dx):
        raise ConfigError(f"interface at {alpha} m is too close to the domain boundary")
    J = int(math.floor((alpha - grid.x_min) / dx))
    # guard against rounding in the division
    x = grid.x
    while J + 1 < grid.n and x[J + 1] <= alpha:
        J += 1
    while x[J] > alpha:
        J -= 1
    return J


def taylor_weights(x, alpha: float, order: int) -> np.ndarray:
    """W[i, m] = (x_i - alpha)^m / m!, m = 0..order."""
    h = np.asarray(x, dtype=float) - alpha
    return np.stack([h**m / math.factorial(m) for m in range(order + 1)], axis=-1)


class InterfaceSystem:
    """The Taylor/jump system around one interface for a fixed grid.

    Unknown layout is ``LeftTraces.flat()``: dv_0..dv_{2k-1}, ds_0..ds_{2k-1}.
    Residual rows are (v, sigma) pairs for nodes J-k+1 .. J+k.
    """

    def __init__(self, ops: JumpOperatorSet, grid: Grid, J: int, k: int,
                 left: MaterialParams):
        if ops.m_max < 2 * k - 1:
            raise ValueError(f"need jump operators up to order {2 * k - 1}, have {ops.m_max}")
        if J - k + 1 < 0 or J + k >= grid.n:
            raise ConfigError("Taylor stencil of the interface leaves the grid")
        self.ops, self.grid, self.J, self.k = ops, grid, J, k
        self.Z0 = left.impedance
        self.order = 2 * k - 1
        self.nodes = np.arange(J - k + 1, J + k + 1)
        alpha = ops.alpha
        x = grid.x[self.nodes]
        self.W = taylor_weights(x, alpha, self.order)
        self.W_left, self.W_right = self.W[:k], self.W[k:]
        # the truncated top-order atoms (order 2k) are not unknowns
        top = ops.order
        self._cols = np.r_[0:self.order + 1, top + 1:top + 1 + self.order + 1]
        self.col_scale = np.tile(grid.dx ** np.arange(self.order + 1), 2)

    # -- residual -----------------------------------------------------------
    def _values(self, state: FieldState) -> np.ndarray:
        return np.stack([state.v[self.nodes], state.sigma[self.nodes]], axis=-1)

    def evaluate(self, state: FieldState, z: np.ndarray, need_jac: bool = True):
        k, n = self.k, self.order + 1
        t = LeftTraces(z[:n], z[n:])
        U = self._values(state)
        vals, jacs = self.ops.evaluate_all(t)
        vals, jacs = vals[: n], jacs[: n]
        F = np.empty((2 * k, 2))
        F[:k, 0] = self.W_left @ t.dv - U[:k, 0]
        F[:k, 1] = self.W_left @ t.dsigma - U[:k, 1]
        F[k:] = self.W_right @ vals - U[k:]
        if not need_jac:
            return F.reshape(-1), None
        Jm = np.zeros((2 * k, 2, 2 * n))
        Jm[:k, 0, :n] = self.W_left
        Jm[:k, 1, n:] = self.W_left
        Jm[k:] = np.einsum("im,mca->ica", self.W_right, jacs[:, :, self._cols])
        return F.reshape(-1), Jm.reshape(4 * k, 2 * n)

    def row_scale(self, state: FieldState) -> np.ndarray:
        vs = max(1.0, float(np.max(np.abs(state.v[self.nodes]))))
        return np.tile([1.0 / vs, 1.0 / (self.Z0 * vs)], 2 * self.k)

    # -- Newton -------------------------------------------------------------
    def solve(self, state: FieldState, guess: LeftTraces, config: EsimConfig) -> InterfaceSolution:
        n = self.order + 1
        z = guess.padded(self.order).flat()
        rs = self.row_scale(state)
        pole = self.ops.Kd * (1.0 - POLE_MARGIN)
        F, Jm = self.evaluate(state, z)
        norm = float(np.max(np.abs(F * rs)))
        it = 0
        while norm > config.newton_tol:
            if it >= config.newton_max_iter:
                raise NewtonFailure(
                    f"interface Newton did not converge in {it} iterations at t = {state.t:.9g} s "
                    f"(scaled residual {norm:.3e}); refine the mesh")
            A = Jm * rs[:, None] * self.col_scale[None, :]
            try:
                step = -np.linalg.solve(A, F * rs) * self.col_scale
            except np.linalg.LinAlgError as err:
                raise NewtonFailure(f"singular interface Jacobian at t = {state.t:.9g} s") from err
            lam = 1.0
            if not self.ops.linear and z[n] + step[n] > pole:
                lam = 0.5 * (pole - z[n]) / step[n]
            for _ in range(config.damping + 1):
                trial = z + lam * step
                F_new, _ = self.evaluate(state, trial, need_jac=False)
                new_norm = float(np.max(np.abs(F_new * rs)))
                if new_norm < norm or new_norm <= config.newton_tol:
                    break
                lam *= 0.5
            else:
                raise NewtonFailure(
                    f"interface Newton line search stalled at t = {state.t:.9g} s "
                    f"(scaled residual {norm:.3e}); refine the mesh")
            z = trial
            it += 1
            F, Jm = self.evaluate(state, z)
            norm = float(np.max(np.abs(F * rs)))
        return InterfaceSolution(LeftTraces(z[:n], z[n:]), True, it, norm)


def interface_residual(ops: JumpOperatorSet, grid: Grid, J: int, k: int,
                       state: FieldState, candidate: LeftTraces,
                       left: MaterialParams) -> np.ndarray:
    """Unscaled residual of the 4k Taylor/jump equations (v, sigma per node)."""
    system = InterfaceSystem(ops, grid, J, k, left)
    F, _ = system.evaluate(state, candidate.padded(2 * k - 1).flat(), need_jac=False)
    return F


def solve_interface_system(ops: JumpOperatorSet, grid: Grid, J: int, k: int,
                           state: FieldState, guess: LeftTraces, left: MaterialParams,
                           config: EsimConfig | None = None) -> InterfaceSolution:
    system = InterfaceSystem(ops, grid, J, k, left)
    return system.solve(state, guess, config or EsimConfig(k))


def modified_values(ops: JumpOperatorSet, grid: Grid, J: int, k: int, s: int,
                    solution: InterfaceSolution) -> tuple[np.ndarray, np.ndarray]:
    """Smooth extensions across alpha.

    Returns ``(right_star, left_star)``: ``right_star[j]`` (shape (s, 2)) is the
    left solution continued to node J+1+j; ``left_star[j]`` is the right
    solution continued back to node J-s+1+j.
    """
    order = 2 * k - 1
    alpha = ops.alpha
    x = grid.x
    traces = solution.traces.padded(order)
    minus = np.stack([traces.dv, traces.dsigma], axis=-1)
    plus, _ = ops.evaluate_all(traces.padded(order))
    plus = plus[: order + 1]
    right_star = taylor_weights(x[J + 1:J + s + 1], alpha, order) @ minus
    left_star = taylor_weights(x[J - s + 1:J + 1], alpha, order) @ plus
    return right_star, left_star


def step_irregular(spec: SchemeSpec, media: tuple[MaterialParams, MaterialParams],
                   grid: Grid, J: int, state: FieldState,
                   modified: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """Increments (2s, 2) for nodes J-s+1..J+s using modified foreign values."""
    s = spec.s
    right_star, left_star = modified
    U = np.stack([state.v, state.sigma], axis=-1)
    # nodes J-2s+1..J+s as seen from the left, J-s+1..J+2s as seen from the right
    left_buf = np.vstack([_rows(U, J - 2 * s + 1, J + 1), right_star])
    right_buf = np.vstack([left_star, _rows(U, J + 1, J + 2 * s + 1)])
    out = np.zeros((2 * s, 2))
    for side, buf, medium in ((0, left_buf, media[0]), (1, right_buf, media[1])):
        terms = propagator_terms(spec, medium, grid.dt)
        for j in range(s):
            window = buf[j:j + 2 * s + 1]
            for m in range(1, spec.r + 1):
                out[side * s + j] += terms[m - 1] @ spec.derivative(m, window, grid.dx)
    return out


def _rows(U: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """U[lo:hi] with rows outside the grid taken as zero."""
    out = np.zeros((hi - lo, 2))
    a, b = max(lo, 0), min(hi, U.shape[0])
    out[a - lo:b - lo] = U[a:b]
    return out
