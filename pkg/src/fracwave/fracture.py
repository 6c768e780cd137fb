"""Bandis-Barton fracture: closure law, velocity-stress jump operators, energy.

The m-th order operator maps left traces ``d^j U(alpha^-)``, j = 0..m+1,
to ``d^m U(alpha^+)``.  It is generated symbolically: the time form of the
zeroth-order condition is differentiated m times (left-side time derivatives
are traded for space derivatives with the left-medium PDE) and the result is
mapped to right-side space derivatives with ``(-A1)^{-m}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import expr as ex
from .model import FractureParams, MaterialParams

# Evaluation refuses sigma^- closer than this (relative) to the pole K d.
POLE_MARGIN = 1e-12


class InadmissibleStress(ValueError):
    """sigma(alpha^-) reached the non-physical branch sigma >= K d."""


def _check_admissible(params: FractureParams, sigma_minus) -> None:
    limit = params.Kd * (1.0 - POLE_MARGIN)
    if np.any(np.asarray(sigma_minus) > limit) or not np.all(np.isfinite(sigma_minus)):
        raise InadmissibleStress(
            f"sigma(alpha-) = {np.max(sigma_minus):.6g} Pa violates sigma < K d = {params.Kd:.6g} Pa")


def displacement_jump(params: FractureParams, sigma_minus):
    """[u] = (1/K) sigma / (1 - sigma/(K d)); always > -d on the admissible branch."""
    _check_admissible(params, sigma_minus)
    s = np.asarray(sigma_minus, dtype=float)
    out = s / (params.K * (1.0 - s / params.Kd))
    return out if out.ndim else float(out)


def fracture_potential_energy(params: FractureParams, sigma_minus):
    """K d^2 (ln theta + 1/theta - 1), theta = 1 - sigma/(K d); energy per unit area."""
    _check_admissible(params, sigma_minus)
    u = np.asarray(sigma_minus, dtype=float) / params.Kd
    # ln(1-u) + u/(1-u) cancels catastrophically near u = 0: sum (1 - 1/n) u^n there
    series = sum((1.0 - 1.0 / n) * u**n for n in range(2, 9))
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = np.log1p(-u) + u / (1.0 - u)
    g = np.where(np.abs(u) < 1e-3, series, closed)
    out = params.K * params.d**2 * g
    return out if out.ndim else float(out)


def apply_D0(params: FractureParams, left: MaterialParams, v_minus: float,
             sigma_minus: float, dv_dx_minus: float) -> tuple[float, float]:
    """Closed-form zeroth-order jump operator."""
    _check_admissible(params, sigma_minus)
    theta = 1.0 - sigma_minus / params.Kd
    return v_minus + left.modulus / params.K / theta**2 * dv_dx_minus, sigma_minus


@dataclass(frozen=True)
class LeftTraces:
    """``dv[m]`` and ``dsigma[m]`` are d^m v / dx^m and d^m sigma / dx^m at alpha^-."""

    dv: np.ndarray
    dsigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dv", np.asarray(self.dv, dtype=float))
        object.__setattr__(self, "dsigma", np.asarray(self.dsigma, dtype=float))
        if self.dv.shape != self.dsigma.shape or self.dv.ndim != 1:
            raise ValueError("trace arrays must be 1-D and of equal length")

    @property
    def order(self) -> int:
        return self.dv.size - 1

    @classmethod
    def zeros(cls, order: int) -> LeftTraces:
        return cls(np.zeros(order + 1), np.zeros(order + 1))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.dv, self.dsigma])

    @classmethod
    def from_flat(cls, z) -> LeftTraces:
        z = np.asarray(z, dtype=float)
        half = z.size // 2
        return cls(z[:half].copy(), z[half:].copy())

    def padded(self, order: int) -> LeftTraces:
        """Zero-extend (or truncate) to the given order."""
        dv = np.zeros(order + 1)
        ds = np.zeros(order + 1)
        m = min(order, self.order) + 1
        dv[:m], ds[:m] = self.dv[:m], self.dsigma[:m]
        return LeftTraces(dv, ds)


def trace_atoms(order: int) -> list[ex.Atom]:
    """Atom layout used by compiled operators: v0..v_order, s0..s_order."""
    return [ex.Atom("v", j) for j in range(order + 1)] + [ex.Atom("s", j) for j in range(order + 1)]


@dataclass(frozen=True)
class JumpOperatorSet:
    """Operators D_0..D_{m_max} as expression pairs, with their Jacobians.

    ``ops[m] = (v_expr, s_expr)``; ``jacobians[m][c][i]`` is the partial of
    component c with respect to atom ``trace_atoms(m_max + 1)[i]``.
    """

    m_max: int
    ops: tuple
    jacobians: tuple
    alpha: float
    Kd: float
    linear: bool = False
    _evaluator: object = field(default=None, repr=False, compare=False)

    @property
    def order(self) -> int:
        """Highest trace order the operators read (m_max + 1)."""
        return self.m_max + 1

    def evaluate_all(self, traces: LeftTraces) -> tuple[np.ndarray, np.ndarray]:
        """Values ``(m_max+1, 2)`` and Jacobians ``(m_max+1, 2, 2*(m_max+2))``.

        ``traces`` is zero-padded or truncated to order m_max + 1.
        """
        t = traces.padded(self.order)
        if not self.linear and not t.dsigma[0] <= self.Kd * (1.0 - POLE_MARGIN):
            raise InadmissibleStress(
                f"sigma(alpha-) = {t.dsigma[0]:.6g} Pa violates sigma < K d = {self.Kd:.6g} Pa")
        out = np.asarray(self._evaluator(t.flat().tolist()))
        nm = self.m_max + 1
        na = 2 * (self.order + 1)
        return out[: 2 * nm].reshape(nm, 2), out[2 * nm:].reshape(nm, 2, na)

    def evaluate(self, m: int, traces: LeftTraces) -> tuple[float, float]:
        vals, _ = self.evaluate_all(traces)
        return float(vals[m, 0]), float(vals[m, 1])

    def dump(self, path: str | Path) -> None:
        """Write every operator in prefix notation, one ``D<m>.<v|s> = ...`` line each."""
        lines = []
        for m, (ev, es) in enumerate(self.ops):
            lines.append(f"D{m}.v = {ex.to_prefix(ev)}")
            lines.append(f"D{m}.s = {ex.to_prefix(es)}")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")


def _time_form(params: FractureParams, left: MaterialParams, linear: bool):
    """(v^+, sigma^+) with the sigma^- time derivative already in space form."""
    v0, v1, s0 = ex.Atom("v", 0), ex.Atom("v", 1), ex.Atom("s", 0)
    coeff = left.modulus / params.K
    if linear:
        jump = ex.mul(coeff, v1)
    else:
        theta = ex.add(1.0, ex.mul(-1.0 / params.Kd, s0))
        jump = ex.mul(coeff, ex.power(theta, -2), v1)
    return ex.add(v0, jump), s0


def build_jump_operators(params: FractureParams, left: MaterialParams,
                         right: MaterialParams, m_max: int,
                         linear: bool = False) -> JumpOperatorSet:
    """Generate D_0..D_m_max.  ``linear=True`` uses [u] = sigma/K instead."""
    if m_max < 0:
        raise ValueError("m_max must be >= 0")

    def rule(a: ex.Atom) -> ex.Expr:
        # left-medium PDE: v_t = sigma_x / rho0, sigma_t = rho0 c0^2 v_x
        if a.name == "v":
            return ex.mul(1.0 / left.rho, ex.Atom("s", a.order + 1))
        return ex.mul(left.modulus, ex.Atom("v", a.order + 1))

    tv, ts = _time_form(params, left, linear)
    ops = []
    for m in range(m_max + 1):
        if m:
            tv, ts = ex.time_derivative(tv, rule), ex.time_derivative(ts, rule)
        # d^m_x U^+ = (-A1)^{-m} d^m_t U^+ ; (-A1)^{-1} (v, s) = (s / (rho1 c1^2), rho1 v)
        dv, ds = tv, ts
        for _ in range(m):
            dv, ds = ex.mul(1.0 / right.modulus, ds), ex.mul(right.rho, dv)
        ops.append((dv, ds))

    layout = trace_atoms(m_max + 1)
    jacs = tuple(
        tuple(tuple(ex.partial(comp, a) for a in layout) for comp in pair)
        for pair in ops
    )
    flat = [c for pair in ops for c in pair]
    flat += [d for jm in jacs for row in jm for d in row]
    fn = ex.compile_exprs(flat, {a: i for i, a in enumerate(layout)}, name=f"jump_ops_{m_max}")
    return JumpOperatorSet(m_max, tuple(ops), jacs, params.alpha, params.Kd, linear, fn)


def linear_D1(params: FractureParams, left: MaterialParams, right: MaterialParams,
              traces: LeftTraces) -> tuple[float, float]:
    """First-order jump for the linear spring [u] = sigma/K, derived by hand."""
    v1, s1, s2 = traces.dv[1], traces.dsigma[1], traces.dsigma[2]
    dv_plus = left.modulus / right.modulus * v1
    ds_plus = right.rho / left.rho * s1 + right.rho * left.c**2 / params.K * s2
    return dv_plus, ds_plus
