import numpy as np
import pytest
import sympy as sp

from fracwave.fracture import (InadmissibleStress, LeftTraces, apply_D0, build_jump_operators,
                               displacement_jump, fracture_potential_energy, linear_D1,
                               trace_atoms)
from fracwave.model import FractureParams, MaterialParams

from conftest import BB, ROCK

SOFT = MaterialParams(2000.0, 1500.0)


def random_traces(rng, order, v=0.05, kappa=0.1, z=ROCK.impedance):
    scale = v * kappa ** np.arange(order + 1)
    dv = rng.uniform(-1, 1, order + 1) * scale
    ds = rng.uniform(-1, 1, order + 1) * scale * z
    return LeftTraces(dv, ds)


# -- constitutive law -----------------------------------------------------------

def test_displacement_jump_examples():
    Kd, d = BB.Kd, BB.d
    assert displacement_jump(BB, 0.0) == 0.0
    assert displacement_jump(BB, -Kd) == pytest.approx(-d / 2, rel=1e-15)
    assert displacement_jump(BB, Kd / 2) == pytest.approx(d, rel=1e-15)


def test_inadmissible_branch_rejected():
    for s in (BB.Kd, 2 * BB.Kd, np.nan):
        with pytest.raises(InadmissibleStress):
            displacement_jump(BB, s)
    with pytest.raises(InadmissibleStress):
        fracture_potential_energy(BB, BB.Kd)
    with pytest.raises(InadmissibleStress):
        apply_D0(BB, ROCK, 0.0, BB.Kd * 1.5, 0.0)


def test_non_penetration_and_monotonicity():
    s = -np.logspace(-6, 6, 4000)[::-1] * BB.Kd
    s = np.concatenate([s, np.linspace(0, 0.999 * BB.Kd, 2000)])
    u = displacement_jump(BB, s)
    assert np.all(u > -BB.d)
    assert np.all(np.diff(u) > 0)


def test_tangent_at_origin_is_linear_spring():
    h = 1e-3 * BB.Kd
    slope = (displacement_jump(BB, h) - displacement_jump(BB, -h)) / (2 * h)
    assert slope == pytest.approx(1.0 / BB.K, rel=1e-5)


def test_potential_energy_examples():
    Kd2 = BB.K * BB.d**2
    assert fracture_potential_energy(BB, 0.0) == 0.0
    assert fracture_potential_energy(BB, BB.Kd / 2) == pytest.approx(Kd2 * (1 - np.log(2)), rel=1e-13)
    s = 1e-4 * BB.Kd
    assert fracture_potential_energy(BB, s) == pytest.approx(s**2 / (2 * BB.K), rel=1e-3)


def test_potential_energy_positive():
    s = np.concatenate([-np.logspace(-8, 3, 500), np.logspace(-8, -1e-9, 500)]) * BB.Kd
    assert np.all(fracture_potential_energy(BB, s) > 0.0)
    # continuity across the series / closed-form switch
    edge = 1e-3 * BB.Kd
    lo = fracture_potential_energy(BB, edge * (1 - 1e-9))
    hi = fracture_potential_energy(BB, edge * (1 + 1e-9))
    assert lo == pytest.approx(hi, rel=1e-6)


def test_apply_D0_examples():
    assert apply_D0(BB, ROCK, 0.3, -1e5, 0.0) == (0.3, -1e5)
    v_plus, _ = apply_D0(BB, ROCK, 0.0, 0.0, 1.0)
    assert v_plus == pytest.approx(9.408e9 / 1.3e9, rel=1e-14)
    assert v_plus == pytest.approx(7.23692, abs=1e-5)
    v_plus, s_plus = apply_D0(BB, ROCK, 0.0, -BB.Kd, 1.0)
    assert v_plus == pytest.approx(ROCK.modulus / (4 * BB.K), rel=1e-14) and s_plus == -BB.Kd


# -- generated operators ----------------------------------------------------------

def test_D0_matches_closed_form(ops5):
    rng = np.random.default_rng(1)
    for _ in range(1000):
        t = LeftTraces(rng.uniform(-1, 1, 2) * [1.0, 0.5],
                       [rng.uniform(-20, 0.9) * BB.Kd, rng.uniform(-1, 1) * 1e4])
        got = ops5.evaluate(0, t)
        want = apply_D0(BB, ROCK, t.dv[0], t.dsigma[0], t.dv[1])
        assert got[0] == pytest.approx(want[0], rel=1e-13, abs=1e-300)
        assert got[1] == want[1]


def _sympy_operators(params, left, right, m_max):
    """Independent derivation of D_0..D_m_max with sympy."""
    n = m_max + 2
    v = sp.symbols(f"v0:{n + 1}")
    s = sp.symbols(f"s0:{n + 1}")
    rho0, mod0, rho1, mod1 = (sp.Float(x, 30) for x in (left.rho, left.modulus, right.rho, right.modulus))
    K, Kd = sp.Float(params.K, 30), sp.Float(params.Kd, 30)

    def ddt(f):
        return sum(sp.diff(f, v[j]) * s[j + 1] / rho0 + sp.diff(f, s[j]) * mod0 * v[j + 1]
                   for j in range(n))

    tv = v[0] + mod0 / K * (1 - s[0] / Kd) ** -2 * v[1]
    ts = s[0]
    out = []
    for m in range(m_max + 1):
        if m:
            tv, ts = ddt(tv), ddt(ts)
        dv, ds = tv, ts
        for _ in range(m):
            dv, ds = ds / mod1, rho1 * dv
        out.append(sp.lambdify(v[: n] + s[: n], [dv, ds], "mpmath"))
    return out


@pytest.mark.parametrize("right", [ROCK, SOFT], ids=["same", "contrast"])
def test_operators_match_independent_symbolic_derivation(right):
    ops = build_jump_operators(BB, ROCK, right, 4)
    ref = _sympy_operators(BB, ROCK, right, 4)
    rng = np.random.default_rng(2)
    for _ in range(5):
        t = random_traces(rng, ops.order)
        t = LeftTraces(t.dv, np.r_[-0.4 * BB.Kd, t.dsigma[1:]])
        vals, _ = ops.evaluate_all(t)
        args = list(t.dv) + list(t.dsigma)
        for m in range(ops.m_max + 1):
            want = [float(w) for w in ref[m](*args)]
            np.testing.assert_allclose(vals[m], want, rtol=1e-11)


def test_jacobians_match_finite_differences(ops5):
    rng = np.random.default_rng(3)
    layout = trace_atoms(ops5.order)
    for _ in range(4):
        t = random_traces(rng, ops5.order)
        t = LeftTraces(t.dv, np.r_[rng.uniform(-0.6, 0.3) * BB.Kd, t.dsigma[1:]])
        z = t.flat()
        _, jac = ops5.evaluate_all(t)
        for i in range(len(layout)):
            h = 1e-4 * max(abs(z[i]), 1e-12)
            zp, zm = z.copy(), z.copy()
            zp[i] += h
            zm[i] -= h
            fp, _ = ops5.evaluate_all(LeftTraces.from_flat(zp))
            fm, _ = ops5.evaluate_all(LeftTraces.from_flat(zm))
            fd = (fp - fm) / (2 * h)
            # natural size of d(output)/d(z_i): |output sensitivity| summed over inputs
            ref = np.sum(np.abs(jac * z), axis=2) / abs(z[i])
            assert np.all(np.abs(fd - jac[:, :, i]) <= 1e-6 * ref)


def test_linear_limit_of_first_order_operator(ops5):
    rng = np.random.default_rng(4)
    base = random_traces(rng, ops5.order)
    lin = build_jump_operators(BB, ROCK, SOFT, 5, linear=True)
    np.testing.assert_allclose(lin.evaluate(1, base), linear_D1(BB, ROCK, SOFT, base), rtol=1e-13)
    prev = None
    for lam in (1e-1, 1e-2, 1e-3, 1e-4):
        t = LeftTraces(base.dv * lam, base.dsigma * lam)
        got = np.array(ops5.evaluate(1, t))
        want = np.array(linear_D1(BB, ROCK, ROCK, t))
        rel = np.max(np.abs(got - want)) / np.max(np.abs(want))
        if prev is not None:
            assert rel < 0.2 * prev  # nonlinear part vanishes linearly in lambda
        prev = rel
    assert prev < 1e-5


def _wave_traces(t, order, z=ROCK.impedance, c=ROCK.c):
    """Traces at alpha of an exact left-medium solution made of two sine waves."""
    a, kr = 0.04, 0.09      # right-going amplitude (m/s), wavenumber (1/m)
    b, kl = 0.015, 0.13     # left-going
    alpha = BB.alpha
    dv, ds = np.zeros(order + 1), np.zeros(order + 1)
    for j in range(order + 1):
        fr = a * kr**j * np.sin(kr * (alpha - c * t) + 0.3 + j * np.pi / 2)
        fl = b * kl**j * np.sin(kl * (alpha + c * t) - 1.1 + j * np.pi / 2)
        dv[j] = fr + fl
        ds[j] = -z * fr + z * fl
    return LeftTraces(dv, ds)


@pytest.mark.parametrize("right", [ROCK, SOFT], ids=["same", "contrast"])
def test_time_consistency_along_exact_wave(right):
    """d/dt D_m(traces(t)) = (-A1) D_{m+1}(traces(t))."""
    ops = build_jump_operators(BB, ROCK, right, 6)
    for t in (0.0, 0.0031, 0.017):
        vals, _ = ops.evaluate_all(_wave_traces(t, ops.order))
        for h in (1e-6, 5e-7):
            fp, _ = ops.evaluate_all(_wave_traces(t + h, ops.order))
            fm, _ = ops.evaluate_all(_wave_traces(t - h, ops.order))
            fd = (fp - fm) / (2 * h)
            for m in range(ops.m_max):
                nxt = vals[m + 1]
                want = np.array([nxt[1] / right.rho, right.modulus * nxt[0]])
                np.testing.assert_allclose(fd[m], want, rtol=2e-6,
                                           atol=1e-9 * np.max(np.abs(want)))


def test_evaluation_rejects_pole(ops5):
    t = LeftTraces.zeros(2)
    bad = LeftTraces(t.dv, np.r_[BB.Kd, 0.0, 0.0])
    with pytest.raises(InadmissibleStress):
        ops5.evaluate_all(bad)


def test_build_rejects_negative_order():
    with pytest.raises(ValueError):
        build_jump_operators(BB, ROCK, ROCK, -1)
