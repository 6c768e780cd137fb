import math

import numpy as np
import pytest

from fracwave.model import FieldState, Grid, MaterialParams
from fracwave.scheme import (NumericBlowup, SchemeSpec, check_finite, full_sweep, node_terms,
                             propagator_terms, regular_step)

from conftest import ROCK

ORDERS = [2, 4]


def grid(n=201, cfl=0.9, c=ROCK.c, length=200.0):
    return Grid.from_cfl(0.0, length, n, cfl, c)


@pytest.mark.parametrize("r", ORDERS)
def test_constant_window_gives_zero_increment(r):
    spec = SchemeSpec(r)
    window = np.tile([0.3, -1.2e5], (2 * spec.s + 1, 1))
    assert np.all(np.abs(regular_step(spec, ROCK, grid(), window)) < 1e-12 * 1.2e5)


@pytest.mark.parametrize("r", ORDERS)
def test_tables_exact_on_monomials(r):
    spec = SchemeSpec(r)
    dx = 0.37
    offsets = np.arange(-spec.s, spec.s + 1) * dx
    x0 = 0.0
    for m in range(1, r + 1):
        for p in range(2 * spec.s + 1):
            f = (x0 + offsets) ** p
            exact = math.factorial(p) / math.factorial(p - m) * x0 ** (p - m) if p >= m else 0.0
            assert spec.derivative(m, f, dx) == pytest.approx(exact, abs=1e-9)


def test_second_order_is_lax_wendroff():
    spec = SchemeSpec(2)
    g = grid()
    rng = np.random.default_rng(0)
    w = rng.normal(size=(3, 2)) * [1.0, ROCK.impedance]
    nu = g.dt / g.dx
    A = ROCK.matrix()
    lw = -0.5 * nu * A @ (w[2] - w[0]) + 0.5 * nu**2 * A @ A @ (w[2] - 2 * w[1] + w[0])
    np.testing.assert_allclose(regular_step(spec, ROCK, g, w), lw, rtol=1e-13)


@pytest.mark.parametrize("r", ORDERS)
def test_cfl_one_is_exact_shift(r):
    spec = SchemeSpec(r)
    g = grid(cfl=1.0)
    x = g.x
    f = np.exp(-((x - 80.0) / 9.0) ** 2) * np.sin(x / 3.0)
    st = FieldState(0.0, f, -ROCK.impedance * f)
    nxt = full_sweep(spec, (ROCK, ROCK), g, None, st)
    inner = slice(spec.s + 1, -spec.s - 1)
    np.testing.assert_allclose(nxt.v[inner], np.roll(f, 1)[inner], atol=1e-15 * 1)
    np.testing.assert_allclose(nxt.sigma[inner], -ROCK.impedance * np.roll(f, 1)[inner],
                               atol=1e-15 * ROCK.impedance)


@pytest.mark.parametrize("r", ORDERS)
def test_polynomial_solution_advanced_exactly(r):
    """Any polynomial solution of total degree <= r is reproduced exactly."""
    spec = SchemeSpec(r)
    g = Grid.from_cfl(-3.0, 3.0, 25, 0.8, ROCK.c)
    c, z = ROCK.c, ROCK.impedance
    rng = np.random.default_rng(r)
    pr = np.polynomial.Polynomial(rng.normal(size=r + 1))
    pl = np.polynomial.Polynomial(rng.normal(size=r + 1))

    def exact(t):
        fr, fl = pr(g.x - c * t), pl(g.x + c * t)
        return fr + fl, z * (fl - fr)

    v, s = exact(0.0)
    nxt = full_sweep(spec, (ROCK, ROCK), g, None, FieldState(0.0, v, s))
    ve, se = exact(g.dt)
    inner = slice(spec.s, -spec.s)
    np.testing.assert_allclose(nxt.v[inner], ve[inner], rtol=1e-9, atol=1e-9 * np.abs(ve).max())
    np.testing.assert_allclose(nxt.sigma[inner], se[inner], rtol=1e-9, atol=1e-9 * np.abs(se).max())


@pytest.mark.parametrize("r", ORDERS)
def test_mirror_symmetry(r):
    spec = SchemeSpec(r)
    g = Grid.from_cfl(-100.0, 100.0, 201, 0.9, ROCK.c)
    x = g.x
    v = np.exp(-((x - 20.0) / 6.0) ** 2)
    s = 0.3 * ROCK.impedance * np.exp(-((x + 10.0) / 5.0) ** 2)
    a = FieldState(0.0, v, s)
    b = FieldState(0.0, -v[::-1], s[::-1])
    for _ in range(2):
        a = full_sweep(spec, (ROCK, ROCK), g, None, a)
        b = full_sweep(spec, (ROCK, ROCK), g, None, b)
    np.testing.assert_allclose(b.v, -a.v[::-1], rtol=0, atol=1e-14)
    np.testing.assert_allclose(b.sigma, a.sigma[::-1], rtol=0, atol=1e-14 * ROCK.impedance)


@pytest.mark.parametrize("r", ORDERS)
def test_full_sweep_equals_regular_step_everywhere(r):
    spec = SchemeSpec(r)
    g = grid(n=61, length=60.0)
    rng = np.random.default_rng(1)
    st = FieldState(0.0, rng.normal(size=g.n), rng.normal(size=g.n) * ROCK.impedance)
    nxt = full_sweep(spec, (ROCK, ROCK), g, None, st)
    U = np.stack([st.v, st.sigma], axis=-1)
    for i in range(spec.s, g.n - spec.s):
        inc = regular_step(spec, ROCK, g, U[i - spec.s:i + spec.s + 1])
        np.testing.assert_allclose([nxt.v[i], nxt.sigma[i]], U[i] + inc, rtol=1e-12, atol=1e-9)


def test_full_sweep_zero_state_and_irregular_points_untouched():
    spec = SchemeSpec(4)
    g = grid(n=101, length=100.0)
    zero = FieldState.zeros(g.n)
    assert not full_sweep(spec, (ROCK, ROCK), g, 50, zero).v.any()
    st = FieldState(0.0, np.sin(g.x / 4.0), np.cos(g.x / 4.0))
    nxt = full_sweep(spec, (ROCK, MaterialParams(2000.0, 1500.0)), g, 50, st)
    irr = slice(49, 53)
    assert np.array_equal(nxt.v[irr], st.v[irr]) and np.array_equal(nxt.sigma[irr], st.sigma[irr])


def test_node_terms_select_medium_by_side():
    spec = SchemeSpec(2)
    soft = MaterialParams(2000.0, 1500.0)
    g = grid()
    terms = node_terms(spec, (ROCK, soft), g, 100)
    np.testing.assert_array_equal(terms[:, 100], propagator_terms(spec, ROCK, g.dt))
    np.testing.assert_array_equal(terms[:, 101], propagator_terms(spec, soft, g.dt))


def test_blowup_is_reported_with_index():
    v = np.zeros(10)
    v[7] = np.inf
    with pytest.raises(NumericBlowup) as err:
        check_finite(v, np.zeros(10), 1.5)
    assert err.value.index == 7
    st = FieldState(0.0, np.zeros(10), np.zeros(10))
    st.sigma[3] = np.nan
    with pytest.raises(NumericBlowup):
        full_sweep(SchemeSpec(2), (ROCK, ROCK), Grid.from_cfl(0, 9, 10, 0.9, ROCK.c), None, st)


def _periodic_sweep(spec, terms, dx, U):
    inc = np.zeros_like(U)
    s = spec.s
    for m in range(1, spec.r + 1):
        w = spec.tables[m - 1]
        D = sum(w[j] * np.roll(U, s - j, axis=0) for j in range(2 * s + 1)) / dx**m
        inc += D @ terms[m - 1].T
    return U + inc


@pytest.mark.parametrize("r", ORDERS)
@pytest.mark.parametrize("cfl", [0.9, 1.0])
def test_long_time_stability_on_noise(r, cfl):
    spec = SchemeSpec(r)
    n = 32
    g = Grid.from_cfl(0.0, 31.0, n, cfl, ROCK.c)
    terms = propagator_terms(spec, ROCK, g.dt)
    # the sweep is linear: assemble its one-step matrix column by column
    size = 2 * n
    M = np.column_stack([_periodic_sweep(spec, terms, g.dx, e.reshape(n, 2)).ravel()
                         for e in np.eye(size)])
    rng = np.random.default_rng(5)
    scale = np.tile([1.0, ROCK.impedance], n)
    u = rng.normal(size=size) * scale
    start = np.max(np.abs(u / scale))
    for _ in range(100_000):
        u = M @ u
    assert np.all(np.isfinite(u))
    assert np.max(np.abs(u / scale)) <= 2.0 * start
