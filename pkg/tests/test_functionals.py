"""Energy, weighted observation error, goal function, and power-balance
residual.  Quadrature oracles here are independent scalar-loop
reimplementations, so vectorization bugs cannot cancel."""

import math

import numpy as np
import pytest

from sgec.core import FieldState, PhysicalParams, build_grid
from sgec.functionals import (goal_q, hamiltonian, power_identity_residual,
                              weighted_error)
from sgec.scenario import TimeSeriesRecord

P = PhysicalParams(k=0.12, beta=0.02)


def manual_energy(z, v, k, beta, h, ghost):
    full = [0.0] + [float(a) for a in z] + [float(ghost)]
    grad = sum((full[i + 1] - full[i]) ** 2 for i in range(len(full) - 1))
    grad *= k / (2.0 * h)
    node = sum(vi * vi / 2.0 + beta * (1.0 - math.cos(zi))
               for zi, vi in zip(z, v)) * h
    return grad + node


def manual_error(ez, ev, k, h, eghost):
    full = [0.0] + [float(a) for a in ez] + [float(eghost)]
    grad = sum((full[i + 1] - full[i]) ** 2 for i in range(len(full) - 1))
    grad *= k / (2.0 * h)
    return grad + h * sum(x * x / 2.0 for x in ev)


def test_hamiltonian_zero_state():
    g = build_grid(100)
    s = FieldState(z=np.zeros(99), v=np.zeros(99))
    assert hamiltonian(s, P, g, 0.0) == 0.0


def test_hamiltonian_pure_kinetic():
    g = build_grid(100)
    c = 3.0
    s = FieldState(z=np.zeros(99), v=np.full(99, c))
    # interior-node quadrature: (n-1) h = 1 - h of the unit interval
    expect = (1.0 - g.h) * c * c / 2.0
    assert hamiltonian(s, P, g, 0.0) == pytest.approx(expect, rel=1e-14)


def test_hamiltonian_linear_profile_gradient_term():
    # z = a x with a matching ghost has n equal increments a h:
    # gradient part is exactly k a^2 / 2
    g = build_grid(64)
    a = 1.7
    x = g.interior_nodes()
    z = a * x
    s = FieldState(z=z, v=np.zeros(z.size))
    got = hamiltonian(s, P, g, a * 1.0)
    pot = P.beta * g.h * np.sum(1.0 - np.cos(z))
    assert got == pytest.approx(P.k * a * a / 2.0 + pot, rel=1e-13)


def test_hamiltonian_matches_scalar_loop():
    rng = np.random.default_rng(123)
    for n in (8, 33, 200):
        g = build_grid(n)
        for _ in range(5):
            z = rng.normal(scale=4.0, size=n - 1)
            v = rng.normal(scale=2.0, size=n - 1)
            ghost = float(rng.normal(scale=4.0))
            s = FieldState(z=z, v=v)
            assert hamiltonian(s, P, g, ghost) == pytest.approx(
                manual_energy(z, v, P.k, P.beta, g.h, ghost), rel=1e-12)


def test_hamiltonian_nonnegative_property():
    rng = np.random.default_rng(5)
    g = build_grid(50)
    for _ in range(100):
        z = rng.normal(scale=10.0, size=49)
        v = rng.normal(scale=10.0, size=49)
        s = FieldState(z=z, v=v)
        assert hamiltonian(s, P, g, float(z[-1])) >= 0.0


def test_hamiltonian_reference_profile_values():
    # frozen from an independent computation of the same quadrature
    from sgec.core import sample_profile
    for n, ref in ((500, 29.629426443207226), (1000, 29.629722759620172)):
        g = build_grid(n)
        z = sample_profile("paper", g)
        s = FieldState(z=z, v=np.zeros(g.n_interior))
        assert hamiltonian(s, P, g, float(z[-1])) == pytest.approx(ref, rel=1e-13)


def test_weighted_error_zero_when_equal():
    g = build_grid(40)
    rng = np.random.default_rng(9)
    z = rng.normal(size=39)
    v = rng.normal(size=39)
    a = FieldState(z=z, v=v)
    b = FieldState(z=z.copy(), v=v.copy())
    assert weighted_error(a, b, P, g, (1.3, 1.3)) == 0.0


def test_weighted_error_symmetry_and_positivity():
    g = build_grid(40)
    rng = np.random.default_rng(10)
    for _ in range(20):
        a = FieldState(z=rng.normal(size=39), v=rng.normal(size=39))
        b = FieldState(z=rng.normal(size=39), v=rng.normal(size=39))
        ga, gb = float(rng.normal()), float(rng.normal())
        e_ab = weighted_error(a, b, P, g, (ga, gb))
        e_ba = weighted_error(b, a, P, g, (gb, ga))
        assert e_ab == pytest.approx(e_ba, rel=1e-12)
        assert e_ab >= 0.0


def test_weighted_error_quadratic_scaling():
    g = build_grid(32)
    rng = np.random.default_rng(14)
    z = rng.normal(size=31)
    v = rng.normal(size=31)
    zero = FieldState(z=np.zeros(31), v=np.zeros(31))
    one = weighted_error(FieldState(z=z, v=v), zero, P, g, (0.5, 0.0))
    three = weighted_error(FieldState(z=3 * z, v=3 * v), zero, P, g, (1.5, 0.0))
    assert three == pytest.approx(9.0 * one, rel=1e-12)


def test_weighted_error_matches_scalar_loop():
    g = build_grid(25)
    rng = np.random.default_rng(15)
    for _ in range(10):
        az, av = rng.normal(size=24), rng.normal(size=24)
        bz, bv = rng.normal(size=24), rng.normal(size=24)
        ga, gb = float(rng.normal()), float(rng.normal())
        got = weighted_error(FieldState(z=az, v=av), FieldState(z=bz, v=bv),
                             P, g, (ga, gb))
        want = manual_error(az - bz, av - bv, P.k, g.h, ga - gb)
        assert got == pytest.approx(want, rel=1e-12)


def test_weighted_error_has_no_potential_term():
    # shifting both fields by the same large constant must not matter,
    # except through the boundary interval against the pinned left end
    g = build_grid(30)
    rng = np.random.default_rng(16)
    z = rng.normal(size=29)
    v = rng.normal(size=29)
    a = FieldState(z=z, v=v)
    b = FieldState(z=z + 2.0 * np.pi, v=v)
    e = weighted_error(a, b, P, g, (float(z[-1]), float(z[-1]) + 2.0 * np.pi))
    # difference field is the constant 2 pi: only the first interval
    # (against the fixed 0 boundary) contributes
    expect = P.k / (2.0 * g.h) * (2.0 * np.pi) ** 2
    assert e == pytest.approx(expect, rel=1e-12)


def test_goal_q():
    assert goal_q(10.0, 10.0) == 0.0
    assert goal_q(12.0, 10.0) == 2.0
    assert goal_q(8.0, 10.0) == 2.0
    rng = np.random.default_rng(17)
    for _ in range(30):
        h, hs = rng.normal(scale=10, size=2)
        assert goal_q(h, hs) == pytest.approx(0.5 * (h - hs) ** 2)
        assert goal_q(h, hs) >= 0.0


def _record(t, H, u, y):
    z = np.zeros_like(np.asarray(t, dtype=float))
    return TimeSeriesRecord(t=np.asarray(t, dtype=float),
                            H=np.asarray(H, dtype=float),
                            H_hat=z.copy(), E=z.copy(),
                            u=np.asarray(u, dtype=float),
                            y=np.asarray(y, dtype=float))


def test_power_residual_exact_for_linear_energy():
    # H grows linearly while k u y is the matching constant: central
    # differences of a linear function are exact, residual is zero
    t = np.arange(0.0, 1.0001, 0.01)
    b = 0.7
    u = np.full(t.size, 2.0)
    y = np.full(t.size, b / (P.k * 2.0))
    H = 5.0 + b * t
    rec = _record(t, H, u, y)
    assert power_identity_residual(rec, P) == pytest.approx(0.0, abs=1e-12)


def test_power_residual_second_order_small():
    # H(t) = (k/2) sin^2 t integrates k u y with u = sin t, y = cos t
    t = np.arange(0.0, 2.0001, 0.01)
    u = np.sin(t)
    y = np.cos(t)
    H = 0.5 * P.k * np.sin(t) ** 2
    rec = _record(t, H, u, y)
    res = power_identity_residual(rec, P)
    assert 0.0 < res < 1e-3


def test_power_residual_detects_violation():
    t = np.arange(0.0, 1.0001, 0.01)
    H = 3.0 * t          # dH/dt = 3
    u = np.ones(t.size)  # k u y = 0.12 != 3
    y = np.ones(t.size)
    rec = _record(t, H, u, y)
    assert power_identity_residual(rec, P) > 1.0


def test_power_residual_normalization_uses_unit_floor():
    # tiny signals: denominator is 1, residual equals the raw mismatch
    t = np.arange(0.0, 1.0001, 0.1)
    H = 1e-8 * t
    u = np.zeros(t.size)
    y = np.zeros(t.size)
    rec = _record(t, H, u, y)
    assert power_identity_residual(rec, P) == pytest.approx(1e-8, rel=1e-6)


def test_power_residual_guards():
    with pytest.raises(ValueError):
        power_identity_residual(_record([0.0, 1.0], [0.0, 0.0],
                                        [0.0, 0.0], [0.0, 0.0]), P)
    bad_t = [0.0, 0.1, 0.35, 0.5]
    with pytest.raises(ValueError):
        power_identity_residual(_record(bad_t, [0.0] * 4, [0.0] * 4,
                                        [0.0] * 4), P)
    with pytest.raises(ValueError):
        power_identity_residual(_record([0.0, 0.1, 0.1], [0.0] * 3,
                                        [0.0] * 3, [0.0] * 3), P)
