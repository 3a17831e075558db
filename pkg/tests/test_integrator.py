import math

import numpy as np
import pytest

from ngf.errors import IntegrationError, SolveError
from ngf.integrator import TimeGrid, euler_step, get_stepper, integrate, rk4_step


def scalar_growth(theta, t, step, stage):
    return theta


def constant(v):
    return lambda theta, t, step, stage: v


def test_time_grid():
    g = TimeGrid(0.0, 4.0, 1000)
    assert g.dt == 0.004
    assert g.time(1000) == 4.0
    assert g.times[0] == 0.0 and len(g.times) == 1001
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 10)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 0)


def test_zero_velocity_keeps_state():
    theta = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(euler_step(constant(np.zeros(3)), theta, 0.0, 0.1), theta)
    np.testing.assert_array_equal(rk4_step(constant(np.zeros(3)), theta, 0.0, 0.1), theta)


def test_constant_velocity():
    theta = np.array([1.0, -2.0])
    v = np.array([0.5, 4.0])
    np.testing.assert_array_equal(euler_step(constant(v), theta, 0.0, 0.125), theta + 0.125 * v)
    np.testing.assert_array_equal(rk4_step(constant(v), theta, 0.0, 0.125), theta + 0.125 * v)


def test_scalar_growth_single_steps():
    assert euler_step(scalar_growth, np.array([1.0]), 0.0, 0.1)[0] == pytest.approx(1.1, rel=1e-15)
    assert rk4_step(scalar_growth, np.array([1.0]), 0.0, 0.1)[0] == pytest.approx(1.1051708333333333, rel=1e-15)


def test_euler_evaluates_at_new_time():
    seen = []

    def field(theta, t, step, stage):
        seen.append((t, step, stage))
        return np.zeros(1)

    euler_step(field, np.zeros(1), 0.5, 0.25, step=7)
    assert seen == [(0.75, 7, 0)]


def test_rk4_stage_times_and_indices():
    seen = []

    def field(theta, t, step, stage):
        seen.append((t, step, stage))
        return np.zeros(1)

    rk4_step(field, np.zeros(1), 1.0, 0.5, step=3)
    assert seen == [(1.0, 3, 0), (1.25, 3, 1), (1.25, 3, 2), (1.5, 3, 3)]


def test_rk4_linear_system_matches_taylor_polynomial(rng):
    A = rng.normal(size=(4, 4))
    theta0 = rng.normal(size=4)
    h = 0.05
    step = rk4_step(lambda th, t, s, st: A @ th, theta0, 0.0, h)
    term, poly = theta0.copy(), theta0.copy()
    for k in range(1, 5):
        term = h * A @ term / k
        poly = poly + term
    assert np.max(np.abs(step - poly)) < 1e-12


def test_integrate_single_step_equals_rk4():
    traj = integrate(np.array([1.0]), TimeGrid(0.0, 0.1, 1), scalar_growth)
    np.testing.assert_array_equal(traj.thetas[-1], rk4_step(scalar_growth, np.array([1.0]), 0.0, 0.1))


def test_integrate_exponential():
    traj = integrate(np.array([1.0]), TimeGrid(0.0, 1.0, 1000), scalar_growth)
    assert abs(traj.thetas[-1][0] - math.e) < 1e-10
    assert len(traj) == 1001 and traj.times[-1] == 1.0


def convergence_ratio(scheme, K):
    errs = []
    for k in (K, 2 * K):
        traj = integrate(np.array([1.0]), TimeGrid(0.0, 1.0, k), scalar_growth, scheme)
        errs.append(abs(traj.thetas[-1][0] - math.e))
    return errs[0] / errs[1]


def test_convergence_orders():
    assert abs(convergence_ratio("rk4", 10) - 16) <= 0.25 * 16
    assert abs(convergence_ratio("euler", 100) - 2) <= 0.2 * 2


def test_unknown_scheme():
    with pytest.raises(ValueError):
        get_stepper("leapfrog")
    with pytest.raises(ValueError):
        rk4_step(scalar_growth, np.ones(1), 0.0, 0.0)


def test_blowup_returns_partial_trajectory():
    def field(theta, t, step, stage):
        return theta * 1e200

    with np.errstate(over="ignore"):
        with pytest.raises(IntegrationError) as info:
            integrate(np.array([1e200]), TimeGrid(0.0, 1.0, 10), field)
    partial = info.value.partial
    assert len(partial) >= 1 and np.all(np.isfinite(partial.theta_array))


def test_solve_failure_is_wrapped():
    def field(theta, t, step, stage):
        if step == 2:
            raise SolveError("singular")
        return np.zeros_like(theta)

    with pytest.raises(IntegrationError) as info:
        integrate(np.zeros(2), TimeGrid(0.0, 1.0, 5), field)
    assert len(info.value.partial) == 3


def test_deterministic_and_csv(tmp_path, rng):
    A = rng.normal(size=(3, 3)) * 0.1
    field = lambda th, t, s, st: A @ th + np.sin(t)
    a = integrate(np.ones(3), TimeGrid(0.0, 1.0, 50), field)
    b = integrate(np.ones(3), TimeGrid(0.0, 1.0, 50), field)
    np.testing.assert_array_equal(a.theta_array, b.theta_array)
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "k,t_k,theta_0,theta_1,theta_2"
