"""End-to-end acceptance criteria 1-9, each at its stated tolerance.

Every test prints one ``ACCEPTANCE <n> PASS|FAIL`` line (visible with ``pytest -v`` or
``-s``) before asserting. Full runs use the default K=1000 presets; expect a few minutes.
"""
import dataclasses
import math

import mpmath
import numpy as np
import pytest

from mp_oracles import central_fd_grad, five_point, mp_eval, random_theta
from ngf import ansatz
from ngf.config import preset
from ngf.filtering import FilterSetup, forward_run, initial_state
from ngf.integrator import TimeGrid, integrate
from ngf.oracle import solve_reference
from ngf.pde_rhs import KdV, soliton_field
from ngf.runner import run

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")
        return ok
    return emit


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    """Full preset runs, computed once and shared between criteria."""
    cache = {}
    root = tmp_path_factory.mktemp("acceptance")

    def get(name, **overrides):
        key = (name, tuple(sorted(overrides.items())))
        if key not in cache:
            cfg = dataclasses.replace(preset(name), output_dir=str(root / f"{name}-{len(cache)}"), **overrides)
            cache[key] = run(cfg)
        return cache[key]
    return get


def test_1_derivative_exactness(report):
    rng = np.random.default_rng(2024)
    worst_grad, worst_jet = 0.0, 0.0
    with mpmath.workdps(60):
        h = mpmath.mpf("1e-7")
        for _ in range(100):
            theta = random_theta(rng, 3)
            x = rng.uniform(-4, 4)
            g, fd = ansatz.grad_theta(theta, x), central_fd_grad(theta, x)
            nz = g != 0
            worst_grad = max(worst_grad, float(np.max(np.abs(g - fd)[nz] / np.abs(g)[nz])))
            jet = ansatz.spatial_jet(theta, x, 3)
            for order in (1, 2, 3):
                exact = jet.dx[order - 1]
                if abs(exact) > 1e-8:
                    approx = float(five_point(lambda s: mp_eval(theta, s), mpmath.mpf(x), h, order))
                    worst_jet = max(worst_jet, abs(approx - exact) / abs(exact))
    ok = worst_grad < 1e-5 and worst_jet < 1e-6
    report(1, ok, f"max rel grad err {worst_grad:.2e} (< 1e-5), max rel jet err {worst_jet:.2e} (< 1e-6)")
    assert ok


def test_2_soliton_forward_accuracy(report):
    exact = lambda t, x: soliton_field(x, t, 6.0, 0.0, 6.0)
    setup = FilterSetup(time=TimeGrid(0.0, 1.0, 250))
    fit = initial_state(setup, u0=lambda x: exact(0.0, x))
    times, thetas, _ = forward_run(setup, fit.theta, KdV(), 6.0)
    x = np.linspace(-10.0, 20.0, 3001)
    rel = [np.linalg.norm(ansatz.evaluate(th, x) - exact(t, x)) / np.linalg.norm(exact(t, x))
           for t, th in zip(times, thetas)]
    ok = fit.rmse < 1e-3 and max(rel) < 0.10
    report(2, ok, f"fit rmse {fit.rmse:.2e} (< 1e-3), max rel L2 err on [0,1] {max(rel):.4f} (< 0.10)")
    assert ok


def test_3_reference_solver(report, two_soliton_truth):
    single = solve_reference(lambda x: soliton_field(x, 0.0, 6.0, 0.0, 6.0), 6.0, 2.0)
    x = single.grid.x
    linf = max(np.abs(single.sample(t, x) - soliton_field(x, t, 6.0, 0.0, 6.0)).max() for t in single.times)
    tr = two_soliton_truth
    m0, p0 = tr.mass(0.0), tr.momentum(0.0)
    mass = max(abs(tr.mass(t) - m0) / abs(m0) for t in tr.times)
    mom = max(abs(tr.momentum(t) - p0) / abs(p0) for t in tr.times)
    ok = linf < 1e-4 and mass < 1e-8 and mom < 1e-6
    report(3, ok, f"soliton Linf {linf:.2e} (< 1e-4), mass drift {mass:.2e} (< 1e-8), momentum drift {mom:.2e} (< 1e-6)")
    assert ok


def test_4_rank_diagnostic(report, runs):
    traj = runs("paper-m100").trajectory
    fr = traj.eig_fractions
    inside = float(np.mean((fr >= 0.10) & (fr <= 0.40)))
    ok = inside >= 0.90
    report(4, ok, f"steps with eigen fraction in [0.10, 0.40]: {inside:.3f} (>= 0.90); median fraction "
                  f"{np.median(fr):.3f}")
    assert ok


def test_5_scenario_a(report, runs):
    errs = runs("paper-m100").trajectory.errors
    ci = runs("paper-m100", K=250, J=500).trajectory.errors
    median, final, ci_median = float(np.median(errs)), float(errs[-1]), float(np.median(ci))
    ok = median <= 0.20 and final <= 0.25 and ci_median <= 0.30
    report(5, ok, f"median err {median:.4f} (<= 0.20), final err {final:.4f} (<= 0.25), "
                  f"CI profile median {ci_median:.4f} (<= 0.30)")
    assert ok


def test_6_scenario_ordering(report, runs):
    def early_mean(name):
        traj = runs(name).trajectory
        return float(traj.errors[traj.times <= 3.0 + 1e-12].mean()), float(traj.errors.max())

    moving, _ = early_mean("paper-m10-moving")
    support, _ = early_mean("paper-m10-support")
    uniform, uniform_max = early_mean("paper-m10-uniform")
    ok = moving < support and moving < uniform and uniform_max > 0.5
    report(6, ok, f"mean err on [0,3]: moving {moving:.4f}, support {support:.4f}, uniform {uniform:.4f}; "
                  f"uniform max {uniform_max:.3f} (> 0.5)")
    assert ok


def test_7_inverse_crime(report, runs):
    traj = runs("paper-m100", truth="ngs", zdot="exact", pairing="consistent", record_spectrum=False).trajectory
    later = traj.records[1:]
    exact = all(r.xi == 6.0 for r in later)
    worst = max(r.pstep_loss for r in later)
    ok = traj.status == "ok" and len(later) == 1000 and exact and worst <= 1e-10
    report(7, ok, f"xi_k == 6.0 for all k >= 1: {exact}; max P-step loss {worst:.2e} (<= 1e-10)")
    assert ok


def test_8_integrator_order(report):
    def ratio(scheme, K):
        errs = []
        for k in (K, 2 * K):
            traj = integrate(np.array([1.0]), TimeGrid(0.0, 1.0, k), lambda th, t, s, st: th, scheme)
            errs.append(abs(traj.thetas[-1][0] - math.e))
        return errs[0] / errs[1]

    rk4, euler = ratio("rk4", 10), ratio("euler", 100)
    ok = abs(rk4 - 16) <= 0.25 * 16 and abs(euler - 2) <= 0.2 * 2
    report(8, ok, f"RK4 halving ratio {rk4:.3f} (16 +- 25%), Euler ratio {euler:.3f} (2 +- 20%)")
    assert ok


def test_9_determinism_and_replay(report, runs, tmp_path):
    first = runs("paper-m100", K=250, J=500)
    names = ["trajectory.csv", "snapshots.csv", "eigenfractions.csv", "eigenvalues.csv", "observations.csv"]
    from ngf.runner import load_run_config

    again = run(dataclasses.replace(load_run_config(f"{first.output_dir}/manifest.json"),
                                    output_dir=str(tmp_path / "again")))
    same = all(open(f"{first.output_dir}/{n}", "rb").read() == open(f"{again.output_dir}/{n}", "rb").read()
               for n in names)
    replay = run(dataclasses.replace(load_run_config(f"{first.output_dir}/manifest.json"),
                                     observation_log=f"{first.output_dir}/observations.csv",
                                     output_dir=str(tmp_path / "replay")))
    replayed = (open(f"{first.output_dir}/trajectory.csv", "rb").read()
                == open(f"{replay.output_dir}/trajectory.csv", "rb").read())
    ok = same and replayed
    report(9, ok, f"manifest rerun bit-identical: {same}; replay from observation log bit-identical: {replayed}")
    assert ok
