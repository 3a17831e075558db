import numpy as np
import pytest

from ngf.errors import DomainError
from ngf.oracle import InitialCondition, SpectralGrid, solve_reference, two_soliton_u0
from ngf.pde_rhs import soliton_dt, soliton_field


def single_soliton(x):
    return soliton_field(x, 0.0, 6.0, 0.0, 6.0)


@pytest.fixture(scope="module")
def single_truth():
    return solve_reference(single_soliton, 6.0, 2.0)


def test_grid():
    g = SpectralGrid()
    assert g.L == 70.0 and g.x[0] == -30.0 and len(g.x) == 1024
    assert g.contains(-10.0, 20.0)
    assert not SpectralGrid(64, -20.0, 25.0).contains(-10.0, 20.0)
    with pytest.raises(ValueError):
        SpectralGrid(1000)


def test_two_soliton_profile():
    assert abs(two_soliton_u0(-5.0) - 3.0) < 0.02 and two_soliton_u0(-5.0) >= 3.0
    assert abs(two_soliton_u0(1.0) - 2.0) < 0.02 and two_soliton_u0(1.0) >= 2.0
    assert two_soliton_u0(1e3) < 1e-30 and two_soliton_u0(-1e3) < 1e-30
    ic = InitialCondition(c1=4.0, a1=0.0, c2=1.0, a2=8.0, xi_ref=2.0)
    assert ic(0.0) == pytest.approx(6.0, abs=1e-2)
    with pytest.raises(ValueError):
        InitialCondition(c1=-1.0)


def test_single_soliton_accuracy(single_truth):
    x = single_truth.grid.x
    worst = max(np.abs(single_truth.sample(t, x) - soliton_field(x, t, 6.0, 0.0, 6.0)).max()
                for t in single_truth.times)
    assert worst < 1e-4


def test_sampling_between_snapshots(single_truth):
    x = np.linspace(-10, 20, 301)
    for t in (0.0013, 0.5, 1.23456, 1.999):
        assert np.abs(single_truth.sample(t, x) - soliton_field(x, t, 6.0, 0.0, 6.0)).max() < 1e-4


def test_exact_hit_at_snapshot(single_truth):
    from scipy import fft

    t = single_truth.times[17]
    np.testing.assert_allclose(single_truth.sample(t, single_truth.grid.x),
                               fft.irfft(single_truth.coeffs[17], n=1024), atol=1e-12)


def test_velocity_matches_analytic(single_truth):
    x = np.linspace(-10, 20, 200)
    for t in (0.2, 1.1):
        assert np.abs(single_truth.velocity(t, x) - soliton_dt(x, t, 6.0, 0.0, 6.0)).max() < 1e-3


def test_outside_horizon(single_truth):
    with pytest.raises(DomainError):
        single_truth.sample(2.5, np.zeros(1))


def test_edge_check():
    with pytest.raises(DomainError):
        solve_reference(lambda x: soliton_field(x, 0.0, 6.0, 38.0, 6.0), 6.0, 0.1)


def test_invariants(two_soliton_truth):
    tr = two_soliton_truth
    m0, p0 = tr.mass(0.0), tr.momentum(0.0)
    for t in tr.times[::25]:
        assert abs(tr.mass(t) - m0) <= 1e-8 * abs(m0)
        assert abs(tr.momentum(t) - p0) <= 1e-6 * abs(p0)


def test_crest_speed(two_soliton_truth):
    x = np.linspace(-10, 30, 4001)
    ts = two_soliton_truth.times[::10]
    crest = np.array([x[np.argmax(two_soliton_truth.sample(t, x))] for t in ts])
    speed = (crest[-1] - crest[0]) / (ts[-1] - ts[0])
    assert 5.0 <= speed <= 7.0


@pytest.mark.slow
def test_spectral_self_convergence(two_soliton_truth):
    fine = solve_reference(InitialCondition(), 6.0, 4.0, SpectralGrid(2048), dealias=True)
    x = two_soliton_truth.grid.x
    assert np.abs(fine.sample(4.0, x) - two_soliton_truth.sample(4.0, x)).max() < 1e-6


def test_dump_csv(single_truth, tmp_path):
    path = tmp_path / "truth.csv"
    single_truth.dump_csv(path, times=[0.0, 1.0], x=[0.0, 6.0])
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x,u" and len(lines) == 5
    assert float(lines[1].split(",")[2]) == pytest.approx(3.0, abs=1e-6)
