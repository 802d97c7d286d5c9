"""Time grids, boundary traces, and the two forward routes.

The spectral route is checked against hand-built cosine models, the
time-averaged inner product against explicit loops and scipy quadrature,
and the leapfrog solver against exact discrete eigenmode evolution.
"""

import numpy as np
import pytest
import scipy.integrate

from patsvd import (AngularGrid, BoundaryCondition, BoundaryTrace,
                    ConfigurationError, DivergenceError, FdtdConfig,
                    GridFunction, ModalCoefficients, ModeIndex,
                    QuadratureRule, RadialGrid, ShapeError, TimeGrid,
                    cosine_pair_average, discrete_angular_eigenvalue,
                    enumerate_modes, fdtd_time_step, forward_fdtd,
                    forward_spectral, leapfrog_frequency, load_trace,
                    load_trace_csv, make_profile, mode_samples, run_fdtd,
                    save_trace, save_trace_csv, singular_trace,
                    solve_radial_modes, time_averaged_inner_product,
                    trace_norm)

NEU = BoundaryCondition.NEUMANN
DIR = BoundaryCondition.DIRICHLET


# ---------------------------------------------------------------------------
# Time grids and the trace inner product
# ---------------------------------------------------------------------------

def test_time_grid_basics():
    tg = TimeGrid(0.25, 8)
    assert tg.horizon == 2.0
    assert tg.times[0] == 0.0 and tg.times[-1] == 2.0
    assert len(tg.times) == 9
    assert tg.weights.sum() == pytest.approx(tg.horizon)
    with pytest.raises(ConfigurationError):
        TimeGrid(0.0, 5)
    with pytest.raises(ConfigurationError):
        TimeGrid(0.1, 0)


def test_time_grid_resolution_guard():
    tg = TimeGrid(0.1, 100)
    tg.check_resolves(np.pi / 4.0 / 0.1)
    with pytest.raises(ConfigurationError):
        tg.check_resolves(10.0)


@pytest.mark.parametrize("i1,i2", [(0.0, 0.0), (2.0, 2.0), (0.0, 3.7), (2.0, 5.1), (9.3, 9.2)])
def test_cosine_pair_average_against_quadrature(i1, i2):
    horizon = 7.3
    ref, _ = scipy.integrate.quad(lambda t: np.cos(i1 * t) * np.cos(i2 * t), 0.0, horizon,
                                  limit=200)
    assert cosine_pair_average(i1, i2, horizon) == pytest.approx(2.0 / horizon * ref, abs=1e-10)


def test_cosine_pair_average_validation():
    assert cosine_pair_average(0.0, 0.0, 5.0) == 2.0
    with pytest.raises(ValueError):
        cosine_pair_average(-1.0, 2.0, 5.0)
    with pytest.raises(ValueError):
        cosine_pair_average(1.0, 2.0, 0.0)


def test_time_averaged_inner_product_matches_loops():
    rng = np.random.default_rng(21)
    tg = TimeGrid(0.05, 40)
    ang = AngularGrid(2, 8)
    u = BoundaryTrace(tg, ang, rng.normal(size=(41, 8)) + 1j * rng.normal(size=(41, 8)))
    v = BoundaryTrace(tg, ang, rng.normal(size=(41, 8)) + 1j * rng.normal(size=(41, 8)))
    acc = 0.0
    for row in range(41):
        w_t = tg.weights[row]
        for a in range(8):
            acc += w_t * ang.weights[a] * u.samples[row, a] * np.conj(v.samples[row, a])
    acc *= 2.0 / tg.horizon
    assert time_averaged_inner_product(u, v) == pytest.approx(acc, abs=1e-12)
    assert trace_norm(u) == pytest.approx(np.sqrt(time_averaged_inner_product(u, u).real))
    tg2 = TimeGrid(0.05, 39)
    w = BoundaryTrace(tg2, ang, np.zeros((40, 8)))
    with pytest.raises(ShapeError):
        time_averaged_inner_product(u, w)


def test_flat_mode_trace_norm_is_sqrt_two():
    # cos(0 t) times the unit constant on the circle: squared norm
    # (2/A) * A * 1 = 2 under the time-averaged product
    tg = TimeGrid(0.1, 50)
    ang = AngularGrid(2, 16)
    u = singular_trace(ModeIndex(2, 0, 1), 0.0, tg, ang)
    assert trace_norm(u) == pytest.approx(np.sqrt(2.0), rel=1e-12)


def test_trace_restriction():
    rng = np.random.default_rng(2)
    tg = TimeGrid(0.5, 10)
    ang = AngularGrid(2, 4)
    u = BoundaryTrace(tg, ang, rng.normal(size=(11, 4)))
    half = u.restricted(2.5)
    assert half.time_grid.n_steps == 5
    np.testing.assert_array_equal(half.samples, u.samples[:6])
    with pytest.raises(ValueError):
        u.restricted(6.0)
    with pytest.raises(ValueError):
        u.restricted(0.2)


def test_trace_shape_validation():
    with pytest.raises(ShapeError):
        BoundaryTrace(TimeGrid(0.1, 5), AngularGrid(2, 8), np.zeros((5, 8)))


# ---------------------------------------------------------------------------
# Spectral forward
# ---------------------------------------------------------------------------

def test_forward_spectral_single_mode_is_scaled_cosine():
    prof = make_profile("c1")
    grid = RadialGrid(256)
    modes = enumerate_modes(prof, grid, NEU, count=10)
    tg = TimeGrid(0.05, 60)
    ang = AngularGrid(2, 32)
    mode = modes[7]
    coeffs = ModalCoefficients({mode.index: 1.0})
    trace = forward_spectral(coeffs, modes, tg, ang)
    expected = mode.boundary_value * np.cos(mode.mu * tg.times)[:, None] \
        * (np.exp(1j * mode.index.l * ang.azimuths) / np.sqrt(2 * np.pi))[None, :]
    np.testing.assert_allclose(trace.samples, expected, atol=1e-14)


def test_forward_spectral_real_for_conjugate_symmetric_coefficients():
    prof = make_profile("c2")
    modes = enumerate_modes(prof, RadialGrid(200), NEU, count=20)
    rng = np.random.default_rng(4)
    entries = {}
    for m in modes:
        partner = ModeIndex(2, -m.index.l, m.index.k)
        if m.index.l == 0:
            entries[m.index] = complex(rng.normal())
        elif partner in entries:
            entries[m.index] = np.conj(entries[partner])
        else:
            entries[m.index] = complex(rng.normal(), rng.normal())
    tg = TimeGrid(0.05, 40)
    trace = forward_spectral(ModalCoefficients(entries), modes, tg, AngularGrid(2, 16))
    assert np.max(np.abs(trace.samples.imag)) < 1e-13


def test_forward_spectral_dirichlet_uses_normal_derivative():
    prof = make_profile("const:1")
    grid = RadialGrid(512)
    modes_d = [m for m in enumerate_modes(prof, grid, DIR, count=4) if m.index.l == 0]
    mode = modes_d[0]
    tg = TimeGrid(0.05, 30)
    ang = AngularGrid(2, 8)
    trace = forward_spectral(ModalCoefficients({mode.index: 1.0}), modes_d, tg, ang)
    amp = trace.samples[0, 0].real * np.sqrt(2 * np.pi)
    assert amp == pytest.approx(mode.boundary_derivative, rel=1e-12)
    assert abs(mode.boundary_derivative) > 0.1


def test_forward_spectral_guards():
    prof = make_profile("const:1")
    grid = RadialGrid(128)
    neu = enumerate_modes(prof, grid, NEU, count=3)
    dire = enumerate_modes(prof, grid, DIR, count=3)
    tg = TimeGrid(0.05, 30)
    ang = AngularGrid(2, 8)
    with pytest.raises(ValueError):
        forward_spectral(ModalCoefficients({}), [], tg, ang)
    with pytest.raises(TypeError):
        forward_spectral(ModalCoefficients({}), neu + dire, tg, ang)
    with pytest.raises(ConfigurationError):
        forward_spectral(ModalCoefficients({}), neu, TimeGrid(2.0, 5), ang)


# ---------------------------------------------------------------------------
# Leapfrog dispersion relation and step selection
# ---------------------------------------------------------------------------

def test_leapfrog_frequency_values():
    dt = 0.1
    mu = 3.0
    omega = leapfrog_frequency(mu, dt)
    # defining relation: sin(omega dt / 2) = mu dt / 2
    assert np.sin(omega * dt / 2.0) == pytest.approx(mu * dt / 2.0, rel=1e-15)
    assert omega > mu  # asin(x) >= x: the discrete mode oscillates fast
    assert leapfrog_frequency(0.0, dt) == 0.0
    arr = leapfrog_frequency(np.array([0.0, 1.0, 5.0]), dt)
    assert arr.shape == (3,)
    small = leapfrog_frequency(1e-4, dt)
    assert small == pytest.approx(1e-4, rel=1e-8)


def test_leapfrog_frequency_guards():
    with pytest.raises(ValueError):
        leapfrog_frequency(3.0, -0.1)
    with pytest.raises(ValueError):
        leapfrog_frequency(25.0, 0.1)  # mu dt = 2.5, unstable


def test_fdtd_time_step_subdivision():
    prof = make_profile("const:4")  # c_max = 4, sqrt = 2
    radial = RadialGrid(100)        # spacing 0.01
    cfg = FdtdConfig(cfl=0.5)
    # stable step = 0.5 * 0.01 / 2 = 0.0025
    dt, stride = fdtd_time_step(prof, radial, TimeGrid(0.01, 5), cfg)
    assert stride == 4 and dt == pytest.approx(0.0025)
    dt, stride = fdtd_time_step(prof, radial, TimeGrid(0.002, 5), cfg)
    assert stride == 1 and dt == 0.002
    # exact multiples do not get an extra substep
    dt, stride = fdtd_time_step(prof, radial, TimeGrid(0.005, 5), cfg)
    assert stride == 2


# ---------------------------------------------------------------------------
# FDTD behavior
# ---------------------------------------------------------------------------

def test_fdtd_constant_field_is_stationary():
    prof = make_profile("c1")
    quad = QuadratureRule(RadialGrid(64), AngularGrid(2, 16))
    f0 = GridFunction(quad.radial, quad.angular, np.full((64, 16), 0.75))
    run = run_fdtd(f0, prof, TimeGrid(0.05, 40))
    np.testing.assert_allclose(run.trace.samples, 0.75, atol=1e-12)
    np.testing.assert_allclose(run.energy, 0.0, atol=1e-12)
    assert run.max_amplitude == pytest.approx(0.75)


def test_fdtd_matched_mode_evolves_as_discrete_cosine():
    # A matched-basis mode is an eigenvector of the discrete spatial operator,
    # so the leapfrog trace is sigma cos(omega_hat t) to roundoff, where
    # omega_hat is the scheme's own frequency for mu.
    prof = make_profile("const:1")
    radial = RadialGrid(96)
    angular = AngularGrid(2, 32)
    modes = enumerate_modes(prof, radial, NEU, count=12, angular_grid=angular)
    mode = next(m for m in modes if m.index.l == 2)
    quad = QuadratureRule(radial, angular)
    f0 = mode_samples(mode, quad)
    tg = TimeGrid(0.1, 100)
    run = run_fdtd(f0, prof, tg, FdtdConfig(cfl=0.45))
    omega = leapfrog_frequency(mode.mu, run.dt_sim)
    ang = np.exp(1j * 2 * angular.azimuths) / np.sqrt(2 * np.pi)
    expected = mode.boundary_value * np.cos(omega * tg.times)[:, None] * ang[None, :]
    err = np.max(np.abs(run.trace.samples - expected)) / np.max(np.abs(expected))
    assert err < 1e-6


def test_fdtd_single_mode_matches_spectral_route():
    prof = make_profile("c1")
    radial = RadialGrid(128)
    angular = AngularGrid(2, 32)
    modes = enumerate_modes(prof, radial, NEU, count=6)
    mode = next(m for m in modes if m.index.l == 1)
    quad = QuadratureRule(radial, angular)
    f0 = mode_samples(mode, quad)
    tg = TimeGrid(0.05, 100)
    fdtd = forward_fdtd(f0, prof, tg, FdtdConfig(cfl=0.3))
    spectral = forward_spectral(ModalCoefficients({mode.index: 1.0}), modes, tg, angular)
    num = trace_norm(BoundaryTrace(tg, angular, fdtd.samples - spectral.samples))
    assert num / trace_norm(spectral) < 0.02


def test_fdtd_energy_conservation():
    prof = make_profile("c2")
    quad = QuadratureRule(RadialGrid(100), AngularGrid(2, 32))
    r = quad.radial.centers[:, None]
    th = quad.angular.azimuths[None, :]
    bump = np.exp(-((r * np.cos(th) - 0.3) ** 2 + (r * np.sin(th)) ** 2) / 0.02)
    run = run_fdtd(GridFunction(quad.radial, quad.angular, bump), prof,
                   TimeGrid(0.05, 120), FdtdConfig(snapshot_stride=10))
    drift = np.max(np.abs(run.energy - run.energy[0])) / run.energy[0]
    assert drift < 5e-3
    assert run.energy_times[0] == 0.0
    assert run.energy_times[-1] == pytest.approx(6.0)


def test_fdtd_rejects_nonfinite_state():
    prof = make_profile("const:1")
    quad = QuadratureRule(RadialGrid(32), AngularGrid(2, 8))
    values = np.ones((32, 8))
    values[10, 3] = np.nan
    with pytest.raises(DivergenceError):
        run_fdtd(GridFunction(quad.radial, quad.angular, values), prof, TimeGrid(0.05, 5))


def test_fdtd_config_validation():
    with pytest.raises(ConfigurationError):
        FdtdConfig(cfl=0.8)
    with pytest.raises(ConfigurationError):
        FdtdConfig(cfl=0.0)
    with pytest.raises(ConfigurationError):
        FdtdConfig(snapshot_stride=0)
    prof = make_profile("const:1")
    f0 = GridFunction(RadialGrid(16), AngularGrid(3, 8, 4), np.zeros((16, 4, 8)))
    with pytest.raises(ConfigurationError):
        run_fdtd(f0, prof, TimeGrid(0.1, 4))


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------

def test_trace_file_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    tg = TimeGrid(0.125, 12)
    ang = AngularGrid(2, 8)
    trace = BoundaryTrace(tg, ang, rng.normal(size=(13, 8)))
    path = tmp_path / "trace.pattrac"
    save_trace(path, trace)
    back = load_trace(path)
    assert back.time_grid == tg
    assert back.angular == ang
    np.testing.assert_array_equal(back.samples, trace.samples)


def test_trace_file_stores_negligible_imaginary_part(tmp_path):
    tg = TimeGrid(0.1, 4)
    ang = AngularGrid(2, 4)
    samples = np.ones((5, 4), dtype=complex) + 1e-14j
    path = tmp_path / "trace.pattrac"
    save_trace(path, BoundaryTrace(tg, ang, samples))
    np.testing.assert_array_equal(load_trace(path).samples, np.ones((5, 4)))
    with pytest.raises(ValueError):
        save_trace(path, BoundaryTrace(tg, ang, np.ones((5, 4)) * 1j))


def test_trace_file_rejects_garbage(tmp_path):
    path = tmp_path / "bad.pattrac"
    path.write_bytes(b"WRONGMAG" + b"\x00" * 24)
    with pytest.raises(IOError):
        load_trace(path)
    tg = TimeGrid(0.1, 3)
    good = tmp_path / "good.pattrac"
    save_trace(good, BoundaryTrace(tg, AngularGrid(2, 4), np.zeros((4, 4))))
    good.write_bytes(good.read_bytes() + b"\x00" * 8)
    with pytest.raises(IOError):
        load_trace(good)


def test_trace_csv_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    tg = TimeGrid(0.2, 6)
    trace = BoundaryTrace(tg, AngularGrid(2, 5), rng.normal(size=(7, 5)))
    path = tmp_path / "trace.csv"
    save_trace_csv(path, trace)
    back = load_trace_csv(path, dt=0.2)
    assert back.time_grid == tg
    np.testing.assert_allclose(back.samples, trace.samples, rtol=1e-15)
