"""Radial eigensolver against independent oracles.

The constant-speed problems have closed-form eigenfrequencies (Bessel and
spherical Bessel zeros); those are recomputed here with mpmath's root
finder rather than trusted from any table inside the package.  Variable
speed problems are cross-checked against a dense generalized eigensolve of
the same matrices.
"""

import mpmath
import numpy as np
import pytest
import scipy.linalg

from patsvd import (BoundaryCondition, ConfigurationError, EndpointClass,
                    NumericalError, RadialGrid, SoundSpeedProfile,
                    assemble_discrete_operator, bessel_reference_modes,
                    boundary_values, classify_origin, convergence_order,
                    load_modes, make_profile, radial_eigenvalues,
                    reference_boundary_amplitude, save_modes,
                    solve_radial_modes)

NEU = BoundaryCondition.NEUMANN
DIR = BoundaryCondition.DIRICHLET

mpmath.mp.dps = 30


def bessel_prime_zero(l, k):
    """k-th positive zero of J_l', independent of the package."""
    return float(mpmath.besseljzero(l, k, derivative=1))


def bessel_zero(l, k):
    return float(mpmath.besseljzero(l, k))


def spherical_neumann_zero(k):
    """k-th positive root of tan(x) = x, written pole-free as x cos x - sin x."""
    guesses = [4.493, 7.725, 10.904]
    return float(mpmath.findroot(lambda x: x * mpmath.cos(x) - mpmath.sin(x), guesses[k - 1]))


# ---------------------------------------------------------------------------
# Constant-speed oracles
# ---------------------------------------------------------------------------

def test_neumann_disk_frequencies_match_bessel_prime_zeros():
    grid = RadialGrid(2048)
    flat = make_profile("const:1")
    for l in (0, 1, 3):
        modes = solve_radial_modes(flat, grid, l, NEU, count=5)
        mus = [m.mu for m in modes]
        if l == 0:
            assert mus[0] == 0.0
            # mpmath counts x = 0 as the first zero of J0', skip it
            expected = [bessel_prime_zero(0, k) for k in range(2, 6)]
            got = mus[1:]
        else:
            expected = [bessel_prime_zero(l, k) for k in range(1, 6)]
            got = mus
        # second-order scheme: a few times 1e-4 of relative error at this size
        np.testing.assert_allclose(got, expected, rtol=5e-4)


def test_dirichlet_disk_frequencies_match_bessel_zeros():
    grid = RadialGrid(2048)
    modes = solve_radial_modes(make_profile("const:1"), grid, 0, DIR, count=2)
    assert modes[0].mu == pytest.approx(bessel_zero(0, 1), rel=5e-5)
    assert modes[1].mu == pytest.approx(bessel_zero(0, 2), rel=5e-5)
    # the classic four-digit values
    assert modes[0].mu == pytest.approx(2.40483, abs=1e-4)
    assert modes[1].mu == pytest.approx(5.52008, abs=1e-4)


def test_ball_neumann_frequencies_match_tan_roots():
    grid = RadialGrid(2048)
    modes = solve_radial_modes(make_profile("const:1"), grid, 0, NEU, dimension=3, count=3)
    assert modes[0].mu == 0.0
    assert modes[1].mu == pytest.approx(spherical_neumann_zero(1), rel=5e-5)
    assert modes[2].mu == pytest.approx(spherical_neumann_zero(2), rel=5e-5)


def test_flat_mode_is_exact():
    """The constant eigenfunction is in the discrete kernel exactly."""
    grid = RadialGrid(128)
    mode = solve_radial_modes(make_profile("const:1"), grid, 0, NEU, count=1)[0]
    assert mode.mu <= 1e-8
    np.testing.assert_allclose(mode.values, np.sqrt(2.0), atol=1e-8)
    assert mode.boundary_value == pytest.approx(np.sqrt(2.0), abs=1e-8)


def test_constant_speed_scaling_law():
    """mu scales as sqrt(c0), so c0 = 4 doubles every frequency."""
    grid = RadialGrid(512)
    base = radial_eigenvalues(make_profile("const:1"), grid, 1, NEU, mu_max=20.0)
    fast = radial_eigenvalues(make_profile("const:4"), grid, 1, NEU, mu_max=40.0)
    n = min(base.size, fast.size)
    np.testing.assert_allclose(fast[:n] / base[:n], 2.0, rtol=1e-9)


def test_boundary_amplitude_against_quadrature():
    """h(1) of the solved mode vs the closed-form normalization integral."""
    grid = RadialGrid(4096)
    alpha = bessel_prime_zero(2, 3)
    mode = solve_radial_modes(make_profile("const:1"), grid, 2, NEU, count=3)[2]
    ref = reference_boundary_amplitude(2, 2, alpha, NEU)
    assert mode.boundary_value == pytest.approx(ref, rel=1e-5)


def test_reference_modes_agree_with_solver():
    grid = RadialGrid(1024)
    solved = solve_radial_modes(make_profile("const:1"), grid, 1, NEU, count=3)
    reference = bessel_reference_modes(1.0, 2, 1, NEU, 3, grid)
    for s, r in zip(solved, reference):
        assert s.mu == pytest.approx(r.mu, rel=1e-5)
        assert np.max(np.abs(s.values - r.values)) < 2e-4


# ---------------------------------------------------------------------------
# Variable speed: dense generalized eigensolve oracle
# ---------------------------------------------------------------------------

def test_tridiagonal_path_matches_dense_eigensolve():
    wiggle = SoundSpeedProfile(
        kind="tabulated",
        abscissa=(0.0, 0.2, 0.5, 0.8, 1.0),
        values=(1.0, 1.8, 0.7, 1.3, 1.0),
    )
    grid = RadialGrid(200)
    for bc in (NEU, DIR):
        op = assemble_discrete_operator(wiggle, grid, 2, bc)
        dense_lam = scipy.linalg.eigh(
            op.dense_stiffness(), op.dense_weight(), eigvals_only=True)
        modes = solve_radial_modes(wiggle, grid, 2, bc, count=6)
        np.testing.assert_allclose(
            [m.mu**2 for m in modes], dense_lam[:6], rtol=1e-10, atol=1e-10)


def test_modes_are_weighted_orthonormal():
    prof = make_profile("c1")
    grid = RadialGrid(400)
    modes = solve_radial_modes(prof, grid, 1, NEU, count=5)
    w = grid.centers / prof(grid.centers) * grid.spacing
    vecs = np.stack([m.values for m in modes])
    gram = (vecs * w) @ vecs.T
    np.testing.assert_allclose(gram, np.eye(5), atol=1e-12)


def test_mu_max_selection_matches_count_selection():
    prof = make_profile("c2")
    grid = RadialGrid(300)
    by_count = solve_radial_modes(prof, grid, 0, NEU, count=8)
    cutoff = by_count[-1].mu + 1e-9
    by_mu = solve_radial_modes(prof, grid, 0, NEU, mu_max=cutoff)
    # index-select and value-select take different LAPACK paths, so allow
    # last-digit differences
    np.testing.assert_allclose([m.mu for m in by_mu], [m.mu for m in by_count], rtol=1e-9)
    np.testing.assert_allclose(
        radial_eigenvalues(prof, grid, 0, NEU, mu_max=cutoff),
        [m.mu for m in by_count], rtol=1e-9)


# ---------------------------------------------------------------------------
# Boundary extrapolation and origin classification
# ---------------------------------------------------------------------------

def test_boundary_extrapolation_exact_for_quadratics():
    grid = RadialGrid(50)
    r = grid.centers
    values = 3.0 - 2.0 * r + 1.5 * r**2
    h1, dh1 = boundary_values(values, grid)
    assert h1 == pytest.approx(2.5, abs=1e-12)
    assert dh1 == pytest.approx(1.0, abs=1e-10)


def test_origin_classification_table():
    for dim in (2, 3):
        for l in range(0, 6):
            cls, _ = classify_origin(dim, l)
            expected = EndpointClass.LIMIT_CIRCLE if l == 0 else EndpointClass.LIMIT_POINT
            assert cls is expected, (dim, l)
    with pytest.raises(ValueError):
        classify_origin(4, 0)
    with pytest.raises(ValueError):
        classify_origin(2, -1)


def test_convergence_is_second_order():
    orders = convergence_order(make_profile("c1"), 1, NEU, 2, [128, 256, 512], count=2)
    assert abs(orders[0] - 2.0) < 0.3


# ---------------------------------------------------------------------------
# Discrete angular constants and argument validation
# ---------------------------------------------------------------------------

def test_angular_eigenvalue_override_shifts_spectrum():
    prof = make_profile("c1")
    grid = RadialGrid(256)
    exact = solve_radial_modes(prof, grid, 4, NEU, count=1)[0]
    nudged = solve_radial_modes(prof, grid, 4, NEU, count=1, angular_eigenvalue=15.9)[0]
    assert nudged.mu < exact.mu    # smaller separation constant, softer mode
    assert abs(nudged.mu - exact.mu) < 0.05


def test_angular_eigenvalue_consistency_enforced():
    prof = make_profile("c1")
    grid = RadialGrid(64)
    with pytest.raises(ValueError):
        assemble_discrete_operator(prof, grid, 0, NEU, angular_eigenvalue=1.0)
    with pytest.raises(ValueError):
        assemble_discrete_operator(prof, grid, 2, NEU, angular_eigenvalue=0.0)
    with pytest.raises(ValueError):
        assemble_discrete_operator(prof, grid, 2, NEU, angular_eigenvalue=-4.0)


def test_solver_argument_validation():
    prof = make_profile("c1")
    grid = RadialGrid(64)
    with pytest.raises(ValueError):
        solve_radial_modes(prof, grid, 0, NEU)
    with pytest.raises(ValueError):
        solve_radial_modes(prof, grid, 0, NEU, count=3, mu_max=5.0)
    with pytest.raises(ValueError):
        solve_radial_modes(prof, grid, -1, NEU, count=3)
    with pytest.raises(ValueError):
        solve_radial_modes(prof, grid, 0, NEU, count=0)
    with pytest.raises(ValueError):
        solve_radial_modes(prof, grid, 0, NEU, count=65)
    with pytest.raises(ValueError):
        solve_radial_modes(prof, grid, 0, NEU, mu_max=-1.0)
    with pytest.raises(ValueError):
        RadialGrid(2)


def test_mode_file_round_trip(tmp_path):
    grid = RadialGrid(128)
    modes = solve_radial_modes(make_profile("c1"), grid, 2, DIR, count=3)
    path = tmp_path / "modes.bin"
    save_modes(path, modes)
    back = load_modes(path)
    assert len(back) == 3
    for a, b in zip(modes, back):
        assert (a.l, a.k, a.bc) == (b.l, b.k, b.bc)
        assert a.mu == b.mu
        np.testing.assert_array_equal(a.values, b.values)
        assert a.boundary_derivative == b.boundary_derivative
