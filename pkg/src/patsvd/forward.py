"""Forward propagation: initial pressure to boundary trace.

Two independent routes compute the boundary data of the wave problem
p_tt = c(|x|) Laplacian(p), p(., 0) = f, p_t(., 0) = 0, with a sound-hard
(Neumann) sphere:

* forward_spectral synthesizes the separated solution: each basis mode
  phi_{k,l} contributes its boundary amplitude times cos(mu_{k,l} t) times
  its angular factor.  Dirichlet mode sets produce the normal-derivative
  trace instead, which is the measurable quantity for a sound-soft sphere.

* forward_fdtd leapfrogs the same equation on a polar grid (2-d), sharing
  the flux-form radial stencil of the eigensolver.  Near the origin the
  angular spacing r * dtheta collapses, so rings with r < dr / dtheta keep
  only the azimuthal Fourier orders whose discrete wavenumber stays below
  2 r / dr; the dropped orders are exponentially small there for any field
  the grid resolves, and the filtered operator stays symmetric, so the
  scheme is stable for cfl <= 0.7 and conserves the discrete energy.

Boundary data lives in a Hilbert space whose inner product is the large-time
average (2/A) int_0^A int_sphere u conj(v) dS dt; with a finite horizon the
basis traces cos(mu t) are orthonormal only up to O(1/A) cross-talk, which
cosine_pair_average quantifies exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .basis import AngularGrid, GridFunction, Mode, ModeIndex, ModalCoefficients, _angular_factor
from .errors import ConfigurationError, DivergenceError, ShapeError
from .radial import BoundaryCondition, RadialGrid, _extrapolate_boundary
from .speed import SoundSpeedProfile, evaluate_speed

__all__ = [
    "TimeGrid",
    "BoundaryTrace",
    "FdtdConfig",
    "FdtdRun",
    "singular_trace",
    "forward_spectral",
    "forward_fdtd",
    "run_fdtd",
    "fdtd_time_step",
    "leapfrog_frequency",
    "time_averaged_inner_product",
    "trace_norm",
    "cosine_pair_average",
    "save_trace",
    "load_trace",
    "save_trace_csv",
    "load_trace_csv",
]

# Frequencies are trusted only well below the sampling limit pi/dt.
MAX_PHASE_PER_STEP = np.pi / 4.0


@dataclass(frozen=True)
class TimeGrid:
    """n_steps uniform intervals covering [0, horizon], horizon = dt * n_steps.

    Sample times include both endpoints (n_steps + 1 of them), so trapezoid
    weights integrate the full horizon.
    """

    dt: float
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0.0 or self.n_steps < 1:
            raise ConfigurationError(f"need dt > 0 and n_steps >= 1, got dt={self.dt}, n_steps={self.n_steps}")

    @property
    def horizon(self) -> float:
        return self.dt * self.n_steps

    @cached_property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_steps + 1, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w

    def check_resolves(self, mu_max: float):
        if self.dt * mu_max > MAX_PHASE_PER_STEP + 1e-12:
            raise ConfigurationError(
                f"time step {self.dt} undersamples frequency {mu_max:.4g}: "
                f"dt * mu = {self.dt * mu_max:.3f} > pi/4")


@dataclass
class BoundaryTrace:
    """Samples of boundary data on times x sphere grid, time index outermost."""

    time_grid: TimeGrid
    angular: AngularGrid
    samples: np.ndarray

    def __post_init__(self):
        expected = (self.time_grid.n_steps + 1,) + self.angular.shape
        self.samples = np.asarray(self.samples)
        if self.samples.shape != expected:
            raise ShapeError(f"trace shape {self.samples.shape}, expected {expected}")

    def flat(self) -> np.ndarray:
        return self.samples.reshape(self.time_grid.n_steps + 1, self.angular.size)

    def restricted(self, horizon: float) -> "BoundaryTrace":
        """The initial segment of the trace up to a smaller horizon."""
        n = int(round(horizon / self.time_grid.dt))
        if not 1 <= n <= self.time_grid.n_steps:
            raise ValueError(f"horizon {horizon} outside recorded range")
        return BoundaryTrace(TimeGrid(self.time_grid.dt, n), self.angular, self.samples[: n + 1])


def _require_same_trace_grids(u: BoundaryTrace, v: BoundaryTrace):
    if u.time_grid != v.time_grid or u.angular != v.angular:
        raise ShapeError("boundary traces live on different grids")


def time_averaged_inner_product(u: BoundaryTrace, v: BoundaryTrace) -> complex:
    """(2/A) * trapezoid-in-time, exact-in-angle integral of u conj(v)."""
    _require_same_trace_grids(u, v)
    ang = (u.flat() * np.conj(v.flat())) @ u.angular.weights
    return complex(2.0 / u.time_grid.horizon * np.dot(u.time_grid.weights, ang))


def trace_norm(u: BoundaryTrace) -> float:
    ang = (np.abs(u.flat()) ** 2) @ u.angular.weights
    return float(np.sqrt(2.0 / u.time_grid.horizon * np.dot(u.time_grid.weights, ang)))


def _safe_sinc(x: np.ndarray | float):
    """sin(x)/x continued through 0."""
    return np.sinc(np.asarray(x) / np.pi)


def cosine_pair_average(iota1: float, iota2: float, horizon: float) -> float:
    """(2/A) int_0^A cos(iota1 t) cos(iota2 t) dt, exactly.

    Equals sinc((i1-i2)A) + sinc((i1+i2)A): 2 when both frequencies vanish,
    1 + sin(2 iota A)/(2 iota A) on the diagonal, and O(1/(gap*A)) off it.
    """
    if iota1 < 0.0 or iota2 < 0.0 or horizon <= 0.0:
        raise ValueError("frequencies must be >= 0 and horizon > 0")
    return float(_safe_sinc((iota1 - iota2) * horizon) + _safe_sinc((iota1 + iota2) * horizon))


def singular_trace(index: ModeIndex, mu: float, time_grid: TimeGrid, angular: AngularGrid) -> BoundaryTrace:
    """The unit basis trace: angular factor of the mode times cos(mu t)."""
    time_grid.check_resolves(mu)
    ang = _angular_factor(index, angular)
    samples = np.cos(mu * time_grid.times)[:, None] * ang[None, :]
    return BoundaryTrace(time_grid, angular, samples.reshape((time_grid.n_steps + 1,) + angular.shape))


def _homogeneous_bc(modes: list[Mode]) -> BoundaryCondition:
    bcs = {m.bc for m in modes}
    if len(bcs) != 1:
        raise TypeError("mode set mixes boundary conditions")
    return bcs.pop()


def forward_spectral(
    coeffs: ModalCoefficients,
    modes: list[Mode],
    time_grid: TimeGrid,
    angular: AngularGrid,
) -> BoundaryTrace:
    """Boundary data of the initial pressure with the given modal coefficients.

    Neumann mode sets yield the pressure trace with per-mode amplitude h(1);
    Dirichlet sets yield the normal-derivative trace with amplitude h'(1).
    """
    if not modes:
        raise ValueError("empty mode set")
    bc = _homogeneous_bc(modes)
    mus = np.array([m.mu for m in modes])
    time_grid.check_resolves(float(mus.max()))
    sigma = np.array([
        m.boundary_value if bc is BoundaryCondition.NEUMANN else m.boundary_derivative
        for m in modes
    ])
    vec = coeffs.vector(modes) * sigma
    ang = np.stack([_angular_factor(m.index, angular) for m in modes])   # (n_modes, n_ang)
    time_mat = np.cos(time_grid.times[:, None] * mus[None, :])           # (n_t, n_modes)
    samples = time_mat @ (vec[:, None] * ang)
    return BoundaryTrace(time_grid, angular, samples.reshape((time_grid.n_steps + 1,) + angular.shape))


# ---------------------------------------------------------------------------
# Polar-grid FDTD
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FdtdConfig:
    """Leapfrog parameters.

    cfl scales the stable step dt = cfl * dr / sqrt(c_max); the filtered
    scheme is von Neumann stable for cfl < 1/sqrt(2), enforced here with a
    small margin.  snapshot_stride thins the energy history (in units of
    trace samples).
    """

    cfl: float = 0.45
    snapshot_stride: int = 1

    def __post_init__(self):
        if not 0.0 < self.cfl <= 0.7:
            raise ConfigurationError(f"cfl must lie in (0, 0.7], got {self.cfl}")
        if self.snapshot_stride < 1:
            raise ConfigurationError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")


@dataclass
class FdtdRun:
    """Trace plus diagnostics of one leapfrog integration."""

    trace: BoundaryTrace
    dt_sim: float
    stride: int
    energy_times: np.ndarray
    energy: np.ndarray
    max_amplitude: float


def leapfrog_frequency(mu, dt: float):
    """Oscillation frequency realized by the leapfrog scheme at step dt.

    A spatial eigenpair with frequency mu evolves under the central
    second-difference in time as cos(omega t) with
    omega = (2/dt) asin(mu dt / 2) -- exactly, including the usual
    half-acceleration first step, since both have the same Taylor action on
    the mode amplitude.  Recovery against cos(omega t) therefore cancels the
    scheme's temporal dispersion; the offset is O((mu dt)^2 mu) and only
    matters over long horizons.  Accepts scalars or arrays; mu dt < 2 is the
    stability region and is required.
    """
    mu = np.asarray(mu, dtype=float)
    if dt <= 0.0:
        raise ValueError(f"time step must be positive, got {dt}")
    half = mu * (dt / 2.0)
    if np.any(half >= 1.0):
        raise ValueError("mu dt >= 2 is outside the leapfrog stability region")
    out = (2.0 / dt) * np.arcsin(half)
    return float(out) if out.ndim == 0 else out


class _PolarFilter:
    """Azimuthal Fourier cutoff for the innermost rings.

    Ring j keeps order l when the discrete angular wavenumber
    (2/dtheta) |sin(l dtheta / 2)| is at most 2 r_j / dr, capping the
    angular symbol at the radial one.
    """

    def __init__(self, radial: RadialGrid, n_theta: int):
        dtheta = 2.0 * np.pi / n_theta
        centers = radial.centers
        self.n_rows = int(np.searchsorted(centers, radial.spacing / dtheta))
        if self.n_rows == 0:
            self.mask = None
            return
        freqs = np.fft.fftfreq(n_theta, d=1.0 / n_theta)          # signed orders
        wavenumber = 2.0 / dtheta * np.abs(np.sin(freqs * dtheta / 2.0))
        cap = 2.0 * centers[: self.n_rows, None] / radial.spacing
        self.mask = wavenumber[None, :] <= cap

    def __call__(self, field: np.ndarray) -> np.ndarray:
        if self.mask is None:
            return field
        block = np.fft.fft(field[: self.n_rows], axis=1)
        block *= self.mask
        block = np.fft.ifft(block, axis=1)
        if not np.iscomplexobj(field):
            block = block.real
        field[: self.n_rows] = block
        return field


def fdtd_time_step(profile: SoundSpeedProfile, radial: RadialGrid,
                   time_grid: TimeGrid, config: FdtdConfig = FdtdConfig()) -> tuple[float, int]:
    """(substep, stride) a leapfrog run with these settings integrates at.

    Every trace interval is subdivided into the smallest integer number of
    substeps keeping cfl * spacing / sqrt(c_max) satisfied.  Deterministic in
    its arguments, so a recovery stage can reproduce the substep of a run it
    only has the recording of.
    """
    dt_stable = config.cfl * radial.spacing / np.sqrt(profile.c_max)
    stride = max(1, int(np.ceil(time_grid.dt / dt_stable - 1e-12)))
    return time_grid.dt / stride, stride


def run_fdtd(
    f0: GridFunction,
    profile: SoundSpeedProfile,
    time_grid: TimeGrid,
    config: FdtdConfig = FdtdConfig(),
) -> FdtdRun:
    """Leapfrog the sound-hard wave problem and record the boundary trace.

    The solver subdivides every trace interval into an integer number of
    stable steps.  The recorded boundary value extrapolates the last three
    rings exactly like the eigensolver's boundary_values, so both forward
    routes report the same observable.
    """
    if f0.angular.dimension != 2:
        raise ConfigurationError("FDTD is implemented for dimension 2 only")
    radial, angular = f0.radial, f0.angular
    n_r, n_t = radial.n_cells, angular.n_azimuth
    dr = radial.spacing
    dtheta = 2.0 * np.pi / n_t

    dt, stride = fdtd_time_step(profile, radial, time_grid, config)
    n_sim = time_grid.n_steps * stride

    r = radial.centers
    c_ring = evaluate_speed(profile, r)[:, None]
    face_over_r = radial.faces[1:-1] / dr                  # interior face radii / dr
    inv_r_dr = 1.0 / (r * dr)
    inv_r2_dth2 = 1.0 / (r * dtheta) ** 2
    filt = _PolarFilter(radial, n_t)

    def laplacian(p: np.ndarray) -> np.ndarray:
        flux = face_over_r[:, None] * (p[1:] - p[:-1])     # zero flux closes both ends
        lap = np.zeros_like(p)
        lap[0] = flux[0] * inv_r_dr[0]
        lap[1:-1] = (flux[1:] - flux[:-1]) * inv_r_dr[1:-1, None]
        lap[-1] = -flux[-1] * inv_r_dr[-1]
        lap += (np.roll(p, -1, axis=1) - 2.0 * p + np.roll(p, 1, axis=1)) * inv_r2_dth2[:, None]
        return filt(lap)

    vol = (r * dr * dtheta)[:, None]
    kin_w = vol / c_ring

    def potential_energy(p, lap):
        return -0.5 * float(np.sum((p * np.conj(lap)).real * vol))

    dtype = complex if np.iscomplexobj(f0.values) else float
    p_old = filt(np.array(f0.values, dtype=dtype))
    n_rows = time_grid.n_steps + 1
    samples = np.empty((n_rows, n_t), dtype=dtype)
    samples[0] = _extrapolate_boundary(p_old, dr)[0]
    max_amp = float(np.max(np.abs(p_old)))

    energy_rows = list(range(0, n_rows, config.snapshot_stride))
    if energy_rows[-1] != n_rows - 1:
        energy_rows.append(n_rows - 1)
    energy_rows = set(energy_rows)
    energy_times, energy = [], []

    lap = laplacian(p_old)
    if 0 in energy_rows:
        energy_times.append(0.0)
        energy.append(potential_energy(p_old, lap))        # initial velocity is zero
    p = p_old + 0.5 * dt * dt * c_ring * lap

    for s in range(1, n_sim + 1):
        lap = laplacian(p)
        p_new = 2.0 * p - p_old + dt * dt * c_ring * lap
        if s % stride == 0:
            row = s // stride
            boundary = _extrapolate_boundary(p, dr)[0]
            if not np.all(np.isfinite(boundary)):
                raise DivergenceError(f"FDTD diverged at step {s} (t = {s * dt:.4g})", step=s)
            samples[row] = boundary
            max_amp = max(max_amp, float(np.max(np.abs(p))))
            if row in energy_rows:
                velocity = (p_new - p_old) / (2.0 * dt)
                kin = 0.5 * float(np.sum((np.abs(velocity) ** 2) * kin_w))
                energy_times.append(row * time_grid.dt)
                energy.append(kin + potential_energy(p, lap))
        p_old, p = p, p_new

    trace = BoundaryTrace(time_grid, angular, samples)
    return FdtdRun(trace, dt, stride, np.array(energy_times), np.array(energy), max_amp)


def forward_fdtd(
    f0: GridFunction,
    profile: SoundSpeedProfile,
    time_grid: TimeGrid,
    config: FdtdConfig = FdtdConfig(),
) -> BoundaryTrace:
    """Boundary pressure trace of the leapfrog solver (see run_fdtd)."""
    return run_fdtd(f0, profile, time_grid, config).trace


# ---------------------------------------------------------------------------
# Trace file formats: binary "PATTRAC1" with header n_theta u32, n_steps u32,
# dt f64 followed by (n_steps + 1) * n_theta little-endian f64 samples
# (time-outer; n_steps counts intervals); or CSV with one sample per row.
# Both hold real data, which every trace of a real initial pressure is.
# ---------------------------------------------------------------------------

_TRACE_MAGIC = b"PATTRAC1"


def _real_trace_samples(trace: BoundaryTrace) -> np.ndarray:
    if trace.angular.dimension != 2:
        raise ConfigurationError("trace files hold 2-d boundary data")
    samples = np.asarray(trace.samples)
    if np.iscomplexobj(samples):
        tol = 1e-9 * max(1.0, float(np.max(np.abs(samples))))
        if float(np.max(np.abs(samples.imag))) > tol:
            raise ValueError("trace has a non-negligible imaginary part; cannot store as real")
        samples = samples.real
    return np.ascontiguousarray(samples, dtype="<f8")


def save_trace(path, trace: BoundaryTrace):
    samples = _real_trace_samples(trace)
    with open(path, "wb") as fh:
        fh.write(_TRACE_MAGIC)
        fh.write(struct.pack("<IId", trace.angular.n_azimuth, trace.time_grid.n_steps, trace.time_grid.dt))
        fh.write(samples.tobytes())


def load_trace(path) -> BoundaryTrace:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(_TRACE_MAGIC)] != _TRACE_MAGIC:
        raise IOError(f"{path}: not a boundary trace file")
    n_theta, n_steps, dt = struct.unpack_from("<IId", blob, len(_TRACE_MAGIC))
    offset = len(_TRACE_MAGIC) + 16
    count = (n_steps + 1) * n_theta
    if len(blob) - offset != 8 * count:
        raise IOError(f"{path}: payload size does not match header")
    samples = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(n_steps + 1, n_theta)
    return BoundaryTrace(TimeGrid(dt, n_steps), AngularGrid(2, n_theta), samples.copy())


def save_trace_csv(path, trace: BoundaryTrace):
    samples = _real_trace_samples(trace)
    with open(path, "w") as fh:
        fh.write("theta_index,time_index,value\n")
        for t_idx, row in enumerate(samples.tolist()):
            for a_idx, v in enumerate(row):
                fh.write(f"{a_idx},{t_idx},{v!r}\n")


def load_trace_csv(path, dt: float) -> BoundaryTrace:
    """Rebuild a trace from the CSV export; dt is not stored in the file."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    n_theta = int(data["theta_index"].max()) + 1
    n_times = int(data["time_index"].max()) + 1
    samples = np.zeros((n_times, n_theta))
    samples[data["time_index"].astype(int), data["theta_index"].astype(int)] = data["value"]
    return BoundaryTrace(TimeGrid(dt, n_times - 1), AngularGrid(2, n_theta), samples)
