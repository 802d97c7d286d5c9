"""Modal basis on the unit ball: radial eigenfunctions times angular factors.

A mode is phi_{k,l}(r, theta) = h_{k,l}(r) e^{il theta} / sqrt(2 pi) in 2-d,
or phi_{k,l,m} = h_{k,l}(r) Y_lm(colat, azim) in 3-d.  The family is
orthonormal in L^2 of the ball with weight 1/c(|x|); with the midpoint radial
rule and a uniform (2-d) or Gauss-Legendre x uniform (3-d) angular rule the
discrete Gram matrix is the identity to solver precision, because the radial
vectors are discretely orthonormal and the angular rules integrate the
occurring products exactly.

Negative angular orders reuse the radial solve of |l|: the radial equation
depends on l only through l^2 (2-d) or l(l+1) (3-d), so one RadialMode is
shared by every signed order built on it.
"""

from __future__ import annotations

import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, ShapeError
from .radial import (
    BoundaryCondition,
    RadialGrid,
    RadialMode,
    radial_eigenvalues,
    solve_radial_modes,
)
from .speed import SoundSpeedProfile, evaluate_speed

__all__ = [
    "ModeIndex",
    "Mode",
    "ModalCoefficients",
    "AngularGrid",
    "QuadratureRule",
    "GridFunction",
    "spherical_harmonic",
    "evaluate_mode",
    "mode_samples",
    "weighted_inner_product",
    "weighted_norm",
    "project",
    "synthesize",
    "gram_matrix",
    "discrete_angular_eigenvalue",
    "enumerate_modes",
    "save_grid",
    "load_grid",
    "save_grid_csv",
]

THREAD_ENV_VAR = "PATSVD_THREADS"


def worker_count() -> int:
    """Number of worker threads for independent radial solves."""
    raw = os.environ.get(THREAD_ENV_VAR, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"{THREAD_ENV_VAR} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigurationError(f"{THREAD_ENV_VAR} must be >= 1, got {n}")
    return n


@dataclass(frozen=True, order=True)
class ModeIndex:
    """Key of a basis mode: (dimension, l, k) plus m in 3-d.

    l is signed in 2-d; in 3-d l >= 0 and |m| <= l.  k >= 1 counts radial
    overtones from the lowest frequency up.
    """

    dimension: int
    l: int
    k: int
    m: int = 0

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dimension}")
        if self.k < 1:
            raise ValueError(f"radial index k must be >= 1, got {self.k}")
        if self.dimension == 3 and (self.l < 0 or abs(self.m) > self.l):
            raise ValueError(f"3-d index needs l >= 0 and |m| <= l, got l={self.l}, m={self.m}")
        if self.dimension == 2 and self.m != 0:
            raise ValueError("2-d modes carry no azimuthal order m")

    def astuple(self) -> tuple[int, int, int, int]:
        return (self.dimension, self.l, self.k, self.m)


@dataclass
class Mode:
    """A full basis mode: shared radial part plus its angular labels."""

    index: ModeIndex
    radial: RadialMode

    def __post_init__(self):
        if abs(self.index.l) != self.radial.l or self.index.k != self.radial.k:
            raise ValueError("mode index does not match its radial part")
        if self.index.dimension != self.radial.dimension:
            raise ValueError("mode dimension does not match its radial part")

    @property
    def mu(self) -> float:
        return self.radial.mu

    @property
    def bc(self) -> BoundaryCondition:
        return self.radial.bc

    @property
    def boundary_value(self) -> float:
        return self.radial.boundary_value

    @property
    def boundary_derivative(self) -> float:
        return self.radial.boundary_derivative


@dataclass
class ModalCoefficients:
    """Coefficients keyed by mode index."""

    entries: dict[ModeIndex, complex]

    def vector(self, modes: list[Mode]) -> np.ndarray:
        """Coefficients aligned with a mode list; missing entries are 0."""
        return np.array([self.entries.get(m.index, 0.0) for m in modes], dtype=complex)

    @staticmethod
    def from_vector(modes: list[Mode], vec) -> "ModalCoefficients":
        vec = np.asarray(vec)
        if vec.shape != (len(modes),):
            raise ShapeError(f"coefficient vector length {vec.shape} does not match {len(modes)} modes")
        if not np.all(np.isfinite(vec)):
            raise ValueError("coefficients must be finite")
        return ModalCoefficients({m.index: complex(v) for m, v in zip(modes, vec)})

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(v) ** 2 for v in self.entries.values())))


@dataclass(frozen=True)
class AngularGrid:
    """Quadrature nodes on S^1 (uniform) or S^2 (Gauss-Legendre x uniform)."""

    dimension: int
    n_azimuth: int
    n_colat: int = 0

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dimension}")
        if self.n_azimuth < 4:
            raise ConfigurationError(f"need at least 4 azimuthal points, got {self.n_azimuth}")
        if self.dimension == 3 and self.n_colat < 2:
            raise ConfigurationError(f"need at least 2 colatitude nodes, got {self.n_colat}")
        if self.dimension == 2 and self.n_colat != 0:
            raise ConfigurationError("2-d angular grid takes no colatitude nodes")

    @cached_property
    def azimuths(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_azimuth) / self.n_azimuth

    @cached_property
    def colat_cos(self) -> np.ndarray:
        x, _ = np.polynomial.legendre.leggauss(self.n_colat)
        return x

    @cached_property
    def colat_weights(self) -> np.ndarray:
        _, w = np.polynomial.legendre.leggauss(self.n_colat)
        return w

    @cached_property
    def weights(self) -> np.ndarray:
        """Flat angular weights; they sum to the measure of the sphere."""
        dphi = 2.0 * np.pi / self.n_azimuth
        if self.dimension == 2:
            return np.full(self.n_azimuth, dphi)
        return (self.colat_weights[:, None] * np.full(self.n_azimuth, dphi)[None, :]).ravel()

    @property
    def shape(self) -> tuple:
        return (self.n_azimuth,) if self.dimension == 2 else (self.n_colat, self.n_azimuth)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def max_resolved_order(self) -> int:
        """Largest |l| (2-d) or max(l, |m|) (3-d) the rules handle exactly."""
        azim = (self.n_azimuth - 2) // 2
        if self.dimension == 2:
            return azim
        return min(azim, self.n_colat - 1)


@dataclass(frozen=True)
class QuadratureRule:
    """Product rule: radial midpoint times an angular rule."""

    radial: RadialGrid
    angular: AngularGrid

    @property
    def dimension(self) -> int:
        return self.angular.dimension

    @cached_property
    def radial_weights(self) -> np.ndarray:
        return np.full(self.radial.n_cells, self.radial.spacing)

    def volume_weights(self, profile: SoundSpeedProfile) -> np.ndarray:
        """Weights of the c^{-1}-weighted volume integral, shape (n_cells, n_angular)."""
        r = self.radial.centers
        rad = r ** (self.dimension - 1) / evaluate_speed(profile, r) * self.radial.spacing
        return rad[:, None] * self.angular.weights[None, :]


@dataclass
class GridFunction:
    """Samples of a function of the ball on a radial x angular product grid.

    values has shape (n_cells, n_azimuth) in 2-d or
    (n_cells, n_colat, n_azimuth) in 3-d, radial index outermost.
    """

    radial: RadialGrid
    angular: AngularGrid
    values: np.ndarray

    def __post_init__(self):
        expected = (self.radial.n_cells,) + self.angular.shape
        self.values = np.asarray(self.values)
        if self.values.shape != expected:
            raise ShapeError(f"grid values shape {self.values.shape}, expected {expected}")

    def flat(self) -> np.ndarray:
        """Angular axes merged: shape (n_cells, angular size)."""
        return self.values.reshape(self.radial.n_cells, self.angular.size)


def _require_same_grids(f: GridFunction, g: GridFunction):
    if f.radial.n_cells != g.radial.n_cells or f.angular != g.angular:
        raise ShapeError("grid functions live on different grids")


# ---------------------------------------------------------------------------
# Angular factors
# ---------------------------------------------------------------------------

def _legendre_normalized(l_max: int, m: int, x: np.ndarray) -> np.ndarray:
    """Normalized associated Legendre P~_l^m(x) for l = m..l_max, m >= 0.

    Normalization makes Y_lm = P~_l^m(cos colat) e^{im azim} orthonormal on
    the sphere; the Condon-Shortley phase is included.  Three-term upward
    recurrence in l, stable for the moderate orders used here.
    """
    x = np.asarray(x, dtype=float)
    sine = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    pmm = np.full_like(x, 1.0 / np.sqrt(4.0 * np.pi))
    for q in range(1, m + 1):
        pmm = -np.sqrt((2.0 * q + 1.0) / (2.0 * q)) * sine * pmm
    rows = [pmm]
    if l_max > m:
        rows.append(np.sqrt(2.0 * m + 3.0) * x * pmm)
    for l in range(m + 2, l_max + 1):
        a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
        b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
        rows.append(a * (x * rows[-1] - b * rows[-2]))
    return np.stack(rows)


def spherical_harmonic(l: int, m: int, colat, azim) -> np.ndarray:
    """Orthonormal Y_lm sampled on the outer product colat x azim.

    colat and azim are 1-d arrays (radians); the result has shape
    (len(colat), len(azim)).  Scalars are accepted and collapse the axis.
    """
    if l < 0 or abs(m) > l:
        raise ValueError(f"need l >= 0 and |m| <= l, got l={l}, m={m}")
    colat_arr = np.atleast_1d(np.asarray(colat, dtype=float))
    azim_arr = np.atleast_1d(np.asarray(azim, dtype=float))
    x = np.cos(colat_arr)
    leg = _legendre_normalized(l, abs(m), x)[-1]
    phase = np.exp(1j * m * azim_arr)
    out = leg[:, None] * phase[None, :]
    if m < 0:
        out = out * (-1) ** (abs(m) % 2)
    if np.isscalar(colat) and np.isscalar(azim):
        return complex(out[0, 0])
    return out


def _angular_factor(mode_index: ModeIndex, angular: AngularGrid) -> np.ndarray:
    """Mode's angular factor sampled on the grid, flat shape (angular size,)."""
    order = abs(mode_index.l) if angular.dimension == 2 else max(mode_index.l, abs(mode_index.m))
    if order > angular.max_resolved_order():
        raise ConfigurationError(
            f"angular grid resolves orders up to {angular.max_resolved_order()}, mode needs {order}")
    if angular.dimension == 2:
        return np.exp(1j * mode_index.l * angular.azimuths) / np.sqrt(2.0 * np.pi)
    colat = np.arccos(angular.colat_cos)
    return spherical_harmonic(mode_index.l, mode_index.m, colat, angular.azimuths).ravel()


def evaluate_mode(mode: Mode, r, *angles) -> np.ndarray:
    """Pointwise mode evaluation, radial part linearly interpolated.

    2-d call: evaluate_mode(mode, r, theta); 3-d: evaluate_mode(mode, r,
    colat, azim).  All arguments broadcast; r must lie in (0, 1].
    """
    expected = 1 if mode.index.dimension == 2 else 2
    if len(angles) != expected:
        raise ValueError(f"{mode.index.dimension}-d mode takes {expected} angle argument(s)")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0) or np.any(r_arr > 1.0):
        raise ValueError("radius outside (0, 1]")
    rm = mode.radial
    centers = rm.grid.centers
    v = rm.values
    inner = v[0] + (v[1] - v[0]) * (0.0 - centers[0]) / (centers[1] - centers[0])
    xs = np.concatenate([[0.0], centers, [1.0]])
    ys = np.concatenate([[inner], v, [rm.boundary_value]])
    radial_part = np.interp(r_arr, xs, ys)
    if mode.index.dimension == 2:
        ang = np.exp(1j * mode.index.l * np.asarray(angles[0], dtype=float)) / np.sqrt(2.0 * np.pi)
        return radial_part * ang
    colat, azim = (np.asarray(a, dtype=float) for a in angles)
    x = np.cos(np.atleast_1d(colat))
    leg = _legendre_normalized(mode.index.l, abs(mode.index.m), x)[-1]
    if np.isscalar(colat) or colat.ndim == 0:
        leg = leg[0]
    phase = np.exp(1j * mode.index.m * azim)
    sign = (-1) ** (abs(mode.index.m) % 2) if mode.index.m < 0 else 1
    return radial_part * sign * leg * phase


def mode_samples(mode: Mode, quad: QuadratureRule) -> GridFunction:
    """The mode sampled on a product grid (radial part resampled if needed)."""
    if quad.radial.n_cells == mode.radial.grid.n_cells:
        radial_part = mode.radial.values
    else:
        radial_part = np.interp(quad.radial.centers, mode.radial.grid.centers, mode.radial.values)
    flat = radial_part[:, None] * _angular_factor(mode.index, quad.angular)[None, :]
    return GridFunction(quad.radial, quad.angular, flat.reshape((quad.radial.n_cells,) + quad.angular.shape))


# ---------------------------------------------------------------------------
# Inner products, projection, synthesis
# ---------------------------------------------------------------------------

def weighted_inner_product(f: GridFunction, g: GridFunction, profile: SoundSpeedProfile) -> complex:
    """<f, g> = integral of f conj(g) / c over the ball (second slot conjugated)."""
    _require_same_grids(f, g)
    quad = QuadratureRule(f.radial, f.angular)
    w = quad.volume_weights(profile)
    return complex(np.sum(f.flat() * np.conj(g.flat()) * w))


def weighted_norm(f: GridFunction, profile: SoundSpeedProfile) -> float:
    quad = QuadratureRule(f.radial, f.angular)
    w = quad.volume_weights(profile)
    return float(np.sqrt(np.sum(np.abs(f.flat()) ** 2 * w).real))


def _group_by_radial(modes: list[Mode]):
    """Group mode positions by (signed l, m) preserving order."""
    groups: dict[tuple[int, int], list[int]] = {}
    for pos, mode in enumerate(modes):
        groups.setdefault((mode.index.l, mode.index.m), []).append(pos)
    return groups


def _check_modes_on_grid(modes: list[Mode], quad: QuadratureRule):
    for mode in modes:
        if mode.index.dimension != quad.dimension:
            raise ShapeError("mode dimension does not match quadrature rule")
        if mode.radial.grid.n_cells != quad.radial.n_cells:
            raise ShapeError("mode radial grid does not match quadrature rule; resample first")


def project(f: GridFunction, modes: list[Mode], profile: SoundSpeedProfile) -> ModalCoefficients:
    """Weighted-L^2 coefficients <f, phi_i> for each mode.

    In 2-d the angular reduction is one discrete Fourier transform over
    theta; radial reductions are midpoint sums against each stored radial
    vector.  In 3-d the angular reduction is a dense sum against sampled
    spherical harmonics.
    """
    quad = QuadratureRule(f.radial, f.angular)
    _check_modes_on_grid(modes, quad)
    r = quad.radial.centers
    rad_w = r ** (quad.dimension - 1) / evaluate_speed(profile, r) * quad.radial.spacing
    out = np.zeros(len(modes), dtype=complex)
    if quad.dimension == 2:
        n_t = quad.angular.n_azimuth
        # hat_f[l](r_j) = sum_i f(r_j, theta_i) e^{-il theta_i} * dtheta
        hat = np.fft.fft(f.values, axis=1) * (2.0 * np.pi / n_t)
        for (l, _m), positions in _group_by_radial(modes).items():
            col = hat[:, l % n_t] / np.sqrt(2.0 * np.pi)
            for pos in positions:
                out[pos] = np.sum(modes[pos].radial.values * rad_w * col)
    else:
        ang_w = quad.angular.weights
        flat = f.flat()
        for (_l, _m), positions in _group_by_radial(modes).items():
            a = _angular_factor(modes[positions[0]].index, quad.angular)
            col = flat @ (np.conj(a) * ang_w)
            for pos in positions:
                out[pos] = np.sum(modes[pos].radial.values * rad_w * col)
    return ModalCoefficients.from_vector(modes, out)


def synthesize(coeffs: ModalCoefficients, modes: list[Mode], quad: QuadratureRule) -> GridFunction:
    """Sum of coefficient times mode on the product grid."""
    _check_modes_on_grid(modes, quad)
    vec = coeffs.vector(modes)
    if quad.dimension == 2:
        n_t = quad.angular.n_azimuth
        spectrum = np.zeros((quad.radial.n_cells, n_t), dtype=complex)
        for (l, _m), positions in _group_by_radial(modes).items():
            if abs(l) > quad.angular.max_resolved_order():
                raise ConfigurationError(
                    f"angular grid resolves orders up to {quad.angular.max_resolved_order()}, mode needs {abs(l)}")
            acc = np.zeros(quad.radial.n_cells, dtype=complex)
            for pos in positions:
                acc += vec[pos] * modes[pos].radial.values
            spectrum[:, l % n_t] += acc / np.sqrt(2.0 * np.pi)
        values = np.fft.ifft(spectrum, axis=1) * n_t
    else:
        values = np.zeros((quad.radial.n_cells, quad.angular.size), dtype=complex)
        for (_l, _m), positions in _group_by_radial(modes).items():
            a = _angular_factor(modes[positions[0]].index, quad.angular)
            acc = np.zeros(quad.radial.n_cells, dtype=complex)
            for pos in positions:
                acc += vec[pos] * modes[pos].radial.values
            values += acc[:, None] * a[None, :]
        values = values.reshape((quad.radial.n_cells,) + quad.angular.shape)
    return GridFunction(quad.radial, quad.angular, values)


def gram_matrix(modes: list[Mode], quad: QuadratureRule, profile: SoundSpeedProfile) -> np.ndarray:
    """Matrix of pairwise weighted inner products of sampled modes."""
    _check_modes_on_grid(modes, quad)
    w = quad.volume_weights(profile).ravel()
    sqrt_w = np.sqrt(w)
    sampled = np.empty((w.size, len(modes)), dtype=complex)
    for i, mode in enumerate(modes):
        sampled[:, i] = (mode.radial.values[:, None]
                         * _angular_factor(mode.index, quad.angular)[None, :]).ravel() * sqrt_w
    return sampled.conj().T @ sampled


# ---------------------------------------------------------------------------
# Enumeration of a frequency ball of modes
# ---------------------------------------------------------------------------

def _sort_key(mode: Mode):
    return (mode.mu, abs(mode.index.l), mode.index.l < 0, mode.index.m, mode.index.k)


def discrete_angular_eigenvalue(l: int, angular: AngularGrid) -> float:
    """Eigenvalue of the periodic second-difference operator for order l.

    On n uniform azimuths the harmonic exp(i l theta) is an eigenvector of
    the standard three-point angular stencil with eigenvalue
    (2/dtheta)^2 sin^2(l dtheta / 2), the discrete counterpart of l^2.
    Radial problems built with this constant share their spatial operator
    with a finite-difference solver on the same mesh, so the two agree to
    roundoff rather than to truncation order.  2-d only; |l| must not exceed
    the grid's Nyquist order n/2.
    """
    if angular.dimension != 2:
        raise ConfigurationError("discrete angular eigenvalues are 2-d only")
    if abs(l) > angular.n_azimuth // 2:
        raise ConfigurationError(
            f"order {l} is beyond the Nyquist order of {angular.n_azimuth} azimuths")
    dtheta = 2.0 * np.pi / angular.n_azimuth
    s = (2.0 / dtheta) * np.sin(abs(l) * dtheta / 2.0)
    return float(s * s)


def enumerate_modes(
    profile: SoundSpeedProfile,
    grid: RadialGrid,
    bc: BoundaryCondition,
    dimension: int = 2,
    mu_max: float | None = None,
    count: int | None = None,
    threads: int | None = None,
    angular_grid: AngularGrid | None = None,
) -> list[Mode]:
    """All modes with mu <= mu_max, or the `count` lowest-frequency modes.

    2-d orders come in conjugate pairs (+l, -l) sharing one radial solve; 3-d
    orders fan out over m = -l..l.  The list is sorted by (mu, |l|, sign, m,
    k) so truncation is deterministic; a count cut that would orphan part of
    a rotation multiplet is rounded up to keep the basis closed under
    conjugation.  Radial solves for distinct l run on a thread pool sized by
    the PATSVD_THREADS environment variable.

    Passing angular_grid replaces each separation constant l^2 by the
    discrete_angular_eigenvalue of that grid, producing the modal basis of
    the matching finite-difference spatial operator (2-d only).  Use it to
    recover from data simulated on the same mesh; the analytic constants are
    the right choice everywhere else.
    """
    if (count is None) == (mu_max is None):
        raise ValueError("specify exactly one of count and mu_max")
    if count is not None and count < 1:
        raise ValueError("count must be >= 1")
    if angular_grid is not None and dimension != 2:
        raise ConfigurationError("angular_grid matching is 2-d only")
    threads = worker_count() if threads is None else threads

    def separation(l: int) -> float | None:
        if angular_grid is None:
            return None
        return discrete_angular_eigenvalue(l, angular_grid)

    def multiplicity(l: int) -> int:
        if dimension == 2:
            return 1 if l == 0 else 2
        return 2 * l + 1

    def band_sizes(cutoff: float) -> list[int]:
        """Eigenvalue counts per l below the cutoff; stops at the first empty band."""
        sizes, l = [], 0
        # The discrete constants fold back past the Nyquist order, and the
        # quadrature stops resolving the factors one order earlier (where +l
        # and -l alias onto one vector); cap the scan so every returned mode
        # is usable on the grid it was matched to.
        l_cap = np.inf if angular_grid is None else angular_grid.max_resolved_order()
        while l <= l_cap:
            n = radial_eigenvalues(profile, grid, l, bc, dimension, mu_max=cutoff,
                                   angular_eigenvalue=separation(l)).size
            if n == 0:
                return sizes
            sizes.append(n)
            l += 1
        return sizes

    # Establish a frequency cutoff: given, or grown until `count` modes fit.
    if mu_max is not None:
        cutoff = float(mu_max)
        sizes = band_sizes(cutoff)
    else:
        cutoff = np.sqrt(profile.c_max) * np.pi * max(1.0, (count / 2.0) ** (1.0 / dimension))
        while True:
            sizes = band_sizes(cutoff)
            if sum(multiplicity(l) * n for l, n in enumerate(sizes)) >= count:
                break
            cutoff *= 1.4

    def solve_band(l: int) -> list[RadialMode]:
        return solve_radial_modes(profile, grid, l, bc, dimension, count=sizes[l],
                                  angular_eigenvalue=separation(l))

    band_ls = list(range(len(sizes)))
    if threads > 1 and len(band_ls) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            bands = dict(zip(band_ls, pool.map(solve_band, band_ls)))
    else:
        bands = {l: solve_band(l) for l in band_ls}

    modes: list[Mode] = []
    for l_val, band in bands.items():
        for rm in band:
            if dimension == 2:
                orders = [0] if l_val == 0 else [l_val, -l_val]
                for signed in orders:
                    modes.append(Mode(ModeIndex(2, signed, rm.k), rm))
            else:
                for m in range(-l_val, l_val + 1):
                    modes.append(Mode(ModeIndex(3, l_val, rm.k, m), rm))
    modes.sort(key=_sort_key)
    if count is not None:
        if len(modes) < count:
            raise ConfigurationError(f"only {len(modes)} modes below the cutoff, {count} requested")
        # Never cut through a rotation multiplet: a real field needs the
        # conjugate partner of every retained angular order, so extend past
        # `count` until the (|l|, k) group of the last mode is complete.
        cut = count
        last = modes[count - 1]
        while cut < len(modes):
            nxt = modes[cut]
            if (nxt.radial is last.radial
                    and abs(nxt.index.l) == abs(last.index.l)
                    and nxt.index.k == last.index.k):
                cut += 1
            else:
                break
        modes = modes[:cut]
    return modes


# ---------------------------------------------------------------------------
# Grid function file format: magic "PATGRID1", dimension u32, n_cells u32,
# then n_theta u32 (2-d) or n_colat u32 + n_azim u32 (3-d), then row-major
# little-endian f64 pairs (re, im), radial index outermost.
# ---------------------------------------------------------------------------

_GRID_MAGIC = b"PATGRID1"


def save_grid(path, f: GridFunction):
    with open(path, "wb") as fh:
        fh.write(_GRID_MAGIC)
        if f.angular.dimension == 2:
            fh.write(struct.pack("<III", 2, f.radial.n_cells, f.angular.n_azimuth))
        else:
            fh.write(struct.pack("<IIII", 3, f.radial.n_cells, f.angular.n_colat, f.angular.n_azimuth))
        flat = np.ascontiguousarray(f.values, dtype=complex).ravel()
        pairs = np.empty(2 * flat.size, dtype="<f8")
        pairs[0::2] = flat.real
        pairs[1::2] = flat.imag
        fh.write(pairs.tobytes())


def load_grid(path) -> GridFunction:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(_GRID_MAGIC)] != _GRID_MAGIC:
        raise IOError(f"{path}: not a grid function file")
    pos = len(_GRID_MAGIC)
    (dim,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    if dim == 2:
        n_cells, n_theta = struct.unpack_from("<II", blob, pos)
        pos += 8
        angular = AngularGrid(2, n_theta)
    elif dim == 3:
        n_cells, n_colat, n_azim = struct.unpack_from("<III", blob, pos)
        pos += 12
        angular = AngularGrid(3, n_azim, n_colat)
    else:
        raise IOError(f"{path}: unsupported dimension {dim}")
    count = n_cells * angular.size
    if len(blob) - pos != 16 * count:
        raise IOError(f"{path}: payload size does not match header")
    pairs = np.frombuffer(blob, dtype="<f8", count=2 * count, offset=pos)
    values = (pairs[0::2] + 1j * pairs[1::2]).reshape((n_cells,) + angular.shape)
    return GridFunction(RadialGrid(n_cells), angular, values)


def save_grid_csv(path, f: GridFunction):
    """Delimited export, intended for small grids: one row per sample."""
    flat = np.asarray(f.values, dtype=complex).reshape(f.radial.n_cells, f.angular.size)
    with open(path, "w") as fh:
        fh.write("radial_index,angular_index,re,im\n")
        for j, row in enumerate(flat.tolist()):
            for a, v in enumerate(row):
                fh.write(f"{j},{a},{v.real!r},{v.imag!r}\n")
