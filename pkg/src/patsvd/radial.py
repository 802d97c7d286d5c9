"""Radial eigenproblems for the wave operator c(r) * Laplacian on the unit ball.

Separating variables in n dimensions with a radial speed profile leaves, for
each angular index l, the weighted Sturm-Liouville problem

    -(r^(n-1) h')' + l (l + n - 2) r^(n-3) h = mu^2 (r^(n-1) / c(r)) h

on (0, 1], with a regular endpoint at r = 1 (Neumann h'(1) = 0 or Dirichlet
h(1) = 0) and a singular endpoint at r = 0 whose Weyl class depends only on l
(see classify_origin).  Eigenfunctions are normalized in L^2 with weight
w(r) = r^(n-1) / c(r).

Discretization: cells of width 1/n_cells centered at r_j = (j - 1/2)/n_cells,
so no node sits at the singular origin.  Integrating the equation over each
cell gives a flux-conservative tridiagonal stiffness matrix K; the flux
through the origin face carries the factor r^(n-1) and vanishes, which is
exactly the boundary-condition-free behavior the limit-point/limit-circle
analysis prescribes.  With the diagonal weight W the generalized problem
K h = lambda W h reduces to a standard symmetric tridiagonal one via
W^(-1/2) K W^(-1/2), solved with LAPACK bisection + inverse iteration
(scipy.linalg.eigh_tridiagonal).  Eigenvectors come back orthonormal in the
discrete weighted inner product, and mu = sqrt(lambda).
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal
from scipy.optimize import brentq
from scipy.special import jn_zeros, jnp_zeros, jv, jvp, spherical_jn

from .errors import ConfigurationError, NumericalError
from .speed import SoundSpeedProfile, evaluate_speed

__all__ = [
    "BoundaryCondition",
    "EndpointClass",
    "RadialGrid",
    "RadialMode",
    "DiscreteOperator",
    "classify_origin",
    "assemble_discrete_operator",
    "solve_radial_modes",
    "radial_eigenvalues",
    "boundary_values",
    "bessel_reference_modes",
    "reference_boundary_amplitude",
    "convergence_order",
    "save_modes",
    "load_modes",
]

# Relative floor below which a computed eigenvalue counts as the flat mode.
EIGENVALUE_FLOOR = 1e-12


class BoundaryCondition(enum.Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


class EndpointClass(enum.Enum):
    LIMIT_CIRCLE = "limit-circle"
    LIMIT_POINT = "limit-point"


@dataclass(frozen=True)
class RadialGrid:
    """Uniform cell-centered grid on [0, 1] with no node at the origin."""

    n_cells: int

    def __post_init__(self):
        if self.n_cells < 3:
            raise ConfigurationError(f"need at least 3 radial cells, got {self.n_cells}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_cells

    @cached_property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.spacing

    @cached_property
    def faces(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.spacing


@dataclass
class RadialMode:
    """One radial eigenfunction sampled on cell centers.

    values are orthonormal across modes of equal l in the discrete weighted
    inner product sum(h g w(r_j) spacing); boundary_value/boundary_derivative
    are one-sided extrapolations to r = 1 with the signs fixed so that
    Neumann modes have h(1) > 0 and Dirichlet modes h'(1) > 0.
    """

    dimension: int
    l: int
    k: int
    mu: float
    values: np.ndarray
    boundary_value: float
    boundary_derivative: float
    bc: BoundaryCondition
    grid: RadialGrid


@dataclass
class DiscreteOperator:
    """Tridiagonal stiffness K and diagonal weight W of one radial problem."""

    grid: RadialGrid
    dimension: int
    l: int
    bc: BoundaryCondition
    diag: np.ndarray
    off_diag: np.ndarray
    weights: np.ndarray

    def dense_stiffness(self) -> np.ndarray:
        n = self.grid.n_cells
        k = np.zeros((n, n))
        k[np.arange(n), np.arange(n)] = self.diag
        k[np.arange(n - 1), np.arange(1, n)] = self.off_diag
        k[np.arange(1, n), np.arange(n - 1)] = self.off_diag
        return k

    def dense_weight(self) -> np.ndarray:
        return np.diag(self.weights)


def _check_dimension(dimension: int):
    if dimension not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {dimension}")


def classify_origin(dimension: int, l: int) -> tuple[EndpointClass, tuple[str, str]]:
    """Weyl classification of the singular endpoint r = 0.

    Returns the class together with the pair of solutions of the l-th radial
    equation at eigenvalue zero whose integrability (weight r^(n-1)/c) decides
    it.  Only l = 0 is limit-circle; for l >= 1 the singular solution leaves
    the weighted L^2 space and r = 0 is limit-point, so no boundary condition
    may be imposed there.
    """
    _check_dimension(dimension)
    if l < 0:
        raise ValueError(f"angular index must be >= 0, got {l}")
    if l == 0:
        pair = ("1", "log(r)") if dimension == 2 else ("1", "r^-1")
        return EndpointClass.LIMIT_CIRCLE, pair
    if dimension == 2:
        return EndpointClass.LIMIT_POINT, (f"r^{l}", f"r^-{l}")
    return EndpointClass.LIMIT_POINT, (f"r^{l}", f"r^-{l + 1}")


def assemble_discrete_operator(
    profile: SoundSpeedProfile,
    grid: RadialGrid,
    l: int,
    bc: BoundaryCondition,
    dimension: int = 2,
    angular_eigenvalue: float | None = None,
) -> DiscreteOperator:
    """Flux-form finite-volume assembly of the radial operator pair (K, W).

    Interior face i at radius i*spacing carries flux coefficient
    r_face^(n-1)/spacing; the origin face contributes nothing because the
    area factor vanishes, and the r = 1 face is closed by the boundary
    condition (zero flux for Neumann, a ghost cell mirrored through zero for
    Dirichlet).  The centrifugal term and the weight are midpoint-sampled.

    angular_eigenvalue replaces the separation constant l*(l + n - 2) of the
    exact sphere Laplacian; pass the eigenvalue of a discretized angular
    operator to build radial problems consistent with finite-difference data
    on the same mesh.  It must vanish exactly when l = 0 (the origin
    behaviour is keyed to the integer order).
    """
    _check_dimension(dimension)
    if l < 0:
        raise ValueError(f"angular index must be >= 0, got {l}")
    if angular_eigenvalue is None:
        angular_eigenvalue = float(l * (l + dimension - 2))
    elif (angular_eigenvalue == 0.0) != (l == 0):
        raise ValueError(
            f"angular eigenvalue {angular_eigenvalue} inconsistent with order {l}")
    elif angular_eigenvalue < 0.0:
        raise ValueError(f"angular eigenvalue must be >= 0, got {angular_eigenvalue}")
    n = grid.n_cells
    dr = grid.spacing
    r = grid.centers
    area = grid.faces ** (dimension - 1)      # r^(n-1) at faces, zero at r=0

    flux = area / dr                          # flux coefficient per face
    diag = flux[:-1] + flux[1:]
    off_diag = -flux[1:-1]
    if bc is BoundaryCondition.NEUMANN:
        diag[-1] = flux[-2]
    else:
        # ghost value -h_N puts the zero of a linear profile exactly on r=1
        diag[-1] = flux[-2] + 2.0 * flux[-1]
    if angular_eigenvalue > 0.0:
        diag = diag + angular_eigenvalue * r ** (dimension - 3) * dr
    weights = r ** (dimension - 1) / evaluate_speed(profile, r) * dr
    return DiscreteOperator(grid, dimension, l, bc, diag, off_diag, weights)


def boundary_values(values: np.ndarray, grid: RadialGrid) -> tuple[float, float]:
    """Extrapolate a cell-centered profile to (h(1), h'(1)).

    Quadratic through the last three cell centers, exact for polynomials of
    degree <= 2, second-order accurate and consistent with both boundary
    closures of assemble_discrete_operator.
    """
    if len(values) != grid.n_cells:
        raise ValueError("values length does not match grid")
    h1, dh1 = _extrapolate_boundary(np.asarray(values, dtype=float), grid.spacing)
    return float(h1), float(dh1)


def _extrapolate_boundary(values: np.ndarray, spacing: float):
    """Vectorized boundary extrapolation along axis 0 (radial)."""
    a, b, c = values[-3], values[-2], values[-1]
    value = (3.0 * a - 10.0 * b + 15.0 * c) / 8.0
    deriv = (a - 3.0 * b + 2.0 * c) / spacing
    return value, deriv


def _fix_sign(values: np.ndarray, h1: float, dh1: float, bc: BoundaryCondition):
    anchor = h1 if bc is BoundaryCondition.NEUMANN else dh1
    if anchor == 0.0:
        anchor = values[-1]
    if anchor < 0.0:
        return -values, -h1, -dh1
    return values, h1, dh1


def solve_radial_modes(
    profile: SoundSpeedProfile,
    grid: RadialGrid,
    l: int,
    bc: BoundaryCondition,
    dimension: int = 2,
    count: int | None = None,
    mu_max: float | None = None,
    angular_eigenvalue: float | None = None,
) -> list[RadialMode]:
    """Solve the discrete radial eigenproblem for the lowest modes.

    Either the `count` lowest modes or all modes with mu <= mu_max are
    returned, ordered by increasing mu and indexed k = 1, 2, ...  For l = 0
    under Neumann the flat mode (mu = 0) is k = 1.  angular_eigenvalue
    overrides the separation constant, see assemble_discrete_operator.
    """
    if (count is None) == (mu_max is None):
        raise ValueError("specify exactly one of count and mu_max")
    op = assemble_discrete_operator(profile, grid, l, bc, dimension, angular_eigenvalue)
    n = grid.n_cells
    sqrt_w = np.sqrt(op.weights)
    d_std = op.diag / op.weights
    e_std = op.off_diag / (sqrt_w[:-1] * sqrt_w[1:])
    scale = np.max(np.abs(d_std)) + 2.0 * np.max(np.abs(e_std))

    if count is not None:
        if not 1 <= count <= n:
            raise ValueError(f"count must be in [1, {n}], got {count}")
        lam, vecs = eigh_tridiagonal(d_std, e_std, select="i", select_range=(0, count - 1))
    else:
        if mu_max < 0.0:
            raise ValueError("mu_max must be >= 0")
        lam, vecs = eigh_tridiagonal(
            d_std, e_std, select="v", select_range=(-scale, mu_max**2 * (1.0 + 1e-12) + EIGENVALUE_FLOOR * scale)
        )
        if lam.size == 0:
            return []

    floor = EIGENVALUE_FLOOR * max(1.0, scale)
    if lam[0] < -floor:
        raise NumericalError(f"operator not positive semi-definite: eigenvalue {lam[0]:.3e}")
    lam = np.where(np.abs(lam) <= floor, 0.0, lam)

    modes = []
    for idx in range(lam.size):
        values = vecs[:, idx] / sqrt_w       # unit standard vector -> unit weighted norm
        h1, dh1 = _extrapolate_boundary(values, grid.spacing)
        values, h1, dh1 = _fix_sign(values, h1, dh1, bc)
        modes.append(RadialMode(
            dimension=dimension, l=l, k=idx + 1, mu=float(np.sqrt(lam[idx])),
            values=values, boundary_value=float(h1), boundary_derivative=float(dh1),
            bc=bc, grid=grid,
        ))
    return modes


def radial_eigenvalues(
    profile: SoundSpeedProfile,
    grid: RadialGrid,
    l: int,
    bc: BoundaryCondition,
    dimension: int = 2,
    mu_max: float = np.inf,
    angular_eigenvalue: float | None = None,
) -> np.ndarray:
    """Eigenfrequencies mu <= mu_max without eigenvectors (cheap counting)."""
    op = assemble_discrete_operator(profile, grid, l, bc, dimension, angular_eigenvalue)
    sqrt_w = np.sqrt(op.weights)
    d_std = op.diag / op.weights
    e_std = op.off_diag / (sqrt_w[:-1] * sqrt_w[1:])
    scale = np.max(np.abs(d_std)) + 2.0 * np.max(np.abs(e_std))
    floor = EIGENVALUE_FLOOR * max(1.0, scale)
    hi = scale if np.isinf(mu_max) else mu_max**2 * (1.0 + 1e-12) + floor
    lam = eigvalsh_tridiagonal(d_std, e_std, select="v", select_range=(-scale, hi))
    lam = np.where(np.abs(lam) <= floor, 0.0, lam)
    return np.sqrt(np.clip(lam, 0.0, None))


# ---------------------------------------------------------------------------
# Constant-speed reference modes built from Bessel zeros
# ---------------------------------------------------------------------------

def _bracketed_zeros(f, count: int, step: float = 0.25) -> list[float]:
    """First `count` positive roots of f by sign-change scan plus brentq."""
    zeros = []
    x = step
    fx = f(x)
    guard = 0
    while len(zeros) < count:
        y = x + step
        fy = f(y)
        if fx == 0.0:
            zeros.append(x)
        elif fx * fy < 0.0:
            zeros.append(brentq(f, x, y, xtol=1e-14, rtol=1e-15))
        x, fx = y, fy
        guard += 1
        if guard > 200000:
            raise NumericalError("root scan did not find enough Bessel zeros")
    return zeros[:count]


def _radial_alphas(dimension: int, l: int, bc: BoundaryCondition, count: int) -> list[float]:
    """Scaled frequencies alpha with c = 1, including alpha = 0 for the flat mode."""
    neumann = bc is BoundaryCondition.NEUMANN
    if neumann and l == 0:
        if count == 1:
            return [0.0]
        if dimension == 2:
            return [0.0] + list(jnp_zeros(0, count - 1))
        return [0.0] + _bracketed_zeros(lambda x: spherical_jn(0, x, derivative=True), count - 1)
    if dimension == 2:
        return list(jnp_zeros(l, count)) if neumann else list(jn_zeros(l, count))
    if neumann:
        return _bracketed_zeros(lambda x: spherical_jn(l, x, derivative=True), count)
    return _bracketed_zeros(lambda x: spherical_jn(l, x), count)


def _radial_wave(dimension: int, l: int, alpha: float, r: np.ndarray, derivative: bool = False):
    if alpha == 0.0:
        return np.zeros_like(r) if derivative else np.ones_like(r)
    if dimension == 2:
        return alpha * jvp(l, alpha * r) if derivative else jv(l, alpha * r)
    return alpha * spherical_jn(l, alpha * r, derivative=True) if derivative else spherical_jn(l, alpha * r)


def bessel_reference_modes(
    c0: float,
    dimension: int,
    l: int,
    bc: BoundaryCondition,
    count: int,
    grid: RadialGrid,
) -> list[RadialMode]:
    """Analytic modes for constant speed c0, sampled like solve_radial_modes.

    Frequencies are mu = sqrt(c0) * alpha with alpha a zero of J_l' (Neumann)
    or J_l (Dirichlet) in 2-d and of the spherical counterpart in 3-d; l = 0
    Neumann starts with the flat mode at mu = 0.  Samples are normalized in
    the same discrete weighted norm the solver uses, so the two mode families
    are directly comparable at any resolution; boundary values come from the
    closed Bessel form rescaled consistently.
    """
    _check_dimension(dimension)
    if c0 <= 0.0:
        raise ValueError("c0 must be positive")
    if count < 1:
        raise ValueError("count must be >= 1")
    r = grid.centers
    dr = grid.spacing
    w = r ** (dimension - 1) / c0 * dr
    modes = []
    for k, alpha in enumerate(_radial_alphas(dimension, l, bc, count), start=1):
        raw = _radial_wave(dimension, l, alpha, r)
        norm = np.sqrt(np.sum(raw * raw * w))
        values = raw / norm
        h1 = _radial_wave(dimension, l, alpha, np.array([1.0]))[0] / norm
        dh1 = _radial_wave(dimension, l, alpha, np.array([1.0]), derivative=True)[0] / norm
        values, h1, dh1 = _fix_sign(values, h1, dh1, bc)
        modes.append(RadialMode(
            dimension=dimension, l=l, k=k, mu=float(np.sqrt(c0) * alpha),
            values=values, boundary_value=float(h1), boundary_derivative=float(dh1),
            bc=bc, grid=grid,
        ))
    return modes


def reference_boundary_amplitude(
    dimension: int, l: int, alpha: float, bc: BoundaryCondition, c0: float = 1.0
) -> float:
    """|h(1)| (Neumann) or |h'(1)| (Dirichlet) of the exactly normalized
    constant-speed mode with scaled frequency alpha, via the norm integral
    of the radial wave over [0, 1]."""
    if alpha == 0.0:
        return float(np.sqrt(dimension * c0))
    norm2, _ = quad(
        lambda s: _radial_wave(dimension, l, alpha, np.array([s]))[0] ** 2 * s ** (dimension - 1) / c0,
        0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=400,
    )
    if bc is BoundaryCondition.NEUMANN:
        amp = _radial_wave(dimension, l, alpha, np.array([1.0]))[0]
    else:
        amp = _radial_wave(dimension, l, alpha, np.array([1.0]), derivative=True)[0]
    return float(abs(amp) / np.sqrt(norm2))


def convergence_order(
    profile: SoundSpeedProfile,
    l: int,
    bc: BoundaryCondition,
    dimension: int,
    grid_sizes: list[int],
    count: int,
) -> list[float]:
    """Self-convergence order of each eigenvalue under grid refinement.

    grid_sizes must grow by a fixed integer factor (>= 2).  Returns one order
    estimate per mode from the last Richardson triple; modes that the scheme
    reproduces exactly at every size (the flat Neumann mode) report inf.

    The estimate is only meaningful while the leading error term dominates.
    A mode whose h^2 coefficient happens to nearly cancel (the first l = 1
    disk mode, for instance) yields successive differences close to the next
    order's contribution and the fitted exponent wanders; judge the scheme on
    modes further up the band, or fit the decay of the error against an
    external reference instead.
    """
    if len(grid_sizes) < 3:
        raise ValueError("need at least three grid sizes")
    ratios = {grid_sizes[i + 1] // grid_sizes[i] for i in range(len(grid_sizes) - 1)}
    if len(ratios) != 1 or any(
        grid_sizes[i + 1] != grid_sizes[i] * next(iter(ratios)) for i in range(len(grid_sizes) - 1)
    ) or next(iter(ratios)) < 2:
        raise ValueError("grid sizes must grow by one fixed integer factor >= 2")
    ratio = next(iter(ratios))
    mus = np.array([
        [m.mu for m in solve_radial_modes(profile, RadialGrid(n), l, bc, dimension, count=count)]
        for n in grid_sizes
    ])
    orders = []
    for j in range(count):
        d1 = abs(mus[-3, j] - mus[-2, j])
        d2 = abs(mus[-2, j] - mus[-1, j])
        if d1 < 1e-13 and d2 < 1e-13:
            orders.append(float("inf"))
        elif d2 == 0.0:
            orders.append(float("inf"))
        else:
            orders.append(float(np.log(d1 / d2) / np.log(ratio)))
    return orders


# ---------------------------------------------------------------------------
# Mode file format: magic "PATMODE1", then per mode a packed header
# (dimension u32, l i32, k u32, bc u8, mu f64, n_cells u32, h1 f64, dh1 f64)
# followed by n_cells little-endian f64 samples.  Record count is implied by
# the file length.
# ---------------------------------------------------------------------------

_MODE_MAGIC = b"PATMODE1"
_MODE_HEADER = struct.Struct("<IiIBdIdd")
_BC_CODE = {BoundaryCondition.NEUMANN: 0, BoundaryCondition.DIRICHLET: 1}
_BC_FROM_CODE = {v: k for k, v in _BC_CODE.items()}


def save_modes(path, modes: list[RadialMode]):
    with open(path, "wb") as fh:
        fh.write(_MODE_MAGIC)
        for m in modes:
            fh.write(_MODE_HEADER.pack(
                m.dimension, m.l, m.k, _BC_CODE[m.bc], m.mu,
                m.grid.n_cells, m.boundary_value, m.boundary_derivative,
            ))
            fh.write(np.ascontiguousarray(m.values, dtype="<f8").tobytes())


def load_modes(path) -> list[RadialMode]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(_MODE_MAGIC)] != _MODE_MAGIC:
        raise IOError(f"{path}: not a radial mode file")
    pos = len(_MODE_MAGIC)
    modes = []
    grids: dict[int, RadialGrid] = {}
    while pos < len(blob):
        if pos + _MODE_HEADER.size > len(blob):
            raise IOError(f"{path}: truncated mode header")
        dim, l, k, bc_code, mu, n_cells, h1, dh1 = _MODE_HEADER.unpack_from(blob, pos)
        pos += _MODE_HEADER.size
        nbytes = 8 * n_cells
        if pos + nbytes > len(blob):
            raise IOError(f"{path}: truncated mode samples")
        values = np.frombuffer(blob, dtype="<f8", count=n_cells, offset=pos).copy()
        pos += nbytes
        if bc_code not in _BC_FROM_CODE:
            raise IOError(f"{path}: unknown boundary condition code {bc_code}")
        grid = grids.setdefault(n_cells, RadialGrid(n_cells))
        modes.append(RadialMode(
            dimension=dim, l=l, k=k, mu=mu, values=values,
            boundary_value=h1, boundary_derivative=dh1,
            bc=_BC_FROM_CODE[bc_code], grid=grid,
        ))
    return modes
