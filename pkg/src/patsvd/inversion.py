"""Recovering the initial pressure from boundary data.

Each mode phi is mapped by the forward operator to sigma * Psi, where Psi is
the unit basis trace (angular factor times cos(mu t)) and sigma is the
boundary value h(1) of the radial part (its normal derivative h'(1) for the
sound-soft variant).  The basis traces are asymptotically orthonormal in the
time-averaged inner product, so two recovery routes are available:

* the direct formula: coefficient = <data, Psi> / (nu * sigma), with nu = 2
  for the zero-frequency mode whose squared cosine averages to 1 instead of
  1/2.  Exact as the horizon grows; at finite horizon it carries the O(1/A)
  cross-talk quantified by crosstalk_bound.

* a least-squares solve against explicit basis-trace columns, which inverts
  the realized Gram matrix instead of assuming it diagonal.  Solved by
  normal equations with a Cholesky factorization (deterministic; one pass of
  accumulation, optional ridge term).  On data inside the column span this
  is exact at any horizon, and columns produced by the same solver as the
  data absorb that solver's dispersion.

Cross-talk only couples modes sharing an angular index: distinct angular
factors are orthogonal exactly, on the discrete grids too (uniform azimuths
resolve the orders involved, and the colatitude rule integrates the Legendre
products exactly).  In particular modes with equal frequencies but different
angular order never mix, whatever the horizon; equal-frequency pairs within
one angular index cannot occur (the radial problems have simple spectra), so
degeneracy detection is a diagnostic, not a correction step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import (GridFunction, ModalCoefficients, Mode, ModeIndex,
                    QuadratureRule, _angular_factor, synthesize)
from .errors import ConfigurationError, NumericalError, ShapeError
from .forward import (BoundaryTrace, TimeGrid, forward_spectral,
                      leapfrog_frequency, trace_norm)
from .radial import BoundaryCondition

__all__ = [
    "SvdTriple",
    "make_triples",
    "singular_spectrum",
    "crosstalk_bound",
    "degenerate_pairs",
    "recover_coefficient",
    "recover_coefficients",
    "ReconstructionReport",
    "reconstruct",
    "lsq_coefficients",
    "lsq_reconstruct",
    "dirichlet_forward_trace",
    "dirichlet_recover",
]

DEGENERACY_GAP = 1e-8


@dataclass(frozen=True)
class SvdTriple:
    """One singular triple of the forward operator.

    The left function is the mode itself, the right one its unit basis
    trace, and the gain is the radial boundary value (Neumann) or boundary
    derivative (Dirichlet).  nu is the large-horizon average of the squared
    time factor: 2 for the constant-in-time mode, 1 otherwise.

    frequency is the oscillator actually used for the basis trace.  It
    defaults to the mode's mu; recovery from time-discretized data can set
    it to the frequency that solver realizes (see leapfrog_frequency), which
    removes the temporal dispersion mismatch.
    """

    mode: Mode
    singular_value: float
    nu: int
    frequency: float | None = None

    def __post_init__(self):
        if not self.singular_value > 0.0:
            raise ValueError(f"singular value must be positive, got {self.singular_value} "
                             f"for mode {self.mode.index}")
        if self.nu not in (1, 2):
            raise ValueError(f"nu must be 1 or 2, got {self.nu}")
        if self.frequency is None:
            object.__setattr__(self, "frequency", self.mode.mu)
        elif (self.frequency == 0.0) != (self.mode.mu == 0.0) or self.frequency < 0.0:
            raise ValueError(f"frequency {self.frequency} inconsistent with mu {self.mode.mu}")

    @classmethod
    def from_mode(cls, mode: Mode, frequency: float | None = None) -> "SvdTriple":
        if mode.bc is BoundaryCondition.NEUMANN:
            gain = abs(mode.boundary_value)
        else:
            gain = abs(mode.boundary_derivative)
        return cls(mode, gain, 2 if mode.mu == 0.0 else 1, frequency)

    @property
    def mu(self) -> float:
        return self.mode.mu

    @property
    def index(self) -> ModeIndex:
        return self.mode.index


def make_triples(modes: list[Mode], time_step: float | None = None) -> list[SvdTriple]:
    """Triples for a mode set, optionally tuned to a leapfrog time step.

    With time_step given, each basis trace oscillates at the frequency a
    leapfrog integration with that step realizes for the mode, instead of
    the mode's own mu.  Recovery from a matching finite-difference run then
    sees its data exactly on-frequency at any horizon.
    """
    if time_step is None:
        return [SvdTriple.from_mode(m) for m in modes]
    return [SvdTriple.from_mode(m, leapfrog_frequency(m.mu, time_step)) for m in modes]


def singular_spectrum(triples: list[SvdTriple]) -> list[tuple[ModeIndex, float]]:
    """(index, gain) pairs sorted by descending gain; ties favor low frequency."""
    order = sorted(triples, key=lambda t: (-t.singular_value, t.mu, abs(t.index.l), t.index.k))
    return [(t.index, t.singular_value) for t in order]


def _angular_key(index: ModeIndex):
    return (index.l,) if index.dimension == 2 else (index.l, index.m)


def _angular_groups(triples: list[SvdTriple]) -> dict:
    groups: dict = {}
    for i, t in enumerate(triples):
        groups.setdefault(_angular_key(t.index), []).append(i)
    return groups


def crosstalk_bound(triples: list[SvdTriple], horizon: float) -> float:
    """Upper bound on finite-horizon leakage between recovered coefficients.

    Only pairs sharing an angular index couple.  For such a pair the averaged
    product of cosines is at most 2/(horizon * frequency gap), amplified by
    the gain ratio when it leaks into the weaker mode; a mode also sees its
    own squared cosine off by at most 1/(2 * horizon * mu).  The direct
    recovery error on any coefficient is then at most this bound times the
    l1 norm of the true coefficients.
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    worst = 0.0
    for members in _angular_groups(triples).values():
        for a_pos, i in enumerate(members):
            ti = triples[i]
            if ti.frequency > 0.0:
                worst = max(worst, 1.0 / (2.0 * horizon * ti.frequency))
            for j in members[a_pos + 1:]:
                tj = triples[j]
                gap = abs(ti.frequency - tj.frequency)
                ratio = max(ti.singular_value / tj.singular_value,
                            tj.singular_value / ti.singular_value)
                if gap == 0.0:
                    return float("inf")
                worst = max(worst, 2.0 * ratio / (horizon * gap))
    return worst


def _radial_key(index: ModeIndex):
    """Label of the radial problem a mode comes from; mirror and azimuthal
    companions (2-d -l, 3-d m) share it and are degenerate by construction."""
    return (abs(index.l) if index.dimension == 2 else index.l, index.k)


def degenerate_pairs(triples: list[SvdTriple], gap: float = DEGENERACY_GAP) -> list[tuple[ModeIndex, ModeIndex, float]]:
    """Pairs from distinct radial problems with nearly coincident frequencies.

    Symmetry companions (opposite 2-d rotation sense, 3-d azimuthal orders of
    one l) are exactly degenerate by construction and omitted.  Accidental
    coincidences across angular indices are still harmless (angular
    orthogonality separates the pair exactly); within one angular index they
    would defeat the direct formula, but cannot arise from a simple-spectrum
    radial problem.  Reported for diagnostics.
    """
    found = []
    order = sorted(range(len(triples)), key=lambda i: triples[i].frequency)
    for a in range(len(order)):
        for b in range(a + 1, len(order)):
            i, j = order[a], order[b]
            d = abs(triples[i].frequency - triples[j].frequency)
            if d >= gap:
                break
            if _radial_key(triples[i].index) != _radial_key(triples[j].index):
                found.append((triples[i].index, triples[j].index, d))
    return found


def _require_distinct(triples: list[SvdTriple]):
    seen = set()
    for t in triples:
        if t.index in seen:
            raise ConfigurationError(f"duplicate mode {t.index} in triple set")
        seen.add(t.index)


def _group_transform(trace: BoundaryTrace, triples: list[SvdTriple]):
    """Angular inner products of the trace against each distinct angular factor.

    Returns (hat, group_of): hat has shape (n_times, n_groups) with
    hat[t, g] = sum_a trace[t, a] conj(factor_g[a]) w_a, and group_of[i] is
    the column of triple i.
    """
    groups = _angular_groups(triples)
    keys = list(groups.keys())
    col_of_key = {key: g for g, key in enumerate(keys)}
    factors = np.stack([
        _angular_factor(triples[groups[key][0]].index, trace.angular) for key in keys
    ])
    hat = trace.flat() @ (np.conj(factors) * trace.angular.weights[None, :]).T
    group_of = np.array([col_of_key[_angular_key(t.index)] for t in triples])
    return hat, group_of


def _direct_coefficients(trace: BoundaryTrace, triples: list[SvdTriple]) -> np.ndarray:
    freqs = np.array([t.frequency for t in triples])
    trace.time_grid.check_resolves(float(freqs.max(initial=0.0)))
    hat, group_of = _group_transform(trace, triples)
    cosines = np.cos(trace.time_grid.times[:, None] * freqs[None, :])
    weighted = hat[:, group_of] * cosines
    averages = (2.0 / trace.time_grid.horizon) * (trace.time_grid.weights @ weighted)
    scale = np.array([t.nu * t.singular_value for t in triples])
    return averages / scale


def recover_coefficient(trace: BoundaryTrace, triple: SvdTriple) -> complex:
    """Direct formula for one coefficient: <data, basis trace> / (nu * gain)."""
    return complex(_direct_coefficients(trace, [triple])[0])


def recover_coefficients(trace: BoundaryTrace, triples: list[SvdTriple]) -> ModalCoefficients:
    """Direct recovery of every coefficient (one angular transform, shared)."""
    _require_distinct(triples)
    vec = _direct_coefficients(trace, triples)
    return ModalCoefficients({t.index: complex(v) for t, v in zip(triples, vec)})


@dataclass
class ReconstructionReport:
    """Diagnostics of one recovery run."""

    coefficients: ModalCoefficients
    residual: float
    mode_count: int
    horizon: float
    crosstalk: float
    method: str = "direct"
    regularization: float = 0.0
    degenerate: list = field(default_factory=list)

    def to_json(self, **extra) -> str:
        payload = {
            "method": self.method,
            "residual": self.residual,
            "mode_count": self.mode_count,
            "horizon": self.horizon,
            "crosstalk_bound": self.crosstalk,
            "regularization": self.regularization,
            "degenerate_pairs": [
                {"first": list(a.astuple()), "second": list(b.astuple()), "gap": g}
                for a, b, g in self.degenerate
            ],
            "coefficients": [
                {"index": list(idx.astuple()), "re": c.real, "im": c.imag}
                for idx, c in sorted(self.coefficients.entries.items(), key=lambda kv: kv[0].astuple())
            ],
        }
        payload.update(extra)
        return json.dumps(payload, indent=2)


def _model_trace(coeffs: ModalCoefficients, triples: list[SvdTriple],
                 time_grid: TimeGrid, angular) -> BoundaryTrace:
    """Forward trace of the coefficients through the triples' own gains and
    frequencies (identical to forward_spectral when those are the modes')."""
    vec = np.array([coeffs.entries[t.index] * t.singular_value for t in triples])
    freqs = np.array([t.frequency for t in triples])
    ang = np.stack([_angular_factor(t.index, angular) for t in triples])
    samples = np.cos(time_grid.times[:, None] * freqs[None, :]) @ (vec[:, None] * ang)
    return BoundaryTrace(time_grid, angular, samples)


def _finish_report(trace, triples, coeffs, quad, method, reg) -> tuple[GridFunction, ReconstructionReport]:
    modes = [t.mode for t in triples]
    picture = synthesize(coeffs, modes, quad)
    model = _model_trace(coeffs, triples, trace.time_grid, trace.angular)
    denom = trace_norm(trace)
    diff = BoundaryTrace(trace.time_grid, trace.angular, model.samples - trace.samples)
    residual = trace_norm(diff) / denom if denom > 0.0 else 0.0
    report = ReconstructionReport(
        coefficients=coeffs,
        residual=float(residual),
        mode_count=len(triples),
        horizon=trace.time_grid.horizon,
        crosstalk=crosstalk_bound(triples, trace.time_grid.horizon),
        method=method,
        regularization=reg,
        degenerate=degenerate_pairs(triples),
    )
    return picture, report


def reconstruct(trace: BoundaryTrace, triples: list[SvdTriple], quad: QuadratureRule) -> tuple[GridFunction, ReconstructionReport]:
    """Direct-formula reconstruction on the quadrature grid, with diagnostics.

    The report's residual is the trace-space relative misfit of the
    recovered coefficients, the natural surrogate for out-of-span content.
    """
    if not triples:
        raise ConfigurationError("empty triple list")
    coeffs = recover_coefficients(trace, triples)
    return _finish_report(trace, triples, coeffs, quad, "direct", 0.0)


def lsq_coefficients(
    b: BoundaryTrace,
    basis_traces: list[BoundaryTrace],
    indices: list[ModeIndex],
    regularization: float = 0.0,
) -> ModalCoefficients:
    """Least-squares fit of the data to explicit basis-trace columns.

    Minimizes the time-averaged misfit ||sum_k X_k col_k - b||^2 plus
    reg * ||X||^2, via the normal equations and a Cholesky factorization:
    deterministic, one accumulation pass, columns of the realized forward
    map rather than an assumed-orthogonal ideal.  basis_traces[k] must be
    the forward trace of mode indices[k] with unit coefficient, produced by
    either forward route.
    """
    if len(basis_traces) != len(indices) or not basis_traces:
        raise ConfigurationError("need one basis trace per mode index, at least one")
    if regularization < 0.0:
        raise ConfigurationError("regularization must be >= 0")
    for col in basis_traces:
        if col.time_grid != b.time_grid or col.angular != b.angular:
            raise ShapeError("basis trace grids do not match the data")

    tw = (2.0 / b.time_grid.horizon) * b.time_grid.weights
    aw = b.angular.weights
    cols = np.stack([c.flat() for c in basis_traces])          # (m, n_t, n_a)
    gram = np.einsum("ita,t,a,jta->ij", np.conj(cols), tw, aw, cols, optimize=True)
    rhs = np.einsum("ita,t,a,ta->i", np.conj(cols), tw, aw, b.flat(), optimize=True)
    gram[np.diag_indices_from(gram)] += regularization

    try:
        factor = scipy.linalg.cho_factor(gram, lower=True)
        solution = scipy.linalg.cho_solve(factor, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "normal equations are rank deficient; increase the regularization") from exc
    return ModalCoefficients({idx: complex(v) for idx, v in zip(indices, solution)})


def lsq_reconstruct(
    trace: BoundaryTrace,
    triples: list[SvdTriple],
    quad: QuadratureRule,
    regularization: float = 0.0,
) -> tuple[GridFunction, ReconstructionReport]:
    """Least-squares reconstruction with spectrally synthesized columns.

    Solves the same normal equations as lsq_coefficients fed with the triples'
    basis traces, but never forms those columns: each one factors into a
    cosine time course and an angular factor, so the Gram matrix is the
    cosine Gram masked to blocks of equal angular index, and the right-hand
    side reuses the angular transform of the data.  Memory stays linear in
    the trace size whatever the mode count.
    """
    if not triples:
        raise ConfigurationError("empty triple list")
    if regularization < 0.0:
        raise ConfigurationError("regularization must be >= 0")
    _require_distinct(triples)

    hat, group_of = _group_transform(trace, triples)
    freqs = np.array([t.frequency for t in triples])
    gains = np.array([t.singular_value for t in triples])
    trace.time_grid.check_resolves(float(freqs.max(initial=0.0)))
    cosines = np.cos(trace.time_grid.times[:, None] * freqs[None, :])
    tw = (2.0 / trace.time_grid.horizon) * trace.time_grid.weights

    rhs = gains * np.sum(tw[:, None] * cosines * hat[:, group_of], axis=0)
    time_gram = cosines.T @ (tw[:, None] * cosines)
    gram = (gains[:, None] * gains[None, :]) * time_gram \
        * (group_of[:, None] == group_of[None, :])
    gram[np.diag_indices_from(gram)] += regularization

    try:
        factor = scipy.linalg.cho_factor(gram, lower=True)
        solution = scipy.linalg.cho_solve(factor, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "normal equations are rank deficient; increase the regularization") from exc
    coeffs = ModalCoefficients({t.index: complex(v) for t, v in zip(triples, solution)})
    picture, report = _finish_report(trace, triples, coeffs, quad, "lsq", regularization)
    return picture, report


def _require_bc(triples: list[SvdTriple], bc: BoundaryCondition):
    for t in triples:
        if t.mode.bc is not bc:
            raise TypeError(f"mode {t.index} has {t.mode.bc.name} boundary condition, expected {bc.name}")


def dirichlet_forward_trace(
    coeffs: ModalCoefficients,
    triples: list[SvdTriple],
    time_grid: TimeGrid,
    angular,
) -> BoundaryTrace:
    """Normal-derivative data of a sound-soft sphere, synthesized spectrally.

    The pressure itself vanishes on the boundary; what a derivative sensor
    records is sum <f, phi> h'(1) angular(theta) cos(mu t).
    """
    _require_bc(triples, BoundaryCondition.DIRICHLET)
    return forward_spectral(coeffs, [t.mode for t in triples], time_grid, angular)


def dirichlet_recover(trace: BoundaryTrace, triple: SvdTriple) -> complex:
    """Direct formula against h'(1) gains; mirrors recover_coefficient."""
    if triple.mode.bc is not BoundaryCondition.DIRICHLET:
        raise TypeError(f"mode {triple.index} is not a Dirichlet mode")
    return recover_coefficient(trace, triple)
