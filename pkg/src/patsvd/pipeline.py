"""End-to-end runs: config parsing, staged execution, artifacts, validation.

A run is described by one JSON document, validated up front so multi-minute
simulations cannot die on a typo halfway through.  Execution is a fixed
stage sequence (profile, grids, modes, phantom, data, recovery, artifacts);
an error in any stage propagates unchanged except for a stage label
prefixed to its message.

Every artifact is written into the output directory and its SHA-256 digest
recorded in manifest.json.  Reruns of the same config produce byte-identical
artifacts and manifests; the write timestamp lives in its own manifest field
so the rest can be compared directly.
"""

from __future__ import annotations

import hashlib
import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone

import numpy as np

from .basis import (AngularGrid, GridFunction, ModalCoefficients, ModeIndex,
                    QuadratureRule, enumerate_modes, gram_matrix, project,
                    save_grid, synthesize, weighted_norm)
from .errors import ConfigurationError
from .figures import (export_image, save_field_figure, save_spectrum_figure,
                      save_trace_figure)
from .forward import (FdtdConfig, TimeGrid, cosine_pair_average, fdtd_time_step,
                      forward_spectral, run_fdtd, save_trace, singular_trace,
                      time_averaged_inner_product)
from .inversion import (crosstalk_bound, dirichlet_forward_trace, lsq_reconstruct,
                        make_triples, reconstruct, recover_coefficients,
                        singular_spectrum)
from .phantoms import PhantomSpec, make_phantom
from .radial import (BoundaryCondition, EndpointClass, RadialGrid, classify_origin,
                     solve_radial_modes)
from .speed import make_profile

__all__ = [
    "RunConfig",
    "PRESETS",
    "load_config",
    "run_pipeline",
    "run_forward",
    "validate_suite",
    "VALIDATION_SUITES",
]

PRESETS = {
    # Small enough to iterate on, large enough for percent-level inversion.
    "desk": {
        "radial_cells": 512,
        "angular_points": 128,
        "dt": 0.025,
        "horizon": 200.0,
        "modes": 300,
    },
    # Production scale: enough modes (~1500) to resolve fine phantoms, with
    # the horizon stretched so cross-talk stays below the extra modes' gain.
    # Hours of compute; nothing in the tests depends on it.
    "fullscale": {
        "radial_cells": 2048,
        "angular_points": 512,
        "dt": 0.000533,
        "horizon": 266.7,
        "modes": 1500,
    },
}

_CONFIG_KEYS = {
    "preset", "dimension", "bc", "profile", "phantom", "radial_cells",
    "angular_points", "dt", "horizon", "modes", "mu_max", "data", "cfl",
    "method", "regularization", "out_dir",
}


@dataclass
class RunConfig:
    """Validated description of one pipeline run."""

    profile: str = "c1"
    phantom: dict = field(default_factory=lambda: {
        "kind": "gaussian-bump",
        "features": [{"center": [0.3, 0.0], "width": 0.15, "amplitude": 1.0}],
    })
    dimension: int = 2
    bc: str = "neumann"
    radial_cells: int = 512
    angular_points: int = 128
    dt: float = 0.025
    horizon: float = 200.0
    modes: int | None = 300
    mu_max: float | None = None
    data: str = "fdtd"
    cfl: float = 0.45
    method: str = "direct"
    regularization: float = 0.0
    out_dir: str = "run-output"
    preset: str | None = None

    def __post_init__(self):
        if self.dimension != 2:
            raise ConfigurationError("pipeline runs are 2-d; the library itself also supports 3-d")
        if self.bc not in ("neumann", "dirichlet"):
            raise ConfigurationError(f"bc must be neumann or dirichlet, got {self.bc!r}")
        if self.data not in ("fdtd", "spectral"):
            raise ConfigurationError(f"data must be fdtd or spectral, got {self.data!r}")
        if self.method not in ("direct", "lsq"):
            raise ConfigurationError(f"method must be direct or lsq, got {self.method!r}")
        if self.data == "fdtd" and self.bc == "dirichlet":
            raise ConfigurationError("FDTD data is implemented for the sound-hard (neumann) problem; "
                                     "use spectral data for the dirichlet variant")
        if (self.modes is None) == (self.mu_max is None):
            raise ConfigurationError("specify exactly one of modes (count) or mu_max")
        if self.regularization < 0.0:
            raise ConfigurationError("regularization must be >= 0")
        if self.dt <= 0.0 or self.horizon <= 0.0:
            raise ConfigurationError("dt and horizon must be positive")
        n_steps = self.horizon / self.dt
        if abs(n_steps - round(n_steps)) > 1e-6 * max(1.0, n_steps):
            raise ConfigurationError(f"horizon {self.horizon} is not a whole number of dt={self.dt} steps")
        # These constructors validate their own parameters; build them once
        # here so a bad config fails at load time.
        make_profile(self.profile)
        PhantomSpec.from_dict(self.phantom)
        RadialGrid(self.radial_cells)
        AngularGrid(2, self.angular_points)
        FdtdConfig(cfl=self.cfl)

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def to_dict(self) -> dict:
        raw = asdict(self)
        return {k: v for k, v in raw.items() if v is not None}

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        merged = dict(raw)
        preset = merged.get("preset")
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigurationError(f"unknown preset {preset!r}, have {sorted(PRESETS)}")
            for key, value in PRESETS[preset].items():
                merged.setdefault(key, value)
        if "modes" in merged and "mu_max" in merged:
            raise ConfigurationError("specify exactly one of modes or mu_max")
        if "mu_max" in merged:
            merged.setdefault("modes", None)
        return cls(**merged)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return RunConfig.from_dict(json.load(fh))


@contextmanager
def _stage(name: str):
    try:
        yield
    except Exception as exc:
        head = str(exc.args[0]) if exc.args else exc.__class__.__name__
        exc.args = (f"[stage {name}] {head}",) + tuple(exc.args[1:])
        raise


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class _ArtifactWriter:
    def __init__(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        self.out_dir = out_dir
        self.entries = {}

    def add(self, name: str, writer):
        path = os.path.join(self.out_dir, name)
        writer(path)
        self.entries[name] = {"sha256": _sha256(path), "bytes": os.path.getsize(path)}
        return path


def _prepare(config: RunConfig):
    profile = make_profile(config.profile)
    radial = RadialGrid(config.radial_cells)
    angular = AngularGrid(config.dimension, config.angular_points)
    quad = QuadratureRule(radial, angular)
    time_grid = TimeGrid(config.dt, config.n_steps)
    bc = BoundaryCondition.NEUMANN if config.bc == "neumann" else BoundaryCondition.DIRICHLET
    return profile, radial, angular, quad, time_grid, bc


def _solve_modes(config: RunConfig, profile, radial, bc, angular=None):
    """The working basis; matched to the data solver's grids for fdtd data.

    Recovery against the finite-difference run's own discrete operator (its
    angular separation constants and its leapfrog frequencies) sees that
    data exactly on-basis, so the error budget is cross-talk and truncation
    rather than scheme dispersion accumulated over the horizon.
    """
    kwargs = {"count": config.modes} if config.modes is not None else {"mu_max": config.mu_max}
    if config.data == "fdtd":
        kwargs["angular_grid"] = angular
    return enumerate_modes(profile, radial, bc, config.dimension, **kwargs)


def _data_time_step(config: RunConfig, profile, radial, time_grid):
    """Substep of the fdtd data route, None for the spectral one."""
    if config.data != "fdtd":
        return None
    return fdtd_time_step(profile, radial, time_grid, FdtdConfig(cfl=config.cfl))[0]


def _make_data(config, phantom, modes, profile, time_grid, angular):
    """The measured trace plus, when data is spectral, the exact projection."""
    if config.data == "spectral":
        coeffs = project(phantom, modes, profile)
        return forward_spectral(coeffs, modes, time_grid, angular), coeffs
    run = run_fdtd(phantom, profile, time_grid, FdtdConfig(cfl=config.cfl))
    return run.trace, None


def run_forward(config: RunConfig, out_dir=None) -> dict:
    """Stages through data only: write phantom and trace, return a manifest."""
    out = _ArtifactWriter(out_dir or config.out_dir)
    with _stage("setup"):
        profile, radial, angular, quad, time_grid, bc = _prepare(config)
    with _stage("modes"):
        modes = _solve_modes(config, profile, radial, bc, angular)
    with _stage("phantom"):
        spec = PhantomSpec.from_dict(config.phantom)
        phantom = make_phantom(spec, quad, modes=modes)
    with _stage("data"):
        trace, _ = _make_data(config, phantom, modes, profile, time_grid, angular)
    with _stage("artifacts"):
        out.add("phantom.grid", lambda p: save_grid(p, phantom))
        out.add("phantom.png", lambda p: save_field_figure(p, phantom, "phantom"))
        out.add("trace.trc", lambda p: save_trace(p, trace))
        out.add("trace.png", lambda p: save_trace_figure(p, trace, "boundary trace"))
        manifest = {
            "config": config.to_dict(),
            "artifacts": out.entries,
            "mode_count": len(modes),
            "created_at": datetime.now(timezone.utc).isoformat(),
        }
        with open(os.path.join(out.out_dir, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def run_pipeline(config: RunConfig, out_dir=None, trace_override=None) -> dict:
    """Full run: modes, data, recovery, error maps, figures, manifest.

    trace_override substitutes pre-recorded data for the data stage; its
    grids must match the config.
    """
    out = _ArtifactWriter(out_dir or config.out_dir)
    with _stage("setup"):
        profile, radial, angular, quad, time_grid, bc = _prepare(config)
    with _stage("modes"):
        modes = _solve_modes(config, profile, radial, bc, angular)
        triples = make_triples(modes, time_step=_data_time_step(config, profile, radial, time_grid))
    with _stage("phantom"):
        spec = PhantomSpec.from_dict(config.phantom)
        phantom = make_phantom(spec, quad, modes=modes)
    with _stage("data"):
        if trace_override is not None:
            if trace_override.time_grid != time_grid or trace_override.angular != angular:
                raise ConfigurationError("supplied trace grids do not match the config")
            trace = trace_override
        else:
            trace, _ = _make_data(config, phantom, modes, profile, time_grid, angular)
    with _stage("recovery"):
        if config.method == "direct":
            picture, report = reconstruct(trace, triples, quad)
        else:
            picture, report = lsq_reconstruct(trace, triples, quad, config.regularization)
    with _stage("metrics"):
        flat = make_profile("const:1")
        err = GridFunction(radial, angular, picture.values - phantom.values)
        denom_w = weighted_norm(phantom, profile)
        denom_p = weighted_norm(phantom, flat)
        rel_weighted = weighted_norm(err, profile) / denom_w if denom_w > 0 else 0.0
        rel_plain = weighted_norm(err, flat) / denom_p if denom_p > 0 else 0.0
    with _stage("artifacts"):
        out.add("phantom.grid", lambda p: save_grid(p, phantom))
        out.add("phantom.png", lambda p: save_field_figure(p, phantom, "phantom"))
        out.add("phantom.pgm", lambda p: export_image(phantom, p))
        out.add("trace.trc", lambda p: save_trace(p, trace))
        out.add("trace.png", lambda p: save_trace_figure(p, trace, "boundary trace"))
        out.add("reconstruction.grid", lambda p: save_grid(p, picture))
        out.add("reconstruction.png", lambda p: save_field_figure(p, picture, "reconstruction"))
        out.add("reconstruction.pgm", lambda p: export_image(picture, p))
        out.add("error_map.png", lambda p: save_field_figure(p, err, "reconstruction - phantom", symmetric=True))
        out.add("spectrum.png", lambda p: save_spectrum_figure(p, singular_spectrum(triples), "singular values"))
        def write_report(p):
            with open(p, "w") as fh:
                fh.write(report.to_json(relative_error_weighted=rel_weighted,
                                        relative_error_plain=rel_plain))
        out.add("report.json", write_report)
        manifest = {
            "config": config.to_dict(),
            "artifacts": out.entries,
            "results": {
                "relative_error_weighted": rel_weighted,
                "relative_error_plain": rel_plain,
                "residual": report.residual,
                "crosstalk_bound": report.crosstalk,
                "mode_count": report.mode_count,
                "horizon": report.horizon,
                "method": report.method,
                "degenerate_pairs": len(report.degenerate),
                "recovery_basis": "matched" if config.data == "fdtd" else "analytic",
            },
            "created_at": datetime.now(timezone.utc).isoformat(),
        }
        with open(os.path.join(out.out_dir, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


# ---------------------------------------------------------------------------
# Validation suites: named bundles of oracle checks runnable from the CLI.
# Each check row is (name, measured, tolerance); a row passes when measured
# is at most its tolerance.
# ---------------------------------------------------------------------------

def _check(rows, name, measured, tolerance):
    rows.append({"name": name, "measured": float(measured), "tolerance": float(tolerance),
                 "passed": bool(measured <= tolerance)})


def _suite_classify() -> list:
    rows = []
    for dim in (2, 3):
        for l in (0, 1, 2, 5):
            cls, _ = classify_origin(dim, l)
            want = EndpointClass.LIMIT_CIRCLE if l == 0 else EndpointClass.LIMIT_POINT
            _check(rows, f"origin class dim={dim} l={l}", 0.0 if cls is want else 1.0, 0.0)
    return rows


_BESSEL_NEUMANN = {
    # Zeros of the derivative of the order-l Bessel function; the l=0 row
    # starts with the flat mode at zero frequency.
    0: [0.0, 3.8317059702075125, 7.015586669815619, 10.173468135062722, 13.323691936314223,
        16.470630050877634, 19.615858510468243, 22.760084380592772],
    1: [1.8411837813406593, 5.331442773525033, 8.536316366346286, 11.706004902592064,
        14.863588633909033, 18.015527862681804, 21.16436985918879, 24.311326857210776],
    2: [3.0542369282271403, 6.706133194158459, 9.969467823526131, 13.170370856016123,
        16.347522318321783, 19.512912782488204, 22.671581772477424, 25.826037141785264],
}


def _suite_bessel() -> list:
    rows = []
    profile = make_profile("const:1")
    for l, reference in _BESSEL_NEUMANN.items():
        solved = solve_radial_modes(profile, RadialGrid(4096), l, BoundaryCondition.NEUMANN, 2, count=8)
        for mode, want in zip(solved, reference):
            err = abs(mode.mu - want) / want if want else abs(mode.mu)
            _check(rows, f"neumann l={l} k={mode.k} relative", err, 1e-4)
    # Fit the decay of the worst-case error against the reference zeros.
    # Self-convergence per mode would also work, except for modes whose
    # leading h^2 error coefficient nearly cancels (l=1, k=1 here) where the
    # Richardson estimate is noise; the error-decay fit has no such blind spot.
    for l in (0, 1, 2):
        errs = []
        for n in (512, 1024, 2048):
            solved = solve_radial_modes(profile, RadialGrid(n), l, BoundaryCondition.NEUMANN, 2, count=8)
            errs.append(max(abs(m.mu - want) / want
                            for m, want in zip(solved, _BESSEL_NEUMANN[l]) if want))
        order = -np.polyfit(np.log2([512.0, 1024.0, 2048.0]), np.log2(errs), 1)[0]
        _check(rows, f"convergence order l={l} off 2", abs(order - 2.0), 0.2)
    return rows


def _suite_gram() -> list:
    rows = []
    profile = make_profile("c1")
    radial = RadialGrid(2048)
    modes = enumerate_modes(profile, radial, BoundaryCondition.NEUMANN, 2, count=200)
    l_max = max(abs(m.index.l) for m in modes)
    quad = QuadratureRule(radial, AngularGrid(2, 2 * l_max + 2))
    gram = gram_matrix(modes, quad, profile)
    dev = np.max(np.abs(gram - np.eye(len(modes))))
    _check(rows, "max |gram - identity|, 200 modes", dev, 1e-6)
    return rows


def _suite_crosstalk() -> list:
    rows = []
    i1, i2, A = 3.83171, 7.01559, 200.0
    _check(rows, "off-diagonal average", abs(cosine_pair_average(i1, i2, A)), 2.0 / ((i2 - i1) * A))
    _check(rows, "off-diagonal tolerance", abs(cosine_pair_average(i1, i2, A)), 3.2e-3)
    _check(rows, "diagonal error", abs(cosine_pair_average(i1, i1, A) - 1.0), 1.0 / (2.0 * A * i1))
    _check(rows, "diagonal tolerance", abs(cosine_pair_average(i1, i1, A) - 1.0), 6.6e-4)
    ang = AngularGrid(2, 8)
    for iota, other, want in ((i1, i1, 1.0), (i1, i2, 0.0), (0.0, 0.0, 2.0)):
        tg = TimeGrid(0.05, 4000)
        u = singular_trace(ModeIndex(2, 0, 1), iota, tg, ang)
        v = singular_trace(ModeIndex(2, 0, 1), other, tg, ang)
        got = time_averaged_inner_product(u, v).real
        _check(rows, f"discrete average ({iota:.4g},{other:.4g})",
               abs(got - cosine_pair_average(iota, other, tg.horizon)), 1e-4)
    for stage_a in (10.0, 100.0, 1000.0):
        val = cosine_pair_average(3.0, 3.0, stage_a)
        _check(rows, f"diagonal A={stage_a:g}", abs(val - 1.0), 1.0 / (2.0 * stage_a * 3.0))
    return rows


def _suite_crossfdtd() -> list:
    rows = []
    profile = make_profile("c1")
    radial = RadialGrid(512)
    angular = AngularGrid(2, 128)
    quad = QuadratureRule(radial, angular)
    modes = enumerate_modes(profile, radial, BoundaryCondition.NEUMANN, 2, count=12)
    mode = next(m for m in modes if m.index.l == 1 and m.index.k == 2)
    coeffs = ModalCoefficients({mode.index: 1.0})
    f0 = synthesize(coeffs, [mode], quad)
    f0 = GridFunction(radial, angular, f0.values.real)
    tg = TimeGrid(0.05, 400)
    run = run_fdtd(f0, profile, tg, FdtdConfig(cfl=0.45))
    spectral = forward_spectral(coeffs, [mode], tg, angular)
    num = np.linalg.norm(run.trace.samples - spectral.samples.real)
    den = np.linalg.norm(spectral.samples.real)
    _check(rows, "single-mode trace relative L2", num / den, 0.02)
    drift = np.max(np.abs(run.energy - run.energy[0])) / abs(run.energy[0])
    _check(rows, "energy drift over T=20", drift, 0.005)
    return rows


def _suite_dirichlet() -> list:
    rows = []
    profile = make_profile("const:1")
    radial = RadialGrid(1024)
    angular = AngularGrid(2, 64)
    modes = enumerate_modes(profile, radial, BoundaryCondition.DIRICHLET, 2, count=50)
    triples = make_triples(modes)
    rng = np.random.default_rng(202)
    truth = rng.standard_normal(len(modes))
    coeffs = ModalCoefficients.from_vector(modes, truth)
    tg = TimeGrid(0.02, 10000)
    trace = dirichlet_forward_trace(coeffs, triples, tg, angular)
    got = recover_coefficients(trace, triples).vector(modes)
    err = float(np.max(np.abs(got - truth)))
    allowance = crosstalk_bound(triples, tg.horizon) * float(np.sum(np.abs(truth)))
    _check(rows, "round-trip error vs cross-talk allowance", err, allowance)
    return rows


VALIDATION_SUITES = {
    "classify": _suite_classify,
    "bessel": _suite_bessel,
    "gram": _suite_gram,
    "crosstalk": _suite_crosstalk,
    "crossfdtd": _suite_crossfdtd,
    "dirichlet": _suite_dirichlet,
}


def validate_suite(name: str) -> dict:
    """Run one named suite; the report lists measured vs tolerated values."""
    if name not in VALIDATION_SUITES:
        raise ConfigurationError(f"unknown suite {name!r}, have {sorted(VALIDATION_SUITES)}")
    rows = VALIDATION_SUITES[name]()
    return {"suite": name, "checks": rows, "passed": all(r["passed"] for r in rows)}
