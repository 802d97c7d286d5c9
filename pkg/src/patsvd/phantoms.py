"""Initial pressure phantoms on the polar / spherical-polar grid.

Geometric phantoms (bumps, disks, rings) are defined in Cartesian
coordinates and sampled onto the measurement grid; every feature must sit
strictly inside the unit ball so the field vanishes where the trace is
recorded.  Disks and rings take an optional cosine taper that turns the
indicator into a C1 function, which the truncated modal basis can actually
represent.  A mode-combination phantom is synthesized directly from given
coefficients and is exempt from the support rule, matching the basis
functions themselves, which do not vanish on the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import GridFunction, ModalCoefficients, Mode, ModeIndex, QuadratureRule, synthesize
from .errors import ConfigurationError

__all__ = ["PhantomSpec", "make_phantom", "gaussian_mass"]

KINDS = ("gaussian-bump", "disk", "ring", "mode-combination")

# Effective support radius of a unit-width Gaussian: beyond 3 widths the
# amplitude is under 1.3e-4 of the peak.
GAUSSIAN_SUPPORT_WIDTHS = 3.0


def _feature_extent(kind: str, feat: dict) -> float:
    if kind == "gaussian-bump":
        return GAUSSIAN_SUPPORT_WIDTHS * feat["width"]
    if kind == "disk":
        return feat["radius"]
    return feat["outer"]


_REQUIRED_KEYS = {
    "gaussian-bump": {"center", "width", "amplitude"},
    "disk": {"center", "radius", "amplitude"},
    "ring": {"center", "inner", "outer", "amplitude"},
}


@dataclass
class PhantomSpec:
    """Declarative phantom description, JSON-friendly.

    features holds one dict per geometric element; keys per kind:
    gaussian-bump {center, width, amplitude}, disk {center, radius,
    amplitude}, ring {center, inner, outer, amplitude}.  taper widens hard
    edges of disks and rings into cosine ramps (toward the inside, so the
    stated radius stays the outermost support).  mode-combination ignores
    features and carries explicit coefficients instead.
    """

    kind: str
    features: list = field(default_factory=list)
    coefficients: ModalCoefficients | None = None
    taper: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown phantom kind {self.kind!r}, expected one of {KINDS}")
        if self.taper < 0.0:
            raise ConfigurationError("taper must be >= 0")
        if self.kind == "mode-combination":
            if self.coefficients is None:
                raise ConfigurationError("mode-combination phantom needs coefficients")
            return
        for feat in self.features:
            missing = _REQUIRED_KEYS[self.kind] - set(feat)
            if missing:
                raise ConfigurationError(f"{self.kind} feature is missing {sorted(missing)}")
            center = np.asarray(feat["center"], dtype=float)
            if center.ndim != 1 or len(center) not in (2, 3):
                raise ConfigurationError(f"feature center must be a 2- or 3-vector, got {feat['center']}")
            extent = _feature_extent(self.kind, feat)
            if extent <= 0.0:
                raise ConfigurationError(f"{self.kind} feature has nonpositive size")
            if self.kind == "ring" and not 0.0 <= feat["inner"] < feat["outer"]:
                raise ConfigurationError("ring needs 0 <= inner < outer")
            reach = float(np.linalg.norm(center)) + extent
            if reach >= 1.0:
                raise ConfigurationError(
                    f"feature support reaches radius {reach:.3f}; it must stay strictly inside the unit ball")

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "mode-combination":
            out["coefficients"] = [
                {"index": list(idx.astuple()), "re": c.real, "im": c.imag}
                for idx, c in sorted(self.coefficients.entries.items(), key=lambda kv: kv[0].astuple())
            ]
        else:
            out["features"] = [dict(f) for f in self.features]
            if self.taper:
                out["taper"] = self.taper
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "PhantomSpec":
        kind = raw.get("kind")
        if kind == "mode-combination":
            entries = {}
            for item in raw.get("coefficients", []):
                idx = ModeIndex(*item["index"])
                entries[idx] = complex(item.get("re", 0.0), item.get("im", 0.0))
            return cls(kind=kind, coefficients=ModalCoefficients(entries))
        return cls(kind=kind, features=list(raw.get("features", [])), taper=raw.get("taper", 0.0))


def _cartesian_points(quad: QuadratureRule) -> np.ndarray:
    """Sample coordinates, shape (n_radial, *angular shape, dimension)."""
    r = quad.radial.centers
    ang = quad.angular
    if ang.dimension == 2:
        x = r[:, None] * np.cos(ang.azimuths)[None, :]
        y = r[:, None] * np.sin(ang.azimuths)[None, :]
        return np.stack([x, y], axis=-1)
    sin_col = np.sqrt(1.0 - ang.colat_cos**2)
    x = r[:, None, None] * (sin_col[:, None] * np.cos(ang.azimuths)[None, :])[None, :, :]
    y = r[:, None, None] * (sin_col[:, None] * np.sin(ang.azimuths)[None, :])[None, :, :]
    z = r[:, None, None] * (ang.colat_cos[:, None] * np.ones_like(ang.azimuths)[None, :])[None, :, :]
    return np.stack([x, y, z], axis=-1)


def _edge_ramp(distance: np.ndarray, edge: float, taper: float) -> np.ndarray:
    """1 inside radius edge - taper, 0 outside edge, cosine ramp between."""
    if taper == 0.0:
        return (distance <= edge).astype(float)
    s = np.clip((distance - (edge - taper)) / taper, 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * s))


def make_phantom(spec: PhantomSpec, quad: QuadratureRule, modes: list[Mode] | None = None) -> GridFunction:
    """Sample the phantom on the quadrature grid.

    mode-combination phantoms need the mode list that realizes their
    coefficient indices; geometric phantoms ignore it.
    """
    if spec.kind == "mode-combination":
        if not modes:
            raise ConfigurationError("mode-combination phantom needs the realized mode list")
        return synthesize(spec.coefficients, modes, quad)

    pts = _cartesian_points(quad)
    dim = pts.shape[-1]
    values = np.zeros(pts.shape[:-1])
    for feat in spec.features:
        center = np.asarray(feat["center"], dtype=float)
        if len(center) != dim:
            raise ConfigurationError(
                f"feature center has {len(center)} coordinates on a {dim}-d grid")
        dist = np.linalg.norm(pts - center, axis=-1)
        if spec.kind == "gaussian-bump":
            values += feat["amplitude"] * np.exp(-(dist / feat["width"]) ** 2)
        elif spec.kind == "disk":
            values += feat["amplitude"] * _edge_ramp(dist, feat["radius"], spec.taper)
        else:
            inner, outer = feat["inner"], feat["outer"]
            band = _edge_ramp(dist, outer, spec.taper)
            band *= 1.0 - _edge_ramp(dist, inner + spec.taper, spec.taper)
            values += feat["amplitude"] * band
    return GridFunction(quad.radial, quad.angular, values)


def gaussian_mass(spec: PhantomSpec, dimension: int) -> float:
    """Closed-form integral of a gaussian-bump phantom over all of space."""
    if spec.kind != "gaussian-bump":
        raise ValueError("closed-form mass is defined for gaussian-bump phantoms")
    total = 0.0
    for feat in spec.features:
        w = feat["width"]
        total += feat["amplitude"] * (np.pi ** (dimension / 2.0)) * w**dimension
    return float(total)
