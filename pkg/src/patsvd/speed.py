"""Radial sound-speed profiles c(|x|) on the unit ball.

The wave equation used throughout is p_tt = c(r) * Laplacian(p), so c carries
units of speed squared and sqrt(c) is the propagation speed that enters CFL
limits.  Profiles are radial, bounded, and strictly positive on [0, 1].

Supported kinds:

* ``constant``   -- c(r) = v
* ``rational``   -- c(r) = 1 / (1 + (s*r)^2), the smooth benchmark profile
* ``piecewise``  -- annulus [r1, r2] with one value, another value elsewhere
* ``tabulated``  -- linear interpolation of (r_i, c_i) samples covering [0, 1]
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

__all__ = ["SoundSpeedProfile", "evaluate_speed", "make_profile"]


@dataclass(frozen=True)
class SoundSpeedProfile:
    """A radial speed-squared profile with cached positive bounds."""

    kind: str
    value: float = 1.0            # constant
    scale: float = 1.0            # rational
    r_inner: float = 0.3          # piecewise
    r_outer: float = 0.6
    inner_value: float = 5.0
    outer_value: float = 1.0
    abscissa: tuple[float, ...] = ()   # tabulated
    values: tuple[float, ...] = ()
    c_min: float = field(init=False, default=0.0)
    c_max: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.kind == "constant":
            if self.value <= 0.0:
                raise ConfigurationError(f"constant speed must be positive, got {self.value}")
            lo = hi = self.value
        elif self.kind == "rational":
            if self.scale < 0.0:
                raise ConfigurationError(f"rational profile scale must be >= 0, got {self.scale}")
            lo, hi = 1.0 / (1.0 + self.scale**2), 1.0
        elif self.kind == "piecewise":
            if not 0.0 <= self.r_inner < self.r_outer <= 1.0:
                raise ConfigurationError(
                    f"piecewise radii must satisfy 0 <= r1 < r2 <= 1, got ({self.r_inner}, {self.r_outer})")
            if min(self.inner_value, self.outer_value) <= 0.0:
                raise ConfigurationError("piecewise speed values must be positive")
            lo = min(self.inner_value, self.outer_value)
            hi = max(self.inner_value, self.outer_value)
        elif self.kind == "tabulated":
            r = np.asarray(self.abscissa, dtype=float)
            c = np.asarray(self.values, dtype=float)
            if r.ndim != 1 or r.size < 2 or r.shape != c.shape:
                raise ConfigurationError("tabulated profile needs matching 1-d abscissa and values")
            if np.any(np.diff(r) <= 0.0):
                raise ConfigurationError("tabulated abscissa must be strictly increasing")
            if r[0] > 0.0 or r[-1] < 1.0:
                raise ConfigurationError("tabulated abscissa must cover [0, 1]")
            if np.any(c <= 0.0):
                raise ConfigurationError("tabulated speed values must be positive")
            lo, hi = float(c.min()), float(c.max())
        else:
            raise ConfigurationError(f"unknown profile kind {self.kind!r}")
        object.__setattr__(self, "c_min", float(lo))
        object.__setattr__(self, "c_max", float(hi))

    def __call__(self, r):
        return evaluate_speed(self, r)

    def label(self) -> str:
        """Short human-readable tag used in reports and figure titles."""
        if self.kind == "constant":
            return f"const:{self.value:g}"
        if self.kind == "rational":
            return f"rational:{self.scale:g}"
        if self.kind == "piecewise":
            return f"piecewise:[{self.r_inner:g},{self.r_outer:g}]={self.inner_value:g}/{self.outer_value:g}"
        return f"tabulated:{len(self.abscissa)}pts"


def evaluate_speed(profile: SoundSpeedProfile, r):
    """Evaluate c(r) for scalar or array r in [0, 1].

    Raises ValueError for arguments outside the closed unit interval.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("radius outside [0, 1]")
    if profile.kind == "constant":
        out = np.full_like(arr, profile.value)
    elif profile.kind == "rational":
        out = 1.0 / (1.0 + (profile.scale * arr) ** 2)
    elif profile.kind == "piecewise":
        inside = (arr >= profile.r_inner) & (arr <= profile.r_outer)
        out = np.where(inside, profile.inner_value, profile.outer_value)
    else:
        out = np.interp(arr, profile.abscissa, profile.values)
    if np.isscalar(r) or arr.ndim == 0:
        return float(out)
    return out


def make_profile(name: str) -> SoundSpeedProfile:
    """Build a profile from a preset string.

    Accepted forms: ``c1`` (smooth rational, optionally ``c1:<scale>``),
    ``c2`` (fast annulus, optionally ``c2:<r1>:<r2>``), and ``const:<v>``.
    """
    parts = name.split(":")
    head = parts[0].strip().lower()
    try:
        if head == "c1":
            scale = float(parts[1]) if len(parts) > 1 else 1.0
            return SoundSpeedProfile(kind="rational", scale=scale)
        if head == "c2":
            if len(parts) == 1:
                return SoundSpeedProfile(kind="piecewise")
            if len(parts) != 3:
                raise ConfigurationError(f"c2 preset takes two radii, got {name!r}")
            return SoundSpeedProfile(kind="piecewise", r_inner=float(parts[1]), r_outer=float(parts[2]))
        if head == "const":
            if len(parts) != 2:
                raise ConfigurationError(f"const preset needs a value, got {name!r}")
            return SoundSpeedProfile(kind="constant", value=float(parts[1]))
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"could not parse profile preset {name!r}: {exc}") from exc
    raise ConfigurationError(f"unknown profile preset {name!r}")
