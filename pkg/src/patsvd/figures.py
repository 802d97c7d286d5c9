"""Rendering fields, traces, and spectra to files.

All matplotlib output goes through Agg with embedded metadata stripped, so a
rerun of the same computation produces byte-identical files; the pipeline
manifests hash these artifacts.

export_image writes raw 16-bit graymaps (binary PGM, big-endian sample order
per the format) on a Cartesian raster, for inspection without any plotting
stack.  The polar-to-Cartesian resampling is bilinear in (r, theta); its
inverse is provided for round-trip error studies.
"""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .basis import AngularGrid, GridFunction
from .errors import ConfigurationError
from .forward import BoundaryTrace
from .radial import RadialGrid

__all__ = [
    "save_field_figure",
    "save_trace_figure",
    "save_spectrum_figure",
    "polar_to_cartesian",
    "cartesian_to_polar",
    "export_image",
]

_SAVE_OPTS = {"dpi": 130, "metadata": {"Software": None}}


def _require_2d(g: GridFunction):
    if g.angular.dimension != 2:
        raise ConfigurationError("figure rendering is implemented for 2-d fields")


def _disk_mesh(g: GridFunction):
    """Cell-edge mesh of the polar grid for pcolormesh."""
    r_edges = g.radial.faces
    n = g.angular.n_azimuth
    th_edges = (np.arange(n + 1) - 0.5) * (2.0 * np.pi / n)
    R, T = np.meshgrid(r_edges, th_edges, indexing="ij")
    return R * np.cos(T), R * np.sin(T)


def save_field_figure(path, g: GridFunction, title: str = "", symmetric: bool = False):
    """Color map of the real part of a field on the unit disk."""
    _require_2d(g)
    vals = np.asarray(g.values).real
    X, Y = _disk_mesh(g)
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    if symmetric:
        vmax = float(np.max(np.abs(vals))) or 1.0
        mesh = ax.pcolormesh(X, Y, vals, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
    else:
        mesh = ax.pcolormesh(X, Y, vals, cmap="viridis")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.colorbar(mesh, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def save_trace_figure(path, trace: BoundaryTrace, title: str = ""):
    """Boundary data as a time-by-angle image."""
    if trace.angular.dimension != 2:
        raise ConfigurationError("trace figures are implemented for 2-d data")
    vals = np.asarray(trace.samples).real
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    extent = (0.0, 2.0 * np.pi, trace.time_grid.horizon, 0.0)
    im = ax.imshow(vals, aspect="auto", extent=extent, cmap="RdBu_r",
                   vmin=-np.max(np.abs(vals)) or -1.0, vmax=np.max(np.abs(vals)) or 1.0)
    ax.set_xlabel("theta")
    ax.set_ylabel("t")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def save_spectrum_figure(path, spectrum, title: str = ""):
    """Singular values against their rank, log scale."""
    values = [v for _, v in spectrum]
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ax.semilogy(np.arange(1, len(values) + 1), values, ".", markersize=4)
    ax.set_xlabel("rank")
    ax.set_ylabel("singular value")
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def polar_to_cartesian(g: GridFunction, n_pixels: int = 512) -> np.ndarray:
    """Resample a 2-d field onto an n x n raster covering [-1, 1]^2.

    Bilinear in radius and angle; radii beyond the outermost cell center
    clamp to it, pixels outside the unit disk are NaN.  Row 0 is y = +1
    (image orientation).
    """
    _require_2d(g)
    vals = np.asarray(g.values).real
    n_r, n_t = vals.shape
    coords = (np.arange(n_pixels) + 0.5) / n_pixels * 2.0 - 1.0
    X, Y = np.meshgrid(coords, -coords, indexing="xy")
    R = np.hypot(X, Y)
    TH = np.mod(np.arctan2(Y, X), 2.0 * np.pi)

    fr = np.clip(R / g.radial.spacing - 0.5, 0.0, n_r - 1.0)
    j0 = np.minimum(fr.astype(int), n_r - 2)
    wr = fr - j0
    dtheta = 2.0 * np.pi / n_t
    ft = TH / dtheta
    a0 = ft.astype(int) % n_t
    wt = ft - ft.astype(int)
    a1 = (a0 + 1) % n_t

    out = ((1 - wr) * (1 - wt) * vals[j0, a0] + (1 - wr) * wt * vals[j0, a1]
           + wr * (1 - wt) * vals[j0 + 1, a0] + wr * wt * vals[j0 + 1, a1])
    out[R > 1.0] = np.nan
    return out


def cartesian_to_polar(raster: np.ndarray, radial: RadialGrid, angular: AngularGrid) -> GridFunction:
    """Inverse resampling onto a polar grid, bilinear on the raster."""
    if angular.dimension != 2:
        raise ConfigurationError("raster resampling is 2-d")
    n = raster.shape[0]
    if raster.shape != (n, n):
        raise ValueError("raster must be square")
    r = radial.centers[:, None]
    th = angular.azimuths[None, :]
    x = r * np.cos(th)
    y = r * np.sin(th)
    fx = np.clip((x + 1.0) / 2.0 * n - 0.5, 0.0, n - 1.0)
    fy = np.clip((1.0 - y) / 2.0 * n - 0.5, 0.0, n - 1.0)
    i0 = np.minimum(fx.astype(int), n - 2)
    j0 = np.minimum(fy.astype(int), n - 2)
    wx = fx - i0
    wy = fy - j0
    filled = np.nan_to_num(raster)
    out = ((1 - wy) * (1 - wx) * filled[j0, i0] + (1 - wy) * wx * filled[j0, i0 + 1]
           + wy * (1 - wx) * filled[j0 + 1, i0] + wy * wx * filled[j0 + 1, i0 + 1])
    return GridFunction(radial, angular, out)


def export_image(g: GridFunction, path, n_pixels: int = 512):
    """Write the field as a binary 16-bit portable graymap.

    Values are scaled linearly from min to max over the disk; a constant
    field maps to uniform mid-gray.  Pixels outside the disk are 0.
    """
    raster = polar_to_cartesian(g, n_pixels)
    inside = ~np.isnan(raster)
    lo = float(raster[inside].min())
    hi = float(raster[inside].max())
    if hi - lo <= 1e-12 * max(abs(hi), abs(lo), 1e-30):
        scaled = np.full(raster.shape, 32768.0)
    else:
        scaled = (raster - lo) / (hi - lo) * 65535.0
    pixels = np.zeros(raster.shape, dtype=">u2")
    pixels[inside] = np.clip(np.rint(scaled[inside]), 0, 65535).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{raster.shape[1]} {raster.shape[0]}\n65535\n".encode("ascii"))
        fh.write(pixels.tobytes())
