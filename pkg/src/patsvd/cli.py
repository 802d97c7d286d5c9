"""Command-line front end.

Subcommands mirror the library layers: `modes` and `gram` exercise the
eigenbasis, `forward` produces boundary data, `reconstruct` inverts
pre-recorded data, `pipeline` runs phantom-to-reconstruction end to end,
`validate` runs the named oracle suites, and `export` rasterizes a stored
field to a 16-bit graymap.

Run configuration comes from a JSON file (--config) with individual flags
as overrides, so a checked-in config can be re-run with one knob turned.
The PATSVD_THREADS environment variable sets the worker count for
independent radial solves.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .basis import (AngularGrid, QuadratureRule, enumerate_modes, gram_matrix,
                    load_grid, save_grid_csv, worker_count)
from .errors import ConfigurationError, NumericalError, ShapeError
from .figures import export_image
from .forward import load_trace
from .pipeline import (RunConfig, load_config, run_forward, run_pipeline,
                       validate_suite, VALIDATION_SUITES)
from .radial import BoundaryCondition, RadialGrid, save_modes
from .speed import make_profile


def _bc(name: str) -> BoundaryCondition:
    return BoundaryCondition.NEUMANN if name == "neumann" else BoundaryCondition.DIRICHLET


_OVERRIDE_KEYS = ("profile", "bc", "method", "horizon", "modes", "out")


def _merged_config(args) -> RunConfig:
    raw = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            raw = json.load(fh)
    for key in _OVERRIDE_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            raw["out_dir" if key == "out" else key] = value
    if raw.get("modes") is not None:
        raw.pop("mu_max", None)
    return RunConfig.from_dict(raw)


def _add_override_flags(parser, with_method=True):
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--profile", help="speed profile: c1, c2[:r1:r2], const:<v>")
    parser.add_argument("--bc", choices=["neumann", "dirichlet"], help="boundary condition")
    parser.add_argument("--horizon", type=float, help="recording horizon A")
    parser.add_argument("--modes", type=int, help="number of retained modes")
    parser.add_argument("--out", help="output directory")
    if with_method:
        parser.add_argument("--method", choices=["direct", "lsq"], help="inversion method")


def _cmd_modes(args) -> int:
    profile = make_profile(args.profile or "c1")
    grid = RadialGrid(args.radial_cells)
    kwargs = {"mu_max": args.mu_max} if args.mu_max is not None else {"count": args.modes or 50}
    modes = enumerate_modes(profile, grid, _bc(args.bc or "neumann"), args.dimension, **kwargs)
    radial_parts, seen = [], set()
    for m in modes:
        key = id(m.radial)
        if key not in seen:
            seen.add(key)
            radial_parts.append(m.radial)
    if args.out:
        save_modes(args.out, radial_parts)
    print(f"{len(modes)} modes ({len(radial_parts)} radial problems), "
          f"mu range [{modes[0].mu:.6g}, {modes[-1].mu:.6g}], threads={worker_count()}")
    for m in modes[: args.show]:
        print(f"  l={m.index.l:+3d} k={m.index.k:2d}  mu={m.mu:12.6f}  gain={m.boundary_value:+.6f}"
              if m.bc is BoundaryCondition.NEUMANN else
              f"  l={m.index.l:+3d} k={m.index.k:2d}  mu={m.mu:12.6f}  gain={m.boundary_derivative:+.6f}")
    if args.out:
        print(f"wrote {args.out}")
    return 0


def _cmd_gram(args) -> int:
    profile = make_profile(args.profile or "c1")
    grid = RadialGrid(args.radial_cells)
    modes = enumerate_modes(profile, grid, _bc(args.bc or "neumann"), 2, count=args.modes or 100)
    l_max = max(abs(m.index.l) for m in modes)
    n_ang = args.angular or 2 * l_max + 2
    quad = QuadratureRule(grid, AngularGrid(2, n_ang))
    gram = gram_matrix(modes, quad, profile)
    dev = float(np.max(np.abs(gram - np.eye(len(modes)))))
    print(f"{len(modes)} modes, angular points {n_ang}: max |G - I| = {dev:.3e}")
    if args.out:
        np.savetxt(args.out, np.abs(gram), delimiter=",")
        print(f"wrote |G| to {args.out}")
    return 0


def _cmd_forward(args) -> int:
    manifest = run_forward(_merged_config(args), args.out)
    print(json.dumps({k: manifest[k] for k in ("mode_count", "artifacts")}, indent=2, sort_keys=True))
    return 0


def _cmd_reconstruct(args) -> int:
    config = _merged_config(args)
    trace = load_trace(args.trace)
    manifest = run_pipeline(config, args.out, trace_override=trace)
    print(json.dumps(manifest["results"], indent=2, sort_keys=True))
    return 0


def _cmd_pipeline(args) -> int:
    manifest = run_pipeline(_merged_config(args), args.out)
    print(json.dumps(manifest["results"], indent=2, sort_keys=True))
    return 0


def _cmd_validate(args) -> int:
    report = validate_suite(args.suite)
    width = max(len(r["name"]) for r in report["checks"])
    for row in report["checks"]:
        flag = "pass" if row["passed"] else "FAIL"
        print(f"  {row['name']:<{width}}  measured {row['measured']:.6e}  "
              f"tolerance {row['tolerance']:.6e}  {flag}")
    print(f"suite {report['suite']}: {'PASS' if report['passed'] else 'FAIL'}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
    return 0 if report["passed"] else 1


def _cmd_export(args) -> int:
    g = load_grid(args.grid)
    if args.csv:
        save_grid_csv(args.csv, g)
        print(f"wrote {args.csv}")
    export_image(g, args.out, n_pixels=args.pixels)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patsvd",
        description="Singular-value toolkit for the spherical photoacoustic forward operator",
        epilog="Set PATSVD_THREADS to parallelize independent radial solves.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("modes", help="solve the radial eigenproblems")
    p.add_argument("--profile")
    p.add_argument("--bc", choices=["neumann", "dirichlet"])
    p.add_argument("--dimension", type=int, default=2, choices=[2, 3])
    p.add_argument("--radial-cells", type=int, default=512)
    p.add_argument("--modes", type=int)
    p.add_argument("--mu-max", type=float)
    p.add_argument("--show", type=int, default=10, help="rows to print")
    p.add_argument("--out", help="write the radial modes (binary)")
    p.set_defaults(func=_cmd_modes)

    p = sub.add_parser("gram", help="orthonormality check of the mode basis")
    p.add_argument("--profile")
    p.add_argument("--bc", choices=["neumann", "dirichlet"])
    p.add_argument("--radial-cells", type=int, default=512)
    p.add_argument("--modes", type=int)
    p.add_argument("--angular", type=int)
    p.add_argument("--out", help="write |G| as CSV")
    p.set_defaults(func=_cmd_gram)

    p = sub.add_parser("forward", help="phantom to boundary trace")
    _add_override_flags(p, with_method=False)
    p.set_defaults(func=_cmd_forward)

    p = sub.add_parser("reconstruct", help="invert a recorded trace")
    p.add_argument("--trace", required=True, help="trace file (binary)")
    _add_override_flags(p)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("pipeline", help="phantom, data, inversion, report")
    _add_override_flags(p)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("validate", help="run a named oracle suite")
    p.add_argument("suite", choices=sorted(VALIDATION_SUITES))
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("export", help="rasterize a stored field to 16-bit PGM")
    p.add_argument("grid", help="field file (binary)")
    p.add_argument("--out", required=True)
    p.add_argument("--pixels", type=int, default=512)
    p.add_argument("--csv", help="also dump the field as CSV")
    p.set_defaults(func=_cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ShapeError, NumericalError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
