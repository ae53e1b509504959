"""Command-line front end.

Subcommands::

    swefvs run --case riemann1 --order 1 --flux fvs-2r --m 100
    swefvs convergence --order 2 --meshes 16,32,64,128
    swefvs mesh gen --nx 10 --ny 10 --lx 1 --ly 1 -o square.mesh
    swefvs mesh check square.mesh
    swefvs riemann --hl 1 --ul 0 --hr 0.1 --ur 0

Exit codes: 0 success, 2 usage error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import ErrorReport, norms
from .cases import (bump_case, circular_dam_case, custom_riemann_case, lake_at_rest_case,
                    manufactured_case, riemann_case)
from .core import G_DEFAULT
from .io import read_keyvalue, write_csv, write_csv_1d, write_keyvalue, write_vtk_state
from .mesh import MeshFormatError, generate_rect_mesh, load_mesh, save_mesh, validate_mesh
from .riemann import FluxMode, RiemannSolverError, exact_pressure_star, exact_swe_solver, \
    two_rarefaction_star, wave_speeds
from .solver1d import NegativeDepthError, compute_dt, evolve, step
from .solver2d import compute_dt_2d, evolve2d, step2d

log = logging.getLogger("swefvs")

EXIT_OK, EXIT_USAGE, EXIT_SOLVER = 0, 2, 3

CASES = ("riemann1", "riemann2", "riemann3", "riemann", "bump1d", "bump2d", "dam2d",
         "lake1d", "lake2d", "mms2d")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    case: str = "riemann1"
    order: int = 1
    flux: str = "fvs-2r"
    cfl: Optional[float] = None
    m: Optional[int] = None
    nx: Optional[int] = None
    ny: Optional[int] = None
    mesh: Optional[str] = None
    g: float = G_DEFAULT
    times: Optional[tuple] = None
    out: str = "out"
    formats: tuple = ("csv", "vtk")
    threads: int = 1
    steps: Optional[int] = None
    # custom Riemann data
    hl: float = 1.0
    ul: float = 0.0
    hr: float = 0.1
    ur: float = 0.0
    psil: float = 1.0
    psir: float = 0.0
    t_end: float = 1.0

    def validate(self):
        if self.case not in CASES:
            raise UsageError(f"unknown case {self.case!r}; choose from {', '.join(CASES)}")
        if self.order not in (1, 2):
            raise UsageError("order must be 1 or 2")
        try:
            FluxMode.parse(self.flux)
        except ValueError:
            raise UsageError(f"unknown flux mode {self.flux!r}") from None
        if self.cfl is not None and not (0 < self.cfl <= 1):
            raise UsageError("cfl must lie in (0, 1]")
        for name in ("m", "nx", "ny"):
            v = getattr(self, name)
            if v is not None and v < 2:
                raise UsageError(f"{name} must be >= 2")
        if not self.g > 0:
            raise UsageError("g must be positive")
        if self.threads < 1:
            raise UsageError("threads must be >= 1")
        bad = set(self.formats) - {"csv", "vtk"}
        if bad:
            raise UsageError(f"unknown output formats {sorted(bad)}")


_CONVERTERS = {"order": int, "cfl": float, "m": int, "nx": int, "ny": int, "g": float,
               "threads": int, "steps": int, "hl": float, "ul": float, "hr": float,
               "ur": float, "psil": float, "psir": float, "t_end": float}


def _convert(key, value):
    if key == "times":
        return tuple(float(v) for v in str(value).split(",") if v.strip())
    if key == "formats":
        return tuple(v.strip() for v in str(value).split(",") if v.strip())
    conv = _CONVERTERS.get(key)
    try:
        return conv(value) if conv else value
    except ValueError:
        raise UsageError(f"bad value for {key}: {value!r}") from None


def build_config(args: argparse.Namespace) -> RunConfig:
    """Built-in defaults < config file < command-line flags."""
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    if args.config:
        try:
            items = read_keyvalue(args.config)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from None
        for k, v in items.items():
            if k not in known:
                raise UsageError(f"unknown config key {k!r}")
            setattr(cfg, k, _convert(k, v))
    for k in known:
        v = getattr(args, k, None)
        if v is not None:
            setattr(cfg, k, _convert(k, v) if isinstance(v, str) and k in ("times", "formats") else v)
    cfg.validate()
    return cfg


def _make_case(cfg: RunConfig):
    c = cfg.case
    if c.startswith("riemann") and c != "riemann":
        return riemann_case(int(c[-1]), M=cfg.m or 100, g=cfg.g)
    if c == "riemann":
        return custom_riemann_case(cfg.hl, cfg.ul, cfg.hr, cfg.ur, cfg.psil, cfg.psir,
                                   t_end=cfg.t_end, M=cfg.m or 100, g=cfg.g)
    if c == "bump1d":
        return bump_case(1, M=cfg.m or 200, g=cfg.g)
    if c == "bump2d":
        return bump_case(2, nx=cfg.nx or 200, ny=cfg.ny or 10, g=cfg.g)
    if c == "dam2d":
        return circular_dam_case(nx=cfg.nx or 100, ny=cfg.ny, g=cfg.g)
    if c == "lake1d":
        return lake_at_rest_case("bump", resolution=(cfg.m,) if cfg.m else None, g=cfg.g)
    if c == "lake2d":
        res = (cfg.nx, cfg.ny or cfg.nx) if cfg.nx else None
        return lake_at_rest_case("gauss", resolution=res, g=cfg.g)
    if c == "mms2d":
        return manufactured_case(nx=cfg.nx or 32, g=cfg.g)
    raise UsageError(f"unknown case {c!r}")


def run(cfg: RunConfig, stream=sys.stdout) -> dict:
    """Run one case; writes outputs and the manifest, returns a summary dict."""
    case = _make_case(cfg)
    cfl = cfg.cfl if cfg.cfl is not None else case.cfl
    times = tuple(cfg.times) if cfg.times else tuple(case.output_times)
    if cfg.steps is None and any(b <= a for a, b in zip(times, times[1:])):
        raise UsageError("output times must be increasing")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    mode = FluxMode.parse(cfg.flux)
    t0 = time.perf_counter()
    summary = {}
    if case.dimension == 1:
        state = case.initial_state_1d(cfg.m)
        H0 = state.free_surface.copy()
        advance = lambda s, t: evolve(s, t, order=cfg.order, flux_mode=mode, g=cfg.g, cfl=cfl)
        writer = lambda s, k: write_csv_1d(out / f"{case.id}_{k:04d}.csv", s) \
            if "csv" in cfg.formats else None
        resolution = f"M={state.grid.M}"
    else:
        mesh = load_mesh(cfg.mesh) if cfg.mesh else None
        state = case.initial_state_2d(mesh, threads=cfg.threads)
        H0 = state.free_surface.copy()
        advance = lambda s, t: evolve2d(s, t, order=cfg.order, flux_mode=mode, g=cfg.g, cfl=cfl)

        def writer(s, k):
            if "vtk" in cfg.formats:
                write_vtk_state(out / f"{case.id}_{k:04d}.vtk", s, f"{case.id} t={s.t:.6g}")
            if "csv" in cfg.formats:
                c = s.mesh.centroid
                write_csv(out / f"{case.id}_{k:04d}.csv",
                          {"x": c[:, 0], "y": c[:, 1], "b": s.bathymetry.cells, "h": s.U[0],
                           "qx": s.U[1], "qy": s.U[2], "H": s.free_surface})
        resolution = f"cells={state.mesh.ncells}"
    mass0 = _mass(state)
    if cfg.steps is not None:
        # fixed number of CFL steps (used for lake-at-rest checks)
        for _ in range(cfg.steps):
            if case.dimension == 1:
                dt = compute_dt(state, cfg.g, cfl)
                state = step(state, cfg.order, mode, cfg.g, dt)
            else:
                dt = compute_dt_2d(state, g=cfg.g, cfl=cfl)
                state = step2d(state, cfg.order, cfg.g, dt, mode)
        writer(state, 0)
    else:
        k = 0
        for t_out in times:
            if t_out > state.t:
                state = advance(state, t_out)
            writer(state, k)
            k += 1
    wall = time.perf_counter() - t0
    dH = float(np.max(np.abs(state.free_surface - H0)))
    summary.update(case=case.id, order=cfg.order, flux=mode.value, cfl=cfl, g=cfg.g,
                   resolution=resolution, output_times=list(times), final_time=state.t,
                   steps=state.steps, wall_time=wall, threads=cfg.threads,
                   mass_initial=mass0, mass_final=_mass(state), max_abs_H_change=dH,
                   out=str(out), formats=list(cfg.formats))
    if case.id.startswith("lake"):
        print(f"max|H-H0| = {dH:.3e}", file=stream)
    write_keyvalue(out / f"{case.id}_manifest.txt", summary)
    print(f"{case.id}: {state.steps} steps to t={state.t:.6g} in {wall:.2f}s -> {out}", file=stream)
    return summary


def _mass(state):
    if hasattr(state, "grid"):
        return float(np.sum(state.U[0]) * state.grid.dx)
    return state.mass()


def convergence(order=2, meshes=(16, 32, 64, 128), flux="fvs-2r", cfl=0.45, g=G_DEFAULT,
                t_end=1.0, threads=1) -> ErrorReport:
    """Manufactured-solution study scored on q_x at ``t_end``."""
    if len(meshes) < 3:
        raise UsageError("a convergence study needs at least three meshes")
    from .cases import manufactured_cell_average
    report = ErrorReport("qx")
    for nx in meshes:
        case = manufactured_case(nx=nx, g=g, t_end=t_end)
        state = case.initial_state_2d(threads=threads)
        state = evolve2d(state, t_end, order=order, flux_mode=flux, g=g, cfl=cfl)
        exact, _ = manufactured_cell_average(state.mesh, state.t)
        report.add(nx, 1.0 / nx, norms(state.U[1], exact[1], state.mesh.area))
    return report


def _riemann_report(a, stream):
    left = (a.hl, a.hl * a.ul)
    right = (a.hr, a.hr * a.ur)
    two_r = two_rarefaction_star(left, right, a.g)
    exact = exact_pressure_star(left, right, a.g)
    print("pressure system (h, q)", file=stream)
    for name, s in (("two-rarefaction", two_r), ("exact", exact)):
        line = (f"  {name}: h*={s.h_star:.10g} q*={s.q_star:.10g} "
                f"left={s.wave_left.value} right={s.wave_right.value} dry={s.dry}")
        if s.S_L is not None:
            line += f" S_L={s.S_L:.10g}"
        if s.S_R is not None:
            line += f" S_R={s.S_R:.10g}"
        print(line, file=stream)
    sol = exact_swe_solver((a.hl, a.ul, 1.0), (a.hr, a.ur, 0.0), a.g)
    ws = wave_speeds(sol, 0)
    print("full shallow water system (h, u)", file=stream)
    print(f"  h*={float(sol.h_star):.10g} u*={float(sol.u_star):.10g}", file=stream)
    for key, val in ws.items():
        if key in ("h_star", "u_star"):
            continue
        print(f"  {key}: {val}", file=stream)


def _parser():
    p = argparse.ArgumentParser(prog="swefvs", description="Shallow water flux-splitting solver")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a built-in case")
    r.add_argument("--config", help="key=value config file")
    r.add_argument("--case", choices=CASES)
    r.add_argument("--order", type=int, choices=(1, 2))
    r.add_argument("--flux")
    r.add_argument("--cfl", type=float)
    r.add_argument("--m", type=int, help="1D cell count")
    r.add_argument("--nx", type=int)
    r.add_argument("--ny", type=int)
    r.add_argument("--mesh", help="2D mesh file")
    r.add_argument("--g", type=float)
    r.add_argument("--times", help="comma-separated output times")
    r.add_argument("--out")
    r.add_argument("--formats", help="comma-separated: csv,vtk")
    r.add_argument("--threads", type=int)
    r.add_argument("--steps", type=int, help="take this many CFL steps instead of output times")
    for name in ("hl", "ul", "hr", "ur", "psil", "psir", "t_end"):
        r.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)

    c = sub.add_parser("convergence", help="manufactured-solution convergence study")
    c.add_argument("--order", type=int, choices=(1, 2), default=2)
    c.add_argument("--meshes", default="16,32,64,128")
    c.add_argument("--flux", default="fvs-2r")
    c.add_argument("--cfl", type=float, default=0.45)
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("--out", help="write the table to this CSV-like file")

    m = sub.add_parser("mesh", help="mesh utilities")
    msub = m.add_subparsers(dest="mesh_command", required=True)
    mg = msub.add_parser("gen", help="generate a rectangle mesh")
    mg.add_argument("--nx", type=int, required=True)
    mg.add_argument("--ny", type=int, required=True)
    mg.add_argument("--lx", type=float, default=1.0)
    mg.add_argument("--ly", type=float, default=1.0)
    mg.add_argument("--x0", type=float, default=0.0)
    mg.add_argument("--y0", type=float, default=0.0)
    mg.add_argument("-o", "--output", required=True)
    mc = msub.add_parser("check", help="validate a mesh file")
    mc.add_argument("path")

    q = sub.add_parser("riemann", help="print star states and wave structure")
    q.add_argument("--hl", type=float, required=True)
    q.add_argument("--ul", type=float, default=0.0)
    q.add_argument("--hr", type=float, required=True)
    q.add_argument("--ur", type=float, default=0.0)
    q.add_argument("--g", type=float, default=G_DEFAULT)
    return p


def main(argv=None, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "run":
            run(build_config(args), stream)
        elif args.command == "convergence":
            meshes = tuple(int(v) for v in args.meshes.split(","))
            rep = convergence(args.order, meshes, args.flux, args.cfl, threads=args.threads)
            text = rep.table()
            print(text, file=stream)
            if args.out:
                Path(args.out).write_text(text + "\n")
        elif args.command == "mesh":
            if args.mesh_command == "gen":
                if args.nx < 1 or args.ny < 1 or args.lx <= 0 or args.ly <= 0:
                    raise UsageError("mesh gen needs nx, ny >= 1 and positive lx, ly")
                mesh = generate_rect_mesh(args.nx, args.ny, args.lx, args.ly, (args.x0, args.y0))
                save_mesh(mesh, args.output)
                print(f"wrote {mesh.ncells} cells, {mesh.nnodes} nodes to {args.output}", file=stream)
            else:
                mesh = load_mesh(args.path)
                problems = validate_mesh(mesh)
                for msg in problems:
                    print(msg, file=stream)
                print(f"{mesh.ncells} cells, {mesh.nnodes} nodes, "
                      f"{len(problems)} violations", file=stream)
                return 1 if problems else EXIT_OK
        elif args.command == "riemann":
            if args.hl < 0 or args.hr < 0:
                raise UsageError("depths must be non-negative")
            _riemann_report(args, stream)
        return EXIT_OK
    except (UsageError, MeshFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NegativeDepthError, RiemannSolverError, ValueError, ArithmeticError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
