"""Built-in test problems and the reference solutions used to score them."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .analysis import norms
from .core import G_DEFAULT
from .io import write_csv
from .mesh import TriMesh, generate_rect_mesh
from .riemann import exact_swe_solve, godunov_flux
from .solver1d import Bathymetry1D, Bc1D, Grid1D, RunState1D
from .solver2d import Bathymetry2D, Bc2D, RunState2D


class RegimeError(ValueError):
    """Raised when a steady reference cannot be built for the given data."""


@dataclass
class TestCase:
    """A runnable problem: geometry, bed, initial data, boundaries and outputs.

    ``initial`` maps cell coordinates to conserved values, ``(x) -> (3, M)``
    in 1D and ``(x, y) -> (3, N)`` in 2D. ``reference`` is an optional
    callable giving the reference depth at the final output time.
    """

    __test__ = False  # keep pytest from collecting this class

    id: str
    dimension: int
    domain: tuple
    bathymetry: Callable
    initial: Callable
    bcs: dict
    g: float = G_DEFAULT
    cfl: float = 0.9
    output_times: tuple = ()
    resolution: tuple = (100,)
    reference: Optional[Callable] = None
    reference_kind: str = "none"
    forcing: Optional[Callable] = None
    cell_average: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.output_times, dtype=float)
        if t.size and np.any(np.diff(t) <= 0):
            raise ValueError("output times must be increasing")
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")

    @property
    def t_end(self) -> float:
        return float(self.output_times[-1])

    # -- state builders ------------------------------------------------------
    def grid(self, M=None) -> Grid1D:
        M = self.resolution[0] if M is None else M
        return Grid1D(self.domain[0], self.domain[1], int(M))

    def mesh(self, nx=None, ny=None) -> TriMesh:
        nx = self.resolution[0] if nx is None else nx
        ny = self.resolution[1] if ny is None else ny
        (x0, x1), (y0, y1) = self.domain
        return generate_rect_mesh(int(nx), int(ny), x1 - x0, y1 - y0, (x0, y0))

    def initial_state_1d(self, M=None) -> RunState1D:
        grid = self.grid(M)
        bath = Bathymetry1D.from_function(grid, self.bathymetry)
        U = np.asarray(self.initial(grid.centers), dtype=float)
        state = RunState1D(grid, U, bath, self.bcs["left"], self.bcs["right"],
                           forcing=self.forcing)
        return state

    def initial_state_2d(self, mesh: Optional[TriMesh] = None, threads=1) -> RunState2D:
        mesh = self.mesh() if mesh is None else mesh
        if self.cell_average is not None:
            U, b_cells = self.cell_average(mesh, 0.0)
            m = mesh.edge_midpoint
            bath = Bathymetry2D(b_cells, np.asarray(self.bathymetry(m[:, 0], m[:, 1]), float),
                                self.bathymetry)
        else:
            bath = Bathymetry2D.from_function(mesh, self.bathymetry)
            c = mesh.centroid
            U = np.asarray(self.initial(c[:, 0], c[:, 1]), dtype=float)
        return RunState2D(mesh, U, bath, dict(self.bcs), forcing=self.forcing, threads=threads)

    def validate_initial(self, state) -> None:
        U = state.U
        if np.any(U[0] < 0) or not np.all(np.isfinite(U)):
            raise ValueError(f"case {self.id}: invalid initial depth")


# --------------------------------------------------------------------------
# Riemann problems
RIEMANN_DATA = {
    1: dict(hL=1.0, uL=0.0, psiL=1.0, hR=0.1, uR=0.0, psiR=0.0, t=3.0),
    2: dict(hL=0.51, uL=2.5, psiL=1.0, hR=0.48, uR=-5.8, psiR=0.0, t=3.0),
    3: dict(hL=1.0, uL=-3.0, psiL=1.0, hR=1.0, uR=3.0, psiR=0.0, t=2.0),
}


def riemann_case(k: int, M: int = 100, x0: float = 15.0, length: float = 30.0,
                 g: float = G_DEFAULT) -> TestCase:
    """Dam-break style Riemann problem ``k`` on [0, 30] with the jump at x = 15."""
    if k not in RIEMANN_DATA:
        raise ValueError(f"unknown Riemann test {k!r}; expected 1, 2 or 3")
    d = RIEMANN_DATA[k]
    return custom_riemann_case(d["hL"], d["uL"], d["hR"], d["uR"], d["psiL"], d["psiR"],
                               t_end=d["t"], M=M, x0=x0, length=length, g=g,
                               case_id=f"riemann{k}")


def custom_riemann_case(hL, uL, hR, uR, psiL=1.0, psiR=0.0, t_end=1.0, M=100, x0=None,
                        length=30.0, g=G_DEFAULT, case_id="riemann") -> TestCase:
    x0 = 0.5 * length if x0 is None else x0
    if hL < 0 or hR < 0:
        raise ValueError("Riemann data needs non-negative depths")

    def initial(x):
        left = x < x0
        h = np.where(left, hL, hR)
        u = np.where(left, uL, uR)
        psi = np.where(left, psiL, psiR)
        return np.stack([h, h * u, h * psi])

    sol = exact_swe_solve(hL, uL, hR, uR, psiL, psiR, g)

    def reference(x, t):
        if t <= 0:
            U = initial(np.asarray(x, float))
            return U[0]
        h, _, _ = sol.sample((np.asarray(x, float) - x0) / t)
        return h

    return TestCase(case_id, 1, (0.0, length), lambda x: np.zeros_like(np.asarray(x, float)),
                    initial, {"left": Bc1D.transmissive(), "right": Bc1D.transmissive()},
                    g=g, cfl=0.9, output_times=(t_end,), resolution=(M,),
                    reference=reference, reference_kind="exact-riemann",
                    params=dict(hL=hL, uL=uL, hR=hR, uR=uR, psiL=psiL, psiR=psiR, x0=x0))


# --------------------------------------------------------------------------
# Transcritical flow over a bump
BUMP_Q = 0.18
BUMP_H = 0.33
BUMP_CREST = 10.0


def bump_bed(x):
    x = np.asarray(x, dtype=float)
    return np.where((x > 8.0) & (x < 12.0), 0.2 - 0.05 * (x - 10.0) ** 2, 0.0)


def bump_case(dim: int = 1, M: int = 200, nx: int = 200, ny: int = 10,
              g: float = G_DEFAULT, far_field: bool = True) -> TestCase:
    """Steady transcritical flow with a hydraulic jump over a parabolic bump.

    ``far_field`` holds the outflow ghost discharge at the inflow value so
    the outlet does not reflect transients back into the domain.
    """
    far = BUMP_Q if far_field else None
    ref = functools.partial(_bump_reference_depth, g=g)
    if dim == 1:
        def initial(x):
            x = np.asarray(x, float)
            return np.stack([np.full_like(x, BUMP_H), np.full_like(x, BUMP_Q), np.zeros_like(x)])
        return TestCase("bump1d", 1, (0.0, 25.0), bump_bed, initial,
                        {"left": Bc1D.inflow(BUMP_Q), "right": Bc1D.outflow(BUMP_H, far)},
                        g=g, cfl=0.9, output_times=(200.0,), resolution=(M,),
                        reference=ref, reference_kind="bump-steady")
    if dim == 2:
        def initial(x, y):
            x = np.asarray(x, float)
            return np.stack([np.full_like(x, BUMP_H), np.full_like(x, BUMP_Q), np.zeros_like(x)])
        bcs = {"left": Bc2D.inflow(BUMP_Q), "right": Bc2D.outflow(BUMP_H, far),
               "bottom": Bc2D.wall(), "top": Bc2D.wall()}
        return TestCase("bump2d", 2, ((0.0, 25.0), (0.0, 1.25)), lambda x, y: bump_bed(x) + 0.0 * y,
                        initial, bcs, g=g, cfl=0.45, output_times=(200.0,), resolution=(nx, ny),
                        reference=lambda x, t: _bump_reference_depth(x, t, g),
                        reference_kind="bump-steady")
    raise ValueError("dim must be 1 or 2")


@functools.lru_cache(maxsize=4)
def _bump_profile(g):
    return bump_steady_reference(BUMP_Q, BUMP_H, bump_bed, g)


def _bump_reference_depth(x, t=None, g=G_DEFAULT):
    return _bump_profile(g).h(x)


def _specific_energy(h, q, g):
    return h + q * q / (2.0 * g * h * h)


@dataclass
class SteadyProfile:
    """Steady depth profile along x; ``shock_x`` is None without a jump."""

    q: float
    g: float
    bathymetry: Callable
    energy_up: float
    energy_down: float
    crest_x: Optional[float]
    shock_x: Optional[float]
    h_crit: float

    def _root(self, head, branch):
        hc = self.h_crit
        if head <= _specific_energy(hc, self.q, self.g) * (1 + 1e-15):
            return hc
        f = lambda h: _specific_energy(h, self.q, self.g) - head
        if branch == "sub":
            hi = 2.0 * hc
            while f(hi) < 0:
                hi *= 2.0
            return brentq(f, hc, hi, xtol=1e-15, rtol=1e-15)
        lo = hc * 0.5
        while f(lo) < 0:
            lo *= 0.5
        return brentq(f, lo, hc, xtol=1e-15, rtol=1e-15)

    def depth_at(self, x: float) -> float:
        b = float(self.bathymetry(np.asarray(x, float)))
        if self.crest_x is None:
            return self._root(self.energy_down - b, "sub")
        if x <= self.crest_x:
            return self._root(self.energy_up - b, "sub")
        if self.shock_x is not None and x < self.shock_x:
            return self._root(self.energy_up - b, "super")
        return self._root(self.energy_down - b, "sub")

    def h(self, x):
        x = np.asarray(x, dtype=float)
        return np.vectorize(self.depth_at, otypes=[float])(x)


def conjugate_depth(h1, q, g=G_DEFAULT):
    """Depth downstream of a hydraulic jump with upstream depth ``h1``."""
    fr2 = q * q / (g * h1 ** 3)
    return 0.5 * h1 * (math.sqrt(1.0 + 8.0 * fr2) - 1.0)


def bump_steady_reference(q_in=BUMP_Q, h_out=BUMP_H, bathymetry=bump_bed, g=G_DEFAULT,
                          x_range=(0.0, 25.0), samples=25001) -> SteadyProfile:
    """Steady solution with constant discharge and piecewise constant energy.

    Upstream of the crest the flow is subcritical with the critical energy
    of the crest; past the crest it is supercritical until a jump whose
    conjugate depth matches the subcritical branch fixed by ``h_out``.
    """
    xs = np.linspace(x_range[0], x_range[1], samples)
    bs = np.asarray(bathymetry(xs), dtype=float) * np.ones_like(xs)
    b_out = float(bs[-1])
    h_crit = (q_in * q_in / g) ** (1.0 / 3.0)
    e_down = _specific_energy(h_out, q_in, g) + b_out
    i_crest = int(np.argmax(bs))
    b_max = float(bs[i_crest])
    e_crit = _specific_energy(h_crit, q_in, g) + b_max
    if e_down >= e_crit or b_max <= b_out:
        # crest is drowned: subcritical everywhere
        return SteadyProfile(q_in, g, bathymetry, e_down, e_down, None, None, h_crit)
    crest_x = float(xs[i_crest])
    prof = SteadyProfile(q_in, g, bathymetry, e_crit, e_down, crest_x, None, h_crit)

    def mismatch(x):
        b = float(bathymetry(np.asarray(x, float)))
        h1 = prof._root(e_crit - b, "super")
        h2 = prof._root(e_down - b, "sub")
        return conjugate_depth(h1, q_in, g) - h2

    grid = xs[(xs > crest_x)]
    vals = np.array([mismatch(x) for x in grid[::50]] + [mismatch(grid[-1])])
    pts = np.append(grid[::50], grid[-1])
    sign = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    if len(sign) == 0:
        raise RegimeError("no admissible hydraulic jump position for the given data")
    j = sign[0]
    prof.shock_x = brentq(mismatch, pts[j], pts[j + 1], xtol=1e-12)
    return prof


# --------------------------------------------------------------------------
# Circular dam break
DAM_CENTER = (20.0, 20.0)
DAM_RADIUS = 2.5
DAM_H_IN = 2.5
DAM_H_OUT = 1.0


def circular_dam_case(nx: int = 100, ny: Optional[int] = None, g: float = G_DEFAULT) -> TestCase:
    ny = nx if ny is None else ny

    def initial(x, y):
        r = np.hypot(np.asarray(x) - DAM_CENTER[0], np.asarray(y) - DAM_CENTER[1])
        h = np.where(r <= DAM_RADIUS, DAM_H_IN, DAM_H_OUT)
        return np.stack([h, np.zeros_like(h), np.zeros_like(h)])

    def reference(x, y, t):
        r = np.hypot(np.asarray(x) - DAM_CENTER[0], np.asarray(y) - DAM_CENTER[1])
        return radial_reference(r, t, g=g)[0]

    bcs = {tag: Bc2D.wall() for tag in ("left", "right", "bottom", "top")}
    return TestCase("dam2d", 2, ((0.0, 40.0), (0.0, 40.0)),
                    lambda x, y: np.zeros(np.broadcast(x, y).shape), initial, bcs, g=g, cfl=0.45,
                    output_times=tuple(0.5 * k for k in range(9)), resolution=(nx, ny),
                    reference=reference, reference_kind="radial")


@functools.lru_cache(maxsize=8)
def radial_solution(t: float, cells: int = 4000, r_max: float = 30.0, h_in: float = DAM_H_IN,
                    h_out: float = DAM_H_OUT, r0: float = DAM_RADIUS, g: float = G_DEFAULT,
                    cfl: float = 0.9):
    """First-order solution of the radially symmetric shallow water equations.

    Works with the area-weighted unknowns: cell ``i`` has volume ``r_i dr``,
    fluxes through faces are weighted by the face radius and the momentum
    equation keeps the hoop pressure term ``g h^2 / (2 r)``. This form is
    algebraically the same system as the non-conservative source form and
    preserves ``sum h r dr`` exactly. Returns ``(r, h, u, mass0, mass)``.
    """
    dr = r_max / cells
    r = (np.arange(cells) + 0.5) * dr
    rf = np.arange(cells + 1) * dr
    h = np.where(r <= r0, h_in, h_out).astype(float)
    hu = np.zeros(cells)
    mass0 = float(np.sum(h * r) * dr)
    time = 0.0
    while time < t - 1e-14 * max(t, 1.0):
        u = hu / h
        dt = cfl * dr / np.max(np.abs(u) + np.sqrt(g * h))
        dt = min(dt, t - time)
        # ghosts: reflective at r = 0, transmissive at r_max
        he = np.concatenate([[h[0]], h, [h[-1]]])
        ue = np.concatenate([[-u[0]], u, [u[-1]]])
        F = godunov_flux(he[:-1], ue[:-1], 0.0, he[1:], ue[1:], 0.0, g)
        wF = F[:2] * rf
        vol = r * dr
        h = h - dt * (wF[0, 1:] - wF[0, :-1]) / vol
        hu = hu - dt * (wF[1, 1:] - wF[1, :-1]) / vol + dt * 0.5 * g * (he[1:-1] ** 2) / r
        time += dt
    mass = float(np.sum(h * r) * dr)
    return r, h, hu / h, mass0, mass


def radial_reference(r_grid, t, cells=4000, r_max=30.0, g=G_DEFAULT):
    """Reference ``(h, u_r)`` of the circular dam break sampled on ``r_grid``."""
    r_grid = np.asarray(r_grid, dtype=float)
    if t <= 0:
        h = np.where(r_grid <= DAM_RADIUS, DAM_H_IN, DAM_H_OUT)
        return h.astype(float), np.zeros_like(r_grid)
    r, h, u, _, _ = radial_solution(float(t), int(cells), float(r_max), g=g)
    return np.interp(r_grid, r, h), np.interp(r_grid, r, u)


def dam_slice_error(state: RunState2D, half_width: float = 0.4, y_slice: float = DAM_CENTER[1],
                    g: float = G_DEFAULT):
    """L1 depth error along the slice ``y = y_slice`` against the radial reference.

    Scores the cells whose centroid lies within ``half_width`` of the slice,
    comparing each with the reference at the centroid's radius.
    """
    c = state.mesh.centroid
    sel = np.abs(c[:, 1] - y_slice) < half_width
    if not np.any(sel):
        raise ValueError("no cells on the requested slice")
    r = np.hypot(c[sel, 0] - DAM_CENTER[0], c[sel, 1] - DAM_CENTER[1])
    h_ref, _ = radial_reference(r, state.t, g=g)
    return norms(state.U[0, sel], h_ref).L1


# --------------------------------------------------------------------------
# Manufactured solution on the unit square
def _mms_bed(x, y):
    return 0.2 * np.exp(-8.0 * (x * x + y * y))


def manufactured_exact(x, y, t):
    """Exact ``(h, qx, qy)`` of the manufactured solution."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h = math.exp(0.1 * t) - _mms_bed(x, y)
    u = 0.2 + 0.1 * np.sin(np.pi * x)
    v = 0.2 + 0.1 * np.sin(np.pi * y)
    return np.stack(np.broadcast_arrays(h, h * u, h * v))


def _manufactured_forcing_parts(x, y):
    """Split the forcing as ``exp(0.1 t) * growing + steady``.

    The free surface is flat in space, so pressure and bed slope cancel and
    only the advective terms remain; every term is linear in exp(0.1 t).
    """
    b = _mms_bed(x, y)
    b_x = -16.0 * x * b
    b_y = -16.0 * y * b
    u = 0.2 + 0.1 * np.sin(np.pi * x)
    v = 0.2 + 0.1 * np.sin(np.pi * y)
    u_x = 0.1 * np.pi * np.cos(np.pi * x)
    v_y = 0.1 * np.pi * np.cos(np.pi * y)
    # h = e - b, h_t = 0.1 e, h_x = -b_x, h_y = -b_y with e = exp(0.1 t)
    div = u_x + v_y
    growing = np.stack([0.1 + div,
                        0.1 * u + 2.0 * u * u_x + u * v_y,
                        0.1 * v + u_x * v + 2.0 * v * v_y])
    steady = np.stack([-b_x * u - b_y * v - b * div,
                       -b_x * u * u - b_y * u * v - b * (2.0 * u * u_x + u * v_y),
                       -b_x * u * v - b_y * v * v - b * (u_x * v + 2.0 * v * v_y)])
    return growing, steady


def manufactured_forcing(x, y, t, g=G_DEFAULT):
    """Source that makes :func:`manufactured_exact` an exact solution."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    growing, steady = _manufactured_forcing_parts(x, y)
    return math.exp(0.1 * t) * growing + steady


class ManufacturedForcing:
    """Callable forcing that reuses the spatial factors for repeated points."""

    def __init__(self, g=G_DEFAULT):
        self.g = g
        self._points = None
        self._parts = None

    def __call__(self, x, y, t):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        cached = self._points
        if (cached is None or cached[0].shape != x.shape or cached[1].shape != y.shape
                or not np.array_equal(cached[0], x) or not np.array_equal(cached[1], y)):
            self._points = (x.copy(), y.copy())
            self._parts = _manufactured_forcing_parts(*np.broadcast_arrays(x, y))
        growing, steady = self._parts
        return math.exp(0.1 * t) * growing + steady


def manufactured_cell_average(mesh: TriMesh, t: float):
    """Cell averages of the exact fields and of the bed (edge-midpoint rule,
    exact for quadratics)."""
    m = mesh.edge_mid                                      # (N, 3, 2)
    U = manufactured_exact(m[..., 0], m[..., 1], t).mean(axis=2)
    b = _mms_bed(m[..., 0], m[..., 1]).mean(axis=1)
    return U, b


def manufactured_case(nx: int = 32, g: float = G_DEFAULT, t_end: float = 1.0) -> TestCase:
    bc = Bc2D.dirichlet(lambda x, y, t: manufactured_exact(x, y, t))
    return TestCase("mms2d", 2, ((0.0, 1.0), (0.0, 1.0)), _mms_bed,
                    lambda x, y: manufactured_exact(x, y, 0.0),
                    {tag: bc for tag in ("left", "right", "bottom", "top")}, g=g, cfl=0.45,
                    output_times=(t_end,), resolution=(nx, nx),
                    reference=lambda x, y, t: manufactured_exact(x, y, t),
                    reference_kind="manufactured",
                    forcing=ManufacturedForcing(g),
                    cell_average=manufactured_cell_average)


def manufactured_exact_1d(x, t):
    x = np.asarray(x, dtype=float)
    b = 0.2 * np.exp(-8.0 * x * x)
    h = math.exp(0.1 * t) - b
    u = 0.2 + 0.1 * np.sin(np.pi * x)
    return np.stack([h, h * u, h])


def manufactured_forcing_1d(x, t, g=G_DEFAULT):
    x = np.asarray(x, dtype=float)
    b = 0.2 * np.exp(-8.0 * x * x)
    et = math.exp(0.1 * t)
    h = et - b
    h_t = 0.1 * et
    h_x = 16.0 * x * b
    u = 0.2 + 0.1 * np.sin(np.pi * x)
    u_x = 0.1 * np.pi * np.cos(np.pi * x)
    mass = h_t + h_x * u + h * u_x
    mom = h_t * u + h_x * u * u + 2.0 * h * u * u_x
    return np.stack([mass, mom, mass])


def manufactured_case_1d(M: int = 32, g: float = G_DEFAULT, t_end: float = 1.0) -> TestCase:
    bc = Bc1D.dirichlet(manufactured_exact_1d)
    return TestCase("mms1d", 1, (0.0, 1.0), lambda x: 0.2 * np.exp(-8.0 * np.asarray(x) ** 2),
                    lambda x: manufactured_exact_1d(x, 0.0), {"left": bc, "right": bc}, g=g,
                    cfl=0.9, output_times=(t_end,), resolution=(M,),
                    reference=manufactured_exact_1d, reference_kind="manufactured",
                    forcing=lambda x, t: manufactured_forcing_1d(x, t, g))


# --------------------------------------------------------------------------
# Lake at rest
def lake_at_rest_case(bathymetry: str = "bump", H0: Optional[float] = None,
                      resolution=None, g: float = G_DEFAULT) -> TestCase:
    """Still water over a bed: ``bump`` / ``flat1d`` (1D), ``gauss`` / ``flat2d`` (2D)."""
    if bathymetry in ("bump", "flat1d"):
        H0 = 0.5 if H0 is None else H0
        bed = bump_bed if bathymetry == "bump" else (lambda x: np.zeros_like(np.asarray(x, float)))

        def initial(x):
            h = np.maximum(H0 - bed(x), 0.0)
            return np.stack([h, np.zeros_like(h), np.zeros_like(h)])
        return TestCase(f"lake1d-{bathymetry}", 1, (0.0, 25.0), bed, initial,
                        {"left": Bc1D.reflective(), "right": Bc1D.reflective()}, g=g, cfl=0.9,
                        output_times=(1.0,), resolution=resolution or (200,),
                        params=dict(H0=H0))
    if bathymetry in ("gauss", "flat2d"):
        H0 = 1.0 if H0 is None else H0
        bed = _mms_bed if bathymetry == "gauss" else (lambda x, y: np.zeros(np.broadcast(x, y).shape))

        def initial(x, y):
            h = np.maximum(H0 - bed(x, y), 0.0)
            return np.stack([h, np.zeros_like(h), np.zeros_like(h)])
        return TestCase(f"lake2d-{bathymetry}", 2, ((0.0, 1.0), (0.0, 1.0)), bed, initial,
                        {tag: Bc2D.wall() for tag in ("left", "right", "bottom", "top")}, g=g,
                        cfl=0.45, output_times=(1.0,), resolution=resolution or (20, 20),
                        params=dict(H0=H0))
    raise ValueError(f"unknown lake-at-rest bathymetry {bathymetry!r}")


def write_reference_csv(path, coord, h, u, v=None, coord_name="x"):
    """Write a reference profile as CSV (coordinate, h, u[, v])."""
    columns = {coord_name: coord, "h": h, "u": u}
    if v is not None:
        columns["v"] = v
    write_csv(path, columns)
