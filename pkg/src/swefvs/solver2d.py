"""Finite-volume shallow water solver on unstructured triangle meshes.

Cell averages ``U`` have shape ``(3, N)`` with rows ``(h, qx, qy)``. Each step

    U_i^{n+1} = U_i^n - dt/|Omega_i| sum_k l_k F_k + dt S_i

where ``F_k`` is the normal flux through edge ``k`` computed in the edge frame
(rotational invariance) by the 1D solvers of :mod:`swefvs.riemann`; the
tangential velocity travels with the flow exactly like a passive scalar, so the
1D flux routines are reused unchanged. Every interior edge flux is evaluated
once and gathered by both neighbours, which makes the scheme conservative by
construction. The bed source uses hydrostatic reconstruction and is exactly
balanced for lake-at-rest states.

Order 2 adds a least-squares gradient (Barth-Jespersen limited) of the free
surface and velocities, a half-step predictor of the edge-midpoint values and
the same edge flux/source evaluation.
"""
from __future__ import annotations

import enum
import functools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .core import G_DEFAULT, H_DRY, rotate, rotate_back, velocity
from .mesh import TriMesh
from .riemann import FluxMode, numerical_flux
from .solver1d import NEG_DEPTH_TOL, NegativeDepthError

log = logging.getLogger(__name__)

BOUNDARY_TAGS = ("left", "right", "bottom", "top", "other")


class BcKind2D(str, enum.Enum):
    WALL = "wall"
    TRANSMISSIVE = "transmissive"
    DIRICHLET = "dirichlet"
    INFLOW = "inflow"
    OUTFLOW = "outflow"


@dataclass(frozen=True)
class Bc2D:
    """Boundary condition applied to all boundary edges with one tag.

    ``value`` is the inflow discharge per unit width for ``INFLOW``, the depth
    for ``OUTFLOW`` and ``f(x, y, t) -> (3, n)`` conserved states for
    ``DIRICHLET``. ``far_discharge`` turns an outflow into a far-field ghost
    with that outward normal discharge, as in :class:`swefvs.solver1d.Bc1D`.
    """

    kind: BcKind2D = BcKind2D.WALL
    value: object = None
    far_discharge: Optional[float] = None

    def __post_init__(self):
        kind = BcKind2D(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is BcKind2D.DIRICHLET and not callable(self.value):
            raise ValueError("dirichlet boundary needs a callable")
        if kind is BcKind2D.INFLOW and not np.isfinite(self.value):
            raise ValueError("inflow discharge must be finite")
        if kind is BcKind2D.OUTFLOW and not (np.isfinite(self.value) and self.value > 0):
            raise ValueError("outflow depth must be finite and positive")

    @classmethod
    def wall(cls):
        return cls(BcKind2D.WALL)

    @classmethod
    def transmissive(cls):
        return cls(BcKind2D.TRANSMISSIVE)

    @classmethod
    def dirichlet(cls, func):
        return cls(BcKind2D.DIRICHLET, func)

    @classmethod
    def inflow(cls, q):
        return cls(BcKind2D.INFLOW, float(q))

    @classmethod
    def outflow(cls, h, far_discharge=None):
        return cls(BcKind2D.OUTFLOW, float(h),
                   None if far_discharge is None else float(far_discharge))


@dataclass(frozen=True)
class Bathymetry2D:
    """Bed elevation at cell centroids and at edge midpoints (the quadrature
    points of the order-2 scheme)."""

    cells: np.ndarray
    edges: np.ndarray
    func: Optional[Callable] = None

    @classmethod
    def from_function(cls, mesh: TriMesh, func) -> "Bathymetry2D":
        c, m = mesh.centroid, mesh.edge_midpoint
        return cls(np.asarray(func(c[:, 0], c[:, 1]), dtype=float) * np.ones(mesh.ncells),
                   np.asarray(func(m[:, 0], m[:, 1]), dtype=float) * np.ones(mesh.nedges), func)

    @classmethod
    def flat(cls, mesh: TriMesh) -> "Bathymetry2D":
        return cls(np.zeros(mesh.ncells), np.zeros(mesh.nedges),
                   lambda x, y: np.zeros(np.broadcast(x, y).shape))

    @classmethod
    def from_cells(cls, mesh: TriMesh, b_cells) -> "Bathymetry2D":
        """Edge values are the mean of the adjacent cell values."""
        b = np.asarray(b_cells, dtype=float)
        left, right = mesh.edge_cells.T
        edges = np.where(right >= 0, 0.5 * (b[left] + b[np.maximum(right, 0)]), b[left])
        return cls(b, edges)


@dataclass
class RunState2D:
    mesh: TriMesh
    U: np.ndarray
    bathymetry: Bathymetry2D
    bcs: dict = field(default_factory=dict)
    t: float = 0.0
    steps: int = 0
    forcing: Optional[Callable] = None
    threads: int = 1

    def __post_init__(self):
        self.U = np.array(self.U, dtype=float)
        if self.U.shape != (3, self.mesh.ncells):
            raise ValueError(f"U must have shape (3, {self.mesh.ncells}), got {self.U.shape}")
        bcs = {tag: Bc2D.wall() for tag in BOUNDARY_TAGS}
        bcs.update(self.bcs)
        unknown = set(bcs) - set(BOUNDARY_TAGS)
        if unknown:
            raise ValueError(f"unknown boundary tags {sorted(unknown)}")
        self.bcs = bcs

    @property
    def free_surface(self):
        return self.U[0] + self.bathymetry.cells

    def mass(self):
        return float(np.sum(self.U[0] * self.mesh.area))


class _Geometry:
    """Per-mesh constant data for the reconstruction and the scatter.

    Per-cell edge quantities are stored slot-first, shape ``(3, N)``, so sums
    over a cell's three edges are plain additions of contiguous rows.
    """

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        ne = mesh.nedges
        tags = mesh.boundary_tags()
        self.boundary = mesh.boundary_edges
        self.boundary_tags = tags[self.boundary]
        self.boundary_cell = mesh.edge_cells[self.boundary, 0]
        self.boundary_normal = mesh.edge_normal[self.boundary]
        self.boundary_mid = mesh.edge_midpoint[self.boundary]
        pos = np.full(ne, -1, dtype=np.int64)
        pos[self.boundary] = np.arange(len(self.boundary))
        slot_b = pos[mesh.cell_edges].T                       # (3, N), -1 if interior
        self.is_boundary_slot = slot_b >= 0
        self.slot_boundary = np.maximum(slot_b, 0)
        self.neighbors = np.maximum(mesh.neighbors.T, 0)      # (3, N)
        # neighbour points: centroid of the neighbour or centroid mirrored across the edge
        xc = mesh.centroid
        nrm = mesh.normals
        off = mesh.edge_mid - xc[:, None, :]
        dist = np.sum(off * nrm, axis=-1)
        mirrored = xc[:, None, :] + 2.0 * dist[..., None] * nrm
        pts = np.where((mesh.neighbors < 0)[..., None], mirrored, xc[np.maximum(mesh.neighbors, 0)])
        self.ghost_points = mirrored[self.boundary_cell, mesh.edge_local[self.boundary, 0]]
        d = pts - xc[:, None, :]
        self.dx = np.ascontiguousarray(d[..., 0].T)
        self.dy = np.ascontiguousarray(d[..., 1].T)
        a11 = np.sum(d[..., 0] ** 2, axis=1)
        a12 = np.sum(d[..., 0] * d[..., 1], axis=1)
        a22 = np.sum(d[..., 1] ** 2, axis=1)
        det = a11 * a22 - a12 * a12
        self.inv11, self.inv12, self.inv22 = a22 / det, -a12 / det, a11 / det
        self.offx = np.ascontiguousarray(off[..., 0].T)       # centroid -> edge midpoint
        self.offy = np.ascontiguousarray(off[..., 1].T)
        self.nx = np.ascontiguousarray(nrm[..., 0].T)
        self.ny = np.ascontiguousarray(nrm[..., 1].T)
        self.length = np.ascontiguousarray(mesh.edge_length.T)
        self.cell_edges = np.ascontiguousarray(mesh.cell_edges.T)
        # gather table: column of the (left | right) contribution array
        side = (mesh.cell_edge_sign.T < 0).astype(np.int64)
        self.gather = self.cell_edges + ne * side
        self.gather_flat = self.gather.ravel()
        self.left = mesh.edge_cells[:, 0]
        self.right = np.maximum(mesh.edge_cells[:, 1], 0)
        self.left_k = mesh.edge_local[:, 0]
        self.right_k = np.maximum(mesh.edge_local[:, 1], 0)
        n = mesh.ncells
        self.left_slot = self.left_k * n + self.left        # index into a flattened (3, N)
        self.right_slot = self.right_k * n + self.right


@functools.lru_cache(maxsize=16)
def geometry(mesh: TriMesh) -> _Geometry:
    return _Geometry(mesh)


def _chunked(func, n, threads):
    """Run ``func(slice)`` over ``range(n)`` in contiguous chunks; results are
    concatenated in chunk order so output does not depend on ``threads``."""
    if threads <= 1 or n < 2048:
        return func(slice(0, n))
    bounds = np.linspace(0, n, threads + 1).astype(int)
    chunks = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(func, chunks))
    return np.concatenate(parts, axis=-1)


def edge_flux(qi, qj, n, g=G_DEFAULT, mode=FluxMode.FVS_2R, h_dry=H_DRY):
    """Numerical flux from state ``qi`` to ``qj`` across unit normal ``n``,
    returned in the (x, y) frame. States are ``(3, ...)`` arrays of
    ``(h, qx, qy)``; ``n`` is ``(nx, ny)`` with matching shape."""
    ri = rotate(qi, n)
    rj = rotate(qj, n)
    F = _rotated_flux(ri, rj, g, mode, h_dry)
    return rotate_back(F, n)


def _rotated_flux(ri, rj, g, mode, h_dry=H_DRY):
    hi, hj = ri[0], rj[0]
    return numerical_flux(hi, velocity(hi, ri[1], h_dry), velocity(hi, ri[2], h_dry),
                          hj, velocity(hj, rj[1], h_dry), velocity(hj, rj[2], h_dry), g, mode)


def compute_dt_2d(state: RunState2D, mesh: Optional[TriMesh] = None, g=G_DEFAULT, cfl=0.45,
                  t_stop=None, h_dry=H_DRY) -> float:
    """dt = cfl * min_i r_i / (|u_i| + c_i) with r_i = area / perimeter."""
    mesh = state.mesh if mesh is None else mesh
    h = state.U[0]
    wet = h > h_dry
    if not np.any(wet):
        raise ValueError("all cells are dry; no time step can be computed")
    u = velocity(h, state.U[1], h_dry)
    v = velocity(h, state.U[2], h_dry)
    speed = np.hypot(u, v) + np.sqrt(g * np.maximum(h, 0.0))
    dt = cfl * np.min(mesh.length_scale[wet] / speed[wet])
    if t_stop is not None and state.t + dt > t_stop:
        dt = max(t_stop - state.t, 0.0)
    return float(dt)


def _ghost_states(state: RunState2D, geo: _Geometry, Ub, points, t):
    """Ghost (h, qx, qy) for each boundary edge given the interior values ``Ub``."""
    out = Ub.copy()
    nrm = geo.boundary_normal.T
    for tag, bc in state.bcs.items():
        sel = geo.boundary_tags == tag
        if not np.any(sel):
            continue
        n = nrm[:, sel]
        if bc.kind is BcKind2D.TRANSMISSIVE:
            continue
        if bc.kind is BcKind2D.WALL:
            r = rotate(Ub[:, sel], n)
            r[1] = -r[1]
            out[:, sel] = rotate_back(r, n)
        elif bc.kind is BcKind2D.DIRICHLET:
            p = points[sel]
            out[:, sel] = np.asarray(bc.value(p[:, 0], p[:, 1], t), dtype=float).reshape(3, -1)
        elif bc.kind is BcKind2D.INFLOW:
            h = Ub[0, sel]
            out[:, sel] = np.stack([h, -bc.value * n[0], -bc.value * n[1]])
        elif bc.kind is BcKind2D.OUTFLOW:
            r = rotate(Ub[:, sel], n)
            r[0] = bc.value
            if bc.far_discharge is not None:
                r[1] = bc.far_discharge
                r[2] = 0.0
            out[:, sel] = rotate_back(r, n)
    return out


def _dirichlet_mask(state, geo):
    mask = np.zeros(len(geo.boundary), dtype=bool)
    for tag, bc in state.bcs.items():
        if bc.kind is BcKind2D.DIRICHLET:
            mask |= geo.boundary_tags == tag
    return mask


def _max3(a):
    return np.maximum(np.maximum(a[0], a[1]), a[2])


def _min3(a):
    return np.minimum(np.minimum(a[0], a[1]), a[2])


def barth_jespersen(phi, phi_nb, gx, gy, offx, offy):
    """Limiter factor per cell keeping edge-midpoint values within the range
    of the cell and its neighbours. Per-edge arrays are ``(3, N)``."""
    phi_max = np.maximum(phi, _max3(phi_nb))
    phi_min = np.minimum(phi, _min3(phi_nb))
    delta = offx * gx + offy * gy
    bound = np.where(delta > 0, phi_max, phi_min)
    ratio = np.divide(bound - phi, delta, out=np.ones_like(delta), where=delta != 0.0)
    return np.clip(_min3(ratio), 0.0, 1.0)


def _ls_gradient(geo, phi, phi_nb):
    dphi = phi_nb - phi
    rx = geo.dx[0] * dphi[0] + geo.dx[1] * dphi[1] + geo.dx[2] * dphi[2]
    ry = geo.dy[0] * dphi[0] + geo.dy[1] * dphi[1] + geo.dy[2] * dphi[2]
    return geo.inv11 * rx + geo.inv12 * ry, geo.inv12 * rx + geo.inv22 * ry


@dataclass
class _Faces2D:
    """Conserved values and bed at the three edge midpoints of every cell."""

    U: np.ndarray   # (3 components, 3 slots, N)
    b: np.ndarray   # (3 slots, N)
    uniform: bool = False   # every face carries its cell value


def _faces_first_order(state):
    n = state.mesh.ncells
    U = np.broadcast_to(state.U[:, None, :], (3, 3, n))
    b = np.broadcast_to(state.bathymetry.cells, (3, n))
    return _Faces2D(U, b, uniform=True)


def _faces_second_order(state, geo, limiter=True):
    mesh = state.mesh
    U = state.U
    h = U[0]
    b = state.bathymetry.cells
    u = velocity(h, U[1])
    v = velocity(h, U[2])
    H = h + b
    # ghost values for the gradient stencil at mirrored centroids
    ghost = _ghost_states(state, geo, U[:, geo.boundary_cell], geo.ghost_points, state.t)
    dmask = _dirichlet_mask(state, geo)
    bf = state.bathymetry.func
    b_ghost = b[geo.boundary_cell].copy()
    if bf is not None and np.any(dmask):
        p = geo.ghost_points[dmask]
        b_ghost[dmask] = bf(p[:, 0], p[:, 1])
    gh = ghost[0]
    prim_ghost = (gh + b_ghost, velocity(gh, ghost[1]), velocity(gh, ghost[2]))

    deltas = []
    for phi, pg in zip((H, u, v), prim_ghost):
        phi_nb = np.where(geo.is_boundary_slot, pg[geo.slot_boundary], phi[geo.neighbors])
        gx, gy = _ls_gradient(geo, phi, phi_nb)
        if limiter:
            alpha = barth_jespersen(phi, phi_nb, gx, gy, geo.offx, geo.offy)
            gx, gy = gx * alpha, gy * alpha
        deltas.append(geo.offx * gx + geo.offy * gy)
    dH, du, dv = deltas
    b_face = state.bathymetry.edges[geo.cell_edges]
    dh = H + dH - b_face - h
    # positivity fallback: keep the cell depth constant on its faces
    bad = _min3(h + dh) < 0
    if np.any(bad):
        dh[:, bad] = 0.0
    Uf = np.stack([
        h + dh,
        U[1] + dh * u + h * du + dh * du,
        U[2] + dh * v + h * dv + dh * dv,
    ])
    return _Faces2D(Uf, b_face)


def _physical_normal_flux(Uf, nx, ny, g):
    h = Uf[0]
    u = velocity(h, Uf[1])
    v = velocity(h, Uf[2])
    qn = Uf[1] * nx + Uf[2] * ny
    p = 0.5 * g * h * h
    return qn, qn * u + p * nx, qn * v + p * ny


def _centered_bed_term(geo, faces: _Faces2D, g):
    """sum_k l_k n_k g (b_k^2/2 - Hbar b_k) / |Omega|; balances the face
    pressure of a lake at rest and tends to -g h grad(b)."""
    bf = faces.b
    hb = faces.U[0] + bf
    Hbar = (hb[0] + hb[1] + hb[2]) / 3.0
    w = g * (0.5 * bf * bf - Hbar * bf) * geo.length
    area = geo.mesh.area
    wx = w * geo.nx
    wy = w * geo.ny
    out = np.zeros((3, geo.mesh.ncells))
    out[1] = (wx[0] + wx[1] + wx[2]) / area
    out[2] = (wy[0] + wy[1] + wy[2]) / area
    return out


def _fix_faces(Uf):
    neg = Uf[0] < 0
    if np.any(neg):
        Uf[:, neg] = 0.0
    return Uf


def _predict(state, geo, faces: _Faces2D, dt, g):
    F = _physical_normal_flux(faces.U, geo.nx, geo.ny, g)
    area = geo.mesh.area
    dU = 0.5 * dt * _centered_bed_term(geo, faces, g)
    for c in range(3):
        fl = F[c] * geo.length
        dU[c] -= 0.5 * dt * (fl[0] + fl[1] + fl[2]) / area
    if state.forcing is not None:
        xc = geo.mesh.centroid
        dU += 0.5 * dt * np.asarray(state.forcing(xc[:, 0], xc[:, 1], state.t), dtype=float)
    return _Faces2D(_fix_faces(faces.U + dU[:, None, :]), faces.b)


def _edge_terms(state, geo, faces: _Faces2D, g, mode, t_bc):
    """Edge fluxes (x, y frame) and the one-sided hydrostatic corrections."""
    mesh = state.mesh
    ne = mesh.nedges
    if faces.uniform:
        UL = state.U.take(geo.left, axis=1)
        UR = state.U.take(geo.right, axis=1)
        b = state.bathymetry.cells
        bL, bR = b.take(geo.left), b.take(geo.right)
    else:
        n3 = 3 * mesh.ncells
        Uflat = faces.U.reshape(3, n3)
        bflat = faces.b.reshape(n3)
        UL = Uflat.take(geo.left_slot, axis=1)
        UR = Uflat.take(geo.right_slot, axis=1)
        bL, bR = bflat.take(geo.left_slot), bflat.take(geo.right_slot)
    bidx = geo.boundary
    if len(bidx):
        UR[:, bidx] = _ghost_states(state, geo, UL[:, bidx], geo.boundary_mid, t_bc)
        bR[bidx] = bL[bidx]
        dmask = _dirichlet_mask(state, geo)
        if np.any(dmask):
            bR[bidx[dmask]] = state.bathymetry.edges[bidx[dmask]]
    bstar = np.maximum(bL, bR)
    hL, hR = UL[0], UR[0]
    hLs = np.maximum(0.0, hL + bL - bstar)
    hRs = np.maximum(0.0, hR + bR - bstar)
    nx, ny = mesh.edge_normal[:, 0], mesh.edge_normal[:, 1]
    uL, tL = velocity(hL, nx * UL[1] + ny * UL[2]), velocity(hL, nx * UL[2] - ny * UL[1])
    uR, tR = velocity(hR, nx * UR[1] + ny * UR[2]), velocity(hR, nx * UR[2] - ny * UR[1])

    def work(s):
        return numerical_flux(hLs[s], uL[s], tL[s], hRs[s], uR[s], tR[s], g, mode)

    Fr = _chunked(work, ne, state.threads)
    F = np.stack([Fr[0], nx * Fr[1] - ny * Fr[2], ny * Fr[1] + nx * Fr[2]])
    PL = 0.5 * g * (hL * hL - hLs * hLs)
    PR = 0.5 * g * (hR * hR - hRs * hRs)
    return F, PL, PR


def _gather(mesh, geo, F, PL, PR):
    """Per-cell sum of l*(flux + pressure correction) leaving the cell,
    accumulated over the cell's edges in a fixed order."""
    nx, ny = mesh.edge_normal[:, 0], mesh.edge_normal[:, 1]
    l = mesh.edge_len
    C = np.empty((3, 2 * mesh.nedges))
    ne = mesh.nedges
    C[0, :ne] = l * F[0]
    C[1, :ne] = l * (F[1] + PL * nx)
    C[2, :ne] = l * (F[2] + PL * ny)
    C[0, ne:] = -l * F[0]
    C[1, ne:] = -l * (F[1] + PR * nx)
    C[2, ne:] = -l * (F[2] + PR * ny)
    parts = C.take(geo.gather_flat, axis=1).reshape(3, 3, mesh.ncells)
    return parts[:, 0] + parts[:, 1] + parts[:, 2]


def bed_source_2d(state: RunState2D, bathymetry: Optional[Bathymetry2D] = None, order=1,
                  g=G_DEFAULT):
    """Per-cell well-balanced bed source: one-sided hydrostatic corrections of
    all three edges plus, at order 2, the centred term."""
    if bathymetry is not None:
        state = replace(state, bathymetry=bathymetry)
    geo = geometry(state.mesh)
    faces = _faces_first_order(state) if order == 1 else _faces_second_order(state, geo)
    _, PL, PR = _edge_terms(state, geo, faces, g, FluxMode.FVS_2R, state.t)
    out = -_gather(state.mesh, geo, np.zeros((3, state.mesh.nedges)), PL, PR) / state.mesh.area
    if order == 2:
        out += _centered_bed_term(geo, faces, g)
    return out


def _finalize(U, t, h_dry=H_DRY):
    h = U[0]
    bad = h < -NEG_DEPTH_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NegativeDepthError(i, t, float(h[i]))
    neg = h < 0
    if np.any(neg):
        U[:, neg] = 0.0
    dry = U[0] <= h_dry
    U[1:, dry] = 0.0
    return U


def step2d(state: RunState2D, order=1, g=G_DEFAULT, dt=None, flux_mode=FluxMode.FVS_2R,
           limiter=True) -> RunState2D:
    mode = FluxMode.parse(flux_mode)
    mesh = state.mesh
    geo = geometry(mesh)
    if order == 1:
        faces = _faces_first_order(state)
        t_src = state.t
    elif order == 2:
        faces = _predict(state, geo, _faces_second_order(state, geo, limiter), dt, g)
        t_src = state.t + 0.5 * dt
    else:
        raise ValueError(f"unsupported order {order}")
    F, PL, PR = _edge_terms(state, geo, faces, g, mode, t_src)
    U = state.U - (dt / mesh.area) * _gather(mesh, geo, F, PL, PR)
    if order == 2:
        U += dt * _centered_bed_term(geo, faces, g)
    if state.forcing is not None:
        c = mesh.centroid
        U += dt * np.asarray(state.forcing(c[:, 0], c[:, 1], t_src), dtype=float)
    U = _finalize(U, state.t + dt)
    return replace(state, U=U, t=state.t + dt, steps=state.steps + 1)


def evolve2d(state: RunState2D, t_end, *, order=1, flux_mode=FluxMode.FVS_2R, g=G_DEFAULT,
             cfl=0.45, callback=None, max_steps=None) -> RunState2D:
    """Advance to ``t_end``; ``callback(old, new, dt)`` returning True stops early."""
    while state.t < t_end - 1e-14 * max(1.0, abs(t_end)):
        if max_steps is not None and state.steps >= max_steps:
            break
        dt = compute_dt_2d(state, g=g, cfl=cfl, t_stop=t_end)
        new = step2d(state, order, g, dt, flux_mode)
        stop = callback(state, new, dt) if callback is not None else False
        state = new
        if stop:
            break
    return state
