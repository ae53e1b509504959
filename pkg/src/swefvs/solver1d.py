"""1D finite-volume driver for the augmented shallow water system.

Conserved variables are stored as an array ``U`` of shape ``(3, M)`` holding
``(h, hu, h psi)`` per cell. Updates follow

    U_i^{n+1} = U_i^n - dt/dx (F_{i+1/2} - F_{i-1/2}) + dt S_i

where the interface flux comes from :mod:`swefvs.riemann` and ``S_i`` is the
bed source discretised by hydrostatic reconstruction, so lake-at-rest states
are preserved to round-off. Order 2 adds a limited linear reconstruction and a
half-step (MUSCL-Hancock) predictor before the same flux/source evaluation.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .core import G_DEFAULT, H_DRY, flux_1d, velocity
from .riemann import FluxMode, numerical_flux

log = logging.getLogger(__name__)

NGHOST = 2
NEG_DEPTH_TOL = 1e-12


class NegativeDepthError(RuntimeError):
    def __init__(self, cell, time, depth):
        super().__init__(f"negative depth {depth:.3e} in cell {cell} at t={time:.6g}")
        self.cell = cell
        self.time = time
        self.depth = depth


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    M: int

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("Grid1D needs at least 2 cells")
        if not self.x_max > self.x_min:
            raise ValueError("Grid1D needs x_max > x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.M

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.M) + 0.5) * self.dx

    @property
    def interfaces(self) -> np.ndarray:
        return self.x_min + np.arange(self.M + 1) * self.dx

    def ghost_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(-NGHOST, self.M + NGHOST) + 0.5) * self.dx


@dataclass(frozen=True)
class Bathymetry1D:
    """Bed elevation at cell centres and interfaces; ``func`` if analytic."""

    centers: np.ndarray
    interfaces: np.ndarray
    func: Optional[Callable] = None

    @classmethod
    def from_function(cls, grid: Grid1D, func) -> "Bathymetry1D":
        return cls(np.asarray(func(grid.centers), dtype=float),
                   np.asarray(func(grid.interfaces), dtype=float), func)

    @classmethod
    def flat(cls, grid: Grid1D) -> "Bathymetry1D":
        return cls(np.zeros(grid.M), np.zeros(grid.M + 1), lambda x: np.zeros_like(np.asarray(x, float)))


class BcKind(str, enum.Enum):
    TRANSMISSIVE = "transmissive"
    REFLECTIVE = "reflective"
    INFLOW = "inflow"
    OUTFLOW = "outflow"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class Bc1D:
    """Boundary condition for one end of the domain.

    ``value`` is the fixed discharge for ``INFLOW``, the fixed depth for
    ``OUTFLOW`` and a callable ``f(x, t) -> (3, len(x))`` of conserved ghost
    values for ``DIRICHLET``.

    An outflow normally extrapolates the discharge into the ghost cells. When
    ``far_discharge`` is given the ghost discharge is held at that value
    instead; the ghost then acts as a far-field state and outgoing waves are
    not reflected back into the domain.
    """

    kind: BcKind = BcKind.TRANSMISSIVE
    value: object = None
    far_discharge: Optional[float] = None

    def __post_init__(self):
        kind = BcKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is BcKind.INFLOW and not np.isfinite(self.value):
            raise ValueError("inflow discharge must be finite")
        if kind is BcKind.OUTFLOW and not (np.isfinite(self.value) and self.value > 0):
            raise ValueError("outflow depth must be finite and positive")
        if self.far_discharge is not None and not np.isfinite(self.far_discharge):
            raise ValueError("far-field discharge must be finite")
        if kind is BcKind.DIRICHLET and not callable(self.value):
            raise ValueError("dirichlet boundary needs a callable")

    @classmethod
    def transmissive(cls):
        return cls(BcKind.TRANSMISSIVE)

    @classmethod
    def reflective(cls):
        return cls(BcKind.REFLECTIVE)

    @classmethod
    def inflow(cls, q):
        return cls(BcKind.INFLOW, float(q))

    @classmethod
    def outflow(cls, h, far_discharge=None):
        return cls(BcKind.OUTFLOW, float(h),
                   None if far_discharge is None else float(far_discharge))

    @classmethod
    def dirichlet(cls, func):
        return cls(BcKind.DIRICHLET, func)


@dataclass
class RunState1D:
    grid: Grid1D
    U: np.ndarray
    bathymetry: Bathymetry1D
    left_bc: Bc1D = field(default_factory=Bc1D.transmissive)
    right_bc: Bc1D = field(default_factory=Bc1D.transmissive)
    t: float = 0.0
    steps: int = 0
    forcing: Optional[Callable] = None

    def __post_init__(self):
        self.U = np.array(self.U, dtype=float)
        if self.U.shape != (3, self.grid.M):
            raise ValueError(f"U must have shape (3, {self.grid.M}), got {self.U.shape}")

    @property
    def h(self):
        return self.U[0]

    @property
    def free_surface(self):
        return self.U[0] + self.bathymetry.centers

    def primitive(self):
        h = self.U[0]
        return h, velocity(h, self.U[1]), velocity(h, self.U[2])


def _ghosts(inner, bc: Bc1D, x, t, side):
    """Two ghost cells for one side. ``inner`` holds the two nearest interior
    cells ordered from the boundary inwards; returns ghosts in the same order."""
    g = inner.copy()
    if bc.kind is BcKind.REFLECTIVE:
        g[1] = -g[1]
    elif bc.kind is BcKind.INFLOW:
        g = np.repeat(inner[:, :1], 2, axis=1)
        psi = velocity(g[0], g[2])
        g[1] = bc.value
        g[2] = g[0] * psi
    elif bc.kind is BcKind.OUTFLOW:
        g = np.repeat(inner[:, :1], 2, axis=1)
        psi = velocity(g[0], g[2])
        g[0] = bc.value
        g[2] = bc.value * psi
        if bc.far_discharge is not None:
            g[1] = bc.far_discharge
    elif bc.kind is BcKind.DIRICHLET:
        g = np.asarray(bc.value(x, t), dtype=float).reshape(3, 2)
    return g


def apply_bc(state: RunState1D, left: Optional[Bc1D] = None, right: Optional[Bc1D] = None,
             t: Optional[float] = None, U=None):
    """Return ``U`` extended by two ghost cells on each side, shape ``(3, M+4)``.

    Transmissive copies (mirrors) the interior, reflective also negates the
    momentum, inflow fixes ``hu`` and extrapolates ``h``, outflow fixes ``h``
    and extrapolates ``hu``; Dirichlet evaluates the given callable.
    """
    left = state.left_bc if left is None else left
    right = state.right_bc if right is None else right
    t = state.t if t is None else t
    U = state.U if U is None else U
    xg = state.grid.ghost_centers()
    Ue = np.empty((3, U.shape[1] + 2 * NGHOST))
    Ue[:, NGHOST:-NGHOST] = U
    gl = _ghosts(U[:, :2], left, xg[[1, 0]], t, "left")
    gr = _ghosts(U[:, [-1, -2]], right, xg[[-2, -1]], t, "right")
    Ue[:, 1] = gl[:, 0]
    Ue[:, 0] = gl[:, 1]
    Ue[:, -2] = gr[:, 0]
    Ue[:, -1] = gr[:, 1]
    return Ue


def _extended_bed(state: RunState1D):
    b = state.bathymetry
    xg = state.grid.ghost_centers()
    be = np.empty(state.grid.M + 2 * NGHOST)
    be[NGHOST:-NGHOST] = b.centers
    dirichlet = BcKind.DIRICHLET in (state.left_bc.kind, state.right_bc.kind)
    if b.func is not None and dirichlet:
        be[:NGHOST] = b.func(xg[:NGHOST])
        be[-NGHOST:] = b.func(xg[-NGHOST:])
    else:
        be[:NGHOST] = b.centers[[1, 0]]
        be[-NGHOST:] = b.centers[[-1, -2]]
    return be


def minmod(a, b):
    return np.where(a * b > 0, np.where(np.abs(a) < np.abs(b), a, b), 0.0)


def _centered_bed_term(hL, hR, bL, bR, g):
    """Integral of -g h b_x over a cell from its face values (times dx).

    Written as g*[(bR^2 - bL^2)/2 - Hbar (bR - bL)] which equals
    -g (hL + hR)/2 (bR - bL) when the face surfaces agree.
    """
    Hbar = 0.5 * (hL + bL + hR + bR)
    return g * (0.5 * (bR * bR - bL * bL) - Hbar * (bR - bL))


@dataclass
class _Faces:
    """Left/right face values of cells 1..M+2 of the extended array."""

    UL: np.ndarray
    UR: np.ndarray
    bL: np.ndarray
    bR: np.ndarray


def _faces_first_order(Ue, be):
    inner = slice(1, -1)
    return _Faces(Ue[:, inner], Ue[:, inner], be[inner], be[inner])


def _faces_second_order(Ue, be, limiter):
    def slope(a):
        return limiter(a[1:-1] - a[:-2], a[2:] - a[1:-1])

    h = Ue[0, 1:-1]
    sb = slope(be)
    sh = np.clip(slope(Ue[0] + be) - sb, -2.0 * h, 2.0 * h)
    u = velocity(Ue[0], Ue[1])
    psi = velocity(Ue[0], Ue[2])
    su, spsi = slope(u), slope(psi)
    uc, psic = u[1:-1], psi[1:-1]
    Uc = Ue[:, 1:-1]
    bc = be[1:-1]

    def face(sign):
        # (h + dh)(u + du) expanded around the stored conserved value so that
        # zero slopes give back the cell average exactly
        dh = sign * 0.5 * sh
        du = sign * 0.5 * su
        dpsi = sign * 0.5 * spsi
        return np.stack([
            h + dh,
            Uc[1] + dh * uc + h * du + dh * du,
            Uc[2] + dh * psic + h * dpsi + dh * dpsi,
        ])

    return _Faces(face(-1.0), face(1.0), bc - 0.5 * sb, bc + 0.5 * sb)


def _fix_faces(U):
    h = U[0]
    neg = h < 0
    if np.any(neg):
        U[0] = np.where(neg, 0.0, h)
        U[1] = np.where(neg, 0.0, U[1])
        U[2] = np.where(neg, 0.0, U[2])
    return U


def _predict(faces: _Faces, dx, dt, g, xc, t, forcing):
    """MUSCL-Hancock half step of the face values, physical flux plus sources."""
    dU = (0.5 * dt / dx) * (flux_1d(faces.UL, g) - flux_1d(faces.UR, g))
    dU[1] += (0.5 * dt / dx) * _centered_bed_term(faces.UL[0], faces.UR[0], faces.bL, faces.bR, g)
    if forcing is not None:
        dU += 0.5 * dt * np.asarray(forcing(xc, t), dtype=float)
    return _Faces(_fix_faces(faces.UL + dU), _fix_faces(faces.UR + dU), faces.bL, faces.bR)


def _interface_terms(faces: _Faces, g, mode, h_dry=H_DRY):
    """Numerical flux and one-sided hydrostatic pressure corrections.

    Interface k sits between extended cells k+1 and k+2 (k = 0..M).
    """
    UL, UR = faces.UR[:, :-1], faces.UL[:, 1:]
    bl, br = faces.bR[:-1], faces.bL[1:]
    bstar = np.maximum(bl, br)
    hl, hr = UL[0], UR[0]
    hls = np.maximum(0.0, hl + bl - bstar)
    hrs = np.maximum(0.0, hr + br - bstar)
    ul, psil = velocity(hl, UL[1], h_dry), velocity(hl, UL[2], h_dry)
    ur, psir = velocity(hr, UR[1], h_dry), velocity(hr, UR[2], h_dry)
    F = numerical_flux(hls, ul, psil, hrs, ur, psir, g, mode)
    Pl = 0.5 * g * (hl * hl - hls * hls)
    Pr = 0.5 * g * (hr * hr - hrs * hrs)
    return F, Pl, Pr


def _source_from_faces(faces: _Faces, Pl, Pr, dx, g):
    """Per-cell bed source (momentum) for interior cells."""
    inner = slice(1, -1)
    Sc = _centered_bed_term(faces.UL[0, inner], faces.UR[0, inner],
                            faces.bL[inner], faces.bR[inner], g)
    return (Sc - (Pl[1:] - Pr[:-1])) / dx


def bed_source(state: RunState1D, bathymetry: Optional[Bathymetry1D] = None, order: int = 1,
               g: float = G_DEFAULT, limiter=minmod):
    """Per-cell source ``S`` (shape ``(3, M)``) of the well-balanced bed treatment.

    It holds the one-sided hydrostatic pressure corrections of both cell
    interfaces plus, at order 2, the centred term from the face values.
    """
    if bathymetry is not None:
        state = replace(state, bathymetry=bathymetry)
    Ue = apply_bc(state)
    be = _extended_bed(state)
    faces = _faces_first_order(Ue, be) if order == 1 else _faces_second_order(Ue, be, limiter)
    _, Pl, Pr = _interface_terms(faces, g, FluxMode.FVS_2R)
    S = np.zeros_like(state.U)
    S[1] = _source_from_faces(faces, Pl, Pr, state.grid.dx, g)
    return S


def compute_dt(state: RunState1D, g: float = G_DEFAULT, cfl: float = 0.9,
               t_stop: Optional[float] = None, h_dry: float = H_DRY) -> float:
    """CFL time step cfl*dx/max(|u|+c), shortened to land on ``t_stop``."""
    h = state.U[0]
    wet = h > h_dry
    if not np.any(wet):
        raise ValueError("all cells are dry; no time step can be computed")
    u = velocity(h, state.U[1], h_dry)
    smax = np.max(np.abs(u[wet]) + np.sqrt(g * h[wet]))
    dt = cfl * state.grid.dx / smax
    if t_stop is not None and state.t + dt > t_stop:
        dt = max(t_stop - state.t, 0.0)
    return dt


def _finalize(U, t, h_dry=H_DRY):
    h = U[0]
    bad = h < -NEG_DEPTH_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NegativeDepthError(i, t, float(h[i]))
    neg = h < 0
    if np.any(neg):
        U[0] = np.where(neg, 0.0, h)
        U[2] = np.where(neg, 0.0, U[2])
    U[1] = np.where(U[0] <= h_dry, 0.0, U[1])
    return U


def _step(state: RunState1D, mode, g, dt, order, limiter=minmod):
    mode = FluxMode.parse(mode)
    dx = state.grid.dx
    Ue = apply_bc(state)
    be = _extended_bed(state)
    if order == 1:
        faces = _faces_first_order(Ue, be)
        t_src = state.t
    elif order == 2:
        faces = _faces_second_order(Ue, be, limiter)
        xc = state.grid.ghost_centers()[1:-1]
        faces = _predict(faces, dx, dt, g, xc, state.t, state.forcing)
        t_src = state.t + 0.5 * dt
    else:
        raise ValueError(f"unsupported order {order}")
    F, Pl, Pr = _interface_terms(faces, g, mode)
    U = state.U - (dt / dx) * (F[:, 1:] - F[:, :-1])
    U[1] += dt * _source_from_faces(faces, Pl, Pr, dx, g)
    if state.forcing is not None:
        U += dt * np.asarray(state.forcing(state.grid.centers, t_src), dtype=float)
    U = _finalize(U, state.t + dt)
    return replace(state, U=U, t=state.t + dt, steps=state.steps + 1)


def step_first_order(state: RunState1D, flux_mode=FluxMode.FVS_2R, g: float = G_DEFAULT,
                     dt: float = None) -> RunState1D:
    return _step(state, flux_mode, g, dt, 1)


def step_second_order(state: RunState1D, flux_mode=FluxMode.FVS_2R, g: float = G_DEFAULT,
                      dt: float = None, limiter=minmod) -> RunState1D:
    """One MUSCL-Hancock step: limited linear reconstruction of free surface,
    bed, velocity and scalar, a half-step predictor, then the first-order flux
    and bed source evaluated on the evolved face values."""
    return _step(state, flux_mode, g, dt, 2, limiter)


def step(state, order=1, flux_mode=FluxMode.FVS_2R, g=G_DEFAULT, dt=None, limiter=minmod):
    return _step(state, flux_mode, g, dt, order, limiter)


def evolve(state: RunState1D, t_end: float, *, order=1, flux_mode=FluxMode.FVS_2R,
           g=G_DEFAULT, cfl=0.9, callback=None, max_steps=None) -> RunState1D:
    """Advance to ``t_end``. ``callback(old, new, dt)`` runs after each step;
    returning ``True`` from it stops the run early."""
    while state.t < t_end - 1e-14 * max(1.0, abs(t_end)):
        if max_steps is not None and state.steps >= max_steps:
            break
        dt = compute_dt(state, g, cfl, t_end)
        new = _step(state, flux_mode, g, dt, order)
        stop = callback(state, new, dt) if callback is not None else False
        state = new
        if stop:
            break
    return state
