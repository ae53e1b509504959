"""State types, physical fluxes and the advection/pressure flux split.

All flux functions accept either a single state (a NamedTuple or a length-3
sequence) or a stacked array whose leading axis holds the three conserved
components, e.g. ``U.shape == (3, ncells)``. Results keep that layout.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

G_DEFAULT = 9.81
H_DRY = 1e-10


class State1D(NamedTuple):
    """Conserved 1D state: depth, discharge, depth-weighted scalar."""

    h: float
    hu: float
    hpsi: float


class Primitive1D(NamedTuple):
    h: float
    u: float
    psi: float = 0.0

    @property
    def q(self) -> float:
        return self.h * self.u

    def conserved(self) -> State1D:
        return State1D(self.h, self.h * self.u, self.h * self.psi)


class State2D(NamedTuple):
    h: float
    qx: float
    qy: float


class UnitNormal(NamedTuple):
    nx: float
    ny: float

    @classmethod
    def from_angle(cls, theta: float) -> "UnitNormal":
        return cls(math.cos(theta), math.sin(theta))

    @property
    def theta(self) -> float:
        return math.atan2(self.ny, self.nx)


class PhysConstants(NamedTuple):
    g: float = G_DEFAULT

    def check(self) -> "PhysConstants":
        if not self.g > 0:
            raise ValueError(f"gravity must be positive, got {self.g}")
        return self


def celerity(h, g: float = G_DEFAULT):
    """Gravity wave speed sqrt(g*h); raises on negative depth."""
    harr = np.asarray(h, dtype=float)
    if np.any(harr < 0):
        raise ValueError("celerity: negative depth")
    c = np.sqrt(g * harr)
    return float(c) if c.ndim == 0 else c


def velocity(h, q, h_dry: float = H_DRY):
    """q/h with a dry guard: cells shallower than ``h_dry`` get zero velocity."""
    h = np.asarray(h, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.divide(q, h, out=np.zeros(np.broadcast_shapes(h.shape, q.shape)),
                     where=h > h_dry)


def to_primitive_1d(U, h_dry: float = H_DRY):
    """Return (h, u, psi) arrays from conserved (h, hu, hpsi)."""
    U = np.asarray(U, dtype=float)
    h = U[0]
    return h, velocity(h, U[1], h_dry), velocity(h, U[2], h_dry)


def split_flux_1d(q, g: float = G_DEFAULT, h_dry: float = H_DRY):
    """Advection and pressure parts of the augmented 1D flux.

    Returns ``(Fa, Fp)`` with ``Fa = (0, hu^2, hu psi)`` and
    ``Fp = (hu, g h^2 / 2, 0)``.
    """
    U = np.asarray(q, dtype=float)
    h, hu, hpsi = U[0], U[1], U[2]
    u = velocity(h, hu, h_dry)
    psi = velocity(h, hpsi, h_dry)
    hu_eff = np.where(h > h_dry, hu, 0.0)
    zero = np.zeros_like(h)
    fa = np.stack([zero, hu_eff * u, hu_eff * psi])
    fp = np.stack([hu_eff, 0.5 * g * h * h, zero])
    return fa, fp


def flux_1d(q, g: float = G_DEFAULT, h_dry: float = H_DRY):
    """Physical flux (hu, hu^2 + g h^2/2, hu psi) of the augmented system."""
    U = np.asarray(q, dtype=float)
    h, hu, hpsi = U[0], U[1], U[2]
    wet = h > h_dry
    hu_eff = np.where(wet, hu, 0.0)
    return np.stack([
        hu_eff,
        hu_eff * velocity(h, hu, h_dry) + 0.5 * g * h * h,
        hu_eff * velocity(h, hpsi, h_dry),
    ])


def split_flux_2d(q, g: float = G_DEFAULT, h_dry: float = H_DRY):
    """Return ``((Fx_a, Fx_p), (Fy_a, Fy_p))`` for the 2D system."""
    U = np.asarray(q, dtype=float)
    h, qx, qy = U[0], U[1], U[2]
    wet = h > h_dry
    u = velocity(h, qx, h_dry)
    v = velocity(h, qy, h_dry)
    qx = np.where(wet, qx, 0.0)
    qy = np.where(wet, qy, 0.0)
    zero = np.zeros_like(h)
    p = 0.5 * g * h * h
    fxa = np.stack([zero, qx * u, qx * v])
    fxp = np.stack([qx, p, zero])
    fya = np.stack([zero, qy * u, qy * v])
    fyp = np.stack([qy, zero, p])
    return (fxa, fxp), (fya, fyp)


def flux_2d(q, g: float = G_DEFAULT, h_dry: float = H_DRY):
    """Physical fluxes ``(Fx, Fy)`` of the 2D system."""
    U = np.asarray(q, dtype=float)
    h = U[0]
    wet = h > h_dry
    qx = np.where(wet, U[1], 0.0)
    qy = np.where(wet, U[2], 0.0)
    u = velocity(h, U[1], h_dry)
    v = velocity(h, U[2], h_dry)
    p = 0.5 * g * h * h
    fx = np.stack([qx, qx * u + p, qx * v])
    fy = np.stack([qy, qy * u, qy * v + p])
    return fx, fy


def _check_unit(n) -> tuple[np.ndarray, np.ndarray]:
    nx = np.asarray(n[0], dtype=float)
    ny = np.asarray(n[1], dtype=float)
    if np.any(np.abs(nx * nx + ny * ny - 1.0) > 1e-12):
        raise ValueError("rotation requires a unit normal")
    return nx, ny


def rotate(q, n):
    """Apply T(theta): (h, qx, qy) -> (h, q_xi, q_zeta) in the edge frame."""
    U = np.asarray(q, dtype=float)
    nx, ny = _check_unit(n)
    return np.stack([U[0], nx * U[1] + ny * U[2], -ny * U[1] + nx * U[2]])


def rotate_back(q, n):
    """Apply the inverse rotation to a rotated state or flux."""
    U = np.asarray(q, dtype=float)
    nx, ny = _check_unit(n)
    return np.stack([U[0], nx * U[1] - ny * U[2], ny * U[1] + nx * U[2]])


rotate_back_flux = rotate_back


def normal_flux(q, n, g: float = G_DEFAULT, h_dry: float = H_DRY):
    """Projected physical flux nx*Fx + ny*Fy."""
    fx, fy = flux_2d(q, g, h_dry)
    nx, ny = np.asarray(n[0], dtype=float), np.asarray(n[1], dtype=float)
    return nx * fx + ny * fy
