"""Interface numerical fluxes: the advection-pressure split flux and Godunov."""
from __future__ import annotations

import enum

import numpy as np

from ..core import G_DEFAULT, H_DRY, Primitive1D, flux_1d
from .exact_swe import godunov_state
from .pressure import SolverTolerances, exact_pressure, two_rarefaction


class FluxMode(str, enum.Enum):
    FVS_2R = "fvs-2r"
    FVS_EXACT = "fvs-exact"
    GODUNOV_EXACT = "godunov-exact"

    @classmethod
    def parse(cls, value) -> "FluxMode":
        if isinstance(value, cls):
            return value
        aliases = {"tworarefaction": cls.FVS_2R, "2r": cls.FVS_2R,
                   "exactnewton": cls.FVS_EXACT, "exact": cls.FVS_EXACT,
                   "godunov": cls.GODUNOV_EXACT}
        key = str(value).lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


def pressure_star(hL, qL, hR, qR, g=G_DEFAULT, mode=FluxMode.FVS_2R,
                  tol: SolverTolerances = SolverTolerances()):
    if FluxMode.parse(mode) is FluxMode.FVS_EXACT:
        return exact_pressure(hL, qL, hR, qR, g, tol)
    return two_rarefaction(hL, qL, hR, qR, g)


def fvs_flux(hL, uL, psiL, hR, uR, psiR, g=G_DEFAULT, mode=FluxMode.FVS_2R,
             tol: SolverTolerances = SolverTolerances()):
    """Split numerical flux for arrays of interface states.

    The pressure part is ``(q*, g h*^2 / 2, 0)``; the advection part carries
    ``q*`` times the upwind velocity and scalar, upwinded on the sign of q*.
    Returns an array of shape ``(3, ...)``.
    """
    hL = np.asarray(hL, dtype=float)
    hR = np.asarray(hR, dtype=float)
    h_star, q_star, _ = pressure_star(hL, hL * uL, hR, hR * uR, g, mode, tol)
    up = q_star >= 0.0
    u_up = np.where(up, uL, uR)
    psi_up = np.where(up, psiL, psiR)
    return np.stack([
        q_star,
        q_star * u_up + 0.5 * g * h_star * h_star,
        q_star * psi_up,
    ])


def godunov_flux(hL, uL, psiL, hR, uR, psiR, g=G_DEFAULT,
                 tol: SolverTolerances = SolverTolerances()):
    """Physical flux of the exact full-SWE solution sampled on the interface."""
    h, u, psi = godunov_state(hL, uL, psiL, hR, uR, psiR, g, tol)
    return flux_1d(np.stack([h, h * u, h * psi]), g, H_DRY)


def numerical_flux(hL, uL, psiL, hR, uR, psiR, g=G_DEFAULT, mode=FluxMode.FVS_2R,
                   tol: SolverTolerances = SolverTolerances()):
    mode = FluxMode.parse(mode)
    if mode is FluxMode.GODUNOV_EXACT:
        return godunov_flux(hL, uL, psiL, hR, uR, psiR, g, tol)
    return fvs_flux(hL, uL, psiL, hR, uR, psiR, g, mode, tol)


def fvs_interface_flux(left: Primitive1D, right: Primitive1D, g=G_DEFAULT,
                       mode=FluxMode.FVS_2R) -> np.ndarray:
    """Split flux for a single interface; returns a length-3 array."""
    left, right = Primitive1D(*left), Primitive1D(*right)
    if left.h < 0 or right.h < 0:
        raise ValueError("negative depth in Riemann data")
    return fvs_flux(left.h, left.u, left.psi, right.h, right.u, right.psi, g, mode)
