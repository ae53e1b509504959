"""Exact Riemann solver for the full shallow water equations plus a passive scalar.

Standard depth-function formulation: the star depth solves

    f_L(h) + f_R(h) + u_R - u_L = 0,

with rarefaction branches ``2 (sqrt(g h) - sqrt(g h_K))`` and shock branches
``(h - h_K) sqrt(g (h + h_K) / (2 h h_K))``. Dry beds on either side and
vacuum generated between two rarefactions are handled explicitly.

Everything is vectorised: pass arrays of left/right states and get arrays back.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import G_DEFAULT, H_DRY, Primitive1D
from .pressure import RiemannSolverError, SolverTolerances, Wave

H_FLOOR = 1e-12


def _depth_branch(h, hK, cK, g):
    shock = h > hK
    hs = np.where(shock, h, 1.0)
    hKs = np.where(shock, hK, 1.0)
    gk = np.sqrt(0.5 * g * (hs + hKs) / (hs * hKs))
    f_shock = (h - hK) * gk
    df_shock = gk * (1.0 - (h - hK) * hKs / (2.0 * hs * (hs + hKs)))
    c = np.sqrt(g * h)
    f_rare = 2.0 * (c - cK)
    df_rare = np.where(h > 0, g / np.where(c > 0, c, 1.0), np.inf)
    return np.where(shock, f_shock, f_rare), np.where(shock, df_shock, df_rare)


def depth_function(h, hL, uL, hR, uR, g=G_DEFAULT):
    cL, cR = np.sqrt(g * np.asarray(hL)), np.sqrt(g * np.asarray(hR))
    fl, _ = _depth_branch(np.asarray(h, dtype=float), hL, cL, g)
    fr, _ = _depth_branch(np.asarray(h, dtype=float), hR, cR, g)
    return fl + fr + uR - uL


@dataclass
class ExactSolution:
    """Star region of the full SWE Riemann problem (arrays, one per interface)."""

    hL: np.ndarray
    uL: np.ndarray
    psiL: np.ndarray
    hR: np.ndarray
    uR: np.ndarray
    psiR: np.ndarray
    h_star: np.ndarray
    u_star: np.ndarray
    left_dry: np.ndarray
    right_dry: np.ndarray
    vacuum: np.ndarray
    g: float = G_DEFAULT

    def wave_types(self, i=None):
        hs = self.h_star if i is None else self.h_star[i]
        hl = self.hL if i is None else self.hL[i]
        hr = self.hR if i is None else self.hR[i]
        wl = np.where(hs > hl, Wave.SHOCK, Wave.RAREFACTION)
        wr = np.where(hs > hr, Wave.SHOCK, Wave.RAREFACTION)
        return wl, wr

    def sample(self, xi):
        """Self-similar solution at ``xi = x / t``; returns ``(h, u, psi)``.

        ``xi`` broadcasts against the stored interfaces, so one interface can
        be sampled at many points or many interfaces at ``xi = 0``.
        """
        g = self.g
        xi = np.asarray(xi, dtype=float)
        hL, uL, hR, uR = self.hL, self.uL, self.hR, self.uR
        hs, us = self.h_star, self.u_star
        hL, uL, hR, uR, hs, us, xi = np.broadcast_arrays(hL, uL, hR, uR, hs, us, xi)
        psiL, psiR = np.broadcast_arrays(self.psiL, self.psiR, xi)[:2]
        left_dry, right_dry, vacuum = np.broadcast_arrays(self.left_dry, self.right_dry,
                                                          self.vacuum, xi)[:3]
        cL = np.sqrt(g * hL)
        cR = np.sqrt(g * hR)
        cs = np.sqrt(g * hs)

        h = np.empty(xi.shape)
        u = np.empty(xi.shape)

        # wet/wet, left of contact
        left = xi <= us
        lshock = hs > hL
        hLs = np.where(hL > 0, hL, 1.0)
        SL = uL - cL * np.sqrt(0.5 * (hs + hL) * hs / (hLs * hLs))
        head_l = uL - cL
        tail_l = us - cs
        fan_u_l = (uL + 2.0 * cL + 2.0 * xi) / 3.0
        fan_c_l = (uL + 2.0 * cL - xi) / 3.0
        hl_side = np.where(lshock, np.where(xi < SL, hL, hs),
                           np.where(xi <= head_l, hL, np.where(xi >= tail_l, hs, fan_c_l ** 2 / g)))
        ul_side = np.where(lshock, np.where(xi < SL, uL, us),
                           np.where(xi <= head_l, uL, np.where(xi >= tail_l, us, fan_u_l)))
        # wet/wet, right of contact
        rshock = hs > hR
        hRs = np.where(hR > 0, hR, 1.0)
        SR = uR + cR * np.sqrt(0.5 * (hs + hR) * hs / (hRs * hRs))
        head_r = uR + cR
        tail_r = us + cs
        fan_u_r = (uR - 2.0 * cR + 2.0 * xi) / 3.0
        fan_c_r = (-uR + 2.0 * cR + xi) / 3.0
        hr_side = np.where(rshock, np.where(xi > SR, hR, hs),
                           np.where(xi >= head_r, hR, np.where(xi <= tail_r, hs, fan_c_r ** 2 / g)))
        ur_side = np.where(rshock, np.where(xi > SR, uR, us),
                           np.where(xi >= head_r, uR, np.where(xi <= tail_r, us, fan_u_r)))
        h[...] = np.where(left, hl_side, hr_side)
        u[...] = np.where(left, ul_side, ur_side)

        # dry bed on the left: right rarefaction into dry region
        front_l = uR - 2.0 * cR
        hd = np.where(xi >= head_r, hR, np.where(xi <= front_l, 0.0, fan_c_r ** 2 / g))
        ud = np.where(xi >= head_r, uR, np.where(xi <= front_l, 0.0, fan_u_r))
        h = np.where(left_dry, hd, h)
        u = np.where(left_dry, ud, u)
        # dry bed on the right
        front_r = uL + 2.0 * cL
        hd = np.where(xi <= head_l, hL, np.where(xi >= front_r, 0.0, fan_c_l ** 2 / g))
        ud = np.where(xi <= head_l, uL, np.where(xi >= front_r, 0.0, fan_u_l))
        h = np.where(right_dry, hd, h)
        u = np.where(right_dry, ud, u)
        # vacuum generated in the middle
        hv = np.where(xi <= head_l, hL,
                      np.where(xi < front_r, fan_c_l ** 2 / g,
                               np.where(xi <= front_l, 0.0,
                                        np.where(xi < head_r, fan_c_r ** 2 / g, hR))))
        uv = np.where(xi <= head_l, uL,
                      np.where(xi < front_r, fan_u_l,
                               np.where(xi <= front_l, 0.0,
                                        np.where(xi < head_r, fan_u_r, uR))))
        h = np.where(vacuum, hv, h)
        u = np.where(vacuum, uv, u)

        # scalar follows the contact; in dry-bed cases the only wet side decides
        contact = np.where(left_dry, front_l, np.where(right_dry, front_r, us))
        contact = np.where(vacuum, 0.5 * (front_r + front_l), contact)
        psi = np.where(xi <= contact, psiL, psiR)
        psi = np.where(left_dry, psiR, np.where(right_dry, psiL, psi))
        both_dry = left_dry & right_dry
        h = np.where(both_dry, 0.0, h)
        u = np.where(both_dry | (h <= 0), 0.0, u)
        return h, u, psi


def exact_swe_solve(hL, uL, hR, uR, psiL=0.0, psiR=0.0, g=G_DEFAULT,
                    tol: SolverTolerances = SolverTolerances(), h_dry=H_DRY) -> ExactSolution:
    """Solve the full-SWE Riemann problem for arrays of interface data."""
    hL, uL, hR, uR, psiL, psiR = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (hL, uL, hR, uR, psiL, psiR)))
    if np.any(hL < 0) or np.any(hR < 0):
        raise ValueError("negative depth in Riemann data")
    left_dry = hL <= h_dry
    right_dry = hR <= h_dry
    hL = np.where(left_dry, 0.0, hL)
    hR = np.where(right_dry, 0.0, hR)
    uL = np.where(left_dry, 0.0, uL)
    uR = np.where(right_dry, 0.0, uR)
    cL = np.sqrt(g * hL)
    cR = np.sqrt(g * hR)
    vacuum = ~left_dry & ~right_dry & (2.0 * (cL + cR) <= uR - uL)
    wet = ~left_dry & ~right_dry & ~vacuum

    # two-rarefaction guess
    h = np.maximum((0.5 * (cL + cR) - 0.25 * (uR - uL)) ** 2 / g, H_FLOOR)
    h = np.where(wet, h, 1.0)
    done = ~wet
    it = 0
    while not np.all(done):
        if it >= tol.max_iter:
            raise RiemannSolverError(
                f"exact SWE solver did not converge in {tol.max_iter} iterations",
                last=h, iterations=it)
        it += 1
        fl, dfl = _depth_branch(h, np.where(wet, hL, 1.0), np.where(wet, cL, 1.0), g)
        fr, dfr = _depth_branch(h, np.where(wet, hR, 1.0), np.where(wet, cR, 1.0), g)
        f = fl + fr + uR - uL
        h_new = np.maximum(h - f / (dfl + dfr), H_FLOOR)
        change = np.abs(h_new - h) / (0.5 * (h + h_new))
        h = np.where(done, h, h_new)
        done = done | (change <= tol.tol)

    fl, _ = _depth_branch(h, np.where(wet, hL, 1.0), np.where(wet, cL, 1.0), g)
    fr, _ = _depth_branch(h, np.where(wet, hR, 1.0), np.where(wet, cR, 1.0), g)
    u = 0.5 * (uL + uR) + 0.5 * (fr - fl)
    h = np.where(wet, h, 0.0)
    u = np.where(wet, u, 0.0)
    return ExactSolution(hL, uL, psiL, hR, uR, psiR, h, u, left_dry, right_dry, vacuum, g)


def exact_swe_solver(left: Primitive1D, right: Primitive1D, g=G_DEFAULT,
                     tol: SolverTolerances = SolverTolerances()) -> ExactSolution:
    """Single-interface convenience wrapper around :func:`exact_swe_solve`."""
    left, right = Primitive1D(*left), Primitive1D(*right)
    return exact_swe_solve(left.h, left.u, right.h, right.u, left.psi, right.psi, g, tol)


def godunov_state(hL, uL, psiL, hR, uR, psiR, g=G_DEFAULT,
                  tol: SolverTolerances = SolverTolerances()):
    """Exact solution on the interface (xi = 0) for each pair of states."""
    sol = exact_swe_solve(hL, uL, hR, uR, psiL, psiR, g, tol)
    return sol.sample(0.0)


def wave_speeds(sol: ExactSolution, i: int = 0) -> dict:
    """Head/tail/shock speeds of the two outer waves for interface ``i``."""
    g = sol.g
    hL, uL, hR, uR = (float(np.ravel(a)[i]) for a in (sol.hL, sol.uL, sol.hR, sol.uR))
    hs, us = float(np.ravel(sol.h_star)[i]), float(np.ravel(sol.u_star)[i])
    cL, cR, cs = math.sqrt(g * hL), math.sqrt(g * hR), math.sqrt(g * hs)
    out = {"u_star": us, "h_star": hs}
    if bool(np.ravel(sol.left_dry)[i]) or bool(np.ravel(sol.right_dry)[i]) or bool(np.ravel(sol.vacuum)[i]):
        out["dry"] = True
        out["left_head"] = uL - cL
        out["left_front"] = uL + 2 * cL
        out["right_front"] = uR - 2 * cR
        out["right_head"] = uR + cR
        return out
    if hs > hL:
        out["left"] = ("shock", uL - cL * math.sqrt(0.5 * (hs + hL) * hs / hL ** 2))
    else:
        out["left"] = ("rarefaction", uL - cL, us - cs)
    if hs > hR:
        out["right"] = ("shock", uR + cR * math.sqrt(0.5 * (hs + hR) * hs / hR ** 2))
    else:
        out["right"] = ("rarefaction", us + cs, uR + cR)
    return out
