"""Riemann solvers for the pressure subsystem (h, q).

The pressure subsystem has eigenvalues -c, 0, c, so its wave pattern is
always subcritical and the star state is the interface state. No sampling is
needed: every solver here returns ``(h*, q*)`` directly.

Vectorised entry points (``two_rarefaction``, ``exact_pressure``) work on
arrays of left/right depths and discharges. ``two_rarefaction_star`` and
``exact_pressure_star`` wrap them for single interfaces and add the wave
diagnostics in a :class:`StarState`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import G_DEFAULT, Primitive1D

H_FLOOR = 1e-12


class Wave(enum.Enum):
    RAREFACTION = "rarefaction"
    SHOCK = "shock"


class RiemannSolverError(RuntimeError):
    """Iterative solver failed to converge; ``last`` holds the final iterate."""

    def __init__(self, msg, last=None, iterations=None):
        super().__init__(msg)
        self.last = last
        self.iterations = iterations


@dataclass(frozen=True)
class SolverTolerances:
    tol: float = 1e-9
    max_iter: int = 50

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class StarState:
    h_star: float
    q_star: float
    wave_left: Wave
    wave_right: Wave
    S_L: Optional[float] = None
    S_R: Optional[float] = None
    dry: bool = False
    iterations: int = 0


def _check_depths(*hs):
    for h in hs:
        if np.any(np.asarray(h) < 0):
            raise ValueError("negative depth in Riemann data")


def two_rarefaction(hL, qL, hR, qR, g=G_DEFAULT):
    """Closed-form two-rarefaction star state.

    Returns ``(h_star, q_star, dry)`` arrays. Where the bracketed base of the
    depth formula is not positive the pressure subsystem has no wet solution;
    those entries are clamped to ``h* = q* = 0`` and flagged dry.
    """
    hL = np.asarray(hL, dtype=float)
    hR = np.asarray(hR, dtype=float)
    qL = np.asarray(qL, dtype=float)
    qR = np.asarray(qR, dtype=float)
    sg = math.sqrt(g)
    hL32 = hL * np.sqrt(hL)
    hR32 = hR * np.sqrt(hR)
    q = 0.5 * (qL + qR) + (sg / 3.0) * (hL32 - hR32)
    base = 0.5 * (hL32 + hR32) - (0.75 / sg) * (qR - qL)
    dry = base <= 0.0
    safe = np.where(dry, 0.0, base)
    h = np.cbrt(safe) ** 2
    return np.where(dry, 0.0, h), np.where(dry, 0.0, q), dry


def _branch(h, hK, g):
    """f_K(h) and f_K'(h): rarefaction branch for h <= hK, shock above."""
    sg = math.sqrt(g)
    rare = h <= hK
    s = np.sqrt(0.5 * g * (h + hK))
    f = np.where(rare, (2.0 / 3.0) * sg * (h * np.sqrt(h) - hK * np.sqrt(hK)), s * (h - hK))
    denom = np.sqrt(np.where(rare, 1.0, h + hK))
    df = np.where(rare, np.sqrt(g * h), math.sqrt(g / 8.0) * (3.0 * h + hK) / denom)
    return f, df


def pressure_function(h, hL, qL, hR, qR, g=G_DEFAULT):
    """Residual f(h) = f_L(h) + f_R(h) + q_R - q_L whose root is h*."""
    fl, _ = _branch(np.asarray(h, dtype=float), hL, g)
    fr, _ = _branch(np.asarray(h, dtype=float), hR, g)
    return fl + fr + qR - qL


def _bisect(hL, qL, hR, qR, g, lo, hi, tol, max_iter=200):
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = pressure_function(mid, hL, qL, hR, qR, g)
        pos = fm > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all((hi - lo) <= tol * 0.5 * (hi + lo)):
            break
    return 0.5 * (lo + hi)


def exact_pressure(hL, qL, hR, qR, g=G_DEFAULT, tol: SolverTolerances = SolverTolerances(),
                   return_iterations=False):
    """Exact star state of the pressure subsystem by Newton-Raphson.

    Starts from the two-rarefaction depth and stops on the relative increment
    ``|dh| / mean(h_k, h_k+1) <= tol``. Iterates are kept above ``H_FLOOR``.
    Entries whose residual stalls (no decrease over five iterations) are
    finished by bisection. Returns ``(h_star, q_star, dry)``.
    """
    hL, qL, hR, qR = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (hL, qL, hR, qR)))
    h0, _, dry = two_rarefaction(hL, qL, hR, qR, g)
    h = np.where(dry, 1.0, h0)
    done = dry.copy()
    stall = np.zeros(h.shape, dtype=int)
    res_prev = np.full(h.shape, np.inf)
    it = 0
    while not np.all(done) and it < tol.max_iter:
        it += 1
        fl, dfl = _branch(h, hL, g)
        fr, dfr = _branch(h, hR, g)
        f = fl + fr + qR - qL
        h_new = np.maximum(h - f / (dfl + dfr), H_FLOOR)
        change = np.abs(h_new - h) / (0.5 * (h + h_new))
        res = np.abs(f)
        stall = np.where(~done & (res >= res_prev), stall + 1, stall)
        res_prev = np.where(done, res_prev, res)
        h = np.where(done, h, h_new)
        done = done | (change <= tol.tol) | (stall >= 5)
    stalled = (stall >= 5) & ~dry
    done = done | stalled
    if np.any(stalled):
        hi = 2.0 * np.maximum(np.maximum(hL, hR), h0)
        hi = np.where(stalled, np.maximum(hi, H_FLOOR * 4), 1.0)
        for _ in range(200):
            grow = stalled & (pressure_function(hi, hL, qL, hR, qR, g) < 0)
            if not np.any(grow):
                break
            hi = np.where(grow, 2.0 * hi, hi)
        lo = np.full(h.shape, H_FLOOR)
        hb = _bisect(hL, qL, hR, qR, g, lo, hi, tol.tol * 1e-3)
        h = np.where(stalled, hb, h)
    if not np.all(done):
        raise RiemannSolverError(
            f"pressure Newton solver did not converge in {tol.max_iter} iterations",
            last=np.where(dry, 0.0, h), iterations=it)
    fl, _ = _branch(h, hL, g)
    fr, _ = _branch(h, hR, g)
    q = 0.5 * (qL + qR) + 0.5 * (fr - fl)
    h = np.where(dry, 0.0, h)
    q = np.where(dry, 0.0, q)
    if return_iterations:
        return h, q, dry, it
    return h, q, dry


def shock_speed_left(h_star, hL, g=G_DEFAULT):
    if not h_star > hL:
        raise ValueError("left shock requires h_star > h_L")
    return -math.sqrt(0.5 * g * (h_star + hL))


def shock_speed_right(h_star, hR, g=G_DEFAULT):
    if not h_star > hR:
        raise ValueError("right shock requires h_star > h_R")
    return math.sqrt(0.5 * g * (h_star + hR))


def _star_from(h, q, dry, left: Primitive1D, right: Primitive1D, g, iterations=0) -> StarState:
    h = float(h)
    q = float(q)
    wl = Wave.SHOCK if h > left.h else Wave.RAREFACTION
    wr = Wave.SHOCK if h > right.h else Wave.RAREFACTION
    sl = shock_speed_left(h, left.h, g) if wl is Wave.SHOCK else None
    sr = shock_speed_right(h, right.h, g) if wr is Wave.SHOCK else None
    return StarState(h, q, wl, wr, sl, sr, bool(dry), iterations)


def two_rarefaction_star(left: Primitive1D, right: Primitive1D, g=G_DEFAULT) -> StarState:
    left, right = Primitive1D(*left), Primitive1D(*right)
    _check_depths(left.h, right.h)
    h, q, dry = two_rarefaction(left.h, left.q, right.h, right.q, g)
    return _star_from(h, q, dry, left, right, g)


def exact_pressure_star(left: Primitive1D, right: Primitive1D, g=G_DEFAULT,
                        tol: SolverTolerances = SolverTolerances()) -> StarState:
    left, right = Primitive1D(*left), Primitive1D(*right)
    _check_depths(left.h, right.h)
    h, q, dry, it = exact_pressure(left.h, left.q, right.h, right.q, g, tol, return_iterations=True)
    return _star_from(h, q, dry, left, right, g, iterations=it)
