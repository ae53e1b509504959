"""Error norms and convergence-order bookkeeping."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Norms:
    L1: float
    L2: float
    Linf: float

    def as_dict(self):
        return {"L1": self.L1, "L2": self.L2, "Linf": self.Linf}


def norms(numeric, reference, weights=None) -> Norms:
    """Volume-weighted discrete norms of ``numeric - reference``.

    L1 = sum|e| w / sum w, L2 = sqrt(sum e^2 w / sum w), Linf = max|e|.
    """
    a = np.asarray(numeric, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"field shapes differ: {a.shape} vs {b.shape}")
    w = np.ones_like(a) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != a.shape:
        raise ValueError(f"weights shape {w.shape} does not match field shape {a.shape}")
    e = np.abs(a - b)
    wsum = float(np.sum(w))
    return Norms(float(np.sum(e * w) / wsum), float(np.sqrt(np.sum(e * e * w) / wsum)),
                 float(np.max(e)) if e.size else 0.0)


def observed_order(e_coarse, e_fine, dx_coarse, dx_fine) -> float:
    """log(e1 / e2) / log(dx1 / dx2)."""
    if e_fine == 0 and e_coarse == 0:
        return float("nan")
    return math.log(e_coarse / e_fine) / math.log(dx_coarse / dx_fine)


@dataclass
class ErrorReport:
    """Norms per mesh and per variable, plus observed orders between meshes."""

    variable: str
    resolutions: list = field(default_factory=list)
    spacings: list = field(default_factory=list)
    errors: list = field(default_factory=list)   # list of Norms

    def add(self, resolution, spacing, err: Norms):
        self.resolutions.append(resolution)
        self.spacings.append(float(spacing))
        self.errors.append(err)

    def orders(self, norm="L1"):
        vals = [getattr(e, norm) for e in self.errors]
        return [observed_order(vals[i], vals[i + 1], self.spacings[i], self.spacings[i + 1])
                for i in range(len(vals) - 1)]

    def table(self) -> str:
        lines = [f"# variable {self.variable}",
                 "resolution,dx,L1,L2,Linf,order_L1,order_L2,order_Linf"]
        o1, o2, oi = self.orders("L1"), self.orders("L2"), self.orders("Linf")
        for i, (res, dx, e) in enumerate(zip(self.resolutions, self.spacings, self.errors)):
            if i == 0:
                ords = ["", "", ""]
            else:
                ords = [f"{o1[i - 1]:.4f}", f"{o2[i - 1]:.4f}", f"{oi[i - 1]:.4f}"]
            lines.append(f"{res},{dx:.6g},{e.L1:.6e},{e.L2:.6e},{e.Linf:.6e}," + ",".join(ords))
        return "\n".join(lines)
