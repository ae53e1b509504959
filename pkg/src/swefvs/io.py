"""Output writers (CSV, legacy VTK, key=value manifests) and config parsing."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .core import velocity


def fmt(v) -> str:
    return f"{float(v):.17g}"


def write_csv(path, columns: dict):
    """Write equal-length columns with a header row and 17 significant digits."""
    names = list(columns)
    data = [np.asarray(columns[n]).ravel() for n in names]
    n = {len(d) for d in data}
    if len(n) > 1:
        raise ValueError("CSV columns have different lengths")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([fmt(v) for v in row])


def read_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


def write_csv_1d(path, state):
    """Columns x, b, h, u, q, psi, H for a 1D run state."""
    h, u, psi = state.primitive()
    b = state.bathymetry.centers
    write_csv(path, {"x": state.grid.centers, "b": b, "h": h, "u": u, "q": state.U[1],
                     "psi": psi, "H": h + b})


def write_vtk(path, mesh, fields: dict, title="shallow water"):
    """Legacy ASCII VTK 3.0 unstructured grid with per-cell scalar data."""
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.nnodes} double"]
    lines += [f"{fmt(x)} {fmt(y)} 0" for x, y in mesh.nodes]
    n = mesh.ncells
    lines.append(f"CELLS {n} {4 * n}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.tris]
    lines.append(f"CELL_TYPES {n}")
    lines += ["5"] * n
    lines.append(f"CELL_DATA {n}")
    for name, values in fields.items():
        values = np.asarray(values, dtype=float)
        if values.shape != (n,):
            raise ValueError(f"field {name} must have one value per cell")
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [fmt(v) for v in values]
    Path(path).write_text("\n".join(lines) + "\n")


def write_vtk_state(path, state, title="shallow water"):
    U = state.U
    b = state.bathymetry.cells
    write_vtk(path, state.mesh, {"h": U[0], "qx": U[1], "qy": U[2], "H": U[0] + b, "b": b},
              title)


def read_vtk_cell_data(path) -> dict:
    """Read back the scalar cell fields of a file written by :func:`write_vtk`."""
    tokens = Path(path).read_text().split("\n")
    out = {}
    i = 0
    n = None
    while i < len(tokens):
        line = tokens[i].strip()
        if line.startswith("CELL_DATA"):
            n = int(line.split()[1])
        elif line.startswith("SCALARS") and n is not None:
            name = line.split()[1]
            out[name] = np.array([float(v) for v in tokens[i + 2:i + 2 + n]])
            i += 1 + n
        i += 1
    return out


def write_keyvalue(path, items: dict):
    with open(path, "w") as fh:
        for k, v in items.items():
            if isinstance(v, float):
                v = fmt(v)
            elif isinstance(v, (list, tuple)):
                v = ",".join(fmt(x) if isinstance(x, float) else str(x) for x in v)
            fh.write(f"{k}={v}\n")


def read_keyvalue(path) -> dict:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def primitive_2d(state):
    h = state.U[0]
    return h, velocity(h, state.U[1]), velocity(h, state.U[2])
