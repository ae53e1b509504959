"""Unstructured triangular meshes: geometry, connectivity, generation and I/O.

Mesh file format (plain ASCII, whitespace separated, ``#`` starts a comment)::

    NNODES NTRIS
    x y            # NNODES lines
    i0 i1 i2       # NTRIS lines, 0-based node indices

Local edge ``k`` of triangle ``(v0, v1, v2)`` joins ``v_k`` and ``v_(k+1)%3``.
"""
from __future__ import annotations

import logging
import warnings
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

BOUNDARY = -1


class MeshFormatError(ValueError):
    def __init__(self, msg, line=None, path=None):
        where = f"{path}:" if path else ""
        where += f"line {line}: " if line is not None else ""
        super().__init__(where + msg)
        self.line = line


class TriMesh:
    """Triangle mesh with per-cell edge data and a canonical edge list.

    Per-cell arrays (``ncells x 3``): ``neighbors`` (``-1`` on the boundary),
    ``edge_length``, ``normals`` (``ncells x 3 x 2``, outward) and
    ``cell_edges`` (index into the canonical edge list). Canonical edges
    store ``edge_cells[e] = (left, right)`` with the normal pointing from
    ``left`` to ``right``; ``right`` is ``-1`` for boundary edges.
    """

    def __init__(self, nodes, tris):
        self.nodes = np.ascontiguousarray(nodes, dtype=float).reshape(-1, 2)
        self.tris = np.ascontiguousarray(tris, dtype=np.int64).reshape(-1, 3)
        self._build()

    @property
    def ncells(self) -> int:
        return len(self.tris)

    @property
    def nnodes(self) -> int:
        return len(self.nodes)

    def _build(self):
        p = self.nodes[self.tris]                       # (N, 3, 2)
        a, b, c = p[:, 0], p[:, 1], p[:, 2]
        self.area = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                           - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))
        self.centroid = p.mean(axis=1)
        d = np.roll(p, -1, axis=1) - p                   # edge vectors v_k -> v_k+1
        length = np.hypot(d[..., 0], d[..., 1])
        with np.errstate(invalid="ignore", divide="ignore"):
            self.normals = np.stack([d[..., 1], -d[..., 0]], axis=-1) / length[..., None]
        self.edge_length = length
        self.edge_mid = 0.5 * (p + np.roll(p, -1, axis=1))

        n = self.ncells
        v0 = self.tris
        v1 = np.roll(self.tris, -1, axis=1)
        lo = np.minimum(v0, v1).ravel()
        hi = np.maximum(v0, v1).ravel()
        key = lo * max(self.nnodes, 1) + hi
        order = np.argsort(key, kind="stable")
        ks = key[order]
        first = np.ones(len(ks), dtype=bool)
        first[1:] = ks[1:] != ks[:-1]
        edge_id_sorted = np.cumsum(first) - 1
        edge_id = np.empty_like(edge_id_sorted)
        edge_id[order] = edge_id_sorted
        counts = np.bincount(edge_id_sorted)
        self.edge_multiplicity = counts
        ne = len(counts)

        slot = order  # flat (cell*3 + k) indices sorted by edge key
        left = np.full(ne, -1, dtype=np.int64)
        right = np.full(ne, -1, dtype=np.int64)
        left_k = np.full(ne, -1, dtype=np.int64)
        right_k = np.full(ne, -1, dtype=np.int64)
        starts = np.flatnonzero(first)
        left[edge_id_sorted[starts]] = slot[starts] // 3
        left_k[edge_id_sorted[starts]] = slot[starts] % 3
        second = np.flatnonzero(~first)
        right[edge_id_sorted[second]] = slot[second] // 3
        right_k[edge_id_sorted[second]] = slot[second] % 3

        self.cell_edges = edge_id.reshape(n, 3)
        self.edge_cells = np.stack([left, right], axis=1)
        self.edge_local = np.stack([left_k, right_k], axis=1)
        self.edge_len = self.edge_length[left, left_k] if ne else np.zeros(0)
        self.edge_normal = self.normals[left, left_k] if ne else np.zeros((0, 2))
        self.edge_midpoint = self.edge_mid[left, left_k] if ne else np.zeros((0, 2))
        # orientation of each cell's edge relative to the canonical normal
        self.cell_edge_sign = np.where(
            self.edge_cells[self.cell_edges, 0] == np.arange(n)[:, None], 1.0, -1.0)
        other = np.where(self.cell_edge_sign > 0,
                         self.edge_cells[self.cell_edges, 1],
                         self.edge_cells[self.cell_edges, 0])
        self.neighbors = other
        self.is_boundary_edge = right < 0
        self.boundary_edges = np.flatnonzero(self.is_boundary_edge)
        perim = self.edge_length.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            self.length_scale = self.area / perim

    @property
    def nedges(self) -> int:
        return len(self.edge_cells)

    def bbox(self):
        return self.nodes.min(axis=0), self.nodes.max(axis=0)

    def boundary_tags(self, rtol=1e-9):
        """Label boundary edges 'left', 'right', 'bottom', 'top' or 'other'.

        Classification uses the bounding box, so it is exact for rectangles.
        """
        (x0, y0), (x1, y1) = self.bbox()
        tol = rtol * max(x1 - x0, y1 - y0, 1.0)
        mid = self.edge_midpoint
        nrm = self.edge_normal
        tags = np.full(self.nedges, "", dtype=object)
        b = self.is_boundary_edge
        tags[b] = "other"
        tags[b & (np.abs(mid[:, 0] - x0) < tol) & (nrm[:, 0] < -0.5)] = "left"
        tags[b & (np.abs(mid[:, 0] - x1) < tol) & (nrm[:, 0] > 0.5)] = "right"
        tags[b & (np.abs(mid[:, 1] - y0) < tol) & (nrm[:, 1] < -0.5)] = "bottom"
        tags[b & (np.abs(mid[:, 1] - y1) < tol) & (nrm[:, 1] > 0.5)] = "top"
        return tags


def generate_rect_mesh(nx: int, ny: int, Lx: float, Ly: float, origin=(0.0, 0.0)) -> TriMesh:
    """Structured triangulation of a rectangle; each square is cut along its
    lower-left to upper-right diagonal."""
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    if not (Lx > 0 and Ly > 0):
        raise ValueError("rectangle dimensions must be positive")
    x = origin[0] + Lx * np.arange(nx + 1) / nx
    y = origin[1] + Ly * np.arange(ny + 1) / ny
    X, Y = np.meshgrid(x, y)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    j, i = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    n00 = (j * (nx + 1) + i).ravel()
    n10 = n00 + 1
    n01 = n00 + nx + 1
    n11 = n01 + 1
    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    tris = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return TriMesh(nodes, tris)


def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def load_mesh(path) -> TriMesh:
    path = Path(path)
    lines = _data_lines(path.read_text())
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise MeshFormatError("empty mesh file", path=path) from None
    if len(head) != 2:
        raise MeshFormatError("header must be 'NNODES NTRIS'", lineno, path)
    try:
        nn, nt = int(head[0]), int(head[1])
    except ValueError:
        raise MeshFormatError("header counts must be integers", lineno, path) from None
    nodes = np.empty((nn, 2))
    tris = np.empty((nt, 3), dtype=np.int64)
    for k in range(nn):
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise MeshFormatError(f"expected {nn} node lines, got {k}", path=path) from None
        if len(tok) != 2:
            raise MeshFormatError("node line must be 'x y'", lineno, path)
        try:
            nodes[k] = float(tok[0]), float(tok[1])
        except ValueError:
            raise MeshFormatError("bad node coordinate", lineno, path) from None
    for k in range(nt):
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise MeshFormatError(f"expected {nt} triangle lines, got {k}", path=path) from None
        if len(tok) != 3:
            raise MeshFormatError("triangle line must be 'i0 i1 i2'", lineno, path)
        try:
            idx = [int(t) for t in tok]
        except ValueError:
            raise MeshFormatError("bad node index", lineno, path) from None
        for i in idx:
            if not 0 <= i < nn:
                raise MeshFormatError(f"triangle references missing node {i}", lineno, path)
        tris[k] = idx
    extra = next(lines, None)
    if extra is not None:
        raise MeshFormatError("unexpected trailing data", extra[0], path)

    p = nodes[tris]
    signed = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
              - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    cw = signed < 0
    if np.any(cw):
        warnings.warn(f"{path}: reoriented {int(cw.sum())} clockwise triangle(s)", stacklevel=2)
        tris[cw] = tris[cw][:, [0, 2, 1]]
    return TriMesh(nodes, tris)


def save_mesh(mesh: TriMesh, path):
    path = Path(path)
    with path.open("w") as f:
        f.write(f"{mesh.nnodes} {mesh.ncells}\n")
        for x, y in mesh.nodes:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        for t in mesh.tris:
            f.write(f"{t[0]} {t[1]} {t[2]}\n")


def validate_mesh(mesh: TriMesh, tol_normal=1e-14, tol_closure=1e-12) -> list[str]:
    """Check every mesh invariant; returns a list of violations (empty if valid)."""
    problems = []
    bad_area = np.flatnonzero(~(mesh.area > 0))
    for i in bad_area[:20]:
        problems.append(f"cell {i}: non-positive area {mesh.area[i]:.3e}")
    if len(bad_area) > 20:
        problems.append(f"... {len(bad_area) - 20} more non-positive areas")

    over = np.flatnonzero(mesh.edge_multiplicity > 2)
    for e in over[:20]:
        problems.append(f"edge {e}: shared by {mesh.edge_multiplicity[e]} cells")

    interior = np.flatnonzero(mesh.edge_cells[:, 1] >= 0)
    L, R = mesh.edge_cells[interior, 0], mesh.edge_cells[interior, 1]
    kL, kR = mesh.edge_local[interior, 0], mesh.edge_local[interior, 1]
    nL, nR = mesh.normals[L, kL], mesh.normals[R, kR]
    mis = np.abs(nL + nR).max(axis=1) if len(interior) else np.zeros(0)
    for j in np.flatnonzero(~(mis <= tol_normal))[:20]:
        problems.append(f"edge {interior[j]}: normals of cells {L[j]} and {R[j]} not opposite "
                        f"(mismatch {mis[j]:.3e})")
    dl = np.abs(mesh.edge_length[L, kL] - mesh.edge_length[R, kR])
    for j in np.flatnonzero(~(dl <= tol_closure * np.maximum(1.0, mesh.edge_length[L, kL])))[:20]:
        problems.append(f"edge {interior[j]}: lengths differ between cells {L[j]} and {R[j]}")

    unit = np.abs(np.hypot(mesh.normals[..., 0], mesh.normals[..., 1]) - 1.0)
    for i in np.flatnonzero(~(unit <= tol_normal * 10).all(axis=1))[:20]:
        problems.append(f"cell {i}: normal is not unit length")

    scale = np.maximum(mesh.edge_length.max(axis=1), 1e-300)
    closure = np.abs((mesh.edge_length[..., None] * mesh.normals).sum(axis=1)).max(axis=1) / scale
    for i in np.flatnonzero(~(closure <= tol_closure))[:20]:
        problems.append(f"cell {i}: sum of l*n over edges is {closure[i]:.3e}, not zero")
    return problems
