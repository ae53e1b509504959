import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swefvs.mesh import MeshFormatError, TriMesh, generate_rect_mesh, load_mesh, save_mesh, validate_mesh


def test_unit_square_two_triangles():
    m = generate_rect_mesh(1, 1, 1.0, 1.0)
    assert m.ncells == 2 and m.nnodes == 4
    np.testing.assert_allclose(m.area, [0.5, 0.5], rtol=1e-15)


def test_two_by_one_counts():
    m = generate_rect_mesh(2, 1, 2.0, 1.0)
    assert m.ncells == 4 and m.nnodes == 6


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.floats(0.1, 50), st.floats(0.1, 50))
def test_generated_meshes_are_valid(nx, ny, lx, ly):
    m = generate_rect_mesh(nx, ny, lx, ly, origin=(-3.0, 2.0))
    assert m.ncells == 2 * nx * ny
    assert m.nnodes == (nx + 1) * (ny + 1)
    assert validate_mesh(m) == []
    assert m.area.sum() == pytest.approx(lx * ly, rel=1e-12)


def test_invalid_dimensions():
    with pytest.raises(ValueError):
        generate_rect_mesh(0, 3, 1.0, 1.0)
    with pytest.raises(ValueError):
        generate_rect_mesh(2, 2, -1.0, 1.0)


def test_connectivity_and_normals():
    m = generate_rect_mesh(4, 3, 2.0, 1.5)
    # each interior edge seen from both cells has opposite normals and equal length
    interior = m.edge_cells[:, 1] >= 0
    L, R = m.edge_cells[interior].T
    kL, kR = m.edge_local[interior].T
    np.testing.assert_allclose(m.normals[L, kL], -m.normals[R, kR], atol=1e-14)
    np.testing.assert_allclose(m.edge_length[L, kL], m.edge_length[R, kR], rtol=1e-15)
    closure = (m.edge_length[..., None] * m.normals).sum(axis=1)
    assert np.abs(closure).max() < 1e-12
    # boundary edges: 2 * (nx + ny)
    assert len(m.boundary_edges) == 2 * (4 + 3)
    assert m.nedges == 3 * m.ncells // 2 + len(m.boundary_edges) // 2


def test_boundary_tags_on_rectangle():
    m = generate_rect_mesh(3, 2, 3.0, 2.0)
    tags = m.boundary_tags()[m.boundary_edges]
    assert sorted(set(tags)) == ["bottom", "left", "right", "top"]
    assert list(tags).count("left") == 2 and list(tags).count("top") == 3


def test_save_load_roundtrip(tmp_path):
    m = generate_rect_mesh(3, 3, 1.0, 2.0, origin=(0.1, 0.2))
    path = tmp_path / "m.txt"
    save_mesh(m, path)
    back = load_mesh(path)
    np.testing.assert_array_equal(back.nodes, m.nodes)
    np.testing.assert_array_equal(back.tris, m.tris)


def test_load_accepts_comments(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("# unit square\n4 2\n0 0\n1 0  # corner\n1 1\n0 1\n0 1 2\n0 2 3\n")
    m = load_mesh(path)
    assert m.ncells == 2 and validate_mesh(m) == []


def test_load_missing_node_names_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3 1\n0 0\n1 0\n0 1\n0 1 7\n")
    with pytest.raises(MeshFormatError, match="line 5"):
        load_mesh(path)


def test_load_malformed_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("three 1\n")
    with pytest.raises(MeshFormatError, match="line 1"):
        load_mesh(path)


def test_load_reorients_clockwise_triangle(tmp_path):
    path = tmp_path / "cw.txt"
    path.write_text("3 1\n0 0\n1 0\n0 1\n0 2 1\n")
    with pytest.warns(UserWarning, match="reoriented"):
        m = load_mesh(path)
    assert m.area[0] == pytest.approx(0.5)


def test_validate_reports_collapsed_triangle():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with np.errstate(invalid="ignore", divide="ignore"):
        m = TriMesh(nodes, [[0, 1, 2], [0, 2, 3]])
    report = validate_mesh(m)
    assert any("non-positive area" in r for r in report)


def test_validate_reports_mismatched_normals():
    m = generate_rect_mesh(2, 2, 1.0, 1.0)
    e = int(np.flatnonzero(m.edge_cells[:, 1] >= 0)[0])
    c, k = m.edge_cells[e, 1], m.edge_local[e, 1]
    m.normals[c, k] = m.normals[c, k][::-1].copy()
    report = validate_mesh(m)
    assert any("not opposite" in r for r in report)
