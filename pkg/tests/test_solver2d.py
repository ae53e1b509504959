import math

import numpy as np
import pytest

from swefvs.cases import circular_dam_case, lake_at_rest_case
from swefvs.core import flux_2d, normal_flux, rotate, rotate_back
from swefvs.mesh import generate_rect_mesh
from swefvs.riemann import FluxMode, fvs_interface_flux
from swefvs.solver2d import (
    Bathymetry2D,
    Bc2D,
    RunState2D,
    bed_source_2d,
    compute_dt_2d,
    edge_flux,
    evolve2d,
    step2d,
)

G = 9.81
MODES = ["fvs-2r", "fvs-exact", "godunov-exact"]


def random_states(rng, n):
    h = rng.uniform(0.05, 5.0, n)
    c = np.sqrt(G * h)
    return np.stack([h, h * rng.uniform(-0.9, 0.9, n) * c, h * rng.uniform(-0.9, 0.9, n) * c])


def uniform_state(mesh, h=1.0, qx=0.0, qy=0.0, bcs=None, **kw):
    U = np.tile([[h], [qx], [qy]], (1, mesh.ncells))
    return RunState2D(mesh, U, Bathymetry2D.flat(mesh), bcs or {}, **kw)


# -- edge flux -----------------------------------------------------------------------
@pytest.mark.parametrize("mode", ["fvs-2r", "fvs-exact"])
def test_edge_flux_reduces_to_1d(mode):
    rng = np.random.default_rng(3)
    for _ in range(20):
        hl, hr = rng.uniform(0.1, 3, 2)
        ul, ur = rng.uniform(-2, 2, 2)
        f2 = edge_flux([hl, hl * ul, 0.0], [hr, hr * ur, 0.0], (1.0, 0.0), G, mode)
        f1 = fvs_interface_flux((hl, ul, 0.0), (hr, ur, 0.0), G, mode)
        np.testing.assert_allclose(f2, f1, rtol=1e-15, atol=1e-15)


@pytest.mark.parametrize("mode", MODES)
def test_edge_flux_consistency(mode):
    rng = np.random.default_rng(4)
    q = random_states(rng, 1000)
    theta = rng.uniform(-np.pi, np.pi, 1000)
    n = np.stack([np.cos(theta), np.sin(theta)])
    f = edge_flux(q, q, n, G, mode)
    exact = normal_flux(q, n)
    scale = np.max(np.abs(np.stack(flux_2d(q))), axis=(0, 1))
    assert np.all(np.abs(f - exact) <= 1e-13 * scale)


@pytest.mark.parametrize("mode", MODES)
def test_edge_flux_frame_invariance(mode):
    rng = np.random.default_rng(5)
    qi, qj = random_states(rng, 1000), random_states(rng, 1000)
    theta = rng.uniform(-np.pi, np.pi, 1000)
    phi = rng.uniform(-np.pi, np.pi, 1000)
    n = np.stack([np.cos(theta), np.sin(theta)])
    base = edge_flux(qi, qj, n, G, mode)
    # rotate the whole problem by phi, solve, rotate the flux back
    r = (np.cos(phi), np.sin(phi))
    n_rot = np.stack([np.cos(theta - phi), np.sin(theta - phi)])
    f_rot = edge_flux(rotate(qi, r), rotate(qj, r), n_rot, G, mode)
    scale = np.max(np.abs(base), axis=0) + 1.0
    assert np.all(np.abs(rotate_back(f_rot, r) - base) <= 1e-12 * scale)


# -- time step ------------------------------------------------------------------------
def test_compute_dt_2d_unit_square():
    mesh = generate_rect_mesh(1, 1, 1.0, 1.0)
    r = 0.5 / (2.0 + math.sqrt(2.0))
    s = uniform_state(mesh)
    assert compute_dt_2d(s, cfl=0.45) == pytest.approx(0.45 * r / 3.132092, rel=1e-6)
    assert compute_dt_2d(s, cfl=0.225) == pytest.approx(0.5 * compute_dt_2d(s, cfl=0.45), rel=1e-15)


def test_compute_dt_2d_scales_with_refinement():
    a = compute_dt_2d(uniform_state(generate_rect_mesh(4, 4, 1.0, 1.0)))
    b = compute_dt_2d(uniform_state(generate_rect_mesh(8, 8, 1.0, 1.0)))
    assert a == pytest.approx(2.0 * b, rel=1e-12)


def test_compute_dt_2d_all_dry():
    with pytest.raises(ValueError):
        compute_dt_2d(uniform_state(generate_rect_mesh(2, 2, 1.0, 1.0), h=0.0))


# -- state and boundaries --------------------------------------------------------------
def test_unknown_boundary_tag_rejected():
    mesh = generate_rect_mesh(2, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        uniform_state(mesh, bcs={"north": Bc2D.wall()})


def test_boundary_condition_validation():
    with pytest.raises(ValueError):
        Bc2D.outflow(-1.0)
    with pytest.raises(ValueError):
        Bc2D("dirichlet", 1.0)


# -- update ------------------------------------------------------------------------------
@pytest.mark.parametrize("mode", MODES)
@pytest.mark.parametrize("order", [1, 2])
def test_uniform_state_unchanged(mode, order):
    mesh = generate_rect_mesh(6, 5, 3.0, 2.0)
    bc = Bc2D.transmissive()
    s = uniform_state(mesh, 0.8, 0.3, -0.2, {t: bc for t in ("left", "right", "bottom", "top")})
    new = step2d(s, order, G, 0.01, mode)
    np.testing.assert_allclose(new.U, s.U, rtol=0, atol=1e-15)


@pytest.mark.parametrize("mode", ["fvs-2r", "godunov-exact"])
@pytest.mark.parametrize("order", [1, 2])
def test_lake_at_rest_gaussian_bed(order, mode):
    case = lake_at_rest_case("gauss", H0=1.0)
    s = case.initial_state_2d()
    H0 = s.free_surface.copy()
    for _ in range(100):
        s = step2d(s, order, G, compute_dt_2d(s), mode)
    assert np.abs(s.free_surface - H0).max() <= 1e-12
    assert np.abs(s.U[1:]).max() <= 1e-12


def test_bed_source_flat_is_zero():
    mesh = generate_rect_mesh(4, 4, 1.0, 1.0)
    s = uniform_state(mesh, 0.6, 0.1, 0.2)
    for order in (1, 2):
        assert not np.any(bed_source_2d(s, order=order))


def test_bed_source_tilted_single_cell_closed_form():
    # two triangles, tilted bed, constant surface H = 1, walls all round
    mesh = generate_rect_mesh(1, 1, 1.0, 1.0)
    bed = lambda x, y: 0.1 * np.asarray(x) + 0.05 * np.asarray(y)
    bath = Bathymetry2D.from_function(mesh, bed)
    h = 1.0 - bath.cells
    s = RunState2D(mesh, np.stack([h, 0 * h, 0 * h]), bath)
    src = bed_source_2d(s, order=1)
    # independent evaluation: sum over the cell's edges of -l n g (h^2 - h*^2) / 2
    for i in range(2):
        expect = np.zeros(2)
        for k in range(3):
            j = mesh.neighbors[i, k]
            b_nb = bath.cells[i] if j < 0 else bath.cells[j]
            b_star = max(bath.cells[i], b_nb)
            h_star = max(0.0, h[i] + bath.cells[i] - b_star)
            expect -= mesh.edge_length[i, k] * mesh.normals[i, k] * 0.5 * G * (h[i] ** 2 - h_star ** 2)
        np.testing.assert_allclose(src[1:, i], expect / mesh.area[i], rtol=1e-13, atol=1e-15)
        # the face pressure of the hydrostatic states closes the balance
        press = sum(mesh.edge_length[i, k] * mesh.normals[i, k] * 0.5 * G
                    * max(0.0, 1.0 - max(bath.cells[i], bath.cells[mesh.neighbors[i, k]]
                                         if mesh.neighbors[i, k] >= 0 else bath.cells[i])) ** 2
                    for k in range(3))
        assert np.abs(-press / mesh.area[i] + src[1:, i]).max() <= 1e-13
    new = step2d(s, 1, G, 0.01)
    assert np.abs(new.U - s.U).max() <= 1e-13


def test_mass_conserved_closed_basin():
    case = circular_dam_case(nx=20)
    s = case.initial_state_2d()
    m0 = s.mass()
    r = evolve2d(s, 1e9, order=1, max_steps=1000)
    assert abs(r.mass() - m0) <= 1e-11 * m0
    assert r.steps == 1000


def test_edge_contributions_are_antisymmetric():
    # each interior edge flux enters its two cells with opposite sign, so
    # the area-weighted update sums to zero with walls everywhere
    case = circular_dam_case(nx=16)
    s = case.initial_state_2d()
    for order in (1, 2):
        new = step2d(s, order, G, compute_dt_2d(s), "fvs-2r")
        dm = np.sum((new.U[0] - s.U[0]) * s.mesh.area)
        assert abs(dm) <= 1e-12 * s.mass()


def test_dam_break_symmetry_first_order():
    case = circular_dam_case(nx=40)
    s = case.initial_state_2d()
    r = evolve2d(s, 0.5, order=1)
    # 1 m squares: centroids sit on a lattice of spacing 1/3 m, 120 units across
    c = np.round(r.mesh.centroid * 3).astype(np.int64)
    index = {(x, y): i for i, (x, y) in enumerate(c)}
    swap = np.array([index[(y, x)] for x, y in c])
    turn = np.array([index[(120 - x, 120 - y)] for x, y in c])
    np.testing.assert_allclose(r.U[0][swap], r.U[0], atol=1e-10)
    np.testing.assert_allclose(r.U[0][turn], r.U[0], atol=1e-10)


def test_threads_do_not_change_results():
    case = circular_dam_case(nx=40)
    a = evolve2d(case.initial_state_2d(threads=1), 1e9, order=2, max_steps=10)
    b = evolve2d(case.initial_state_2d(threads=4), 1e9, order=2, max_steps=10)
    np.testing.assert_array_equal(a.U, b.U)


def test_runs_are_deterministic():
    case = circular_dam_case(nx=20)
    a = evolve2d(case.initial_state_2d(), 0.3, order=2)
    b = evolve2d(case.initial_state_2d(), 0.3, order=2)
    np.testing.assert_array_equal(a.U, b.U)


def test_order_two_dam_stays_within_initial_range():
    case = circular_dam_case(nx=20)
    s = case.initial_state_2d()
    r = evolve2d(s, 0.5, order=2)
    assert r.U[0].max() <= 2.5 + 1e-9 and r.U[0].min() >= 1.0 - 1e-9


def test_unsupported_order():
    mesh = generate_rect_mesh(2, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        step2d(uniform_state(mesh), 3, G, 0.01)


def test_flux_mode_alias_accepted():
    mesh = generate_rect_mesh(3, 3, 1.0, 1.0)
    s = uniform_state(mesh, 1.0, 0.1, 0.0)
    a = step2d(s, 1, G, 0.01, FluxMode.FVS_2R)
    b = step2d(s, 1, G, 0.01, "TwoRarefaction")
    np.testing.assert_array_equal(a.U, b.U)
