import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxwell_schwarz.errors import ConfigurationError, OutOfDomainError
from maxwell_schwarz.mesh import (
    barycentric,
    build_box_mesh,
    classify_boundary,
    locate_point,
    locate_points,
    write_vtk,
)

from conftest import UNIT


def kuhn_cells(n):
    """Independent enumeration: one tetrahedron per coordinate ordering in each cube."""
    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    cells = set()
    for i, j, k in itertools.product(range(n), repeat=3):
        for perm in itertools.permutations(range(3)):
            p = [i, j, k]
            verts = [vid(*p)]
            for axis in perm:
                p[axis] += 1
                verts.append(vid(*p))
            cells.add(tuple(sorted(verts)))
    return cells


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cells_match_enumeration(n):
    mesh = build_box_mesh(UNIT, n)
    assert {tuple(c) for c in mesh.cells} == kuhn_cells(n)
    assert mesh.n_cells == 6 * n ** 3
    assert mesh.n_vertices == (n + 1) ** 3


@pytest.mark.parametrize("n", [1, 2, 4])
def test_entities_match_brute_force(n):
    mesh = build_box_mesh(UNIT, n)
    edges = {tuple(sorted((c[a], c[b]))) for c in mesh.cells for a, b in itertools.combinations(range(4), 2)}
    faces = {tuple(sorted(f)) for c in mesh.cells for f in itertools.combinations(c, 3)}
    assert {tuple(e) for e in mesh.edges} == edges
    assert {tuple(f) for f in mesh.faces} == faces
    # Euler characteristic of a ball
    assert mesh.n_vertices - mesh.n_edges + mesh.n_faces - mesh.n_cells == 1
    for c, ce in zip(mesh.cells, mesh.cell_edges):
        got = {tuple(mesh.edges[e]) for e in ce}
        assert got == {tuple(sorted((c[a], c[b]))) for a, b in itertools.combinations(range(4), 2)}


def test_cells_ascending_and_positive_volume():
    mesh = build_box_mesh(((0, 0, 0), (2, 1, 3)), 3)
    assert np.all(np.diff(mesh.cells, axis=1) > 0)
    vol = mesh.cell_volumes()
    assert np.all(vol > 0)
    assert vol.sum() == pytest.approx(6.0, rel=1e-13)
    assert np.allclose(vol, vol[0])


def test_h_is_longest_edge():
    mesh = build_box_mesh(((0, 0, 0), (2, 1, 1)), 2)
    assert mesh.h == pytest.approx(mesh.edge_lengths().max())
    assert mesh.h == pytest.approx(np.sqrt(1 + 0.25 + 0.25))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_boundary_classification(n):
    mesh = build_box_mesh(UNIT, n)
    tags = classify_boundary(mesh)
    assert len(tags.boundary_faces) == 12 * n * n
    assert len(tags.boundary_edges) == 18 * n * n
    cent = mesh.vertices[mesh.faces[tags.boundary_faces]].mean(axis=1)
    # outward unit normals: centroid + small step leaves the box
    assert np.allclose(np.linalg.norm(tags.face_normals, axis=1), 1.0)
    out = cent + 1e-3 * tags.face_normals
    assert np.all(np.any((out < 0) | (out > 1), axis=1))
    n_adj = (mesh.face_cells >= 0).sum(axis=1)
    assert np.all(n_adj[tags.boundary_faces] == 1)
    interior = np.setdiff1d(np.arange(mesh.n_faces), tags.boundary_faces)
    assert np.all(n_adj[interior] == 2)


def test_bad_inputs():
    with pytest.raises(ConfigurationError):
        build_box_mesh(UNIT, 0)
    with pytest.raises(ConfigurationError):
        build_box_mesh(((0, 0, 0), (1, -1, 1)), 2)


def test_locate_point_reconstructs(rng):
    mesh = build_box_mesh(((0, 0, 0), (1, 2, 1)), 3)
    for x in rng.random((50, 3)) * [1, 2, 1]:
        c, lam = locate_point(mesh, x)
        assert np.all(lam >= 0)
        assert np.allclose(lam @ mesh.vertices[mesh.cells[c]], x)


def test_locate_point_prefers_lowest_cell():
    mesh = build_box_mesh(UNIT, 2)
    x = np.array([0.5, 0.5, 0.5])  # shared vertex
    containing = [c for c in range(mesh.n_cells) if np.all(barycentric(mesh, c, x) >= -1e-12)]
    assert locate_point(mesh, x)[0] == min(containing)


def test_locate_points_matches_scalar(rng):
    mesh = build_box_mesh(UNIT, 3)
    pts = rng.random((200, 3))
    cells, bary = locate_points(mesh, pts)
    for p, c in zip(pts[:20], cells[:20]):
        assert locate_point(mesh, p)[0] == c
    assert np.allclose(np.einsum("pk,pkd->pd", bary, mesh.vertices[mesh.cells[cells]]), pts)


def test_locate_outside():
    mesh = build_box_mesh(UNIT, 2)
    with pytest.raises(OutOfDomainError):
        locate_point(mesh, [1.5, 0.2, 0.2])
    with pytest.raises(OutOfDomainError):
        locate_points(mesh, [[0.2, 0.2, -0.1]])


def test_write_vtk(tmp_path):
    mesh = build_box_mesh(UNIT, 1)
    path = write_vtk(mesh, tmp_path / "m.vtk", cell_data={"E": np.ones((6, 3)) * (1 + 2j)},
                     point_data={"p": np.arange(8.0)})
    text = path.read_text()
    assert "POINTS 8" in text
    assert "CELLS 6 30" in text
    assert "E_re" in text and "E_im" in text and "SCALARS p" in text


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(1, 3),
    upper=st.tuples(*[st.floats(0.3, 3.0) for _ in range(3)]),
)
def test_volumes_tile_any_box(n, upper):
    mesh = build_box_mesh(((0, 0, 0), upper), n)
    assert mesh.cell_volumes().sum() == pytest.approx(np.prod(upper), rel=1e-12)
    assert mesh.n_vertices - mesh.n_edges + mesh.n_faces - mesh.n_cells == 1
