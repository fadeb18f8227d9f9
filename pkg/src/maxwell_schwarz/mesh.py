"""Structured Freudenthal tetrahedral meshes of axis-aligned boxes."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, OutOfDomainError

# local edge (i, j) and local face (vertex triple) tables of a tetrahedron
LOCAL_EDGES = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], dtype=np.int64)
LOCAL_FACES = np.array([(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)], dtype=np.int64)

_KUHN_PATHS = list(itertools.permutations(range(3)))


@dataclass(frozen=True)
class BoxMesh:
    """Kuhn (Freudenthal) 6-tetrahedron subdivision of ``n**3`` box cells.

    Vertices are numbered lexicographically by their (x, y, z) grid index,
    edges and faces are stored with ascending vertex indices and sorted
    lexicographically, so two builds with the same inputs are bit-identical.
    """

    lower: np.ndarray
    upper: np.ndarray
    n: int
    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    faces: np.ndarray
    cell_edges: np.ndarray
    cell_faces: np.ndarray
    face_cells: np.ndarray
    h: float
    _grid_index: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> np.ndarray:
        """Cell size along each axis."""
        return (self.upper - self.lower) / self.n

    @property
    def grid_h(self) -> float:
        """Largest axis spacing of the underlying box grid."""
        return float(self.spacing.max())

    def vertex_grid_index(self, v) -> np.ndarray:
        return self._grid_index[v]

    def cell_volumes(self) -> np.ndarray:
        p = self.vertices[self.cells]
        d = p[:, 1:, :] - p[:, :1, :]
        return np.abs(np.linalg.det(d)) / 6.0

    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(
            self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]], axis=1
        )

    def cell_centroids(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)

    def cell_grid_index(self) -> np.ndarray:
        """(i, j, k) index of the box cell that contains each tetrahedron."""
        return np.arange(self.n_cells)[:, None] // 6 // np.array(
            [self.n * self.n, self.n, 1]
        ) % self.n


def _vertex_id(i, j, k, n):
    return (i * (n + 1) + j) * (n + 1) + k


def build_box_mesh(box, n: int) -> BoxMesh:
    """Build the structured tetrahedral mesh of ``box = (lower, upper)``.

    Each of the ``n**3`` box cells is split along its main diagonal into six
    tetrahedra. The diagonal direction is the same everywhere, so the mesh
    for ``k*n`` cells per axis is a refinement of the mesh for ``n``.
    """
    n = int(n)
    if n < 1:
        raise ConfigurationError(f"cells per dimension must be >= 1, got {n}")
    lower = np.asarray(box[0], dtype=float)
    upper = np.asarray(box[1], dtype=float)
    if lower.shape != (3,) or upper.shape != (3,) or np.any(upper <= lower):
        raise ConfigurationError(f"degenerate box {box!r}")

    g = np.arange(n + 1)
    gi, gj, gk = np.meshgrid(g, g, g, indexing="ij")
    grid_index = np.stack([gi.ravel(), gj.ravel(), gk.ravel()], axis=1)
    vertices = lower + grid_index * ((upper - lower) / n)

    c = np.arange(n)
    ci, cj, ck = (a.ravel() for a in np.meshgrid(c, c, c, indexing="ij"))
    unit = np.eye(3, dtype=np.int64)
    cells = np.empty((n ** 3, 6, 4), dtype=np.int64)
    for t, path in enumerate(_KUHN_PATHS):
        step = np.zeros(3, dtype=np.int64)
        corners = [np.zeros(3, dtype=np.int64)]
        for axis in path:
            step = step + unit[axis]
            corners.append(step.copy())
        for v, off in enumerate(corners):
            cells[:, t, v] = _vertex_id(ci + off[0], cj + off[1], ck + off[2], n)
    cells = cells.reshape(-1, 4)

    all_edges = cells[:, LOCAL_EDGES].reshape(-1, 2)
    edges, cell_edges = np.unique(all_edges, axis=0, return_inverse=True)
    cell_edges = cell_edges.reshape(-1, 6)
    all_faces = cells[:, LOCAL_FACES].reshape(-1, 3)
    faces, cell_faces = np.unique(all_faces, axis=0, return_inverse=True)
    cell_faces = cell_faces.reshape(-1, 4)

    face_cells = np.full((len(faces), 2), -1, dtype=np.int64)
    flat = cell_faces.ravel()
    owner = np.repeat(np.arange(len(cells)), 4)
    order = np.argsort(flat, kind="stable")
    flat, owner = flat[order], owner[order]
    first = np.ones(len(flat), dtype=bool)
    first[1:] = flat[1:] != flat[:-1]
    face_cells[flat[first], 0] = owner[first]
    face_cells[flat[~first], 1] = owner[~first]

    lengths = np.linalg.norm(vertices[edges[:, 1]] - vertices[edges[:, 0]], axis=1)
    return BoxMesh(
        lower=lower,
        upper=upper,
        n=n,
        vertices=vertices,
        cells=cells,
        edges=edges,
        faces=faces,
        cell_edges=cell_edges,
        cell_faces=cell_faces,
        face_cells=face_cells,
        h=float(lengths.max()),
        _grid_index=grid_index,
    )


@dataclass(frozen=True)
class BoundaryTags:
    boundary_faces: np.ndarray
    boundary_edges: np.ndarray
    face_normals: np.ndarray
    face_facet: np.ndarray  # facet id 0..5 = (-x, +x, -y, +y, -z, +z)


def classify_boundary(mesh: BoxMesh) -> BoundaryTags:
    """Tag faces lying in a facet of the box and give their outward normals."""
    gidx = mesh.vertex_grid_index(mesh.faces)  # (nf, 3 verts, 3 axes)
    facet = np.full(mesh.n_faces, -1, dtype=np.int64)
    for axis in range(3):
        on_low = np.all(gidx[:, :, axis] == 0, axis=1)
        on_high = np.all(gidx[:, :, axis] == mesh.n, axis=1)
        facet[on_low] = 2 * axis
        facet[on_high] = 2 * axis + 1
    bfaces = np.flatnonzero(facet >= 0)
    normals = np.zeros((len(bfaces), 3))
    f = facet[bfaces]
    normals[np.arange(len(bfaces)), f // 2] = np.where(f % 2 == 0, -1.0, 1.0)
    bedges = np.unique(face_edge_table(mesh)[bfaces].ravel())
    return BoundaryTags(
        boundary_faces=bfaces,
        boundary_edges=bedges,
        face_normals=normals,
        face_facet=f,
    )


def face_edge_table(mesh: BoxMesh) -> np.ndarray:
    """Global edges (ab, ac, bc) of every face."""
    f = mesh.faces
    pairs = np.stack([f[:, [0, 1]], f[:, [0, 2]], f[:, [1, 2]]], axis=1)
    n_v = mesh.n_vertices
    key_edges = mesh.edges[:, 0] * n_v + mesh.edges[:, 1]
    keys = pairs[..., 0] * n_v + pairs[..., 1]
    return np.searchsorted(key_edges, keys)


def barycentric(mesh: BoxMesh, cell: int, x) -> np.ndarray:
    p = mesh.vertices[mesh.cells[cell]]
    T = (p[1:] - p[0]).T
    lam = np.linalg.solve(T, np.asarray(x, dtype=float) - p[0])
    return np.concatenate([[1.0 - lam.sum()], lam])


def locate_point(mesh: BoxMesh, x, tol: float = 1e-12):
    """Return ``(cell, barycentric coordinates)`` of the cell containing ``x``.

    Points on shared faces, edges or vertices go to the lowest-numbered
    containing cell.
    """
    x = np.asarray(x, dtype=float)
    span = mesh.upper - mesh.lower
    slack = tol * span
    if np.any(x < mesh.lower - slack) or np.any(x > mesh.upper + slack):
        raise OutOfDomainError(f"point {x.tolist()} lies outside the box")
    s = (x - mesh.lower) / mesh.spacing
    candidates = []
    for axis in range(3):
        lo = int(np.clip(np.floor(s[axis] - 1e-9), 0, mesh.n - 1))
        hi = int(np.clip(np.floor(s[axis] + 1e-9), 0, mesh.n - 1))
        candidates.append(sorted({lo, hi}))
    best = None
    for i, j, k in itertools.product(*candidates):
        base = 6 * ((i * mesh.n + j) * mesh.n + k)
        for c in range(base, base + 6):
            lam = barycentric(mesh, c, x)
            if np.all(lam >= -tol):
                if best is None or c < best[0]:
                    best = (c, lam)
                break
    if best is None:  # pragma: no cover - the candidate cubes cover x
        raise OutOfDomainError(f"no cell contains {x.tolist()}")
    c, lam = best
    lam = np.clip(lam, 0.0, 1.0)
    return c, lam / lam.sum()


def locate_points(mesh: BoxMesh, points, tol: float = 1e-10):
    """Vectorized point location: ``(cells, barycentric)`` for an (n, 3) array.

    Each point is searched in the single grid cube given by flooring its grid
    coordinates; points on shared boundaries get some containing cell, not
    necessarily the lowest-numbered one.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    slack = tol * (mesh.upper - mesh.lower)
    if np.any(x < mesh.lower - slack) or np.any(x > mesh.upper + slack):
        raise OutOfDomainError("some points lie outside the box")
    s = (x - mesh.lower) / mesh.spacing
    ijk = np.clip(np.floor(s).astype(np.int64), 0, mesh.n - 1)
    base = 6 * ((ijk[:, 0] * mesh.n + ijk[:, 1]) * mesh.n + ijk[:, 2])
    cand = base[:, None] + np.arange(6)
    p = mesh.vertices[mesh.cells[cand]]  # (n, 6, 4, 3)
    T = np.swapaxes(p[:, :, 1:] - p[:, :, :1], -1, -2)
    lam = np.linalg.solve(T, (x[:, None, :] - p[:, :, 0])[..., None])[..., 0]
    bary = np.concatenate([1.0 - lam.sum(axis=-1, keepdims=True), lam], axis=-1)
    ok = np.all(bary >= -tol, axis=-1)
    if not ok.any(axis=1).all():  # pragma: no cover - the cube always contains x
        raise OutOfDomainError("point location failed")
    pick = np.argmax(ok, axis=1)
    rows = np.arange(len(x))
    b = np.clip(bary[rows, pick], 0.0, 1.0)
    return cand[rows, pick], b / b.sum(axis=1, keepdims=True)


def write_vtk(mesh: BoxMesh, path, cell_data=None, point_data=None) -> Path:
    """Write the mesh as a legacy ASCII VTK unstructured grid.

    ``cell_data`` / ``point_data`` map names to arrays of shape (n,) or (n, 3).
    Complex arrays are split into ``_re`` and ``_im`` parts.
    """
    path = Path(path)
    lines = [
        "# vtk DataFile Version 3.0",
        "maxwell_schwarz box mesh",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    lines += [" ".join(f"{c:.16g}" for c in p) for p in mesh.vertices]
    lines.append(f"CELLS {mesh.n_cells} {5 * mesh.n_cells}")
    lines += ["4 " + " ".join(map(str, c)) for c in mesh.cells]
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines += ["10"] * mesh.n_cells

    def emit(data, count):
        for name, arr in data.items():
            arr = np.asarray(arr)
            parts = [(name, arr)]
            if np.iscomplexobj(arr):
                parts = [(name + "_re", arr.real), (name + "_im", arr.imag)]
            for nm, a in parts:
                if a.ndim == 1:
                    lines.append(f"SCALARS {nm} double 1")
                    lines.append("LOOKUP_TABLE default")
                    lines.extend(f"{v:.16g}" for v in a)
                else:
                    lines.append(f"VECTORS {nm} double")
                    lines.extend(" ".join(f"{c:.16g}" for c in v) for v in a)
            assert len(arr) == count

    if cell_data:
        lines.append(f"CELL_DATA {mesh.n_cells}")
        emit(cell_data, mesh.n_cells)
    if point_data:
        lines.append(f"POINT_DATA {mesh.n_vertices}")
        emit(point_data, mesh.n_vertices)
    path.write_text("\n".join(lines) + "\n")
    return path
