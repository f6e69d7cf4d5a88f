"""Structured tetrahedral meshes of axis-aligned boxes.

Each grid cell is split into 6 tetrahedra by the diagonal-consistent
(Kuhn) subdivision, so neighboring cells share whole faces and every
refinement by an integer factor nests inside the coarse mesh.  Entities
carry a global orientation: edges point from low to high vertex id, and
each face stores the unit normal pointing from its first incident cell
(K_l) to its second (K_r, outward on the boundary).
"""

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# The 6 permutation tetrahedra of the unit cube: vertex paths
# corner -> corner+e_p0 -> ... -> opposite corner.
KUHN_PERMS = tuple(itertools.permutations((0, 1, 2)))
_PERM_INDEX = {p: i for i, p in enumerate(KUHN_PERMS)}

# Local entity numbering on the 4-vertex tetrahedron.
LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
# Local faces ordered so the right-hand normal points outward when the
# cell has positive Jacobian determinant.
LOCAL_FACES = ((1, 2, 3), (0, 3, 2), (0, 1, 3), (0, 2, 1))


class MeshError(ValueError):
    """Invalid mesh specification or query."""


@dataclass(frozen=True)
class BoxMeshSpec:
    """Axis-aligned box with per-axis resolution and optional cell tagging.

    `subdomain` maps an array of cell barycenters (n, 3) to integer tags.
    """

    lower: tuple
    upper: tuple
    resolution: tuple
    subdomain: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        res = np.asarray(self.resolution, dtype=int)
        if lo.shape != (3,) or hi.shape != (3,) or res.shape != (3,):
            raise MeshError("lower/upper/resolution must have 3 components")
        if not np.all(hi > lo):
            raise MeshError(f"degenerate box: upper {tuple(hi)} must exceed lower {tuple(lo)} componentwise")
        if not np.all(res >= 1):
            raise MeshError(f"resolution must be >= 1 per axis, got {tuple(res)}")
        object.__setattr__(self, "lower", tuple(lo))
        object.__setattr__(self, "upper", tuple(hi))
        object.__setattr__(self, "resolution", tuple(int(n) for n in res))

    def refined(self, factor=2):
        if factor < 1 or factor != int(factor):
            raise MeshError(f"refinement factor must be a positive integer, got {factor}")
        return BoxMeshSpec(self.lower, self.upper,
                           tuple(int(factor) * n for n in self.resolution),
                           self.subdomain)


@dataclass
class Mesh:
    spec: BoxMeshSpec
    vertices: np.ndarray          # (V, 3)
    tets: np.ndarray              # (C, 4) positively oriented
    edges: np.ndarray             # (E, 2) low id -> high id
    faces: np.ndarray             # (F, 3) sorted vertex triples
    faces_oriented: np.ndarray    # (F, 3) right-hand normal equals face_normals
    face_normals: np.ndarray      # (F, 3) unit, K_l -> K_r
    face_cells: np.ndarray        # (F, 2) [K_l, K_r]; K_r = -1 on the boundary
    cell_edges: np.ndarray        # (C, 6)
    cell_edge_signs: np.ndarray   # (C, 6) +-1
    cell_faces: np.ndarray        # (C, 4)
    cell_face_signs: np.ndarray   # (C, 4) +1 iff cell is K_l
    boundary_faces: np.ndarray    # (F,) bool
    boundary_edges: np.ndarray    # (E,) bool
    boundary_vertices: np.ndarray  # (V,) bool
    cell_tags: np.ndarray         # (C,) int

    # geometry caches
    _jac: np.ndarray = field(default=None, repr=False)
    _det: np.ndarray = field(default=None, repr=False)
    _inv_jac: np.ndarray = field(default=None, repr=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_cells(self):
        return len(self.tets)

    @property
    def jacobians(self):
        """Per-cell affine Jacobians B with T_K(xhat) = B xhat + v0."""
        if self._jac is None:
            v = self.vertices[self.tets]
            self._jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0], v[:, 3] - v[:, 0]], axis=2)
        return self._jac

    @property
    def jacobian_dets(self):
        if self._det is None:
            self._det = np.linalg.det(self.jacobians)
        return self._det

    @property
    def inverse_jacobians(self):
        if self._inv_jac is None:
            self._inv_jac = np.linalg.inv(self.jacobians)
        return self._inv_jac

    @property
    def cell_volumes(self):
        return self.jacobian_dets / 6.0

    @property
    def barycenters(self):
        return self.vertices[self.tets].mean(axis=1)

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces - self.n_cells


def build_box_mesh(spec: BoxMeshSpec) -> Mesh:
    """Kuhn-subdivided structured tetrahedral mesh of the box."""
    lo = np.asarray(spec.lower)
    hi = np.asarray(spec.upper)
    n1, n2, n3 = spec.resolution
    nv = (n1 + 1, n2 + 1, n3 + 1)

    ii, jj, kk = np.meshgrid(np.arange(nv[0]), np.arange(nv[1]), np.arange(nv[2]), indexing="ij")
    spacing = (hi - lo) / np.array([n1, n2, n3])
    vertices = lo + np.column_stack([ii.ravel(), jj.ravel(), kk.ravel()]) * spacing

    def vid(i, j, k):
        return i + nv[0] * (j + nv[1] * k)

    ci, cj, ck = np.meshgrid(np.arange(n1), np.arange(n2), np.arange(n3), indexing="ij")
    ci, cj, ck = ci.ravel(), cj.ravel(), ck.ravel()
    ncubes = n1 * n2 * n3

    tets = np.empty((6 * ncubes, 4), dtype=np.int64)
    for p, perm in enumerate(KUHN_PERMS):
        corner = np.stack([ci, cj, ck], axis=1)
        path = [corner.copy()]
        step = corner.copy()
        for axis in perm:
            step = step.copy()
            step[:, axis] += 1
            path.append(step)
        ids = [vid(q[:, 0], q[:, 1], q[:, 2]) for q in path]
        parity = sum(1 for a in range(3) for b in range(a + 1, 3) if perm[a] > perm[b]) % 2
        if parity:
            ids[2], ids[3] = ids[3], ids[2]
        # cell id = 6*cube + perm index (locate() relies on this layout)
        tets[p::6] = np.stack(ids, axis=1)

    mesh = Mesh(
        spec=spec,
        vertices=vertices,
        tets=tets,
        **_build_entities(tets, vertices, len(vertices)),
        cell_tags=np.zeros(len(tets), dtype=np.int64),
    )
    if spec.subdomain is not None:
        tags = np.asarray(spec.subdomain(mesh.barycenters))
        if tags.shape != (mesh.n_cells,):
            raise MeshError("subdomain rule must return one tag per cell")
        mesh.cell_tags = tags.astype(np.int64)
    _validate(mesh)
    return mesh


def _reorder_cells(tets, ncubes):
    # tets currently grouped perm-major ([p0 cube0, p0 cube1, ...]); regroup
    # cube-major so cell id = 6*cube + perm index (required by locate()).
    out = np.empty_like(tets)
    for p in range(6):
        out[p::6] = tets[p * ncubes:(p + 1) * ncubes]
    return out


def _build_entities(tets, vertices, nv):
    ncells = len(tets)

    pair = tets[:, LOCAL_EDGES]              # (C, 6, 2)
    lo_ = pair.min(axis=2)
    hi_ = pair.max(axis=2)
    enc = lo_.astype(np.int64) * nv + hi_
    uniq, inverse = np.unique(enc, return_inverse=True)
    cell_edges = inverse.reshape(ncells, 6)
    edges = np.column_stack([uniq // nv, uniq % nv])
    cell_edge_signs = np.where(pair[:, :, 0] < pair[:, :, 1], 1, -1).astype(np.int8)

    tri = tets[:, LOCAL_FACES]               # (C, 4, 3) outward-oriented
    tri_sorted = np.sort(tri, axis=2)
    enc_f = (tri_sorted[:, :, 0].astype(np.int64) * nv + tri_sorted[:, :, 1]) * nv + tri_sorted[:, :, 2]
    uniq_f, inv_f, counts = np.unique(enc_f, return_inverse=True, return_counts=True)
    cell_faces = inv_f.reshape(ncells, 4)
    nfaces = len(uniq_f)
    a = uniq_f // (nv * nv)
    b = (uniq_f // nv) % nv
    c = uniq_f % nv
    faces = np.column_stack([a, b, c])

    # incident cells per face, K_l = lowest incident cell id
    flat_face = cell_faces.ravel()
    flat_cell = np.repeat(np.arange(ncells), 4)
    flat_local = np.tile(np.arange(4), ncells)
    order = np.lexsort((flat_cell, flat_face))
    face_cells = np.full((nfaces, 2), -1, dtype=np.int64)
    fsorted = flat_face[order]
    csorted = flat_cell[order]
    lsorted = flat_local[order]
    first = np.searchsorted(fsorted, np.arange(nfaces), side="left")
    face_cells[:, 0] = csorted[first]
    second_mask = counts == 2
    face_cells[second_mask, 1] = csorted[first[second_mask] + 1]
    left_local = lsorted[first]

    faces_oriented = tets[face_cells[:, 0][:, None], np.asarray(LOCAL_FACES)[left_local]]
    p = vertices[faces_oriented]
    nrm = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    face_normals = nrm / np.linalg.norm(nrm, axis=1)[:, None]

    cell_face_signs = np.where(face_cells[cell_faces, 0] == np.arange(ncells)[:, None], 1, -1).astype(np.int8)

    boundary_faces = counts == 1
    boundary_edges = np.zeros(len(edges), dtype=bool)
    boundary_vertices = np.zeros(nv, dtype=bool)
    bf = faces[boundary_faces]
    if len(bf):
        be = np.concatenate([bf[:, [0, 1]], bf[:, [0, 2]], bf[:, [1, 2]]])
        enc_be = be[:, 0].astype(np.int64) * nv + be[:, 1]
        boundary_edges[np.searchsorted(uniq, np.unique(enc_be))] = True
        boundary_vertices[np.unique(bf)] = True

    return dict(
        edges=edges,
        faces=faces,
        faces_oriented=faces_oriented,
        face_normals=face_normals,
        face_cells=face_cells,
        cell_edges=cell_edges,
        cell_edge_signs=cell_edge_signs,
        cell_faces=cell_faces,
        cell_face_signs=cell_face_signs,
        boundary_faces=boundary_faces,
        boundary_edges=boundary_edges,
        boundary_vertices=boundary_vertices,
    )


def _validate(mesh):
    if np.any(mesh.jacobian_dets <= 0):
        raise MeshError("cell with non-positive Jacobian determinant")
    counts = (mesh.face_cells >= 0).sum(axis=1)
    if not (np.all(counts[mesh.boundary_faces] == 1) and np.all(counts[~mesh.boundary_faces] == 2)):
        raise MeshError("face incidence violated")
    if mesh.euler_characteristic() != 1:
        raise MeshError(f"Euler count {mesh.euler_characteristic()} != 1")


def diameter(mesh: Mesh) -> float:
    """Box diagonal length (the characteristic domain length)."""
    lo = np.asarray(mesh.spec.lower)
    hi = np.asarray(mesh.spec.upper)
    return float(np.linalg.norm(hi - lo))


def mesh_size(mesh: Mesh) -> float:
    """Max cell diameter = longest edge (cells are tetrahedra)."""
    if mesh.n_cells == 0:
        raise MeshError("empty mesh")
    d = mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]]
    return float(np.sqrt((d * d).sum(axis=1).max()))


def classify_face(mesh: Mesh, face_id: int) -> str:
    if not 0 <= face_id < mesh.n_faces:
        raise MeshError(f"face {face_id} not in mesh")
    return "boundary" if mesh.boundary_faces[face_id] else "interior"


def classify_point(mesh: Mesh, point) -> int:
    """Subdomain tag of the cell containing `point`."""
    cells, _ = locate(mesh, np.asarray(point, dtype=float).reshape(1, 3))
    return int(mesh.cell_tags[cells[0]])


def locate(mesh: Mesh, points: np.ndarray, tol: float = 1e-10):
    """Map physical points to (cell id, reference coordinates).

    Points must lie in the closed box (up to `tol` relative slack);
    outside points are rejected.
    """
    points = np.asarray(points, dtype=float)
    lo = np.asarray(mesh.spec.lower)
    hi = np.asarray(mesh.spec.upper)
    res = np.asarray(mesh.spec.resolution)
    t = (points - lo) / (hi - lo) * res
    if np.any(t < -tol * res) or np.any(t > res * (1 + tol)):
        raise MeshError("point outside mesh")
    cube = np.clip(np.floor(t).astype(np.int64), 0, res - 1)
    frac = t - cube
    # descending sort of fractional coordinates selects the Kuhn tet
    perm = np.argsort(-frac, axis=1, kind="stable")
    perm_idx = np.array([_PERM_INDEX[tuple(p)] for p in map(tuple, perm)])
    cube_id = cube[:, 0] + res[0] * (cube[:, 1] + res[1] * cube[:, 2])
    cells = 6 * cube_id + perm_idx
    v0 = mesh.vertices[mesh.tets[cells, 0]]
    xhat = np.einsum("nij,nj->ni", mesh.inverse_jacobians[cells], points - v0)
    return cells, xhat


def write_vtk(mesh: Mesh, path, cell_vectors=None, field_name="field"):
    """Legacy-VTK ASCII dump: POINTS, tetra CELLS, CELL_DATA tags.

    Field order: header, POINTS (x y z per line), CELLS (4 v0 v1 v2 v3),
    CELL_TYPES (10), CELL_DATA with `tag` scalars and optionally one
    vector field sampled at barycenters (re/im parts as two fields when
    complex).
    """
    lines = [
        "# vtk DataFile Version 3.0",
        "edgefem box mesh",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    lines += [" ".join(f"{x:.17g}" for x in p) for p in mesh.vertices]
    lines.append(f"CELLS {mesh.n_cells} {5 * mesh.n_cells}")
    lines += ["4 " + " ".join(str(v) for v in t) for t in mesh.tets]
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines += ["10"] * mesh.n_cells
    lines.append(f"CELL_DATA {mesh.n_cells}")
    lines.append("SCALARS tag int 1")
    lines.append("LOOKUP_TABLE default")
    lines += [str(int(t)) for t in mesh.cell_tags]
    if cell_vectors is not None:
        cell_vectors = np.asarray(cell_vectors)
        if cell_vectors.shape != (mesh.n_cells, 3):
            raise MeshError("cell_vectors must have shape (n_cells, 3)")
        if np.iscomplexobj(cell_vectors):
            parts = [("_re", cell_vectors.real), ("_im", cell_vectors.imag)]
        else:
            parts = [("", cell_vectors)]
        for suffix, arr in parts:
            lines.append(f"VECTORS {field_name}{suffix} double")
            lines += [" ".join(f"{x:.17g}" for x in v) for v in arr]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
