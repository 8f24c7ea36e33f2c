"""Closed triangle meshes immersed in R^4 with curvature recovery.

Geometry recovery uses two deliberately independent discretizations:

* the flow velocity comes from the cotangent Laplace-Beltrami operator
  applied to the coordinate functions (Delta_g F equals the mean curvature
  vector), which is intrinsic and works verbatim in R^4;
* the curvature monitors come from a weighted quartic jet fit of the two
  normal offset coordinates over the tangent plane of each vertex 2-ring,
  whose quadratic coefficients are the second fundamental form h_{ij,alpha}.

Keeping the two separate means monitor noise never feeds back into the
dynamics, and their agreement on exact shapes is itself a regression check.
"""

from __future__ import annotations

import json

import numpy as np

from .curvature import special_frame_fields
from .errors import DegenerateNeighborhood, NonManifoldMesh

MIN_RING2 = 6


class SurfaceMesh:
    """Triangle mesh in R^4 with per-vertex geometry caches.

    Topology (adjacency, rings, padded index tables) is validated and built
    once at construction and shared by meshes derived via with_vertices;
    position-dependent caches are filled by recover_geometry.
    """

    def __init__(self, vertices, triangles, require_closed: bool = True, _topology=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 4:
            raise ValueError("vertices must be (n, 4)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError("triangles must be (m, 3)")
        self.require_closed = require_closed
        if _topology is None:
            _topology = _build_topology(self.vertices.shape[0], self.triangles, require_closed)
        self._topo = _topology
        self.geometry_recovered = False
        self.vertex_area = None
        self.tangent = None          # (n, 4, 2)
        self.normal = None           # (n, 4, 2)
        self.shape = None            # (n, 2, 2, 2) in the vertex frame
        self.mean_curv_alpha = None  # (n, 2) jet-fit H components
        self.mean_curv_jet = None    # (n, 4) jet-fit H vector
        self.mean_curv_cot = None    # (n, 4) cotan H vector (flow velocity)
        self.frame_h = None
        self.frame_a = None
        self.frame_b = None
        self.frame_c = None

    # -- derived topology ---------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_edges(self) -> int:
        return self._topo["n_edges"]

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    @property
    def is_closed(self) -> bool:
        return self._topo["closed"]

    def with_vertices(self, vertices) -> "SurfaceMesh":
        """New mesh with the same topology and fresh geometry caches."""
        return SurfaceMesh(vertices, self.triangles, self.require_closed, _topology=self._topo)

    def interior_mask(self) -> np.ndarray:
        return self._topo["interior"]

    # -- element quantities ---------------------------------------------------

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        u = p[:, 1] - p[:, 0]
        v = p[:, 2] - p[:, 0]
        uu = np.einsum("mi,mi->m", u, u)
        vv = np.einsum("mi,mi->m", v, v)
        uv = np.einsum("mi,mi->m", u, v)
        return 0.5 * np.sqrt(np.maximum(uu * vv - uv * uv, 0.0))

    def total_area(self) -> float:
        return float(self.triangle_areas().sum())

    def min_triangle_angle(self) -> float:
        p = self.vertices[self.triangles]
        angs = []
        for i in range(3):
            u = p[:, (i + 1) % 3] - p[:, i]
            v = p[:, (i + 2) % 3] - p[:, i]
            cosang = np.einsum("mi,mi->m", u, v) / np.maximum(
                np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1), 1e-300)
            angs.append(np.arccos(np.clip(cosang, -1.0, 1.0)))
        return float(np.min(angs))


def _build_topology(n_vertices: int, triangles: np.ndarray, require_closed: bool) -> dict:
    m = triangles.shape[0]
    if triangles.min(initial=0) < 0 or triangles.max(initial=-1) >= n_vertices:
        raise NonManifoldMesh("triangle index out of range")
    used = np.zeros(n_vertices, dtype=bool)
    used[triangles.ravel()] = True
    if not used.all():
        raise NonManifoldMesh("mesh has isolated vertices")

    src = triangles[:, [0, 1, 2]].ravel()
    dst = triangles[:, [1, 2, 0]].ravel()
    directed = set(zip(src.tolist(), dst.tolist()))
    if len(directed) != 3 * m:
        raise NonManifoldMesh("duplicate directed edge: non-manifold or inconsistently oriented")
    boundary = [(a, b) for (a, b) in directed if (b, a) not in directed]
    closed = not boundary
    if require_closed and not closed:
        raise NonManifoldMesh(f"mesh has {len(boundary)} boundary edges")

    und = {tuple(sorted(e)) for e in directed}
    n_edges = len(und)
    if closed and (n_vertices - n_edges + m) not in (2, 0):
        raise NonManifoldMesh(
            f"Euler characteristic {n_vertices - n_edges + m} not a sphere or torus")

    ring1 = [set() for _ in range(n_vertices)]
    for a, b in und:
        ring1[a].add(b)
        ring1[b].add(a)
    ring2 = []
    for v in range(n_vertices):
        acc = set(ring1[v])
        for u in ring1[v]:
            acc.update(ring1[u])
        acc.discard(v)
        ring2.append(sorted(acc))
    counts2 = np.array([len(r) for r in ring2])
    if closed and (counts2 < MIN_RING2).any():
        bad = int(np.argmin(counts2))
        raise DegenerateNeighborhood(
            f"vertex {bad} has only {counts2[bad]} 2-ring neighbors (< {MIN_RING2})")

    boundary_v = np.zeros(n_vertices, dtype=bool)
    for a, b in boundary:
        boundary_v[a] = boundary_v[b] = True

    def pad(rings):
        k = max(len(r) for r in rings)
        idx = np.zeros((n_vertices, k), dtype=np.int64)
        mask = np.zeros((n_vertices, k), dtype=bool)
        for v, r in enumerate(rings):
            idx[v, :len(r)] = r
            mask[v, :len(r)] = True
        return idx, mask

    ring1_sorted = [sorted(r) for r in ring1]
    idx1, mask1 = pad(ring1_sorted)
    idx2, mask2 = pad(ring2)
    return {
        "n_edges": n_edges,
        "closed": closed,
        "interior": ~boundary_v,
        "ring1_idx": idx1, "ring1_mask": mask1,
        "ring2_idx": idx2, "ring2_mask": mask2,
    }


# ---------------------------------------------------------------------------
# geometry recovery


def _mixed_voronoi_areas(mesh: SurfaceMesh) -> np.ndarray:
    """Meyer-style mixed areas: Voronoi for non-obtuse corners, else split."""
    v = mesh.vertices
    tri = mesh.triangles
    p = v[tri]
    area = mesh.triangle_areas()
    out = np.zeros(mesh.n_vertices)
    cots = np.empty((tri.shape[0], 3))
    sq = np.empty((tri.shape[0], 3))
    for i in range(3):
        u1 = p[:, (i + 1) % 3] - p[:, i]
        u2 = p[:, (i + 2) % 3] - p[:, i]
        dot = np.einsum("mi,mi->m", u1, u2)
        cots[:, i] = dot / np.maximum(2.0 * area, 1e-300)
        e = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
        sq[:, i] = np.einsum("mi,mi->m", e, e)  # squared edge opposite corner i
    obtuse = cots < 0
    any_obtuse = obtuse.any(axis=1)
    for i in range(3):
        vor = 0.125 * (sq[:, (i + 1) % 3] * cots[:, (i + 1) % 3]
                       + sq[:, (i + 2) % 3] * cots[:, (i + 2) % 3])
        fallback = np.where(obtuse[:, i], 0.5 * area, 0.25 * area)
        contrib = np.where(any_obtuse, fallback, vor)
        np.add.at(out, tri[:, i], contrib)
    return out


def _cotan_mean_curvature(mesh: SurfaceMesh, areas: np.ndarray) -> np.ndarray:
    """Delta_g F per vertex: the discrete mean curvature vector in R^4."""
    v = mesh.vertices
    tri = mesh.triangles
    p = v[tri]
    area = np.maximum(mesh.triangle_areas(), 1e-300)
    acc = np.zeros_like(v)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        u1 = p[:, j] - p[:, i]
        u2 = p[:, k] - p[:, i]
        cot_i = np.einsum("mi,mi->m", u1, u2) / (2.0 * area)
        # corner i's cotangent weights the opposite edge (j, k)
        d = (p[:, k] - p[:, j]) * cot_i[:, None]
        np.add.at(acc, tri[:, j], d)
        np.add.at(acc, tri[:, k], -d)
    return acc / (2.0 * np.maximum(areas, 1e-300))[:, None]


def _gram_schmidt_pair(vecs: np.ndarray) -> np.ndarray:
    """Orthonormalize (n, 4, 2) column pairs in place order, batched."""
    v0 = vecs[:, :, 0]
    v0 = v0 / np.maximum(np.linalg.norm(v0, axis=1, keepdims=True), 1e-300)
    v1 = vecs[:, :, 1]
    v1 = v1 - np.einsum("ni,ni->n", v1, v0)[:, None] * v0
    v1 = v1 / np.maximum(np.linalg.norm(v1, axis=1, keepdims=True), 1e-300)
    return np.stack([v0, v1], axis=2)


def _jet_basis(x0: np.ndarray, x1: np.ndarray, nbasis: int) -> np.ndarray:
    phi = np.empty(x0.shape + (nbasis,))
    phi[..., 0] = 1.0
    phi[..., 1] = x0
    phi[..., 2] = x1
    np.multiply(x0, x0, out=phi[..., 3])
    np.multiply(x0, x1, out=phi[..., 4])
    np.multiply(x1, x1, out=phi[..., 5])
    if nbasis == 15:
        np.multiply(phi[..., 3], x0, out=phi[..., 6])
        np.multiply(phi[..., 3], x1, out=phi[..., 7])
        np.multiply(phi[..., 4], x1, out=phi[..., 8])
        np.multiply(phi[..., 5], x1, out=phi[..., 9])
        np.multiply(phi[..., 6], x0, out=phi[..., 10])
        np.multiply(phi[..., 7], x0, out=phi[..., 11])
        np.multiply(phi[..., 8], x0, out=phi[..., 12])
        np.multiply(phi[..., 9], x0, out=phi[..., 13])
        np.multiply(phi[..., 9], x1, out=phi[..., 14])
    return phi


def recover_geometry(mesh: SurfaceMesh) -> SurfaceMesh:
    """Fill per-vertex areas, frames, shape tensors and curvature fields.

    Tangent planes come from the top eigenvectors of the weighted 2-ring
    offset covariance; the second fundamental form from the quadratic
    coefficients of a weighted quartic jet fit of the two normal offsets
    over local tangent coordinates (the quartic terms absorb the
    fourth-order surface contributions that would otherwise alias into the
    curvature).  Vertices whose 2-ring is too small for the quartic basis
    fall back to the plain quadratic fit.  Modifies in place and returns
    the mesh.
    """
    v = mesh.vertices
    topo = mesh._topo
    idx2, mask2 = topo["ring2_idx"], topo["ring2_mask"]

    d = v[idx2] - v[:, None, :]                      # (n, K, 4)
    r2 = np.einsum("nki,nki->nk", d, d)
    # weight scale from the 2-ring spread; keeps the whole stencil active
    # even when the flow compresses neighborhoods anisotropically
    sigma = 0.75 * np.sum(np.sqrt(r2) * mask2, axis=1) / np.maximum(mask2.sum(axis=1), 1)
    sigma = np.maximum(sigma, 1e-300)
    w = np.exp(-r2 / (2.0 * sigma[:, None] ** 2)) * mask2

    cov = d.transpose(0, 2, 1) @ (d * w[:, :, None])
    cov = 0.5 * (cov + cov.transpose(0, 2, 1))
    eigval, eigvec = np.linalg.eigh(cov)             # ascending
    tangent = eigvec[:, :, 2:]                       # (n, 4, 2) top-2
    normal = eigvec[:, :, :2]
    # deterministic eigenvector signs
    for basis in (tangent, normal):
        comp = np.take_along_axis(basis, np.argmax(np.abs(basis), axis=1)[:, None, :], axis=1)
        basis *= np.where(comp >= 0, 1.0, -1.0)

    counts = mask2.sum(axis=1)
    if (counts < MIN_RING2).any():
        bad = int(np.argmin(counts))
        raise DegenerateNeighborhood(
            f"vertex {bad} has only {counts[bad]} usable neighbors")
    # quartic where the stencil carries enough effective weight; plain
    # quadratic where it does not (small 2-rings, collapsed weights)
    eff = w.sum(axis=1) ** 2 / np.maximum((w * w).sum(axis=1), 1e-300)
    full = (counts >= 15) & (eff >= 12.0)

    def fit_all(tan, nor):
        x = (d @ tan) / sigma[:, None, None]         # (n, K, 2)
        y = d @ nor                                  # (n, K, 2)
        coef6 = np.zeros((mesh.n_vertices, 6, 2))

        def fit(sel, nbasis):
            phi = _jet_basis(x[sel, :, 0], x[sel, :, 1], nbasis)
            phiw = phi * w[sel][:, :, None]
            mats = phi.transpose(0, 2, 1) @ phiw
            rhs = phiw.transpose(0, 2, 1) @ y[sel]
            try:
                coef = np.linalg.solve(mats, rhs)
            except np.linalg.LinAlgError as exc:
                raise DegenerateNeighborhood(f"rank-deficient jet fit: {exc}") from None
            if not np.all(np.isfinite(coef)):
                raise DegenerateNeighborhood("non-finite jet coefficients")
            coef6[sel] = coef[:, :6, :]

        if full.all():
            fit(slice(None), 15)
        else:
            if full.any():
                fit(full, 15)
            fit(~full, 6)
        return coef6

    coef6 = fit_all(tangent, normal)

    # tilt correction: the linear jet terms measure how far the covariance
    # plane sits from the true tangent plane (an O(kappa * edge) effect on
    # asymmetric stencils); absorb them into the frame and refit once
    slope = coef6[:, 1:3, :] / sigma[:, None, None]      # (n, i, alpha)
    if float(np.max(np.abs(slope))) > 1e-8:
        t_corr = tangent + np.einsum("nia,nja->nji", slope, normal)
        n_corr = normal - np.einsum("nia,nji->nja", slope, tangent)
        tangent = _gram_schmidt_pair(t_corr)
        n_corr = n_corr - tangent @ (tangent.transpose(0, 2, 1) @ n_corr)
        normal = _gram_schmidt_pair(n_corr)
        coef6 = fit_all(tangent, normal)

    s2 = sigma[:, None] ** 2
    shape = np.empty((mesh.n_vertices, 2, 2, 2))
    shape[:, 0, 0, :] = 2.0 * coef6[:, 3, :] / s2
    shape[:, 0, 1, :] = coef6[:, 4, :] / s2
    shape[:, 1, 0, :] = shape[:, 0, 1, :]
    shape[:, 1, 1, :] = 2.0 * coef6[:, 5, :] / s2

    mc_alpha = shape[:, 0, 0, :] + shape[:, 1, 1, :]
    mc_jet = np.einsum("nia,na->ni", normal, mc_alpha)

    areas = _mixed_voronoi_areas(mesh)
    mesh.vertex_area = areas
    mesh.tangent = tangent
    mesh.normal = normal
    mesh.shape = shape
    mesh.mean_curv_alpha = mc_alpha
    mesh.mean_curv_jet = mc_jet
    mesh.mean_curv_cot = _cotan_mean_curvature(mesh, areas)
    h, a, b, c = special_frame_fields(shape, mc_alpha)
    mesh.frame_h, mesh.frame_a, mesh.frame_b, mesh.frame_c = h, a, b, c
    mesh.geometry_recovered = True
    return mesh


# ---------------------------------------------------------------------------
# discrete gradients for the integral monitors


def _polar_orthogonalize(mats: np.ndarray) -> np.ndarray:
    """Closest orthogonal 2x2 matrices (rotation or reflection), closed form."""
    a = mats[..., 0, 0]
    b = mats[..., 0, 1]
    c = mats[..., 1, 0]
    d = mats[..., 1, 1]
    det = a * d - b * c
    # rotation branch: proportional to [[a+d, b-c], [c-b, a+d]]
    rp = np.hypot(a + d, b - c)
    rp = np.maximum(rp, 1e-300)
    rot = np.stack([np.stack([(a + d) / rp, (b - c) / rp], axis=-1),
                    np.stack([(c - b) / rp, (a + d) / rp], axis=-1)], axis=-2)
    # reflection branch: proportional to [[a-d, b+c], [b+c, d-a]]
    rm = np.hypot(a - d, b + c)
    rm = np.maximum(rm, 1e-300)
    ref = np.stack([np.stack([(a - d) / rm, (b + c) / rm], axis=-1),
                    np.stack([(b + c) / rm, (d - a) / rm], axis=-1)], axis=-2)
    return np.where((det >= 0)[..., None, None], rot, ref)


def vertex_gradients(mesh: SurfaceMesh, values: np.ndarray) -> np.ndarray:
    """Least-squares tangent gradient of per-vertex scalar fields.

    values is (n,) or (n, p); returns (n, 2) or (n, 2, p) gradients in each
    vertex's tangent coordinates, fitted over the 1-ring.
    """
    if not mesh.geometry_recovered:
        raise RuntimeError("recover_geometry must run first")
    squeeze = values.ndim == 1
    vals = values[:, None] if squeeze else values
    topo = mesh._topo
    idx1, mask1 = topo["ring1_idx"], topo["ring1_mask"]
    d = mesh.vertices[idx1] - mesh.vertices[:, None, :]
    x = np.einsum("nki,nia->nka", d, mesh.tangent)
    w = mask1.astype(float)
    g2 = np.einsum("nk,nka,nkb->nab", w, x, x)
    g2 = g2 + 1e-300 * np.eye(2)
    rhs = np.einsum("nka,nkp->nap", x * w[:, :, None], vals[idx1] - vals[:, None, :])
    grad = np.linalg.solve(g2, rhs)
    return grad[:, :, 0] if squeeze else grad


def shape_gradient_norm2(mesh: SurfaceMesh) -> np.ndarray:
    """Per-vertex |grad A|^2 from transported 1-ring shape differences.

    Neighbor frames are aligned to the vertex frame by polar decomposition
    of the tangent-tangent and normal-normal basis overlaps before the
    componentwise least-squares gradient.
    """
    if not mesh.geometry_recovered:
        raise RuntimeError("recover_geometry must run first")
    topo = mesh._topo
    idx1, mask1 = topo["ring1_idx"], topo["ring1_mask"]

    t_v = mesh.tangent[:, None, :, :]           # (n, 1, 4, 2)
    t_u = mesh.tangent[idx1]                    # (n, k, 4, 2)
    n_v = mesh.normal[:, None, :, :]
    n_u = mesh.normal[idx1]
    mt = _polar_orthogonalize(np.einsum("nkia,nkib->nkab", np.broadcast_to(t_v, t_u.shape), t_u))
    mn = _polar_orthogonalize(np.einsum("nkia,nkib->nkab", np.broadcast_to(n_v, n_u.shape), n_u))

    q_u = mesh.shape[idx1]                      # (n, k, 2, 2, 2)
    q_t = np.einsum("nkip,nkjq,nkab,nkpqb->nkija", mt, mt, mn, q_u)
    dq = q_t - mesh.shape[:, None, :, :, :]

    d = mesh.vertices[idx1] - mesh.vertices[:, None, :]
    x = np.einsum("nki,nia->nka", d, mesh.tangent)
    w = mask1.astype(float)
    g2 = np.einsum("nk,nka,nkb->nab", w, x, x) + 1e-300 * np.eye(2)

    # 6 independent components with multiplicities (1, 2, 1) per normal slot
    comps = np.stack([dq[:, :, 0, 0, 0], dq[:, :, 0, 1, 0], dq[:, :, 1, 1, 0],
                      dq[:, :, 0, 0, 1], dq[:, :, 0, 1, 1], dq[:, :, 1, 1, 1]], axis=2)
    rhs = np.einsum("nka,nkp->nap", x * w[:, :, None], comps)
    grad = np.linalg.solve(g2, rhs)             # (n, 2, 6)
    mult = np.array([1.0, 2.0, 1.0, 1.0, 2.0, 1.0])
    return np.einsum("nap,p->n", grad * grad, mult)


# ---------------------------------------------------------------------------
# I/O


def write_off4(mesh: SurfaceMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write("OFF4\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles} {mesh.n_edges}\n")
        for row in mesh.vertices:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")


def read_off4(path, require_closed: bool = True) -> SurfaceMesh:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if lines[0] != "OFF4":
        raise ValueError(f"not an OFF4 file: header {lines[0]!r}")
    nv, nf, _ = (int(x) for x in lines[1].split())
    verts = np.array([[float(x) for x in lines[2 + i].split()] for i in range(nv)])
    tris = []
    for i in range(nf):
        parts = lines[2 + nv + i].split()
        if parts[0] != "3":
            raise ValueError("only triangle faces supported")
        tris.append([int(p) for p in parts[1:4]])
    return SurfaceMesh(verts, np.array(tris), require_closed=require_closed)


def mesh_to_json(mesh: SurfaceMesh) -> str:
    return json.dumps({
        "vertices": mesh.vertices.tolist(),
        "triangles": mesh.triangles.tolist(),
    })


def mesh_from_json(blob: str, require_closed: bool = True) -> SurfaceMesh:
    data = json.loads(blob)
    return SurfaceMesh(np.array(data["vertices"]), np.array(data["triangles"]),
                       require_closed=require_closed)
