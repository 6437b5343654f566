"""Point-cloud and mesh containers plus text-format readers/writers.

Supported formats are ascii PLY (x, y, z, nx, ny, nz vertex properties),
OBJ (v/f records, 1-based indices) and plain xyz-normals text (six
whitespace-separated reals per line).  Binary formats are out of scope.
"""

import os

import numpy as np

NORMAL_SLACK = 1e-3  # input normals this far from unit length are renormalized


class FormatError(ValueError):
    """Raised for unparseable or contract-violating input files."""


class PointCloud:
    """Input points with unit normals and optional per-point splat radii."""

    def __init__(self, points, normals=None, splat_radii=None):
        self.points = np.ascontiguousarray(points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(self.points)):
            raise FormatError("point cloud contains non-finite coordinates")
        if normals is not None:
            normals = np.ascontiguousarray(normals, dtype=float).reshape(-1, 3)
            if normals.shape != self.points.shape:
                raise ValueError("points and normals must have equal length")
            if not np.all(np.isfinite(normals)):
                raise FormatError("point cloud contains non-finite normals")
            lens = np.linalg.norm(normals, axis=1)
            if np.any(np.abs(lens - 1.0) > 1e-9):
                raise ValueError("normals must be unit length")
        self.normals = normals
        if splat_radii is not None:
            splat_radii = np.ascontiguousarray(splat_radii, dtype=float).reshape(-1)
            if splat_radii.shape[0] != len(self.points):
                raise ValueError("splat_radii length mismatch")
            if np.any(splat_radii <= 0.0):
                raise ValueError("splat radii must be positive")
        self.splat_radii = splat_radii

    def __len__(self):
        return len(self.points)

    @property
    def has_normals(self):
        return self.normals is not None

    def with_splat_radii(self, radii):
        return PointCloud(self.points, self.normals, radii)


class TriangleMesh:
    """Triangle connectivity over a shared vertex array, plus untriangulated
    border cycles kept as holes."""

    def __init__(self, vertices, triangles, holes=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64).reshape(-1, 3)
        self.holes = [list(map(int, h)) for h in (holes or [])]
        n = len(self.vertices)
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= n):
            raise ValueError("triangle index out of range")
        for h in self.holes:
            if any(i < 0 or i >= n for i in h):
                raise ValueError("hole index out of range")
        seen = set()
        for i, j, k in self.triangles:
            if i == j or j == k or k == i:
                raise ValueError("triangle with repeated vertex")
            key = _canonical_triangle(i, j, k)
            if key in seen:
                raise ValueError("duplicate triangle %r" % (key,))
            seen.add(key)

    def edge_array(self):
        """Unique undirected edges referenced by triangles, as an (m, 2) array."""
        if len(self.triangles) == 0:
            return np.zeros((0, 2), dtype=np.int64)
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e = np.sort(e, axis=1)
        return np.unique(e, axis=0)


def _canonical_triangle(i, j, k):
    # rotation-invariant key; orientation-reversed copies stay distinct
    tri = (int(i), int(j), int(k))
    r = tri.index(min(tri))
    return tri[r:] + tri[:r]


def _infer_format(path, kind):
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".ply":
        return "ply-ascii"
    if ext == ".obj" and kind == "mesh":
        return "obj"
    if kind == "cloud" and ext in (".xyz", ".txt"):
        return "xyz-normals"
    raise FormatError("cannot infer %s format from %r" % (kind, path))


# -- point clouds ------------------------------------------------------------


def load_point_cloud(path, fmt=None, allow_missing_normals=False):
    """Load a point cloud from an ascii PLY or xyz-normals file.

    Normals within 1e-3 of unit length are renormalized; anything
    further off is rejected.  Without `allow_missing_normals`, a file
    lacking normal data raises FormatError (callers that plan to run
    normal estimation pass True and receive a cloud with normals=None).
    """
    fmt = fmt or _infer_format(path, "cloud")
    if fmt == "ply-ascii":
        pts, nrm = _read_ply_cloud(path)
    elif fmt == "xyz-normals":
        pts, nrm = _read_xyz(path)
    else:
        raise FormatError("unknown point cloud format %r" % (fmt,))
    if nrm is None:
        if not allow_missing_normals:
            raise FormatError(
                "%s has no normals; supply them or request normal estimation" % (path,)
            )
        return PointCloud(pts)
    nrm = np.asarray(nrm, dtype=float)
    if not np.all(np.isfinite(nrm)):
        raise FormatError("non-finite normal components in %s" % (path,))
    lens = np.linalg.norm(nrm, axis=1)
    if np.any(np.abs(lens - 1.0) > NORMAL_SLACK):
        raise FormatError("normals deviate from unit length by more than %g" % NORMAL_SLACK)
    return PointCloud(pts, nrm / lens[:, None])


def _read_xyz(path):
    pts, nrm = [], []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) < 6:
                raise FormatError("%s:%d: expected six reals per line" % (path, ln))
            try:
                vals = [float(x) for x in parts[:6]]
            except ValueError:
                raise FormatError("%s:%d: unparseable number" % (path, ln))
            pts.append(vals[:3])
            nrm.append(vals[3:])
    if not pts:
        raise FormatError("%s: empty point cloud" % (path,))
    pts = np.array(pts)
    if not np.all(np.isfinite(pts)):
        raise FormatError("%s: non-finite coordinates" % (path,))
    return pts, np.array(nrm)


def _read_ply_header(fh, path):
    if fh.readline().strip() != "ply":
        raise FormatError("%s: missing ply magic" % (path,))
    elements = []  # (name, count, [property names])
    fmt_seen = False
    while True:
        line = fh.readline()
        if not line:
            raise FormatError("%s: truncated header" % (path,))
        parts = line.split()
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "format":
            if parts[1] != "ascii":
                raise FormatError("%s: only ascii PLY is supported" % (path,))
            fmt_seen = True
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise FormatError("%s: property before element" % (path,))
            if parts[1] == "list":
                elements[-1][2].append(("list", parts[4]))
            else:
                elements[-1][2].append(("scalar", parts[2]))
        elif parts[0] == "end_header":
            break
    if not fmt_seen:
        raise FormatError("%s: missing format line" % (path,))
    return elements


def _read_ply_cloud(path):
    with open(path) as fh:
        elements = _read_ply_header(fh, path)
        pts = nrm = None
        for name, count, props in elements:
            rows = [fh.readline().split() for _ in range(count)]
            if name != "vertex":
                continue
            names = [p[1] for p in props]
            try:
                ix = [names.index(c) for c in ("x", "y", "z")]
            except ValueError:
                raise FormatError("%s: vertex element lacks x/y/z" % (path,))
            try:
                data = np.array([[float(v) for v in row] for row in rows], dtype=float)
            except ValueError:
                raise FormatError("%s: unparseable vertex data" % (path,))
            if count and data.shape[1] != len(names):
                raise FormatError("%s: vertex row width mismatch" % (path,))
            pts = data[:, ix] if count else np.zeros((0, 3))
            if all(c in names for c in ("nx", "ny", "nz")):
                jx = [names.index(c) for c in ("nx", "ny", "nz")]
                nrm = data[:, jx] if count else np.zeros((0, 3))
    if pts is None or len(pts) == 0:
        raise FormatError("%s: no vertex element" % (path,))
    if not np.all(np.isfinite(pts)):
        raise FormatError("%s: non-finite coordinates" % (path,))
    return pts, nrm


def save_point_cloud(cloud, path, fmt=None):
    """Write a cloud (with normals) as ascii PLY or xyz-normals text."""
    fmt = fmt or _infer_format(path, "cloud")
    if not cloud.has_normals:
        raise ValueError("cannot save a cloud without normals")
    n = len(cloud)
    with open(path, "w") as fh:
        if fmt == "ply-ascii":
            fh.write("ply\nformat ascii 1.0\n")
            fh.write("element vertex %d\n" % n)
            for c in ("x", "y", "z", "nx", "ny", "nz"):
                fh.write("property float %s\n" % c)
            fh.write("end_header\n")
            for p, m in zip(cloud.points, cloud.normals):
                fh.write(_fmt_row(*p, *m))
        elif fmt == "xyz-normals":
            for p, m in zip(cloud.points, cloud.normals):
                fh.write(_fmt_row(*p, *m))
        else:
            raise FormatError("unknown point cloud format %r" % (fmt,))


def _fmt_row(*vals):
    return " ".join("%.9f" % v for v in vals) + "\n"


# -- normal estimation -------------------------------------------------------


def estimate_normals(cloud, k):
    """PCA normals over k nearest neighbors, oriented by propagation.

    The normal at each point is the smallest-eigenvalue eigenvector of
    the neighborhood covariance.  Signs are made locally consistent by
    walking a minimum spanning tree of the k-NN graph (edge weight
    1 - |n_i . n_j|), seeded at the point with the largest z whose
    normal is flipped towards +z.  Orientation is best effort: closed
    shapes with thin gaps can still end up globally flipped.
    """
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import breadth_first_order, minimum_spanning_tree
    from scipy.spatial import cKDTree

    if k < 3:
        raise ValueError("k must be at least 3")
    pts = cloud.points
    n = len(pts)
    if n < k + 1:
        raise ValueError("need at least k+1 points, got %d" % n)
    tree = cKDTree(pts)
    _, idx = tree.query(pts, k=k + 1)
    normals = np.empty((n, 3))
    for i in range(n):
        nb = pts[idx[i]]
        cov = np.cov(nb.T)
        w, v = np.linalg.eigh(cov)
        if w[1] <= 1e-12 * max(w[2], 1e-300):
            raise ValueError("degenerate covariance at point %d (collinear neighborhood)" % i)
        normals[i] = v[:, 0]
    normals /= np.linalg.norm(normals, axis=1)[:, None]

    # orient along a spanning structure of the neighbor graph
    rows = np.repeat(np.arange(n), k)
    cols = idx[:, 1:].reshape(-1)
    dots = np.abs(np.einsum("ij,ij->i", normals[rows], normals[cols]))
    weights = 1.0 + 1e-9 - dots  # strictly positive so the MST keeps every edge
    graph = coo_matrix((weights, (rows, cols)), shape=(n, n))
    mst = minimum_spanning_tree(graph)
    sym = mst + mst.T
    seed = int(np.argmax(pts[:, 2]))
    if normals[seed, 2] < 0.0:
        normals[seed] = -normals[seed]
    order, parents = breadth_first_order(sym, seed, directed=False)
    for node in order:
        par = parents[node]
        if par < 0:
            continue
        if np.dot(normals[node], normals[par]) < 0.0:
            normals[node] = -normals[node]
    return PointCloud(pts, normals, cloud.splat_radii)


# -- meshes ------------------------------------------------------------------


def save_mesh(mesh, path, fmt=None):
    """Write a TriangleMesh as OBJ or ascii PLY.

    Holes (untriangulated border cycles) are kept: as `# hole ...`
    comment lines in OBJ and as a dedicated `hole` element in PLY, both
    with the same index base as faces.
    """
    fmt = fmt or _infer_format(path, "mesh")
    if fmt == "obj":
        with open(path, "w") as fh:
            for v in mesh.vertices:
                fh.write("v %.9f %.9f %.9f\n" % tuple(v))
            for t in mesh.triangles:
                fh.write("f %d %d %d\n" % (t[0] + 1, t[1] + 1, t[2] + 1))
            for h in mesh.holes:
                fh.write("# hole " + " ".join(str(i + 1) for i in h) + "\n")
    elif fmt == "ply-ascii":
        with open(path, "w") as fh:
            fh.write("ply\nformat ascii 1.0\n")
            fh.write("element vertex %d\n" % len(mesh.vertices))
            for c in ("x", "y", "z"):
                fh.write("property float %s\n" % c)
            fh.write("element face %d\n" % len(mesh.triangles))
            fh.write("property list uchar int vertex_indices\n")
            fh.write("element hole %d\n" % len(mesh.holes))
            fh.write("property list int int vertex_indices\n")
            fh.write("end_header\n")
            for v in mesh.vertices:
                fh.write("%.9f %.9f %.9f\n" % tuple(v))
            for t in mesh.triangles:
                fh.write("3 %d %d %d\n" % tuple(t))
            for h in mesh.holes:
                fh.write("%d " % len(h) + " ".join(str(i) for i in h) + "\n")
    else:
        raise FormatError("unknown mesh format %r" % (fmt,))


def load_mesh(path, fmt=None):
    """Read back a mesh written by save_mesh (OBJ or ascii PLY)."""
    fmt = fmt or _infer_format(path, "mesh")
    if fmt == "obj":
        verts, tris, holes = [], [], []
        with open(path) as fh:
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                if parts[0] == "v":
                    verts.append([float(x) for x in parts[1:4]])
                elif parts[0] == "f":
                    tris.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
                elif parts[0] == "#" and parts[1:2] == ["hole"]:
                    holes.append([int(x) - 1 for x in parts[2:]])
        return TriangleMesh(np.array(verts).reshape(-1, 3), tris, holes)
    if fmt == "ply-ascii":
        with open(path) as fh:
            elements = _read_ply_header(fh, path)
            verts, tris, holes = [], [], []
            for name, count, props in elements:
                for _ in range(count):
                    row = fh.readline().split()
                    if name == "vertex":
                        verts.append([float(x) for x in row[:3]])
                    elif name == "face":
                        tris.append([int(x) for x in row[1 : 1 + int(row[0])]])
                    elif name == "hole":
                        holes.append([int(x) for x in row[1 : 1 + int(row[0])]])
        return TriangleMesh(np.array(verts).reshape(-1, 3), tris, holes)
    raise FormatError("unknown mesh format %r" % (fmt,))
