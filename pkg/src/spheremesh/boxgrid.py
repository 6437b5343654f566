"""Spatial hash of cubical boxes with side length d.

Every box stores the indices of the input points whose centers lie
within Euclidean distance d of the box cube ("registered" splats),
a per-box representative normal, and the graph vertices that currently
sit inside the box.  Only boxes with at least one registration exist in
the hash; the grid origin is anchored at the world origin so keys do
not depend on the cloud's bounding box.
"""

import math

import numpy as np

FILTER_THRESHOLD = 0.1  # minimum length of the summed normal before filtering kicks in


def icosphere_directions(subdivisions=3):
    """Unit directions from a subdivided icosahedron (642 for 3 subdivisions).

    The vertex set is antipodally symmetric and deterministic; at 642
    directions the worst-case quantization of a direction is about 4
    degrees, which is plenty for per-box representative normals.
    """
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        midpoint = {}
        new_faces = []

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts)


class Box:
    __slots__ = ("registered", "box_normal", "resident_vertices")

    def __init__(self, registered):
        self.registered = registered  # sorted point indices, post filtering
        self.box_normal = None
        self.resident_vertices = []


class BoxGrid:
    def __init__(self, d, sphere_sampling):
        if not d > 0.0:
            raise ValueError("box side length d must be positive")
        self.d = float(d)
        self.boxes = {}
        self.sphere_sampling = sphere_sampling
        self._vertex_positions = []  # grid-side copy, parallel to graph vertex ids

    def key_of(self, q):
        d = self.d
        return (
            int(math.floor(q[0] / d)),
            int(math.floor(q[1] / d)),
            int(math.floor(q[2] / d)),
        )

    def box_at(self, q):
        return self.boxes.get(self.key_of(q))

    # -- graph vertex side ----------------------------------------------

    def clear_vertices(self):
        """Reset the graph-vertex side (splat registrations stay); a new
        growth run over the same grid starts from this."""
        self._vertex_positions = []
        empty = [key for key, box in self.boxes.items() if len(box.registered) == 0]
        for key in empty:
            del self.boxes[key]
        for box in self.boxes.values():
            box.resident_vertices = []

    def add_vertex(self, index, position):
        """Record a graph vertex for neighbor queries; index must equal the
        number of vertices added so far."""
        assert index == len(self._vertex_positions)
        self._vertex_positions.append(
            (float(position[0]), float(position[1]), float(position[2]))
        )
        box = self.boxes.get(self.key_of(position))
        if box is None:
            box = Box(np.zeros(0, dtype=np.int64))
            self.boxes[self.key_of(position)] = box
        box.resident_vertices.append(index)

    def vertices_near(self, q, radius):
        """Indices of graph vertices within the closed ball of `radius` around q.

        Covered by scanning the 3x3x3 (radius <= d) or 5x5x5
        (radius <= 2d) box neighborhood; larger radii are rejected.
        """
        if radius > 2.0 * self.d:
            raise ValueError("vertices_near supports radius <= 2*d")
        reach = 1 if radius <= self.d else 2
        kx, ky, kz = self.key_of(q)
        found = []
        pos = self._vertex_positions
        boxes = self.boxes
        qx, qy, qz = float(q[0]), float(q[1]), float(q[2])
        r2 = radius * radius
        for ix in range(kx - reach, kx + reach + 1):
            for iy in range(ky - reach, ky + reach + 1):
                for iz in range(kz - reach, kz + reach + 1):
                    box = boxes.get((ix, iy, iz))
                    if box is None or not box.resident_vertices:
                        continue
                    for vi in box.resident_vertices:
                        x, y, z = pos[vi]
                        dx = x - qx
                        dy = y - qy
                        dz = z - qz
                        if dx * dx + dy * dy + dz * dz <= r2:
                            found.append(vi)
        found.sort()
        return found

    def vertex_conflict(self, q, limit):
        """True when some recorded vertex lies strictly closer than `limit`
        (limit <= d) to q; early-exits on the first hit."""
        kx, ky, kz = self.key_of(q)
        pos = self._vertex_positions
        boxes = self.boxes
        qx, qy, qz = float(q[0]), float(q[1]), float(q[2])
        lim2 = limit * limit
        for ix in (kx - 1, kx, kx + 1):
            for iy in (ky - 1, ky, ky + 1):
                for iz in (kz - 1, kz, kz + 1):
                    box = boxes.get((ix, iy, iz))
                    if box is None or not box.resident_vertices:
                        continue
                    for vi in box.resident_vertices:
                        x, y, z = pos[vi]
                        dx = x - qx
                        dy = y - qy
                        dz = z - qz
                        if dx * dx + dy * dy + dz * dz < lim2:
                            return True
        return False

    def splats_near(self, q):
        """Registered point indices of the box containing q (empty when the
        box does not exist)."""
        box = self.boxes.get(self.key_of(q))
        if box is None:
            return np.zeros(0, dtype=np.int64)
        return box.registered


def cube_distance(key, q, d):
    """Euclidean distance from q to the closed cube of box `key` (side d)."""
    q = np.asarray(q, dtype=float)
    lo = np.asarray(key, dtype=float) * d
    nearest = np.clip(q, lo, lo + d)
    return float(np.linalg.norm(q - nearest))


def filter_box_points(indices, normals):
    """Apply the average-normal filter to one box's registration list.

    The unnormalized normal sum decides: below length 0.1 every point is
    kept, otherwise points whose normal opposes the sum are dropped.
    Returns (filtered indices, kept-all flag).
    """
    sub = normals[indices]
    avg = sub.sum(axis=0)
    if np.linalg.norm(avg) < FILTER_THRESHOLD:
        return indices, True
    keep = sub @ avg >= 0.0
    return indices[keep], bool(keep.all())


def compute_box_normal(indices, normals, sphere_sampling):
    """Direction from the sampling that maximizes the smallest scalar product
    with the registered normals; ties go to the earliest sampling index."""
    dots = sphere_sampling @ normals[indices].T
    worst = dots.min(axis=1)
    return sphere_sampling[int(np.argmax(worst))]


def build_box_grid(cloud, d, sphere_sampling=None):
    """Register every point in all boxes within cube distance d of it, then
    filter each box by average normal and compute box normals."""
    if len(cloud) == 0:
        raise ValueError("cannot build a box grid over an empty cloud")
    if sphere_sampling is None:
        sphere_sampling = icosphere_directions()
    grid = BoxGrid(d, sphere_sampling)
    pts = cloud.points
    n = len(pts)
    base = np.floor(pts / d).astype(np.int64)

    key_chunks = []
    idx_chunks = []
    offsets = range(-2, 3)
    for ox in offsets:
        for oy in offsets:
            for oz in offsets:
                off = np.array([ox, oy, oz], dtype=np.int64)
                lo = (base + off) * d
                nearest = np.clip(pts, lo, lo + d)
                diff = pts - nearest
                mask = np.einsum("ij,ij->i", diff, diff) <= d * d
                if mask.any():
                    key_chunks.append(base[mask] + off)
                    idx_chunks.append(np.nonzero(mask)[0])
    keys = np.concatenate(key_chunks)
    point_idx = np.concatenate(idx_chunks)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    inverse = inverse[order]
    point_idx = point_idx[order]
    starts = np.searchsorted(inverse, np.arange(len(uniq)))
    ends = np.append(starts[1:], len(inverse))

    normals = cloud.normals
    for bi in range(len(uniq)):
        reg = np.sort(point_idx[starts[bi] : ends[bi]])
        reg, _ = filter_box_points(reg, normals)
        if len(reg) == 0:
            continue
        box = Box(reg)
        box.box_normal = compute_box_normal(reg, normals, sphere_sampling)
        grid.boxes[tuple(int(c) for c in uniq[bi])] = box
    return grid


def validate_parameter_choice(grid, cloud):
    """Box keys whose box normal opposes some registered point normal.

    A nonempty result flags the target edge length as too large for the
    sampled geometry (output may not be manifold); callers should warn
    rather than abort.
    """
    bad = []
    normals = cloud.normals
    for key, box in grid.boxes.items():
        if box.box_normal is None or len(box.registered) == 0:
            continue
        if np.min(normals[box.registered] @ box.box_normal) < 0.0:
            bad.append(key)
    bad.sort()
    return bad
