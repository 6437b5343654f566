"""Per-point splat radii from the local Delaunay star.

Neighbors registered to a point's box are rotated into its tangent
plane, cyclically sorted, and fanned into a central triangulation.
Neighbors whose central edge the Delaunay criterion would flip are
dropped, and the splat radius is the distance to the farthest
circumcenter of the surviving fan (the local Voronoi vertices), capped
at the global splat size.  Sparse or degenerate neighborhoods fall back
to the global size.
"""

import numpy as np

from .geometry import plane_frame


def rotate_to_tangent(p, normal, q):
    """Rotate q about p (within the plane spanned by q-p and the normal) into
    the tangent plane; returns distance-preserving 2D coordinates, or None
    when q-p has no tangential component."""
    rel = np.asarray(q, dtype=float) - p
    r = float(np.linalg.norm(rel))
    if r == 0.0:
        return None
    h = float(np.dot(rel, normal))
    tang = rel - h * normal
    ell = float(np.linalg.norm(tang))
    if ell <= 1e-9 * r:
        return None
    t1, t2 = plane_frame(normal)
    return (r / ell) * np.array([np.dot(tang, t1), np.dot(tang, t2)])


def _rotate_neighbors(p, normal, neighbors):
    """Vectorized rotate_to_tangent over an (m, 3) block; returns (pos2d,
    angles, dists) for the non-degenerate rows, angle-sorted with ties
    broken by distance."""
    rel = neighbors - p
    r = np.linalg.norm(rel, axis=1)
    h = rel @ normal
    tang = rel - np.outer(h, normal)
    ell = np.linalg.norm(tang, axis=1)
    ok = (r > 0.0) & (ell > 1e-9 * r)
    if not ok.any():
        return None
    t1, t2 = plane_frame(normal)
    u = tang[ok] @ t1
    v = tang[ok] @ t2
    scale = r[ok] / ell[ok]
    pos = np.column_stack([u * scale, v * scale])
    ang = np.arctan2(pos[:, 1], pos[:, 0])
    order = np.lexsort((r[ok], ang))
    return pos[order], ang[order], r[ok][order]


def _delaunay_filter(pos, ang, dist):
    """Boolean mask of neighbors that survive the central-edge flip test.

    Neighbors angularly hidden behind a closer collinear one go first;
    then, per round, every neighbor whose central edge is currently
    flippable (its fan quad is strictly convex and the opposite neighbor
    lies strictly inside the circumcircle) is removed until stable.
    Cocircular quads are left alone: conservative retention keeps the
    disk coverage property.
    """
    m = len(pos)
    # occlusion: within a run of equal angles only the nearest survives
    # (the cyclic sort already orders runs by distance)
    prev_ang = np.concatenate(([ang[-1]], ang[:-1]))
    prev_dist = np.concatenate(([dist[-1]], dist[:-1]))
    dang = np.mod(ang - prev_ang, 2.0 * np.pi)
    occluded = (np.minimum(dang, 2.0 * np.pi - dang) < 1e-12) & (dist >= prev_dist)
    idx = np.nonzero(~occluded)[0]

    x = pos[:, 0]
    y = pos[:, 1]
    eps = 1e-9 * float(np.abs(pos).max()) ** 4
    while len(idx) >= 3:
        k = len(idx)
        ip = np.empty(k, dtype=idx.dtype)
        ip[0] = idx[-1]
        ip[1:] = idx[:-1]
        inx = np.empty(k, dtype=idx.dtype)
        inx[-1] = idx[0]
        inx[:-1] = idx[1:]
        ax, ay = x[ip], y[ip]  # prev
        bx, by = x[idx], y[idx]  # cur
        cx, cy = x[inx], y[inx]  # next
        # quad (0, prev, cur, next) is strictly convex iff the segments
        # (prev, next) and (0, cur) properly cross
        d1 = (bx * ay - by * ax) * (bx * cy - by * cx)
        d2 = ((cx - ax) * (-ay) - (cy - ay) * (-ax)) * (
            (cx - ax) * (by - ay) - (cy - ay) * (bx - ax)
        )
        convex = (d1 < 0.0) & (d2 < 0.0)
        # incircle(origin, prev, cur, next): positive (after orientation
        # correction) iff next lies strictly inside the circumcircle of
        # the fan triangle (0, prev, cur)
        adx, ady = -cx, -cy
        ad2 = cx * cx + cy * cy
        bdx, bdy = ax - cx, ay - cy
        bd2 = bdx * bdx + bdy * bdy
        cdx, cdy = bx - cx, by - cy
        cd2 = cdx * cdx + cdy * cdy
        det = (
            adx * (bdy * cd2 - cdy * bd2)
            - ady * (bdx * cd2 - cdx * bd2)
            + ad2 * (bdx * cdy - cdx * bdy)
        )
        det = np.where(ax * by - ay * bx >= 0.0, det, -det)
        flips = convex & (det > eps)
        if not flips.any():
            break
        idx = idx[~flips]
    alive = np.zeros(m, dtype=bool)
    alive[idx] = True
    return alive


def local_splat_size(point_index, grid, cloud, fallback):
    """Distance from a point to the farthest Voronoi vertex of its filtered
    tangent-plane star; `fallback` when fewer than 3 usable neighbors
    remain.  May exceed the global size (callers cap it)."""
    p = cloud.points[point_index]
    normal = cloud.normals[point_index]
    box = grid.box_at(p)
    if box is None:
        return fallback
    nb_idx = box.registered[box.registered != point_index]
    if len(nb_idx) < 3:
        return fallback
    rotated = _rotate_neighbors(p, normal, cloud.points[nb_idx])
    if rotated is None:
        return fallback
    pos, ang, dist = rotated
    alive = _delaunay_filter(pos, ang, dist)
    survivors = pos[alive]
    if len(survivors) < 3:
        return fallback
    return _farthest_circumcenter(survivors)


def _farthest_circumcenter(pos):
    nxt = np.roll(pos, -1, axis=0)
    cross = pos[:, 0] * nxt[:, 1] - pos[:, 1] * nxt[:, 0]
    scale = np.maximum(np.abs(pos).max(axis=1), np.abs(nxt).max(axis=1))
    ok = np.abs(cross) > 1e-14 * scale * scale
    if not ok.all():
        return np.inf  # a degenerate fan triangle has no circumcenter
    na = np.einsum("ij,ij->i", pos, pos)
    nb = np.einsum("ij,ij->i", nxt, nxt)
    ux = (nxt[:, 1] * na - pos[:, 1] * nb) / (2.0 * cross)
    uy = (pos[:, 0] * nb - nxt[:, 0] * na) / (2.0 * cross)
    return float(np.sqrt(ux * ux + uy * uy).max())


def assign_splat_sizes(cloud, grid=None, mode="global", s=None):
    """Return a copy of the cloud with splat radii set.

    mode "global" gives every point radius s; mode "local" computes
    per-point sizes from the Delaunay star (requires a built grid) and
    caps them at s.
    """
    if s is None or not s > 0.0:
        raise ValueError("splat size s must be positive")
    n = len(cloud)
    if mode == "global":
        return cloud.with_splat_radii(np.full(n, float(s)))
    if mode != "local":
        raise ValueError("unknown splat mode %r" % (mode,))
    if grid is None:
        raise ValueError("local splat sizes require a built box grid")
    radii = np.empty(n)
    for i in range(n):
        radii[i] = min(local_splat_size(i, grid, cloud, s), s)
    return cloud.with_splat_radii(radii)
