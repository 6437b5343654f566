"""Closed-form geometric kernels: plane frames, projections, the
two-sphere intersection circle, circle/disk intersection, and 2D
predicates used by the growth and triangulation stages.

All vectors are numpy arrays of shape (3,) (or (2,) for planar
predicates), double precision.  Comparisons use a relative tolerance of
1e-9 on top of plain floating point; there is no exact-arithmetic
fallback.
"""

import math

import numpy as np

REL_TOL = 1e-9


def unit(v):
    """Normalized copy of v; raises on (near-)zero input."""
    v = np.asarray(v, dtype=float)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return v / n


def plane_frame(normal):
    """Deterministic right-handed orthonormal tangent pair (t1, t2) of a unit normal.

    The first tangent is seeded from the coordinate axis with the
    smallest-magnitude normal component, so identical normals always
    yield identical frames.  t1 x t2 == normal.
    """
    n = np.asarray(normal, dtype=float)
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    t1 = e - np.dot(e, n) * n
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2


def project_to_plane(p, origin, normal, frame=None):
    """2D coordinates of p projected along `normal` onto the plane (origin, normal).

    Coordinates are expressed in the deterministic frame of
    plane_frame(normal) unless a precomputed (t1, t2) pair is given.
    """
    if frame is None:
        frame = plane_frame(normal)
    t1, t2 = frame
    rel = np.asarray(p, dtype=float) - origin
    return np.array([np.dot(rel, t1), np.dot(rel, t2)])


def min_distance_bound(phi, rho):
    """Lower bound on the spacing of two surface points whose normals differ by phi.

    For a surface of reach rho, points whose normals enclose an angle of
    at least phi are at least 2*rho*sin(phi/2) apart; this guides the
    choice of the target edge length.
    """
    if not 0.0 <= phi <= math.pi:
        raise ValueError("phi must lie in [0, pi], got %r" % (phi,))
    if not rho > 0.0:
        raise ValueError("rho must be positive, got %r" % (rho,))
    return 2.0 * rho * math.sin(phi / 2.0)


def candidate_circle(v, v_new, d):
    """Circle of points at distance d from both v and v_new.

    Returns (center, radius, axis) with axis the unit vector from v to
    v_new, or None when the two spheres of radius d do not intersect.
    A tangent configuration (separation exactly 2d) yields radius 0.
    Raises ValueError for coincident inputs (axis undefined).
    """
    v = np.asarray(v, dtype=float)
    v_new = np.asarray(v_new, dtype=float)
    diff = v_new - v
    sep = float(np.linalg.norm(diff))
    if sep == 0.0:
        raise ValueError("degenerate input: coincident parent vertices")
    disc = d * d - 0.25 * sep * sep
    if disc < 0.0:
        return None
    return 0.5 * (v + v_new), math.sqrt(max(disc, 0.0)), diff / sep


def circle_splat_intersection(circle, splat_center, splat_normal, splat_radius):
    """Points where a circle pierces a splat disk.

    `circle` is a (center, radius, axis) triple as returned by
    candidate_circle.  The circle generically meets the splat's plane in
    0, 1 or 2 points; those within splat_radius of the splat center are
    returned (list of (3,) arrays).  Coincident circle/splat planes are
    rejected with an empty result: that configuration has measure zero
    and the quadratic formulation assumes a transversal intersection.
    A near-tangent contact (discriminant within 1e-12 of zero) is
    reported as a single point.
    """
    center, radius, axis = circle
    m = np.asarray(splat_normal, dtype=float)
    c_off = float(np.dot(center - splat_center, m))
    if radius == 0.0:
        if abs(c_off) <= REL_TOL:
            lat = center - splat_center - c_off * m
            if np.linalg.norm(lat) <= splat_radius * (1.0 + REL_TOL):
                return [np.array(center, dtype=float)]
        return []
    e1, e2 = plane_frame(axis)
    a = radius * float(np.dot(e1, m))
    b = radius * float(np.dot(e2, m))
    amp = math.hypot(a, b)
    if amp <= 1e-12 * radius:
        # circle plane parallel (or coincident) with the splat plane
        return []
    cosv = -c_off / amp
    if abs(cosv) > 1.0 + 1e-12:
        return []
    grazing = 1.0 - abs(cosv) <= 1e-12
    cosv = max(-1.0, min(1.0, cosv))
    phase = math.atan2(b, a)
    delta = math.acos(cosv)
    if grazing:
        # tangent contact: collapse the double root
        ts = [phase + delta]
    else:
        ts = [phase + delta, phase - delta]
    out = []
    for t in ts:
        x = center + radius * (math.cos(t) * e1 + math.sin(t) * e2)
        lat = x - splat_center
        lat = lat - float(np.dot(lat, m)) * m
        if np.linalg.norm(lat) <= splat_radius * (1.0 + REL_TOL):
            out.append(x)
    return out


def point_to_disk_distance(q, center, normal, radius):
    """Euclidean distance from q to a flat disk (center, normal, radius)."""
    rel = np.asarray(q, dtype=float) - center
    h = float(np.dot(rel, normal))
    lat = rel - h * normal
    ell = float(np.linalg.norm(lat))
    if ell <= radius:
        return abs(h)
    return math.hypot(h, ell - radius)


def closest_point_on_disk(q, center, normal, radius):
    """Closest point of a flat disk to q (interior foot or rim point)."""
    rel = np.asarray(q, dtype=float) - center
    h = float(np.dot(rel, normal))
    lat = rel - h * normal
    ell = float(np.linalg.norm(lat))
    if ell <= radius:
        return center + lat
    return center + (radius / ell) * lat


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def segments_cross_2d(a1, a2, b1, b2):
    """True iff the open segments a1-a2 and b1-b2 properly intersect.

    Segments that merely share an endpoint, touch, or overlap
    collinearly do not cross.
    """
    d1 = _orient(a1, a2, b1)
    d2 = _orient(a1, a2, b2)
    d3 = _orient(b1, b2, a1)
    d4 = _orient(b1, b2, a2)
    return (d1 * d2 < 0.0) and (d3 * d4 < 0.0)


def signed_angle_2d(u, v):
    """Counterclockwise angle from u to v in (-pi, pi]; zero vectors are rejected."""
    ux, uy = float(u[0]), float(u[1])
    vx, vy = float(v[0]), float(v[1])
    if (ux == 0.0 and uy == 0.0) or (vx == 0.0 and vy == 0.0):
        raise ValueError("signed_angle_2d of zero vector")
    ang = math.atan2(ux * vy - uy * vx, ux * vx + uy * vy)
    if ang == -math.pi:
        ang = math.pi
    return ang


def ccw_angle_2d(u, v):
    """Counterclockwise angle from u to v in [0, 2*pi)."""
    ang = signed_angle_2d(u, v)
    if ang < 0.0:
        ang += 2.0 * math.pi
    return ang


def circumcenter_2d(a, b, c):
    """Circumcenter of a 2D triangle, or None when the points are (near-)collinear."""
    ax, ay = a
    bx, by = b
    cx, cy = c
    dbx, dby = bx - ax, by - ay
    dcx, dcy = cx - ax, cy - ay
    cross = dbx * dcy - dby * dcx
    scale = max(abs(dbx), abs(dby), abs(dcx), abs(dcy))
    if abs(cross) <= 1e-14 * scale * scale:
        return None
    nb = dbx * dbx + dby * dby
    nc = dcx * dcx + dcy * dcy
    ux = (dcy * nb - dby * nc) / (2.0 * cross)
    uy = (dbx * nc - dcx * nb) / (2.0 * cross)
    return np.array([ax + ux, ay + uy])
