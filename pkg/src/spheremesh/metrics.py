"""Triangle quality and edge statistics, histograms, and the analytic
reconstruction norms for the synthetic sphere/torus experiments.

Quality of a triangle with area A and edge lengths l1, l2, l3 is
4*sqrt(3)*A / (l1^2 + l2^2 + l3^2): scale invariant, 1 for equilateral
triangles and 0 for slivers.  The RMS deviations are reported in
percent of the respective mean.
"""

import json
import math

import numpy as np

SQRT3 = math.sqrt(3.0)


def triangle_quality(a, b, c):
    """Scale-invariant quality in [0, 1]; degenerate triangles score 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    ab = b - a
    ac = c - a
    bc = c - b
    denom = float(np.dot(ab, ab) + np.dot(ac, ac) + np.dot(bc, bc))
    if denom == 0.0:
        return 0.0
    area = 0.5 * float(np.linalg.norm(np.cross(ab, ac)))
    return 4.0 * SQRT3 * area / denom


def _triangle_arrays(mesh):
    v = mesh.vertices
    t = mesh.triangles
    return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]


def triangle_qualities(mesh):
    a, b, c = _triangle_arrays(mesh)
    ab, ac, bc = b - a, c - a, c - b
    denom = (
        np.einsum("ij,ij->i", ab, ab)
        + np.einsum("ij,ij->i", ac, ac)
        + np.einsum("ij,ij->i", bc, bc)
    )
    area = 0.5 * np.linalg.norm(np.cross(ab, ac), axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(denom > 0.0, 4.0 * SQRT3 * area / denom, 0.0)
    return q


def triangle_angles_deg(mesh):
    """All interior angles of all triangles, in degrees."""
    a, b, c = _triangle_arrays(mesh)
    out = []
    for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
        u = q - p
        v = r - p
        cosv = np.einsum("ij,ij->i", u, v) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
        )
        out.append(np.degrees(np.arccos(np.clip(cosv, -1.0, 1.0))))
    return np.concatenate(out)


def edge_lengths(mesh):
    """Lengths of the unique undirected edges of the mesh."""
    e = mesh.edge_array()
    return np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1)


def histogram(values, bin_width):
    """(bin_lowers, counts) with bins [k*w, (k+1)*w); both empty for no data."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    bins = np.floor(values / bin_width).astype(np.int64)
    uniq, counts = np.unique(bins, return_counts=True)
    return uniq * bin_width, counts


class QualityReport:
    """Aggregate statistics over one mesh.

    angle histogram uses 1 degree bins, the quality histogram 0.01 bins,
    and the edge histogram edge_bin wide bins (a twentieth of the target
    edge length when the caller provides one, else of the minimum edge).
    """

    def __init__(self, mesh, edge_bin=None):
        if len(mesh.triangles) == 0:
            raise ValueError("cannot aggregate an empty mesh")
        q = triangle_qualities(mesh)
        e = edge_lengths(mesh)
        self.triangle_count = int(len(mesh.triangles))
        self.q_avg = float(q.mean())
        self.q_rms = 100.0 / self.q_avg * float(np.sqrt(np.mean((q - self.q_avg) ** 2)))
        self.e_avg = float(e.mean())
        self.e_rms = 100.0 / self.e_avg * float(np.sqrt(np.mean((e - self.e_avg) ** 2)))
        self.min_edge = float(e.min())
        self.max_edge = float(e.max())
        if edge_bin is None:
            edge_bin = self.min_edge / 20.0
        self.edge_bin = float(edge_bin)
        self.angle_hist = histogram(triangle_angles_deg(mesh), 1.0)
        self.edge_hist = histogram(e, self.edge_bin)
        self.quality_hist = histogram(q, 0.01)

    def as_dict(self, euler_characteristic=None, hole_count=None):
        out = {
            "triangles": self.triangle_count,
            "q_avg": self.q_avg,
            "q_rms": self.q_rms,
            "e_avg": self.e_avg,
            "e_rms": self.e_rms,
            "min_edge": self.min_edge,
            "max_edge": self.max_edge,
        }
        if euler_characteristic is not None:
            out["euler_characteristic"] = int(euler_characteristic)
        if hole_count is not None:
            out["hole_count"] = int(hole_count)
        return out


def aggregate(mesh, edge_bin=None):
    return QualityReport(mesh, edge_bin=edge_bin)


def reconstruction_norms(vertices, surface):
    """Per-vertex surface norms: distance from the origin for the unit
    sphere, distance from the radius-2 circle in the xy-plane for the
    torus.  A vertex exactly on the surface has norm 1."""
    v = np.asarray(vertices, dtype=float).reshape(-1, 3)
    if surface == "unit_sphere":
        norms = np.linalg.norm(v, axis=1)
    elif surface == "torus":
        ring = np.hypot(v[:, 0], v[:, 1]) - 2.0
        norms = np.hypot(ring, v[:, 2])
    else:
        raise ValueError("unknown surface %r" % (surface,))
    return {
        "min": float(norms.min()),
        "max": float(norms.max()),
        "mean": float(norms.mean()),
        "values": norms,
    }


def _write_hist_csv(path, hist):
    lowers, counts = hist
    with open(path, "w") as fh:
        fh.write("bin_lower,count\n")
        for lo, c in zip(lowers, counts):
            fh.write("%.9g,%d\n" % (lo, c))


def export_histograms(report, prefix):
    """Write <prefix>angles.csv, <prefix>edges.csv and <prefix>quality.csv."""
    paths = {
        "angles": str(prefix) + "angles.csv",
        "edges": str(prefix) + "edges.csv",
        "quality": str(prefix) + "quality.csv",
    }
    _write_hist_csv(paths["angles"], report.angle_hist)
    _write_hist_csv(paths["edges"], report.edge_hist)
    _write_hist_csv(paths["quality"], report.quality_hist)
    return paths


def save_report(report, path, euler_characteristic=None, hole_count=None):
    with open(path, "w") as fh:
        json.dump(report.as_dict(euler_characteristic, hole_count), fh, indent=2, sort_keys=True)
        fh.write("\n")
