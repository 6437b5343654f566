"""Synthetic test surfaces with analytic normals: the unit sphere, the
torus with spine radius 2 and tube radius 1, and a flat square patch.
All samplers are area-uniform and deterministic for a given seed.
"""

import numpy as np

from .io import PointCloud

TORUS_SPINE = 2.0
TORUS_TUBE = 1.0


def sample_sphere_uniform(n, seed=0):
    """n points uniform on the unit sphere; normals equal positions."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    lens = np.linalg.norm(v, axis=1)
    while np.any(lens == 0.0):  # astronomically unlikely, but stay total
        bad = lens == 0.0
        v[bad] = rng.normal(size=(int(bad.sum()), 3))
        lens = np.linalg.norm(v, axis=1)
    pts = v / lens[:, None]
    return PointCloud(pts, pts.copy())


def sample_torus_uniform(n, seed=0):
    """n points area-uniform on the torus (R=2, r=1) with outward normals.

    The minor angle is drawn by rejection with density proportional to
    R + r*cos(theta), which is the area weight of the swept surface.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    out_theta = np.empty(0)
    while len(out_theta) < n:
        m = max(2 * (n - len(out_theta)), 64)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=m)
        accept = rng.uniform(0.0, 1.0, size=m) <= (
            (TORUS_SPINE + TORUS_TUBE * np.cos(theta)) / (TORUS_SPINE + TORUS_TUBE)
        )
        out_theta = np.concatenate([out_theta, theta[accept]])
    theta = out_theta[:n]
    u = rng.uniform(0.0, 2.0 * np.pi, size=n)
    ring = TORUS_SPINE + TORUS_TUBE * np.cos(theta)
    pts = np.column_stack([ring * np.cos(u), ring * np.sin(u), TORUS_TUBE * np.sin(theta)])
    normals = np.column_stack(
        [np.cos(theta) * np.cos(u), np.cos(theta) * np.sin(u), np.sin(theta)]
    )
    return PointCloud(pts, normals)


def sample_plane_uniform(n, seed=0, extent=1.0):
    """n points uniform on the square [0, extent]^2 in the z=0 plane."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, extent, size=(n, 2))
    pts = np.column_stack([xy, np.zeros(n)])
    normals = np.tile([0.0, 0.0, 1.0], (n, 1))
    return PointCloud(pts, normals)
