"""Region triangulation by smallest-angle ear cutting, plus a manifold
report over the produced mesh.

Each region border is a closed half-edge cycle of the growth graph.
Cycles shorter than 3, and degenerate cycles that revisit a vertex
(e.g. the back-and-forth border of a dangling path), produce no
triangles.  Cycles of at least `max_border` half-edges are kept as
holes.  Everything else is reduced by repeatedly cutting the vertex
with the smallest inner angle; angles are measured after projecting the
two incident border edges onto the plane of the current ear vertex's
normal, and reflex corners (projected angle > 180 degrees) are never
cut.
"""

import math

import numpy as np

from .geometry import ccw_angle_2d
from .io import TriangleMesh

DEFAULT_MAX_BORDER = 40


def region_cycles(graph):
    """Vertex cycles of all region borders, recomputed from the half-edge
    structure, ordered by their smallest dart id."""
    n = len(graph.he_origin)
    seen = [False] * n
    cycles = []
    for h in range(n):
        if seen[h]:
            continue
        cycle = []
        cur = h
        while True:
            seen[cur] = True
            cycle.append(graph.he_origin[cur])
            cur = graph.he_next[cur]
            if cur == h:
                break
        cycles.append(cycle)
    return cycles


def _inner_angle(graph, prev_pos, v, next_pos):
    """Projected inner angle at border vertex v, in [0, 2*pi)."""
    t1, t2 = graph.frames[v]
    p = graph.positions[v]
    rel_n = next_pos - p
    rel_p = prev_pos - p
    to_next = (float(np.dot(rel_n, t1)), float(np.dot(rel_n, t2)))
    to_prev = (float(np.dot(rel_p, t1)), float(np.dot(rel_p, t2)))
    if (to_next[0] == 0.0 and to_next[1] == 0.0) or (
        to_prev[0] == 0.0 and to_prev[1] == 0.0
    ):
        return math.pi  # projection collapsed: treat as straight, never preferred
    return ccw_angle_2d(to_next, to_prev)


def _ear_cut(graph, cycle):
    """Triangles (index triples, cycle orientation) of one simple border cycle."""
    verts = list(cycle)
    triangles = []
    while len(verts) > 3:
        k = len(verts)
        angles = []
        for i, v in enumerate(verts):
            prev_pos = graph.positions[verts[(i - 1) % k]]
            next_pos = graph.positions[verts[(i + 1) % k]]
            angles.append(_inner_angle(graph, prev_pos, v, next_pos))
        cuttable = [i for i in range(k) if angles[i] <= math.pi]
        if not cuttable:
            # self-intersecting projection: proceed on angle order regardless
            cuttable = list(range(k))
        best = min(cuttable, key=lambda i: (angles[i], verts[i]))
        triangles.append(
            (verts[(best - 1) % k], verts[best], verts[(best + 1) % k])
        )
        del verts[best]
    triangles.append(tuple(verts))
    return triangles


def triangulate_regions(graph, max_border=DEFAULT_MAX_BORDER):
    """Triangulate every region border shorter than max_border; longer ones
    are emitted as holes in the returned TriangleMesh."""
    triangles = []
    holes = []
    for cycle in region_cycles(graph):
        length = len(cycle)
        if length >= max_border:
            holes.append(cycle)
            continue
        if length < 3 or len(set(cycle)) != length:
            continue  # nothing to triangulate in degenerate cycles
        triangles.extend(_ear_cut(graph, cycle))
    vertices = np.array(graph.positions) if graph.positions else np.zeros((0, 3))
    return TriangleMesh(vertices, np.array(triangles, dtype=np.int64).reshape(-1, 3), holes)


def validate_manifold(mesh):
    """Report whether the triangle complex is manifold with boundary.

    Checks that every edge has at most two incident triangles and that
    the triangles around every vertex form a single fan (closed disk or
    open half-disk).  The Euler characteristic is computed over the
    vertices actually referenced by triangles.
    """
    edge_tris = {}
    vertex_links = {}
    for ti, (i, j, k) in enumerate(mesh.triangles):
        for u, v in ((i, j), (j, k), (k, i)):
            key = (min(u, v), max(u, v))
            edge_tris.setdefault(key, []).append(ti)
        for u, v, w in ((i, j, k), (j, k, i), (k, i, j)):
            vertex_links.setdefault(int(u), []).append((int(v), int(w)))
    nonmanifold_edges = sorted(e for e, ts in edge_tris.items() if len(ts) > 2)
    nonmanifold_vertices = []
    for v, links in vertex_links.items():
        if not _is_single_fan(links):
            nonmanifold_vertices.append(v)
    nonmanifold_vertices.sort()
    referenced = {int(v) for tri in mesh.triangles for v in tri}
    boundary_edges = [e for e, ts in edge_tris.items() if len(ts) == 1]
    euler = len(referenced) - len(edge_tris) + len(mesh.triangles)
    return {
        "is_manifold_with_boundary": not nonmanifold_edges and not nonmanifold_vertices,
        "nonmanifold_edges": nonmanifold_edges,
        "nonmanifold_vertices": nonmanifold_vertices,
        "boundary_edge_count": len(boundary_edges),
        "is_closed": not boundary_edges and len(mesh.triangles) > 0,
        "euler_characteristic": euler,
    }


def _is_single_fan(links):
    """True iff the link edges form one simple open path or one simple cycle."""
    degree = {}
    for a, b in links:
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) + 1
        if degree[a] > 2 or degree[b] > 2:
            return False
    nodes = len(degree)
    edges = len(links)
    ends = sum(1 for c in degree.values() if c == 1)
    if edges == nodes and ends == 0:
        closed = True
    elif edges == nodes - 1 and ends == 2:
        closed = False
    else:
        return False
    # connectivity: walk the link
    adj = {}
    for a, b in links:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    start = next(iter(adj)) if closed else next(n for n, c in degree.items() if c == 1)
    seen = {start}
    stack = [start]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == nodes
