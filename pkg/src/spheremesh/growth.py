"""Disk-growing engine.

Starting from two seed vertices projected onto the splats, vertices are
placed at distance exactly d from two parent vertices and at least d
from everything else.  The evolving graph is tracked as oriented
half-edge cycles (one cycle per region border); priorities decide the
insertion order and a projection test rejects edges that would cross
existing ones.  The loop is strictly sequential: every insertion
changes the feasibility of the pending candidates.

Priorities, best first: a parent with no edges (seed), a parent with a
single edge, a join of two borders, then splits ordered by decreasing
combinatorial distance between the parents along their common border.
Border tracing is window-limited: after w steps in both directions the
split/join distinction is given up and the candidate counts as a join.
Each priority bucket is a strict FIFO queue.
"""

import math
from bisect import bisect_left, insort
from collections import deque

import numpy as np

from .geometry import plane_frame, segments_cross_2d

REL_TOL = 1e-9


class InitializationError(RuntimeError):
    """Seed vertices do not admit a first candidate; pick different seeds."""


class Candidate:
    __slots__ = ("position", "parent_a", "parent_b", "splat", "priority", "demotions")

    def __init__(self, position, parent_a, parent_b, splat, priority=None):
        self.position = position
        self.parent_a = parent_a
        self.parent_b = parent_b
        self.splat = splat
        self.priority = priority
        self.demotions = 0

    def __repr__(self):
        return "Candidate(%r, parents=(%d, %d), splat=%d, prio=%r)" % (
            tuple(self.position), self.parent_a, self.parent_b, self.splat, self.priority,
        )


PRIO_SEED = 1
PRIO_LEAF = 2
PRIO_JOIN = 3


class GrowthGraph:
    """Vertices, half-edge borders and the per-priority candidate queues."""

    def __init__(self, cloud, grid, w=8):
        self.cloud = cloud
        self.grid = grid
        self.d = grid.d
        self.w = int(w)
        # per vertex
        self.positions = []
        self.normals = []
        self.frames = []
        self._pos_flat = []  # float tuples for the scalar hot paths
        self._frame_flat = []
        self.vertex_darts = []  # outgoing darts, ccw by projected angle
        self.dart_angles = []  # parallel sorted angle list
        # per dart (half-edge)
        self.he_origin = []
        self.he_twin = []
        self.he_next = []
        self.he_border = []
        # borders: id -> [representative dart or None, cached length]
        self.borders = {}
        self.isolated_border = {}  # vertex -> id of its length-0 border
        self._border_counter = 0
        # candidate queues, keyed by encoded priority
        self.queues = {}
        self.splat_vertices = {}  # splat index -> vertices within d of its disk
        self.stats = {"inserted": 0, "discarded": 0, "demoted": 0, "popped": 0}

    # -- bookkeeping helpers ------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.positions)

    @property
    def num_edges(self):
        return len(self.he_origin) // 2

    def degree(self, v):
        return len(self.vertex_darts[v])

    def head(self, dart):
        return self.he_origin[self.he_twin[dart]]

    def edge_list(self):
        """Undirected graph edges as sorted (u, v) pairs."""
        out = set()
        for h in range(len(self.he_origin)):
            u, v = self.he_origin[h], self.head(h)
            out.add((min(u, v), max(u, v)))
        return sorted(out)

    def _fresh_border(self, rep, length):
        bid = self._border_counter
        self._border_counter += 1
        self.borders[bid] = [rep, length]
        return bid

    def _register_vertex(self, position, normal):
        v = len(self.positions)
        pos = np.asarray(position, dtype=float)
        self.positions.append(pos)
        self.normals.append(np.asarray(normal, dtype=float))
        frame = plane_frame(normal)
        self.frames.append(frame)
        self._pos_flat.append((float(pos[0]), float(pos[1]), float(pos[2])))
        self._frame_flat.append(tuple(float(c) for t in frame for c in t))
        self.vertex_darts.append([])
        self.dart_angles.append([])
        self.grid.add_vertex(v, pos)
        return v

    def add_isolated_vertex(self, position, normal):
        v = self._register_vertex(position, normal)
        self.isolated_border[v] = self._fresh_border(None, 0)
        return v

    def _angle_at(self, v, target):
        px, py, pz = self._pos_flat[v]
        ax, ay, az, bx, by, bz = self._frame_flat[v]
        rx = float(target[0]) - px
        ry = float(target[1]) - py
        rz = float(target[2]) - pz
        return math.atan2(rx * bx + ry * by + rz * bz, rx * ax + ry * ay + rz * az)

    def _corner(self, v, theta):
        """Darts bracketing direction theta at v: (ccw-next, cw-next)."""
        darts = self.vertex_darts[v]
        angles = self.dart_angles[v]
        k = len(darts)
        i = bisect_left(angles, theta)
        return darts[i % k], darts[(i - 1) % k]

    def _corner_border(self, v, theta):
        """(incoming corner dart or None, border id) for direction theta at v."""
        if not self.vertex_darts[v]:
            return None, self.isolated_border[v]
        g1, _ = self._corner(v, theta)
        a_in = self.he_twin[g1]
        return a_in, self.he_border[a_in]

    # -- queue handling -------------------------------------------------------

    def split_priority(self, distance):
        """Encoded priority of a split whose parents sit `distance` border
        steps apart: larger distances come first."""
        return 4 + (self.w - distance)

    def enqueue(self, cand):
        self.queues.setdefault(cand.priority, deque()).append(cand)

    def pop_candidate(self):
        """Front of the best nonempty FIFO queue, or None when drained."""
        for key in sorted(self.queues):
            q = self.queues[key]
            if q:
                self.stats["popped"] += 1
                return q.popleft()
        return None

    def queued_count(self):
        return sum(len(q) for q in self.queues.values())

    # -- priority classification ----------------------------------------------

    def classify_priority(self, cand):
        """Current priority of a candidate.

        Seed/leaf parents short-circuit; otherwise the border slot of
        each prospective edge is located by its projected angle in the
        parent's cyclic edge order and traced up to w steps each way.
        Meeting the other slot makes the insertion a split at that
        distance; otherwise it counts as a join.
        """
        a, b = cand.parent_a, cand.parent_b
        if self.degree(a) == 0 or self.degree(b) == 0:
            return PRIO_SEED
        if self.degree(a) == 1 or self.degree(b) == 1:
            return PRIO_LEAF
        a_in, border_a = self._corner_border(a, self._angle_at(a, cand.position))
        b_in, border_b = self._corner_border(b, self._angle_at(b, cand.position))
        if border_a != border_b:
            return PRIO_JOIN
        dist = None
        nxt = self.he_next
        cur = a_in
        for k in range(1, self.w + 1):
            cur = nxt[cur]
            if cur == b_in:
                dist = k
                break
            if cur == a_in:
                break
        cur = b_in
        for k in range(1, self.w + 1):
            if dist is not None and k >= dist:
                break
            cur = nxt[cur]
            if cur == a_in:
                dist = k
                break
            if cur == b_in:
                break
        if dist is None:
            return PRIO_JOIN
        return self.split_priority(dist)

    # -- validity ---------------------------------------------------------------

    def candidate_is_valid(self, cand):
        """Distance conflict check plus the projected edge-crossing test.

        A candidate is rejected when its box has no normal, when any
        vertex sits strictly closer than d, or when either prospective
        edge, projected along the box normal, properly crosses an
        existing edge whose endpoints lie within d of the candidate both
        laterally and along the normal.
        """
        pos = cand.position
        d = self.d
        box = self.grid.box_at(pos)
        if box is None or box.box_normal is None:
            return False
        if self.grid.vertex_conflict(pos, d * (1.0 - REL_TOL)):
            return False
        normal = box.box_normal
        frame = plane_frame(normal)
        around = self.grid.vertices_near(pos, 2.0 * d)
        in_cyl = {}
        for vi in around:
            rel = self.positions[vi] - pos
            h = float(np.dot(rel, normal))
            if abs(h) > d:
                continue
            lat = rel - h * normal
            if float(np.dot(lat, lat)) > d * d:
                continue
            in_cyl[vi] = np.array([np.dot(lat, frame[0]), np.dot(lat, frame[1])])
        origin2 = np.zeros(2)
        pa2 = self._project_rel(cand.parent_a, pos, normal, frame)
        pb2 = self._project_rel(cand.parent_b, pos, normal, frame)
        for u, u2 in in_cyl.items():
            for dart in self.vertex_darts[u]:
                wv = self.head(dart)
                if wv <= u or wv not in in_cyl:
                    continue
                w2 = in_cyl[wv]
                if segments_cross_2d(origin2, pa2, u2, w2) or segments_cross_2d(
                    origin2, pb2, u2, w2
                ):
                    return False
        return True

    def _project_rel(self, v, pos, normal, frame):
        rel = self.positions[v] - pos
        lat = rel - float(np.dot(rel, normal)) * normal
        return np.array([np.dot(lat, frame[0]), np.dot(lat, frame[1])])

    # -- insertion ----------------------------------------------------------------

    def _install_dart(self, origin, angle, dart):
        i = bisect_left(self.dart_angles[origin], angle)
        self.dart_angles[origin].insert(i, angle)
        self.vertex_darts[origin].insert(i, dart)

    def insert_vertex(self, cand):
        """Add the candidate vertex and its two parent edges; rewires the
        half-edge cycles and recaches the affected border(s)."""
        a, b = cand.parent_a, cand.parent_b
        pos = np.asarray(cand.position, dtype=float)
        box = self.grid.box_at(pos)
        assert box is not None and box.box_normal is not None

        theta_a = self._angle_at(a, pos)
        theta_b = self._angle_at(b, pos)
        a_isolated = self.degree(a) == 0
        b_isolated = self.degree(b) == 0
        if a_isolated:
            border_a = self.isolated_border[a]
            slot_a = None
        else:
            g1a, g2a = self._corner(a, theta_a)
            border_a = self.he_border[self.he_twin[g1a]]
            slot_a = (g1a, g2a)
        if b_isolated:
            border_b = self.isolated_border[b]
            slot_b = None
        else:
            g1b, g2b = self._corner(b, theta_b)
            border_b = self.he_border[self.he_twin[g1b]]
            slot_b = (g1b, g2b)

        nv = self._register_vertex(pos, box.box_normal)

        base = len(self.he_origin)
        h1, h2, h3, h4 = base, base + 1, base + 2, base + 3  # a->nv, nv->a, b->nv, nv->b
        self.he_origin += [a, nv, b, nv]
        self.he_twin += [h2, h1, h4, h3]
        self.he_next += [h4, None, h2, None]
        self.he_border += [None, None, None, None]

        if a_isolated:
            self.he_next[h2] = h1
        else:
            g1a, g2a = slot_a
            self.he_next[h2] = g2a
            self.he_next[self.he_twin[g1a]] = h1
        if b_isolated:
            self.he_next[h4] = h3
        else:
            g1b, g2b = slot_b
            self.he_next[h4] = g2b
            self.he_next[self.he_twin[g1b]] = h3

        self._install_dart(a, theta_a, h1)
        self._install_dart(b, theta_b, h3)
        self._install_dart(nv, self._angle_at(nv, self.positions[a]), h2)
        self._install_dart(nv, self._angle_at(nv, self.positions[b]), h4)

        if border_a != border_b:
            # join: one merged cycle keeps border_a's identity
            len_a = self.borders[border_a][1]
            len_b = self.borders.pop(border_b)[1]
            length = self._relabel_cycle(h1, border_a)
            assert length == len_a + len_b + 4
            self.borders[border_a] = [h1, length]
        else:
            # split: the cycle through h1 keeps the id, the other is fresh
            old_len = self.borders[border_a][1]
            len1 = self._relabel_cycle(h1, border_a)
            self.borders[border_a] = [h1, len1]
            fresh = self._fresh_border(h3, 0)
            len2 = self._relabel_cycle(h3, fresh)
            self.borders[fresh] = [h3, len2]
            assert len1 + len2 == old_len + 4
        if a_isolated:
            del self.isolated_border[a]
        if b_isolated:
            del self.isolated_border[b]

        self.stats["inserted"] += 1
        return nv

    def _relabel_cycle(self, start, border_id):
        he_border = self.he_border
        nxt = self.he_next
        he_border[start] = border_id
        length = 1
        cur = nxt[start]
        while cur != start:
            he_border[cur] = border_id
            cur = nxt[cur]
            length += 1
            assert length <= len(self.he_origin), "half-edge cycle does not close"
        return length

    # -- candidate generation -------------------------------------------------------

    def spawn_candidates(self, v_idx):
        """Generate, pre-filter and enqueue candidates parented on vertex v_idx.

        For every splat within d of the vertex and every vertex already
        within d of that splat, the circle of points at distance d from
        both parents is intersected with the splat disk.  Candidates in
        distance conflict with an existing vertex are dropped right away
        (they could never become valid later).  Emission order is fixed:
        ascending splat index, then ascending partner vertex, then the
        positive quadratic root before the negative one.  Finally the
        vertex itself is recorded on its nearby splats.
        """
        pos = self.positions[v_idx]
        d = self.d
        cloud = self.cloud
        box = self.grid.box_at(pos)
        enqueued = 0
        if box is None or len(box.registered) == 0:
            return 0
        reg = box.registered
        centers = cloud.points[reg]
        snormals = cloud.normals[reg]
        radii = cloud.splat_radii[reg]
        rel = pos[None, :] - centers
        h = np.einsum("ij,ij->i", rel, snormals)
        lat = rel - h[:, None] * snormals
        ell = np.linalg.norm(lat, axis=1)
        disk_dist = np.where(ell <= radii, np.abs(h), np.hypot(h, ell - radii))
        near_splats = reg[disk_dist <= d]

        pair_splat = []
        pair_vert = []
        for s in near_splats:
            for u in self.splat_vertices.get(int(s), ()):
                if u != v_idx:
                    pair_splat.append(int(s))
                    pair_vert.append(u)
        for s in near_splats:
            self.splat_vertices.setdefault(int(s), []).append(v_idx)
        if pair_splat:
            roots, valid = self._solve_pairs(pos, pair_vert, pair_splat)
            valid &= self._conflict_free(pos, roots)
            for flat in np.nonzero(valid)[0]:
                i = flat // 2
                cand = Candidate(roots[flat].copy(), v_idx, pair_vert[i], pair_splat[i])
                cand.priority = self.classify_priority(cand)
                self.enqueue(cand)
                enqueued += 1
        return enqueued

    def _solve_pairs(self, pos, pair_vert, pair_splat):
        """Vectorized circle/splat intersection for (partner, splat) pairs.

        Returns positions of shape (2m, 3) holding the +/- roots of each
        pair interleaved, and a validity mask.  Mirrors
        geometry.candidate_circle + circle_splat_intersection.
        """
        d = self.d
        cloud = self.cloud
        m = len(pair_vert)
        others = np.array([self.positions[u] for u in pair_vert])
        sc = cloud.points[pair_splat]
        sn = cloud.normals[pair_splat]
        sr = cloud.splat_radii[pair_splat]

        diff = pos[None, :] - others
        sep = np.linalg.norm(diff, axis=1)
        ok = sep > 0.0
        disc = d * d - 0.25 * sep * sep
        ok &= disc >= 0.0
        radius = np.sqrt(np.maximum(disc, 0.0))
        ok &= radius > 0.0  # tangent spheres give a measure-zero single point
        with np.errstate(invalid="ignore", divide="ignore"):
            axis = diff / np.where(sep > 0.0, sep, 1.0)[:, None]
        centers = 0.5 * (pos[None, :] + others)

        # deterministic per-axis frames, same construction as plane_frame
        kmin = np.argmin(np.abs(axis), axis=1)
        e = np.zeros((m, 3))
        e[np.arange(m), kmin] = 1.0
        t1 = e - np.einsum("ij,ij->i", e, axis)[:, None] * axis
        n1 = np.linalg.norm(t1, axis=1)
        t1 = t1 / np.where(n1 > 0.0, n1, 1.0)[:, None]
        t2 = np.cross(axis, t1)

        c_off = np.einsum("ij,ij->i", centers - sc, sn)
        a_co = radius * np.einsum("ij,ij->i", t1, sn)
        b_co = radius * np.einsum("ij,ij->i", t2, sn)
        amp = np.hypot(a_co, b_co)
        ok &= amp > 1e-12 * radius
        with np.errstate(invalid="ignore", divide="ignore"):
            cosv = np.where(amp > 0.0, -c_off / amp, 2.0)
        ok &= np.abs(cosv) <= 1.0 + 1e-12
        grazing = 1.0 - np.abs(cosv) <= 1e-12
        phase = np.arctan2(b_co, a_co)
        delta = np.arccos(np.clip(cosv, -1.0, 1.0))

        ts = np.stack([phase + delta, phase - delta], axis=1)  # (m, 2)
        xs = (
            centers[:, None, :]
            + radius[:, None, None]
            * (np.cos(ts)[:, :, None] * t1[:, None, :] + np.sin(ts)[:, :, None] * t2[:, None, :])
        )
        lat = xs - sc[:, None, :]
        lat = lat - np.einsum("mrj,mj->mr", lat, sn)[:, :, None] * sn[:, None, :]
        on_disk = np.linalg.norm(lat, axis=2) <= (sr * (1.0 + REL_TOL))[:, None]
        valid = on_disk & ok[:, None]
        valid[:, 1] &= ~grazing  # a tangent contact yields a single root
        return xs.reshape(2 * m, 3), valid.reshape(2 * m)

    def _conflict_free(self, pos, roots):
        """Mask of candidate positions at distance >= d (with slack) from every
        existing vertex; roots lie within d of pos so a 2d ball query covers
        all possible conflicts."""
        near = self.grid.vertices_near(pos, 2.0 * self.d)
        if not near:
            return np.ones(len(roots), dtype=bool)
        vp = np.array([self.positions[i] for i in near])
        d2 = np.sum((roots[:, None, :] - vp[None, :, :]) ** 2, axis=2)
        lim = self.d * (1.0 - REL_TOL)
        return d2.min(axis=1) >= lim * lim

    # -- main loop ------------------------------------------------------------------

    def grow(self):
        """Pop, validate, reclassify, insert and spawn until the queues drain.

        Invalid candidates are discarded outright; a valid one whose
        priority went stale is demoted and requeued (never promoted, and
        at most three times) before it is finally inserted.
        """
        while True:
            cand = self.pop_candidate()
            if cand is None:
                break
            if not self.candidate_is_valid(cand):
                self.stats["discarded"] += 1
                continue
            current = self.classify_priority(cand)
            if current > cand.priority and cand.demotions < 3:
                cand.priority = current
                cand.demotions += 1
                self.stats["demoted"] += 1
                self.enqueue(cand)
                continue
            nv = self.insert_vertex(cand)
            self.spawn_candidates(nv)
        return self


def project_to_nearest_splat(q, cloud):
    """Closest point over all splat disks to q."""
    from .geometry import closest_point_on_disk

    q = np.asarray(q, dtype=float)
    rel = q[None, :] - cloud.points
    h = np.einsum("ij,ij->i", rel, cloud.normals)
    lat = rel - h[:, None] * cloud.normals
    ell = np.linalg.norm(lat, axis=1)
    radii = cloud.splat_radii
    dist = np.where(ell <= radii, np.abs(h), np.hypot(h, ell - radii))
    best = int(np.argmin(dist))
    return closest_point_on_disk(q, cloud.points[best], cloud.normals[best], radii[best])


def initialize(q, q2, cloud, grid, w=8):
    """Project the two seed positions onto their closest splats, insert them
    as edge-less vertices and enqueue the initial candidates.

    Raises InitializationError when the projected seeds are closer than
    d or at least 2d apart, or when no candidate exists between them.
    """
    if cloud.splat_radii is None:
        raise ValueError("cloud needs splat radii; run assign_splat_sizes first")
    p1 = project_to_nearest_splat(q, cloud)
    p2 = project_to_nearest_splat(q2, cloud)
    d = grid.d
    sep = float(np.linalg.norm(p1 - p2))
    if sep < d or sep >= 2.0 * d:
        raise InitializationError(
            "projected starting vertices are %.6g apart; need a separation in "
            "[d, 2d) = [%.6g, %.6g) -- pick different seeds" % (sep, d, 2.0 * d)
        )
    grid.clear_vertices()
    graph = GrowthGraph(cloud, grid, w=w)
    for p in (p1, p2):
        box = grid.box_at(p)
        if box is None or box.box_normal is None:
            raise InitializationError(
                "a starting vertex landed in a box without a normal; pick "
                "different seeds"
            )
        graph.add_isolated_vertex(p, box.box_normal)
    graph.spawn_candidates(0)  # registers the first seed on its splats
    graph.spawn_candidates(1)
    if graph.queued_count() == 0:
        raise InitializationError(
            "no feasible candidate between the starting vertices; pick "
            "different seeds or enlarge the splat size"
        )
    return graph


def check_halfedge_soundness(graph):
    """Structural audit used by the tests: twin involution, next-cycle
    closure, border labels/lengths, rotation consistency and the global
    minimum-distance invariant."""
    n_darts = len(graph.he_origin)
    for h in range(n_darts):
        assert graph.he_twin[graph.he_twin[h]] == h
    # every dart lies on exactly one closed cycle with a consistent label
    seen = [False] * n_darts
    lengths = {}
    for h in range(n_darts):
        if seen[h]:
            continue
        bid = graph.he_border[h]
        cur = h
        count = 0
        while True:
            assert not seen[cur]
            seen[cur] = True
            assert graph.he_border[cur] == bid
            cur = graph.he_next[cur]
            count += 1
            if cur == h:
                break
        lengths[bid] = count
    for bid, (rep, length) in graph.borders.items():
        if rep is None:
            assert length == 0
            continue
        assert lengths[bid] == length, (bid, lengths[bid], length)
    assert set(lengths) == {b for b, (r, _) in graph.borders.items() if r is not None}
    assert sum(lengths.values()) == n_darts == 2 * graph.num_edges
    for v, bid in graph.isolated_border.items():
        assert graph.degree(v) == 0 and graph.borders[bid][1] == 0
    # rotation consistency: next(h) == clockwise successor of twin(h)
    for v in range(graph.num_vertices):
        darts = graph.vertex_darts[v]
        k = len(darts)
        for i, g in enumerate(darts):
            incoming = graph.he_twin[g]
            assert graph.he_next[incoming] == darts[(i - 1) % k]
    # geometric invariants
    d = graph.d
    pos = np.array(graph.positions) if graph.positions else np.zeros((0, 3))
    for u, v in graph.edge_list():
        length = float(np.linalg.norm(pos[u] - pos[v]))
        assert abs(length - d) <= REL_TOL * d, (u, v, length)
    if len(pos) > 1:
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        np.fill_diagonal(dist, np.inf)
        assert dist.min() >= d * (1.0 - REL_TOL)
