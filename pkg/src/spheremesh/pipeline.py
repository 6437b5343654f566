"""End-to-end reconstruction pipeline: load or sample a cloud, build the
box grid, assign splat sizes, grow the graph from two seeds, triangulate
the regions, and write the mesh, report and histogram artifacts.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import boxgrid, growth, io, metrics, splats, synthetic, triangulate


class ConfigError(ValueError):
    """Invalid or contradictory run configuration."""


@dataclass
class RunConfig:
    input_path: str | None = None
    input_format: str | None = None
    synthetic: str | None = None  # "sphere" | "torus" | "plane"
    samples: int = 10000
    seed: int = 0
    edge_length: float = 0.2
    splat_size: float = 0.3
    local_splats: bool = False
    window: int = 8
    max_border: int = triangulate.DEFAULT_MAX_BORDER
    start: tuple | None = None  # ((x,y,z), (x,y,z)); default picked from the cloud
    estimate_normals_k: int | None = None
    output_path: str | None = None
    report_path: str | None = None
    histogram_prefix: str | None = None
    extra: dict = field(default_factory=dict)

    def validate(self):
        if (self.input_path is None) == (self.synthetic is None):
            raise ConfigError("exactly one of input path and synthetic surface is required")
        if self.synthetic is not None and self.synthetic not in ("sphere", "torus", "plane"):
            raise ConfigError("unknown synthetic surface %r" % (self.synthetic,))
        if not self.edge_length > 0.0:
            raise ConfigError("edge length must be positive")
        if not self.splat_size > 0.0:
            raise ConfigError("splat size must be positive")
        if self.window < 0:
            raise ConfigError("window size must be >= 0")
        if self.max_border < 3:
            raise ConfigError("max border length must be >= 3")
        if self.samples < 1:
            raise ConfigError("sample count must be >= 1")
        if self.start is not None and len(self.start) != 2:
            raise ConfigError("start must give exactly two vertices")


@dataclass
class RunResult:
    cloud: object
    grid: object
    graph: object
    mesh: object
    report: object
    manifold: dict
    oversize_boxes: list
    artifacts: dict


def _load_cloud(config):
    if config.synthetic == "sphere":
        return synthetic.sample_sphere_uniform(config.samples, config.seed)
    if config.synthetic == "torus":
        return synthetic.sample_torus_uniform(config.samples, config.seed)
    if config.synthetic == "plane":
        return synthetic.sample_plane_uniform(config.samples, config.seed)
    cloud = io.load_point_cloud(
        config.input_path,
        config.input_format,
        allow_missing_normals=config.estimate_normals_k is not None,
    )
    if not cloud.has_normals:
        cloud = io.estimate_normals(cloud, config.estimate_normals_k)
    return cloud


def default_start_vertices(cloud, d):
    """Deterministic seed pair: the point farthest along +z, and the point
    whose distance from it is closest to 1.5*d (so the projected pair
    lands inside the feasible [d, 2d) separation band)."""
    pts = cloud.points
    first = int(np.argmax(pts[:, 2]))
    gaps = np.abs(np.linalg.norm(pts - pts[first], axis=1) - 1.5 * d)
    gaps[first] = np.inf
    second = int(np.argmin(gaps))
    return pts[first].copy(), pts[second].copy()


def run(config):
    """Execute the full pipeline; returns a RunResult and writes any
    requested artifacts."""
    config.validate()
    cloud = _load_cloud(config)
    d = config.edge_length
    grid = boxgrid.build_box_grid(cloud, d)
    oversize = boxgrid.validate_parameter_choice(grid, cloud)
    if oversize:
        warnings.warn(
            "edge length %g looks too large: %d boxes have a point normal "
            "opposing the box normal; output may not be manifold" % (d, len(oversize)),
            stacklevel=2,
        )
    mode = "local" if config.local_splats else "global"
    cloud = splats.assign_splat_sizes(cloud, grid, mode=mode, s=config.splat_size)
    if config.start is not None:
        q1, q2 = (np.asarray(v, dtype=float) for v in config.start)
    else:
        q1, q2 = default_start_vertices(cloud, d)
    graph = growth.initialize(q1, q2, cloud, grid, w=config.window)
    graph.grow()
    mesh = triangulate.triangulate_regions(graph, config.max_border)
    manifold = triangulate.validate_manifold(mesh)
    report = metrics.aggregate(mesh, edge_bin=d / 20.0) if len(mesh.triangles) else None

    artifacts = {}
    if config.output_path:
        io.save_mesh(mesh, config.output_path)
        artifacts["mesh"] = str(config.output_path)
    if config.report_path:
        if report is None:
            raise ValueError("no triangles were produced; nothing to report")
        metrics.save_report(
            report,
            config.report_path,
            euler_characteristic=manifold["euler_characteristic"],
            hole_count=len(mesh.holes),
        )
        artifacts["report"] = str(config.report_path)
    if config.histogram_prefix:
        if report is None:
            raise ValueError("no triangles were produced; nothing to report")
        artifacts.update(metrics.export_histograms(report, config.histogram_prefix))
    return RunResult(cloud, grid, graph, mesh, report, manifold, oversize, artifacts)
