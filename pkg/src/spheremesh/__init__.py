"""spheremesh: isotropic surface reconstruction from oriented point clouds.

Vertices are packed on the sampled surface as non-overlapping spheres of
a user-chosen diameter d, giving a triangle mesh with a guaranteed
minimum edge length, near-uniform edges and (for well-sampled smooth
inputs) manifold connectivity.
"""

from .boxgrid import BoxGrid, build_box_grid, icosphere_directions, validate_parameter_choice
from .geometry import min_distance_bound
from .growth import GrowthGraph, InitializationError, initialize
from .io import FormatError, PointCloud, TriangleMesh, estimate_normals, load_mesh, load_point_cloud, save_mesh, save_point_cloud
from .metrics import QualityReport, aggregate, export_histograms, reconstruction_norms, triangle_quality
from .pipeline import ConfigError, RunConfig, RunResult, default_start_vertices, run
from .splats import assign_splat_sizes, local_splat_size
from .synthetic import sample_plane_uniform, sample_sphere_uniform, sample_torus_uniform
from .triangulate import triangulate_regions, validate_manifold

__version__ = "0.1.0"

__all__ = [
    "BoxGrid",
    "ConfigError",
    "FormatError",
    "GrowthGraph",
    "InitializationError",
    "PointCloud",
    "QualityReport",
    "RunConfig",
    "RunResult",
    "TriangleMesh",
    "aggregate",
    "assign_splat_sizes",
    "build_box_grid",
    "default_start_vertices",
    "estimate_normals",
    "export_histograms",
    "icosphere_directions",
    "initialize",
    "load_mesh",
    "load_point_cloud",
    "local_splat_size",
    "min_distance_bound",
    "reconstruction_norms",
    "run",
    "sample_plane_uniform",
    "sample_sphere_uniform",
    "sample_torus_uniform",
    "save_mesh",
    "save_point_cloud",
    "triangle_quality",
    "triangulate_regions",
    "validate_manifold",
    "validate_parameter_choice",
]
