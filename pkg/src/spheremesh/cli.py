"""Command-line front end for the reconstruction pipeline.

Exit codes: 0 success, 2 invalid configuration, 3 initialization
failure (seed vertices admit no candidate), 4 I/O failure.
"""

import argparse
import json
import sys

from .growth import InitializationError
from .io import FormatError
from .pipeline import ConfigError, RunConfig, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INIT = 3
EXIT_IO = 4


def build_parser():
    p = argparse.ArgumentParser(
        prog="spheremesh",
        description="Mesh an oriented point cloud with near-uniform edge lengths "
        "by packing spheres of diameter d on the sampled surface.",
    )
    p.add_argument("--input", metavar="PATH", help="point cloud file (.ply/.xyz/.txt)")
    p.add_argument(
        "--synthetic",
        metavar="SURFACE:N,SEED",
        help="sample a built-in surface instead of reading a file, e.g. "
        "sphere:10000,42 or torus:60000,7",
    )
    p.add_argument("--edge-length", type=float, metavar="D", help="target edge length (default 0.2)")
    p.add_argument("--splat-size", type=float, metavar="S", help="global splat radius (default 0.3)")
    p.add_argument(
        "--local-splats",
        action="store_true",
        default=None,
        help="derive per-point splat radii from the local Delaunay star, capped at S",
    )
    p.add_argument("--window", type=int, metavar="W", help="border tracing window (default 8)")
    p.add_argument(
        "--max-border", type=int, metavar="B", help="leave borders of >= B half-edges as holes (default 40)"
    )
    p.add_argument(
        "--start",
        metavar='"x,y,z;x,y,z"',
        help="two seed positions; default picks a deterministic pair from the cloud",
    )
    p.add_argument(
        "--estimate-normals",
        type=int,
        metavar="K",
        help="estimate normals from K nearest neighbors when the input has none",
    )
    p.add_argument("--output", metavar="PATH", help="write the mesh (.obj or .ply)")
    p.add_argument("--report", metavar="PATH", help="write the quality report (JSON)")
    p.add_argument("--histograms", metavar="PREFIX", help="write angle/edge/quality CSVs")
    p.add_argument("--config", metavar="PATH", help="JSON config file; explicit flags win")
    return p


def _parse_synthetic(spec):
    try:
        surface, rest = spec.split(":", 1)
        parts = rest.split(",")
        n = int(parts[0])
        seed = int(parts[1]) if len(parts) > 1 else 0
    except (ValueError, IndexError):
        raise ConfigError("cannot parse --synthetic %r (expected SURFACE:N,SEED)" % (spec,))
    return surface, n, seed


def _parse_start(spec):
    try:
        a, b = spec.split(";")
        va = tuple(float(x) for x in a.split(","))
        vb = tuple(float(x) for x in b.split(","))
        if len(va) != 3 or len(vb) != 3:
            raise ValueError
    except ValueError:
        raise ConfigError('cannot parse --start %r (expected "x,y,z;x,y,z")' % (spec,))
    return va, vb


def config_from_args(args):
    file_cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError("cannot read config file: %s" % exc)
        except json.JSONDecodeError as exc:
            raise ConfigError("config file is not valid JSON: %s" % exc)

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        return file_cfg.get(key, default)

    cfg = RunConfig()
    cfg.input_path = pick(args.input, "input", None)
    synth_spec = pick(args.synthetic, "synthetic", None)
    if synth_spec is not None:
        cfg.synthetic, cfg.samples, cfg.seed = _parse_synthetic(synth_spec)
    cfg.edge_length = float(pick(args.edge_length, "edge_length", 0.2))
    cfg.splat_size = float(pick(args.splat_size, "splat_size", 0.3))
    cfg.local_splats = bool(pick(args.local_splats, "local_splats", False))
    cfg.window = int(pick(args.window, "window", 8))
    cfg.max_border = int(pick(args.max_border, "max_border", 40))
    start_spec = pick(args.start, "start", None)
    if start_spec is not None:
        cfg.start = _parse_start(start_spec) if isinstance(start_spec, str) else tuple(start_spec)
    cfg.estimate_normals_k = pick(args.estimate_normals, "estimate_normals", None)
    cfg.output_path = pick(args.output, "output", None)
    cfg.report_path = pick(args.report, "report", None)
    cfg.histogram_prefix = pick(args.histograms, "histograms", None)
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.validate()
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run(cfg)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except InitializationError as exc:
        print("initialization error: %s" % exc, file=sys.stderr)
        return EXIT_INIT
    except FormatError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print("I/O error: %s" % exc, file=sys.stderr)
        return EXIT_IO

    graph = result.graph
    print(
        "vertices: %d  edges: %d  triangles: %d  holes: %d"
        % (
            graph.num_vertices,
            graph.num_edges,
            len(result.mesh.triangles),
            len(result.mesh.holes),
        )
    )
    if result.report is not None:
        r = result.report
        print(
            "q_avg: %.4f  q_rms: %.1f%%  e_avg: %.4f  e_rms: %.1f%%  min_edge: %.6f"
            % (r.q_avg, r.q_rms, r.e_avg, r.e_rms, r.min_edge)
        )
    print(
        "manifold: %s  euler characteristic: %d"
        % (result.manifold["is_manifold_with_boundary"], result.manifold["euler_characteristic"])
    )
    if result.oversize_boxes:
        print(
            "warning: %d boxes flag the edge length as too large for this cloud"
            % len(result.oversize_boxes),
            file=sys.stderr,
        )
    for kind, path in sorted(result.artifacts.items()):
        print("wrote %s: %s" % (kind, path))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
