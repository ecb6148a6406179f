"""Command-line front end.

Every stage reads and writes the plain-text interchange formats inside the
output directory, so stages can be rerun independently::

    gfp build-graph --edges follows.tsv --out run/
    gfp qualities --activity tweets.tsv --out run/
    gfp superiority --out run/
    gfp stats --out run/
    gfp pipeline --edges follows.tsv --activity tweets.tsv --out run/
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import activity, graph, synth
from .errors import EmptyGraphError, FeasibilityError, GFPError, ParseError, RankCouplingError
from .pipeline import Bins, InvariantError, Outputs, run_stats, run_superiority, sha256, write_json
from .superiority import AttributeTable

log = logging.getLogger("gfp")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DEPENDENCY = 4
EXIT_INVARIANT = 5

OUT_ENV = "GFP_OUT"

GRAPH_FILE = "graph.tsv"
NODES_FILE = "nodes.txt"
QUALITIES_FILE = "qualities.tsv"


class DependencyMissing(GFPError):
    def __init__(self, path: Path, stage: str):
        self.path = path
        super().__init__(f"missing {path} (run `{stage}` first)")


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise DependencyMissing(path, stage)
    return path


def _load_graph(out: Path) -> tuple[graph.DirectedGraph, graph.IdMap]:
    edges = graph.read_edges(_require(out / GRAPH_FILE, "build-graph"))
    nodes = graph.read_id_list(_require(out / NODES_FILE, "build-graph"))
    return graph.build_graph(edges, restrict_to=nodes)


def _load_table(out: Path, g, ids) -> AttributeTable:
    q = activity.read_qualities(_require(out / QUALITIES_FILE, "qualities"), ids)
    return AttributeTable.from_graph(g, q)


def stage_build_graph(args, out: Outputs) -> dict:
    edges = graph.read_edges(args.edges)
    restrict = graph.read_id_list(args.restrict) if args.restrict else None
    g, ids = graph.build_graph(edges, restrict_to=restrict)
    graph.write_edges(out.path(GRAPH_FILE), g, ids)
    graph.write_id_list(out.path(NODES_FILE), ids)
    s = g.build_stats
    counts = {
        "lines": s.input_edges, "kept": s.kept, "deduped": s.duplicates,
        "dropped": s.self_loops, "skipped": s.restricted_out, "isolated_nodes": s.isolated,
        "nodes": g.n,
    }
    if counts["kept"] + counts["deduped"] + counts["dropped"] + counts["skipped"] != counts["lines"]:
        raise InvariantError("edge accounting does not balance")
    return counts


def stage_qualities(args, out: Outputs) -> dict:
    ids = graph.IdMap(graph.read_id_list(_require(Path(args.out) / NODES_FILE, "build-graph")))
    lg, lines = activity.read_activity(args.activity)
    kept = activity.dedup(lg)
    index = activity.resolve_cascades(kept)
    table = activity.compute_qualities(kept, index, ids)
    activity.write_qualities(out.path(QUALITIES_FILE), table, ids)
    counts = {
        "lines": lines,
        "kept": len(kept) - table.skipped_records,
        "deduped": len(lg) - len(kept),
        "dropped": 0,
        "skipped": table.skipped_records,
        "skipped_users": table.skipped_users,
        "orphans": table.orphans,
        "self_reposts": table.self_reposts,
    }
    if counts["kept"] + counts["deduped"] + counts["dropped"] + counts["skipped"] != lines:
        raise InvariantError("activity accounting does not balance")
    return counts


def stage_import_qualities(args, out: Outputs) -> dict:
    ids = graph.IdMap(graph.read_id_list(_require(Path(args.out) / NODES_FILE, "build-graph")))
    q = activity.read_qualities(args.qualities, ids)
    activity.write_qualities(out.path(QUALITIES_FILE), q, ids)
    counts = {"lines": q.rows_read, "kept": q.rows_read - q.skipped_records, "deduped": 0, "dropped": 0,
              "skipped": q.skipped_records}
    return counts


def stage_superiority(args, out: Outputs) -> dict:
    root = Path(args.out)
    g, ids = _load_graph(root)
    table = _load_table(root, g, ids)
    reports, _ = run_superiority(g, table, out, workers=args.threads)
    return {"reports": len(reports)}


def stage_stats(args, out: Outputs) -> dict:
    root = Path(args.out)
    g, ids = _load_graph(root)
    table = _load_table(root, g, ids)
    return run_stats(g, table, out, _bins(args), workers=args.threads)


def stage_synth(args, out: Outputs) -> dict:
    kind = synth.GraphKind(args.kind)
    params = {"m": args.m, "k": args.k}
    if kind is synth.GraphKind.CONFIG_MODEL:
        params = {"m_edges": args.edges_count or 10 * args.n, "alpha": args.alpha}
    g = synth.generate(synth.GenSpec(kind, args.n, params, args.seed))
    ids = graph.IdMap(np.arange(g.n, dtype=np.int64))
    graph.write_edges(out.path("edges.tsv"), g, ids)
    q = synth.synth_qualities(g, args.seed, rho=args.rho, alpha=args.alpha)
    activity.write_qualities(out.path(QUALITIES_FILE), q, ids)
    return {"nodes": g.n, "links": g.m}


def stage_pipeline(args, out: Outputs) -> dict:
    if bool(args.activity) == bool(args.qualities):
        raise UsageError("pipeline needs exactly one of --activity or --qualities")
    counts = {"edges": stage_build_graph(args, out)}
    if args.activity:
        counts["activity"] = stage_qualities(args, out)
    else:
        counts["qualities"] = stage_import_qualities(args, out)
    root = Path(args.out)
    g, ids = _load_graph(root)
    table = _load_table(root, g, ids)
    reports, verd = run_superiority(g, table, out, workers=args.threads)
    counts["stats"] = run_stats(g, table, out, _bins(args), verd=verd)

    inputs = {}
    for name in ("edges", "activity", "qualities", "restrict"):
        p = getattr(args, name, None)
        if p:
            inputs[name] = {"path": str(p), "sha256": sha256(p)}
    manifest = {
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "inputs": inputs,
        "parameters": {"bins": vars(_bins(args)), "seed": args.seed},
        "counts": counts,
    }
    write_json(out.path("manifest.json"), manifest)
    return counts


class UsageError(GFPError):
    pass


def _bins(args) -> Bins:
    base = args.bins
    return Bins(
        histogram=args.histogram_bins or base or 100,
        prevalence=args.prevalence_bins or base or 50,
        percentile=args.percentile_bins or base or 500,
        flow=args.flow_bins or base or 25,
    )


STAGES = {
    "build-graph": stage_build_graph,
    "qualities": stage_qualities,
    "superiority": stage_superiority,
    "stats": stage_stats,
    "synth": stage_synth,
    "pipeline": stage_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gfp", description="Neighbour-superiority analytics for directed follow graphs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *flags):
        sp.add_argument("--out", type=Path, default=os.environ.get(OUT_ENV),
                        help=f"output directory (default: ${OUT_ENV})")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (hint; outputs do not depend on it)")
        sp.add_argument("--seed", type=int, default=0)
        if "edges" in flags:
            sp.add_argument("--edges", type=Path, required=True)
            sp.add_argument("--restrict", type=Path)
        if "activity" in flags:
            sp.add_argument("--activity", type=Path, required="qualities" not in flags)
        if "qualities" in flags:
            sp.add_argument("--qualities", type=Path)
        if "bins" in flags:
            sp.add_argument("--bins", type=int, help="override every bin count")
            sp.add_argument("--histogram-bins", type=int)
            sp.add_argument("--prevalence-bins", type=int)
            sp.add_argument("--percentile-bins", type=int)
            sp.add_argument("--flow-bins", type=int)

    common(sub.add_parser("build-graph", help="ingest an edge file"), "edges")
    common(sub.add_parser("qualities", help="compute qualities from an activity log"), "activity")
    common(sub.add_parser("superiority", help="32 superiority reports"))
    common(sub.add_parser("stats", help="distributional artifacts"), "bins")
    sp = sub.add_parser("synth", help="generate a synthetic fixture")
    common(sp)
    sp.add_argument("--kind", choices=[k.value for k in synth.GraphKind], required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, default=3, help="links per arriving node (prefattach)")
    sp.add_argument("--k", type=int, default=1, help="ring out-degree")
    sp.add_argument("--edges-count", type=int, help="total links (config)")
    sp.add_argument("--alpha", type=float, default=2.5)
    sp.add_argument("--rho", type=float, default=0.0)
    common(sub.add_parser("pipeline", help="run every stage and write a manifest"), "edges", "activity", "qualities", "bins")
    return p


def _validate(args) -> None:
    if args.out is None:
        raise UsageError(f"--out not given and ${OUT_ENV} unset")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    for name in ("bins", "histogram_bins", "prevalence_bins", "percentile_bins", "flow_bins"):
        v = getattr(args, name, None)
        if v is not None and v < 2:
            raise UsageError(f"--{name.replace('_', '-')} must be >= 2")
    for name in ("edges", "activity", "qualities", "restrict"):
        p = getattr(args, name, None)
        if p is not None and not Path(p).exists():
            raise DependencyMissing(Path(p), "input")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = None
    try:
        _validate(args)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        if not os.access(args.out, os.W_OK):
            raise UsageError(f"output directory {args.out} is not writable")
        out = Outputs(Path(args.out))
        counts = STAGES[args.command](args, out)
        log.info("%s done: %s", args.command, counts)
        return EXIT_OK
    except BaseException as exc:
        if out is not None:
            out.cleanup()
        code = _exit_code(exc)
        if code is None:
            raise
        print(f"gfp {args.command}: error: {exc}", file=sys.stderr)
        return code


def _exit_code(exc: BaseException) -> int | None:
    if isinstance(exc, (UsageError, FeasibilityError, RankCouplingError, ValueError)):
        return EXIT_USAGE
    if isinstance(exc, (ParseError, EmptyGraphError)):
        return EXIT_PARSE
    if isinstance(exc, (DependencyMissing, FileNotFoundError)):
        return EXIT_DEPENDENCY
    if isinstance(exc, (InvariantError, AssertionError)):
        return EXIT_INVARIANT
    if isinstance(exc, GFPError):
        return EXIT_PARSE
    return None


if __name__ == "__main__":
    sys.exit(main())
