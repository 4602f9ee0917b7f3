"""Subcommand orchestration.

Each ``run_*`` function takes a :class:`~scagraph.config.RunConfig`, reads
its inputs, and returns a ``(FindingsReport, exit_status)`` pair. Nothing
here writes to stdout; the CLI renders the report.
"""

import glob
import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Tuple

from . import depres
from .chains import library_graph, precompute_many
from .compose import (FIXPOINT, FOLD, entry_points_of, merge_chains,
                      merge_difference, reachable_sinks, union)
from .config import RunConfig
from .dynamic_cg import framework_entries, ingest_traces, project
from .errors import ConfigError, FormatError
from .formats import (ChainFile, FindingsReport, load_chains, load_graph,
                      load_lockfile, load_manifest, load_program,
                      load_registry, load_trace, load_vulndb, save_chains,
                      save_graph, save_lockfile)
from .model import CallGraph, EntryPointSet
from .remediate import (COMBINED, DYNAMIC_ONLY, POTENTIALLY_BREAKING,
                        STATIC_ONLY, check_breaking, diff_versions,
                        semantic_closure)
from .static_cg import StaticBuild, StaticOptions, build_static

logger = logging.getLogger(__name__)

OK = 0
FINDINGS = 1


def read_input(path, loader):
    """Load *path* with *loader*, naming the file in any format error."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise ConfigError("cannot read %s: %s" % (path, exc.strerror))
    try:
        return loader(data)
    except FormatError as exc:
        raise FormatError(str(exc), path)


def write_output(path, data: bytes):
    try:
        with open(path, "wb") as f:
            f.write(data)
    except OSError as exc:
        raise ConfigError("cannot write %s: %s" % (path, exc.strerror))
    logger.info("wrote %s", path)


def chain_file_name(chain_file: ChainFile) -> str:
    library = chain_file.library
    return "%s.%s-%s.chains.json" % (library.group, library.artifact,
                                     library.version)


def chain_paths(paths) -> List[str]:
    """Expand directories to their ``*.json`` files, sorted by name."""
    found = []
    for path in paths or ():
        if os.path.isdir(path):
            found.extend(sorted(glob.glob(os.path.join(path, "*.json"))))
        else:
            found.append(path)
    return found


def _require(config, *names):
    for name in names:
        if config.input(name) is None:
            raise ConfigError("%s needs --%s" % (
                config.command, name.rstrip("_").replace("_", "-")))


# -- resolve -----------------------------------------------------------------

def _resolve_with(config: RunConfig, mode, registry_path):
    registry = read_input(registry_path, load_registry)
    if mode == depres.LOCKFILE:
        _require(config, "lockfile")
        return depres.replay_lockfile(
            read_input(config.input("lockfile"), load_lockfile), registry)
    _require(config, "manifest")
    manifest = read_input(config.input("manifest"), load_manifest)
    return depres.resolve(mode, manifest, registry)


def resolve_inputs(config: RunConfig) -> Optional[depres.ResolutionResult]:
    """Resolve the configured dependencies, or None when none are given."""
    if config.input("registry") is None:
        return None
    return _resolve_with(config, config.input("mode", depres.MAVEN),
                         config.input("registry"))


def run_resolve(config: RunConfig) -> Tuple[FindingsReport, int]:
    _require(config, "registry")
    mode = config.input("mode", depres.MAVEN)
    result = resolve_inputs(config)
    comparisons = []
    baseline = config.input("baseline")
    if baseline is not None:
        comparisons.append(depres.compare(
            _resolve_with(config, baseline, config.input("registry")),
            result))
    if config.input("compare_registry") is not None:
        drifted = _resolve_with(config, mode, config.input("compare_registry"))
        comparisons.append(depres.compare(
            result, drifted, "%s@%s" % (mode, config.input("registry")),
            "%s@%s" % (mode, config.input("compare_registry"))))
    if config.input("write_lockfile") is not None:
        write_output(config.input("write_lockfile"),
                     save_lockfile(depres.to_lockfile(result)))
    return FindingsReport(resolution=result, comparisons=comparisons), OK


# -- graphs ------------------------------------------------------------------

@dataclass(frozen=True)
class AppGraphs:
    """Every graph built for one application."""

    static: Optional[StaticBuild]
    dynamic: CallGraph
    projected: CallGraph
    dynamic_entries: EntryPointSet
    chain_files: Tuple[ChainFile, ...]

    def select(self, graph_mode) -> Tuple[CallGraph, EntryPointSet]:
        """The unmerged graph for *graph_mode* and its entry points."""
        static = self.static.graph if self.static else CallGraph.empty()
        static_entries = (self.static.entry_points if self.static
                          else EntryPointSet())
        if graph_mode == STATIC_ONLY:
            return static, static_entries
        if graph_mode == DYNAMIC_ONLY:
            return self.projected, self.dynamic_entries
        return (union(static, self.projected),
                EntryPointSet(static_entries.methods
                              | self.dynamic_entries.methods))

    def merged(self, graph_mode, merge_mode=FOLD) -> Tuple[CallGraph,
                                                           EntryPointSet]:
        graph, entries = self.select(graph_mode)
        return merge_chains(graph, self.chain_files, merge_mode), entries


def build_app_graphs(config: RunConfig) -> AppGraphs:
    origin_map = config.origin_map()
    static = None
    if config.input("program") is not None:
        program = read_input(config.input("program"), load_program)
        static = build_static(program, origin_map,
                              StaticOptions(config.entrypoint_filter))
    traces = [read_input(path, load_trace)
              for path in config.input("trace", [])]
    if static is None and not traces:
        raise ConfigError("%s needs --program or --trace" % config.command)
    dynamic = ingest_traces(traces, origin_map)
    entries = framework_entries(dynamic)
    projected = project(dynamic, entries)
    chain_files = tuple(read_input(path, load_chains)
                        for path in chain_paths(config.input("chains")))
    return AppGraphs(static, dynamic, projected,
                     EntryPointSet(e.callee for e in entries), chain_files)


def run_graph(config: RunConfig) -> Tuple[FindingsReport, int]:
    graphs = build_app_graphs(config)
    static, _ = graphs.select(STATIC_ONLY)
    stats = {}
    if config.input("stats"):
        stats = _graph_stats(config, graphs, static)
    diagnostics = dict(graphs.static.diagnostics) if graphs.static else {}
    if config.input("graph_out") is not None:
        graph, _ = graphs.merged(config.graph_mode, config.merge_mode)
        write_output(config.input("graph_out"), save_graph(graph))
    return FindingsReport(stats=stats, diagnostics=diagnostics), OK


def _graph_stats(config, graphs, static):
    stats = {
        "static_vertices": len(static),
        "static_edges": len(static.edge_pairs),
        "dynamic_vertices": len(graphs.dynamic),
        "dynamic_edges": len(graphs.dynamic.edge_pairs),
        "projected_vertices": len(graphs.projected),
        "projected_edges": len(graphs.projected.edge_pairs),
    }
    if config.input("vulndb") is not None:
        sinks = read_input(config.input("vulndb"), load_vulndb).sinks()
        static_merged, _ = graphs.merged(STATIC_ONLY, config.merge_mode)
        combined, _ = graphs.merged(COMBINED, config.merge_mode)
        stats["static_sinks"] = sum(1 for s in sinks if s in static_merged)
        stats["dynamic_sinks"] = sum(1 for s in sinks if s in combined)
    return stats


# -- chains ------------------------------------------------------------------

def run_chains(config: RunConfig) -> Tuple[FindingsReport, int]:
    _require(config, "program", "vulndb")
    libraries = [read_input(path, load_program)
                 for path in config.input("program")]
    for path, lib in zip(config.input("program"), libraries):
        if not lib.is_library:
            raise ConfigError("%s is not a library document" % path)
    vulndb = read_input(config.input("vulndb"), load_vulndb)
    files = precompute_many(libraries, vulndb, config.chain_limits(),
                            config.jobs)

    out_dir = config.input("out_dir")
    written = []
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for chain_file in files:
            path = os.path.join(out_dir, chain_file_name(chain_file))
            write_output(path, save_chains(chain_file))
            written.append(path)
    stats = {
        "libraries": len(files),
        "chains": sum(len(f.chains) for f in files),
        "truncated_sinks": sum(len(f.truncated) for f in files),
    }
    diagnostics = {str(f.library): {"chains": len(f.chains),
                                    "truncated": [str(s) for s in f.truncated]}
                   for f in files}
    if written:
        diagnostics["written"] = written
    return FindingsReport(stats=stats, diagnostics=diagnostics), OK


# -- reach -------------------------------------------------------------------

def run_reach(config: RunConfig) -> Tuple[FindingsReport, int]:
    _require(config, "vulndb")
    graphs = build_app_graphs(config)
    vulndb = read_input(config.input("vulndb"), load_vulndb)
    graph, entries = graphs.select(config.graph_mode)

    diagnostics = dict(graphs.static.diagnostics) if graphs.static else {}
    if config.merge_mode == FOLD:
        merged, _, extra = merge_difference(graph, graphs.chain_files)
        if extra:
            logger.warning("%d vertices are only reached by a fixpoint merge",
                           len(extra))
        diagnostics["fixpoint_only_vertices"] = [str(v) for v in extra]
    else:
        merged = merge_chains(graph, graphs.chain_files, FIXPOINT)

    resolution = resolve_inputs(config)
    stats = {"vertices": len(merged), "edges": len(merged.edge_pairs),
             "entry_points": len(entries)}
    if resolution is not None:
        unreferenced = depres.unreferenced_dependencies(resolution, merged)
        resolution = resolution.with_unreferenced(unreferenced)
        resolved = len(resolution.coordinates)
        stats.update({
            "resolved": resolved,
            "referenced": resolved - len(unreferenced),
            "unreferenced": len(unreferenced),
            "unreferenced_percent": (round(len(unreferenced) * 100.0
                                           / resolved, 2)
                                     if resolved else None),
        })

    findings = reachable_sinks(merged, vulndb, resolution, entries)
    report = FindingsReport(findings=findings, resolution=resolution,
                            stats=stats, diagnostics=diagnostics)
    if config.fail_on_findings and any(f.reachable for f in findings):
        return report, FINDINGS
    return report, OK


# -- remediate ---------------------------------------------------------------

def run_remediate(config: RunConfig) -> Tuple[FindingsReport, int]:
    _require(config, "from_", "to")
    old = read_input(config.input("from_"), load_program)
    new = read_input(config.input("to"), load_program)
    semantic = semantic_closure(diff_versions(old, new), library_graph(old))

    if config.input("app_graph") is not None:
        app = read_input(config.input("app_graph"), load_graph)
        entries = entry_points_of(app)
    else:
        app, entries = build_app_graphs(config).merged(config.graph_mode,
                                                       config.merge_mode)
    report = check_breaking(app, semantic, config.graph_mode, entries)
    status = OK
    if config.fail_on_findings and report.verdict == POTENTIALLY_BREAKING:
        status = FINDINGS
    return FindingsReport(breaking=[report]), status


COMMANDS = {
    "resolve": run_resolve,
    "graph": run_graph,
    "chains": run_chains,
    "reach": run_reach,
    "remediate": run_remediate,
}


def run(config: RunConfig) -> Tuple[FindingsReport, int]:
    return COMMANDS[config.command](config)
