"""Composition of call graphs and sink reachability.

Precomputed library chains are merged onto a graph by suffix: the first edge
whose caller is already a vertex anchors the rest of the chain. Because every
vertex of the graph is reachable from an entry point, a sink is reachable
exactly when it is a vertex after merging.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from .errors import GraphError
from .formats import ChainFile, VulnDbDocument
from .model import (CallChain, CallGraph, Coordinate, Edge, EntryPointSet,
                    MethodRef, Origin, Provenance)

logger = logging.getLogger(__name__)

FOLD = "fold"
FIXPOINT = "fixpoint"
MERGE_MODES = (FOLD, FIXPOINT)

STATIC = "static"
DYNAMIC = "dynamic"
BOTH = "both"

_STATIC_KINDS = frozenset((Provenance.STATIC, Provenance.CHAIN))


def merge_chain(graph: CallGraph, chain: CallChain) -> CallGraph:
    for i, (caller, _) in enumerate(chain.edges):
        if caller in graph:
            suffix = chain.edges[i:]
            origin = Origin.third_party(chain.library)
            return graph.with_additions(
                {callee: origin for _, callee in suffix},
                (Edge(a, b, Provenance.CHAIN) for a, b in suffix))
    return graph


def _fold(graph, files):
    for chain_file in files:
        for chain in chain_file.chains:
            graph = merge_chain(graph, chain)
    return graph


def merge_chains(graph: CallGraph, files: Sequence[ChainFile],
                 mode: str = FOLD) -> CallGraph:
    """Merge every chain of *files*, in file order then chain order.

    In ``fixpoint`` mode the pass repeats until the graph stops growing, so a
    chain that only anchors after a later chain was merged is picked up.
    """
    if mode not in MERGE_MODES:
        raise ValueError("unknown merge mode %r" % (mode,))
    merged = _fold(graph, files)
    if mode == FIXPOINT:
        while True:
            again = _fold(merged, files)
            if again == merged:
                break
            merged = again
    logger.debug("merged chains: %d -> %d vertices", len(graph), len(merged))
    return merged


def merge_difference(graph: CallGraph, files: Sequence[ChainFile]
                     ) -> Tuple[CallGraph, CallGraph, List[MethodRef]]:
    """Fold and fixpoint results plus the vertices only the fixpoint adds."""
    folded = merge_chains(graph, files, FOLD)
    fixed = merge_chains(graph, files, FIXPOINT)
    return folded, fixed, sorted(fixed.vertices - folded.vertices)


def union(static: CallGraph, dynamic: CallGraph) -> CallGraph:
    return static.with_additions(dynamic.origins, dynamic.edges)


def entry_points_of(graph: CallGraph) -> EntryPointSet:
    """First-party vertices without callers."""
    return EntryPointSet(v for v in graph.zero_in_degree()
                         if graph.origin(v).is_first_party)


def witness(graph: CallGraph, entry_points: Iterable[MethodRef],
            sink: MethodRef) -> Optional[List[MethodRef]]:
    """The lexicographically smallest shortest path from an entry to *sink*.

    Returns None when no entry point reaches the sink.
    """
    if sink not in graph:
        raise GraphError("sink %s is not in the graph" % (sink,))
    distance = nx.single_source_shortest_path_length(
        graph.digraph.reverse(copy=False), sink)
    starts = [e for e in entry_points if e in distance]
    if not starts:
        return None
    step = min(starts, key=lambda e: (distance[e], e))
    path = [step]
    while step != sink:
        step = min(s for s in graph.successors(step)
                   if distance.get(s) == distance[step] - 1)
        path.append(step)
    return path


def path_provenance(graph: CallGraph, path: Sequence[MethodRef]) -> str:
    """``static`` when every hop is static or chain and ``dynamic`` when every
    hop was observed. A path confirmed by both analyses on every hop, or one
    that needs hops from each, is ``both``."""
    hops = [graph.provenances(a, b) for a, b in zip(path, path[1:])]
    static = all(kinds & _STATIC_KINDS for kinds in hops)
    dynamic = all(Provenance.DYNAMIC in kinds for kinds in hops)
    if static and dynamic and hops:
        return BOTH
    if static:
        return STATIC
    if dynamic:
        return DYNAMIC
    return BOTH


@dataclass(frozen=True)
class Finding:
    vuln_id: str
    sink: MethodRef
    reachable: bool
    provenance: Optional[str] = None
    witness: Optional[Tuple[MethodRef, ...]] = None
    coordinates: Tuple[Coordinate, ...] = ()

    def to_dict(self):
        return {
            "vuln_id": self.vuln_id,
            "sink": str(self.sink),
            "reachable": self.reachable,
            "provenance": self.provenance,
            "witness": (None if self.witness is None
                        else [str(step) for step in self.witness]),
            "coordinates": [str(c) for c in self.coordinates],
        }


def reachable_sinks(graph: CallGraph, vulndb: VulnDbDocument,
                    resolved=None,
                    entry_points: Optional[Iterable[MethodRef]] = None
                    ) -> List[Finding]:
    """One finding per (vulnerability, sink).

    With *resolved*, only records affecting a resolved library version are
    reported; without it every record is.
    """
    if entry_points is None:
        entry_points = entry_points_of(graph)
    entry_points = sorted(entry_points)

    findings = []
    for record in vulndb.records:
        coordinates = ()
        if resolved is not None:
            coordinates = tuple(sorted(c for c in resolved.coordinates
                                       if record.affects(c)))
            if not coordinates:
                continue
        for sink in record.sinks:
            if sink not in graph:
                findings.append(Finding(record.vuln_id, sink, False,
                                        coordinates=coordinates))
                continue
            path = witness(graph, entry_points, sink)
            if path is None:
                logger.warning("%s is a vertex but no entry point reaches it",
                               sink)
                provenance = path_provenance(
                    graph, [graph.predecessors(sink)[0], sink]
                ) if graph.predecessors(sink) else STATIC
            else:
                provenance = path_provenance(graph, path)
            findings.append(Finding(
                record.vuln_id, sink, True, provenance,
                None if path is None else tuple(path), coordinates))
    findings.sort(key=lambda f: (f.vuln_id, f.sink))
    return findings
