"""Dynamic call graphs from execution traces.

Test frameworks invert control: the framework's own ``main`` calls into the
application. Those framework-to-application edges are the dynamic entry
points, and only what is reachable from them is kept.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional

from .formats import TraceDocument
from .model import (CallGraph, Edge, MethodRef, OriginMap, Provenance,
                    classify_origin)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class FrameworkEntry:
    caller: MethodRef
    callee: MethodRef


def ingest_trace(trace: TraceDocument,
                 origin_map: Optional[OriginMap] = None) -> CallGraph:
    origin_map = origin_map or OriginMap.build()
    origins = {}
    edges = set()
    for event in trace.events:
        for ref in (event.caller, event.callee):
            if ref not in origins:
                origins[ref] = classify_origin(ref, origin_map)
        edges.add(Edge(event.caller, event.callee, Provenance.DYNAMIC))
    if len(edges) < len(trace.events):
        logger.debug("dropped %d repeated trace events",
                     len(trace.events) - len(edges))
    return CallGraph(origins, frozenset(edges))


def ingest_traces(traces: Iterable[TraceDocument],
                  origin_map: Optional[OriginMap] = None) -> CallGraph:
    graph = CallGraph.empty()
    for trace in traces:
        part = ingest_trace(trace, origin_map)
        graph = graph.with_additions(part.origins, part.edges)
    return graph


def framework_entries(graph: CallGraph,
                      origin_map: Optional[OriginMap] = None
                      ) -> List[FrameworkEntry]:
    """Edges from framework code into first-party code, sorted.

    With no *origin_map* the origins stored in *graph* are used.
    """
    def origin(ref):
        if origin_map is None:
            return graph.origin(ref)
        return classify_origin(ref, origin_map)

    return sorted(FrameworkEntry(caller, callee)
                  for caller, callee in graph.edge_pairs
                  if origin(caller).is_framework
                  and origin(callee).is_first_party)


def project_from(graph: CallGraph, roots: Iterable[MethodRef]) -> CallGraph:
    """Everything reachable from *roots* without passing a framework method.

    Only edges traversed during the walk are kept.
    """
    seen = set()
    kept = set()
    stack = sorted({r for r in roots if r in graph}, reverse=True)
    seen.update(stack)
    while stack:
        vertex = stack.pop()
        for callee in graph.successors(vertex):
            if graph.origin(callee).is_framework:
                continue
            kept.add((vertex, callee))
            if callee not in seen:
                seen.add(callee)
                stack.append(callee)
    return CallGraph({v: graph.origin(v) for v in seen},
                     frozenset(e for e in graph.edges
                               if (e.caller, e.callee) in kept))


def project(graph: CallGraph, entries: Iterable[FrameworkEntry]) -> CallGraph:
    projected = project_from(graph, (entry.callee for entry in entries))
    logger.info("dynamic projection: %d of %d vertices",
                len(projected), len(graph))
    return projected
