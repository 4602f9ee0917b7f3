"""Vulnerable-method call chains, precomputed per library version.

A library is analyzed on its own: its public methods are the entry points and
each chain is a simple path from one of them to a sink. Chains never cross
into another library.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Sequence

import networkx as nx

from .errors import StaticGraphError
from .formats import ChainFile, ProgramDocument, VulnDbDocument
from .model import CallChain, CallGraph, Coordinate, MethodRef, OriginMap
from .static_cg import apply_cha, build_hierarchy, init_edges

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChainLimits:
    max_length: int = 16
    max_chains_per_sink: int = 1000

    def __post_init__(self):
        if self.max_length < 1 or self.max_chains_per_sink < 1:
            raise ValueError("chain limits must be at least 1")


@dataclass(frozen=True)
class LibrarySurface:
    entry_points: FrozenSet[MethodRef]


def library_surface(lib: ProgramDocument) -> LibrarySurface:
    return LibrarySurface(frozenset(
        m.ref for m in lib.methods() if m.visibility == "public"))


def library_graph(lib: ProgramDocument) -> CallGraph:
    """Declared edges widened by CHA; no RTA without a usage context."""
    if not lib.is_library:
        raise StaticGraphError("chains are computed for library documents")
    hierarchy = build_hierarchy(lib)
    return apply_cha(init_edges(lib, OriginMap(), hierarchy), hierarchy)


def _paths_to(graph, entry, sink, can_reach, max_length):
    """Simple paths entry -> sink in lexicographic order.

    Yields ``None`` whenever *max_length* cut off a longer simple path.
    """
    digraph = graph.digraph
    path = [entry]
    on_path = {entry}
    stack = [iter(sorted(n for n in digraph.successors(entry)
                         if n in can_reach))]
    while stack:
        step = next(stack[-1], None)
        if step is None:
            stack.pop()
            on_path.discard(path.pop())
            continue
        if step in on_path:
            continue
        if step == sink:
            yield path + [sink]
            continue
        if len(path) >= max_length:
            if nx.has_path(nx.restricted_view(digraph, on_path, ()), step,
                           sink):
                yield None
            continue
        path.append(step)
        on_path.add(step)
        stack.append(iter(sorted(n for n in digraph.successors(step)
                                 if n in can_reach)))


def enumerate_chains(graph: CallGraph, surface: LibrarySurface,
                     sinks: Sequence[MethodRef],
                     limits: Optional[ChainLimits] = None,
                     library: Optional[Coordinate] = None) -> ChainFile:
    limits = limits or ChainLimits()
    if not sinks:
        raise ValueError("enumerate_chains needs at least one sink")
    if library is None:
        library = next((graph.origin(e).coordinate
                        for e in sorted(surface.entry_points)
                        if e in graph and graph.origin(e).coordinate), None)
    if library is None:
        raise ValueError("cannot tell which library the chains belong to")

    chains: List[CallChain] = []
    truncated = []
    for sink in sorted(set(sinks)):
        if sink not in graph:
            logger.warning("sink %s not found in %s", sink, library)
            continue
        can_reach = nx.ancestors(graph.digraph, sink) | {sink}
        found = []
        cut = False
        for entry in sorted(surface.entry_points & can_reach):
            if entry == sink:
                continue
            for path in _paths_to(graph, entry, sink, can_reach,
                                  limits.max_length):
                if path is None:
                    cut = True
                    continue
                if len(found) == limits.max_chains_per_sink:
                    cut = True
                    break
                found.append(CallChain.from_path(path, library))
            if len(found) == limits.max_chains_per_sink and cut:
                break
        if not found:
            logger.info("sink %s is unreachable from the public surface of %s",
                        sink, library)
        if cut:
            logger.warning("chain enumeration for %s truncated", sink)
            truncated.append(sink)
        chains.extend(found)
    return ChainFile(library, tuple(chains), tuple(truncated))


def precompute_chains(lib: ProgramDocument, vulndb: VulnDbDocument,
                      limits: Optional[ChainLimits] = None) -> ChainFile:
    """Chains to every sink the database lists for this library version."""
    sinks = sorted({sink for record in vulndb.for_library(lib.coordinate)
                    for sink in record.sinks})
    if not sinks:
        logger.info("no known sinks for %s", lib.coordinate)
        return ChainFile(lib.coordinate)
    return enumerate_chains(library_graph(lib), library_surface(lib), sinks,
                            limits, lib.coordinate)


def _precompute(job):
    lib, vulndb, limits = job
    return precompute_chains(lib, vulndb, limits)


def precompute_many(libraries: Iterable[ProgramDocument],
                    vulndb: VulnDbDocument,
                    limits: Optional[ChainLimits] = None,
                    jobs: int = 1) -> List[ChainFile]:
    """Precompute several libraries, in parallel when *jobs* > 1.

    Results come back in input order.
    """
    work = [(lib, vulndb, limits) for lib in libraries]
    if jobs <= 1 or len(work) <= 1:
        return [_precompute(job) for job in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_precompute, work))
