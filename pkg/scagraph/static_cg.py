"""Static call graph construction for an application document.

The graph starts from declared call targets, is widened by class hierarchy
analysis, narrowed by rapid type analysis, then extended with reflective
calls whose class and method names are constants. Vertices not reachable
from a first-party entry point are dropped at the end, so sink reachability
becomes a membership test.
"""

import logging
import random
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, Optional, Union

import networkx as nx

from .errors import HierarchyError, StaticGraphError
from .formats import (REFLECTIVE_CALL, STATIC_CALL, VIRTUAL_CALL, CallSite,
                      ProgramDocument, signature_ref)
from .model import (CallGraph, Edge, EntryPointSet, MethodRef, Origin,
                    OriginMap, Provenance, classify_origin)

logger = logging.getLogger(__name__)

EntryFilter = Union[None, str, Callable[[MethodRef], bool]]


class HierarchyIndex:
    """Subtype relation and method resolution over one program document.

    Supertypes that the document does not declare are external: they are
    leaves of the relation and own no methods.
    """

    def __init__(self, program: ProgramDocument, supertypes: nx.DiGraph):
        self.program = program
        self._supertypes = supertypes
        self._resolution = {}

    def is_external(self, class_name):
        return self.program.class_named(class_name) is None

    def is_concrete(self, class_name):
        cls = self.program.class_named(class_name)
        return cls is not None and not cls.is_abstract

    def subtypes(self, class_name) -> FrozenSet[str]:
        """Transitive subtypes of *class_name*, excluding itself."""
        if class_name not in self._supertypes:
            return frozenset()
        return frozenset(nx.ancestors(self._supertypes, class_name))

    def direct_subtypes(self, class_name) -> FrozenSet[str]:
        if class_name not in self._supertypes:
            return frozenset()
        return frozenset(self._supertypes.predecessors(class_name))

    def cone(self, class_name) -> FrozenSet[str]:
        return self.subtypes(class_name) | {class_name}

    def superclass_chain(self, class_name):
        chain = []
        current = class_name
        while current is not None:
            chain.append(current)
            cls = self.program.class_named(current)
            current = None if cls is None else cls.superclass
        return chain

    def resolve(self, class_name, signature) -> Optional[MethodRef]:
        """The method a receiver of exact type *class_name* runs.

        Own declaration first, else the nearest superclass declaration.
        """
        key = (class_name, signature)
        if key not in self._resolution:
            self._resolution[key] = self._resolve(class_name, signature)
        return self._resolution[key]

    def _resolve(self, class_name, signature):
        for name in self.superclass_chain(class_name):
            cls = self.program.class_named(name)
            if cls is None:
                return None
            for method in cls.methods:
                if method.signature == signature:
                    return method.ref
        return None

    def declared_target(self, site: CallSite) -> Optional[MethodRef]:
        """The method a call site names, resolved against its declared type.

        A receiver declared in the document resolves up its superclass
        chain, then through its other supertypes nearest first; failing
        that, the method is attributed to the nearest external supertype.
        External receivers keep the literal target. None means nothing
        declares the method.
        """
        if site.kind != VIRTUAL_CALL or self.is_external(site.receiver):
            return site.declared_target
        signature = (site.method_name, site.descriptor)
        found = self.resolve(site.receiver, signature)
        if found is not None:
            return found
        distance = nx.single_source_shortest_path_length(self._supertypes,
                                                         site.receiver)
        nearest = sorted(distance, key=lambda name: (distance[name], name))
        for name in nearest:
            cls = self.program.class_named(name)
            for method in cls.methods if cls is not None else ():
                if method.signature == signature:
                    return method.ref
        for name in nearest:
            if self.is_external(name):
                return signature_ref(name, *signature)
        return None

    def dispatch_targets(self, receiver, signature, classes=None):
        """Resolved targets over the concrete classes of *receiver*'s cone.

        Returns ``(targets, unresolved)``; *classes* optionally restricts
        the receivers considered (the instantiated set under RTA).
        """
        targets = set()
        unresolved = 0
        for name in sorted(self.cone(receiver)):
            if not self.is_concrete(name):
                continue
            if classes is not None and name not in classes:
                continue
            target = self.resolve(name, signature)
            if target is None:
                unresolved += 1
            else:
                targets.add(target)
        return targets, unresolved


def build_hierarchy(program: ProgramDocument) -> HierarchyIndex:
    supertypes = nx.DiGraph()
    for cls in program.classes:
        supertypes.add_node(cls.name)
        parents = ([cls.superclass] if cls.superclass else []) + list(
            cls.interfaces)
        for parent in parents:
            supertypes.add_edge(cls.name, parent)
    try:
        cycle = nx.find_cycle(supertypes)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle:
        names = [edge[0] for edge in cycle] + [cycle[0][0]]
        raise HierarchyError("inheritance cycle: %s" % " -> ".join(names))
    return HierarchyIndex(program, supertypes)


@dataclass(frozen=True)
class StaticOptions:
    entry_filter: EntryFilter = None


@dataclass(frozen=True)
class StaticBuild:
    graph: CallGraph
    entry_points: EntryPointSet
    instantiated: FrozenSet[str]
    diagnostics: Dict[str, int] = field(default_factory=dict)


def _own_origin(program, ref, origin_map):
    if program.is_library:
        return Origin.third_party(program.coordinate)
    return classify_origin(ref, origin_map)


def _target_origin(program, ref, origin_map, declared):
    if ref in declared or program.class_named(ref.class_name) is not None:
        return _own_origin(program, ref, origin_map)
    origin = classify_origin(ref, origin_map)
    if origin.is_first_party:
        return Origin.third_party()
    return origin


def init_edges(program: ProgramDocument,
               origin_map: Optional[OriginMap] = None,
               hierarchy: Optional[HierarchyIndex] = None) -> CallGraph:
    """One edge per static or virtual call site, to the declared target.

    Virtual targets are resolved against the declared receiver type only,
    so an inherited method is reached at its declaring class.
    """
    origin_map = origin_map or OriginMap()
    hierarchy = hierarchy or build_hierarchy(program)
    declared = program.method_refs()
    origins = {m.ref: _own_origin(program, m.ref, origin_map)
               for m in program.methods()}
    edges = set()
    unresolved = 0
    for method in program.methods():
        for site in method.call_sites:
            if site.kind == REFLECTIVE_CALL:
                continue
            target = site.declared_target
            if target is None or not target.class_name:
                raise StaticGraphError("call site in %s names no target class"
                                       % method.ref)
            target = hierarchy.declared_target(site)
            if target is None:
                unresolved += 1
                continue
            if target not in origins:
                origins[target] = _target_origin(program, target, origin_map,
                                                 declared)
            edges.add(Edge(method.ref, target, Provenance.STATIC))
    logger.debug("init: %d vertices, %d edges, %d virtual targets undeclared",
                 len(origins), len(edges), unresolved)
    return CallGraph(origins, frozenset(edges))


def apply_cha(graph: CallGraph, hierarchy: HierarchyIndex,
              diagnostics=None) -> CallGraph:
    """Add an edge to every implementation a subtype could dispatch to."""
    program = hierarchy.program
    added_origins = {}
    added = set()
    unresolved = 0
    for method in program.methods():
        if method.ref not in graph:
            continue
        for site in method.call_sites:
            if site.kind != VIRTUAL_CALL or hierarchy.is_external(
                    site.receiver):
                continue
            targets, missing = hierarchy.dispatch_targets(
                site.receiver, (site.method_name, site.descriptor))
            unresolved += missing
            for target in targets:
                if target not in graph:
                    added_origins[target] = graph.origin(method.ref)
                added.add(Edge(method.ref, target, Provenance.STATIC))
    result = graph.with_additions(added_origins, added)
    if diagnostics is not None:
        diagnostics["cha_edges_added"] = len(result.edges) - len(graph.edges)
        diagnostics["cha_unresolved"] = unresolved
    logger.debug("cha: %d edges added, %d dispatches unresolved",
                 len(result.edges) - len(graph.edges), unresolved)
    return result


def default_seeds(graph: CallGraph,
                  program: ProgramDocument) -> EntryPointSet:
    """First-party program methods without callers."""
    declared = program.method_refs()
    return EntryPointSet(
        ref for ref in graph.zero_in_degree()
        if ref in declared and graph.origin(ref).is_first_party)


def _justified_targets(method, hierarchy, declared, instantiated):
    targets = set()
    for site in method.call_sites:
        if site.kind == STATIC_CALL:
            targets.add(site.target)
        elif site.kind == VIRTUAL_CALL:
            declared_target = hierarchy.declared_target(site)
            if declared_target is not None and declared_target not in declared:
                targets.add(declared_target)
            if not hierarchy.is_external(site.receiver):
                found, _ = hierarchy.dispatch_targets(
                    site.receiver, (site.method_name, site.descriptor),
                    instantiated)
                targets |= found
    return targets


def apply_rta(graph: CallGraph, hierarchy: HierarchyIndex,
              program: ProgramDocument,
              seeds: Optional[Iterable[MethodRef]] = None,
              rng: Optional[random.Random] = None):
    """Drop dispatch edges to classes never instantiated in reachable code.

    Returns ``(graph, instantiated)``. Edges to targets outside the program
    are never removed. *rng* randomizes the worklist order; the fixpoint
    does not depend on it.
    """
    if seeds is None:
        seeds = default_seeds(graph, program)
    seeds = sorted(seeds)
    if not seeds:
        raise StaticGraphError("RTA needs at least one seed method")
    by_ref = {m.ref: m for m in program.methods()}
    declared = frozenset(by_ref)

    instantiated = frozenset()
    while True:
        reachable = set()
        worklist = deque(seeds)
        while worklist:
            if rng is not None:
                worklist.rotate(rng.randrange(len(worklist)))
            ref = worklist.popleft()
            if ref in reachable:
                continue
            reachable.add(ref)
            method = by_ref.get(ref)
            if method is not None:
                worklist.extend(_justified_targets(
                    method, hierarchy, declared, instantiated))
        grown = frozenset(
            name for ref in reachable if ref in by_ref
            for name in by_ref[ref].instantiates)
        if grown <= instantiated:
            break
        instantiated = instantiated | grown

    justified = {}
    kept = set()
    for edge in graph.edges:
        method = by_ref.get(edge.caller)
        if method is None or edge.callee not in declared:
            kept.add(edge)
            continue
        if edge.caller not in justified:
            justified[edge.caller] = _justified_targets(
                method, hierarchy, declared, instantiated)
        if edge.callee in justified[edge.caller]:
            kept.add(edge)
    logger.debug("rta: %d classes instantiated, %d edges removed",
                 len(instantiated), len(graph.edges) - len(kept))
    return CallGraph(graph.origins, frozenset(kept)), instantiated


def apply_reflection(graph: CallGraph, program: ProgramDocument,
                     diagnostics=None) -> CallGraph:
    """Add edges for reflective calls whose class and method are constants.

    Every overload of the named method is a target.
    """
    by_name = {}
    for cls in program.classes:
        for method in cls.methods:
            by_name.setdefault((cls.name, method.ref.method_name),
                               []).append(method.ref)
    added = set()
    missing = nonconstant = 0
    for method in program.methods():
        if method.ref not in graph:
            continue
        for site in method.call_sites:
            if site.kind != REFLECTIVE_CALL:
                continue
            if site.class_const is None or site.method_const is None:
                nonconstant += 1
                continue
            targets = by_name.get((site.class_const, site.method_const))
            if not targets:
                missing += 1
                logger.info("reflective call in %s to %s.%s matches no method",
                            method.ref, site.class_const, site.method_const)
                continue
            for target in targets:
                added.add(Edge(method.ref, target, Provenance.STATIC))
    origins = {e.callee: graph.origin(e.caller) for e in added
               if e.callee not in graph}
    result = graph.with_additions(origins, added)
    if diagnostics is not None:
        diagnostics["reflection_edges_added"] = (len(result.edges)
                                                 - len(graph.edges))
        diagnostics["reflection_unresolved"] = missing
        diagnostics["reflection_nonconstant"] = nonconstant
    return result


def _filter_predicate(entry_filter):
    if entry_filter is None:
        return lambda ref: True
    if isinstance(entry_filter, str):
        pattern = re.compile(entry_filter)
        return lambda ref: pattern.fullmatch(ref.method_name) is not None
    return entry_filter


def compute_entry_points(graph: CallGraph,
                         origin_map: Optional[OriginMap] = None,
                         entry_filter: EntryFilter = None,
                         candidates: Optional[Iterable[MethodRef]] = None
                         ) -> EntryPointSet:
    """First-party vertices without callers, optionally filtered.

    *entry_filter* is a regular expression matched against method names
    (``"main"`` keeps only main methods) or a predicate. *candidates*
    restricts the result further.
    """
    keep = _filter_predicate(entry_filter)
    allowed = None if candidates is None else frozenset(candidates)
    entries = set()
    for ref in graph.zero_in_degree():
        origin = (graph.origin(ref) if origin_map is None
                  else classify_origin(ref, origin_map))
        if not origin.is_first_party or not graph.origin(ref).is_first_party:
            continue
        if allowed is not None and ref not in allowed:
            continue
        if keep(ref):
            entries.add(ref)
    if not entries:
        raise StaticGraphError("no first-party entry points found")
    return EntryPointSet(entries)


def build_static(program: ProgramDocument,
                 origin_map: Optional[OriginMap] = None,
                 options: Optional[StaticOptions] = None) -> StaticBuild:
    """init -> CHA -> RTA -> reflection -> entry points -> prune."""
    origin_map = origin_map or OriginMap()
    options = options or StaticOptions()
    diagnostics = {}

    hierarchy = build_hierarchy(program)
    initial = init_edges(program, origin_map, hierarchy)
    diagnostics["init_vertices"] = len(initial)
    diagnostics["init_edges"] = len(initial.edges)
    cha = apply_cha(initial, hierarchy, diagnostics)

    seeds = default_seeds(cha, program)
    if not seeds:
        raise StaticGraphError("no first-party entry points found")
    rta, instantiated = apply_rta(cha, hierarchy, program, seeds)
    diagnostics["rta_edges_removed"] = len(cha.edges) - len(rta.edges)
    reflected = apply_reflection(rta, program, diagnostics)

    entries = compute_entry_points(reflected, origin_map,
                                   options.entry_filter, candidates=seeds)
    reachable = reflected.reachable_from(entries)
    graph = reflected.subgraph(reachable)
    diagnostics["pruned_vertices"] = len(reflected) - len(graph)
    diagnostics["entry_points"] = len(entries)
    diagnostics["vertices"] = len(graph)
    diagnostics["edges"] = len(graph.edge_pairs)
    logger.info("static graph: %d vertices, %d edges, %d entry points",
                len(graph), len(graph.edge_pairs), len(entries))
    return StaticBuild(graph, entries, instantiated, diagnostics)
