"""Core domain types shared by every analysis stage.

Method identity is purely textual: two references are the same method when
their canonical forms ``class.method(params)returns`` are byte-identical.
Graphs are immutable values; every pass returns a new graph.
"""

import enum
import functools
from dataclasses import dataclass, field
from functools import cached_property
from typing import (Dict, FrozenSet, Iterable, Mapping, NamedTuple,
                    Optional, Tuple)

import networkx as nx

from .errors import ChainError, GraphError, MethodRefError
from .versions import Version

FIRST_PARTY = "first-party"
THIRD_PARTY = "third-party"
FRAMEWORK = "framework"

DEFAULT_FRAMEWORK_PREFIXES = (
    "org.junit.",
    "junit.",
    "org.testng.",
    "org.apache.maven.surefire.",
)


@functools.total_ordering
@dataclass(frozen=True)
class MethodRef:
    class_name: str
    method_name: str
    params: str = ""
    returns: str = ""

    def __post_init__(self):
        if not self.class_name or not self.method_name:
            raise MethodRefError("class and method names must be non-empty",
                                 "%s.%s" % (self.class_name, self.method_name),
                                 0, 0)

    @property
    def descriptor(self):
        return "(%s)%s" % (self.params, self.returns)

    @property
    def canonical(self):
        return "%s.%s%s" % (self.class_name, self.method_name, self.descriptor)

    def __str__(self):
        return self.canonical

    def __lt__(self, other):
        if not isinstance(other, MethodRef):
            return NotImplemented
        return self.canonical < other.canonical


def parse_method_ref(text) -> MethodRef:
    """Parse the canonical text form ``class.method(params)returns``.

    >>> parse_method_ref("com.app.Foo.bar(I)V").returns
    'V'
    """
    if not isinstance(text, str):
        raise TypeError("method reference must be str, not %s"
                        % type(text).__name__)
    if not text:
        raise MethodRefError("empty method reference", text, 0, 0)
    for i, char in enumerate(text):
        if char.isspace():
            raise MethodRefError("whitespace", text, i, i + 1)

    open_at = text.find("(")
    if open_at < 0:
        raise MethodRefError("missing '(' descriptor", text, 0, len(text))
    close_at = text.find(")", open_at)
    if close_at < 0:
        raise MethodRefError("missing ')'", text, open_at, len(text))

    head = text[:open_at]
    dot = head.rfind(".")
    if dot < 0:
        raise MethodRefError("missing class name", text, 0, open_at)
    class_name, method_name = head[:dot], head[dot + 1:]
    if not class_name:
        raise MethodRefError("empty class name", text, 0, dot)
    if not method_name:
        raise MethodRefError("empty method name", text, dot + 1, open_at)
    segment_start = 0
    for segment in class_name.split("."):
        if not segment:
            raise MethodRefError("empty package segment", text,
                                 segment_start, segment_start + 1)
        segment_start += len(segment) + 1

    params = text[open_at + 1:close_at]
    if "(" in params:
        raise MethodRefError("nested '('", text, open_at + 1, close_at)
    returns = text[close_at + 1:]
    for i, char in enumerate(returns, start=close_at + 1):
        if char in "()":
            raise MethodRefError("unexpected %r after descriptor" % char,
                                 text, i, i + 1)
    return MethodRef(class_name, method_name, params, returns)


def format_method_ref(ref: MethodRef) -> str:
    return ref.canonical


@functools.total_ordering
@dataclass(frozen=True)
class Coordinate:
    group: str
    artifact: str
    version: Version

    @classmethod
    def parse(cls, text):
        """Parse ``group:artifact:version``."""
        if not isinstance(text, str):
            raise TypeError("coordinate must be str")
        parts = text.split(":")
        if len(parts) != 3 or not parts[0] or not parts[1]:
            raise ValueError("coordinate %r is not group:artifact:version"
                             % (text,))
        return cls(parts[0], parts[1], Version.parse(parts[2]))

    @property
    def key(self):
        """The ``group:artifact`` package key."""
        return "%s:%s" % (self.group, self.artifact)

    def sort_key(self):
        return (self.group, self.artifact, self.version.sort_key())

    def __lt__(self, other):
        if not isinstance(other, Coordinate):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def __str__(self):
        return "%s:%s:%s" % (self.group, self.artifact, self.version)


@dataclass(frozen=True)
class Origin:
    kind: str
    coordinate: Optional[Coordinate] = None
    namespace: Optional[str] = None

    @classmethod
    def first_party(cls):
        return cls(FIRST_PARTY)

    @classmethod
    def third_party(cls, coordinate=None):
        return cls(THIRD_PARTY, coordinate=coordinate)

    @classmethod
    def framework(cls, namespace):
        return cls(FRAMEWORK, namespace=namespace)

    @property
    def is_first_party(self):
        return self.kind == FIRST_PARTY

    @property
    def is_third_party(self):
        return self.kind == THIRD_PARTY

    @property
    def is_framework(self):
        return self.kind == FRAMEWORK

    def to_dict(self):
        doc = {"kind": self.kind}
        if self.coordinate is not None:
            doc["coordinate"] = str(self.coordinate)
        if self.namespace is not None:
            doc["namespace"] = self.namespace
        return doc

    def __str__(self):
        if self.coordinate is not None:
            return "%s(%s)" % (self.kind, self.coordinate)
        if self.namespace is not None:
            return "%s(%s)" % (self.kind, self.namespace)
        return self.kind


@dataclass(frozen=True)
class OriginRule:
    prefix: str
    origin: Origin


@dataclass(frozen=True)
class OriginMap:
    """Ordered namespace-prefix rules; the first matching prefix wins."""

    rules: Tuple[OriginRule, ...] = ()
    default: Origin = field(default_factory=Origin.first_party)

    @classmethod
    def build(cls, libraries=(), framework_prefixes=None):
        """Library rules first, then framework rules.

        *libraries* is an iterable of ``(prefix, Coordinate)`` pairs;
        *framework_prefixes* defaults to :data:`DEFAULT_FRAMEWORK_PREFIXES`.
        """
        if framework_prefixes is None:
            framework_prefixes = DEFAULT_FRAMEWORK_PREFIXES
        rules = [OriginRule(prefix, Origin.third_party(coordinate))
                 for prefix, coordinate in libraries]
        rules.extend(OriginRule(prefix, Origin.framework(prefix))
                     for prefix in framework_prefixes)
        return cls(tuple(rules))

    def classify_class(self, class_name):
        for rule in self.rules:
            if class_name.startswith(rule.prefix):
                return rule.origin
        return self.default


def classify_origin(ref: MethodRef, origin_map: OriginMap) -> Origin:
    return origin_map.classify_class(ref.class_name)


class Provenance(str, enum.Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"
    CHAIN = "chain"


class Edge(NamedTuple):
    caller: MethodRef
    callee: MethodRef
    provenance: Provenance

    def sort_key(self):
        return (self.caller.canonical, self.callee.canonical,
                self.provenance.value)


@dataclass(frozen=True)
class CallGraph:
    """Vertices with their origins plus provenance-tagged edges.

    An edge observed by two analyses is stored once per provenance.
    """

    origins: Mapping[MethodRef, Origin] = field(default_factory=dict)
    edges: FrozenSet[Edge] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "origins", dict(self.origins))
        object.__setattr__(self, "edges", frozenset(self.edges))
        for edge in self.edges:
            if edge.caller not in self.origins:
                raise GraphError("edge %s -> %s: caller is not a vertex"
                                 % (edge.caller, edge.callee))
            if edge.callee not in self.origins:
                raise GraphError("edge %s -> %s: callee is not a vertex"
                                 % (edge.caller, edge.callee))

    @classmethod
    def empty(cls):
        return cls({}, frozenset())

    @property
    def vertices(self) -> FrozenSet[MethodRef]:
        return frozenset(self.origins)

    def __contains__(self, ref):
        return ref in self.origins

    def __len__(self):
        return len(self.origins)

    def origin(self, ref) -> Origin:
        return self.origins[ref]

    def sorted_vertices(self):
        return sorted(self.origins)

    def sorted_edges(self):
        return sorted(self.edges, key=Edge.sort_key)

    @cached_property
    def edge_pairs(self) -> FrozenSet[Tuple[MethodRef, MethodRef]]:
        return frozenset((e.caller, e.callee) for e in self.edges)

    @cached_property
    def _provenance_index(self) -> Dict[Tuple[MethodRef, MethodRef],
                                        FrozenSet[Provenance]]:
        index = {}
        for edge in self.edges:
            index.setdefault((edge.caller, edge.callee), set()).add(
                edge.provenance)
        return {pair: frozenset(kinds) for pair, kinds in index.items()}

    def provenances(self, caller, callee) -> FrozenSet[Provenance]:
        return self._provenance_index.get((caller, callee), frozenset())

    @cached_property
    def digraph(self) -> nx.DiGraph:
        """A networkx view; nodes and edges are inserted in sorted order."""
        graph = nx.DiGraph()
        graph.add_nodes_from(self.sorted_vertices())
        for caller, callee in sorted(self.edge_pairs):
            graph.add_edge(caller, callee,
                           provenance=self.provenances(caller, callee))
        return graph

    def successors(self, ref):
        if ref not in self.origins:
            return []
        return sorted(self.digraph.successors(ref))

    def predecessors(self, ref):
        if ref not in self.origins:
            return []
        return sorted(self.digraph.predecessors(ref))

    def in_degree(self, ref):
        return self.digraph.in_degree(ref)

    def out_degree(self, ref):
        return self.digraph.out_degree(ref)

    def zero_in_degree(self) -> FrozenSet[MethodRef]:
        return frozenset(v for v, degree in self.digraph.in_degree()
                         if degree == 0)

    def reachable_from(self, roots: Iterable[MethodRef]
                       ) -> FrozenSet[MethodRef]:
        seen = set()
        for root in roots:
            if root in self.origins and root not in seen:
                seen.add(root)
                seen.update(nx.descendants(self.digraph, root))
        return frozenset(seen)

    def with_additions(self, origins=(), edges=()):
        """A new graph with extra vertices and edges.

        Vertices already present keep their origin.
        """
        merged = dict(origins.items() if isinstance(origins, Mapping)
                      else origins)
        merged.update(self.origins)
        return CallGraph(merged, self.edges | frozenset(edges))

    def without_edges(self, edges):
        return CallGraph(self.origins, self.edges - frozenset(edges))

    def subgraph(self, vertices):
        """The subgraph induced by *vertices*."""
        keep = frozenset(vertices) & self.vertices
        return CallGraph(
            {v: self.origins[v] for v in keep},
            frozenset(e for e in self.edges
                      if e.caller in keep and e.callee in keep))

    def stats(self):
        return {"vertices": len(self.origins), "edges": len(self.edge_pairs)}

    def to_dict(self):
        return {
            "vertices": [{"ref": str(v), "origin": self.origins[v].to_dict()}
                         for v in self.sorted_vertices()],
            "edges": [{"caller": str(e.caller), "callee": str(e.callee),
                       "provenance": e.provenance.value}
                      for e in self.sorted_edges()],
        }


@dataclass(frozen=True)
class CallChain:
    """An edge sequence from a library entry point to a sink."""

    edges: Tuple[Tuple[MethodRef, MethodRef], ...]
    sink: MethodRef
    library: Coordinate

    def __post_init__(self):
        edges = tuple((caller, callee) for caller, callee in self.edges)
        object.__setattr__(self, "edges", edges)
        if not edges:
            raise ChainError("a call chain needs at least one edge")
        for i in range(len(edges) - 1):
            if edges[i][1] != edges[i + 1][0]:
                raise ChainError(
                    "edge %d ends at %s but edge %d starts at %s"
                    % (i, edges[i][1], i + 1, edges[i + 1][0]))
        if edges[-1][1] != self.sink:
            raise ChainError("last edge ends at %s, not at sink %s"
                             % (edges[-1][1], self.sink))

    @classmethod
    def from_path(cls, path, library):
        """Build a chain from a vertex path ``[m1, m2, ..., sink]``."""
        path = list(path)
        return cls(tuple(zip(path, path[1:])), path[-1], library)

    @property
    def entry(self):
        return self.edges[0][0]

    @property
    def path(self):
        return [self.edges[0][0]] + [callee for _, callee in self.edges]

    def __len__(self):
        return len(self.edges)

    def sort_key(self):
        return tuple(ref.canonical for ref in self.path)


@dataclass(frozen=True)
class EntryPointSet:
    methods: FrozenSet[MethodRef] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "methods", frozenset(self.methods))

    def __iter__(self):
        return iter(sorted(self.methods))

    def __len__(self):
        return len(self.methods)

    def __contains__(self, ref):
        return ref in self.methods
