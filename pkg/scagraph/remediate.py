"""Upgrade impact: version diffs, callee-change closure and breaking checks.

A method counts as changed when it was removed, when its body or call list
changed, or when anything it calls (transitively) changed. An upgrade is
potentially breaking when a changed method is a vertex of the application's
call graph.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

import networkx as nx

from .compose import entry_points_of, witness
from .errors import DiffError
from .formats import ProgramDocument
from .model import CallGraph, Coordinate, MethodRef

logger = logging.getLogger(__name__)

STATIC_ONLY = "static-only"
DYNAMIC_ONLY = "dynamic-only"
COMBINED = "combined"
GRAPH_MODES = (STATIC_ONLY, DYNAMIC_ONLY, COMBINED)

POTENTIALLY_BREAKING = "potentially-breaking"
NO_OBSERVED_IMPACT = "no-observed-impact"


@dataclass(frozen=True)
class VersionDiff:
    from_: Coordinate
    to: Coordinate
    added: FrozenSet[MethodRef] = frozenset()
    removed: FrozenSet[MethodRef] = frozenset()
    body_changed: FrozenSet[MethodRef] = frozenset()

    @property
    def seeds(self) -> FrozenSet[MethodRef]:
        return self.removed | self.body_changed

    def to_dict(self):
        return {"from": str(self.from_), "to": str(self.to),
                "added": [str(m) for m in sorted(self.added)],
                "removed": [str(m) for m in sorted(self.removed)],
                "body_changed": [str(m) for m in sorted(self.body_changed)]}


def diff_versions(v1: ProgramDocument, v2: ProgramDocument) -> VersionDiff:
    for doc in (v1, v2):
        if not doc.is_library:
            raise DiffError("only library versions can be diffed")
    if v1.coordinate.key != v2.coordinate.key:
        raise DiffError("cannot diff %s against %s"
                        % (v1.coordinate, v2.coordinate))
    old = {m.ref: m for m in v1.methods()}
    new = {m.ref: m for m in v2.methods()}
    changed = frozenset(
        ref for ref in old.keys() & new.keys()
        if old[ref].body_digest != new[ref].body_digest
        or old[ref].call_sites != new[ref].call_sites)
    diff = VersionDiff(v1.coordinate, v2.coordinate,
                       frozenset(new.keys() - old.keys()),
                       frozenset(old.keys() - new.keys()), changed)
    logger.info("%s -> %s: %d added, %d removed, %d changed", diff.from_,
                diff.to, len(diff.added), len(diff.removed), len(changed))
    return diff


@dataclass(frozen=True)
class SemanticDiff:
    """*reasons* maps each changed method to a path ending at a directly
    changed method; a single-element path means the change is direct."""

    base: VersionDiff
    changed_closure: FrozenSet[MethodRef] = frozenset()
    reasons: Dict[MethodRef, Tuple[MethodRef, ...]] = \
        field(default_factory=dict)

    def reason(self, ref) -> str:
        path = self.reasons[ref]
        if len(path) == 1:
            return "direct"
        return "via callee %s" % " -> ".join(str(step) for step in path[1:])


def semantic_closure(diff: VersionDiff, graph: CallGraph) -> SemanticDiff:
    seeds = diff.seeds
    reasons = {ref: (ref,) for ref in seeds}
    present = sorted(s for s in seeds if s in graph)
    if present:
        backwards = graph.digraph.reverse(copy=False)
        _, paths = nx.multi_source_dijkstra(backwards, present)
        for ref, path in paths.items():
            if ref not in reasons:
                reasons[ref] = tuple(reversed(path))
    logger.debug("closure of %d changed methods has %d members",
                 len(seeds), len(reasons))
    return SemanticDiff(diff, frozenset(reasons), reasons)


@dataclass(frozen=True)
class RiskyMethod:
    method: MethodRef
    reason: str
    witness: Optional[Tuple[MethodRef, ...]] = None

    def to_dict(self):
        return {"method": str(self.method), "reason": self.reason,
                "witness": (None if self.witness is None
                            else [str(step) for step in self.witness])}


@dataclass(frozen=True)
class BreakingReport:
    from_: Coordinate
    to: Coordinate
    graph_mode: str
    risky: Tuple[RiskyMethod, ...] = ()

    @property
    def verdict(self):
        return POTENTIALLY_BREAKING if self.risky else NO_OBSERVED_IMPACT

    def to_dict(self):
        return {"from": str(self.from_), "to": str(self.to),
                "graph_mode": self.graph_mode, "verdict": self.verdict,
                "risky": [r.to_dict() for r in self.risky]}


def check_breaking(app: CallGraph, sem: SemanticDiff, graph_mode: str,
                   entry_points: Optional[Iterable[MethodRef]] = None
                   ) -> BreakingReport:
    if graph_mode not in GRAPH_MODES:
        raise ValueError("unknown graph mode %r" % (graph_mode,))
    if entry_points is None:
        entry_points = entry_points_of(app)
    entry_points = sorted(entry_points)
    risky = []
    for method in sorted(sem.changed_closure & app.vertices):
        path = witness(app, entry_points, method)
        if path is None:
            logger.warning("%s is a vertex but no entry point reaches it",
                           method)
        risky.append(RiskyMethod(method, sem.reason(method),
                                 None if path is None else tuple(path)))
    report = BreakingReport(sem.base.from_, sem.base.to, graph_mode,
                            tuple(risky))
    logger.info("upgrade %s -> %s: %s (%d risky methods, %s graph)",
                report.from_, report.to, report.verdict, len(risky),
                graph_mode)
    return report
