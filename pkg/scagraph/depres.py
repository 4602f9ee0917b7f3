"""Dependency discovery.

Four modes answer "which library versions does this application use":

* ``declared`` pins each direct dependency to its best registry version and
  stops there, the purely static baseline;
* ``maven`` traverses breadth-first and lets the nearest declaration of an
  artifact win, so there is one version per artifact;
* ``npm`` resolves every constraint on its own, so several versions of one
  artifact may coexist;
* ``lockfile`` replays an exact, previously recorded set.

    >>> from scagraph.formats import load_manifest, load_registry
    >>> registry = load_registry('{"packages": {"g:b": {"1.0.0": [], '
    ...                          '"1.2.0": [], "2.0.0": []}}}')
    >>> manifest = load_manifest('{"dependencies": '
    ...                          '[{"package": "g:b", "constraint": "^1.0"}]}')
    >>> [str(c) for c in resolve_declared(manifest, registry).coordinates]
    ['g:b:1.2.0']
"""

import collections
import dataclasses
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .errors import ResolutionError
from .formats import (Dependency, LockEntry, LockfileDocument,
                      ManifestDocument, RegistryDocument)
from .model import CallGraph, Coordinate
from .versions import Constraint, Version

__all__ = ["Constraint", "Lockfile", "MODES", "ResolutionComparison",
           "ResolutionResult", "compare", "replay_lockfile", "resolve",
           "resolve_declared", "resolve_maven", "resolve_npm",
           "to_lockfile", "unreferenced_dependencies"]

logger = logging.getLogger(__name__)

Lockfile = LockfileDocument

DECLARED = "declared"
MAVEN = "maven"
NPM = "npm"
LOCKFILE = "lockfile"
MODES = (DECLARED, MAVEN, NPM, LOCKFILE)

DECLARED_NOTE = ("declared mode: direct dependencies pinned to their best "
                 "registry version, transitive dependencies not traversed")

TreeEdge = Tuple[Optional[Coordinate], Coordinate]


@dataclass(frozen=True)
class ResolutionResult:
    mode: str
    coordinates: Tuple[Coordinate, ...] = ()
    tree: Tuple[TreeEdge, ...] = ()
    diagnostics: Tuple[str, ...] = ()
    unreferenced: Optional[Tuple[Coordinate, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "coordinates",
                           tuple(sorted(set(self.coordinates))))

    def children(self, parent: Optional[Coordinate]) -> List[Coordinate]:
        return [child for p, child in self.tree if p == parent]

    def packages(self):
        return sorted({c.key for c in self.coordinates})

    def with_unreferenced(self, unreferenced):
        return dataclasses.replace(self, unreferenced=tuple(unreferenced))

    def to_dict(self):
        doc = {
            "mode": self.mode,
            "coordinates": [str(c) for c in self.coordinates],
            "tree": [{"parent": None if p is None else str(p),
                      "child": str(c)} for p, c in self.tree],
            "diagnostics": list(self.diagnostics),
        }
        if self.unreferenced is not None:
            doc["unreferenced"] = [str(c) for c in self.unreferenced]
        return doc


def _best(registry, dep: Dependency) -> Optional[Version]:
    return dep.constraint.best(registry.versions(dep.package))


def resolve_declared(manifest: ManifestDocument,
                     registry: RegistryDocument) -> ResolutionResult:
    tree = []
    diagnostics = [DECLARED_NOTE]
    for dep in manifest.dependencies:
        if dep.package not in registry:
            diagnostics.append("unknown package %s" % dep.package)
            continue
        version = _best(registry, dep)
        if version is None:
            diagnostics.append("no version of %s satisfies %s"
                               % (dep.package, dep.constraint))
            continue
        group, artifact = dep.package.split(":")
        tree.append((None, Coordinate(group, artifact, version)))
    for message in diagnostics[1:]:
        logger.warning(message)
    return ResolutionResult(DECLARED, tuple(c for _, c in tree), tuple(tree),
                            tuple(diagnostics))


def _pick(registry, dep, path):
    if dep.package not in registry:
        raise ResolutionError("unknown package %s" % dep.package, path)
    version = _best(registry, dep)
    if version is None:
        raise ResolutionError("no version of %s satisfies %s"
                              % (dep.package, dep.constraint), path)
    group, artifact = dep.package.split(":")
    return Coordinate(group, artifact, version)


def resolve_maven(manifest: ManifestDocument,
                  registry: RegistryDocument) -> ResolutionResult:
    """Nearest definition wins; equal depths go to the earlier declaration."""
    chosen = {}
    tree = []
    diagnostics = []
    queue = collections.deque((dep, None, ("<root>",))
                              for dep in manifest.dependencies)
    while queue:
        dep, parent, path = queue.popleft()
        if dep.package in chosen:
            winner = chosen[dep.package]
            if not dep.constraint.satisfied_by(winner.version):
                message = ("%s mediated to %s over %s required by %s"
                           % (dep.package, winner.version, dep.constraint,
                              parent))
                logger.info(message)
                diagnostics.append(message)
            continue
        coordinate = _pick(registry, dep, path)
        chosen[dep.package] = coordinate
        tree.append((parent, coordinate))
        for child in registry.dependencies(dep.package, coordinate.version):
            queue.append((child, coordinate, path + (str(coordinate),)))
    return ResolutionResult(MAVEN, tuple(chosen.values()), tuple(tree),
                            tuple(diagnostics))


def resolve_npm(manifest: ManifestDocument,
                registry: RegistryDocument) -> ResolutionResult:
    """Every constraint resolved independently; versions may repeat."""
    expanded = set()
    tree = []
    diagnostics = []

    def visit(dep, parent, path):
        coordinate = _pick(registry, dep, path)
        if (parent, coordinate) not in tree:
            tree.append((parent, coordinate))
        if coordinate in expanded:
            if str(coordinate) in path:
                diagnostics.append("dependency cycle through %s" % coordinate)
            return
        expanded.add(coordinate)
        for child in registry.dependencies(dep.package, coordinate.version):
            visit(child, coordinate, path + (str(coordinate),))

    for dep in manifest.dependencies:
        visit(dep, None, ("<root>",))
    for message in diagnostics:
        logger.info(message)
    return ResolutionResult(NPM, tuple(c for _, c in tree), tuple(tree),
                            tuple(diagnostics))


def replay_lockfile(lockfile: LockfileDocument,
                    registry: RegistryDocument) -> ResolutionResult:
    tree = []
    for entry in lockfile.entries:
        if not registry.has(entry.coordinate):
            raise ResolutionError("stale lockfile: %s is not in the registry"
                                  % entry.coordinate)
        tree.append((entry.parent, entry.coordinate))
    return ResolutionResult(LOCKFILE, tuple(c for _, c in tree), tuple(tree))


def to_lockfile(result: ResolutionResult) -> LockfileDocument:
    return LockfileDocument(tuple(LockEntry(child, parent)
                                  for parent, child in result.tree))


def resolve(mode, manifest=None, registry=None, lockfile=None):
    if mode == DECLARED:
        return resolve_declared(manifest, registry)
    if mode == MAVEN:
        return resolve_maven(manifest, registry)
    if mode == NPM:
        return resolve_npm(manifest, registry)
    if mode == LOCKFILE:
        return replay_lockfile(lockfile, registry)
    raise ValueError("unknown resolution mode %r" % (mode,))


@dataclass(frozen=True)
class ResolutionComparison:
    baseline: str
    candidate: str
    baseline_count: int
    candidate_count: int
    only_baseline: Tuple[Coordinate, ...]
    only_candidate: Tuple[Coordinate, ...]
    change_percent: Optional[float]

    @property
    def undefined_baseline(self):
        return self.change_percent is None

    def to_dict(self):
        return {
            "baseline": self.baseline,
            "candidate": self.candidate,
            "baseline_count": self.baseline_count,
            "candidate_count": self.candidate_count,
            "only_baseline": [str(c) for c in self.only_baseline],
            "only_candidate": [str(c) for c in self.only_candidate],
            "change_percent": self.change_percent,
            "undefined_baseline": self.undefined_baseline,
        }


def compare(a: ResolutionResult, b: ResolutionResult,
            baseline=None, candidate=None) -> ResolutionComparison:
    """How many more (or fewer) dependencies *b* discovers than *a*."""
    left, right = set(a.coordinates), set(b.coordinates)
    change = None
    if left:
        change = round((len(right) - len(left)) * 100.0 / len(left), 2)
    return ResolutionComparison(
        baseline or a.mode, candidate or b.mode, len(left), len(right),
        tuple(sorted(left - right)), tuple(sorted(right - left)), change)


def unreferenced_dependencies(result: ResolutionResult,
                              graph: CallGraph) -> List[Coordinate]:
    """Resolved coordinates whose package has no method in *graph*."""
    referenced = {origin.coordinate.key for origin in graph.origins.values()
                  if origin.is_third_party and origin.coordinate is not None}
    return [c for c in result.coordinates if c.key not in referenced]
