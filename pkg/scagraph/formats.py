"""Interchange documents: program IR, traces, registries, manifests,
lockfiles, vulnerability databases, chain files, saved graphs and reports.

Every loader accepts ``bytes`` or ``str`` and raises :class:`FormatError`
(naming the JSON path of the offending node) for any malformed input. Field
names are frozen in ``doc/formats.rst``.
"""

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from .errors import FormatError, ScaError
from .model import (CallChain, CallGraph, Coordinate, Edge, MethodRef,
                    Origin, Provenance, parse_method_ref)
from .version import __version__
from .versions import Constraint, Version

logger = logging.getLogger(__name__)

APPLICATION = "application"
LIBRARY = "library"

VISIBILITIES = ("public", "protected", "package", "private")

STATIC_CALL = "static"
VIRTUAL_CALL = "virtual"
REFLECTIVE_CALL = "reflective"

MACHINE_FORMATS = ("json", "machine")
HUMAN_FORMATS = ("markdown", "human")


# -- IR ---------------------------------------------------------------------

@dataclass(frozen=True)
class CallSite:
    kind: str
    target: Optional[MethodRef] = None
    receiver: Optional[str] = None
    method_name: Optional[str] = None
    descriptor: Optional[str] = None
    class_const: Optional[str] = None
    method_const: Optional[str] = None

    @classmethod
    def static(cls, target):
        return cls(STATIC_CALL, target=target)

    @classmethod
    def virtual(cls, receiver, method_name, descriptor="()"):
        return cls(VIRTUAL_CALL, receiver=receiver, method_name=method_name,
                   descriptor=descriptor)

    @classmethod
    def reflective(cls, class_const=None, method_const=None):
        return cls(REFLECTIVE_CALL, class_const=class_const,
                   method_const=method_const)

    @property
    def declared_target(self) -> Optional[MethodRef]:
        """The method named at the site, before any dispatch analysis."""
        if self.kind == STATIC_CALL:
            return self.target
        if self.kind == VIRTUAL_CALL:
            return signature_ref(self.receiver, self.method_name,
                                 self.descriptor)
        return None

    def to_dict(self):
        if self.kind == STATIC_CALL:
            return {"kind": STATIC_CALL, "target": str(self.target)}
        if self.kind == VIRTUAL_CALL:
            return {"kind": VIRTUAL_CALL, "receiver": self.receiver,
                    "method": self.method_name,
                    "descriptor": self.descriptor}
        return {"kind": REFLECTIVE_CALL, "class": self.class_const,
                "method": self.method_const}


def signature_ref(class_name, method_name, descriptor) -> MethodRef:
    return parse_method_ref("%s.%s%s" % (class_name, method_name, descriptor))


@dataclass(frozen=True)
class MethodModel:
    ref: MethodRef
    visibility: str = "public"
    is_static: bool = False
    body_digest: str = ""
    instantiates: Tuple[str, ...] = ()
    call_sites: Tuple[CallSite, ...] = ()

    @property
    def signature(self):
        return (self.ref.method_name, self.ref.descriptor)

    def to_dict(self):
        return {
            "name": self.ref.method_name,
            "descriptor": self.ref.descriptor,
            "visibility": self.visibility,
            "static": self.is_static,
            "body_digest": self.body_digest,
            "instantiates": list(self.instantiates),
            "calls": [site.to_dict() for site in self.call_sites],
        }


@dataclass(frozen=True)
class ClassModel:
    name: str
    superclass: Optional[str] = None
    interfaces: Tuple[str, ...] = ()
    is_abstract: bool = False
    methods: Tuple[MethodModel, ...] = ()

    def to_dict(self):
        doc = {"name": self.name, "interfaces": list(self.interfaces),
               "abstract": self.is_abstract,
               "methods": [m.to_dict() for m in self.methods]}
        if self.superclass is not None:
            doc["superclass"] = self.superclass
        return doc


@dataclass(frozen=True)
class ProgramDocument:
    origin: str
    classes: Tuple[ClassModel, ...] = ()
    coordinate: Optional[Coordinate] = None

    @property
    def is_library(self):
        return self.origin == LIBRARY

    def class_named(self, name) -> Optional[ClassModel]:
        return self._classes_by_name.get(name)

    @cached_property
    def _classes_by_name(self):
        return {cls.name: cls for cls in self.classes}

    def methods(self):
        for cls in self.classes:
            yield from cls.methods

    def method_refs(self):
        return frozenset(m.ref for m in self.methods())

    def to_dict(self):
        doc = {"origin": self.origin,
               "classes": [cls.to_dict() for cls in self.classes]}
        if self.coordinate is not None:
            doc["coordinate"] = str(self.coordinate)
        return doc


# -- other documents ---------------------------------------------------------

@dataclass(frozen=True)
class TraceEvent:
    caller: MethodRef
    callee: MethodRef


@dataclass(frozen=True)
class TraceDocument:
    events: Tuple[TraceEvent, ...] = ()

    def __len__(self):
        return len(self.events)


@dataclass(frozen=True)
class Dependency:
    package: str
    constraint: Constraint


@dataclass(frozen=True)
class RegistryDocument:
    packages: Mapping[str, Mapping[Version, Tuple[Dependency, ...]]] = \
        field(default_factory=dict)

    def __contains__(self, package):
        return package in self.packages

    def versions(self, package) -> List[Version]:
        return sorted(self.packages.get(package, {}))

    def dependencies(self, package, version) -> Tuple[Dependency, ...]:
        return self.packages[package][version]

    def has(self, coordinate: Coordinate):
        return coordinate.version in self.packages.get(coordinate.key, {})


@dataclass(frozen=True)
class ManifestDocument:
    dependencies: Tuple[Dependency, ...] = ()


@dataclass(frozen=True)
class VulnRecord:
    vuln_id: str
    package: str
    affected: Constraint
    sinks: Tuple[MethodRef, ...]

    def affects(self, coordinate: Coordinate):
        return (coordinate.key == self.package
                and self.affected.satisfied_by(coordinate.version))


@dataclass(frozen=True)
class VulnDbDocument:
    records: Tuple[VulnRecord, ...] = ()

    def sinks(self):
        return sorted({sink for r in self.records for sink in r.sinks})

    def for_library(self, coordinate: Coordinate):
        return [r for r in self.records if r.affects(coordinate)]


@dataclass(frozen=True)
class LockEntry:
    coordinate: Coordinate
    parent: Optional[Coordinate] = None


@dataclass(frozen=True)
class LockfileDocument:
    entries: Tuple[LockEntry, ...] = ()


@dataclass(frozen=True)
class ChainFile:
    library: Coordinate
    chains: Tuple[CallChain, ...] = ()
    truncated: Tuple[MethodRef, ...] = ()


@dataclass
class FindingsReport:
    """Everything a run reports.

    Sections are duck-typed: each entry provides ``to_dict()``.
    """

    findings: Sequence[Any] = ()
    resolution: Optional[Any] = None
    comparisons: Sequence[Any] = ()
    breaking: Sequence[Any] = ()
    stats: Dict[str, Any] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)


# -- decoding helpers --------------------------------------------------------

def _decode_json(data, path="$"):
    if isinstance(data, (bytes, bytearray)):
        try:
            data = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError("not UTF-8 text (%s)" % exc.reason, path)
    if not isinstance(data, str):
        raise TypeError("expected bytes or str, not %s" % type(data).__name__)
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError("invalid JSON: %s" % exc.msg,
                          "%s (line %d)" % (path, exc.lineno))
    except (RecursionError, ValueError) as exc:
        raise FormatError("invalid JSON: %s" % exc, path)


_TYPE_NAMES = {dict: "object", list: "array", str: "string", bool: "boolean",
               int: "integer"}


def _expect(value, kind, path):
    ok = isinstance(value, kind)
    if kind is int and isinstance(value, bool):
        ok = False
    if not ok:
        raise FormatError("expected %s" % _TYPE_NAMES.get(kind, kind.__name__),
                          path)
    return value


def _field(obj, key, kind, path, default=...):
    if key not in obj or (obj[key] is None and default is not ...):
        if default is ...:
            raise FormatError("missing field %r" % key, path)
        return default
    return _expect(obj[key], kind, "%s.%s" % (path, key))


def _string(obj, key, path, default=..., nonempty=True):
    value = _field(obj, key, str, path, default)
    if nonempty and value == "" and default is ...:
        raise FormatError("must be non-empty", "%s.%s" % (path, key))
    return value


def _string_list(obj, key, path):
    values = _field(obj, key, list, path, [])
    for i, value in enumerate(values):
        _expect(value, str, "%s.%s[%d]" % (path, key, i))
    return tuple(values)


def _method_ref(text, path):
    _expect(text, str, path)
    try:
        return parse_method_ref(text)
    except ScaError as exc:
        raise FormatError(str(exc), path)


def _coordinate(text, path):
    _expect(text, str, path)
    try:
        return Coordinate.parse(text)
    except (ValueError, ScaError) as exc:
        raise FormatError("bad coordinate: %s" % exc, path)


def _package_key(text, path):
    _expect(text, str, path)
    parts = text.split(":")
    if len(parts) != 2 or not all(parts):
        raise FormatError("package %r is not group:artifact" % (text,), path)
    return text


def _version(text, path, package=None):
    _expect(text, str, path)
    try:
        return Version.parse(text)
    except ScaError as exc:
        where = " of %s" % package if package else ""
        raise FormatError("bad version%s: %s" % (where, exc), path)


def _constraint(text, path, package=None):
    _expect(text, str, path)
    try:
        return Constraint.parse(text)
    except ScaError as exc:
        where = " for %s" % package if package else ""
        raise FormatError("bad constraint%s: %s" % (where, exc), path)


# -- program -----------------------------------------------------------------

def _load_call_site(obj, path):
    _expect(obj, dict, path)
    kind = _string(obj, "kind", path)
    if kind == STATIC_CALL:
        site = CallSite.static(_method_ref(obj.get("target"),
                                           path + ".target"))
        extra = set(obj) - {"kind", "target"}
    elif kind == VIRTUAL_CALL:
        receiver = _string(obj, "receiver", path)
        name = _string(obj, "method", path)
        descriptor = _string(obj, "descriptor", path)
        # Validates the signature shape.
        _method_ref("%s.%s%s" % (receiver, name, descriptor),
                    path + ".descriptor")
        site = CallSite.virtual(receiver, name, descriptor)
        extra = set(obj) - {"kind", "receiver", "method", "descriptor"}
    elif kind == REFLECTIVE_CALL:
        site = CallSite.reflective(_string(obj, "class", path, None),
                                   _string(obj, "method", path, None))
        extra = set(obj) - {"kind", "class", "method"}
    else:
        raise FormatError("unknown call kind %r" % (kind,), path + ".kind")
    if extra:
        raise FormatError("unexpected fields %s for %s call"
                          % (sorted(extra), kind), path)
    return site


def _load_method(obj, class_name, path):
    _expect(obj, dict, path)
    name = _string(obj, "name", path)
    descriptor = _string(obj, "descriptor", path)
    ref = _method_ref("%s.%s%s" % (class_name, name, descriptor),
                      path + ".descriptor")
    if ref.method_name != name:
        raise FormatError("method name %r is not an identifier" % name,
                          path + ".name")
    visibility = _string(obj, "visibility", path, "public")
    if visibility not in VISIBILITIES:
        raise FormatError("visibility must be one of %s" % (VISIBILITIES,),
                          path + ".visibility")
    calls = _field(obj, "calls", list, path, [])
    return MethodModel(
        ref=ref,
        visibility=visibility,
        is_static=_field(obj, "static", bool, path, False),
        body_digest=_string(obj, "body_digest", path, ""),
        instantiates=_string_list(obj, "instantiates", path),
        call_sites=tuple(_load_call_site(site, "%s.calls[%d]" % (path, i))
                         for i, site in enumerate(calls)))


def _load_class(obj, path):
    _expect(obj, dict, path)
    name = _string(obj, "name", path)
    if any(not part for part in name.split(".")) or any(
            c.isspace() or c in "()" for c in name):
        raise FormatError("invalid class name %r" % name, path + ".name")
    methods = []
    seen = set()
    for i, method_obj in enumerate(_field(obj, "methods", list, path, [])):
        method_path = "%s.methods[%d]" % (path, i)
        method = _load_method(method_obj, name, method_path)
        if method.signature in seen:
            raise FormatError("duplicate method %s" % method.ref, method_path)
        seen.add(method.signature)
        methods.append(method)
    return ClassModel(
        name=name,
        superclass=_string(obj, "superclass", path, None),
        interfaces=_string_list(obj, "interfaces", path),
        is_abstract=_field(obj, "abstract", bool, path, False),
        methods=tuple(methods))


def load_program(data) -> ProgramDocument:
    doc = _expect(_decode_json(data), dict, "$")
    origin = _string(doc, "origin", "$")
    coordinate = None
    if origin == LIBRARY:
        coordinate = _coordinate(doc.get("coordinate"), "$.coordinate")
    elif origin != APPLICATION:
        raise FormatError("origin must be %r or %r" % (APPLICATION, LIBRARY),
                          "$.origin")
    classes = []
    names = set()
    for i, class_obj in enumerate(_field(doc, "classes", list, "$", [])):
        path = "$.classes[%d]" % i
        cls = _load_class(class_obj, path)
        if cls.name in names:
            raise FormatError("duplicate class %s" % cls.name, path)
        names.add(cls.name)
        classes.append(cls)
    program = ProgramDocument(origin, tuple(classes), coordinate)
    logger.debug("loaded %s document with %d classes", origin, len(classes))
    return program


def save_program(program: ProgramDocument) -> bytes:
    return _dump(program.to_dict())


# -- traces ------------------------------------------------------------------

def load_trace(data) -> TraceDocument:
    if isinstance(data, str):
        data = data.encode("utf-8")
    if not isinstance(data, (bytes, bytearray)):
        raise TypeError("expected bytes or str, not %s" % type(data).__name__)
    events = []
    for lineno, raw in enumerate(bytes(data).split(b"\n"), start=1):
        if not raw.strip():
            continue
        where = "line %d" % lineno
        obj = _expect(_decode_json(raw, where), dict, where)
        events.append(TraceEvent(
            _method_ref(obj.get("caller"), where + " caller"),
            _method_ref(obj.get("callee"), where + " callee")))
    return TraceDocument(tuple(events))


def save_trace(trace: TraceDocument) -> bytes:
    return b"".join(
        json.dumps({"caller": str(e.caller), "callee": str(e.callee)},
                   sort_keys=True).encode("utf-8") + b"\n"
        for e in trace.events)


# -- registry, manifest, lockfile, vulndb -----------------------------------

def _load_dependency(obj, path):
    _expect(obj, dict, path)
    package = _package_key(obj.get("package"), path + ".package")
    constraint = _constraint(obj.get("constraint"), path + ".constraint",
                             package)
    return Dependency(package, constraint)


def load_registry(data) -> RegistryDocument:
    doc = _expect(_decode_json(data), dict, "$")
    packages = {}
    for package, versions in _field(doc, "packages", dict, "$").items():
        ppath = "$.packages[%s]" % json.dumps(package)
        _package_key(package, ppath)
        _expect(versions, dict, ppath)
        table = {}
        for text, deps in versions.items():
            vpath = "%s[%s]" % (ppath, json.dumps(text))
            version = _version(text, vpath, package)
            if version in table:
                raise FormatError("version %s of %s listed twice"
                                  % (version, package), vpath)
            _expect(deps, list, vpath)
            loaded = tuple(_load_dependency(dep, "%s[%d]" % (vpath, i))
                           for i, dep in enumerate(deps))
            for dep in loaded:
                if dep.package == package and dep.constraint.satisfied_by(
                        version):
                    raise FormatError("%s:%s depends on itself"
                                      % (package, version), vpath)
            table[version] = loaded
        packages[package] = table
    return RegistryDocument(packages)


def save_registry(registry: RegistryDocument) -> bytes:
    return _dump({"packages": {
        package: {str(v): [{"package": d.package,
                            "constraint": d.constraint.text}
                           for d in registry.packages[package][v]]
                  for v in sorted(registry.packages[package])}
        for package in registry.packages}})


def load_manifest(data) -> ManifestDocument:
    doc = _expect(_decode_json(data), dict, "$")
    deps = []
    seen = set()
    for i, obj in enumerate(_field(doc, "dependencies", list, "$", [])):
        path = "$.dependencies[%d]" % i
        dep = _load_dependency(obj, path)
        if dep.package in seen:
            raise FormatError("duplicate dependency %s" % dep.package, path)
        seen.add(dep.package)
        deps.append(dep)
    return ManifestDocument(tuple(deps))


def load_lockfile(data) -> LockfileDocument:
    doc = _expect(_decode_json(data), dict, "$")
    entries = []
    for i, obj in enumerate(_field(doc, "packages", list, "$", [])):
        path = "$.packages[%d]" % i
        _expect(obj, dict, path)
        coordinate = _coordinate(obj.get("coordinate"), path + ".coordinate")
        parent = obj.get("parent")
        if parent is not None:
            parent = _coordinate(parent, path + ".parent")
        entries.append(LockEntry(coordinate, parent))
    return LockfileDocument(tuple(entries))


def save_lockfile(lockfile: LockfileDocument) -> bytes:
    return _dump({"packages": [
        {"coordinate": str(e.coordinate),
         "parent": None if e.parent is None else str(e.parent)}
        for e in lockfile.entries]})


def load_vulndb(data) -> VulnDbDocument:
    doc = _expect(_decode_json(data), dict, "$")
    records = []
    ids = set()
    for i, obj in enumerate(_field(doc, "vulnerabilities", list, "$", [])):
        path = "$.vulnerabilities[%d]" % i
        _expect(obj, dict, path)
        vuln_id = _string(obj, "id", path)
        if vuln_id in ids:
            raise FormatError("duplicate vulnerability id %s" % vuln_id, path)
        ids.add(vuln_id)
        package = _package_key(obj.get("package"), path + ".package")
        affected = _constraint(obj.get("affected", "*"), path + ".affected",
                               package)
        sinks = _field(obj, "sinks", list, path)
        if not sinks:
            raise FormatError("sink list of %s is empty" % vuln_id,
                              path + ".sinks")
        records.append(VulnRecord(
            vuln_id, package, affected,
            tuple(_method_ref(s, "%s.sinks[%d]" % (path, j))
                  for j, s in enumerate(sinks))))
    return VulnDbDocument(tuple(records))


# -- chains ------------------------------------------------------------------

def save_chains(chain_file: ChainFile) -> bytes:
    chains = []
    for i, chain in enumerate(chain_file.chains):
        if chain.library != chain_file.library:
            raise FormatError("chain library %s differs from file library %s"
                              % (chain.library, chain_file.library),
                              "$.chains[%d]" % i)
        chains.append({"sink": str(chain.sink),
                       "edges": [[str(a), str(b)] for a, b in chain.edges]})
    return _dump({"library": str(chain_file.library),
                  "chains": chains,
                  "truncated": [str(s) for s in chain_file.truncated]})


def load_chains(data) -> ChainFile:
    doc = _expect(_decode_json(data), dict, "$")
    library = _coordinate(doc.get("library"), "$.library")
    chains = []
    for i, obj in enumerate(_field(doc, "chains", list, "$", [])):
        path = "$.chains[%d]" % i
        _expect(obj, dict, path)
        sink = _method_ref(obj.get("sink"), path + ".sink")
        edges = []
        for j, pair in enumerate(_field(obj, "edges", list, path)):
            epath = "%s.edges[%d]" % (path, j)
            _expect(pair, list, epath)
            if len(pair) != 2:
                raise FormatError("edge must be [caller, callee]", epath)
            edges.append((_method_ref(pair[0], epath + "[0]"),
                          _method_ref(pair[1], epath + "[1]")))
        try:
            chains.append(CallChain(tuple(edges), sink, library))
        except ScaError as exc:
            raise FormatError("chain %d: %s" % (i, exc), path)
    truncated = tuple(_method_ref(s, "$.truncated[%d]" % i)
                      for i, s in enumerate(_string_list(doc, "truncated",
                                                         "$")))
    return ChainFile(library, tuple(chains), truncated)


# -- saved graphs ------------------------------------------------------------

def save_graph(graph: CallGraph) -> bytes:
    return _dump(graph.to_dict())


def _origin(obj, path):
    _expect(obj, dict, path)
    kind = _string(obj, "kind", path)
    if kind == "first-party":
        return Origin.first_party()
    if kind == "third-party":
        coordinate = obj.get("coordinate")
        if coordinate is not None:
            coordinate = _coordinate(coordinate, path + ".coordinate")
        return Origin.third_party(coordinate)
    if kind == "framework":
        return Origin.framework(_string(obj, "namespace", path))
    raise FormatError("unknown origin kind %r" % (kind,), path + ".kind")


def load_graph(data) -> CallGraph:
    doc = _expect(_decode_json(data), dict, "$")
    origins = {}
    for i, obj in enumerate(_field(doc, "vertices", list, "$")):
        path = "$.vertices[%d]" % i
        _expect(obj, dict, path)
        origins[_method_ref(obj.get("ref"), path + ".ref")] = _origin(
            obj.get("origin"), path + ".origin")
    edges = []
    for i, obj in enumerate(_field(doc, "edges", list, "$")):
        path = "$.edges[%d]" % i
        _expect(obj, dict, path)
        try:
            provenance = Provenance(obj.get("provenance"))
        except (TypeError, ValueError):
            raise FormatError("unknown provenance", path + ".provenance")
        edges.append(Edge(_method_ref(obj.get("caller"), path + ".caller"),
                          _method_ref(obj.get("callee"), path + ".callee"),
                          provenance))
    try:
        return CallGraph(origins, frozenset(edges))
    except ScaError as exc:
        raise FormatError(str(exc), "$.edges")


# -- reports -----------------------------------------------------------------

def _dump(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)
            + "\n").encode("utf-8")


def report_dict(report: FindingsReport) -> Dict[str, Any]:
    findings = sorted((f.to_dict() for f in report.findings),
                      key=lambda f: (f["vuln_id"], f["sink"]))
    return {
        "tool": {"name": "scagraph", "version": __version__},
        "summary": {
            "findings": len(findings),
            "reachable": sum(1 for f in findings if f["reachable"]),
            "potentially_breaking": sum(
                1 for b in report.breaking
                if b.to_dict()["verdict"] == "potentially-breaking"),
        },
        "findings": findings,
        "resolution": (None if report.resolution is None
                       else report.resolution.to_dict()),
        "comparisons": [c.to_dict() for c in report.comparisons],
        "breaking": [b.to_dict() for b in report.breaking],
        "stats": dict(report.stats),
        "diagnostics": dict(report.diagnostics),
    }


def emit_report(report: FindingsReport, fmt="json") -> bytes:
    """Serialize *report* as deterministic JSON or as markdown."""
    doc = report_dict(report)
    if fmt in MACHINE_FORMATS:
        return _dump(doc)
    if fmt in HUMAN_FORMATS:
        return _markdown(doc).encode("utf-8")
    raise ValueError("unknown report format %r" % (fmt,))


def _code(text):
    return "`%s`" % text


def _markdown(doc) -> str:
    out = ["# SCA report", ""]
    summary = doc["summary"]
    out.append("%d finding(s), %d reachable." % (summary["findings"],
                                                 summary["reachable"]))
    out.append("")

    if doc["findings"]:
        out += ["## Vulnerable methods", ""]
        by_vuln = {}
        for finding in doc["findings"]:
            by_vuln.setdefault(finding["vuln_id"], []).append(finding)
        for vuln_id in sorted(by_vuln):
            out += ["### %s" % vuln_id, ""]
            for finding in by_vuln[vuln_id]:
                if finding["reachable"]:
                    out.append("- %s is **reachable** (%s)"
                               % (_code(finding["sink"]),
                                  finding["provenance"]))
                    if finding["witness"]:
                        out.append("  - witness: %s" % " -> ".join(
                            _code(step) for step in finding["witness"]))
                else:
                    out.append("- %s is not reachable"
                               % _code(finding["sink"]))
            out.append("")

    resolution = doc["resolution"]
    if resolution is not None:
        out += ["## Dependencies (%s resolution)" % resolution["mode"], ""]
        for coordinate in resolution["coordinates"]:
            out.append("- %s" % _code(coordinate))
        if not resolution["coordinates"]:
            out.append("No dependencies resolved.")
        for message in resolution["diagnostics"]:
            out.append("- note: %s" % message)
        unreferenced = resolution.get("unreferenced")
        if unreferenced is not None:
            out += ["", "Dependencies never referenced by the call graph: "
                    "%d of %d" % (len(unreferenced),
                                  len(resolution["coordinates"]))]
            for coordinate in unreferenced:
                out.append("- %s" % _code(coordinate))
        out.append("")

    for comparison in doc["comparisons"]:
        out += ["## Comparison: %s vs %s" % (comparison["baseline"],
                                            comparison["candidate"]), ""]
        out.append("| | baseline | candidate |")
        out.append("|---|---|---|")
        out.append("| dependencies | %d | %d |" % (
            comparison["baseline_count"], comparison["candidate_count"]))
        if comparison["undefined_baseline"]:
            out.append("\nChange: undefined (empty baseline).")
        else:
            out.append("\nChange: %+.1f%%" % comparison["change_percent"])
        out.append("")

    for advisory in doc["breaking"]:
        out += ["## Upgrade advisory: %s -> %s" % (advisory["from"],
                                                   advisory["to"]), ""]
        out.append("Verdict: **%s** (%s graph)" % (advisory["verdict"],
                                                   advisory["graph_mode"]))
        out.append("")
        for risky in advisory["risky"]:
            out.append("- %s changed (%s)" % (_code(risky["method"]),
                                              risky["reason"]))
            if risky["witness"]:
                out.append("  - used via: %s" % " -> ".join(
                    _code(step) for step in risky["witness"]))
            else:
                out.append("  - no entry point reaches it")
        out.append("")

    if doc["stats"]:
        out += ["## Call graph statistics", "", "| measure | value |",
                "|---|---|"]
        for key in sorted(doc["stats"]):
            out.append("| %s | %s |" % (key, doc["stats"][key]))
        out.append("")
    return "\n".join(out).rstrip("\n") + "\n"
