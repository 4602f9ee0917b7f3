import argparse
import collections
import dataclasses
import random
import sys
import timeit
from functools import partial

from scagraph import Constraint, Coordinate, Version, parse_method_ref
from scagraph.chains import library_graph, precompute_chains
from scagraph.compose import (FIXPOINT, FOLD, merge_chains, reachable_sinks,
                              union)
from scagraph.depres import resolve_maven, resolve_npm
from scagraph.dynamic_cg import framework_entries, ingest_trace, project
from scagraph.formats import (CallSite, ClassModel, Dependency,
                              FindingsReport, ManifestDocument, MethodModel,
                              ProgramDocument, RegistryDocument, TraceDocument,
                              TraceEvent, VulnDbDocument, VulnRecord,
                              emit_report)
from scagraph.remediate import diff_versions, semantic_closure
from scagraph.static_cg import build_static

# Use large programs in tests? If SMALL, no, if LARGE, then yes.
SMALL = False
LARGE = True
LIBRARY = Coordinate.parse("bench.lib:lib:1.0.0")
UPGRADE = Coordinate.parse("bench.lib:lib:1.1.0")
programs = {}
libraries = {}
upgrades = {}
traces = {}
vulndbs = {}
chain_files = {}
graphs = {}
registries = {}


def _method(class_name, name, calls=(), visibility="public", digest=""):
    return MethodModel(parse_method_ref("%s.%s()V" % (class_name, name)),
                       visibility=visibility, body_digest=digest,
                       call_sites=tuple(CallSite.static(parse_method_ref(c))
                                        for c in calls))


def _library(rng, n_classes, coordinate):
    classes = []
    for i in range(n_classes):
        name = "bench.lib.C%d" % i
        methods = []
        for j in range(4):
            calls = ["bench.lib.C%d.m%d()V" % (rng.randrange(i, n_classes),
                                               rng.randrange(4))
                     for _ in range(rng.randrange(3))]
            methods.append(_method(name, "m%d" % j, calls,
                                   "public" if j == 0 else "private",
                                   digest="%d.%d" % (i, j)))
        classes.append(ClassModel(name, methods=tuple(methods)))
    return ProgramDocument("library", tuple(classes), coordinate)


def _upgrade(rng, lib):
    classes = []
    for cls in lib.classes:
        methods = tuple(
            dataclasses.replace(m, body_digest=m.body_digest + "'")
            if rng.random() < 0.05 else m for m in cls.methods)
        classes.append(dataclasses.replace(cls, methods=methods))
    return ProgramDocument("library", tuple(classes), UPGRADE)


def _application(rng, n_classes, n_lib_classes):
    classes = []
    for i in range(n_classes):
        name = "bench.app.A%d" % i
        calls = ["bench.lib.C%d.m0()V" % rng.randrange(n_lib_classes)]
        if i + 1 < n_classes:
            calls.append("bench.app.A%d.run()V" % (i + 1))
        methods = [_method(name, "run", calls)]
        if i == 0:
            methods.append(_method(name, "main", [name + ".run()V"]))
        classes.append(ClassModel(name, methods=tuple(methods)))
    return ProgramDocument("application", tuple(classes))


def _trace(n_classes):
    events = [TraceEvent(parse_method_ref("org.junit.Runner.main()V"),
                         parse_method_ref("bench.app.A0.main()V"))]
    for i in range(n_classes - 1):
        events.append(TraceEvent(
            parse_method_ref("bench.app.A%d.run()V" % i),
            parse_method_ref("bench.app.A%d.run()V" % (i + 1))))
    return TraceDocument(tuple(events))


def _registry(rng, n_packages):
    packages = {}
    for i in range(n_packages):
        versions = {}
        for minor in range(3):
            deps = tuple(
                Dependency("bench:p%d" % rng.randrange(i + 1, n_packages),
                           Constraint.parse("^1.0.0"))
                for _ in range(rng.randrange(3)) if i + 1 < n_packages)
            versions[Version.parse("1.%d.0" % minor)] = deps
        packages["bench:p%d" % i] = versions
    return RegistryDocument(packages)


def _setup():
    rng = random.Random(1)
    sizes = {SMALL: (N_SMALL_CLASSES, 50), LARGE: (N_LARGE_CLASSES, 500)}
    for size, (n_classes, n_packages) in sizes.items():
        lib = _library(rng, n_classes, LIBRARY)
        sink = "bench.lib.C%d.m3()V" % (n_classes - 1)
        vulndb = VulnDbDocument((VulnRecord(
            "BENCH-1", LIBRARY.key, Constraint.parse("*"),
            (parse_method_ref(sink),)),))
        libraries[size] = lib
        upgrades[size] = _upgrade(rng, lib)
        programs[size] = _application(rng, n_classes // 4, n_classes)
        traces[size] = _trace(n_classes // 4)
        vulndbs[size] = vulndb
        chain_files[size] = precompute_chains(lib, vulndb)
        graphs[size] = build_static(programs[size]).graph
        registries[size] = _registry(rng, n_packages)
        print("%s: %d library classes, %d chains, %d static vertices" % (
            "LARGE" if size else "SMALL", n_classes,
            len(chain_files[size].chains), len(graphs[size])))


bench_fns = collections.OrderedDict()


def bench(name):
    def assign_name(fn):
        bench_fns[name] = fn
        return fn

    return assign_name


@bench('build-static')
def static_func(use_large):
    build_static(programs[use_large])


@bench('precompute-chains')
def chains_func(use_large):
    precompute_chains(libraries[use_large], vulndbs[use_large])


@bench('dynamic-projection')
def dynamic_func(use_large):
    graph = ingest_trace(traces[use_large])
    project(graph, framework_entries(graph))


@bench('merge-fold')
def fold_func(use_large):
    merge_chains(graphs[use_large], [chain_files[use_large]], FOLD)


@bench('merge-fixpoint')
def fixpoint_func(use_large):
    merge_chains(graphs[use_large], [chain_files[use_large]], FIXPOINT)


@bench('reach')
def reach_func(use_large):
    dynamic = ingest_trace(traces[use_large])
    combined = union(graphs[use_large], project(dynamic,
                                                framework_entries(dynamic)))
    merged = merge_chains(combined, [chain_files[use_large]])
    emit_report(FindingsReport(findings=reachable_sinks(
        merged, vulndbs[use_large])))


@bench('resolve-maven')
def maven_func(use_large):
    manifest = ManifestDocument(
        (Dependency("bench:p0", Constraint.parse("^1.0.0")),))
    resolve_maven(manifest, registries[use_large])


@bench('resolve-npm')
def npm_func(use_large):
    manifest = ManifestDocument(
        (Dependency("bench:p0", Constraint.parse("^1.0.0")),))
    resolve_npm(manifest, registries[use_large])


@bench('semantic-closure')
def closure_func(use_large):
    old = libraries[use_large]
    semantic_closure(diff_versions(old, upgrades[use_large]),
                     library_graph(old))


parser = argparse.ArgumentParser(formatter_class=argparse.RawTextHelpFormatter,
                                 epilog="""
Available benchmark functions:
   %s
""" % ("\n   ".join(bench_fns.keys()),))
parser.add_argument('--large', action='store_true',
                    help='only test with large programs')
parser.add_argument('--small', action='store_true',
                    help='only test with small programs')
parser.add_argument('--test', action='store_true',
                    help='quick test of benchmark.py')
parser.add_argument('funcs', nargs='*', default=bench_fns.keys())
options = parser.parse_args()

if options.test:
    N_LARGE_CLASSES = 8
    N_SMALL_CLASSES = 4
    N_TRIALS = 1
else:
    N_LARGE_CLASSES = 2000
    N_SMALL_CLASSES = 100
    N_TRIALS = 5

# Run with both small and large programs.
sizes = [SMALL, LARGE]
if options.large and not options.small:
    sizes.remove(SMALL)
if options.small and not options.large:
    sizes.remove(LARGE)

for name in options.funcs:
    if name not in bench_fns:
        sys.stderr.write("Unknown function \"%s\"\n" % name)
        sys.stderr.write("Available functions:\n%s\n" % ("\n".join(bench_fns)))
        sys.exit(1)

_setup()

print()
print("%25s: %7s %7s" % ("BENCH", "SMALL", "LARGE"))

for name, fn in bench_fns.items():
    if name in options.funcs:
        sys.stdout.write("%25s: " % name)
        sys.stdout.flush()

        for size in (SMALL, LARGE):
            if size not in sizes:
                sys.stdout.write("%7s" % "-")
            else:
                timer = timeit.Timer(partial(fn, size))
                duration = min(timer.repeat(3, N_TRIALS)) / float(N_TRIALS)
                sys.stdout.write("%7.2f " % duration)
            sys.stdout.flush()

        sys.stdout.write("\n")
