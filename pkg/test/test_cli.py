import contextlib
import io
import json
import os
import shutil
import tempfile
from unittest import mock

from scagraph.cli import main, render
from scagraph.config import CONFIG_ENV
from scagraph.formats import FindingsReport, load_lockfile

from test import ScaTestCase, fixture, load_expected, unittest

COMPOSED_PREFIXES = ["--library-prefix", "com.libu.=com.libu:u:1.0.0",
                 "--library-prefix", "com.libp.=com.libp:p:1.0.0",
                 "--library-prefix", "com.libz.=com.libz:z:1.0.0"]


class CliTestCase(ScaTestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.tmp)
        patcher = mock.patch.dict(os.environ)
        patcher.start()
        os.environ.pop(CONFIG_ENV, None)
        self.addCleanup(patcher.stop)

    def path(self, name):
        return os.path.join(self.tmp, name)

    def sca(self, *argv, output="report.json"):
        """Run the command, returning its exit status and stderr."""
        stderr = io.StringIO()
        with contextlib.redirect_stderr(stderr):
            status = main(list(argv) + ["-q", "--output", self.path(output)])
        return status, stderr.getvalue()

    def report(self, name="report.json"):
        with open(self.path(name), "rb") as f:
            return json.loads(f.read().decode("utf-8"))

    def findings(self, doc):
        return {f["vuln_id"]: f for f in doc["findings"]}

    def composed_chains(self):
        status, _ = self.sca(
            "chains", "--vulndb", fixture("composed", "vulndb.json"),
            "--program", fixture("composed", "lib-u.json"),
            "--program", fixture("composed", "lib-p.json"),
            "--program", fixture("composed", "lib-z.json"),
            "--out-dir", self.path("chains"), output="chains.json")
        self.assertEqual(0, status)
        return self.path("chains")

    def apns_chains(self):
        status, _ = self.sca(
            "chains", "--vulndb", fixture("apns", "vulndb.json"),
            "--program", fixture("apns", "netty.json"),
            "--program", fixture("apns", "jackson.json"),
            "--out-dir", self.path("chains"), output="chains.json")
        self.assertEqual(0, status)
        return self.path("chains")


class TestChainsCommand(CliTestCase):
    def test_files_per_library(self):
        out_dir = self.composed_chains()
        self.assertEqual(["com.libp.p-1.0.0.chains.json",
                          "com.libu.u-1.0.0.chains.json",
                          "com.libz.z-1.0.0.chains.json"],
                         sorted(os.listdir(out_dir)))
        doc = self.report("chains.json")
        self.assertEqual({"libraries": 3, "chains": 4, "truncated_sinks": 0},
                         doc["stats"])
        self.assertEqual(3, len(doc["diagnostics"]["written"]))

    def test_truncation_is_reported(self):
        status, _ = self.sca(
            "chains", "--vulndb", fixture("composed", "vulndb.json"),
            "--program", fixture("composed", "lib-z.json"),
            "--max-chains-per-sink", "1")
        self.assertEqual(0, status)
        doc = self.report()
        self.assertEqual(1, doc["stats"]["chains"])
        self.assertEqual(["com.libz.Z.z()V"],
                         doc["diagnostics"]["com.libz:z:1.0.0"]["truncated"])

    def test_application_is_rejected(self):
        status, err = self.sca("chains",
                               "--vulndb", fixture("composed", "vulndb.json"),
                               "--program", fixture("composed", "app.json"))
        self.assertEqual(2, status)
        self.assertIn("is not a library document", err)


class TestReachCommand(CliTestCase):
    def reach(self, *extra, output="report.json"):
        args = ["reach", "--program", fixture("composed", "app.json"),
                "--trace", fixture("composed", "trace.jsonl"),
                "--chains", self.composed_chains(),
                "--vulndb", fixture("composed", "vulndb.json")]
        return self.sca(*(args + COMPOSED_PREFIXES + list(extra)),
                        output=output)

    def test_composed_example(self):
        expected = load_expected("composed", "expected.json")
        status, _ = self.reach()
        self.assertEqual(0, status)
        doc = self.report()
        findings = self.findings(doc)
        self.assertEqual(["VULN-P", "VULN-U", "VULN-Z"], sorted(findings))
        self.assertTrue(findings["VULN-U"]["reachable"])
        self.assertEqual("static", findings["VULN-U"]["provenance"])
        self.assertEqual(expected["witness_v"], findings["VULN-U"]["witness"])
        self.assertFalse(findings["VULN-P"]["reachable"])
        self.assertIsNone(findings["VULN-P"]["provenance"])
        self.assertFalse(findings["VULN-Z"]["reachable"])
        self.assertEqual(len(expected["combined_vertices"]),
                         doc["stats"]["vertices"])
        self.assertEqual(len(expected["combined_entry_points"]),
                         doc["stats"]["entry_points"])
        self.assertEqual([], doc["diagnostics"]["fixpoint_only_vertices"])
        self.assertEqual({"findings": 3, "reachable": 1,
                          "potentially_breaking": 0}, doc["summary"])

    def test_deterministic(self):
        self.reach(output="first.json")
        self.reach(output="second.json")
        with open(self.path("first.json"), "rb") as f:
            first = f.read()
        with open(self.path("second.json"), "rb") as f:
            self.assertEqual(first, f.read())

    def test_fail_on_findings(self):
        status, _ = self.reach("--fail-on-findings")
        self.assertEqual(1, status)
        self.assertEqual(1, self.report()["summary"]["reachable"])

    def test_dynamic_only_misses_static_paths(self):
        status, _ = self.reach("--graph-mode", "dynamic-only",
                               "--fail-on-findings")
        self.assertEqual(0, status)
        self.assertEqual(0, self.report()["summary"]["reachable"])

    def test_trace_with_library_calls(self):
        args = ["reach", "--program", fixture("composed", "app.json"),
                "--trace", fixture("composed", "trace-rp.jsonl"),
                "--chains", self.composed_chains(),
                "--vulndb", fixture("composed", "vulndb.json")]
        status, _ = self.sca(*(args + COMPOSED_PREFIXES))
        self.assertEqual(0, status)
        findings = self.findings(self.report())
        self.assertTrue(findings["VULN-P"]["reachable"])
        expected = load_expected("composed", "expected.json")
        self.assertEqual(expected["witness_q"], findings["VULN-P"]["witness"])

    def test_fixpoint_merge_agrees_on_composed_example(self):
        self.reach(output="fold.json")
        self.reach("--merge-mode", "fixpoint", output="fixpoint.json")
        fold, fixpoint = self.report("fold.json"), self.report("fixpoint.json")
        self.assertEqual(fold["findings"], fixpoint["findings"])
        self.assertNotIn("fixpoint_only_vertices", fixpoint["diagnostics"])

    def test_markdown(self):
        status, _ = self.reach("--format", "markdown", output="report.md")
        self.assertEqual(0, status)
        with open(self.path("report.md"), "rb") as f:
            text = f.read().decode("utf-8")
        self.assertTrue(text.startswith("# SCA report"))
        self.assertIn("### VULN-U", text)
        self.assertIn("`com.libu.V.v()V` is **reachable** (static)", text)

    def test_needs_vulndb(self):
        status, err = self.sca("reach",
                               "--program", fixture("composed", "app.json"))
        self.assertEqual(2, status)
        self.assertIn("reach needs --vulndb", err)

    def test_needs_a_graph(self):
        status, err = self.sca("reach",
                               "--vulndb", fixture("composed", "vulndb.json"))
        self.assertEqual(2, status)
        self.assertIn("needs --program or --trace", err)


class TestApns(CliTestCase):
    def app_args(self):
        return ["--program", fixture("apns", "app.json"),
                "--trace", fixture("apns", "trace.jsonl"),
                "--chains", self.apns_chains(),
                "--vulndb", fixture("apns", "vulndb.json")]

    def test_sink_counts(self):
        status, _ = self.sca("graph", "--stats", *self.app_args())
        self.assertEqual(0, status)
        stats = self.report()["stats"]
        self.assertEqual(1, stats["static_sinks"])
        self.assertEqual(2, stats["dynamic_sinks"])
        self.assertEqual(3, self.report()["diagnostics"]
                         ["pruned_vertices"])

    def test_combined_finds_more(self):
        reachable = {}
        for mode in ("static-only", "combined"):
            status, _ = self.sca("reach", "--graph-mode", mode,
                                 *self.app_args(), output=mode + ".json")
            self.assertEqual(0, status)
            reachable[mode] = {f["vuln_id"] for f in
                               self.report(mode + ".json")["findings"]
                               if f["reachable"]}
        self.assertEqual({"NETTY-1"}, reachable["static-only"])
        self.assertEqual({"JACKSON-1", "NETTY-1"}, reachable["combined"])

    def test_resolution_filters_records(self):
        manifest = self.path("manifest.json")
        registry = self.path("registry.json")
        with open(manifest, "w") as f:
            json.dump({"dependencies": [
                {"package": "io.netty:netty", "constraint": "=4.0.0"}]}, f)
        with open(registry, "w") as f:
            json.dump({"packages": {"io.netty:netty": {
                "4.0.0": []}}}, f)
        status, _ = self.sca("reach", *self.app_args(), "--manifest",
                             manifest, "--registry", registry)
        self.assertEqual(0, status)
        doc = self.report()
        self.assertEqual(["NETTY-1"], sorted(self.findings(doc)))
        self.assertEqual(["io.netty:netty:4.0.0"],
                         doc["resolution"]["coordinates"])
        self.assertEqual(0, doc["stats"]["unreferenced"])


class TestGraphCommand(CliTestCase):
    def test_graph_out_uses_settings_file(self):
        os.environ[CONFIG_ENV] = fixture("composed", "config.json")
        status, _ = self.sca("graph",
                             "--program", fixture("composed", "app.json"),
                             "--graph-mode", "static-only",
                             "--graph-out", self.path("graph.json"))
        self.assertEqual(0, status)
        with open(self.path("graph.json"), "rb") as f:
            graph = json.loads(f.read().decode("utf-8"))
        origins = {v["ref"]: v["origin"] for v in graph["vertices"]}
        expected = load_expected("composed", "expected.json")
        self.assertEqual(expected["static_vertices"], sorted(origins))
        self.assertEqual({"kind": "third-party",
                          "coordinate": "com.libu:u:1.0.0"},
                         origins["com.libu.U.u()V"])
        self.assertEqual({"kind": "first-party"},
                         origins["com.app.Main.main()V"])

    def test_bad_settings_file(self):
        os.environ[CONFIG_ENV] = self.path("missing.json")
        status, err = self.sca("graph",
                               "--program", fixture("composed", "app.json"))
        self.assertEqual(2, status)
        self.assertIn("cannot read", err)


class TestResolveCommand(CliTestCase):
    def test_declared_baseline(self):
        status, _ = self.sca(
            "resolve", "--manifest", fixture("resolution", "corpus.json"),
            "--registry", fixture("resolution", "corpus-registry.json"),
            "--baseline", "declared")
        self.assertEqual(0, status)
        doc = self.report()
        self.assertEqual("maven", doc["resolution"]["mode"])
        self.assertEqual(6, len(doc["resolution"]["coordinates"]))
        [comparison] = doc["comparisons"]
        self.assertEqual("declared", comparison["baseline"])
        self.assertEqual(2, comparison["baseline_count"])
        self.assertEqual(200.0, comparison["change_percent"])

    def test_registry_drift(self):
        status, _ = self.sca(
            "resolve", "--manifest", fixture("resolution", "corpus.json"),
            "--registry", fixture("resolution", "corpus-registry.json"),
            "--compare-registry",
            fixture("resolution", "corpus-registry-later.json"))
        self.assertEqual(0, status)
        [comparison] = self.report()["comparisons"]
        self.assertEqual(4, comparison["candidate_count"])
        self.assertEqual(-33.33, comparison["change_percent"])

    def test_lockfile_replay(self):
        lockfile = self.path("lock.json")
        status, _ = self.sca(
            "resolve", "--manifest", fixture("resolution", "diamond.json"),
            "--registry", fixture("resolution", "registry.json"),
            "--write-lockfile", lockfile, output="first.json")
        self.assertEqual(0, status)
        with open(lockfile, "rb") as f:
            self.assertTrue(load_lockfile(f.read()).entries)

        status, _ = self.sca(
            "resolve", "--mode", "lockfile", "--lockfile", lockfile,
            "--registry", fixture("resolution", "registry.json"),
            output="replayed.json")
        self.assertEqual(0, status)
        first = self.report("first.json")["resolution"]
        replayed = self.report("replayed.json")["resolution"]
        self.assertEqual("lockfile", replayed["mode"])
        self.assertEqual(sorted(first["coordinates"]),
                         sorted(replayed["coordinates"]))

    def test_stale_lockfile(self):
        status, err = self.sca(
            "resolve", "--mode", "lockfile",
            "--lockfile", fixture("resolution", "stale-lockfile.json"),
            "--registry", fixture("resolution", "registry.json"))
        self.assertEqual(2, status)
        self.assertIn("3.0.0", err)


class TestRemediateCommand(CliTestCase):
    def remediate(self, *extra):
        return self.sca("remediate",
                        "--from", fixture("remediate", "fast-1.0.json"),
                        "--to", fixture("remediate", "fast-2.0.json"),
                        *extra)

    def app_args(self):
        return ["--program", fixture("remediate", "app.json"),
                "--trace", fixture("remediate", "trace.jsonl")]

    def risky(self):
        [breaking] = self.report()["breaking"]
        return [r["method"] for r in breaking["risky"]]

    def test_modes(self):
        self.assertEqual(0, self.remediate("--mode", "static-only",
                                           *self.app_args())[0])
        self.assertEqual(["com.fast.U1.u1()V", "com.fast.W.w()V"],
                         self.risky())
        self.assertEqual(0, self.remediate("--mode", "dynamic-only",
                                           *self.app_args())[0])
        self.assertEqual(["com.fast.U1.u1()V"], self.risky())
        self.assertEqual(0, self.remediate(*self.app_args())[0])
        self.assertEqual(["com.fast.U1.u1()V", "com.fast.W.w()V"],
                         self.risky())
        self.assertEqual(1, self.report()["summary"]["potentially_breaking"])

    def test_fail_on_findings(self):
        status, _ = self.remediate("--fail-on-findings", *self.app_args())
        self.assertEqual(1, status)

    def test_saved_app_graph(self):
        graph = self.path("app-graph.json")
        status, _ = self.sca("graph",
                             "--program", fixture("remediate", "app.json"),
                             "--graph-mode", "static-only",
                             "--graph-out", graph, output="graph.json")
        self.assertEqual(0, status)
        self.assertEqual(0, self.remediate("--app-graph", graph,
                                           "--mode", "static-only")[0])
        [breaking] = self.report()["breaking"]
        self.assertEqual("potentially-breaking", breaking["verdict"])
        self.assertEqual(["com.shop.Main.main()V",
                          "com.shop.FastSink.write()V",
                          "com.fast.U1.u1()V"],
                         breaking["risky"][0]["witness"])

    def test_needs_both_versions(self):
        status, err = self.sca("remediate",
                               "--from", fixture("remediate", "fast-1.0.json"),
                               *self.app_args())
        self.assertEqual(2, status)
        self.assertIn("remediate needs --to", err)


class TestErrors(CliTestCase):
    def test_missing_input(self):
        status, err = self.sca("graph", "--program", self.path("nope.json"))
        self.assertEqual(2, status)
        self.assertIn("no such file", err)

    def test_malformed_input_names_the_file(self):
        bad = self.path("bad.json")
        with open(bad, "w") as f:
            f.write('{"origin": "application", "classes": [{}]}')
        status, err = self.sca("graph", "--program", bad)
        self.assertEqual(2, status)
        self.assertIn("bad.json", err)
        self.assertIn("$.classes[0]", err)

    def test_usage(self):
        stderr = io.StringIO()
        with contextlib.redirect_stderr(stderr):
            with self.assertRaises(SystemExit) as ctx:
                main([])
        self.assertEqual(2, ctx.exception.code)
        with contextlib.redirect_stderr(stderr):
            with self.assertRaises(SystemExit) as ctx:
                main(["reach", "--graph-mode", "everything"])
        self.assertEqual(2, ctx.exception.code)

    def test_bad_limits(self):
        status, err = self.sca("chains",
                               "--vulndb", fixture("composed", "vulndb.json"),
                               "--program", fixture("composed", "lib-u.json"),
                               "--max-chain-length", "0")
        self.assertEqual(2, status)
        self.assertIn("chain limits", err)


class TestRender(ScaTestCase):
    def test_empty_report(self):
        doc = json.loads(render(FindingsReport()).decode("utf-8"))
        self.assertEqual({"findings": 0, "reachable": 0,
                          "potentially_breaking": 0}, doc["summary"])
        self.assertIsNone(doc["resolution"])
        text = render(FindingsReport(), "markdown").decode("utf-8")
        self.assertIn("0 finding(s), 0 reachable.", text)

    def test_unknown_format(self):
        with self.assertRaises(ValueError):
            render(FindingsReport(), "xml")


if __name__ == '__main__':
    unittest.main()
