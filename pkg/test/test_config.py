import json
import os
import shutil
import tempfile

from scagraph import Coordinate
from scagraph.chains import ChainLimits
from scagraph.config import (CONFIG_ENV, RunConfig, load_config,
                             parse_library_prefix, read_config_file)
from scagraph.errors import ConfigError
from scagraph.model import DEFAULT_FRAMEWORK_PREFIXES

from test import ScaTestCase, fixture, unittest


class TestConfig(ScaTestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.tmp)

    def settings_file(self, settings):
        path = os.path.join(self.tmp, "settings.json")
        with open(path, "w") as f:
            json.dump(settings, f)
        return {CONFIG_ENV: path}

    def test_defaults(self):
        config = load_config("reach", {}, environ={})
        self.assertEqual(DEFAULT_FRAMEWORK_PREFIXES, config.framework_prefix)
        self.assertEqual("fold", config.merge_mode)
        self.assertEqual("combined", config.graph_mode)
        self.assertEqual("json", config.format)
        self.assertFalse(config.fail_on_findings)
        self.assertEqual(ChainLimits(), config.chain_limits())

    def test_file_then_flags(self):
        environ = self.settings_file({"format": "markdown", "jobs": 3,
                                      "merge_mode": "fixpoint",
                                      "fail_on_findings": True})
        config = load_config("reach", {"format": None, "jobs": 2},
                             environ=environ)
        self.assertEqual("markdown", config.format)
        self.assertEqual(2, config.jobs)
        self.assertEqual("fixpoint", config.merge_mode)
        self.assertTrue(config.fail_on_findings)

    def test_composed_example_settings(self):
        environ = {CONFIG_ENV: fixture("composed", "config.json")}
        config = load_config("reach", {}, environ=environ)
        origin_map = config.origin_map()
        self.assertEqual(Coordinate.parse("com.libp:p:1.0.0"),
                         origin_map.classify_class("com.libp.P").coordinate)
        self.assertTrue(origin_map.classify_class(
            "org.junit.Runner").is_framework)

    def test_bad_files(self):
        cases = [
            ({"colour": "blue"}, r"unknown setting 'colour'"),
            ({"jobs": "4"}, r"jobs must be int"),
            ({"jobs": True}, r"jobs must be int"),
            ({"framework_prefix": [1]}, r"list of strings"),
            ({"graph_mode": "all"}, r"graph_mode must be one of"),
            ({"max_chain_length": 0}, r"chain limits"),
            ({"jobs": 0}, r"jobs must be at least 1"),
            ({"library_prefix": ["com.x."]}, r"is not PREFIX=G:A:V"),
        ]
        for settings, pattern in cases:
            with self.assertRaisesPattern(ConfigError, pattern):
                load_config("reach", {},
                            environ=self.settings_file(settings))

    def test_unreadable_file(self):
        with self.assertRaisesPattern(ConfigError, r"cannot read"):
            read_config_file(os.path.join(self.tmp, "missing.json"))
        path = os.path.join(self.tmp, "broken.json")
        with open(path, "w") as f:
            f.write("{")
        with self.assertRaisesPattern(ConfigError, r"not valid JSON"):
            read_config_file(path)
        with open(path, "w") as f:
            f.write("[]")
        with self.assertRaisesPattern(ConfigError, r"JSON object"):
            read_config_file(path)

    def test_input_paths_must_exist(self):
        missing = os.path.join(self.tmp, "nope.json")
        with self.assertRaisesPattern(ConfigError, r"no such file"):
            load_config("reach", {"program": missing}, environ={})
        with self.assertRaisesPattern(ConfigError, r"no such file"):
            load_config("reach", {"trace": [fixture("composed", "trace.jsonl"),
                                            missing]}, environ={})
        config = load_config("reach", {"out_dir": missing}, environ={})
        self.assertEqual(missing, config.input("out_dir"))

    def test_library_prefix(self):
        self.assertEqual(("com.x.", Coordinate.parse("g:a:1.0.0")),
                         parse_library_prefix("com.x.=g:a:1.0.0"))
        for text in ("=g:a:1.0.0", "com.x.", "com.x.=g:a"):
            with self.assertRaises(ConfigError):
                parse_library_prefix(text)

    def test_run_config_validation(self):
        with self.assertRaisesPattern(ConfigError, r"format must be one of"):
            RunConfig("reach", format="xml")
        self.assertEqual("x", RunConfig("reach", {"a": None}).input("a", "x"))


if __name__ == '__main__':
    unittest.main()
