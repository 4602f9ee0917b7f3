"""Run configuration.

Settings come from command-line flags, then from the JSON file named by the
``SCA_CONFIG`` environment variable, then from built-in defaults. Input paths
are only ever given as flags.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Tuple

from .chains import ChainLimits
from .compose import FOLD, MERGE_MODES
from .errors import ConfigError
from .model import DEFAULT_FRAMEWORK_PREFIXES, Coordinate, OriginMap
from .remediate import COMBINED, GRAPH_MODES

logger = logging.getLogger(__name__)

CONFIG_ENV = "SCA_CONFIG"

REPORT_FORMATS = ("json", "markdown")

# Flag destinations naming files that must exist.
INPUT_PATHS = ("program", "trace", "chains", "vulndb", "manifest", "registry",
               "lockfile", "compare_registry", "app_graph", "from_", "to")

_SETTINGS = {
    "framework_prefix": list,
    "library_prefix": list,
    "entrypoint_filter": str,
    "max_chain_length": int,
    "max_chains_per_sink": int,
    "merge_mode": str,
    "graph_mode": str,
    "format": str,
    "fail_on_findings": bool,
    "jobs": int,
}

_CHOICES = {
    "merge_mode": MERGE_MODES,
    "graph_mode": GRAPH_MODES,
    "format": REPORT_FORMATS,
}


def parse_library_prefix(text) -> Tuple[str, Coordinate]:
    """Parse ``PREFIX=GROUP:ARTIFACT:VERSION``."""
    prefix, sep, coordinate = text.partition("=")
    if not sep or not prefix:
        raise ConfigError("library prefix %r is not PREFIX=G:A:V" % (text,))
    try:
        return prefix, Coordinate.parse(coordinate)
    except ValueError as exc:
        raise ConfigError("library prefix %r: %s" % (text, exc))


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: Mapping[str, Any] = field(default_factory=dict)
    framework_prefix: Tuple[str, ...] = DEFAULT_FRAMEWORK_PREFIXES
    library_prefix: Tuple[Tuple[str, Coordinate], ...] = ()
    entrypoint_filter: Optional[str] = None
    max_chain_length: int = 16
    max_chains_per_sink: int = 1000
    merge_mode: str = FOLD
    graph_mode: str = COMBINED
    format: str = "json"
    fail_on_findings: bool = False
    jobs: int = 1

    def __post_init__(self):
        for key, allowed in _CHOICES.items():
            if getattr(self, key) not in allowed:
                raise ConfigError("%s must be one of %s, not %r"
                                  % (key, ", ".join(allowed),
                                     getattr(self, key)))
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        try:
            self.chain_limits()
        except ValueError as exc:
            raise ConfigError(str(exc))

    def origin_map(self) -> OriginMap:
        return OriginMap.build(self.library_prefix, self.framework_prefix)

    def chain_limits(self) -> ChainLimits:
        return ChainLimits(self.max_chain_length, self.max_chains_per_sink)

    def input(self, name, default=None):
        value = self.inputs.get(name)
        return default if value is None else value


def read_config_file(path) -> dict:
    try:
        with open(path, "rb") as f:
            doc = json.loads(f.read().decode("utf-8"))
    except OSError as exc:
        raise ConfigError("cannot read %s: %s" % (path, exc.strerror))
    except ValueError as exc:
        raise ConfigError("%s is not valid JSON: %s" % (path, exc))
    if not isinstance(doc, dict):
        raise ConfigError("%s must hold a JSON object" % path)
    for key, value in doc.items():
        kind = _SETTINGS.get(key)
        if kind is None:
            raise ConfigError("%s: unknown setting %r" % (path, key))
        if (not isinstance(value, kind)
                or (kind is int and isinstance(value, bool))):
            raise ConfigError("%s: %s must be %s" % (path, key,
                                                     kind.__name__))
        if kind is list and not all(isinstance(v, str) for v in value):
            raise ConfigError("%s: %s must be a list of strings"
                              % (path, key))
    logger.debug("loaded settings %s from %s", sorted(doc), path)
    return doc


def load_config(command, flags: Mapping[str, Any],
                environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Build a :class:`RunConfig` from parsed flags and ``SCA_CONFIG``.

    A flag whose value is None was not given on the command line.
    """
    environ = os.environ if environ is None else environ
    from_file = {}
    if environ.get(CONFIG_ENV):
        from_file = read_config_file(environ[CONFIG_ENV])

    settings = {}
    for key in _SETTINGS:
        value = flags.get(key)
        if value is None or value is False:
            value = from_file.get(key, value)
        if value is not None:
            settings[key] = value

    if "framework_prefix" in settings:
        settings["framework_prefix"] = tuple(settings["framework_prefix"])
    if "library_prefix" in settings:
        settings["library_prefix"] = tuple(
            parse_library_prefix(text) for text in settings["library_prefix"])

    inputs = {key: value for key, value in flags.items()
              if key not in _SETTINGS}
    for key in INPUT_PATHS:
        paths = inputs.get(key)
        if paths is None:
            continue
        for path in paths if isinstance(paths, list) else [paths]:
            if not os.path.exists(path):
                raise ConfigError("no such file or directory: %s" % path)
    return RunConfig(command, inputs, **settings)
