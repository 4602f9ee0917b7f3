"""The ``sca`` command.

Exit status 0 means success, 1 means findings exist and
``--fail-on-findings`` was given, 2 means bad usage or bad input.
"""

import argparse
import logging
import sys

from .compose import MERGE_MODES
from .config import REPORT_FORMATS, load_config
from .depres import MODES
from .errors import ScaError
from .formats import emit_report
from .pipeline import run
from .remediate import GRAPH_MODES
from .version import __version__

logger = logging.getLogger(__name__)

USAGE_ERROR = 2


def render(report, fmt="json") -> bytes:
    return emit_report(report, fmt)


def _common(parser):
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="log more (repeat for debug output)")
    parser.add_argument("-q", "--quiet", action="store_true",
                        help="log errors only")
    parser.add_argument("--format", choices=REPORT_FORMATS,
                        help="report format (default json)")
    parser.add_argument("-o", "--output", help="write the report here")
    parser.add_argument("--fail-on-findings", action="store_true",
                        default=None,
                        help="exit 1 when a reachable sink or a breaking "
                             "upgrade is found")


def _origins(parser):
    parser.add_argument("--framework-prefix", action="append",
                        metavar="PREFIX",
                        help="namespace prefix of a test framework "
                             "(repeatable; replaces the shipped list)")
    parser.add_argument("--library-prefix", action="append",
                        metavar="PREFIX=G:A:V",
                        help="map a namespace prefix to a library coordinate "
                             "(repeatable)")


def _app_inputs(parser):
    parser.add_argument("--program", help="application program.json")
    parser.add_argument("--trace", action="append", metavar="TRACE",
                        help="trace.jsonl (repeatable)")
    parser.add_argument("--chains", action="append", metavar="PATH",
                        help="chains file or directory of them (repeatable)")
    parser.add_argument("--entrypoint-filter", metavar="REGEX",
                        help="keep only entry points whose method name "
                             "matches")
    parser.add_argument("--merge-mode", choices=MERGE_MODES)
    parser.add_argument("--graph-mode", choices=GRAPH_MODES)
    _origins(parser)


def _resolution_inputs(parser):
    parser.add_argument("--manifest", help="manifest.json")
    parser.add_argument("--registry", help="registry.json")
    parser.add_argument("--lockfile", help="lockfile.json")
    parser.add_argument("--mode", choices=MODES,
                        help="resolution mode (default maven)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sca",
        description="Software composition analysis over call graphs.")
    parser.add_argument("--version", action="version",
                        version="%(prog)s " + __version__)
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    resolve = commands.add_parser("resolve", help="discover dependencies")
    _resolution_inputs(resolve)
    resolve.add_argument("--baseline", choices=MODES,
                         help="also resolve with this mode and compare")
    resolve.add_argument("--compare-registry", metavar="REGISTRY",
                         help="also resolve against this registry snapshot "
                              "and compare")
    resolve.add_argument("--write-lockfile", metavar="PATH",
                         help="record the resolved tree as a lockfile")
    _common(resolve)

    graph = commands.add_parser("graph", help="build call graphs")
    _app_inputs(graph)
    graph.add_argument("--vulndb", help="vulndb.json, for sink counts")
    graph.add_argument("--stats", action="store_true",
                       help="report vertex, edge and sink counts")
    graph.add_argument("--graph-out", metavar="PATH",
                       help="save the merged graph as graph.json")
    _common(graph)

    chains = commands.add_parser("chains",
                                 help="precompute library call chains")
    chains.add_argument("--program", action="append", metavar="LIBRARY",
                        help="library program.json (repeatable)")
    chains.add_argument("--vulndb", help="vulndb.json")
    chains.add_argument("--max-chain-length", type=int)
    chains.add_argument("--max-chains-per-sink", type=int)
    chains.add_argument("--jobs", type=int,
                        help="libraries to process in parallel")
    chains.add_argument("--out-dir", metavar="DIR",
                        help="write one chains file per library here")
    _common(chains)

    reach = commands.add_parser("reach",
                                help="report reachable vulnerable methods")
    _app_inputs(reach)
    reach.add_argument("--vulndb", help="vulndb.json")
    _resolution_inputs(reach)
    _common(reach)

    remediate = commands.add_parser("remediate",
                                    help="check a library upgrade")
    remediate.add_argument("--from", dest="from_", metavar="LIBRARY",
                           help="current library version program.json")
    remediate.add_argument("--to", metavar="LIBRARY",
                           help="candidate library version program.json")
    remediate.add_argument("--app-graph", metavar="GRAPH",
                           help="saved application graph.json")
    _app_inputs(remediate)
    remediate.add_argument("--mode", dest="graph_mode", choices=GRAPH_MODES,
                           help="alias of --graph-mode")
    _common(remediate)
    return parser


def _write_stdout(data):
    stream = getattr(sys.stdout, "buffer", None)
    if stream is None:
        sys.stdout.write(data.decode("utf-8"))
    else:
        stream.write(data)
    sys.stdout.flush()


def _configure_logging(verbose, quiet):
    level = logging.WARNING
    if quiet:
        level = logging.ERROR
    elif verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    args = build_parser().parse_args(argv)
    flags = vars(args)
    command = flags.pop("command")
    verbose, quiet = flags.pop("verbose"), flags.pop("quiet")
    output = flags.pop("output")
    _configure_logging(verbose, quiet)

    try:
        config = load_config(command, flags)
        report, status = run(config)
        data = render(report, config.format)
        if output is None:
            _write_stdout(data)
        else:
            with open(output, "wb") as f:
                f.write(data)
    except (ScaError, OSError) as exc:
        sys.stderr.write("sca: error: %s\n" % exc)
        return USAGE_ERROR
    return status
