"""Exceptions raised by SCA-Graph.

Every domain failure derives from :class:`ScaError`, which the package also
exports as ``scagraph.error``.
"""


class ScaError(Exception):
    """Raised by any runtime error in the package."""


class MethodRefError(ScaError):
    """Malformed canonical method reference."""

    def __init__(self, message, text, start, end):
        self.text = text
        self.start = start
        self.end = end
        super().__init__("%s at [%d:%d] in %r" % (message, start, end, text))


class FormatError(ScaError):
    """A document failed structural validation."""

    def __init__(self, message, path="$"):
        self.path = path
        super().__init__("%s: %s" % (path, message))


class HierarchyError(ScaError):
    """The class hierarchy of a program is inconsistent."""


class StaticGraphError(ScaError):
    """Static call graph construction cannot proceed."""


class ChainError(ScaError):
    """A call chain violates its invariants."""


class ResolutionError(ScaError):
    """Dependency resolution failed."""

    def __init__(self, message, path=()):
        self.path = tuple(path)
        if self.path:
            message = "%s (via %s)" % (message, " -> ".join(self.path))
        super().__init__(message)


class DiffError(ScaError):
    """Two library versions cannot be compared."""


class ConfigError(ScaError):
    """Invalid command-line flags or configuration file."""


class GraphError(ScaError):
    """A call graph violates its structural invariants."""
