"""Semantic versions and version constraints.

Versions are ``major.minor.patch`` with an optional ``-qualifier``; missing
minor or patch components are zero-padded, so ``2.0`` and ``2.0.0`` are the
same version.

    >>> Constraint.parse("^1.2.0").satisfied_by(Version.parse("1.9.3"))
    True
    >>> str(Constraint.parse("~1.2.0"))
    '>=1.2.0 <1.3.0'
"""

import functools
import re
from dataclasses import dataclass
from typing import Tuple

from .errors import ScaError

_VERSION_RE = re.compile(
    r"^(?P<major>\d+)(?:\.(?P<minor>\d+))?(?:\.(?P<patch>\d+))?"
    r"(?:-(?P<qualifier>[0-9A-Za-z][0-9A-Za-z.+_-]*))?$")

_OPERATORS = (">=", "<=", ">", "<", "=")


class VersionError(ScaError):
    """Unparseable version or constraint text."""


@functools.total_ordering
@dataclass(frozen=True)
class Version:
    major: int
    minor: int = 0
    patch: int = 0
    qualifier: str = ""

    def __post_init__(self):
        for part in (self.major, self.minor, self.patch):
            if not isinstance(part, int) or part < 0:
                raise VersionError(
                    "version components must be non-negative integers")

    @classmethod
    def parse(cls, text):
        if not isinstance(text, str):
            raise VersionError("version must be a string, not %r" % (text,))
        match = _VERSION_RE.match(text.strip())
        if match is None:
            raise VersionError("invalid version %r" % (text,))
        return cls(int(match.group("major")),
                   int(match.group("minor") or 0),
                   int(match.group("patch") or 0),
                   match.group("qualifier") or "")

    def sort_key(self):
        return (self.major, self.minor, self.patch,
                self.qualifier.encode("utf-8"))

    def __lt__(self, other):
        if not isinstance(other, Version):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def bump_major(self):
        return Version(self.major + 1, 0, 0)

    def bump_minor(self):
        return Version(self.major, self.minor + 1, 0)

    def __str__(self):
        text = "%d.%d.%d" % (self.major, self.minor, self.patch)
        if self.qualifier:
            text += "-" + self.qualifier
        return text


@dataclass(frozen=True)
class Bound:
    op: str
    version: Version

    def admits(self, version):
        if self.op == ">=":
            return version >= self.version
        if self.op == ">":
            return version > self.version
        if self.op == "<=":
            return version <= self.version
        if self.op == "<":
            return version < self.version
        return version == self.version

    def __str__(self):
        return "%s%s" % (self.op, self.version)


@dataclass(frozen=True)
class Constraint:
    """A conjunction of version bounds.

    ``kind`` remembers how the constraint was written (``exact``, ``range``,
    ``caret``, ``tilde`` or ``any``); caret and tilde forms are expanded to
    their canonical ranges when parsed.
    """

    kind: str
    bounds: Tuple[Bound, ...]
    text: str

    @classmethod
    def parse(cls, text):
        if not isinstance(text, str):
            raise VersionError("constraint must be a string, not %r" % (text,))
        source = text.strip()
        if not source:
            raise VersionError("empty constraint")
        if source == "*":
            return cls("any", (), source)
        if source[0] == "^":
            low = Version.parse(source[1:])
            return cls("caret",
                       (Bound(">=", low), Bound("<", low.bump_major())),
                       source)
        if source[0] == "~":
            low = Version.parse(source[1:])
            return cls("tilde",
                       (Bound(">=", low), Bound("<", low.bump_minor())),
                       source)

        parts = [p for p in re.split(r"[\s,]+", source) if p]
        bounds = []
        for part in parts:
            op = next((o for o in _OPERATORS if part.startswith(o)), None)
            if op is None:
                if len(parts) > 1:
                    raise VersionError(
                        "bound %r in %r lacks an operator" % (part, text))
                op, rest = "=", part
            else:
                rest = part[len(op):]
            bounds.append(Bound(op, Version.parse(rest)))

        if len(bounds) == 1 and bounds[0].op == "=":
            return cls("exact", tuple(bounds), source)
        if any(b.op == "=" for b in bounds):
            raise VersionError("exact bound mixed into range %r" % (text,))
        return cls("range", tuple(bounds), source)

    def satisfied_by(self, version):
        return all(bound.admits(version) for bound in self.bounds)

    def best(self, versions):
        """The maximum of *versions* satisfying this constraint, or None."""
        matching = [v for v in versions if self.satisfied_by(v)]
        return max(matching) if matching else None

    def __str__(self):
        if not self.bounds:
            return "*"
        return " ".join(str(b) for b in self.bounds)

