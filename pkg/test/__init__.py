import json
import os
import unittest

from scagraph import Coordinate, parse_method_ref
from scagraph.formats import (CallSite, ClassModel, MethodModel,
                              ProgramDocument, load_program)
from scagraph.model import OriginMap

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                        "fixtures")


def fixture(*parts):
    return os.path.join(FIXTURES, *parts)


def read_fixture(*parts):
    with open(fixture(*parts), "rb") as f:
        return f.read()


def load_expected(*parts):
    return json.loads(read_fixture(*parts).decode("utf-8"))


def ref(text):
    return parse_method_ref(text)


def refs(texts):
    return [parse_method_ref(t) for t in texts]


def names(items):
    """Canonical text of refs, coordinates or anything else with __str__."""
    return sorted(str(item) for item in items)


def method(class_name, name, calls=(), descriptor="()V", visibility="public",
           instantiates=(), digest=""):
    """A method model; *calls* are method refs (static calls) or
    CallSite objects."""
    sites = tuple(c if isinstance(c, CallSite)
                  else CallSite.static(ref(c) if isinstance(c, str) else c)
                  for c in calls)
    return MethodModel(ref("%s.%s%s" % (class_name, name, descriptor)),
                       visibility=visibility, body_digest=digest,
                       instantiates=tuple(instantiates), call_sites=sites)


def klass(name, methods=(), superclass=None, interfaces=(), abstract=False):
    return ClassModel(name, superclass, tuple(interfaces), abstract,
                      tuple(methods))


def application(*classes):
    return ProgramDocument("application", tuple(classes))


def library(coordinate, *classes):
    return ProgramDocument("library", tuple(classes),
                           Coordinate.parse(coordinate))


def composed_origin_map():
    config = load_expected("composed", "config.json")
    libraries = []
    for text in config["library_prefix"]:
        prefix, _, coordinate = text.partition("=")
        libraries.append((prefix, Coordinate.parse(coordinate)))
    return OriginMap.build(libraries)


def load_fixture_program(*parts):
    return load_program(read_fixture(*parts))


class ScaTestCase(unittest.TestCase):
    if hasattr(unittest.TestCase, 'assertRaisesRegex'):
        assertRaisesPattern = unittest.TestCase.assertRaisesRegex
    else:
        assertRaisesPattern = unittest.TestCase.assertRaisesRegexp

    def assertRefs(self, expected, actual, msg=None):
        """Compare collections of refs by canonical text, ignoring order."""
        self.assertEqual(sorted(expected), names(actual), msg)

    def assertPath(self, expected, actual, msg=None):
        self.assertIsNotNone(actual, msg)
        self.assertEqual(list(expected), [str(step) for step in actual], msg)
