from .version import __version__
from .errors import ScaError
from .model import (CallChain, CallGraph, Coordinate, EntryPointSet,
                    MethodRef, Origin, OriginMap, Provenance,
                    classify_origin, format_method_ref, parse_method_ref)
from .versions import Constraint, Version

error = ScaError
