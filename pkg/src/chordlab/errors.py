"""Exception types shared across the package."""


class ChordLabError(Exception):
    """Base class for errors raised by chordlab."""


class SingularChordError(ChordLabError, ValueError):
    """Two beads coincide where a positive chord length is required."""


class DegenerateCurveError(ChordLabError, ValueError):
    """Curve speed (nearly) vanishes; arc-length machinery undefined."""


class ParametrizationError(ChordLabError, ValueError):
    """Loop is not arc-length parametrized where that is required."""


class LoopSpecError(ChordLabError, ValueError):
    """Malformed or invariant-violating loop specification."""


class MonotonicityError(ChordLabError, RuntimeError):
    """A numerical monotonicity assumption failed at runtime."""


class StepSizeError(ChordLabError, RuntimeError):
    """Finite-difference step produced unstable results."""


class NoBoundStateError(ChordLabError, RuntimeError):
    """No bound state exists on the requested feasible set."""
