"""Exception hierarchy for the zsb package."""


class ZsbError(Exception):
    """Base class for all zsb errors."""


# -- potential -----------------------------------------------------------

class DuplicateMode(ZsbError):
    pass


class GridTooCoarse(ZsbError):
    pass


# -- monodromy -----------------------------------------------------------

class NonFinite(ZsbError):
    pass


# -- spectrum ------------------------------------------------------------

class WindingMismatch(ZsbError):
    pass


class NewtonDivergence(ZsbError):
    pass


class ClusterUnresolved(ZsbError):
    pass


class SymmetryViolation(ZsbError):
    def __init__(self, message, worst_index=None, violation=None):
        super().__init__(message)
        self.worst_index = worst_index
        self.violation = violation


class BandEscape(ZsbError):
    pass


class ClosedGap(ZsbError):
    pass


# -- roots / contours ----------------------------------------------------

class ContourCollision(ZsbError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class OnCut(ZsbError):
    pass


class NearPole(ZsbError):
    pass


class MuOnCut(ZsbError):
    pass


# -- actions -------------------------------------------------------------

class QuadratureStall(ZsbError):
    pass


class RatioNotPositive(ZsbError):
    pass


# -- differentials -------------------------------------------------------

class OverdeterminedMismatch(ZsbError):
    pass


class NoLowModes(ZsbError):
    pass


# -- angles --------------------------------------------------------------

class PathCrossesCut(ZsbError):
    pass


# -- birkhoff ------------------------------------------------------------

class NonNegativeLowAction(ZsbError):
    pass


# -- verify --------------------------------------------------------------

class BranchFlip(ZsbError):
    pass


# -- evolution -----------------------------------------------------------

class BlowupGuard(ZsbError):
    pass


class BranchLost(ZsbError):
    pass


# -- cli -----------------------------------------------------------------

class ParseError(ZsbError):
    pass


class FocusingRequired(ZsbError):
    pass


class PipelineError(ZsbError):
    def __init__(self, stage, cause):
        super().__init__(f"pipeline failed in stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause


class IoError(ZsbError):
    pass
