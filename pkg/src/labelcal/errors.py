"""Exception types shared across the pipeline stages."""


class LabelcalError(Exception):
    """Base class for all labelcal errors."""


# dataset I/O
class MalformedManifest(LabelcalError):
    pass


class CountMismatch(LabelcalError):
    pass


class FeatureDimMismatch(LabelcalError):
    pass


class OrphanDynamics(LabelcalError):
    pass


class InvariantViolation(LabelcalError):
    pass


class IoFailure(LabelcalError):
    pass


# noise lab
class LabelOutOfRange(LabelcalError):
    pass


class LengthMismatch(LabelcalError):
    pass


class DimensionMismatch(LabelcalError):
    pass


# classifier
class NonFiniteLoss(LabelcalError):
    pass


class EmptySplit(LabelcalError):
    pass


class ShapeMismatch(LabelcalError):
    pass


class EpochOutOfRange(LabelcalError):
    pass


# candidate retrieval
class EmptyCleanSet(LabelcalError):
    pass


class KTooLarge(LabelcalError):
    pass


# diffusion
class TimestepOutOfRange(LabelcalError):
    pass


class NoWarmupData(LabelcalError):
    pass


# calibration / evaluation
class MissingDynamics(LabelcalError):
    pass


class NoTrueLabels(LabelcalError):
    pass
