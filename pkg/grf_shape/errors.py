"""
Exceptions and warnings raised by grf_shape.

ValidationError covers bad input (the CLI exits with 2),
GrfRuntimeError covers failures while computing (exit code 3).
"""


class GrfError(Exception):
    pass


class ValidationError(GrfError, ValueError):
    pass


class GrfRuntimeError(GrfError, RuntimeError):
    pass


# grid-model
class DuplicateOffset(ValidationError): pass
class OppositeOffsetPresent(ValidationError): pass
class DimensionMismatch(ValidationError): pass
class UnknownOffset(ValidationError): pass

# exact-oracle
class DomainTooLarge(ValidationError): pass
class MissingAppearance(ValidationError): pass
class IncompatibleModels(ValidationError): pass

# gibbs-sampler
class OutOfDomain(ValidationError): pass
class ClampConflict(ValidationError): pass

# appearance
class InvalidLabel(ValidationError): pass
class ChannelMismatch(ValidationError): pass

# learning
class IncompatibleStatistics(ValidationError): pass
class CandidateInStructure(ValidationError): pass
class RangeExhausted(ValidationError): pass

# composition
class MappingMismatch(ValidationError): pass
class IncompatibleIndexing(ValidationError): pass
class IncompatibleDomains(ValidationError): pass

# file formats
class MalformedHeader(ValidationError): pass
class LabelOutOfRange(ValidationError): pass
class UnknownTrace(ValidationError): pass

# generators
class PlacementFailure(GrfRuntimeError): pass


class EmptyAssignment(UserWarning):
    """A label received no pixels during an appearance update"""


class WeightRegimeWarning(UserWarning):
    """Mixture weights outside the w0 << w1 ~ w2 regime"""
