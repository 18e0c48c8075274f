"""Exception hierarchy for the adaptive query-processing package."""


class AQPError(Exception):
    """Base class for every error raised by this package."""


class DomainError(AQPError, ValueError):
    """An argument falls outside the domain an operation is defined on."""


class _LookupError(AQPError, KeyError):
    # KeyError.__str__ would repr() the message
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UnknownFeatureError(_LookupError):
    """A feature has no corpus statistics."""


class UnknownCategoryError(_LookupError):
    pass


class UnknownPlanError(_LookupError):
    pass


class EmptyEvaluationSetError(DomainError):
    pass


class EmptyWindowError(DomainError):
    pass


class PermutationError(DomainError):
    """A drift mapping is not a bijection on group ids."""


class StoreError(AQPError):
    """Base class for profile-store I/O problems."""


class MissingStoreError(StoreError, FileNotFoundError):
    pass


class UnknownVersionError(StoreError):
    pass


class SchemaError(StoreError, ValueError):
    pass
