"""Exceptions that name the condition which failed.

The ``condition`` attribute is a short stable tag used by the CLI in its error
JSON, and ``details`` carries machine-readable context such as witnesses.
"""


class ConditionError(Exception):
    condition = "error"

    def __init__(self, message, condition=None, **details):
        super().__init__(message)
        if condition is not None:
            self.condition = condition
        self.details = details

    def to_json(self):
        return {"error": self.condition, "condition": self.condition, "message": str(self), **self.details}


class OrdViolation(ConditionError):
    condition = "ord-violation"


class CertificateError(ConditionError):
    """A decay or uniqueness certificate could not be established."""
    condition = "decay-certificate"


class SizeGuardError(ConditionError):
    condition = "size-guard"


class ProfileError(ConditionError):
    condition = "profile-violation"


class HypothesisError(ConditionError):
    condition = "hypothesis-violation"


class ConjugacyCheckError(ConditionError):
    condition = "jet-conjugacy"
