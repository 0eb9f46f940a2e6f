"""Error taxonomy shared across modules.

Every error carries a stable ``code`` string so the service layer and the
operation log can report failures uniformly without string matching on
messages.
"""

from __future__ import annotations


class ProcflowError(Exception):
    """Base class for all domain errors."""

    code = "error"

    def __init__(self, message: str, subject: str = ""):
        super().__init__(message)
        self.subject = subject

    @property
    def message(self) -> str:
        return str(self)


class UnknownIdError(ProcflowError):
    code = "unknown-id"


class DuplicateIdError(ProcflowError):
    code = "duplicate-id"


class DuplicateNameError(ProcflowError):
    code = "duplicate-name"


class RuleViolationError(ProcflowError):
    code = "rule-violation"


class ModelInvalidError(ProcflowError):
    """A model with validation errors was passed where a clean one is required."""

    code = "model-invalid"


class EditError(ProcflowError):
    code = "edit-error"


class NotAMemberError(ProcflowError):
    code = "not-a-member"


class IllegalTransitionError(ProcflowError):
    code = "illegal-transition"


class MissingDeliverableError(ProcflowError):
    code = "missing-deliverable"

    def __init__(self, message: str, artifact_ids: tuple[str, ...] = ()):
        super().__init__(message, subject=",".join(artifact_ids))
        self.artifact_ids = artifact_ids


class CannotRemoveLiveError(ProcflowError):
    code = "cannot-remove-live"


class IllegalPhaseError(ProcflowError):
    code = "illegal-phase"


class ScriptError(ProcflowError):
    code = "script-error"


class SequenceGapError(ProcflowError):
    code = "sequence-gap"


class UnknownProjectError(ProcflowError):
    code = "unknown-project"


class AuthMismatchError(ProcflowError):
    code = "auth-mismatch"


class UnauthenticatedError(ProcflowError):
    code = "unauthenticated"


class ParseError(ProcflowError):
    """Raised by the XML reader; ``location`` names the offending element."""

    code = "parse-error"

    MALFORMED = "malformed"
    UNKNOWN_ELEMENT = "unknown-element"
    DANGLING_REF = "dangling-ref"
    DUPLICATE_ID = "duplicate-id"

    def __init__(self, reason: str, message: str, location: str = ""):
        super().__init__(message, subject=location)
        self.reason = reason
        self.location = location
