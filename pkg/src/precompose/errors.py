"""Shared error types.

Every failure surfaced by the library carries a stable machine-readable
``code`` so the HTTP layer and the CLI can map errors without string
matching on messages.
"""

from __future__ import annotations

from typing import Any


class PrecomposeError(Exception):
    """Base class for all library errors."""

    code = "ERROR"

    def __init__(self, message: str, *, detail: Any = None):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def __str__(self) -> str:  # noqa: D105
        return f"{self.code}: {self.message}"


class OntologySyntaxError(PrecomposeError):
    """Malformed document; carries a 1-based line/column when known."""

    code = "SYNTAX"

    def __init__(self, message: str, *, line: int | None = None, column: int | None = None):
        position = "" if line is None else f" (line {line}, column {column})"
        super().__init__(message + position, detail={"line": line, "column": column})
        self.line = line
        self.column = column


class UnresolvedRefError(PrecomposeError):
    code = "UNRESOLVED_REF"


class CycleError(PrecomposeError):
    code = "CYCLE"


class BadDatatypeError(PrecomposeError):
    code = "BAD_DATATYPE"


class UnknownClassError(PrecomposeError):
    code = "UNKNOWN_CLASS"


class MissingFieldError(PrecomposeError):
    code = "MISSING_FIELD"


class DuplicateParameterError(PrecomposeError):
    code = "DUPLICATE_PARAMETER"


class UnresolvedConceptError(PrecomposeError):
    code = "UNRESOLVED_CONCEPT"


class DuplicateIdError(PrecomposeError):
    code = "DUPLICATE_ID"


class InvalidRequestError(PrecomposeError):
    code = "INVALID_REQUEST"


class StepFailedError(PrecomposeError):
    code = "STEP_FAILED"

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"plan step {step} failed: {cause}", detail={"step": step})
        self.step = step
        self.cause = cause


class SessionFinalizedError(PrecomposeError):
    code = "SESSION_FINALIZED"


class UnknownSuggestionError(PrecomposeError):
    code = "UNKNOWN_SUGGESTION"


class InvalidDecisionError(PrecomposeError):
    code = "INVALID_DECISION"


class NameCollisionError(PrecomposeError):
    code = "NAME_COLLISION"


class PendingRemainError(PrecomposeError):
    code = "PENDING_REMAIN"

    def __init__(self, pending_ids: list[int]):
        super().__init__(
            f"{len(pending_ids)} suggestion(s) still pending: {pending_ids}",
            detail={"pending_ids": pending_ids},
        )
        self.pending_ids = pending_ids


class MissingPropertyError(PrecomposeError):
    code = "MISSING_PROPERTY"


class NotDataPropertyError(PrecomposeError):
    code = "NOT_DATA_PROPERTY"


class DuplicateNameError(PrecomposeError):
    code = "DUPLICATE_NAME"


class UnknownOntologyError(PrecomposeError):
    code = "UNKNOWN_ONTOLOGY"


class UnknownUserError(PrecomposeError):
    code = "UNKNOWN_USER"


class UnknownServiceError(PrecomposeError):
    code = "UNKNOWN_SERVICE"


class NoCompositionError(PrecomposeError):
    code = "NO_COMPOSITION"


class StoreCorruptError(PrecomposeError):
    code = "STORE_CORRUPT"


class BindFailedError(PrecomposeError):
    code = "BIND_FAILED"
