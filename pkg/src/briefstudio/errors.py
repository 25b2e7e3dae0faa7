"""Shared error hierarchy.

Every error carries a stable machine code so the HTTP layer and the CLI can
map failures one-to-one without string matching on messages.
"""

from __future__ import annotations

from typing import Any


class BriefStudioError(Exception):
    """Base class for all domain, provider, and storage errors."""

    code = "internal_error"

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


# -- validation ------------------------------------------------------------

class ValidationError(BriefStudioError):
    code = "validation_error"


class NoColonError(ValidationError):
    code = "no_colon"


class EmptyPartError(ValidationError):
    code = "empty_part"


class EmptyAfterTrimError(ValidationError):
    code = "empty_after_trim"


class EmptyBriefError(ValidationError):
    code = "empty_brief"


class DuplicateEntryError(ValidationError):
    code = "duplicate_entry"


class InvalidTextFormatError(ValidationError):
    code = "invalid_text_format"


class TypeMismatchError(ValidationError):
    code = "type_mismatch"


class PreconditionError(ValidationError):
    code = "precondition_failed"


class MissingContextError(ValidationError):
    code = "missing_context"


class TooFewItemsError(ValidationError):
    code = "too_few_items"


class DimensionMismatchError(ValidationError):
    code = "dimension_mismatch"


# -- unknown references ----------------------------------------------------

class NotFoundError(BriefStudioError):
    code = "not_found"


class SessionNotFoundError(NotFoundError):
    code = "session_not_found"


class JobNotFoundError(NotFoundError):
    code = "job_not_found"


class UnknownEntryError(NotFoundError):
    code = "unknown_entry"


class UnknownCardError(NotFoundError):
    code = "unknown_card"


class BlobNotFoundError(NotFoundError):
    code = "blob_not_found"


# -- invalid state ---------------------------------------------------------

class StateError(BriefStudioError):
    code = "invalid_state"


class MissingCompositionError(StateError):
    code = "missing_composition"


class NoTextError(StateError):
    code = "no_text"


class UnsupportedForTextError(StateError):
    code = "unsupported_for_text"


class NoPriorArtifactError(StateError):
    code = "no_prior_artifact"


# -- providers ---------------------------------------------------------------

class ProviderError(BriefStudioError):
    code = "provider_error"


class TimeoutError_(ProviderError):
    code = "provider_timeout"


class TransportError(ProviderError):
    code = "transport_error"


class SchemaViolationError(ProviderError):
    code = "schema_violation"


# -- storage -----------------------------------------------------------------

class StorageError(BriefStudioError):
    code = "storage_error"


class CorruptRecordError(StorageError):
    code = "corrupt_record"


class MissingBlobError(StorageError):
    code = "missing_blob"


class IdCollisionError(StorageError):
    code = "id_collision"


# -- prompt rendering --------------------------------------------------------

class RenderError(BriefStudioError):
    code = "render_error"


class MissingVariableError(RenderError):
    code = "missing_variable"


class UnresolvedPlaceholderError(RenderError):
    code = "unresolved_placeholder"
