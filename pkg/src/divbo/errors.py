"""Exception types shared across the package."""

from __future__ import annotations


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class DatasetError(RuntimeError):
    """Dataset ingestion or download failure.

    ``code`` is a short machine-readable tag such as ``"missing_file"``,
    ``"missing_column"``, ``"single_class"``, ``"network_error"``,
    ``"unknown_id"`` or ``"malformed_payload"``.
    """

    def __init__(self, code: str, message: str):
        super().__init__(f"[{code}] {message}")
        self.code = code
