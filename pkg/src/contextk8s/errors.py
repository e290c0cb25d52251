"""Exception hierarchy shared by every contextk8s component."""

from __future__ import annotations


class ContextError(Exception):
    """Base class for all contextk8s errors."""

    code = "ContextError"

    def __init__(self, detail: str = "", *, path: str | None = None):
        super().__init__(detail or self.code)
        self.detail = detail
        self.path = path

    def to_dict(self) -> dict:
        body = {"error": self.code, "detail": self.detail}
        if self.path is not None:
            body["path"] = self.path
        return body


# manifest


class ManifestError(ContextError):
    code = "ManifestError"


class ManifestSyntaxError(ManifestError):
    code = "SyntaxError"


class SchemaError(ManifestError):
    code = "SchemaError"

    def __init__(self, path: str, detail: str):
        super().__init__(f"{path}: {detail}", path=path)


# registry


class DuplicateDomain(ContextError):
    code = "DuplicateDomain"


class UnknownDomain(ContextError):
    code = "UnknownDomain"


class UnknownSource(ContextError):
    code = "UnknownSource"


class EmptyAuthorizedRoles(ContextError):
    code = "EmptyAuthorizedRoles"


class InvalidUnit(ContextError):
    code = "InvalidUnit"


# cxri


class ConnectorError(ContextError):
    code = "ConnectorError"


class ConnectFailed(ConnectorError):
    code = "ConnectFailed"


class ConnectionLost(ConnectorError):
    code = "ConnectionLost"


class NotFound(ConnectorError):
    code = "NotFound"


class WriteFailed(ConnectorError):
    code = "WriteFailed"


# permissions


class PermissionError_(ContextError):
    code = "PermissionError"


class RegistrationError(PermissionError_):
    code = "RegistrationError"


class SupersetViolation(RegistrationError):
    code = "SupersetViolation"


class EqualSetViolation(RegistrationError):
    code = "EqualSetViolation"


class TierViolation(RegistrationError):
    code = "TierViolation"


class UnknownRole(PermissionError_):
    code = "UnknownRole"


class UnknownAgent(PermissionError_):
    code = "UnknownAgent"


class UnknownSession(PermissionError_):
    code = "UnknownSession"


class SessionKilled(PermissionError_):
    code = "SessionKilled"


class PermissionEngineUnavailable(PermissionError_):
    code = "PermissionEngineUnavailable"


class ApprovalError(PermissionError_):
    code = "ApprovalError"


class UnknownApproval(ApprovalError):
    code = "UnknownApproval"


class WrongTier(ApprovalError):
    code = "WrongTier"


class NotPending(ApprovalError):
    code = "NotPending"


class WrongOtp(ApprovalError):
    code = "WrongOtp"


class Expired(ApprovalError):
    code = "Expired"


class Replay(ApprovalError):
    code = "Replay"


class WrongChannel(ApprovalError):
    code = "WrongChannel"


# freshness


class TimestampTie(ContextError):
    code = "TimestampTie"


# audit


class AuditError(ContextError):
    code = "AuditError"


class AuditRejected(AuditError):
    """The event itself is malformed or would leak a secret."""

    code = "AuditRejected"


class AuditBackendFailure(AuditError):
    code = "AuditBackendFailure"


# bench


class DirectoryNotEmpty(ContextError):
    code = "DirectoryNotEmpty"
