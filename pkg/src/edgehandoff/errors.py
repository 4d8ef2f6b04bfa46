"""Exception hierarchy shared by all protocol modules."""


class EdgeHandoffError(Exception):
    """Base class for every error raised by this package."""


# crypto
class AuthFailure(EdgeHandoffError):
    """AEAD verification failed."""


class LengthError(EdgeHandoffError):
    """Input shorter or longer than the construction allows."""


class ChallengeFailed(EdgeHandoffError):
    """Challenge response rejected (wrong key or wrong fingerprint; deliberately not distinguished)."""


class ProvisioningError(EdgeHandoffError):
    pass


# wire codec
class CodecError(EdgeHandoffError):
    pass


class PayloadTooLarge(CodecError):
    pass


class BadMagic(CodecError):
    pass


class BadVersion(CodecError):
    pass


class UnknownMsgType(CodecError):
    pass


class BadEntityKind(CodecError):
    pass


class Truncated(CodecError):
    pass


class TrailingBytes(CodecError):
    pass


# state machines
class ProtocolError(EdgeHandoffError):
    pass


class InvalidPhase(ProtocolError):
    pass


class UnexpectedMessage(ProtocolError):
    pass


class NotConnected(ProtocolError):
    pass


class NoPendingChallenge(ProtocolError):
    pass


class NotRegistered(ProtocolError):
    pass


class UnknownNode(ProtocolError):
    pass


class NoRecommendation(ProtocolError):
    pass


class NoMigratedEntry(ProtocolError):
    pass


class CapacityExceeded(ProtocolError):
    pass


class UnknownSender(ProtocolError):
    pass


# name server
class RegistryError(EdgeHandoffError):
    pass


class DuplicateEdge(RegistryError):
    pass


class DuplicateName(RegistryError):
    pass


class UnauthorizedRegistrar(RegistryError):
    pass


class NotFound(RegistryError, KeyError):
    pass


# simulation / scenarios
class UnknownLink(EdgeHandoffError):
    pass


class NoCapturedFrame(EdgeHandoffError):
    pass


class ScenarioInvalid(EdgeHandoffError):
    """Scenario failed to parse or validate; ``diagnostics`` lists each problem."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [message])


class ParseError(ScenarioInvalid):
    pass


class ValidationError(ScenarioInvalid):
    pass
