"""Exception hierarchy shared by every layer of the toolkit."""


class TebError(Exception):
    """Base class for all errors raised by :mod:`teb`."""


# names / packets
class MalformedName(TebError, ValueError):
    pass


class MalformedPacket(TebError, ValueError):
    pass


# crypto
class InvalidPoint(TebError, ValueError):
    pass


class AuthFailure(TebError):
    """A signature, MAC or AEAD tag did not verify."""


class ReplayRejected(AuthFailure):
    """A nonce was seen before in the same request context."""


class ProtocolOrder(TebError):
    """A stateful exchange was driven out of sequence."""


# trust schema
class SchemaError(TebError):
    pass


class ParseError(SchemaError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", col {col})" if col is not None else ")")
        super().__init__(message + where)


class CyclicRuleRef(SchemaError):
    pass


class UnresolvedRuleRef(SchemaError):
    pass


class MissingAnchor(SchemaError):
    pass


class IdentifierMismatch(TebError, ValueError):
    pass


class NameCollision(TebError):
    """An identifier or name is already bound to something else in the domain."""


# bootstrapping model
class DependencyUnmet(TebError):
    def __init__(self, slot):
        self.slot = slot
        super().__init__(f"dependency not satisfied: {slot}")


class SlotAlreadyFilled(TebError):
    def __init__(self, slot):
        self.slot = slot
        super().__init__(f"slot already filled: {slot}")


class ProcedureFailed(TebError):
    def __init__(self, procedure, cause):
        self.procedure = procedure
        self.cause = cause
        super().__init__(f"{procedure} failed: {type(cause).__name__}: {cause}")


# simulated network
class NoRoute(TebError):
    pass


class EmptyMailbox(TebError):
    pass


class ProximityViolation(TebError):
    pass


# protocols
class EmailRejected(TebError):
    pass


class PinMismatch(TebError):
    pass


class PakeConfirmFailure(AuthFailure):
    pass


class BundleInvalid(TebError):
    pass


# trust information base
class NoKek(TebError):
    pass


class NoSigningIdentity(TebError):
    pass


class FetchTimeout(TebError):
    pass


class ChainInvalid(TebError):
    def __init__(self, link, reason=""):
        self.link = link
        self.reason = reason
        super().__init__(f"chain invalid at link {link}: {reason}")


class NotAuthorized(TebError):
    pass


class StaleVersion(TebError):
    pass
