"""Pieces shared by the protocol realizations."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

from .. import crypto
from ..core import AuthContext, BootstrapSession, ProcedureSet, execute, is_valid_ordering
from ..errors import ChainInvalid
from ..names import Name
from ..packets import Certificate, Data
from ..schema import TrustSchema, validate_chain


class ProtocolName(enum.Enum):
    SSP = "ssp"
    TESTBED_NDNCERT = "testbed"
    NDNVIBER = "ndnviber"
    PION = "pion"
    DCT_BUNDLE = "dct"


@dataclass(frozen=True)
class ProtocolBundle:
    name: ProtocolName
    required_cac: tuple
    required_eac: tuple
    preferred_order: tuple
    multi_name: bool
    run: Callable

    def __post_init__(self):
        if not is_valid_ordering(self.preferred_order):
            raise ValueError(f"{self.name.value}: preferred order violates the dataflow graph")


def digest_name(prefix, params: bytes) -> Name:
    """``prefix`` plus one component: the hex digest of the parameters."""
    return Name(prefix).append(crypto.digest(params).hex())


def check_digest_name(name: Name, params: bytes) -> bool:
    return len(name) > 0 and name[-1] == crypto.digest(params or b"").hex().encode()


def require_single_name(protocol: str, names) -> None:
    if len(names) != 1:
        raise ValueError(f"{protocol} certifies exactly one name per entity, got {len(names)}")


def validate_or_raise(schema: TrustSchema, anchor: Certificate, chain: list) -> None:
    report = validate_chain(schema, anchor, chain)
    if not report:
        raise ChainInvalid(report.failed_link, report.reason)


def anchor_signed(schema: TrustSchema, anchor: Certificate, data: Data) -> None:
    """Check Data signed directly with the anchor key (controller responses)."""
    validate_or_raise(schema, anchor, [data, anchor.data])


def u64(n: int) -> bytes:
    return n.to_bytes(8, "big")


def from_u64(b: bytes) -> int:
    return int.from_bytes(b, "big")



class DeviceDriver:
    """New-entity side of a protocol: supplies the five procedures.

    Message exchanges that several procedures depend on are run once, by
    whichever procedure needs them first, so any dataflow-consistent order
    drives the same packets.
    """

    protocol: ProtocolName
    required_cac: tuple = ()
    required_eac: tuple = ()

    def __init__(self, node):
        self.node = node
        self.net = node.net
        self.session = None
        self._memo = {}

    def once(self, key, fn):
        if key not in self._memo:
            self._memo[key] = fn()
        return self._memo[key]

    def cac(self) -> AuthContext:
        raise NotImplementedError

    def eac(self) -> AuthContext:
        raise NotImplementedError

    def procedures(self) -> ProcedureSet:
        raise NotImplementedError

    def new_session(self, name_conv=None) -> BootstrapSession:
        cac, eac = self.cac(), self.eac()
        cac.require(*self.required_cac)
        eac.require(*self.required_eac)
        return BootstrapSession(cac, eac, name_conv, self.protocol.value)

    def run(self, order=None, session: BootstrapSession = None, name_conv=None) -> BootstrapSession:
        self.session = session if session is not None else self.new_session(name_conv)
        return execute(self.session, self.procedures(), order)
