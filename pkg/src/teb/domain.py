"""Network participants: generic nodes and the trust domain controller."""

from __future__ import annotations

from typing import Callable, Optional

from . import crypto
from .errors import FetchTimeout, NoRoute
from .names import Name
from .packets import Certificate, Data, Interest, make_certificate, self_signed, sign_data
from .schema import NameConv, NameRegistry, TrustSchema
from .simnet import Network

CONTROLLER_ISSUER_ID = "controller"

Service = Callable[[Interest, str], Optional[Data]]


class Node:
    """An entity attached to the simulated forwarder.

    Interests are dispatched to the service with the longest matching prefix;
    anything else is answered from the node's repository of published Data.
    """

    def __init__(self, net: Network, entity_id: str, seed=None, broadcast: bool = False):
        self.net = net
        self.id = entity_id
        self.seed = f"{net.seed}/{entity_id}".encode() if seed is None else _as_bytes(seed)
        self.keypair = crypto.keygen(self.seed + b"/device-key")
        self.repo: dict = {}
        self._services: list = []
        net.add_entity(entity_id, self.on_interest, broadcast)

    def rng(self, *purpose):
        return crypto.seeded_rng(self.seed, *purpose)

    def serve(self, prefix, fn: Service, register: bool = True):
        prefix = Name(prefix)
        self._services.append((prefix, fn))
        if register:
            self.net.register_prefix(self.id, prefix)

    def publish(self, data: Data, register: Optional[Name] = None):
        self.repo[data.name] = data
        if register is not None:
            self.net.register_prefix(self.id, register)

    def on_interest(self, interest: Interest, from_id: str) -> Optional[Data]:
        best, best_len = None, -1
        for prefix, fn in self._services:
            if prefix.is_prefix_of(interest.name) and len(prefix) > best_len:
                best, best_len = fn, len(prefix)
        if best is not None:
            data = best(interest, from_id)
            if data is not None:
                return data
        hit = self.repo.get(interest.name)
        if hit is not None:
            return hit
        for name in sorted(self.repo):
            if interest.name.is_prefix_of(name):
                return self.repo[name]
        return None

    def express(self, interest: Interest) -> Optional[Data]:
        return self.net.express_interest(self.id, interest)

    def fetch(self, name, forwarding_hint: Optional[Name] = None) -> Data:
        """Fetch by name; a timeout or missing route is a :class:`FetchTimeout`."""
        try:
            data = self.express(Interest(Name(name), forwarding_hint=forwarding_hint))
        except NoRoute as e:
            raise FetchTimeout(f"no route for {name}") from e
        if data is None:
            raise FetchTimeout(str(name))
        return data


def _as_bytes(v) -> bytes:
    if isinstance(v, bytes):
        return v
    return str(v).encode()


class Controller(Node):
    """Governs one trust domain: holds the anchor key, names and certifies.

    The controller also acts as the domain's repository: its prefix is
    registered so that the anchor, schema Data and every certificate it
    issued remain retrievable.
    """

    def __init__(self, net: Network, entity_id: str, domain, schema: Optional[TrustSchema] = None,
                 name_conv: Optional[NameConv] = None, seed=None):
        super().__init__(net, entity_id, seed)
        self.domain = Name(domain)
        self.keypair = crypto.keygen(self.seed + b"/anchor-key")
        self.anchor = self_signed(self.domain, self.keypair)
        self.schema = schema if schema is not None else TrustSchema.implicit()
        self.name_conv = name_conv
        self.registry = NameRegistry()
        self.issued: dict = {}
        self.publish(self.anchor.data)
        net.register_prefix(entity_id, self.domain)

    def issue(self, subject, public: bytes, issuer_id: str = CONTROLLER_ISSUER_ID,
              version: int = 1) -> Certificate:
        cert = make_certificate(Name(subject), public, self.keypair, self.anchor.name, issuer_id, version)
        self.issued[cert.name] = cert
        self.publish(cert.data)
        return cert

    def sign(self, name, content: bytes) -> Data:
        return sign_data(Name(name), content, self.keypair, self.anchor.name)
