"""Email-authenticated certificate issuance for users of a shared testbed.

The user installs the anchor and schema out of band (a console download),
then runs NEW and two CHALLENGE rounds with the CA: the first names an email
address, the second returns the PIN mailed to it.
"""

from __future__ import annotations

from typing import Callable, Optional

from .. import crypto
from ..core import CA, EA, EC, EN, ET, POA, POM, POP, AuthContext, CertC, ProcedureSet
from ..domain import Controller, Node
from ..errors import AuthFailure
from ..names import Name
from ..packets import Certificate, decode_map, encode, encode_map, verify_packet
from ..schema import TrustSchema, define_anchor, define_ndncert, define_schema_updates, define_zone, derive_cert, parse_schema
from ..simnet import OobKind
from .common import DeviceDriver, ProtocolName, require_single_name
from .ndncert import EmailPinChallenge, NdncertCa, NdncertClient, PENDING, SUCCESS

PREFERRED_ORDER = (CA, ET, EA, EN, EC)


def testbed_schema(zone: str = "ndnfit") -> TrustSchema:
    """Anchor, email-derived user certificates, CA responses and schema updates."""
    s = define_anchor(define_zone(zone))
    s = derive_cert(s, "tld/sld/user", from_rule="root", rule_id="user")
    s = define_ndncert(s, issuer="root")
    return define_schema_updates(s)


def publish_trust(controller: Controller, user_id: str):
    """Out-of-band installation of the anchor and schema (e.g. from a web page)."""
    payload = encode_map({"anchor": controller.anchor.to_bytes(), "schema": controller.schema.to_text()})
    controller.net.oob_send(OobKind.CONSOLE, user_id, payload, sender=controller.id)


class TestbedCa:
    """CA with the email PIN challenge."""

    __test__ = False

    def __init__(self, controller: Controller, name_conv=None, allowed_domains=None):
        self.controller = controller
        self.challenge = EmailPinChallenge(allowed_domains)
        self.ca = NdncertCa(controller, [self.challenge], name_conv or controller.name_conv)


class TestbedUser(DeviceDriver):
    __test__ = False
    protocol = ProtocolName.TESTBED_NDNCERT
    required_cac = ("channel",)
    required_eac = ("email", "ca_prefix")

    def __init__(self, node: Node, email: str, ca_prefix, pin_source: Optional[Callable[[], str]] = None):
        super().__init__(node)
        self.email = email
        self.ca_prefix = Name(ca_prefix)
        self.net.bind_address(node.id, OobKind.EMAIL, email)
        self.pin_source = pin_source or self.read_pin
        self.keypair = crypto.keygen(node.seed + b"/testbed-user-key")
        self.client = NdncertClient(node, self.ca_prefix, self.keypair)

    def read_pin(self) -> str:
        return self.net.oob_recv(OobKind.EMAIL, self.node.id, self.email).decode()

    def cac(self) -> AuthContext:
        return AuthContext("CONSOLE", {"channel": b"CONSOLE"})

    def eac(self) -> AuthContext:
        return AuthContext("EMAIL", {"email": self.email.encode(), "ca_prefix": str(self.ca_prefix).encode()})

    def _trust(self) -> tuple:
        payload = self.net.oob_recv(OobKind.CONSOLE, self.node.id)
        fields = decode_map(payload)
        anchor = Certificate.from_bytes(fields["anchor"])
        if not anchor.is_self_signed or not verify_packet(anchor.data, anchor.public_key):
            raise AuthFailure("downloaded anchor is not a valid self-signed certificate")
        schema = parse_schema(fields["schema"].decode())
        self.client.anchor, self.client.schema = anchor, schema
        return payload, anchor, schema

    def procedures(self) -> ProcedureSet:
        trust = lambda: self.once("trust", self._trust)

        def cont_auth(cac):
            payload, anchor, _ = trust()
            return {"poa": POA(crypto.digest(anchor.to_bytes()), payload)}

        def enew_trust(poa):
            _, anchor, schema = trust()
            return {"anchor": anchor, "schema": schema}

        def enew_auth(eac):
            trust()
            self.client.new()
            status, _, data = self.client.challenge("email", email=self.email)
            if status != PENDING:
                raise AuthFailure(f"unexpected CHALLENGE status {status}")
            return {"pom": POM(self.client.request_id, encode(data))}

        def enew_naming(pom, name_conv=None):
            while True:
                status, reply, data = self.client.challenge("email", pin=self.pin_source())
                if status == SUCCESS:
                    break
            cert_name = Name(reply["cert_name"].decode())
            names = (cert_name[:-4],)
            require_single_name("testbed", names)
            certc = CertC({"cert_name": reply["cert_name"], "forwarding_hint": reply["forwarding_hint"]})
            return {"pop": POP(names, pom.enew_id, encode(data)), "certc": certc}

        def enew_cert(pop, certc, anchor, schema):
            cert = self.client.fetch_certificate(certc.material["cert_name"].decode(),
                                                 certc.material["forwarding_hint"].decode())
            return {"certificates": [cert], "keys": {cert.name: self.keypair}}

        return ProcedureSet(cont_auth, enew_auth, enew_trust, enew_naming, enew_cert, PREFERRED_ORDER)


def testbed_run(net, ca: TestbedCa, user: TestbedUser, order=None, session=None):
    publish_trust(ca.controller, user.node.id)
    return user.run(order, session, ca.ca.name_conv)
