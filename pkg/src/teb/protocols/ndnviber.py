"""Vibration-triggered bootstrapping for devices near the controller.

The controller sends a TRIGGER Interest (domain name and a temporary key)
over the vibration channel; the device answers with its identifier. The
device then fetches the anchor encrypted under the temporary key and
obtains its certificate through the CA with the device-identifier challenge.
"""

from __future__ import annotations

from typing import Optional

from .. import crypto
from ..core import CA, EA, EC, EN, ET, POA, POM, POP, AuthContext, CertC, ProcedureSet
from ..domain import Controller, Node
from ..errors import AuthFailure, EmptyMailbox, FetchTimeout
from ..names import Name
from ..packets import Certificate, Data, Interest, decode, decode_map, encode, encode_map, verify_packet
from ..schema import device_convention, parse_schema
from ..simnet import OobKind
from .common import DeviceDriver, ProtocolName, require_single_name
from .ndncert import DeviceIdChallenge, NdncertCa, NdncertClient, PENDING, SUCCESS, device_id_code

TRIGGER_PREFIX = Name("/vibration/trigger")
PREFERRED_ORDER = (CA, ET, EA, EN, EC)


class ViberController:
    """Controller side: vibration trigger, encrypted ANCHOR service and the CA."""

    def __init__(self, controller: Controller, name_conv=None):
        self.controller = controller
        self.net = controller.net
        self.name_conv = name_conv or controller.name_conv or device_convention(controller.domain.text(0))
        self.ca = NdncertCa(controller, [DeviceIdChallenge(self.key_for)], self.name_conv)
        self.device_keys: dict = {}
        self._triggers: dict = {}
        self._sent = 0
        controller.serve(controller.domain.append("ANCHOR"), self._on_anchor)

    def trigger(self, device_entity: str) -> Interest:
        """Vibrate a TRIGGER Interest to a device in proximity."""
        rng = self.controller.rng("trigger", device_entity, len(self._triggers))
        nonce, temp = rng.randbytes(8), crypto.SymKey(rng.randbytes(32))
        params = encode_map({"domain": str(self.controller.domain), "temp_key": temp.key,
                             "reply_to": self.controller.id})
        interest = Interest(TRIGGER_PREFIX.append(nonce.hex()), params)
        self.net.oob_send(OobKind.VIBRATION, device_entity, encode(interest), sender=self.controller.id)
        self._triggers[interest.name] = temp
        return interest

    def collect(self):
        """Read TRIGGER Data replies; each tells which device holds which temporary key."""
        while True:
            try:
                data = decode(self.net.oob_recv(OobKind.VIBRATION, self.controller.id))
            except EmptyMailbox:
                return
            temp = self._triggers.pop(data.name, None)
            if isinstance(data, Data) and temp is not None:
                self.device_keys[decode_map(data.content)["device_id"].decode()] = temp

    def key_for(self, device_id: str) -> Optional[crypto.SymKey]:
        self.collect()
        return self.device_keys.get(device_id)

    def _on_anchor(self, interest: Interest, _from: str) -> Optional[Data]:
        device_id = decode_map(interest.app_params or b"").get("device_id", b"").decode()
        key = self.key_for(device_id)
        if key is None:
            return None
        body = encode_map({"anchor": self.controller.anchor.to_bytes(), "schema": self.controller.schema.to_text()})
        self._sent += 1
        return Data(interest.name, crypto.aead_encrypt(key, body, str(interest.name).encode(), self._sent))


class ViberDevice(DeviceDriver):
    protocol = ProtocolName.NDNVIBER
    required_cac = ("channel",)
    required_eac = ("device_id",)

    def __init__(self, node: Node, device_id: str, controller_side: Optional[ViberController] = None):
        super().__init__(node)
        self.device_id = device_id
        self.controller_side = controller_side
        self.client: Optional[NdncertClient] = None

    def cac(self) -> AuthContext:
        return AuthContext("VIBRATION", {"channel": b"vibration"})

    def eac(self) -> AuthContext:
        return AuthContext("VIBRATION", {"device_id": self.device_id.encode()})

    def _trigger(self) -> tuple:
        if self.controller_side is not None:
            self.controller_side.trigger(self.node.id)
        interest = decode(self.net.oob_recv(OobKind.VIBRATION, self.node.id))
        params = decode_map(interest.app_params or b"")
        reply = Data(interest.name, encode_map({"device_id": self.device_id}))
        self.net.oob_send(OobKind.VIBRATION, params["reply_to"].decode(), encode(reply), sender=self.node.id)
        return interest, Name(params["domain"].decode()), crypto.SymKey(params["temp_key"])

    def _anchor(self) -> tuple:
        _, domain, temp = self.once("trigger", self._trigger)
        name = domain.append("ANCHOR", self.device_id)
        data = self.node.express(Interest(name, encode_map({"device_id": self.device_id})))
        if data is None:
            raise FetchTimeout("no ANCHOR Data")
        fields = decode_map(crypto.aead_decrypt(temp, data.content, str(name).encode()))
        anchor = Certificate.from_bytes(fields["anchor"])
        if anchor.subject != domain or not verify_packet(anchor.data, anchor.public_key):
            raise AuthFailure("ANCHOR Data does not carry the domain's self-signed certificate")
        schema = parse_schema(fields["schema"].decode())
        self.client = NdncertClient(self.node, domain.append("CA"), self.node.keypair, anchor, schema)
        return anchor, schema

    def procedures(self) -> ProcedureSet:
        trigger = lambda: self.once("trigger", self._trigger)
        anchor = lambda: self.once("anchor", self._anchor)

        def cont_auth(cac):
            interest, domain, _ = trigger()
            return {"poa": POA(str(domain).encode(), encode(interest))}

        def enew_trust(poa):
            a, s = anchor()
            return {"anchor": a, "schema": s}

        def enew_auth(eac):
            anchor()
            self.client.new()
            status, reply, data = self.client.challenge("device-id", device_id=self.device_id)
            if status != PENDING:
                raise AuthFailure(f"unexpected CHALLENGE status {status}")
            self._memo["nonce"] = reply["nonce"]
            return {"pom": POM(self.client.request_id, encode(data))}

        def enew_naming(pom, name_conv=None):
            _, _, temp = trigger()
            code = device_id_code(temp, self.client.request_id, self._memo["nonce"])
            status, reply, data = self.client.challenge("device-id", code=code)
            if status != SUCCESS:
                raise AuthFailure(f"unexpected CHALLENGE status {status}")
            names = (Name(reply["cert_name"].decode())[:-4],)
            require_single_name("ndnviber", names)
            certc = CertC({"cert_name": reply["cert_name"], "forwarding_hint": reply["forwarding_hint"]})
            return {"pop": POP(names, pom.enew_id, encode(data)), "certc": certc}

        def enew_cert(pop, certc, anchor, schema):
            cert = self.client.fetch_certificate(certc.material["cert_name"].decode(),
                                                 certc.material["forwarding_hint"].decode())
            return {"certificates": [cert], "keys": {cert.name: self.node.keypair}}

        return ProcedureSet(cont_auth, enew_auth, enew_trust, enew_naming, enew_cert, PREFERRED_ORDER)


def ndnviber_run(net, controller: ViberController, device: ViberDevice, order=None, session=None):
    device.controller_side = controller
    return device.run(order, session, controller.name_conv)
