"""Password-based onboarding through an authenticator the controller trusts.

The authenticator runs a PAKE with the device, names it, and certifies the
device's self-signed key with a temporary certificate. The device then uses
that certificate as proof of possession in a CA request to obtain its
formal certificate from the controller.

Device-side names (the device registers ``/pion/<device-id>``)::

    /pion/<id>/PAKE/<digest>        pA -> pB, cB
    /pion/<id>/CONFIRM/<sid>        SID, cA, Ke{name, anchor, schema, CA prefix} -> Ke{self-signed cert}
    /pion/<id>/CREDENTIAL/<sid>     Ke{temporary certificate name} -> ack
"""

from __future__ import annotations

from typing import Optional

from .. import crypto
from ..core import CA, EA, EC, EN, ET, POA, POM, POP, AuthContext, CertC, ProcedureSet
from ..domain import Node
from ..errors import AuthFailure, FetchTimeout, PakeConfirmFailure
from ..names import Name
from ..packets import (
    Certificate,
    Data,
    Interest,
    decode,
    decode_map,
    encode,
    encode_map,
    make_certificate,
    self_signed,
    sign_interest,
    verify_packet,
)
from ..schema import assigned_names, parse_schema
from .common import DeviceDriver, ProtocolName, digest_name, require_single_name
from .ndncert import NdncertCa, NdncertClient, PossessionChallenge, SUCCESS

PION_PREFIX = Name("/pion")
PREFERRED_ORDER = (EA, CA, ET, EN, EC)
TEMP_ISSUER_ID = "pion"


def _ke(session_key: crypto.SymKey) -> crypto.SymKey:
    return crypto.SymKey(crypto.kdf(session_key.key, b"pion-ke"))


def device_prefix(device_id: str) -> Name:
    return PION_PREFIX.append(device_id)


class PionAuthenticator:
    """An elemental entity allowed to authenticate and name new devices.

    ``certificate`` is the authenticator's own certificate; it should be
    issued by the controller, otherwise the controller will refuse the
    temporary certificates it signs.
    """

    def __init__(self, node: Node, certificate: Certificate, keypair: crypto.AsymKeyPair,
                 anchor: Certificate, schema, name_conv, ca_prefix):
        self.node = node
        self.net = node.net
        self.certificate = certificate
        self.keypair = keypair
        self.anchor = anchor
        self.schema = schema
        self.name_conv = name_conv
        self.ca_prefix = Name(ca_prefix)
        self.records: dict = {}
        node.publish(certificate.data, register=certificate.name)

    def _express(self, interest: Interest, what: str) -> Data:
        data = self.node.express(interest)
        if data is None:
            raise FetchTimeout(f"device did not answer {what}")
        return data

    def authenticate(self, device_id: str, password: bytes) -> dict:
        """PAKE and CONFIRM exchanges; returns the session record."""
        rng = self.node.rng("pion", device_id, len(self.records))
        state = crypto.PakeState(crypto.PakeRole.INITIATOR, password, rng.randbytes(16),
                                 self.node.id.encode(), device_id.encode())
        params = encode_map({"pA": crypto.pake_start(state), "id_a": self.node.id})
        data = self._express(Interest(digest_name(device_prefix(device_id).append("PAKE"), params), params), "PAKE")
        reply = decode_map(data.content)
        session_key, c_a = crypto.pake_finish(state, reply["pB"])
        if not crypto.pake_confirm(state, reply["cB"]):
            raise PakeConfirmFailure("device key confirmation failed; wrong password?")
        sid = rng.randbytes(8)
        ke = _ke(session_key)
        (name,) = self._names(device_id)
        secret = encode_map({
            "name": str(name),
            "anchor": self.anchor.to_bytes(),
            "schema": self.schema.to_text(),
            "ca_prefix": str(self.ca_prefix),
        })
        params = encode_map({"sid": sid, "cA": c_a, "enc": crypto.aead_encrypt(ke, secret, sid, 0)})
        confirm = sign_interest(device_prefix(device_id).append("CONFIRM", sid.hex()), params, self.keypair)
        data = self._express(confirm, "CONFIRM")
        reply = decode_map(data.content)
        device_cert = Certificate.from_bytes(crypto.aead_decrypt(ke, reply["enc"], sid))
        if not device_cert.is_self_signed or not verify_packet(device_cert.data, device_cert.public_key):
            raise AuthFailure("device certificate is not self-signed")
        if device_cert.subject != name:
            raise AuthFailure("device certified a different name")
        record = {"sid": sid, "ke": ke, "name": name, "device_cert": device_cert}
        self.records[device_id] = record
        return record

    def _names(self, device_id: str):
        names = assigned_names(self.name_conv, device_id)
        require_single_name("pion", names)
        return names

    def credential(self, device_id: str) -> Certificate:
        """Sign the temporary certificate and tell the device where it is."""
        rec = self.records[device_id]
        dc = rec["device_cert"]
        temp = make_certificate(rec["name"], dc.public_key, self.keypair, self.certificate.name, TEMP_ISSUER_ID)
        self.node.publish(temp.data, register=temp.name)
        sid = rec["sid"]
        params = encode_map({"sid": sid, "enc": crypto.aead_encrypt(rec["ke"], str(temp.name).encode(), sid, 1)})
        self._express(sign_interest(device_prefix(device_id).append("CREDENTIAL", sid.hex()), params, self.keypair),
                      "CREDENTIAL")
        rec["temp_cert"] = temp
        return temp


class PionController:
    """Controller side: the CA with the proof-of-possession challenge."""

    def __init__(self, controller, name_conv=None):
        self.controller = controller
        self.ca = NdncertCa(controller, [PossessionChallenge()], name_conv or controller.name_conv)


class PionDevice(DeviceDriver):
    protocol = ProtocolName.PION
    required_cac = ("password",)
    required_eac = ("password",)

    def __init__(self, node: Node, device_id: str, password: bytes,
                 authenticator: Optional[PionAuthenticator] = None, auth_password: Optional[bytes] = None):
        super().__init__(node)
        self.device_id = device_id
        self.password = password
        # what the authenticator was told out of band; differs only in failure tests
        self.auth_password = password if auth_password is None else auth_password
        self.authenticator = authenticator
        self._pake = None
        self._confirm = None
        self.temp_cert_name: Optional[Name] = None
        self.client: Optional[NdncertClient] = None
        node.serve(device_prefix(device_id), self._on_interest)

    def cac(self) -> AuthContext:
        return AuthContext("PASSWORD", {"password": self.password})

    def eac(self) -> AuthContext:
        return AuthContext("PASSWORD", {"password": self.auth_password})

    # -- responder ------------------------------------------------------------

    def _on_interest(self, interest: Interest, _from: str) -> Optional[Data]:
        kind = interest.name[len(device_prefix(self.device_id))].decode()
        params = decode_map(interest.app_params or b"")
        if kind == "PAKE":
            rng = self.node.rng("pion-pake", len(self._memo))
            state = crypto.PakeState(crypto.PakeRole.RESPONDER, self.password, rng.randbytes(16),
                                     params["id_a"], self.device_id.encode())
            p_b = crypto.pake_start(state)
            key, c_b = crypto.pake_finish(state, params["pA"])
            self._pake = (state, key)
            return Data(interest.name, encode_map({"pB": p_b, "cB": c_b}))
        if kind == "CONFIRM" and self._pake is not None:
            state, key = self._pake
            if not crypto.pake_confirm(state, params["cA"]):
                return None
            ke, sid = _ke(key), params["sid"]
            secret = decode_map(crypto.aead_decrypt(ke, params["enc"], sid))
            name = Name(secret["name"].decode())
            cert = self_signed(name, self.node.keypair)
            self._confirm = {"interest": interest, "sid": sid, "ke": ke, "secret": secret, "self_cert": cert}
            return Data(interest.name, encode_map({"sid": sid, "enc": crypto.aead_encrypt(ke, cert.to_bytes(), sid, 0)}))
        if kind == "CREDENTIAL" and self._confirm is not None:
            c = self._confirm
            if params.get("sid") != c["sid"]:
                return None
            self.temp_cert_name = Name(crypto.aead_decrypt(c["ke"], params["enc"], c["sid"]).decode())
            return Data(interest.name, encode_map({"sid": c["sid"], "status": "ok"}))
        return None

    # -- procedures -------------------------------------------------------------

    def _handshake(self) -> dict:
        if self.authenticator is None:
            raise ValueError("no authenticator reachable")
        self.authenticator.authenticate(self.device_id, self.auth_password)
        if self._confirm is None:
            raise AuthFailure("CONFIRM was not accepted")
        return self._confirm

    def procedures(self) -> ProcedureSet:
        handshake = lambda: self.once("handshake", self._handshake)

        def enew_auth(eac):
            c = handshake()
            return {"pom": POM(c["sid"], encode(c["interest"]))}

        def cont_auth(cac):
            c = handshake()
            return {"poa": POA(c["sid"], encode(c["interest"]))}

        def enew_trust(poa):
            c = self._confirm
            if c is None or encode(c["interest"]) != poa.enew_approval:
                raise AuthFailure("POA does not match the confirmed exchange")
            anchor = Certificate.from_bytes(c["secret"]["anchor"])
            if not verify_packet(anchor.data, anchor.public_key) or not anchor.is_self_signed:
                raise AuthFailure("anchor is not self-signed")
            schema = parse_schema(c["secret"]["schema"].decode())
            return {"anchor": anchor, "schema": schema,
                    "certc": CertC({"ca_prefix": c["secret"]["ca_prefix"]})}

        def enew_naming(pom, name_conv=None):
            handshake()
            self.authenticator.credential(self.device_id)
            if self.temp_cert_name is None:
                raise AuthFailure("no CREDENTIAL received")
            data = self.node.fetch(self.temp_cert_name)
            temp = Certificate(data)
            if temp.public_key != self.node.keypair.public:
                raise AuthFailure("temporary certificate is for another key")
            return {"pop": POP((temp.subject,), pom.enew_id, temp.to_bytes())}

        def enew_cert(pop, certc, anchor, schema):
            # first sub-step: the temporary certificate buys a CA decision (POP')
            client = NdncertClient(self.node, Name(certc.material["ca_prefix"].decode()),
                                   self.node.keypair, anchor, schema)
            self.client = client
            client.new()
            proof = crypto.sign(self.node.keypair.private, client.request_id)
            status, reply, pop2 = client.challenge("pop", certificate=pop.cont_approval, proof=proof)
            if status != SUCCESS:
                raise AuthFailure(f"unexpected CHALLENGE status {status}")
            if self.session is not None:
                self.session.note(f"ENEW_CERT_1: POP' {pop2.name}")
            # second sub-step: fetch the formal certificate
            cert = client.fetch_certificate(reply["cert_name"].decode(), reply["forwarding_hint"].decode())
            if self.session is not None:
                self.session.note(f"ENEW_CERT_2: {cert.name}")
            return {"certificates": [cert], "keys": {cert.name: self.node.keypair}}

        return ProcedureSet(cont_auth, enew_auth, enew_trust, enew_naming, enew_cert, PREFERRED_ORDER)


def pion_run(net, controller: PionController, authenticator: PionAuthenticator, device: PionDevice,
             order=None, session=None):
    device.authenticator = authenticator
    return device.run(order, session, authenticator.name_conv)
