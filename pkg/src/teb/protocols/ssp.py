"""Smart-home sign-on: QR pre-sharing, broadcast sign-on, broadcast certificate request.

The device shows a QR code (public key, symmetric key, device identifier) to
the controller. Every request Interest is named ``<prefix>/<digest>`` where the
digest covers all of its parameters; the controller answers on the same name
with Data authenticated by the shared symmetric key.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .. import crypto
from ..core import CA, EA, EC, EN, ET, POA, POM, POP, AuthContext, CertC, ProcedureSet
from ..domain import Controller, Node
from ..errors import AuthFailure, FetchTimeout
from ..names import Name
from ..packets import (
    Certificate,
    Data,
    Interest,
    decode,
    decode_list,
    decode_map,
    encode,
    encode_list,
    encode_map,
    hmac_data,
    verify_packet,
    verify_packet_hmac,
)
from ..schema import assigned_names, device_convention, parse_schema
from ..simnet import OobKind
from .common import DeviceDriver, ProtocolName, check_digest_name, digest_name

SIGN_ON_PREFIX = Name("/ndn/sign-on")
CERT_REQUEST_PREFIX = Name("/ndn/cert-request")
PREFERRED_ORDER = (EA, CA, ET, EN, EC)


@dataclass(frozen=True)
class QrCode:
    device_id: str
    public: bytes
    symkey: bytes

    def to_bytes(self) -> bytes:
        return encode_map({"device_id": self.device_id, "public": self.public, "symkey": self.symkey})

    @classmethod
    def from_bytes(cls, buf: bytes) -> "QrCode":
        m = decode_map(buf)
        return cls(m["device_id"].decode(), m["public"], m["symkey"])


def sign_on_params(device_id: str, capability: bytes, n1: bytes, private: bytes) -> bytes:
    """The four sign-on parameters; the fourth is the device's signature over the other three."""
    body = encode_map({"device_id": device_id, "capability": capability, "n1": n1})
    return encode_map({"device_id": device_id, "capability": capability, "n1": n1,
                       "sig": crypto.sign(private, body)})


def _params_verify(params: dict, public: bytes, fields) -> bool:
    body = encode_map({k: params[k] for k in fields})
    return crypto.verify(public, body, params.get("sig", b""))


class SspController:
    """Controller side: scans QR codes and answers sign-on and certificate requests."""

    def __init__(self, controller: Controller, name_conv=None):
        self.controller = controller
        self.net = controller.net
        self.name_conv = name_conv or controller.name_conv or device_convention(controller.domain.text(0))
        self.known: dict = {}
        self.sign_ons: dict = {}
        self.rejections: list = []
        self.net.listen_broadcast(controller.id)
        controller.serve(SIGN_ON_PREFIX, self._on_sign_on, register=False)
        controller.serve(CERT_REQUEST_PREFIX, self._on_cert_request, register=False)

    def scan_qr(self) -> QrCode:
        qr = QrCode.from_bytes(self.net.oob_recv(OobKind.QR, self.controller.id))
        self.known[qr.device_id] = qr
        return qr

    def _reject(self, interest, reason):
        self.rejections.append((str(interest.name), reason))
        return None

    def _on_sign_on(self, interest: Interest, _from: str) -> Optional[Data]:
        raw = interest.app_params or b""
        if not check_digest_name(interest.name, raw):
            return self._reject(interest, "digest")
        params = decode_map(raw)
        qr = self.known.get(params.get("device_id", b"").decode())
        if qr is None:
            return self._reject(interest, "unknown device")
        if not _params_verify(params, qr.public, ("capability", "device_id", "n1")):
            return self._reject(interest, "signature")
        n2 = self.controller.rng("n2", qr.device_id, params["n1"]).randbytes(16)
        self.sign_ons[qr.device_id] = (params["n1"], n2)
        content = encode_map({
            "anchor": self.controller.anchor.to_bytes(),
            "schema": self.controller.schema.to_text(),
            "n2": n2,
        })
        return hmac_data(interest.name, content, crypto.SymKey(qr.symkey))

    def _on_cert_request(self, interest: Interest, _from: str) -> Optional[Data]:
        raw = interest.app_params or b""
        if not check_digest_name(interest.name, raw):
            return self._reject(interest, "digest")
        params = decode_map(raw)
        device_id = params.get("device_id", b"").decode()
        qr = self.known.get(device_id)
        if qr is None or device_id not in self.sign_ons:
            return self._reject(interest, "no sign-on")
        if not _params_verify(params, qr.public, ("anchor_digest", "device_id", "n1", "n2")):
            return self._reject(interest, "signature")
        if (params["n1"], params["n2"]) != self.sign_ons[device_id]:
            return self._reject(interest, "nonce")
        if params["anchor_digest"] != crypto.digest(self.controller.anchor.to_bytes()):
            return self._reject(interest, "anchor digest")
        transfer = crypto.dh_agree(self.controller.keypair.private, qr.public)
        certs, keys = [], []
        for i, name in enumerate(assigned_names(self.name_conv, device_id, qr.public)):
            self.controller.registry.bind(f"{device_id}#{i}", name, qr.public)
            kp = crypto.keygen(self.controller.seed + b"/ssp-device-key/" + str(name).encode())
            cert = self.controller.issue(name, kp.public)
            certs.append(cert.to_bytes())
            keys.append(crypto.aead_encrypt(transfer, kp.private, bytes(str(cert.name), "utf-8"), counter=i))
        content = encode_map({"certs": encode_list(certs), "keys": encode_list(keys)})
        return hmac_data(interest.name, content, crypto.SymKey(qr.symkey))


class SspDevice(DeviceDriver):
    protocol = ProtocolName.SSP
    required_cac = ("private_key", "symkey")
    required_eac = ("public_key", "symkey", "device_id")

    def __init__(self, node: Node, device_id: str, capability: bytes = b"sensor"):
        super().__init__(node)
        self.device_id = device_id
        self.capability = capability
        rng = node.rng("ssp")
        self.symkey = crypto.SymKey(rng.randbytes(32))
        self.n1 = rng.randbytes(16)
        self.qr = QrCode(device_id, node.keypair.public, self.symkey.key)

    def show_qr(self, controller_id: str, qr: Optional[QrCode] = None):
        """Out-of-band step: the controller's operator scans the device's QR code."""
        self.net.oob_send(OobKind.QR, controller_id, (qr or self.qr).to_bytes(), sender=self.node.id)

    def cac(self) -> AuthContext:
        return AuthContext("QR", {"private_key": self.node.keypair.private, "symkey": self.symkey.key})

    def eac(self) -> AuthContext:
        return AuthContext("QR", {"public_key": self.qr.public, "symkey": self.qr.symkey,
                                  "device_id": self.device_id.encode()})

    def _broadcast(self, prefix: Name, params: bytes, what: str) -> Data:
        data = self.net.broadcast_interest(self.node.id, Interest(digest_name(prefix, params), params))
        if data is None:
            raise FetchTimeout(f"no controller answered the {what} Interest")
        return data

    def _sign_on(self) -> Data:
        params = sign_on_params(self.device_id, self.capability, self.n1, self.node.keypair.private)
        return self._broadcast(SIGN_ON_PREFIX, params, "sign-on")

    def _check(self, data: Data, what: str):
        if not verify_packet_hmac(data, self.symkey):
            raise AuthFailure(f"{what} Data is not authenticated by the pre-shared key")

    def procedures(self) -> ProcedureSet:
        sign_on = lambda: self.once("sign-on", self._sign_on)

        def cont_auth(cac):
            data = sign_on()
            return {"poa": POA(decode_map(data.content).get("n2", b""), encode(data))}

        def enew_auth(eac):
            return {"pom": POM(self.device_id.encode(), encode(sign_on()))}

        def enew_trust(poa):
            data = decode(poa.enew_approval)
            self._check(data, "sign-on")
            fields = decode_map(data.content)
            anchor = Certificate.from_bytes(fields["anchor"])
            if not anchor.is_self_signed or not verify_packet(anchor.data, anchor.public_key):
                raise AuthFailure("trust anchor is not a valid self-signed certificate")
            schema = parse_schema(fields["schema"].decode())
            dh = crypto.dh_agree(self.node.keypair.private, anchor.public_key)
            return {"anchor": anchor, "schema": schema, "certc": CertC({"dh_key": dh.key})}

        def enew_naming(pom, name_conv=None):
            signed = decode(pom.cont_approval)
            fields = decode_map(signed.content)
            body = {
                "device_id": self.device_id,
                "anchor_digest": crypto.digest(fields["anchor"]),
                "n1": self.n1,
                "n2": fields["n2"],
            }
            sig = crypto.sign(self.node.keypair.private, encode_map(body))
            params = encode_map({**body, "sig": sig})
            data = self._broadcast(CERT_REQUEST_PREFIX, params, "certificate request")
            self._check(data, "certificate")
            certs = [Certificate.from_bytes(c) for c in decode_list(decode_map(data.content)["certs"])]
            return {"pop": POP(tuple(c.subject for c in certs), self.device_id.encode(), encode(data))}

        def enew_cert(pop, certc, anchor, schema):
            data = decode(pop.cont_approval)
            self._check(data, "certificate")
            fields = decode_map(data.content)
            key = crypto.SymKey(certc.material["dh_key"])
            certs, keys = [], {}
            for raw, enc in zip(decode_list(fields["certs"]), decode_list(fields["keys"])):
                cert = Certificate.from_bytes(raw)
                kp = crypto.keypair_from_private(crypto.aead_decrypt(key, enc, str(cert.name).encode()))
                if kp.public != cert.public_key:
                    raise AuthFailure("transferred private key does not match the certificate")
                certs.append(cert)
                keys[cert.name] = kp
            return {"certificates": certs, "keys": keys}

        return ProcedureSet(cont_auth, enew_auth, enew_trust, enew_naming, enew_cert, PREFERRED_ORDER)


def ssp_run(net, controller: SspController, device: SspDevice, order=None, session=None,
            qr: Optional[QrCode] = None):
    """Pre-share the QR code (``qr`` replaces the device's own), then bootstrap
    ``device`` into the controller's domain."""
    device.show_qr(controller.controller.id, qr)
    controller.scan_qr()
    return device.run(order, session, controller.name_conv)
