"""Certificate issuance over NEW and CHALLENGE exchanges, with pluggable challenges.

Names (all under the domain prefix)::

    <domain>/CA/NEW/<params-digest>
    <domain>/CA/CHALLENGE/<request-id>/<params-digest>

NEW carries the requester's ECDH share, the public key to certify, a
timestamp and a nonce, and is signed by the key to certify. Both ends derive
two AEAD keys (one per direction) from the ECDH result; every CHALLENGE
payload travels encrypted under them. Responses are signed by the controller.
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass, field
from typing import Callable, Optional

from .. import crypto
from ..domain import Controller, Node
from ..errors import (
    AuthFailure,
    ChainInvalid,
    EmailRejected,
    FetchTimeout,
    NameCollision,
    PinMismatch,
    ReplayRejected,
)
from ..names import Name
from ..packets import (
    Certificate,
    Data,
    Interest,
    decode_map,
    encode_map,
    sign_interest,
    verify_packet,
)
from ..schema import TrustSchema, assigned_names, validate_chain
from ..simnet import OobKind
from .common import anchor_signed, check_digest_name, digest_name, from_u64, u64

PIN_DIGITS = 6
PIN_ATTEMPTS = 3
MAX_CLOCK_SKEW = 1000

PENDING, SUCCESS, FAILURE, ERROR = "pending", "success", "failure", "error"

_ERRORS = {
    "replay": ReplayRejected,
    "rejected": EmailRejected,
    "pin": PinMismatch,
}


def raise_for(reason: str, detail: str = ""):
    msg = f"{reason}: {detail}" if detail else reason
    if reason == "chain":
        raise ChainInvalid(0, detail)
    if reason == "collision":
        raise NameCollision(detail)
    if reason == "multi-name":
        raise ValueError(detail)
    raise _ERRORS.get(reason, AuthFailure)(msg)


def _session_keys(secret: crypto.SymKey, request_id: bytes) -> tuple:
    up = crypto.SymKey(crypto.kdf(secret.key, b"ndncert-up" + request_id))
    down = crypto.SymKey(crypto.kdf(secret.key, b"ndncert-down" + request_id))
    return up, down


@dataclass
class Outcome:
    status: str
    info: dict = field(default_factory=dict)
    identifier: Optional[str] = None
    names: Optional[list] = None
    reason: str = ""


@dataclass
class Request:
    request_id: bytes
    cert_pub: bytes
    up: crypto.SymKey
    down: crypto.SymKey
    challenge: Optional[str] = None
    state: dict = field(default_factory=dict)
    status: str = PENDING
    sent: int = 0
    certificate: Optional[Certificate] = None


# -- challenges ---------------------------------------------------------------------

class EmailPinChallenge:
    """Round 1 names an email address, the CA mails a PIN; round 2 returns it."""
    type = "email"

    def __init__(self, allowed_domains=None, attempts: int = PIN_ATTEMPTS):
        self.allowed_domains = None if allowed_domains is None else tuple(allowed_domains)
        self.attempts = attempts

    def step(self, ca: "NdncertCa", req: Request, params: dict) -> Outcome:
        if "email" in params:
            email = params["email"].decode()
            domain = email.rpartition("@")[2]
            if "@" not in email or (self.allowed_domains is not None and domain not in self.allowed_domains):
                return Outcome(FAILURE, reason="rejected")
            rng = ca.controller.rng("pin", req.request_id)
            pin = f"{rng.randrange(10 ** PIN_DIGITS):0{PIN_DIGITS}d}"
            req.state.update(pin=pin, email=email, left=self.attempts)
            ca.net.oob_send(OobKind.EMAIL, email, pin.encode(), sender=ca.controller.id)
            return Outcome(PENDING, {"remaining": str(self.attempts)})
        if "pin" in params and "pin" in req.state:
            if hmac.compare_digest(params["pin"], req.state["pin"].encode()):
                return Outcome(SUCCESS, identifier=req.state["email"])
            req.state["left"] -= 1
            if req.state["left"] <= 0:
                return Outcome(FAILURE, reason="pin")
            return Outcome(PENDING, {"remaining": str(req.state["left"])})
        return Outcome(FAILURE, reason="bad-challenge")


class DeviceIdChallenge:
    """Round 1 names a device, round 2 proves the key shared with it earlier.

    ``lookup(device_id)`` returns the symmetric key the controller holds for
    the device, or None for unknown devices.
    """
    type = "device-id"

    def __init__(self, lookup: Callable[[str], Optional[crypto.SymKey]]):
        self.lookup = lookup

    def step(self, ca: "NdncertCa", req: Request, params: dict) -> Outcome:
        if "device_id" in params:
            device_id = params["device_id"].decode()
            if self.lookup(device_id) is None:
                return Outcome(FAILURE, reason="unknown-device")
            nonce = ca.controller.rng("device-nonce", req.request_id).randbytes(16)
            req.state.update(device_id=device_id, nonce=nonce)
            return Outcome(PENDING, {"nonce": nonce})
        if "code" in params and "nonce" in req.state:
            key = self.lookup(req.state["device_id"])
            if crypto.hmac_verify(key, req.request_id + req.state["nonce"], params["code"]):
                return Outcome(SUCCESS, identifier=req.state["device_id"])
            return Outcome(FAILURE, reason="code")
        return Outcome(FAILURE, reason="bad-challenge")


def device_id_code(key: crypto.SymKey, request_id: bytes, nonce: bytes) -> bytes:
    return crypto.hmac_sign(key, request_id + nonce)


class PossessionChallenge:
    """One round: present a certificate for the same key, chained to the anchor,
    plus a signature over the request id. The certified name is reused."""
    type = "pop"

    def step(self, ca: "NdncertCa", req: Request, params: dict) -> Outcome:
        try:
            cert = Certificate.from_bytes(params["certificate"])
        except (KeyError, ValueError):
            return Outcome(FAILURE, reason="bad-challenge")
        if cert.public_key != req.cert_pub:
            return Outcome(FAILURE, reason="chain", info={"detail": "certificate is for another key"})
        if not crypto.verify(cert.public_key, req.request_id, params.get("proof", b"")):
            return Outcome(FAILURE, reason="proof")
        try:
            chain = ca.fetch_chain(cert.data)
        except FetchTimeout as e:
            return Outcome(FAILURE, reason="chain", info={"detail": f"cannot fetch signer: {e}"})
        report = validate_chain(ca.controller.schema, ca.controller.anchor, chain)
        if not report:
            return Outcome(FAILURE, reason="chain", info={"detail": report.reason})
        return Outcome(SUCCESS, identifier=str(cert.subject), names=[cert.subject])


# -- certificate authority -------------------------------------------------------------

class NdncertCa:
    def __init__(self, controller: Controller, challenges=(), name_conv=None,
                 issuer_id: str = "controller"):
        self.controller = controller
        self.net = controller.net
        self.prefix = controller.domain.append("CA")
        self.challenges = {c.type: c for c in challenges}
        self.name_conv = name_conv
        self.issuer_id = issuer_id
        self.requests: dict = {}
        self.nonces: set = set()
        self.rejections: list = []
        self.hint = self.prefix
        controller.serve(self.prefix.append("NEW"), self._on_new)
        controller.serve(self.prefix.append("CHALLENGE"), self._on_challenge)

    def add_challenge(self, challenge):
        self.challenges[challenge.type] = challenge

    def _error(self, name: Name, reason: str, detail: str = "") -> Data:
        self.rejections.append((str(name), reason, detail))
        return self.controller.sign(name, encode_map({"status": ERROR, "reason": reason, "detail": detail}))

    def _on_new(self, interest: Interest, _from: str) -> Optional[Data]:
        params = decode_map(interest.app_params or b"")
        if not check_digest_name(interest.name, interest.app_params or b""):
            return self._error(interest.name, "digest")
        need = ("cert_pub", "ecdh_pub", "nonce", "timestamp")
        if any(k not in params for k in need):
            return self._error(interest.name, "malformed")
        if not verify_packet(interest, params["cert_pub"]):
            return self._error(interest.name, "signature")
        if params["nonce"] in self.nonces:
            return self._error(interest.name, "replay", "nonce already used")
        if abs(from_u64(params["timestamp"]) - self.net.step) > MAX_CLOCK_SKEW:
            return self._error(interest.name, "replay", "stale timestamp")
        self.nonces.add(params["nonce"])
        request_id = self.controller.rng("request-id", len(self.requests), params["nonce"]).randbytes(8)
        eph = crypto.keygen(self.controller.seed + b"/ndncert-ecdh/" + request_id)
        try:
            secret = crypto.dh_agree(eph.private, params["ecdh_pub"])
        except ValueError:
            return self._error(interest.name, "malformed", "bad ECDH share")
        up, down = _session_keys(secret, request_id)
        self.requests[request_id] = Request(request_id, params["cert_pub"], up, down)
        content = encode_map({
            "status": "ok",
            "ecdh_pub": eph.public,
            "request_id": request_id,
            "challenges": ",".join(sorted(self.challenges)),
            "nonce": params["nonce"],
        })
        return self.controller.sign(interest.name, content)

    def _reply(self, name: Name, req: Request, status: str, payload: dict) -> Data:
        enc = crypto.aead_encrypt(req.down, encode_map(payload), req.request_id, counter=req.sent)
        req.sent += 1
        return self.controller.sign(name, encode_map({"request_id": req.request_id, "status": status, "payload": enc}))

    def _on_challenge(self, interest: Interest, _from: str) -> Optional[Data]:
        params = decode_map(interest.app_params or b"")
        if not check_digest_name(interest.name, interest.app_params or b""):
            return self._error(interest.name, "digest")
        req = self.requests.get(params.get("request_id", b""))
        if req is None or req.status != PENDING:
            return self._error(interest.name, "unknown-request")
        if not verify_packet(interest, req.cert_pub):
            return self._error(interest.name, "signature")
        try:
            inner = decode_map(crypto.aead_decrypt(req.up, params.get("payload", b""), req.request_id))
        except (AuthFailure, ValueError):
            return self._error(interest.name, "payload")
        ctype = inner.pop("challenge", b"").decode()
        plugin = self.challenges.get(ctype)
        if plugin is None or (req.challenge not in (None, ctype)):
            return self._error(interest.name, "bad-challenge", ctype)
        req.challenge = ctype
        out = plugin.step(self, req, inner)
        if out.status == SUCCESS:
            out = self._issue(req, out)
        if out.status == FAILURE:
            req.status = FAILURE
            detail = out.info.get("detail", "")
            self.rejections.append((str(interest.name), out.reason, detail))
            return self._reply(interest.name, req, FAILURE, {"reason": out.reason, "detail": detail})
        if out.status == SUCCESS:
            req.status = SUCCESS
            return self._reply(interest.name, req, SUCCESS, {
                "cert_name": str(req.certificate.name),
                "forwarding_hint": str(self.hint),
            })
        return self._reply(interest.name, req, PENDING, out.info)

    def _issue(self, req: Request, out: Outcome) -> Outcome:
        names = out.names
        if names is None:
            names = assigned_names(self.name_conv, out.identifier, req.cert_pub)
        if len(names) != 1:
            return Outcome(FAILURE, reason="multi-name", info={"detail": "one certificate per request"})
        try:
            self.controller.registry.bind(out.identifier, names[0], req.cert_pub)
        except NameCollision as e:
            return Outcome(FAILURE, reason="collision", info={"detail": str(e)})
        req.certificate = self.controller.issue(names[0], req.cert_pub, self.issuer_id)
        return out

    def fetch_chain(self, data: Data) -> list:
        """``data`` plus its signers, fetched by key locator, up to the anchor."""
        anchor = self.controller.anchor
        chain = [data]
        cur = data
        while cur.key_locator is not None and cur.key_locator != cur.name and len(chain) < 32:
            if cur.key_locator == anchor.name:
                chain.append(anchor.data)
                break
            cur = self.controller.fetch(cur.key_locator)
            chain.append(cur)
        return chain


# -- requester ------------------------------------------------------------------------

class NdncertClient:
    """Requester state for one certificate request."""

    def __init__(self, node: Node, ca_prefix, keypair: crypto.AsymKeyPair,
                 anchor: Optional[Certificate] = None, schema: Optional[TrustSchema] = None):
        self.node = node
        self.ca_prefix = Name(ca_prefix)
        self.keypair = keypair
        self.anchor = anchor
        self.schema = schema
        self.request_id: Optional[bytes] = None
        self._keys = None
        self._sent = 0
        self.responses: list = []

    def _check(self, data: Optional[Data]) -> dict:
        if data is None:
            raise FetchTimeout("certificate authority did not answer")
        if self.anchor is None or self.schema is None:
            raise ValueError("trust anchor not installed")
        anchor_signed(self.schema, self.anchor, data)
        fields = decode_map(data.content)
        if fields.get("status") == ERROR.encode():
            raise_for(fields.get("reason", b"").decode(), fields.get("detail", b"").decode())
        return fields

    def new(self) -> Data:
        rng = self.node.rng("ndncert-new", self.ca_prefix, self.node.net.step)
        eph = crypto.keygen(self.node.seed + b"/ndncert-ecdh/" + rng.randbytes(8))
        params = encode_map({
            "cert_pub": self.keypair.public,
            "ecdh_pub": eph.public,
            "nonce": rng.randbytes(8),
            "timestamp": u64(self.node.net.step),
        })
        interest = sign_interest(digest_name(self.ca_prefix.append("NEW"), params), params, self.keypair)
        data = self.node.express(interest)
        fields = self._check(data)
        self.request_id = fields["request_id"]
        secret = crypto.dh_agree(eph.private, fields["ecdh_pub"])
        self._keys = _session_keys(secret, self.request_id)
        self.responses.append(data)
        return data

    def challenge(self, challenge_type: str, **params) -> tuple:
        """One CHALLENGE round; returns ``(status, payload, data)``.

        A FAILURE status raises the matching error.
        """
        if self._keys is None:
            raise ValueError("NEW has not completed")
        up, down = self._keys
        inner = encode_map({"challenge": challenge_type, **params})
        payload = crypto.aead_encrypt(up, inner, self.request_id, counter=self._sent)
        self._sent += 1
        app = encode_map({"request_id": self.request_id, "payload": payload})
        prefix = self.ca_prefix.append("CHALLENGE", self.request_id.hex())
        data = self.node.express(sign_interest(digest_name(prefix, app), app, self.keypair))
        fields = self._check(data)
        if fields.get("request_id") != self.request_id:
            raise AuthFailure("response for another request")
        reply = decode_map(crypto.aead_decrypt(down, fields["payload"], self.request_id))
        status = fields["status"].decode()
        self.responses.append(data)
        if status == FAILURE:
            raise_for(reply.get("reason", b"").decode(), reply.get("detail", b"").decode())
        return status, reply, data

    def fetch_certificate(self, cert_name, forwarding_hint=None) -> Certificate:
        data = self.node.fetch(Name(cert_name), None if forwarding_hint is None else Name(forwarding_hint))
        cert = Certificate(data)
        if cert.public_key != self.keypair.public:
            raise AuthFailure("issued certificate is for another key")
        anchor_signed(self.schema, self.anchor, data)
        return cert
