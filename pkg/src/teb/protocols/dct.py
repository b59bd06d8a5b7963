"""Identity bundles installed over a pre-authenticated console channel.

A bundle holds the anchor, the schema text, the entity's certificates with
the intermediates that chain them to the anchor, and the private keys. It is
encrypted under the console key and validated as a whole on installation:
any defect rejects the bundle and nothing is installed.
"""

from __future__ import annotations

from typing import Optional

from .. import crypto
from ..core import CA, EA, EC, EN, ET, POA, POM, POP, AuthContext, CertC, ProcedureSet
from ..domain import Controller, Node
from ..errors import BundleInvalid, TebError
from ..names import Name
from ..packets import (
    Certificate,
    decode_list,
    decode_map,
    encode_list,
    encode_map,
    make_certificate,
    verify_packet,
)
from ..schema import SchemaMode, parse_schema, validate_chain
from ..simnet import OobKind
from .common import DeviceDriver, ProtocolName

PREFERRED_ORDER = (CA, EA, ET, EN, EC)


class DctController:
    """Mints identities under an explicit schema and ships bundles."""

    def __init__(self, controller: Controller):
        self.controller = controller
        self.net = controller.net

    def mint(self, subject, issuer: Optional[tuple] = None, issuer_id: Optional[str] = None):
        """Key pair plus certificate for ``subject``; ``issuer`` is ``(keypair, cert)``
        (default: the anchor). Returns ``(keypair, cert)``."""
        subject = Name(subject)
        kp = crypto.keygen(self.controller.seed + b"/dct/" + str(subject).encode())
        if issuer is None:
            ikp, icert = self.controller.keypair, self.controller.anchor
        else:
            ikp, icert = issuer
        if issuer_id is None:
            issuer_id = icert.subject.text(-1) if len(icert.subject) else "root"
        cert = make_certificate(subject, kp.public, ikp, icert.name, issuer_id)
        self.controller.issued[cert.name] = cert
        self.controller.publish(cert.data)
        return kp, cert

    def bundle(self, device_id: str, identities, intermediates=(), console_key: Optional[crypto.SymKey] = None,
               include_keys: bool = True) -> bytes:
        """Plain bundle bytes; ``identities`` is a list of ``(keypair, cert)``."""
        approval = b"" if console_key is None else crypto.hmac_sign(console_key, b"member:" + device_id.encode())
        return encode_map({
            "anchor": self.controller.anchor.to_bytes(),
            "schema": self.controller.schema.to_text(),
            "certs": encode_list(c.to_bytes() for _, c in identities),
            "intermediates": encode_list(c.to_bytes() for c in intermediates),
            "keys": encode_list(kp.private for kp, _ in identities) if include_keys else b"",
            "device_id": device_id,
            "approval": approval,
        })

    def install(self, device_entity: str, bundle: bytes, console_key: crypto.SymKey):
        sealed = crypto.aead_encrypt(console_key, bundle, device_entity.encode())
        self.net.oob_send(OobKind.CONSOLE, device_entity, sealed, sender=self.controller.id)


def open_bundle(bundle: bytes) -> dict:
    """Parse and validate a bundle; raises :class:`BundleInvalid` on any defect."""
    try:
        fields = decode_map(bundle)
        anchor = Certificate.from_bytes(fields["anchor"])
        schema = parse_schema(fields["schema"].decode())
        certs = [Certificate.from_bytes(c) for c in decode_list(fields["certs"])]
        inter = [Certificate.from_bytes(c) for c in decode_list(fields["intermediates"])]
        privs = decode_list(fields["keys"])
    except (KeyError, ValueError, TebError) as e:
        raise BundleInvalid(f"unreadable bundle: {e}") from None
    if schema.mode is not SchemaMode.EXPLICIT:
        raise BundleInvalid("bundles carry an explicit schema")
    if not anchor.is_self_signed or not verify_packet(anchor.data, anchor.public_key):
        raise BundleInvalid("anchor is not a valid self-signed certificate")
    if not certs:
        raise BundleInvalid("bundle holds no certificate")
    if len(privs) != len(certs):
        raise BundleInvalid("bundle lacks private keys")
    pool = {c.name: c for c in inter}
    keys = {}
    for cert, priv in zip(certs, privs):
        try:
            kp = crypto.keypair_from_private(priv)
        except ValueError:
            raise BundleInvalid(f"bad private key for {cert.name}") from None
        if kp.public != cert.public_key:
            raise BundleInvalid(f"private key does not match {cert.name}")
        chain = [cert.data]
        cur = cert
        while cur.key_locator != anchor.name and cur.key_locator in pool and len(chain) < 32:
            cur = pool[cur.key_locator]
            chain.append(cur.data)
        report = validate_chain(schema, anchor, chain)
        if not report:
            raise BundleInvalid(f"{cert.name} fails validation at link {report.failed_link}: {report.reason}")
        keys[cert.name] = kp
    return {"anchor": anchor, "schema": schema, "certs": certs, "intermediates": inter, "keys": keys,
            "device_id": fields.get("device_id", b""), "approval": fields.get("approval", b""),
            "raw": bundle}


class DctDevice(DeviceDriver):
    protocol = ProtocolName.DCT_BUNDLE
    required_cac = ("console_key",)
    required_eac = ("console_key", "device_id")

    def __init__(self, node: Node, device_id: str, console_key: crypto.SymKey):
        super().__init__(node)
        self.device_id = device_id
        self.console_key = console_key

    def cac(self) -> AuthContext:
        return AuthContext("CONSOLE", {"console_key": self.console_key.key})

    def eac(self) -> AuthContext:
        return AuthContext("CONSOLE", {"console_key": self.console_key.key, "device_id": self.device_id.encode()})

    def _install(self) -> dict:
        sealed = self.net.oob_recv(OobKind.CONSOLE, self.node.id)
        return open_bundle(crypto.aead_decrypt(self.console_key, sealed, self.node.id.encode()))

    def procedures(self) -> ProcedureSet:
        bundle = lambda: self.once("bundle", self._install)

        def cont_auth(cac):
            b = bundle()
            return {"poa": POA(crypto.digest(b["anchor"].to_bytes()), b["raw"])}

        def enew_auth(eac):
            b = bundle()
            expect = crypto.hmac_sign(self.console_key, b"member:" + self.device_id.encode())
            if b["device_id"].decode() != self.device_id or b["approval"] != expect:
                raise BundleInvalid("bundle was made for another entity")
            return {"pom": POM(self.device_id.encode(), b["approval"])}

        def enew_trust(poa):
            b = bundle()
            return {"anchor": b["anchor"], "schema": b["schema"]}

        def enew_naming(pom, name_conv=None):
            b = bundle()
            names = tuple(c.subject for c in b["certs"])
            certs = encode_list(c.to_bytes() for c in b["certs"])
            return {"pop": POP(names, pom.enew_id, certs),
                    "certc": CertC({"keys": b["keys"]}), "intermediates": list(b["intermediates"])}

        def enew_cert(pop, certc, anchor, schema):
            b = bundle()
            return {"certificates": list(b["certs"]), "keys": dict(certc.material["keys"])}

        return ProcedureSet(cont_auth, enew_auth, enew_trust, enew_naming, enew_cert, PREFERRED_ORDER)


def dct_bundle_run(net, controller: DctController, device: DctDevice, bundle: bytes,
                   console_key: Optional[crypto.SymKey] = None, order=None, session=None):
    """Ship ``bundle`` over the console channel and install it."""
    controller.install(device.node.id, bundle, console_key or device.console_key)
    return device.run(order, session)
