"""Interest and Data packets, certificates, and the canonical wire encoding.

Wire layout (every field is a big-endian u32 length followed by its bytes)::

    Interest: 0x05 | name | ?app_params | ?forwarding_hint | ?sig_info | sig_value
    Data:     0x06 | name | content     | ?key_locator     | sig_info  | sig_value

``name`` is the concatenation of length-prefixed components. An optional
field ``?x`` holds ``00`` when absent and ``01 || x`` when present. ``sig_info``
is ``scheme(1) || lp(key_id)``. The signed region is everything before the
final ``sig_value`` field, so the signature covers the signature info too.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, replace
from typing import Optional, Union

from . import crypto
from .errors import MalformedPacket
from .names import Name

INTEREST_TAG = 0x05
DATA_TAG = 0x06

_U32 = struct.Struct(">I")


class SigScheme(enum.IntEnum):
    NONE = 0
    ASYM_SIG = 1
    HMAC = 2


@dataclass(frozen=True)
class SignatureEnvelope:
    scheme: SigScheme
    key_id: bytes = b""
    sig_bytes: bytes = b""

    def __post_init__(self):
        if (self.scheme == SigScheme.NONE) != (not self.sig_bytes):
            raise ValueError("sig_bytes must be empty iff scheme is NONE")


NO_SIGNATURE = SignatureEnvelope(SigScheme.NONE)


@dataclass(frozen=True)
class Interest:
    name: Name
    app_params: Optional[bytes] = None
    signature: Optional[SignatureEnvelope] = None
    forwarding_hint: Optional[Name] = None


@dataclass(frozen=True)
class Data:
    name: Name
    content: bytes = b""
    key_locator: Optional[Name] = None
    signature: SignatureEnvelope = NO_SIGNATURE


Packet = Union[Interest, Data]


# -- framing helpers ----------------------------------------------------------

def lp(b: bytes) -> bytes:
    return _U32.pack(len(b)) + b


def _opt(b: Optional[bytes]) -> bytes:
    return lp(b"\x00" if b is None else b"\x01" + b)


def _name_bytes(n: Name) -> bytes:
    return b"".join(lp(c) for c in n.components)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def field(self) -> bytes:
        if self.pos + 4 > len(self.buf):
            raise MalformedPacket("truncated length prefix")
        (n,) = _U32.unpack_from(self.buf, self.pos)
        start = self.pos + 4
        if start + n > len(self.buf):
            raise MalformedPacket("field runs past end of buffer")
        self.pos = start + n
        return self.buf[start:self.pos]

    def opt(self) -> Optional[bytes]:
        f = self.field()
        if f == b"\x00":
            return None
        if f[:1] != b"\x01":
            raise MalformedPacket("bad optional-field flag")
        return f[1:]

    def done(self):
        if self.pos != len(self.buf):
            raise MalformedPacket(f"{len(self.buf) - self.pos} trailing bytes")


def _decode_name(b: bytes) -> Name:
    r = _Reader(b)
    comps = []
    while r.pos < len(b):
        c = r.field()
        if not c:
            raise MalformedPacket("empty name component")
        comps.append(c)
    return Name(comps)


def _sig_info(sig: SignatureEnvelope) -> bytes:
    return bytes([sig.scheme]) + lp(sig.key_id)


def _decode_sig_info(b: bytes) -> tuple:
    if not b:
        raise MalformedPacket("empty signature info")
    try:
        scheme = SigScheme(b[0])
    except ValueError:
        raise MalformedPacket(f"unknown signature scheme {b[0]}") from None
    r = _Reader(b[1:])
    key_id = r.field()
    r.done()
    return scheme, key_id


def signed_portion(p: Packet) -> bytes:
    """Bytes covered by the packet's signature."""
    if isinstance(p, Interest):
        sig_info = None if p.signature is None else _sig_info(p.signature)
        hint = None if p.forwarding_hint is None else _name_bytes(p.forwarding_hint)
        return (bytes([INTEREST_TAG]) + lp(_name_bytes(p.name)) + _opt(p.app_params)
                + _opt(hint) + _opt(sig_info))
    if isinstance(p, Data):
        loc = None if p.key_locator is None else _name_bytes(p.key_locator)
        return (bytes([DATA_TAG]) + lp(_name_bytes(p.name)) + lp(p.content) + _opt(loc)
                + lp(_sig_info(p.signature)))
    raise TypeError(f"not a packet: {type(p).__name__}")


def encode(p: Packet) -> bytes:
    sig = p.signature.sig_bytes if p.signature is not None else b""
    return signed_portion(p) + lp(sig)


def decode(buf: bytes) -> Packet:
    if not buf:
        raise MalformedPacket("empty buffer")
    tag = buf[0]
    r = _Reader(buf[1:])
    name = _decode_name(r.field())
    try:
        if tag == INTEREST_TAG:
            params = r.opt()
            hint = r.opt()
            info = r.opt()
            sig_value = r.field()
            r.done()
            sig = None
            if info is None:
                if sig_value:
                    raise MalformedPacket("signature value without signature info")
            else:
                scheme, kid = _decode_sig_info(info)
                sig = SignatureEnvelope(scheme, kid, sig_value)
            return Interest(name, params, sig, None if hint is None else _decode_name(hint))
        if tag == DATA_TAG:
            content = r.field()
            loc = r.opt()
            scheme, kid = _decode_sig_info(r.field())
            sig_value = r.field()
            r.done()
            return Data(name, content, None if loc is None else _decode_name(loc),
                        SignatureEnvelope(scheme, kid, sig_value))
    except ValueError as e:
        if isinstance(e, MalformedPacket):
            raise
        raise MalformedPacket(str(e)) from None
    raise MalformedPacket(f"unknown packet tag 0x{tag:02x}")


# -- structured payloads ------------------------------------------------------

def encode_map(fields: dict) -> bytes:
    """Canonical encoding of a ``str -> bytes`` map (keys sorted)."""
    out = []
    for k in sorted(fields):
        v = fields[k]
        if isinstance(v, str):
            v = v.encode()
        out.append(lp(k.encode()) + lp(v))
    return b"".join(out)


def decode_map(buf: bytes) -> dict:
    r = _Reader(buf)
    out = {}
    while r.pos < len(buf):
        k = r.field().decode()
        out[k] = r.field()
    return out


def encode_list(items) -> bytes:
    return b"".join(lp(i) for i in items)


def decode_list(buf: bytes) -> list:
    r = _Reader(buf)
    out = []
    while r.pos < len(buf):
        out.append(r.field())
    return out


# -- signing --------------------------------------------------------------------

def _asym_envelope_stub(keypair: crypto.AsymKeyPair) -> SignatureEnvelope:
    # placeholder signature so signed_portion can be computed before signing
    return SignatureEnvelope(SigScheme.ASYM_SIG, bytes.fromhex(crypto.key_id(keypair.public)), b"\x00")


def sign_data(name: Name, content: bytes, keypair: crypto.AsymKeyPair, key_locator: Name) -> Data:
    d = Data(name, content, key_locator, _asym_envelope_stub(keypair))
    sig = crypto.sign(keypair.private, signed_portion(d))
    return replace(d, signature=replace(d.signature, sig_bytes=sig))


def hmac_data(name: Name, content: bytes, key: crypto.SymKey, key_locator: Optional[Name] = None) -> Data:
    d = Data(name, content, key_locator, SignatureEnvelope(SigScheme.HMAC, key.key_id, b"\x00"))
    tag = crypto.hmac_sign(key, signed_portion(d))
    return replace(d, signature=replace(d.signature, sig_bytes=tag))


def sign_interest(name: Name, app_params: Optional[bytes], keypair: crypto.AsymKeyPair,
                  forwarding_hint: Optional[Name] = None) -> Interest:
    i = Interest(name, app_params, _asym_envelope_stub(keypair), forwarding_hint)
    sig = crypto.sign(keypair.private, signed_portion(i))
    return replace(i, signature=replace(i.signature, sig_bytes=sig))


def verify_packet(p: Packet, public: bytes) -> bool:
    sig = p.signature
    if sig is None or sig.scheme != SigScheme.ASYM_SIG:
        return False
    return crypto.verify(public, signed_portion(p), sig.sig_bytes)


def verify_packet_hmac(p: Packet, key: crypto.SymKey) -> bool:
    sig = p.signature
    if sig is None or sig.scheme != SigScheme.HMAC:
        return False
    return crypto.hmac_verify(key, signed_portion(p), sig.sig_bytes)


# -- certificates ---------------------------------------------------------------

KEY = b"KEY"


def is_certificate_name(n: Name) -> bool:
    return len(n) >= 5 and n[-4] == KEY and n[-1].startswith(b"v=")


def certificate_name(subject: Name, public: bytes, issuer_id: str, version: int = 1) -> Name:
    return subject.append("KEY", crypto.key_id(public), issuer_id, f"v={version}")


class Certificate:
    """A Data packet named ``<subject>/KEY/<key-id>/<issuer-id>/v=<n>`` whose
    content is a public key."""

    __slots__ = ("data",)

    def __init__(self, data: Data):
        if not is_certificate_name(data.name):
            raise ValueError(f"not a certificate name: {data.name}")
        if len(data.content) != crypto.PUBLIC_KEY_SIZE:
            raise ValueError("certificate content is not a public key")
        self.data = data

    @classmethod
    def from_bytes(cls, buf: bytes) -> "Certificate":
        d = decode(buf)
        if not isinstance(d, Data):
            raise MalformedPacket("certificate must be a Data packet")
        return cls(d)

    def to_bytes(self) -> bytes:
        return encode(self.data)

    @property
    def name(self) -> Name:
        return self.data.name

    @property
    def subject(self) -> Name:
        return self.data.name[:-4]

    @property
    def key_id(self) -> str:
        return self.data.name.text(-3)

    @property
    def issuer_id(self) -> str:
        return self.data.name.text(-2)

    @property
    def version(self) -> int:
        return int(self.data.name.text(-1)[2:])

    @property
    def public_key(self) -> bytes:
        return self.data.content

    @property
    def key_locator(self) -> Optional[Name]:
        return self.data.key_locator

    @property
    def is_self_signed(self) -> bool:
        return self.data.key_locator == self.data.name

    def __eq__(self, other):
        return isinstance(other, Certificate) and other.data == self.data

    def __hash__(self):
        return hash(self.data.name)

    def __repr__(self):
        return f"Certificate({self.name})"


def make_certificate(subject: Name, public: bytes, issuer: crypto.AsymKeyPair,
                     issuer_cert_name: Optional[Name], issuer_id: str, version: int = 1) -> Certificate:
    """Issue a certificate; ``issuer_cert_name=None`` makes it self-signed."""
    name = certificate_name(subject, public, issuer_id, version)
    locator = name if issuer_cert_name is None else issuer_cert_name
    return Certificate(sign_data(name, public, issuer, locator))


def self_signed(subject: Name, keypair: crypto.AsymKeyPair, issuer_id: str = "self") -> Certificate:
    return make_certificate(subject, keypair.public, keypair, None, issuer_id)
