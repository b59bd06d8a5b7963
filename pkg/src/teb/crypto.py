"""Cryptographic primitives behind one narrow interface.

Everything above this module treats keys as opaque byte strings, so the
algorithms can be swapped here without touching protocol code.

Defaults: Ed25519 signatures, X25519 agreement, ChaCha20-Poly1305 AEAD,
SHA-256 digests, HKDF-SHA256 derivation and SPAKE2 (Ed25519 group) with an
HMAC key-confirmation round.

An :class:`AsymKeyPair` carries an Ed25519 half and an X25519 half derived
from the same secret, so one certified public key serves for both signing and
Diffie-Hellman, as the bootstrapping protocols assume.
"""

from __future__ import annotations

import enum
import hashlib
import hmac as _hmac
import random
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat
import spake2

from .errors import AuthFailure, InvalidPoint, ProtocolOrder

SCHEME = "ed25519+x25519"
PUBLIC_KEY_SIZE = 64
SYM_KEY_SIZE = 32
NONCE_SIZE = 12

_RAW = (Encoding.Raw, PublicFormat.Raw)


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def kdf(secret: bytes, info: bytes, length: int = 32, salt: bytes | None = None) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=length, salt=salt, info=info).derive(secret)


def seeded_rng(*parts) -> random.Random:
    """Deterministic RNG for simulation use (nonces, PINs, ephemeral seeds)."""
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, str):
            p = p.encode()
        elif isinstance(p, int):
            p = p.to_bytes(16, "big", signed=True)
        elif not isinstance(p, bytes):
            p = str(p).encode()
        h.update(len(p).to_bytes(4, "big") + p)
    return random.Random(h.digest())


@dataclass(frozen=True)
class AsymKeyPair:
    public: bytes
    private: bytes = field(repr=False)
    scheme: str = SCHEME


@dataclass(frozen=True)
class SymKey:
    key: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.key) != SYM_KEY_SIZE:
            raise ValueError("symmetric keys are 32 bytes")

    @property
    def key_id(self) -> bytes:
        return digest(self.key)


def _ed_private(private: bytes) -> Ed25519PrivateKey:
    return Ed25519PrivateKey.from_private_bytes(private)


def _x_private(private: bytes) -> X25519PrivateKey:
    return X25519PrivateKey.from_private_bytes(digest(b"x25519" + private))


def keygen(seed: bytes) -> AsymKeyPair:
    if not seed:
        raise ValueError("keygen seed must be non-empty")
    if isinstance(seed, str):
        seed = seed.encode()
    return keypair_from_private(digest(b"teb-keygen" + seed))


def keypair_from_private(private: bytes) -> AsymKeyPair:
    """Rebuild a key pair from its 32-byte private half (key transfer)."""
    if len(private) != 32:
        raise ValueError("private keys are 32 bytes")
    ed_pub = _ed_private(private).public_key().public_bytes(*_RAW)
    x_pub = _x_private(private).public_key().public_bytes(*_RAW)
    return AsymKeyPair(public=ed_pub + x_pub, private=private)


def key_id(public: bytes) -> str:
    """Eight hex characters of the public-key digest; used in certificate names."""
    return digest(public).hex()[:8]


def sign(private: bytes, msg: bytes) -> bytes:
    return _ed_private(private).sign(msg)


def verify(public: bytes, msg: bytes, sig: bytes) -> bool:
    if len(public) != PUBLIC_KEY_SIZE:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public[:32]).verify(sig, msg)
    except (InvalidSignature, ValueError):
        return False
    return True


def dh_agree(my_private: bytes, their_public: bytes) -> SymKey:
    if len(their_public) != PUBLIC_KEY_SIZE:
        raise InvalidPoint(f"public key must be {PUBLIC_KEY_SIZE} bytes")
    try:
        peer = X25519PublicKey.from_public_bytes(their_public[32:])
        shared = _x_private(my_private).exchange(peer)
    except ValueError as e:
        # low-order points produce an all-zero secret, which cryptography rejects
        raise InvalidPoint(str(e)) from None
    return SymKey(kdf(shared, b"teb-dh"))


def aead_encrypt(k: SymKey, plaintext: bytes, assoc_data: bytes = b"", counter: int = 0) -> bytes:
    """Encrypt under ``k``. The nonce is the big-endian ``counter``; callers
    that reuse a key must advance it."""
    nonce = counter.to_bytes(NONCE_SIZE, "big")
    return nonce + ChaCha20Poly1305(k.key).encrypt(nonce, plaintext, assoc_data)


def aead_decrypt(k: SymKey, ciphertext: bytes, assoc_data: bytes = b"") -> bytes:
    if len(ciphertext) < NONCE_SIZE + 16:
        raise AuthFailure("ciphertext too short")
    nonce, body = ciphertext[:NONCE_SIZE], ciphertext[NONCE_SIZE:]
    try:
        return ChaCha20Poly1305(k.key).decrypt(nonce, body, assoc_data)
    except InvalidTag:
        raise AuthFailure("AEAD tag mismatch") from None


def hmac_sign(k: SymKey, msg: bytes) -> bytes:
    return _hmac.new(k.key, msg, hashlib.sha256).digest()


def hmac_verify(k: SymKey, msg: bytes, tag: bytes) -> bool:
    return _hmac.compare_digest(hmac_sign(k, msg), tag)


def hybrid_encrypt(recipient_public: bytes, plaintext: bytes, assoc_data: bytes, seed: bytes) -> bytes:
    """Encrypt to an X25519 public half with an ephemeral key derived from ``seed``."""
    eph = keygen(b"ephemeral" + seed)
    k = dh_agree(eph.private, recipient_public)
    return eph.public + aead_encrypt(k, plaintext, assoc_data)


def hybrid_decrypt(private: bytes, ciphertext: bytes, assoc_data: bytes) -> bytes:
    if len(ciphertext) < PUBLIC_KEY_SIZE:
        raise AuthFailure("hybrid ciphertext too short")
    try:
        k = dh_agree(private, ciphertext[:PUBLIC_KEY_SIZE])
    except InvalidPoint:
        raise AuthFailure("bad ephemeral key") from None
    return aead_decrypt(k, ciphertext[PUBLIC_KEY_SIZE:], assoc_data)


# -- password-authenticated key exchange ------------------------------------

class PakeRole(enum.Enum):
    INITIATOR = "A"
    RESPONDER = "B"


class PakeState:
    """One side of a SPAKE2 exchange followed by HMAC key confirmation.

    ``seed`` feeds the per-session randomness; distinct sessions must use
    distinct seeds.
    """

    def __init__(self, role: PakeRole, password: bytes, seed: bytes,
                 id_a: bytes = b"initiator", id_b: bytes = b"responder"):
        self.role = role
        self.password = password
        self._rng = seeded_rng(b"pake", seed)
        cls = spake2.SPAKE2_A if role is PakeRole.INITIATOR else spake2.SPAKE2_B
        self._spake = cls(password, idA=id_a, idB=id_b, entropy_f=self._rng.randbytes)
        self._phase = "fresh"
        self._my_share = b""
        self._peer_share = b""
        self._confirm_keys = None

    def _expect(self, phase):
        if self._phase != phase:
            raise ProtocolOrder(f"PAKE step called in phase {self._phase!r}, expected {phase!r}")

    def _transcript(self) -> bytes:
        if self.role is PakeRole.INITIATOR:
            return self._my_share + self._peer_share
        return self._peer_share + self._my_share


def pake_start(state: PakeState) -> bytes:
    state._expect("fresh")
    state._my_share = state._spake.start()
    state._phase = "started"
    return state._my_share


def pake_finish(state: PakeState, peer_share: bytes) -> tuple[SymKey, bytes]:
    state._expect("started")
    try:
        shared = state._spake.finish(peer_share)
    except (spake2.SPAKEError, ValueError) as e:
        raise AuthFailure(f"bad PAKE share: {e}") from None
    state._peer_share = peer_share
    mine, theirs = (b"A", b"B") if state.role is PakeRole.INITIATOR else (b"B", b"A")
    state._confirm_keys = (
        SymKey(kdf(shared, b"confirm-" + mine)),
        SymKey(kdf(shared, b"confirm-" + theirs)),
    )
    state._phase = "finished"
    confirm = hmac_sign(state._confirm_keys[0], state._transcript())
    return SymKey(kdf(shared, b"session-key")), confirm


def pake_confirm(state: PakeState, peer_confirm: bytes) -> bool:
    state._expect("finished")
    state._phase = "confirmed"
    return hmac_verify(state._confirm_keys[1], state._transcript(), peer_confirm)
