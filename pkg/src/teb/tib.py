"""Trust Information Base: an entity's keychain, anchor and schema, plus the
produce/consume workflow with name-based access control.

Name conventions for access-control keys::

    <prefix>/NAC/KEK/<key-id>                                   KEK public half
    <prefix>/NAC/KDK/<key-id>/ENCRYPTED-BY/<consumer cert>      KDK private half, wrapped per consumer
    <producer identity>/CK/<ck-id>                              content key, wrapped under the KEK

AppData content is a map ``{ck: <CK Data name>, ct: AEAD(CK, content)}``;
CK Data content is ``{kek: <KEK Data name>, ct: hybrid(KEK, CK)}``.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

from . import crypto
from .core import BootstrapSession
from .domain import Controller, Node
from .errors import (
    AuthFailure,
    ChainInvalid,
    FetchTimeout,
    NoKek,
    NoSigningIdentity,
    NotAuthorized,
    StaleVersion,
    TebError,
)
from .names import Name
from .packets import Certificate, Data, Interest, decode_map, encode_map, is_certificate_name, sign_data
from .schema import SchemaMode, TrustSchema, TrustState, licensed_pairs, parse_schema, validate_chain

log = logging.getLogger(__name__)

NAC = "NAC"
KEK = "KEK"
KDK = "KDK"
ENCRYPTED_BY = "ENCRYPTED-BY"
CK = "CK"
SCHEMA = "SCHEMA"
MAX_CHAIN = 32


def kek_name(prefix, kid: str) -> Name:
    return Name(prefix).append(NAC, KEK, kid)


def kdk_name(prefix, kid: str, consumer_cert: Name) -> Name:
    return Name(prefix).append(NAC, KDK, kid, ENCRYPTED_BY) + Name(consumer_cert)


def split_kek_name(name: Name) -> tuple:
    """``(prefix, key-id)`` of a KEK name."""
    if len(name) < 3 or name.text(-3) != NAC or name.text(-2) != KEK:
        raise ValueError(f"{name} is not a KEK name")
    return name[:-3], name.text(-1)


def schema_name(domain, version: int) -> Name:
    return Name(domain).append(SCHEMA, f"v={version}")


# -- keychain and cache -----------------------------------------------------------


class KeyChain:
    """Certified identities: identity name -> (key pair, certificates)."""

    def __init__(self):
        self.identities: dict = {}
        self._keys: dict = {}

    def add(self, cert: Certificate, keypair: crypto.AsymKeyPair):
        if keypair.public != cert.public_key:
            raise ValueError(f"key pair does not match {cert.name}")
        # the identity's current key is the most recently installed one
        _, certs = self.identities.get(cert.subject, (keypair, []))
        if cert not in certs:
            certs.append(cert)
        self.identities[cert.subject] = (keypair, certs)
        self._keys[cert.name] = keypair

    def certificates(self) -> list:
        return [c for _, certs in self.identities.values() for c in certs]

    def keypair_for(self, cert_name: Name) -> crypto.AsymKeyPair:
        return self._keys[Name(cert_name)]

    def __len__(self):
        return len(self.identities)

    def __contains__(self, identity):
        return Name(identity) in self.identities


class ValidatedKeyCache:
    """Bounded FIFO map from name to the trust state established for it.

    Only validated Data may be inserted; a hit lets the TIB skip both the
    network fetch and the re-validation.
    """

    def __init__(self, capacity: int = 64):
        if capacity < 1:
            raise ValueError("cache capacity must be positive")
        self.capacity = capacity
        self._entries: OrderedDict = OrderedDict()
        self.hits = 0
        self.misses = 0
        self.evictions = 0

    def state(self, name: Name) -> Optional[TrustState]:
        st = self._entries.get(name)
        if st is None:
            self.misses += 1
        else:
            self.hits += 1
        return st

    def lookup(self, name: Name) -> Optional[Data]:
        st = self.state(name)
        return None if st is None else st.data

    def insert(self, state: TrustState):
        name = state.data.name
        if name in self._entries:
            return
        self._entries[name] = state
        while len(self._entries) > self.capacity:
            self._entries.popitem(last=False)
            self.evictions += 1

    def clear(self):
        self._entries.clear()

    def names(self) -> list:
        return list(self._entries)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, name):
        return Name(name) in self._entries

    def metrics(self) -> dict:
        total = self.hits + self.misses
        return {"capacity": self.capacity, "size": len(self), "hits": self.hits, "misses": self.misses,
                "evictions": self.evictions, "hit_rate": self.hits / total if total else 0.0}


# -- access control -------------------------------------------------------------


@dataclass
class NacKeys:
    prefix: Name
    kek: Data
    kdks: dict = field(default_factory=dict)  # consumer cert name -> KDK Data
    private: bytes = field(default=b"", repr=False)

    @property
    def key_id(self) -> str:
        return split_kek_name(self.kek.name)[1]


class AccessManager:
    """Controller-side key generation for a static access policy.

    ``policy`` is a list of ``(prefix, consumers)`` where consumers are
    certificate names (or certificates). One KEK/KDK pair is generated per
    prefix and the KDK is wrapped for every listed consumer.
    """

    def __init__(self, controller: Controller, policy):
        self.controller = controller
        self.keys: dict = {}
        for prefix, consumers in policy:
            self.grant(prefix, consumers)

    def _certificate(self, c) -> Certificate:
        if isinstance(c, Certificate):
            return c
        name = Name(c)
        if name in self.controller.issued:
            return self.controller.issued[name]
        if name in self.controller.repo:
            return Certificate(self.controller.repo[name])
        return Certificate(self.controller.fetch(name))

    def grant(self, prefix, consumers) -> NacKeys:
        prefix = Name(prefix)
        entry = self.keys.get(prefix)
        if entry is None:
            pair = crypto.keygen(self.controller.seed + b"/nac/" + str(prefix).encode())
            kek = self.controller.sign(kek_name(prefix, crypto.key_id(pair.public)), pair.public)
            entry = NacKeys(prefix, kek, private=pair.private)
            self.keys[prefix] = entry
            self.controller.publish(kek)
            # the manager answers for the whole NAC subtree, even below an entity's own prefix
            self.controller.net.register_prefix(self.controller.id, prefix.append(NAC))
        for c in consumers:
            cert = self._certificate(c)
            name = kdk_name(prefix, entry.key_id, cert.name)
            wrapped = crypto.hybrid_encrypt(cert.public_key, entry.private, str(name).encode(),
                                            self.controller.seed + str(name).encode())
            kdk = self.controller.sign(name, wrapped)
            entry.kdks[cert.name] = kdk
            self.controller.publish(kdk)
        return entry


# -- the TIB ----------------------------------------------------------------------


class Tib:
    """Trust state of one bootstrapped entity.

    Build it with :meth:`from_session` after bootstrapping completes (or
    :meth:`for_controller` on the controller itself).
    """

    def __init__(self, node: Node, anchor: Certificate, schema: TrustSchema, keychain: KeyChain,
                 cache: Optional[ValidatedKeyCache] = None, intermediates=(), schema_version: int = 0):
        self.node = node
        self.net = node.net
        self.anchor = anchor
        self.schema = schema
        self.keychain = keychain
        self.cache = cache
        self.intermediates = list(intermediates)
        self.schema_version = schema_version
        self.choices: list = []
        self._ck_counter = 0
        self._published_schemas: dict = {}

    @classmethod
    def from_session(cls, node: Node, session: BootstrapSession,
                     cache: Optional[ValidatedKeyCache] = None) -> "Tib":
        if not session.completed:
            raise ValueError("a TIB is initialized only from a completed bootstrapping session")
        kc = KeyChain()
        keys = session.keys or {}
        for cert in session.certificates:
            kp = keys.get(cert.name)
            if kp is None:
                raise ValueError(f"session holds no key for {cert.name}")
            kc.add(cert, kp)
        return cls(node, session.anchor, session.schema, kc, cache, session.intermediates or ())

    @classmethod
    def for_controller(cls, controller: Controller, cache: Optional[ValidatedKeyCache] = None) -> "Tib":
        kc = KeyChain()
        kc.add(controller.anchor, controller.keypair)
        return cls(controller, controller.anchor, controller.schema, kc, cache)

    @property
    def domain(self) -> Name:
        return self.anchor.subject

    # -- cache front-end ------------------------------------------------------

    def cache_lookup(self, name) -> Optional[Data]:
        if self.cache is None:
            return None
        return self.cache.lookup(Name(name))

    def cache_insert(self, state: TrustState):
        if self.cache is not None:
            self.cache.insert(state)

    # -- certificate availability --------------------------------------------

    def serve_own_certificates(self):
        """Publish every keychain certificate and register ``<identity>/KEY``."""
        for cert in self.keychain.certificates():
            self.node.publish(cert.data, register=cert.subject.append("KEY"))

    # -- validation ---------------------------------------------------------------

    def _fetch(self, name: Name) -> Data:
        return self.node.fetch(name)

    def _known(self, name: Name, working: dict) -> Optional[TrustState]:
        st = working.get(name)
        if st is None and self.cache is not None:
            st = self.cache.state(name)
        return st

    def validate(self, data: Data, working: Optional[dict] = None) -> TrustState:
        """Fetch the signing chain of ``data`` and validate it.

        Certificates already validated in this call (``working``) or found in
        the validated key cache end the walk early; otherwise signers are
        fetched until a self-signed certificate is reached.
        """
        working = {} if working is None else working
        chain = [data]
        trusted = None
        cur = data
        while True:
            loc = cur.key_locator
            if loc is None:
                raise ChainInvalid(len(chain) - 1, f"{cur.name} carries no key locator")
            if loc == cur.name:
                break
            trusted = self._known(loc, working)
            if trusted is not None:
                break
            if len(chain) >= MAX_CHAIN:
                raise ChainInvalid(len(chain) - 1, "chain longer than 32")
            signer = self._fetch(loc)
            if signer.name != loc:
                raise ChainInvalid(len(chain) - 1, f"fetched {signer.name} for locator {loc}")
            chain.append(signer)
            cur = signer
        report = validate_chain(self.schema, self.anchor, chain, trusted)
        if not report:
            raise ChainInvalid(report.failed_link, report.reason)
        for st in report.states:
            if st is None or st.data is data:
                continue
            working[st.data.name] = st
            self.cache_insert(st)
        return report.states[0]

    def _validated_key_data(self, name: Name, working: dict) -> Data:
        """A key Data (CK or KDK) from the cache, or fetched and validated."""
        st = self._known(name, working)
        if st is not None:
            return st.data
        data = self._fetch(name)
        st = self.validate(data, working)
        working[name] = st
        self.cache_insert(st)
        return data

    # -- produce / consume ------------------------------------------------------

    def find_kek(self, name: Name) -> Data:
        working: dict = {}
        for k in range(len(name), 0, -1):
            try:
                data = self.node.fetch(name[:k].append(NAC, KEK))
            except FetchTimeout:
                continue
            self.validate(data, working)
            return data
        raise NoKek(f"no KEK covers {name}")

    def signing_identity(self, name: Name) -> tuple:
        """``(keypair, certificate)`` chosen to sign ``name``."""
        ranked = []
        for cert in self.keychain.certificates():
            kp = self.keychain.keypair_for(cert.name)
            if self.schema.mode is SchemaMode.EXPLICIT:
                pairs = licensed_pairs(self.schema, name, cert.name)
                if not pairs:
                    continue
                score = max(len(self.schema.expanded(rd).elements) for rd, _ in pairs)
            else:
                if not cert.subject.is_prefix_of(name):
                    continue
                score = len(cert.subject)
            ranked.append((-score, str(cert.name), kp, cert))
        if not ranked:
            raise NoSigningIdentity(f"no identity in the keychain may sign {name}")
        ranked.sort(key=lambda r: (r[0], r[1]))
        _, _, kp, cert = ranked[0]
        if len(ranked) > 1:
            log.info("signing %s with %s (of %d candidates)", name, cert.name, len(ranked))
        self.choices.append((name, cert.name))
        return kp, cert

    def produce(self, name, content: bytes) -> tuple:
        """Encrypt and sign ``content``; returns ``(app_data, ck_data)``."""
        name = Name(name)
        kek = self.find_kek(name)
        kp, cert = self.signing_identity(name)
        rng = self.node.rng("ck", self._ck_counter)
        self._ck_counter += 1
        ck = crypto.SymKey(rng.randbytes(32))
        ck_name = cert.subject.append(CK, rng.randbytes(8).hex())
        wrapped = crypto.hybrid_encrypt(kek.content, ck.key, str(ck_name).encode(), rng.randbytes(32))
        ck_data = sign_data(ck_name, encode_map({"kek": str(kek.name), "ct": wrapped}), kp, cert.name)
        body = encode_map({"ck": str(ck_name), "ct": crypto.aead_encrypt(ck, content, str(name).encode())})
        app = sign_data(name, body, kp, cert.name)
        self.node.publish(ck_data, register=cert.subject.append(CK))
        return app, ck_data

    def consume(self, app: Data) -> tuple:
        """Validate and decrypt AppData; returns ``(name, content)``."""
        working: dict = {}
        self.validate(app, working)
        try:
            fields = decode_map(app.content)
            ck_name = Name(fields["ck"].decode())
            ct = fields["ct"]
        except (KeyError, ValueError, TebError) as e:
            raise AuthFailure(f"malformed AppData content: {e}") from None
        ck_data = self._validated_key_data(ck_name, working)
        ck_fields = decode_map(ck_data.content)
        prefix, kid = split_kek_name(Name(ck_fields["kek"].decode()))
        kdk_private = None
        for cert in self.keychain.certificates():
            name = kdk_name(prefix, kid, cert.name)
            try:
                kdk = self._validated_key_data(name, working)
            except FetchTimeout:
                continue
            kp = self.keychain.keypair_for(cert.name)
            kdk_private = crypto.hybrid_decrypt(kp.private, kdk.content, str(name).encode())
            break
        if kdk_private is None:
            raise NotAuthorized(f"no KDK for {prefix} is encrypted to this entity")
        ck = crypto.SymKey(crypto.hybrid_decrypt(kdk_private, ck_fields["ct"], str(ck_name).encode()))
        return app.name, crypto.aead_decrypt(ck, ct, str(app.name).encode())

    # -- schema distribution ------------------------------------------------------

    def publish_schema(self, schema: TrustSchema, version: int) -> Data:
        """Controller only: publish ``schema`` as ``<domain>/SCHEMA/v=<version>``."""
        if not isinstance(self.node, Controller) or self.keychain.certificates() != [self.anchor]:
            raise ValueError("only the controller publishes schemas")
        if version <= max(self._published_schemas, default=0):
            raise StaleVersion(f"version {version} is not newer than the published one")
        data = self.node.sign(schema_name(self.domain, version), schema.to_text().encode())
        self._published_schemas[version] = data
        self.node.publish(data)
        if len(self._published_schemas) == 1:
            self.node.serve(self.domain.append(SCHEMA), self._on_schema_interest)
        self.node.schema = schema
        self.schema = schema
        self.schema_version = version
        return data

    def _on_schema_interest(self, interest: Interest, _from: str) -> Optional[Data]:
        exact = [d for d in self._published_schemas.values() if d.name == interest.name]
        if exact:
            return exact[0]
        if interest.name == self.domain.append(SCHEMA):
            return self._published_schemas[max(self._published_schemas)]
        return None

    def fetch_schema(self) -> TrustSchema:
        """Fetch the latest schema version and install it."""
        return self.accept_schema(self.node.fetch(self.domain.append(SCHEMA)))

    def accept_schema(self, data: Data) -> TrustSchema:
        """Validate schema Data under the current schema and swap it in."""
        if len(data.name) != len(self.domain) + 2 or not self.domain.append(SCHEMA).is_prefix_of(data.name):
            raise ChainInvalid(0, f"{data.name} is not a schema name")
        try:
            version = int(data.name.text(-1).removeprefix("v="))
        except ValueError:
            raise ChainInvalid(0, f"bad schema version in {data.name}") from None
        if version <= self.schema_version:
            raise StaleVersion(f"have v={self.schema_version}, offered v={version}")
        # in implicit mode any anchor-certified key may sign; schemas must come from the controller
        if data.key_locator != self.anchor.name:
            raise ChainInvalid(0, f"schema {data.name} is not signed by the controller")
        self.validate(data)
        schema = parse_schema(data.content.decode())
        # validated states depend on the schema that produced them
        if self.cache is not None:
            self.cache.clear()
        self.schema = schema
        self.schema_version = version
        return schema


def certificate_fetch_count(net, entity_id: str, mark: int = 0) -> int:
    """Certificate Interests ``entity_id`` expressed since transcript ``mark``."""
    return net.transcript.since(mark).certificate_fetches(entity_id)


__all__ = [
    "AccessManager",
    "KeyChain",
    "NacKeys",
    "Tib",
    "ValidatedKeyCache",
    "certificate_fetch_count",
    "is_certificate_name",
    "kdk_name",
    "kek_name",
    "schema_name",
    "split_kek_name",
]
