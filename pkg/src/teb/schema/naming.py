"""Entity naming conventions: turning authenticated identifiers into names.

An identifier such as ``alice@example.com`` is split into components
(``alice``, ``example``, ``com``), matched against a source pattern that binds
variables, and the bindings are substituted into a target template::

    conv = NameConv.create("user/sld/tld", '"ndnfit"/tld/sld/user')
    convert_name(conv, "alice@example.com")   # /ndnfit/com/example/alice

The same pattern syntax as trust schemas is used, and
:meth:`NameConv.from_rules` accepts the two-rule form directly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .. import crypto
from ..errors import IdentifierMismatch, NameCollision, ParseError
from ..names import Name
from .language import ExpandedRule, Literal, Variable, Wildcard, parse_rules
from .matching import match_expanded


class UniquenessSuffix(enum.Enum):
    NONE = "none"
    KEY_DIGEST_7HEX = "key-digest-7hex"


def identifier_components(identifier: str) -> tuple:
    """``user@host.domain`` -> ``(user, host, domain)``; plain ids stay whole."""
    if "@" in identifier:
        user, _, host = identifier.partition("@")
        parts = [user] + host.split(".")
    else:
        parts = [identifier]
    if any(not p for p in parts):
        raise IdentifierMismatch(f"malformed identifier {identifier!r}")
    return tuple(p.encode("utf-8") for p in parts)


def _pattern(text: str) -> tuple:
    try:
        (rule,) = parse_rules("#p: " + text)
    except ValueError:
        raise ParseError(f"bad pattern {text!r}") from None
    return rule.pattern


@dataclass(frozen=True)
class NameConv:
    source_pattern: tuple
    target_template: tuple
    uniqueness_suffix: UniquenessSuffix = UniquenessSuffix.NONE
    extra_suffixes: tuple = ()

    def __post_init__(self):
        src_vars = {e.id for e in self.source_pattern if isinstance(e, Variable)}
        for e in self.target_template:
            if isinstance(e, Variable) and e.id not in src_vars:
                raise ParseError(f"template variable {e.id!r} is not bound by the source pattern")
            if not isinstance(e, (Literal, Variable)):
                raise ParseError("name templates contain only literals and variables")
        for e in self.source_pattern:
            if not isinstance(e, (Literal, Variable, Wildcard)):
                raise ParseError("source patterns contain only literals, variables and wildcards")

    @classmethod
    def create(cls, source: str, target: str, suffix: UniquenessSuffix = UniquenessSuffix.NONE,
               extra_suffixes=()) -> "NameConv":
        return cls(_pattern(source), _pattern(target), suffix, tuple(extra_suffixes))

    @classmethod
    def from_rules(cls, text: str, suffix: UniquenessSuffix = UniquenessSuffix.NONE) -> "NameConv":
        """Two rules: the identifier shape, then ``#entityName: ... <= #shape``."""
        rules = parse_rules(text)
        by_id = {r.id: r for r in rules}
        targets = [r for r in rules if r.signer is not None]
        if len(targets) != 1 or targets[0].signer not in by_id:
            raise ParseError("expected one target rule signed by the identifier rule")
        return cls(by_id[targets[0].signer].pattern, targets[0].pattern, suffix)

    def to_dict(self) -> dict:
        return {
            "source": "/".join(e.to_text() for e in self.source_pattern),
            "target": "/".join(e.to_text() for e in self.target_template),
            "suffix": self.uniqueness_suffix.value,
            "extra_suffixes": list(self.extra_suffixes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NameConv":
        return cls.create(d["source"], d["target"], UniquenessSuffix(d.get("suffix", "none")),
                          d.get("extra_suffixes", ()))


def email_convention(domain: str = "ndnfit") -> NameConv:
    return NameConv.create("user/sld/tld", f'"{domain}"/tld/sld/user')


def ssh_convention(domain: str = "ndnfit") -> NameConv:
    return NameConv.create("user/host", f'"{domain}"/host/user', UniquenessSuffix.KEY_DIGEST_7HEX)


def device_convention(domain: str) -> NameConv:
    return NameConv.create("device", f'"{domain}"/device')


def convert_name(conv: NameConv, identifier: str, pubkey: Optional[bytes] = None) -> Name:
    comps = identifier_components(identifier)
    source = ExpandedRule("source", conv.source_pattern, (), None)
    bindings = match_expanded(source, Name(comps))
    if bindings is None:
        raise IdentifierMismatch(f"{identifier!r} does not fit the naming convention")
    out = [e.value if isinstance(e, Literal) else bindings[e.id] for e in conv.target_template]
    if conv.uniqueness_suffix is UniquenessSuffix.KEY_DIGEST_7HEX:
        if pubkey is None:
            raise ValueError("this convention needs the public key for its suffix")
        out.append(crypto.digest(pubkey).hex()[:7].encode())
    return Name(out)


def assigned_names(conv: NameConv, identifier: str, pubkey: Optional[bytes] = None) -> list:
    """Primary name plus one extra name per configured role suffix."""
    base = convert_name(conv, identifier, pubkey)
    return [base] + [base + s for s in conv.extra_suffixes]


class NameRegistry:
    """Keeps identifier <-> name one-to-one inside a domain."""

    def __init__(self):
        self._by_identifier = {}
        self._by_name = {}

    def bind(self, identifier: str, name: Name, holder: bytes = b"") -> Name:
        prev = self._by_identifier.get(identifier)
        if prev is not None and prev != (name, holder):
            raise NameCollision(f"{identifier!r} is already bound to {prev[0]}")
        owner = self._by_name.get(name)
        if owner is not None and owner != identifier:
            raise NameCollision(f"{name} already belongs to {owner!r}")
        self._by_identifier[identifier] = (name, holder)
        self._by_name[name] = identifier
        return name

    def name_of(self, identifier: str) -> Optional[Name]:
        entry = self._by_identifier.get(identifier)
        return entry[0] if entry else None

    def __len__(self):
        return len(self._by_identifier)
