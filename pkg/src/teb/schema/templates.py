"""Rule and schema templates.

Each function takes a schema (possibly still without an anchor) and returns a
new one with generated rules appended, so a whole schema can be written as a
pipeline::

    s = define_zone("lvs-test")
    s = define_anchor(s)
    s = derive_cert(s, '"admin"/admin', from_rule="root")
    s = derive_cert(s, '"author"/author', from_rule="admin")
    s = define_versioned_data(s, '"article"/author/post', signed_by="author")
    s = define_ndncert(s, issuer="admin")
"""

from __future__ import annotations

from typing import Optional

from ..errors import ParseError, UnresolvedRuleRef
from ..names import Name
from .language import (
    Literal,
    Rest,
    Rule,
    RuleRef,
    TrustSchema,
    Variable,
    VersionType,
    Wildcard,
    parse_rules,
)

KEY_RULE = "KEY"
SITE_RULE = "site"
ANCHOR_RULE = "root"


def _elements(text: str) -> tuple:
    (rule,) = parse_rules("#t: " + text.strip())
    return rule.pattern


def _require(schema: TrustSchema, *rule_ids):
    for rid in rule_ids:
        if rid not in schema:
            raise UnresolvedRuleRef(f"#{rid}")


def _default_id(elems) -> str:
    for e in elems:
        if isinstance(e, Literal):
            return e.value.decode()
    raise ParseError("cannot derive a rule id from a pattern without literals")


def define_zone(zone) -> TrustSchema:
    """``#KEY`` certificate suffix and ``#site`` zone prefix."""
    zone = Name(zone) if isinstance(zone, Name) or str(zone).startswith("/") else Name([zone])
    if not len(zone):
        raise ValueError("zone name must be non-empty")
    key = Rule(KEY_RULE, (Literal(b"KEY"), Wildcard(), Wildcard(), Wildcard()))
    site = Rule(SITE_RULE, tuple(Literal(c) for c in zone.components))
    return TrustSchema((key, site), require_anchor=False)


def define_anchor(schema: TrustSchema, rule_id: str = ANCHOR_RULE) -> TrustSchema:
    _require(schema, SITE_RULE, KEY_RULE)
    return schema.extend(Rule(rule_id, (RuleRef(SITE_RULE), RuleRef(KEY_RULE))))


def _identity_variable(schema: TrustSchema, rule_id: str) -> Optional[str]:
    """Last shared variable naming the identity certified by ``rule_id``."""
    found = None
    for e in schema.rule(rule_id).pattern:
        if isinstance(e, Variable) and not e.local:
            found = e.id
    return found


def derive_cert(schema: TrustSchema, suffix_pattern: str, from_rule: str,
                rule_id: Optional[str] = None) -> TrustSchema:
    """Certificates under ``#site/<suffix>`` issued by ``from_rule`` certificates.

    When the issuing rule names its identity with a variable, the issuer-id
    component of the new certificate is bound to that variable.
    """
    _require(schema, SITE_RULE, KEY_RULE, from_rule)
    elems = _elements(suffix_pattern)
    issuer_var = _identity_variable(schema, from_rule)
    if issuer_var is None:
        tail = (RuleRef(KEY_RULE),)
    else:
        tail = (Literal(b"KEY"), Wildcard(), Variable(issuer_var), Wildcard())
    rid = rule_id or _default_id(elems)
    return schema.extend(Rule(rid, (RuleRef(SITE_RULE),) + elems + tail, from_rule))


def define_versioned_data(schema: TrustSchema, pattern: str, signed_by: str,
                          rule_id: Optional[str] = None) -> TrustSchema:
    _require(schema, SITE_RULE, signed_by)
    elems = _elements(pattern)
    rid = rule_id or _default_id(elems)
    rule = Rule(rid, (RuleRef(SITE_RULE),) + elems + (Variable("_version"),), signed_by,
                (VersionType("_version"),))
    return schema.extend(rule)


def define_ndncert(schema: TrustSchema, issuer: str) -> TrustSchema:
    """Rules for certificate-issuance responses (NEW and CHALLENGE Data)."""
    _require(schema, SITE_RULE, issuer)
    site = RuleRef(SITE_RULE)
    return schema.extend(
        Rule("newResponse", (site, Literal(b"CA"), Literal(b"NEW"), Wildcard()), issuer),
        Rule("challengeResponse", (site, Literal(b"CA"), Literal(b"CHALLENGE"), Wildcard(), Wildcard()), issuer),
    )


def define_schema_updates(schema: TrustSchema, signed_by: str = ANCHOR_RULE) -> TrustSchema:
    """``<zone>/SCHEMA/v=<n>`` Data carrying later schema versions."""
    _require(schema, SITE_RULE, signed_by)
    rule = Rule("schemaUpdate", (RuleRef(SITE_RULE), Literal(b"SCHEMA"), Variable("_version")),
                signed_by, (VersionType("_version"),))
    return schema.extend(rule)


def define_access_control(schema: TrustSchema, prefix_pattern: str, manager: str = ANCHOR_RULE,
                          rule_id: str = "nac") -> TrustSchema:
    """KEK and KDK Data under ``#site/<prefix>/NAC/...`` signed by the access manager."""
    _require(schema, SITE_RULE, manager)
    elems = (RuleRef(SITE_RULE),) + _elements(prefix_pattern) + (Literal(b"NAC"), Rest())
    return schema.extend(Rule(rule_id, elems, manager))


def define_minimal_trust_zone(zone) -> TrustSchema:
    """Anchor, one-component entities certified by it, and entity data.

    Also licenses schema updates and access-control keys from the anchor so a
    bootstrapped entity can receive both.
    """
    s = define_anchor(define_zone(zone))
    s = derive_cert(s, "entity", from_rule=ANCHOR_RULE, rule_id="entity")
    s = s.extend(Rule("data", (RuleRef(SITE_RULE), Variable("entity"), Rest()), "entity"))
    s = define_schema_updates(s)
    return define_access_control(s, "entity")
