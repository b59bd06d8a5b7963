"""Name-to-rule matching and certificate chain validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..names import Name
from ..packets import Certificate, Data, is_certificate_name, verify_packet
from .language import (
    MAX_SIGNER_DEPTH,
    ExpandedRule,
    Literal,
    Rest,
    SchemaMode,
    TrustSchema,
    Variable,
    Wildcard,
)


def match_expanded(rule: ExpandedRule, name: Name) -> Optional[dict]:
    """Bindings if ``name`` matches the expanded pattern, else None."""
    elems = rule.elements
    comps = name.components
    has_rest = bool(elems) and isinstance(elems[-1], Rest)
    fixed = len(elems) - 1 if has_rest else len(elems)
    if has_rest:
        if len(comps) <= fixed:
            return None
    elif len(comps) != fixed:
        return None
    bindings = {}
    for e, c in zip(elems[:fixed], comps):
        if isinstance(e, Literal):
            if e.value != c:
                return None
        elif isinstance(e, Variable):
            prev = bindings.setdefault(e.id, c)
            if prev != c:
                return None
        elif not isinstance(e, Wildcard):
            raise TypeError(f"unexpanded element {e!r}")
    for con in rule.constraints:
        if not con.holds(bindings[con.var]):
            return None
    return bindings


def match(schema: TrustSchema, name: Name) -> list:
    """All signing rules matching ``name`` as ``(rule_id, bindings)`` pairs."""
    out = []
    for rid in schema.signing_rule_ids:
        b = match_expanded(schema.expanded(rid), name)
        if b is not None:
            out.append((rid, b))
    return out


def bindings_agree(data_bindings: dict, signer_bindings: dict) -> bool:
    for k, v in data_bindings.items():
        if k.startswith("_"):
            continue
        if k in signer_bindings and signer_bindings[k] != v:
            return False
    return True


def licensed_pairs(schema: TrustSchema, data_name: Name, signer_name: Name) -> list:
    """``(data_rule, signer_rule)`` pairs allowing ``signer_name`` to sign ``data_name``."""
    signer_matches = match(schema, signer_name)
    out = []
    for rd, bd in match(schema, data_name):
        for rs, bs in signer_matches:
            if schema.rule(rd).signer == rs and bindings_agree(bd, bs):
                out.append((rd, rs))
    return out


@dataclass(frozen=True)
class TrustState:
    """What validation established about one certificate.

    ``rules`` holds the ``(rule_id, bindings)`` matches from which a licensed
    path to the anchor exists (explicit mode); ``anchor_distance`` counts
    certification hops from the anchor (0 for the anchor itself).
    """
    data: Data
    rules: tuple = ()
    anchor_distance: int = 0


@dataclass
class ValidationReport:
    accepted: bool
    failed_link: Optional[int] = None
    reason: str = ""
    rule_path: list = field(default_factory=list)
    states: list = field(default_factory=list)

    def __bool__(self):
        return self.accepted


def _reject(link, reason):
    return ValidationReport(False, link, reason)


def _anchor_state(schema: TrustSchema, anchor: Certificate) -> Optional[TrustState]:
    if schema.mode is SchemaMode.IMPLICIT:
        return TrustState(anchor.data, (), 0)
    rules = tuple((rid, b) for rid, b in match(schema, anchor.name) if rid == schema.anchor_rule_id)
    if not rules:
        return None
    return TrustState(anchor.data, rules, 0)


def validate_chain(schema: TrustSchema, anchor: Certificate, chain: list,
                   trusted: Optional[TrustState] = None) -> ValidationReport:
    """Validate ``chain[0]`` through the certificates that follow it.

    ``chain[i].key_locator`` must name ``chain[i+1]``; the last element is
    the anchor or is signed by it. With ``trusted`` the last element is
    instead signed by an already validated certificate (validated key cache).
    """
    if not chain:
        return _reject(0, "empty chain")
    if len(chain) > MAX_SIGNER_DEPTH:
        return _reject(MAX_SIGNER_DEPTH, "chain longer than 32")
    chain = list(chain)
    n = len(chain)
    ends_at_anchor = chain[-1] == anchor.data
    if trusted is not None and ends_at_anchor:
        trusted = None

    # signatures and locators, link by link
    for i, pkt in enumerate(chain):
        if i == n - 1 and ends_at_anchor:
            if not anchor.is_self_signed or not verify_packet(pkt, anchor.public_key):
                return _reject(i, "anchor self-signature does not verify")
            break
        if pkt == anchor.data:
            return _reject(i, "anchor must terminate the chain")
        if i + 1 < n:
            signer = chain[i + 1]
        else:
            signer = trusted.data if trusted is not None else anchor.data
        if pkt.key_locator != signer.name:
            return _reject(i, f"key locator {pkt.key_locator} does not name {signer.name}")
        if not is_certificate_name(signer.name):
            return _reject(i, f"signer {signer.name} is not a certificate")
        signer_is_anchor = ends_at_anchor and i + 1 == n - 1
        if i + 1 < n and not signer_is_anchor and signer.key_locator == signer.name:
            return _reject(i + 1, f"self-signed {signer.name} is not the trust anchor")
        if not verify_packet(pkt, signer.content):
            return _reject(i, "signature does not verify")

    # schema, from the trust root downwards
    if ends_at_anchor:
        tail = _anchor_state(schema, anchor)
        if tail is None:
            return _reject(n - 1, "anchor does not match the anchor rule")
        start = n - 2
    else:
        tail = trusted if trusted is not None else _anchor_state(schema, anchor)
        if tail is None:
            return _reject(n - 1, "anchor does not match the anchor rule")
        start = n - 1
    states = [None] * n
    if ends_at_anchor:
        states[n - 1] = tail
    for i in range(start, -1, -1):
        pkt = chain[i]
        if schema.mode is SchemaMode.IMPLICIT:
            if tail.anchor_distance > 1:
                return _reject(i, "implicit schema trusts only the anchor and keys it certified")
            state = TrustState(pkt, (), tail.anchor_distance + 1)
        else:
            feasible = []
            for rid, b in match(schema, pkt.name):
                want = schema.rule(rid).signer
                if any(rs == want and bindings_agree(b, bs) for rs, bs in tail.rules):
                    feasible.append((rid, b))
            if not feasible:
                return _reject(i, f"no rule allows {tail.data.name} to sign {pkt.name}")
            state = TrustState(pkt, tuple(feasible), tail.anchor_distance + 1)
        states[i] = state
        tail = state

    rule_path = [s.rules[0][0] if s.rules else None for s in states]
    return ValidationReport(True, None, "", rule_path, states)
