"""Trust schema rule language: patterns, rules, parser and canonical text.

A schema is a list of rules, one per line::

    #KEY: "KEY"/_/_/_
    #site: "lvs-test"
    #article: #site/"article"/author/post/_version & {_version: $eq_type("v=0")} <= #author
    #root: #site/#KEY

Pattern elements, separated by ``/``:

* ``"text"``  literal component
* ``_``       anonymous wildcard (one component)
* ``ident``   variable; repeated occurrences must bind the same component.
  Variables whose name starts with ``_`` are local to the rule and do not
  take part in signer binding checks.
* ``#rule``   reference to another rule's pattern, spliced in place
* ``...``     one or more trailing components (last element only)

``& {var: "text", var: $eq_type("v=0")}`` attaches constraints and
``<= #signer`` names the rule whose certificates may sign matching packets.
Rules spliced into other patterns are *fragments*; the anchor is the single
non-fragment rule without a signer. A text with no rules describes the
implicit schema. ``//`` starts a comment.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

from ..errors import CyclicRuleRef, MissingAnchor, ParseError, UnresolvedRuleRef

MAX_SIGNER_DEPTH = 32


@dataclass(frozen=True)
class Literal:
    value: bytes

    def to_text(self):
        return '"' + self.value.decode("utf-8") + '"'


@dataclass(frozen=True)
class Wildcard:
    def to_text(self):
        return "_"


@dataclass(frozen=True)
class Variable:
    id: str

    @property
    def local(self) -> bool:
        return self.id.startswith("_")

    def to_text(self):
        return self.id


@dataclass(frozen=True)
class RuleRef:
    rule_id: str

    def to_text(self):
        return "#" + self.rule_id


@dataclass(frozen=True)
class Rest:
    def to_text(self):
        return "..."


Element = Union[Literal, Wildcard, Variable, RuleRef, Rest]


@dataclass(frozen=True)
class EqLiteral:
    var: str
    value: bytes

    def holds(self, comp: bytes) -> bool:
        return comp == self.value

    def to_text(self):
        return f'{self.var}: "{self.value.decode()}"'


@dataclass(frozen=True)
class VersionType:
    """``$eq_type("v=0")``: the component is a ``v=`` version component."""
    var: str

    def holds(self, comp: bytes) -> bool:
        return comp.startswith(b"v=")

    def to_text(self):
        return f'{self.var}: $eq_type("v=0")'


Constraint = Union[EqLiteral, VersionType]


@dataclass(frozen=True)
class Rule:
    id: str
    pattern: tuple
    signer: Optional[str] = None
    constraints: tuple = ()
    line: Optional[int] = field(default=None, compare=False)

    def to_text(self) -> str:
        out = f"#{self.id}: " + "/".join(e.to_text() for e in self.pattern)
        if self.constraints:
            out += " & {" + ", ".join(c.to_text() for c in self.constraints) + "}"
        if self.signer:
            out += f" <= #{self.signer}"
        return out


class SchemaMode(enum.Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


@dataclass(frozen=True)
class ExpandedRule:
    id: str
    elements: tuple
    constraints: tuple
    signer: Optional[str]


class TrustSchema:
    """An immutable, resolved rule set.

    Construct through :func:`parse_schema`, :meth:`implicit` or the template
    functions. ``TrustSchema(rules, require_anchor=False)`` is allowed for
    partially built schemas (templates in progress).
    """

    def __init__(self, rules=(), mode: SchemaMode = SchemaMode.EXPLICIT, *, require_anchor: bool = True):
        rules = tuple(rules)
        if mode is SchemaMode.IMPLICIT and rules:
            raise ValueError("implicit schemas carry no rules")
        self.mode = mode
        self._rules = {}
        for r in rules:
            if r.id in self._rules:
                raise ParseError(f"duplicate rule #{r.id}", r.line)
            self._rules[r.id] = r
        self.fragment_ids = frozenset(
            e.rule_id for r in rules for e in r.pattern if isinstance(e, RuleRef))
        self.anchor_rule_id = None
        if mode is SchemaMode.EXPLICIT:
            self._resolve(require_anchor)

    @classmethod
    def implicit(cls) -> "TrustSchema":
        return cls((), SchemaMode.IMPLICIT)

    @property
    def rules(self) -> dict:
        return dict(self._rules)

    def rule(self, rule_id: str) -> Rule:
        try:
            return self._rules[rule_id]
        except KeyError:
            raise UnresolvedRuleRef(f"#{rule_id}") from None

    def __contains__(self, rule_id):
        return rule_id in self._rules

    def __len__(self):
        return len(self._rules)

    def __eq__(self, other):
        return (isinstance(other, TrustSchema) and self.mode == other.mode
                and tuple(self._rules.values()) == tuple(other._rules.values()))

    def __hash__(self):
        return hash((self.mode, tuple(self._rules.values())))

    def __repr__(self):
        return f"TrustSchema({self.mode.value}, {len(self._rules)} rules, anchor={self.anchor_rule_id!r})"

    @property
    def signing_rule_ids(self) -> list:
        """Rules that describe packets (everything except spliced fragments)."""
        return [rid for rid in self._rules if rid not in self.fragment_ids]

    def extend(self, *rules: Rule, require_anchor: bool = True) -> "TrustSchema":
        return TrustSchema(tuple(self._rules.values()) + rules, self.mode, require_anchor=require_anchor)

    def _resolve(self, require_anchor):
        for r in self._rules.values():
            for e in r.pattern:
                if isinstance(e, RuleRef) and e.rule_id not in self._rules:
                    raise UnresolvedRuleRef(f"#{e.rule_id} referenced by #{r.id}")
            if r.signer is not None and r.signer not in self._rules:
                raise UnresolvedRuleRef(f"signer #{r.signer} of #{r.id}")
        for rid in self._rules:
            self.expanded(rid)  # raises on cycles / malformed patterns
        for rid in self._rules:
            seen = []
            cur = rid
            while self._rules[cur].signer is not None:
                seen.append(cur)
                cur = self._rules[cur].signer
                if cur in seen or len(seen) > MAX_SIGNER_DEPTH:
                    raise CyclicRuleRef(f"signer chain from #{rid} does not terminate")
        anchors = [rid for rid in self.signing_rule_ids if self._rules[rid].signer is None]
        if len(anchors) > 1 and require_anchor:
            lines = [self._rules[a].line for a in anchors]
            raise ParseError(f"multiple anchor rules: {', '.join('#' + a for a in anchors)}", lines[1])
        if len(anchors) == 1:
            self.anchor_rule_id = anchors[0]
        elif require_anchor:
            raise MissingAnchor("no rule without a signer")

    @cached_property
    def _expanded_cache(self):
        return {}

    def expanded(self, rule_id: str, _stack=()) -> ExpandedRule:
        cache = self._expanded_cache
        if rule_id in cache:
            return cache[rule_id]
        if rule_id in _stack:
            raise CyclicRuleRef(" -> ".join("#" + s for s in _stack + (rule_id,)))
        r = self.rule(rule_id)
        elems = []
        constraints = list(r.constraints)
        for e in r.pattern:
            if isinstance(e, RuleRef):
                sub = self.expanded(e.rule_id, _stack + (rule_id,))
                elems.extend(sub.elements)
                constraints.extend(sub.constraints)
            else:
                elems.append(e)
        for i, e in enumerate(elems):
            if isinstance(e, Rest) and i != len(elems) - 1:
                raise ParseError(f"'...' must be the last element of #{rule_id}", r.line)
        bound = {e.id for e in elems if isinstance(e, Variable)}
        for c in constraints:
            if c.var not in bound:
                raise ParseError(f"constraint on unknown variable {c.var!r} in #{rule_id}", r.line)
        out = ExpandedRule(rule_id, tuple(elems), tuple(constraints), r.signer)
        cache[rule_id] = out
        return out

    def to_text(self) -> str:
        """Canonical source text; ``parse_schema(s.to_text()) == s``."""
        return "".join(r.to_text() + "\n" for r in self._rules.values())


# -- parser ----------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<string>"[^"]*")
  | (?P<ruleref>\#[A-Za-z_][\w-]*)
  | (?P<eqtype>\$eq_type\(\s*"[^"]*"\s*\))
  | (?P<rest>\.\.\.)
  | (?P<le><=)
  | (?P<ident>[A-Za-z_][\w-]*)
  | (?P<punct>[/&{}:,])
""", re.VERBOSE)


def _tokenize(text, lineno):
    pos = 0
    toks = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), pos + 1))
        pos = m.end()
    return toks


class _LineParser:
    def __init__(self, toks, lineno):
        self.toks = toks
        self.i = 0
        self.lineno = lineno

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind or "token"
            raise ParseError(f"expected {want}, found {tok[1]!r}", self.lineno, tok[2])
        self.i += 1
        return tok

    def rule(self) -> Rule:
        _, rid, _ = self.take("ruleref")
        self.take("punct", ":")
        pattern = self.pattern()
        constraints = ()
        signer = None
        if self.peek()[1] == "&":
            self.take()
            constraints = self.constraints()
        if self.peek()[0] == "le":
            self.take()
            signer = self.take("ruleref")[1][1:]
        if self.peek()[0] is not None:
            tok = self.peek()
            raise ParseError(f"unexpected {tok[1]!r}", self.lineno, tok[2])
        return Rule(rid[1:], pattern, signer, constraints, self.lineno)

    def pattern(self):
        elems = []
        if self.peek()[1] == "/":
            self.take()
        while True:
            kind, val, col = self.peek()
            if kind == "string":
                if len(val) == 2:
                    raise ParseError("empty literal", self.lineno, col)
                elems.append(Literal(val[1:-1].encode("utf-8")))
            elif kind == "ruleref":
                elems.append(RuleRef(val[1:]))
            elif kind == "ident":
                elems.append(Wildcard() if val == "_" else Variable(val))
            elif kind == "rest":
                elems.append(Rest())
            else:
                raise ParseError(f"expected pattern element, found {val!r}", self.lineno, col)
            self.i += 1
            if self.peek()[1] != "/":
                return tuple(elems)
            self.take()

    def constraints(self):
        self.take("punct", "{")
        out = []
        while True:
            var = self.take("ident")[1]
            self.take("punct", ":")
            kind, val, col = self.peek()
            if kind == "string":
                out.append(EqLiteral(var, val[1:-1].encode("utf-8")))
            elif kind == "eqtype":
                out.append(VersionType(var))
            else:
                raise ParseError(f"expected constraint value, found {val!r}", self.lineno, col)
            self.i += 1
            if self.peek()[1] == ",":
                self.take()
                continue
            self.take("punct", "}")
            return tuple(out)


def parse_rules(text: str) -> list:
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        rules.append(_LineParser(_tokenize(line, lineno), lineno).rule())
    return rules


def parse_schema(text: str) -> TrustSchema:
    rules = parse_rules(text)
    if not rules:
        return TrustSchema.implicit()
    return TrustSchema(rules)
