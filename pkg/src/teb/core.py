"""The bootstrapping model: artifacts, procedure contracts and the executor.

Five procedures move a new entity into a trust domain::

    CONT_AUTH   : CAC                         -> POA
    ENEW_AUTH   : EAC                         -> POM
    ENEW_TRUST  : POA                         -> trust anchor, trust schema
    ENEW_NAMING : POM, NameConv               -> POP
    ENEW_CERT   : POP, CertC, anchor, schema  -> certificates

A protocol supplies one callable per procedure. The executor hands each
callable exactly its input slots as keyword arguments, writes the returned
outputs into write-once slots and refuses to run a procedure whose inputs are
not there yet. Any order that respects the dependencies is accepted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import DependencyUnmet, ProcedureFailed, SlotAlreadyFilled, TebError, ChainInvalid
from .names import Name
from .packets import Certificate
from .schema import TrustSchema, validate_chain


class Procedure(enum.Enum):
    CONT_AUTH = "CA"
    ENEW_AUTH = "EA"
    ENEW_TRUST = "ET"
    ENEW_NAMING = "EN"
    ENEW_CERT = "EC"

    @classmethod
    def parse(cls, s: str) -> "Procedure":
        try:
            return cls(s)
        except ValueError:
            return cls[s]


CA, EA, ET, EN, EC = Procedure

DEPENDENCY_EDGES = frozenset({(CA, ET), (EA, EN), (ET, EC), (EN, EC)})

INPUTS = {
    CA: ("cac",),
    EA: ("eac",),
    ET: ("poa",),
    EN: ("pom",),
    EC: ("pop", "certc", "anchor", "schema"),
}
# passed when present, never required
OPTIONAL_INPUTS = {EN: ("name_conv",)}
OUTPUTS = {
    CA: ("poa",),
    EA: ("pom",),
    ET: ("anchor", "schema"),
    EN: ("pop",),
    EC: ("certificates",),
}
# slots a procedure may fill on the side (e.g. CertC generated during trust setup)
SIDE_OUTPUTS = ("certc", "eac", "keys", "intermediates")

SLOTS = ("cac", "eac", "name_conv", "poa", "pom", "pop", "certc", "anchor", "schema",
         "certificates", "keys", "intermediates")


@dataclass(frozen=True)
class AuthContext:
    """CAC or EAC: pre-existing trust material obtained out of band."""
    channel_hint: str
    material: dict = field(default_factory=dict)

    def require(self, *keys):
        missing = [k for k in keys if k not in self.material]
        if missing:
            raise ValueError(f"authentication context lacks {', '.join(missing)}")


@dataclass(frozen=True)
class POA:
    cont_id: bytes
    enew_approval: bytes


@dataclass(frozen=True)
class POM:
    enew_id: bytes
    cont_approval: bytes


@dataclass(frozen=True)
class POP:
    names: tuple
    enew_id: bytes
    cont_approval: bytes

    def __post_init__(self):
        if not self.names:
            raise ValueError("POP carries at least one name")
        object.__setattr__(self, "names", tuple(Name(n) for n in self.names))


@dataclass(frozen=True)
class CertC:
    material: dict = field(default_factory=dict)


@dataclass
class LogEntry:
    procedure: Optional[Procedure]
    outcome: str
    detail: str = ""

    def to_dict(self):
        return {"procedure": self.procedure.value if self.procedure else None,
                "outcome": self.outcome, "detail": self.detail}


class BootstrapSession:
    """Write-once slots plus an audit log of one entity's bootstrapping."""

    def __init__(self, cac: Optional[AuthContext] = None, eac: Optional[AuthContext] = None,
                 name_conv=None, protocol: str = ""):
        self.slots = {s: None for s in SLOTS}
        self.slots["cac"] = cac
        self.slots["eac"] = eac
        self.slots["name_conv"] = name_conv
        self.protocol = protocol
        self.log: list = []
        self.completed = False
        self.decoupled = False

    def __getattr__(self, item):
        slots = self.__dict__.get("slots")
        if slots is not None and item in slots:
            return slots[item]
        raise AttributeError(item)

    def note(self, detail: str):
        self.log.append(LogEntry(None, "note", detail))

    @property
    def order(self) -> tuple:
        """Procedures that completed, in execution order."""
        return tuple(e.procedure for e in self.log if e.procedure is not None and e.outcome == "ok")

    def chain_for(self, cert: Certificate) -> list:
        """Follow key locators from ``cert`` through issued and intermediate certificates."""
        pool = {c.name: c for c in (self.slots["certificates"] or [])}
        pool.update({c.name: c for c in (self.slots["intermediates"] or [])})
        anchor = self.slots["anchor"]
        chain = [cert.data]
        cur = cert
        while cur.key_locator != anchor.name and cur.key_locator in pool and len(chain) < 32:
            cur = pool[cur.key_locator]
            chain.append(cur.data)
        return chain

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "completed": self.completed,
            "decoupled": self.decoupled,
            "order": [p.value for p in self.order],
            "log": [e.to_dict() for e in self.log],
            "certificates": [str(c.name) for c in (self.slots["certificates"] or [])],
        }


def _check_certificates(session: BootstrapSession, certs):
    if not certs:
        raise ChainInvalid(0, "no certificate issued")
    anchor: Certificate = session.slots["anchor"]
    schema: TrustSchema = session.slots["schema"]
    for cert in certs:
        report = validate_chain(schema, anchor, session.chain_for(cert))
        if not report:
            raise ChainInvalid(report.failed_link, f"{cert.name}: {report.reason}")


def run_procedure(session: BootstrapSession, proc: Procedure, impl: Callable) -> BootstrapSession:
    for slot in INPUTS[proc]:
        if session.slots[slot] is None:
            raise DependencyUnmet(slot)
    for slot in OUTPUTS[proc]:
        if session.slots[slot] is not None:
            raise SlotAlreadyFilled(slot)
    kwargs = {s: session.slots[s] for s in INPUTS[proc] + OPTIONAL_INPUTS.get(proc, ())}
    try:
        outputs = dict(impl(**kwargs) or {})
        for slot in OUTPUTS[proc]:
            if outputs.get(slot) is None:
                raise ValueError(f"{proc.name} produced no {slot}")
        for slot, value in outputs.items():
            if slot not in OUTPUTS[proc] and slot not in SIDE_OUTPUTS:
                raise ValueError(f"{proc.name} may not write {slot}")
            if slot not in OUTPUTS[proc] and session.slots[slot] is not None:
                raise SlotAlreadyFilled(slot)
        staged = dict(session.slots)
        staged.update(outputs)
        if proc is EC:
            probe = BootstrapSession()
            probe.slots = staged
            _check_certificates(probe, outputs["certificates"])
    except (TebError, ValueError) as e:
        if isinstance(e, SlotAlreadyFilled):
            raise
        session.log.append(LogEntry(proc, "failed", f"{type(e).__name__}: {e}"))
        raise ProcedureFailed(proc.name, e) from e
    session.slots = staged
    session.log.append(LogEntry(proc, "ok", ", ".join(sorted(outputs))))
    if proc is EC:
        session.completed = True
    return session


def valid_orderings() -> set:
    """Every total order of the five procedures consistent with the dataflow."""
    preds = {p: {a for a, b in DEPENDENCY_EDGES if b is p} for p in Procedure}
    out = set()

    def extend(prefix, remaining):
        if not remaining:
            out.add(tuple(prefix))
            return
        for p in sorted(remaining, key=lambda q: q.value):
            if preds[p] <= set(prefix):
                extend(prefix + [p], remaining - {p})

    extend([], set(Procedure))
    return out


def is_valid_ordering(order) -> bool:
    pos = {p: i for i, p in enumerate(order)}
    return (len(pos) == len(Procedure) == len(order)
            and all(pos[a] < pos[b] for a, b in DEPENDENCY_EDGES))


def decoupled_mode(session: BootstrapSession) -> BootstrapSession:
    """Mark a session whose entity is authenticated and named before it
    accepts the controller. Ordering rules are unchanged."""
    session.decoupled = True
    session.note("decoupled: entity authentication and naming may precede controller authentication")
    return session


@dataclass
class ProcedureSet:
    """One protocol's five procedure implementations and its preferred order."""
    cont_auth: Callable
    enew_auth: Callable
    enew_trust: Callable
    enew_naming: Callable
    enew_cert: Callable
    preferred_order: tuple = (CA, EA, ET, EN, EC)

    def impl(self, proc: Procedure) -> Callable:
        return {
            CA: self.cont_auth, EA: self.enew_auth, ET: self.enew_trust,
            EN: self.enew_naming, EC: self.enew_cert,
        }[proc]


def execute(session: BootstrapSession, procedures: ProcedureSet, order=None) -> BootstrapSession:
    for proc in order or procedures.preferred_order:
        run_procedure(session, proc, procedures.impl(proc))
    return session

