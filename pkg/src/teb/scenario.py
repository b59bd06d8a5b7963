"""Declarative scenarios: set up a domain, bootstrap entities, exercise the TIB.

A scenario is a JSON document (see ``docs/scenarios.md``)::

    {
      "name": "ssp_smart_home",
      "seed": 1,
      "domain": "/home",
      "protocol": "ssp",
      "schema": {"implicit": true},
      "entities": [{"id": "plug", "device_id": "plug1"}, ...],
      "actions": [{"op": "produce", ...}, ...]
    }

:func:`run_scenario` returns a :class:`RunResult` holding the report
(a JSON-ready dict), the network transcript and the pass/fail verdict.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from . import crypto
from .core import Procedure, is_valid_ordering
from .domain import Controller, Node
from .errors import ProcedureFailed, SchemaError, TebError
from .names import Name
from .protocols import (
    DctController,
    DctDevice,
    PionAuthenticator,
    PionController,
    PionDevice,
    QrCode,
    SspController,
    SspDevice,
    TestbedCa,
    TestbedUser,
    ViberController,
    ViberDevice,
    dct_bundle_run,
    ndnviber_run,
    pion_run,
    ssp_run,
    testbed_run,
    testbed_schema,
)
from .protocols.common import ProtocolName
from .schema import (
    VERSEC_EXAMPLE,
    NameConv,
    TrustSchema,
    define_minimal_trust_zone,
    device_convention,
    email_convention,
    parse_schema,
    ssh_convention,
    validate_chain,
)
from .simnet import Network, TranscriptEvent
from .tib import AccessManager, Tib, ValidatedKeyCache

REPORT_VERSION = 1
PROTOCOL_NAMES = {p.value for p in ProtocolName}
ACTIONS = ("grant", "produce", "consume", "publish_schema", "fetch_schema")
# protocols whose controller side serves <domain>/CA; only one may run per domain
CA_PROTOCOLS = {"testbed", "ndnviber", "pion"}


class ScenarioError(TebError, ValueError):
    """The scenario document is malformed or references something undefined."""


@dataclass
class RunResult:
    report: dict
    net: Network
    passed: bool

    @property
    def transcript(self):
        return self.net.transcript


# -- loading and validation ------------------------------------------------------


def bundled_scenarios() -> list:
    return sorted(p.name[:-5] for p in resources.files("teb.scenarios").iterdir() if p.name.endswith(".json"))


def load_scenario(source) -> dict:
    """Read a scenario from a path or a bundled scenario name, then validate it."""
    path = Path(source)
    if path.exists():
        try:
            spec = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ScenarioError(f"cannot read {source}: {e}") from None
    elif str(source) in bundled_scenarios():
        spec = json.loads(resources.files("teb.scenarios").joinpath(f"{source}.json").read_text("utf-8"))
    else:
        raise ScenarioError(f"no scenario file or bundled scenario named {source!r}")
    validate_scenario(spec)
    return spec


def _need(cond, msg):
    if not cond:
        raise ScenarioError(msg)


def _entity_protocol(spec: dict, ent: dict) -> str:
    return ent.get("protocol", spec.get("protocol"))


def validate_scenario(spec) -> None:
    _need(isinstance(spec, dict), "scenario must be a JSON object")
    for key in ("name", "domain", "entities"):
        _need(key in spec, f"missing required field {key!r}")
    _need(isinstance(spec.get("seed", 0), int) and spec.get("seed", 0) >= 0, "seed must be a non-negative integer")
    _need(isinstance(spec["entities"], list) and spec["entities"], "entities must be a non-empty list")
    try:
        Name(spec["domain"])
    except (TebError, TypeError) as e:
        raise ScenarioError(f"bad domain: {e}") from None
    ids = [e.get("id") if isinstance(e, dict) else None for e in spec["entities"]]
    _need(all(isinstance(i, str) and i for i in ids), "every entity needs a string id")
    _need(len(set(ids)) == len(ids), "entity ids must be unique")
    controller_id = spec.get("controller", "controller")
    _need(controller_id not in ids, "an entity may not reuse the controller id")
    try:
        _schema_from(spec.get("schema", {"implicit": True}), Name(spec["domain"]))
    except (SchemaError, KeyError, ValueError) as e:
        raise ScenarioError(f"bad schema: {e}") from None
    protos = set()
    minted = {m.get("subject") for m in spec.get("mint", []) if isinstance(m, dict)}
    for m in spec.get("mint", []):
        _need(isinstance(m, dict) and "subject" in m, "mint entries need a subject")
        _need(m.get("issuer") is None or m["issuer"] in minted, f"mint issuer {m.get('issuer')} is not minted")
    for ent in spec["entities"]:
        proto = _entity_protocol(spec, ent)
        _need(proto in PROTOCOL_NAMES, f"entity {ent['id']}: unknown protocol {proto!r}")
        protos.add(proto)
        if "order" in ent:
            try:
                order = tuple(Procedure.parse(p) for p in ent["order"])
            except (KeyError, ValueError, TypeError):
                raise ScenarioError(f"entity {ent['id']}: bad procedure order {ent['order']}") from None
            _need(len(order) == 5 and len(set(order)) == 5,
                  f"entity {ent['id']}: order must list each procedure once")
        required = {
            "ssp": ("device_id",),
            "testbed": ("email",),
            "ndnviber": ("device_id",),
            "pion": ("device_id", "password"),
            "dct": ("identities",),
        }[proto]
        for key in required:
            _need(key in ent, f"entity {ent['id']}: protocol {proto} needs {key!r}")
        if proto == "pion":
            _need("pion" in spec and spec["pion"].get("authenticator"),
                  "pion entities need a top-level pion.authenticator")
            _need(spec["pion"]["authenticator"] not in ids, "the authenticator is not a bootstrapping entity")
        if proto == "dct":
            for subject in ent["identities"]:
                _need(subject in minted, f"entity {ent['id']}: identity {subject} is not minted")
    _need(len(protos & CA_PROTOCOLS) <= 1, "at most one CA-based protocol per domain")
    known_data = set()
    for i, act in enumerate(spec.get("actions", [])):
        _need(isinstance(act, dict) and act.get("op") in ACTIONS, f"action {i}: op must be one of {ACTIONS}")
        op = act["op"]
        if op in ("produce", "consume", "fetch_schema"):
            _need(act.get("entity") in ids, f"action {i}: unknown entity {act.get('entity')!r}")
        if op == "produce":
            _need("name" in act and "content" in act, f"action {i}: produce needs name and content")
            if "id" in act:
                known_data.add(act["id"])
        if op == "consume":
            _need(act.get("data") in known_data, f"action {i}: data {act.get('data')!r} was not produced earlier")
        if op == "grant":
            _need("prefix" in act, f"action {i}: grant needs a prefix")
            for c in act.get("consumers", []):
                _need(c in ids, f"action {i}: unknown consumer {c!r}")
        if op == "publish_schema":
            _need(isinstance(act.get("version"), int), f"action {i}: publish_schema needs an integer version")
            try:
                _schema_from(act.get("schema", {}), Name(spec["domain"]))
            except (SchemaError, KeyError, ValueError) as e:
                raise ScenarioError(f"action {i}: bad schema: {e}") from None


# -- building blocks -------------------------------------------------------------------


def _schema_from(src: dict, domain: Name) -> TrustSchema:
    if not isinstance(src, dict):
        raise ValueError("schema source must be an object")
    if src.get("implicit"):
        return TrustSchema.implicit()
    if "template" in src:
        if src["template"] != "minimal-trust-zone":
            raise ValueError(f"unknown template {src['template']!r}")
        return define_minimal_trust_zone(src.get("zone", str(domain)))
    if "builtin" in src:
        if src["builtin"] == "testbed":
            return testbed_schema(src.get("zone", domain.text(0)))
        if src["builtin"] == "versec":
            return parse_schema(VERSEC_EXAMPLE)
        raise ValueError(f"unknown builtin schema {src['builtin']!r}")
    if "text" in src:
        text = src["text"]
        return parse_schema("\n".join(text) if isinstance(text, list) else text)
    raise ValueError("schema source needs one of implicit, template, builtin, text")


def _name_conv(spec: dict) -> Optional[NameConv]:
    nc = spec.get("name_conv")
    if nc is None:
        return None
    if "kind" in nc:
        make = {"email": email_convention, "ssh": ssh_convention, "device": device_convention}[nc["kind"]]
        return make(nc.get("domain", Name(spec["domain"]).text(0)))
    return NameConv.from_dict(nc)


def _bytes(v, default: bytes) -> bytes:
    if v is None:
        return default
    return bytes.fromhex(v) if isinstance(v, str) else bytes(v)


class _Setup:
    """Controller-side objects, created on first use per protocol."""

    def __init__(self, spec: dict, net: Network, controller: Controller):
        self.spec = spec
        self.net = net
        self.controller = controller
        self._sides: dict = {}
        self.minted: dict = {}
        self.authenticator: Optional[PionAuthenticator] = None

    def side(self, proto: str):
        if proto not in self._sides:
            c = self.controller
            if proto == "ssp":
                self._sides[proto] = SspController(c)
            elif proto == "testbed":
                self._sides[proto] = TestbedCa(c, allowed_domains=self.spec.get("allowed_domains"))
            elif proto == "ndnviber":
                self._sides[proto] = ViberController(c)
            elif proto == "pion":
                side = PionController(c)
                aid = self.spec["pion"]["authenticator"]
                node = Node(self.net, aid)
                cert = c.issue(c.domain.append(aid), node.keypair.public)
                self.authenticator = PionAuthenticator(node, cert, node.keypair, c.anchor, c.schema,
                                                       side.ca.name_conv, c.domain.append("CA"))
                self._sides[proto] = side
            elif proto == "dct":
                side = DctController(c)
                for m in self.spec.get("mint", []):
                    issuer = None if m.get("issuer") is None else self.minted[m["issuer"]]
                    self.minted[m["subject"]] = side.mint(m["subject"], issuer, m.get("issuer_id"))
                self._sides[proto] = side
        return self._sides[proto]

    def intermediates(self, subject: str) -> list:
        """Minted issuers between ``subject`` and the anchor."""
        out = []
        by_name = {cert.name: cert for _, cert in self.minted.values()}
        _, cur = self.minted[subject]
        while cur.key_locator in by_name:
            cur = by_name[cur.key_locator]
            out.append(cur)
        return out


def _bootstrap(setup: _Setup, ent: dict, proto: str):
    """Run one entity's bootstrapping; returns ``(node, session)``."""
    net, c = setup.net, setup.controller
    side = setup.side(proto)
    order = tuple(Procedure.parse(p) for p in ent["order"]) if "order" in ent else None
    node = Node(net, ent["id"])
    if proto == "ssp":
        dev = SspDevice(node, ent["device_id"], ent.get("capability", "generic"))
        qr = None
        if "qr_symkey" in ent:
            qr = QrCode(dev.device_id, dev.qr.public, _bytes(ent["qr_symkey"], b""))
        return node, dev, lambda: ssp_run(net, side, dev, order, qr=qr)
    if proto == "testbed":
        pins = ent.get("pins")
        source = None
        if pins is not None:
            it = iter(pins)
            source = lambda: next(it, "")
        dev = TestbedUser(node, ent["email"], c.domain.append("CA"), source)
        return node, dev, lambda: testbed_run(net, side, dev, order)
    if proto == "ndnviber":
        net.set_proximity(c.id, node.id, ent.get("proximity", True))
        dev = ViberDevice(node, ent["device_id"])
        return node, dev, lambda: ndnviber_run(net, side, dev, order)
    if proto == "pion":
        password = ent["password"].encode()
        auth_pw = ent["auth_password"].encode() if "auth_password" in ent else None
        dev = PionDevice(node, ent["device_id"], password, auth_password=auth_pw)
        return node, dev, lambda: pion_run(net, side, setup.authenticator, dev, order)
    # dct
    key = crypto.SymKey(_bytes(ent.get("console_key"), crypto.digest(b"console/" + ent["id"].encode())))
    device_id = ent.get("device_id", ent["id"])
    dev = DctDevice(node, device_id, key)
    idents = [setup.minted[s] for s in ent["identities"]]
    inter = []
    for s in ent["identities"]:
        for cert in setup.intermediates(s):
            if cert not in inter:
                inter.append(cert)
    bundle = side.bundle(device_id, idents, inter, key, include_keys=ent.get("include_keys", True))
    install_key = crypto.SymKey(_bytes(ent["install_key"], b"")) if "install_key" in ent else key
    return node, dev, lambda: dct_bundle_run(net, side, dev, bundle, install_key, order)


def _error_info(e: Exception) -> dict:
    cause = e.cause if isinstance(e, ProcedureFailed) else e
    return {"type": type(cause).__name__, "message": str(cause),
            "procedure": e.procedure if isinstance(e, ProcedureFailed) else None}


class _Checker:
    def __init__(self):
        self.assertions: list = []

    def check(self, what: str, expected, actual):
        self.assertions.append({"what": what, "expected": expected, "actual": actual,
                                "passed": expected == actual})

    @property
    def passed(self) -> bool:
        return all(a["passed"] for a in self.assertions)


# -- running ---------------------------------------------------------------------------


def run_scenario(spec: dict, seed: Optional[int] = None) -> RunResult:
    """Run a validated scenario; ``seed`` overrides the scenario's own."""
    validate_scenario(spec)
    seed = spec.get("seed", 0) if seed is None else seed
    net = Network(seed=seed, cs_capacity=spec.get("cs_capacity", 64))
    domain = Name(spec["domain"])
    controller = Controller(net, spec.get("controller", "controller"), domain,
                            schema=_schema_from(spec.get("schema", {"implicit": True}), domain),
                            name_conv=_name_conv(spec))
    setup = _Setup(spec, net, controller)
    checker = _Checker()
    entities: dict = {}
    tibs: dict = {}
    default_cache = spec.get("cache")

    for ent in spec["entities"]:
        proto = _entity_protocol(spec, ent)
        node, dev, go = _bootstrap(setup, ent, proto)
        issued_before = len(controller.issued)
        record = {"protocol": proto, "session": None, "error": None}
        try:
            session = go()
        except (TebError, ValueError) as e:
            session = dev.session
            record["error"] = _error_info(e)
        if session is not None:
            record["session"] = session.to_dict()
        entities[ent["id"]] = record
        expect = ent.get("expect", {"completed": True})
        eid = ent["id"]
        if "error" in expect:
            checker.check(f"{eid}: bootstrapping error", expect["error"],
                          record["error"]["type"] if record["error"] else None)
            checker.check(f"{eid}: nothing issued before the failure", issued_before, len(controller.issued))
        if expect.get("completed", "error" not in expect):
            checker.check(f"{eid}: completed", True, bool(session is not None and session.completed))
        if session is not None and session.completed:
            checker.check(f"{eid}: valid procedure order", True, is_valid_ordering(session.order))
            ok = all(validate_chain(session.schema, session.anchor, session.chain_for(cert))
                     for cert in session.certificates)
            checker.check(f"{eid}: certificates validate against the anchor", True, ok)
            if "certificates" in expect:
                checker.check(f"{eid}: certificate count", expect["certificates"], len(session.certificates))
            cache_cfg = ent.get("cache", default_cache)
            cache = ValidatedKeyCache(cache_cfg["capacity"]) if cache_cfg else None
            tib = Tib.from_session(node, session, cache)
            if ent.get("serve_certificates", True):
                tib.serve_own_certificates()
            tibs[eid] = tib

    ctib = Tib.for_controller(controller)
    access = None
    produced: dict = {}
    action_records = []
    for i, act in enumerate(spec.get("actions", [])):
        op = act["op"]
        rec = {"index": i, "op": op, "ok": True}
        expect = act.get("expect", {})
        mark = net.transcript.mark()
        who = act.get("entity")
        try:
            if who is not None and who not in tibs:
                raise ScenarioError(f"{who} has no TIB (bootstrapping did not complete)")
            if op == "grant":
                consumers = [c.name for cid in act.get("consumers", []) if cid in tibs
                             for c in tibs[cid].keychain.certificates()]
                if access is None:
                    access = AccessManager(controller, [])
                access.grant(act["prefix"], consumers)
                rec["consumers"] = [str(n) for n in consumers]
            elif op == "produce":
                app, ck = tibs[who].produce(act["name"], act["content"].encode())
                produced[act.get("id", act["name"])] = app
                rec.update(name=str(app.name), ck=str(ck.name), signer=str(app.key_locator))
            elif op == "consume":
                name, content = tibs[who].consume(produced[act["data"]])
                rec.update(name=str(name), content=content.decode("utf-8", "replace"))
            elif op == "publish_schema":
                data = ctib.publish_schema(_schema_from(act["schema"], domain), act["version"])
                rec["name"] = str(data.name)
            elif op == "fetch_schema":
                schema = tibs[who].fetch_schema()
                rec.update(mode=schema.mode.value, version=tibs[who].schema_version)
        except (TebError, ValueError) as e:
            rec["ok"] = False
            rec["error"] = _error_info(e)
        window = net.transcript.since(mark)
        if who is not None:
            rec["interests"] = window.expressed(who)
            rec["certificate_fetches"] = window.certificate_fetches(who)
        label = f"action {i} ({op}{' ' + who if who else ''})"
        if "error" in expect:
            checker.check(f"{label}: error", expect["error"], rec.get("error", {}).get("type"))
        else:
            checker.check(f"{label}: succeeded", True, rec["ok"])
        for key in ("content", "certificate_fetches", "interests", "mode", "version", "signer"):
            if key in expect:
                checker.check(f"{label}: {key}", expect[key], rec.get(key))
        action_records.append(rec)

    cache_report = {}
    for eid, tib in tibs.items():
        if tib.cache is not None:
            cache_report[eid] = tib.cache.metrics()
            net.transcript.append(TranscriptEvent(net.step, "tib", "cache-metrics", eid, "",
                                                  json.dumps(cache_report[eid], sort_keys=True), 0))

    interest_counts = {}
    for eid in [controller.id] + [e["id"] for e in spec["entities"]]:
        interest_counts[eid] = {"expressed": net.transcript.expressed(eid), "received": net.received[eid]}

    report = {
        "report_version": REPORT_VERSION,
        "scenario": spec["name"],
        "seed": seed,
        "domain": str(domain),
        "anchor": str(controller.anchor.name),
        "passed": checker.passed,
        "entities": entities,
        "actions": action_records,
        "assertions": checker.assertions,
        "interests": interest_counts,
        "cache": cache_report,
        "issued": sorted(str(n) for n in controller.issued),
        "transcript_events": len(net.transcript),
    }
    return RunResult(report, net, checker.passed)


def write_outputs(result: RunResult, out_dir) -> tuple:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tpath, rpath = out / "transcript.jsonl", out / "report.json"
    result.transcript.write(tpath)
    rpath.write_text(json.dumps(result.report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return tpath, rpath
