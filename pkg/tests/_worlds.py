"""Small domains shared by several test modules."""

from teb import crypto
from teb.domain import Controller, Node
from teb.protocols import DctController, DctDevice, SspController, SspDevice, dct_bundle_run, ssp_run
from teb.schema import parse_schema
from teb.simnet import Network
from teb.tib import Tib, ValidatedKeyCache

DEPTH5_SCHEMA = """\
#KEY: "KEY"/_/_/_
#site: "corp"
#root: #site/#KEY
#org: #site/org/#KEY <= #root
#dept: #site/org/dept/#KEY <= #org
#team: #site/org/dept/team/#KEY <= #dept
#user: #site/org/dept/team/user/#KEY <= #team
#data: #site/org/dept/team/user/"data"/... <= #user
#ck: #site/org/dept/team/user/"CK"/_ <= #user
#nac: #site/_/_/_/_/"NAC"/... <= #root
#schemaUpdate: #site/"SCHEMA"/_version & {_version: $eq_type("v=0")} <= #root
"""

TEAM = "/corp/o/d/t"


def console_key(who):
    return crypto.SymKey(crypto.digest(b"console/" + who.encode()))


def corp_world(people=("alice", "bob", "carol"), seed=9, cache=16, no_cache=()):
    """Controller plus one DCT-bootstrapped TIB per person, four levels below the anchor."""
    net = Network(seed=seed)
    c = Controller(net, "controller", "/corp", schema=parse_schema(DEPTH5_SCHEMA))
    dc = DctController(c)
    org = dc.mint("/corp/o")
    dept = dc.mint("/corp/o/d", issuer=org)
    team = dc.mint(TEAM, issuer=dept)
    tibs = {}
    for who in people:
        ident = dc.mint(f"{TEAM}/{who}", issuer=team)
        key = console_key(who)
        dev = DctDevice(Node(net, who), who, key)
        session = dct_bundle_run(net, dc, dev, dc.bundle(who, [ident], [team[1], dept[1], org[1]], key))
        cache_obj = None if (cache is None or who in no_cache) else ValidatedKeyCache(cache)
        tibs[who] = Tib.from_session(dev.node, session, cache_obj)
        tibs[who].serve_own_certificates()
    return net, c, tibs


def ssp_world(devices=("plug1", "lamp2"), seed=1, cache=32):
    net = Network(seed=seed)
    c = Controller(net, "controller", "/home")
    side = SspController(c)
    tibs = {}
    for dev_id in devices:
        dev = SspDevice(Node(net, dev_id), dev_id)
        session = ssp_run(net, side, dev)
        tibs[dev_id] = Tib.from_session(dev.node, session, ValidatedKeyCache(cache) if cache else None)
        tibs[dev_id].serve_own_certificates()
    return net, c, tibs
