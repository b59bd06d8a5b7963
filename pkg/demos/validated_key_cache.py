"""
Certificate fetches with and without a validated key cache
==========================================================

A producer sits four certificates below the trust anchor. The first time a
consumer reads its data the whole chain has to be fetched; after that a
consumer with a validated key cache needs only the new content key.
"""

from teb import Controller, Network, Node, Tib, ValidatedKeyCache, parse_schema
from teb.protocols import DctController, DctDevice, dct_bundle_run
from teb.tib import AccessManager
from teb import crypto

SCHEMA = """
#KEY: "KEY"/_/_/_
#root: "corp"/#KEY
#org: "corp"/org/#KEY <= #root
#dept: "corp"/org/dept/#KEY <= #org
#team: "corp"/org/dept/team/#KEY <= #dept
#user: "corp"/org/dept/team/user/#KEY <= #team
#data: "corp"/org/dept/team/user/"data"/... <= #user
#ck: "corp"/org/dept/team/user/"CK"/_ <= #user
#nac: "corp"/_/_/_/_/"NAC"/... <= #root
"""

net = Network(seed=6)
corp = Controller(net, "controller", "/corp", schema=parse_schema(SCHEMA))
dct = DctController(corp)
org = dct.mint("/corp/eng")
dept = dct.mint("/corp/eng/net", issuer=org)
team = dct.mint("/corp/eng/net/edge", issuer=dept)

tibs = {}
for who, cache in (("alice", None), ("bob", ValidatedKeyCache(16)), ("carol", None)):
    ident = dct.mint(f"/corp/eng/net/edge/{who}", issuer=team)
    key = crypto.SymKey(crypto.digest(who.encode()))
    dev = DctDevice(Node(net, who), who, key)
    session = dct_bundle_run(net, dct, dev, dct.bundle(who, [ident], [team[1], dept[1], org[1]], key))
    tibs[who] = Tib.from_session(dev.node, session, cache)
    tibs[who].serve_own_certificates()

readers = [c.name for who in ("bob", "carol") for c in tibs[who].keychain.certificates()]
AccessManager(corp, [("/corp/eng/net/edge/alice", readers)])

print("consumer  read  cert-fetches  interests")
for i in range(3):
    app, _ = tibs["alice"].produce(f"/corp/eng/net/edge/alice/data/{i}", b"sample %d" % i)
    for who in ("bob", "carol"):
        mark = net.transcript.mark()
        tibs[who].consume(app)
        window = net.transcript.since(mark)
        print(f"{who:9} {i:4}  {window.certificate_fetches(who):12}  {window.expressed(who):9}")
    net.content_store.clear()   # keep the forwarder cache out of the picture

print("\nbob's cache:", tibs["bob"].cache.metrics())
