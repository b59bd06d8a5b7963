"""
Smart home onboarding with a QR code
====================================

Two devices join a home domain using the secret printed on their QR codes,
then swap encrypted readings. Later the controller publishes an explicit
trust schema and both devices pick it up.
"""

from teb import Controller, Network, Node, Tib, ValidatedKeyCache
from teb.protocols import SspController, SspDevice, ssp_run
from teb.schema import define_minimal_trust_zone
from teb.tib import AccessManager

net = Network(seed=1)
home = Controller(net, "controller", "/home")
ssp = SspController(home)

# bootstrapping: each device shows its QR code, the controller scans it
tibs = {}
for dev_id in ("plug1", "lamp2"):
    device = SspDevice(Node(net, dev_id), dev_id)
    session = ssp_run(net, ssp, device)
    print(dev_id, "->", [str(c.name) for c in session.certificates])
    print("   order:", " ".join(p.value for p in session.order))
    tibs[dev_id] = Tib.from_session(device.node, session, ValidatedKeyCache(32))
    tibs[dev_id].serve_own_certificates()

# the lamp may read what the plug publishes
lamp_certs = [c.name for c in tibs["lamp2"].keychain.certificates()]
AccessManager(home, [("/home/plug1", lamp_certs)])

app, ck = tibs["plug1"].produce("/home/plug1/power/1", b"42 W")
print("\nproduced", app.name, "with content key", ck.name)
print("lamp reads:", tibs["lamp2"].consume(app))

# until now every device key certified by the controller could sign anything
print("\nschema mode before:", tibs["lamp2"].schema.mode.value)
Tib.for_controller(home).publish_schema(define_minimal_trust_zone("/home"), version=1)
for tib in tibs.values():
    tib.fetch_schema()
print("schema mode after:", tibs["lamp2"].schema.mode.value, "version", tibs["lamp2"].schema_version)

app, _ = tibs["plug1"].produce("/home/plug1/power/2", b"40 W")
print("lamp reads:", tibs["lamp2"].consume(app))
