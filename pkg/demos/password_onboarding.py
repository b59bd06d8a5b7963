"""
Onboarding a device with a password
===================================

A phone that already belongs to the domain acts as authenticator: it runs a
password-authenticated key exchange with the new bulb, vouches for it with a
temporary certificate, and the bulb trades that for a real one.
"""

from teb import Controller, Network, Node
from teb.errors import ProcedureFailed
from teb.protocols import PionAuthenticator, PionController, PionDevice, pion_run
from teb.schema import device_convention

net = Network(seed=4)
home = Controller(net, "controller", "/ndnfit", name_conv=device_convention("ndnfit"))
pion = PionController(home)

phone = Node(net, "phone")
phone_cert = home.issue("/ndnfit/phone", phone.keypair.public)
auth = PionAuthenticator(phone, phone_cert, phone.keypair, home.anchor, home.schema,
                         pion.ca.name_conv, "/ndnfit/CA")

bulb = PionDevice(Node(net, "bulb"), "bulb3", b"correct horse battery")
session = pion_run(net, pion, auth, bulb)
for entry in session.log:
    print(entry.procedure.value if entry.procedure else "  ", entry.outcome, entry.detail)
print("bulb certificate:", session.certificates[0].name)

# the phone was told a different password: key confirmation fails
lamp = PionDevice(Node(net, "lamp"), "lamp4", b"correct horse battery", auth_password=b"staple")
try:
    pion_run(net, pion, auth, lamp)
except ProcedureFailed as e:
    print("\nlamp:", e)
