"""
Certificates for email addresses
================================

Users prove they control an email address by echoing back a PIN sent to it.
The CA turns the address into a name with the domain's naming convention.
"""

from teb import Controller, Network, Node
from teb.errors import ProcedureFailed
from teb.protocols.testbed import TestbedCa, TestbedUser, testbed_run, testbed_schema
from teb.schema import email_convention

net = Network(seed=2)
ca_host = Controller(net, "controller", "/ndnfit", schema=testbed_schema(), name_conv=email_convention())
ca = TestbedCa(ca_host, allowed_domains=["example.com"])

alice = TestbedUser(Node(net, "alice"), "alice@example.com", "/ndnfit/CA")
session = testbed_run(net, ca, alice)
cert = session.certificates[0]
print("alice@example.com ->", cert.subject)
print("certificate:", cert.name)
for entry in session.log:
    print("  ", entry.procedure.value if entry.procedure else "--", entry.outcome, entry.detail)

# a user who keeps typing the wrong PIN never gets a certificate
guesses = iter(["123456", "654321", "000000"])
eve = TestbedUser(Node(net, "eve"), "eve@example.com", "/ndnfit/CA", lambda: next(guesses, ""))
try:
    testbed_run(net, ca, eve)
except ProcedureFailed as e:
    print("\neve:", e)
print("certificates issued:", len(ca_host.issued))
