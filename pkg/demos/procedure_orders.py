"""
Five procedures, six orders
===========================

Every bootstrapping protocol is split into the same five procedures. The data
they pass to each other leaves six legal orders; anything else stops at the
first procedure whose input is missing.
"""

import itertools

from teb import Procedure, valid_orderings
from teb.errors import DependencyUnmet
from teb.protocols import PROTOCOLS

for order in sorted(valid_orderings(), key=lambda o: [p.value for p in o]):
    print(" -> ".join(p.value for p in order))

print("\npreferred orders:")
for name, bundle in PROTOCOLS.items():
    print(f"  {name.value:16}", " ".join(p.value for p in bundle.preferred_order))

# run a real protocol in a forbidden order
from teb import Controller, Network, Node
from teb.protocols import ViberController, ViberDevice, ndnviber_run
from teb.schema import device_convention

ok = bad = 0
for perm in itertools.permutations(Procedure):
    net = Network(seed=3)
    iot = Controller(net, "controller", "/iot", name_conv=device_convention("iot"))
    side = ViberController(iot)
    cam = ViberDevice(Node(net, "cam"), "cam7")
    net.set_proximity("controller", "cam")
    try:
        ndnviber_run(net, side, cam, perm)
        ok += 1
    except DependencyUnmet as e:
        bad += 1
        if bad == 1:
            print("\n", " ".join(p.value for p in perm), "->", type(e).__name__, e)
print(f"\n{ok} of 120 orders completed, {bad} refused")
