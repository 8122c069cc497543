"""
One honest delivery, step by step
=================================

A vendor publishes an update with a bounty, a transmission node fetches it,
a gateway relays it to a device, the device's attribute signature becomes the
node's proof of delivery, and the node's on-chain claim leaks the key the
device needs to decrypt.
"""

import random

from podupdate import (
    AttributeSet,
    Gateway,
    Ledger,
    Trace,
    TransmissionNode,
    Vendor,
    run_delivery,
    update_id,
)

rng = random.Random(1)

# Vendor: public parameters for up to 14 signing attributes, one ledger account.
vendor = Vendor.setup("vendor", n=16, l=256, rng=rng)
device = vendor.provision("thermostat-17", "model-x AND (region-eu OR beta)", rng)

node = TransmissionNode.create("node-a", rng)
node.register(vendor)
gateway = Gateway.create("home-gw", rng)
gateway.register_device(device)

ledger = Ledger.genesis({vendor.PK: 100})
binary = rng.randbytes(4096)
W = AttributeSet.from_labels(["model-x", "region-eu"])

# Bounty of 10 for one device, claimable until epoch 5.
cid = vendor.publish(ledger, binary, 5, 1, W, 10, rng=rng)
print("contract", cid, ledger.contract(cid).summary())

trace = Trace()
result = run_delivery(ledger, vendor, node, gateway, device, cid, update_id(binary), trace, rng)
for step in trace.entries:
    print(f"  {step['step']:<14} {step['from']:>14} -> {step['to']}")

print("node paid:      ", result.paid)
print("device updated: ", device.image == binary)
print("ledger events:")
print(ledger.event_lines())
