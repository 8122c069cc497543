import json
import random

import pytest

from podupdate.access_policy import AttributeSet
from podupdate.errors import ProtocolError
from podupdate.ledger_sim import Ledger
from podupdate.oabs import oabs_verify, sign_with_policy
from podupdate.payload_crypto import HybridCiphertext
from podupdate.protocol_actors import (
    Device,
    Gateway,
    Trace,
    TransmissionNode,
    Vendor,
    run_delivery,
    update_id,
)

BINARY = bytes(range(256)) * 40
W = AttributeSet.from_labels(["model-x", "region-eu"])
POLICY = "model-x AND region-eu"


@pytest.fixture(scope="module")
def vendor_template():
    return Vendor.setup("vendor", n=6, l=32, rng=random.Random(5))


class Net:
    """Vendor, two registered nodes, one gateway, one funded ledger."""

    def __init__(self, template, seed=0, devices=("dev-0",), policy=POLICY, x=10):
        self.rng = random.Random(seed)
        self.vendor = Vendor(template.name, template.params, template.msk, template.keypair)
        self.nodes = [TransmissionNode.create(f"node-{i}", self.rng) for i in range(2)]
        for nd in self.nodes:
            nd.register(self.vendor)
        self.gateway = Gateway.create("gw", self.rng)
        self.devices = [self.vendor.provision(d, policy, self.rng) for d in devices]
        for dev in self.devices:
            self.gateway.register_device(dev)
        self.ledger = Ledger.genesis({self.vendor.PK: 1000})
        self.x = x
        self.cid = self.vendor.publish(self.ledger, BINARY, 5, len(devices), W, x, rng=self.rng)
        self.d_id = update_id(BINARY)
        self.trace = Trace()

    def deliver(self, node=0, device=0, adversary="honest"):
        return run_delivery(self.ledger, self.vendor, self.nodes[node], self.gateway,
                            self.devices[device], self.cid, self.d_id, self.trace, self.rng,
                            adversary)


def test_honest_delivery(vendor_template):
    net = Net(vendor_template)
    res = net.deliver()
    node, dev = net.nodes[0], net.devices[0]
    assert res.paid == 10 and res.delivered and res.aborted is None
    assert net.ledger.balance(node.PK) == 10
    assert dev.image == BINARY and dev.firmware == net.d_id
    session = next(iter(net.gateway.sessions.values()))
    assert session.extracted == node.daps.sk
    assert net.trace.steps() == ["query", "notification", "sign1", "forward", "sign2",
                                 "receive", "install"]
    assert net.ledger.conserved()


def test_update_id_is_sha256():
    assert update_id(b"abc").hex().startswith("ba7816bf")


def test_register_is_idempotent(vendor_template):
    net = Net(vendor_template)
    assert not net.nodes[0].register(net.vendor)
    assert len(net.vendor.registered) == 2
    assert not net.gateway.register_device(net.devices[0])


def test_unregistered_node_not_paid_device_not_served(vendor_template):
    net = Net(vendor_template)
    outsider = TransmissionNode.create("outsider", net.rng)
    net.nodes.append(outsider)
    res = net.deliver(node=2)
    assert res.paid == 0 and res.claim_reason == "unregistered" and not res.delivered


def test_query_integrity(vendor_template):
    net = Net(vendor_template)
    node = net.nodes[0]
    c, sigma = net.vendor.serve_query(node.pk_t, net.d_id, net.rng)
    body = bytearray(c.body)
    body[0] ^= 1
    tampered = HybridCiphertext(c.ephemeral, bytes(body), c.tag)
    with pytest.raises(ProtocolError) as e:
        node.accept_update(net.vendor.PK, net.d_id, tampered, sigma)
    assert e.value.reason == "integrity"
    with pytest.raises(ProtocolError) as e:
        node.accept_update(net.vendor.PK, b"\x00" * 32, c, sigma)
    assert e.value.reason == "integrity"
    assert node.accept_update(net.vendor.PK, net.d_id, c, sigma) == BINARY


def test_unknown_update_not_found(vendor_template):
    net = Net(vendor_template)
    with pytest.raises(ProtocolError) as e:
        net.nodes[0].query(net.vendor, b"\x42" * 32, net.rng)
    assert e.value.reason == "not-found"


def test_sessions_use_fresh_challenges(vendor_template):
    net = Net(vendor_template, devices=("dev-0", "dev-1"))
    m0 = net.gateway.notification(net.nodes[0].pk_t, net.d_id, net.cid, "dev-0", net.rng)
    m1 = net.gateway.notification(net.nodes[1].pk_t, net.d_id, net.cid, "dev-1", net.rng)
    assert m0 != m1 and len(m0) == 32


def test_bad_delta1_aborts_session(vendor_template):
    net = Net(vendor_template)
    node, other = net.nodes
    node.query(net.vendor, net.d_id, net.rng)
    other.query(net.vendor, net.d_id, net.rng)
    m = net.gateway.notification(node.pk_t, net.d_id, net.cid, "dev-0", net.rng)
    forged = other.sign1(net.d_id, m)  # right challenge, wrong key
    c, sigma, _ = node.fetched[net.d_id]
    with pytest.raises(ProtocolError) as e:
        net.gateway.sign1(node.pk_t, net.d_id, forged, (c, sigma))
    assert e.value.reason == "bad-delta1"
    assert not net.gateway.sessions and not net.devices[0].pending


def test_unknown_device_declined(vendor_template):
    net = Net(vendor_template)
    with pytest.raises(ProtocolError) as e:
        net.gateway.notification(net.nodes[0].pk_t, net.d_id, net.cid, "ghost", net.rng)
    assert e.value.reason == "declined"


def test_gamma_is_bound_to_node_key(vendor_template):
    net = Net(vendor_template)
    net.deliver()
    gamma = net.nodes[0].proofs[net.d_id]
    params = net.vendor.params
    assert oabs_verify(params, net.nodes[0].pk_t.to_bytes(), gamma)
    assert not oabs_verify(params, net.nodes[1].pk_t.to_bytes(), gamma)


def test_device_outside_policy_produces_no_gamma(vendor_template):
    net = Net(vendor_template, policy="model-y")
    res = net.deliver()
    assert res.aborted == "no-gamma" and res.paid == 0 and not res.delivered
    assert not net.nodes[0].proofs


def test_device_rejects_modified_bundle(vendor_template):
    net = Net(vendor_template)
    node = net.nodes[0]
    node.query(net.vendor, net.d_id, net.rng)
    m = net.gateway.notification(node.pk_t, net.d_id, net.cid, "dev-0", net.rng)
    c, sigma, _ = node.fetched[net.d_id]
    swapped = HybridCiphertext(c.ephemeral, c.body[::-1], c.tag)
    net.gateway.sign1(node.pk_t, net.d_id, node.sign1(net.d_id, m), (swapped, sigma))
    with pytest.raises(ProtocolError) as e:
        net.gateway.sign2(node.pk_t, net.d_id, W, net.rng)
    assert e.value.reason == "integrity"


def test_device_install_checks_key(vendor_template):
    net = Net(vendor_template)
    dev = net.devices[0]
    c, sigma = net.vendor.serve_query(net.nodes[0].pk_t, net.d_id, net.rng)
    dev.receive_bundle(net.d_id, c, sigma, net.nodes[0].pk_t)
    assert not dev.install(net.d_id, net.nodes[1].daps.sk)
    assert dev.install(net.d_id, net.nodes[0].daps.sk) and dev.image == BINARY


@pytest.mark.parametrize("adversary,paid,delivered,reason", [
    ("node-skips-delta2", 0, False, "proof-rejected"),
    ("device-withholds-gamma", 0, False, None),
    ("late-claim", 0, False, "expired"),
])
def test_adversarial_deliveries(vendor_template, adversary, paid, delivered, reason):
    net = Net(vendor_template)
    res = net.deliver(adversary=adversary)
    assert (res.paid, res.delivered, res.claim_reason) == (paid, delivered, reason)
    assert net.ledger.conserved()


def test_claims_and_log_do_not_name_devices(vendor_template):
    net = Net(vendor_template, devices=("dev-alpha", "dev-beta"))
    net.deliver(node=0, device=0)
    net.deliver(node=1, device=1)
    log = net.ledger.event_lines()
    assert "dev-alpha" not in log and "dev-beta" not in log
    claims = [json.loads(line) for line in log.splitlines() if '"claim"' in line]
    assert len(claims) == 2
    assert {tuple(sorted(c)) for c in claims} == {tuple(sorted(claims[0]))}
    for tx in net.ledger.tx_log:
        if tx.kind == "claim":
            assert b"dev-" not in tx.signing_bytes(tx.kind, tx.sender, tx.nonce, tx.payload)
    # both Gammas verify under the same public call: nothing in them names the device
    params = net.vendor.params
    for nd in net.nodes:
        assert oabs_verify(params, nd.pk_t.to_bytes(), nd.proofs[net.d_id])


def test_two_device_keys_indistinguishable_by_verification(vendor_template):
    rng = random.Random(3)
    v = vendor_template
    a = v.provision("a", "model-x AND region-eu", rng)
    b = v.provision("b", "(model-x AND region-eu) OR model-z", rng)
    sigs = [sign_with_policy(v.params, b"msg", d.dk, W, rng) for d in (a, b)]
    assert all(oabs_verify(v.params, b"msg", s) for s in sigs)
    assert isinstance(a, Device) and a.dk != b.dk
