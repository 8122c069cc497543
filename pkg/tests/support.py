"""Shared builders for ledger-level tests: a vendor, one device key, many nodes."""

import random
from dataclasses import dataclass

from podupdate.access_policy import AttributeSet, policy_to_lsss
from podupdate.daps import DapsKeypair, daps_kgen, daps_sign, session_address
from podupdate.ledger_sim import (
    ClaimPayload,
    Ledger,
    PublishPayload,
    Transaction,
    WithdrawPayload,
    claim_digest,
)
from podupdate.oabs import oabs_keygen, oabs_setup, sign_with_policy
from podupdate.payload_crypto import LedgerKeypair, ledger_keygen

UPDATE_ID = b"\x11" * 32


@dataclass
class Node:
    account: LedgerKeypair
    daps: DapsKeypair


class World:
    def __init__(self, seed=0, nodes=4, vendor_balance=1000, n=6, l=32, params=None):
        self.rng = random.Random(seed)
        self.params, msk = params or oabs_setup(n, l, self.rng)
        self.W = AttributeSet.from_labels(["a", "b"])
        _, self.dk = oabs_keygen(self.params, msk, policy_to_lsss("a AND b"), self.rng)
        self.vendor = ledger_keygen(self.rng)
        self.nodes = [Node(ledger_keygen(self.rng), daps_kgen(rng=self.rng)) for _ in range(nodes)]
        self.ledger = Ledger.genesis({self.vendor.PK: vendor_balance})

    def tx(self, who: LedgerKeypair, payload) -> Transaction:
        return Transaction.create(who, self.ledger.nonce(who.PK), payload, self.rng)

    def publish(self, t=5, n=3, x=10, funds=None, registered=None) -> str:
        registered = self.nodes if registered is None else registered
        payload = PublishPayload(t, UPDATE_ID, n, self.W, tuple(nd.daps.pk for nd in registered),
                                 x, n * x if funds is None else funds, self.params)
        return self.ledger.submit(self.tx(self.vendor, payload)).contract_id

    def gamma(self, node: Node, message: bytes | None = None, W=None):
        msg = node.daps.pk.to_bytes() if message is None else message
        return sign_with_policy(self.params, msg, self.dk, W or self.W, self.rng)

    def claim(self, cid: str, node: Node, gamma=None, delta2=None, sender=None) -> Transaction:
        sender = sender or node.account
        gamma = gamma or self.gamma(node)
        if delta2 is None:
            digest = claim_digest(cid, UPDATE_ID, node.daps.pk, sender.PK, gamma)
            delta2 = daps_sign(node.daps.sk, session_address(node.daps.pk, UPDATE_ID), digest)
        return self.tx(sender, ClaimPayload(cid, node.daps.pk, gamma, delta2))

    def withdraw(self, cid: str, who=None) -> Transaction:
        return self.tx(who or self.vendor, WithdrawPayload(cid))
