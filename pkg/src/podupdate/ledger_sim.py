"""Deterministic single-chain ledger with the ProofOfDelivery contract.

There is no consensus here.  One sequencer applies transactions in submission
order, and ``height`` doubles as the epoch clock contracts compare deadlines
against.  Every account and contract balance is an integer; currency is only
minted in :meth:`Ledger.genesis`, so ``total_supply`` never moves afterwards.

Transactions are signed with the account (Schnorr) signature over
``encode_fields(kind, sender, nonce, payload)``.  A rejected transaction
leaves balances, contracts and nonces untouched; only the event log records
it.

Event log records (one JSON object per line, keys sorted)::

    {"amount": 10, "contract": "9f..", "epoch": 3, "kind": "claim",
     "reason": null, "sender": "a1..", "status": "accepted", "to": "a1.."}
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Union

from .access_policy import AttributeSet
from .daps import DapsSignature, daps_verify, session_address
from .errors import (
    ClaimRejected,
    DeploymentError,
    LedgerError,
    SignatureRejected,
    WithdrawRejected,
)
from .oabs import OabsSignature, PublicParams, oabs_verify
from .pairing_algebra import GroupElement, encode_fields
from .payload_crypto import LedgerKeypair, LedgerSignature, ledger_sign, ledger_verify

CONFIRMATION_DEPTH = 1


def _hex(b: bytes) -> str:
    return b.hex()


# -- transaction payloads -------------------------------------------------------------

@dataclass(frozen=True)
class PublishPayload:
    """Arguments of the ProofOfDelivery constructor."""

    limitation_time: int
    update_id: bytes
    devices: int
    attribute_set: AttributeSet
    public_keys: tuple[GroupElement, ...]
    incentive: int
    funds: int
    params: PublicParams

    kind = "publish"

    def encode(self) -> bytes:
        return encode_fields(
            self.limitation_time.to_bytes(8, "big"),
            self.update_id,
            self.devices.to_bytes(8, "big"),
            self.attribute_set.to_bytes(),
            encode_fields(*(pk.to_bytes() for pk in self.public_keys)),
            self.incentive.to_bytes(16, "big"),
            self.funds.to_bytes(16, "big"),
            self.params.fingerprint,
        )


@dataclass(frozen=True)
class ClaimPayload:
    """T_r: the proof of delivery submitted by a transmission node."""

    contract_id: str
    pk_t: GroupElement
    oabs_sig: OabsSignature
    daps_sig: DapsSignature

    kind = "claim"

    def encode(self) -> bytes:
        return encode_fields(self.contract_id.encode(), self.pk_t.to_bytes(),
                             self.oabs_sig.to_bytes(), self.daps_sig.to_bytes())


@dataclass(frozen=True)
class WithdrawPayload:
    contract_id: str

    kind = "withdraw"

    def encode(self) -> bytes:
        return self.contract_id.encode()


@dataclass(frozen=True)
class TransferPayload:
    to: GroupElement
    amount: int

    kind = "transfer"

    def __post_init__(self):
        if not 0 <= self.amount < 1 << 128:
            raise ValueError("transfer amount must fit an unsigned 128-bit field")

    def encode(self) -> bytes:
        return encode_fields(self.to.to_bytes(), self.amount.to_bytes(16, "big"))


Payload = Union[PublishPayload, ClaimPayload, WithdrawPayload, TransferPayload]


def claim_digest(contract_id: str, update_id: bytes, pk_t: GroupElement,
                 claimant: GroupElement, oabs_sig: OabsSignature) -> bytes:
    """The payload delta_2 signs: everything in T_r except delta_2 itself."""
    return hashlib.sha256(encode_fields(
        b"pod/claim", contract_id.encode(), update_id, pk_t.to_bytes(),
        claimant.to_bytes(), oabs_sig.to_bytes(),
    )).digest()


@dataclass(frozen=True)
class Transaction:
    kind: str
    sender: GroupElement
    nonce: int
    payload: Payload
    signature: LedgerSignature

    @staticmethod
    def signing_bytes(kind: str, sender: GroupElement, nonce: int, payload: Payload) -> bytes:
        return encode_fields(b"pod/tx", kind.encode(), sender.to_bytes(),
                             nonce.to_bytes(8, "big"), payload.encode())

    @classmethod
    def create(cls, keypair: LedgerKeypair, nonce: int, payload: Payload,
               rng: random.Random | None = None) -> Transaction:
        msg = cls.signing_bytes(payload.kind, keypair.PK, nonce, payload)
        return cls(payload.kind, keypair.PK, nonce, payload, ledger_sign(keypair.SK, msg, rng))

    def signature_valid(self) -> bool:
        if self.kind != self.payload.kind:
            return False
        msg = self.signing_bytes(self.kind, self.sender, self.nonce, self.payload)
        return ledger_verify(self.sender, msg, self.signature)

    def txid(self) -> str:
        msg = self.signing_bytes(self.kind, self.sender, self.nonce, self.payload)
        return hashlib.sha256(msg + self.signature.to_bytes()).hexdigest()


# -- contract -----------------------------------------------------------------------

@dataclass
class ContractState:
    """ProofOfDelivery storage plus its arithmetic, free of any crypto."""

    owner: bytes
    limitation_time: int
    update: bytes
    public_key_list: frozenset[bytes]
    attribute_set: AttributeSet
    counter: int
    incentive: int
    balance: int
    params: PublicParams | None = None
    devices: int = 0
    claimed: set[bytes] = field(default_factory=set)

    @classmethod
    def deploy(cls, owner: bytes, t: int, update: bytes, n: int, W: AttributeSet,
               L, x: int, funds: int, params: PublicParams | None = None) -> ContractState:
        if n < 1:
            raise DeploymentError("device count must be at least 1", "bad-device-count")
        if x < 1:
            raise DeploymentError("incentive must be positive", "bad-incentive")
        if funds < n * x:
            raise DeploymentError(f"funds {funds} < n*x = {n * x}")
        return cls(owner, t, update, frozenset(L), W, n - 1, x, funds, params, n)

    def check_claim(self, pk_t: bytes, now: int) -> None:
        if now > self.limitation_time:
            raise ClaimRejected(f"epoch {now} is past the deadline {self.limitation_time}", "expired")
        if pk_t not in self.public_key_list:
            raise ClaimRejected("transmission node is not registered", "unregistered")
        if pk_t in self.claimed:
            raise ClaimRejected("this node was already paid", "replay-rejected")
        if self.counter < 0:
            raise ClaimRejected("every device payment has been made", "exhausted")

    def pay(self, pk_t: bytes) -> int:
        """Apply one accepted claim; returns the amount leaving the contract."""
        amount = self.balance - self.incentive * self.counter
        self.balance -= amount
        self.counter -= 1
        self.claimed.add(pk_t)
        return amount

    def check_withdraw(self, caller: bytes, now: int) -> None:
        if now <= self.limitation_time:
            raise WithdrawRejected(f"epoch {now} is not past the deadline {self.limitation_time}",
                                   "premature")
        if caller != self.owner:
            raise WithdrawRejected("only the owner may withdraw", "unauthorized")

    def drain(self) -> int:
        amount, self.balance = self.balance, 0
        return amount

    def summary(self) -> dict:
        return {
            "owner": _hex(self.owner),
            "limitation_time": self.limitation_time,
            "update": _hex(self.update),
            "public_key_list": sorted(_hex(pk) for pk in self.public_key_list),
            "attribute_set": _hex(self.attribute_set.to_bytes()),
            "counter": self.counter,
            "incentive": self.incentive,
            "balance": self.balance,
            "devices": self.devices,
            "claimed": sorted(_hex(pk) for pk in self.claimed),
            "params": _hex(self.params.fingerprint) if self.params is not None else None,
        }


@dataclass(frozen=True)
class ClaimRecord:
    """An accepted claim, as a watcher of the chain sees it."""

    contract_id: str
    update_id: bytes
    pk_t: GroupElement
    claimant: GroupElement
    daps_sig: DapsSignature
    proof_payload: bytes
    epoch: int
    amount: int


@dataclass(frozen=True)
class Receipt:
    txid: str
    kind: str
    epoch: int
    amount: int = 0
    contract_id: str | None = None


# -- ledger -----------------------------------------------------------------------

class Ledger:
    """Accounts, contracts, nonces and an append-only event log."""

    def __init__(self):
        self.height = 0
        self.accounts: dict[bytes, int] = {}
        self.contracts: dict[str, ContractState] = {}
        self.nonces: dict[bytes, int] = {}
        self.tx_log: list[Transaction] = []
        self.events: list[dict] = []
        self._claims: dict[str, list[ClaimRecord]] = {}
        self._supply = 0

    @classmethod
    def genesis(cls, allocations: dict[GroupElement, int]) -> Ledger:
        led = cls()
        for pk, amount in allocations.items():
            if amount < 0:
                raise ValueError("genesis allocations must be non-negative")
            key = pk.to_bytes()
            led.accounts[key] = led.accounts.get(key, 0) + amount
            led._supply += amount
            led._log("genesis", key, "accepted", amount=amount, to=key)
        return led

    # queries

    def balance(self, pk: GroupElement | bytes) -> int:
        key = pk if isinstance(pk, bytes) else pk.to_bytes()
        return self.accounts.get(key, 0)

    def nonce(self, pk: GroupElement | bytes) -> int:
        key = pk if isinstance(pk, bytes) else pk.to_bytes()
        return self.nonces.get(key, 0)

    def contract(self, contract_id: str) -> ContractState:
        try:
            return self.contracts[contract_id]
        except KeyError:
            raise LedgerError(f"no contract {contract_id}", "unknown-contract") from None

    def claims_for(self, contract_id: str) -> list[ClaimRecord]:
        return list(self._claims.get(contract_id, ()))

    def confirmations(self, record: ClaimRecord) -> int:
        return self.height - record.epoch + 1

    @property
    def total_supply(self) -> int:
        return self._supply

    def circulating(self) -> int:
        return sum(self.accounts.values()) + sum(c.balance for c in self.contracts.values())

    def conserved(self) -> bool:
        return self.circulating() == self._supply

    # clock

    def advance_epoch(self, k: int = 1) -> int:
        if k < 0:
            raise ValueError("the clock only moves forward")
        self.height += k
        return self.height

    # transactions

    def submit(self, tx: Transaction) -> Receipt:
        """Apply ``tx`` now or raise a :class:`LedgerError` with state unchanged."""
        sender = tx.sender.to_bytes()
        contract_id = getattr(tx.payload, "contract_id", None)
        try:
            if not tx.signature_valid():
                raise SignatureRejected("ledger signature does not verify")
            if tx.nonce != self.nonce(sender):
                raise LedgerError(f"expected nonce {self.nonce(sender)}", "bad-nonce")
            handler = getattr(self, f"_apply_{tx.kind}")
            receipt = handler(tx, sender)
        except LedgerError as exc:
            self._log(tx.kind, sender, "rejected", reason=exc.reason, contract=contract_id)
            self.tx_log.append(tx)
            raise
        self.nonces[sender] = tx.nonce + 1
        self.tx_log.append(tx)
        return receipt

    def _apply_publish(self, tx: Transaction, sender: bytes) -> Receipt:
        p: PublishPayload = tx.payload
        if self.balance(sender) < p.funds:
            raise DeploymentError("vendor balance below the deposited funds", "insufficient-balance")
        W = p.attribute_set
        if p.params is not None:
            W.check_capacity(p.params.n)
        contract = ContractState.deploy(sender, p.limitation_time, p.update_id, p.devices, W,
                                        (pk.to_bytes() for pk in p.public_keys),
                                        p.incentive, p.funds, p.params)
        cid = tx.txid()[:16]
        self.accounts[sender] -= p.funds
        self.contracts[cid] = contract
        self._log("publish", sender, "accepted", amount=p.funds, contract=cid)
        return Receipt(tx.txid(), "publish", self.height, p.funds, cid)

    def _apply_claim(self, tx: Transaction, sender: bytes) -> Receipt:
        p: ClaimPayload = tx.payload
        c = self.contract(p.contract_id)
        pk_key = p.pk_t.to_bytes()
        c.check_claim(pk_key, self.height)
        if p.oabs_sig.W != c.attribute_set:
            raise ClaimRejected("signature attribute set differs from the contract's", "proof-rejected")
        if not oabs_verify(c.params, pk_key, p.oabs_sig):
            raise ClaimRejected("attribute signature does not verify", "proof-rejected")
        digest = claim_digest(p.contract_id, c.update, p.pk_t, tx.sender, p.oabs_sig)
        addr = session_address(p.pk_t, c.update)
        if not daps_verify(p.pk_t, addr, digest, p.daps_sig):
            raise ClaimRejected("delivery signature does not verify", "proof-rejected")
        amount = c.pay(pk_key)
        self.accounts[sender] = self.accounts.get(sender, 0) + amount
        self._claims.setdefault(p.contract_id, []).append(
            ClaimRecord(p.contract_id, c.update, p.pk_t, tx.sender, p.daps_sig, digest,
                        self.height, amount))
        self._log("claim", sender, "accepted", amount=amount, contract=p.contract_id, to=sender)
        return Receipt(tx.txid(), "claim", self.height, amount, p.contract_id)

    def _apply_withdraw(self, tx: Transaction, sender: bytes) -> Receipt:
        p: WithdrawPayload = tx.payload
        c = self.contract(p.contract_id)
        c.check_withdraw(sender, self.height)
        amount = c.drain()
        self.accounts[sender] = self.accounts.get(sender, 0) + amount
        self._log("withdraw", sender, "accepted", amount=amount, contract=p.contract_id, to=sender)
        return Receipt(tx.txid(), "withdraw", self.height, amount, p.contract_id)

    def _apply_transfer(self, tx: Transaction, sender: bytes) -> Receipt:
        p: TransferPayload = tx.payload
        if self.balance(sender) < p.amount:
            raise LedgerError("transfer exceeds balance", "insufficient-balance")
        to = p.to.to_bytes()
        self.accounts[sender] -= p.amount
        self.accounts[to] = self.accounts.get(to, 0) + p.amount
        self._log("transfer", sender, "accepted", amount=p.amount, to=to)
        return Receipt(tx.txid(), "transfer", self.height, p.amount)

    # export

    def _log(self, kind: str, sender: bytes, status: str, *, amount: int = 0,
             contract: str | None = None, to: bytes | None = None, reason: str | None = None):
        self.events.append({
            "epoch": self.height,
            "kind": kind,
            "sender": _hex(sender),
            "status": status,
            "amount": amount,
            "contract": contract,
            "to": _hex(to) if to is not None else None,
            "reason": reason,
        })

    def event_lines(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.events)

    def snapshot(self) -> dict:
        return {
            "height": self.height,
            "supply": self._supply,
            "accounts": {_hex(k): v for k, v in sorted(self.accounts.items())},
            "nonces": {_hex(k): v for k, v in sorted(self.nonces.items())},
            "contracts": {cid: c.summary() for cid, c in sorted(self.contracts.items())},
        }

    def state_digest(self) -> str:
        blob = json.dumps(self.snapshot(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()
