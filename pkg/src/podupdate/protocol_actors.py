"""Vendor, transmission node, gateway and device as message-driven actors.

Messages travel over in-memory calls in a fixed order; every hop is appended
to a :class:`Trace`.  The fair exchange works like this:

* the node signs the gateway's challenge ``m`` with DAPS on the session
  address ``pk_t || D_id`` (delta_1) and gets the encrypted update forwarded
  to the device;
* the device co-signs ``pk_t`` with its attribute key (the gateway does the
  heavy half) and the node submits that signature plus a second DAPS
  signature (delta_2) over the claim digest on the same address;
* once the claim is on chain the gateway holds two signatures on one
  address, extracts ``sk_t`` and hands it to the device, which decrypts.

So the node is paid exactly when the device can decrypt.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .access_policy import AccessStructure, AttributeSet, policy_to_lsss
from .daps import DapsKeypair, DapsSignature, daps_extract, daps_kgen, daps_sign, daps_verify, session_address
from .errors import DecryptionError, ExtractionError, LedgerError, PolicyUnsatisfiedError, ProtocolError
from .ledger_sim import (
    CONFIRMATION_DEPTH,
    ClaimPayload,
    Ledger,
    PublishPayload,
    Transaction,
    WithdrawPayload,
    claim_digest,
)
from .oabs import (
    DeviceSigningKey,
    MasterKey,
    OabsSignature,
    PartialSignature,
    PublicParams,
    oabs_keygen,
    oabs_setup,
    oabs_sign,
    oabs_sign_out,
)
from .pairing_algebra import GroupElement, encode_fields
from .payload_crypto import (
    HybridCiphertext,
    LedgerKeypair,
    LedgerSignature,
    decrypt,
    encrypt,
    ledger_keygen,
    ledger_sign,
    ledger_verify,
)


def update_id(binary: bytes) -> bytes:
    """D_id = SHA-256(D)."""
    return hashlib.sha256(binary).digest()


def _query_message(c: HybridCiphertext, d_id: bytes) -> bytes:
    return encode_fields(b"pod/query", c.to_bytes(), d_id)


class Trace:
    """Ordered actor-message log."""

    def __init__(self):
        self.entries: list[dict] = []

    def add(self, step: str, sender: str, receiver: str, **detail):
        self.entries.append({"step": step, "from": sender, "to": receiver, **detail})

    def steps(self) -> list[str]:
        return [e["step"] for e in self.entries]


# -- vendor ---------------------------------------------------------------------------

class Vendor:
    def __init__(self, name: str, params: PublicParams, msk: MasterKey, keypair: LedgerKeypair):
        self.name = name
        self.params = params
        self.msk = msk
        self.keypair = keypair
        self.registered: list[GroupElement] = []  # L
        self.device_registry: dict[str, AccessStructure] = {}
        self.updates: dict[bytes, bytes] = {}
        self.contracts: dict[bytes, str] = {}

    @classmethod
    def setup(cls, name: str = "vendor", n: int = 16, l: int = 256,
              rng: random.Random | None = None) -> Vendor:
        params, msk = oabs_setup(n, l, rng)
        return cls(name, params, msk, ledger_keygen(rng))

    @property
    def PK(self) -> GroupElement:
        return self.keypair.PK

    def register_node(self, pk_t: GroupElement) -> bool:
        """Add pk_t to L; returns False (and changes nothing) if already there."""
        if pk_t in self.registered:
            return False
        self.registered.append(pk_t)
        return True

    def provision(self, device_id: str, policy: str | AccessStructure,
                  rng: random.Random | None = None) -> Device:
        """Manufacture a device: derive and burn its attribute signing key."""
        A = policy if isinstance(policy, AccessStructure) else policy_to_lsss(policy)
        _, dk = oabs_keygen(self.params, self.msk, A, rng)
        self.device_registry[device_id] = A
        return Device(device_id, dk, self.PK, self.params)

    def publish(self, ledger: Ledger, binary: bytes, t: int, n: int, W: AttributeSet, x: int,
                funds: int | None = None, rng: random.Random | None = None) -> str:
        d_id = update_id(binary)
        self.updates[d_id] = binary
        payload = PublishPayload(t, d_id, n, W, tuple(self.registered), x,
                                 n * x if funds is None else funds, self.params)
        tx = Transaction.create(self.keypair, ledger.nonce(self.PK), payload, rng)
        try:
            receipt = ledger.submit(tx)
        except LedgerError as exc:
            raise ProtocolError(f"publish failed: {exc}", exc.reason) from exc
        self.contracts[d_id] = receipt.contract_id
        return receipt.contract_id

    def serve_query(self, pk_t: GroupElement, d_id: bytes,
                    rng: random.Random | None = None) -> tuple[HybridCiphertext, LedgerSignature]:
        if d_id not in self.updates:
            raise ProtocolError("unknown update", "not-found")
        c = encrypt(pk_t, self.updates[d_id], rng)
        return c, ledger_sign(self.keypair.SK, _query_message(c, d_id), rng)

    def withdraw(self, ledger: Ledger, contract_id: str, rng: random.Random | None = None) -> int:
        tx = Transaction.create(self.keypair, ledger.nonce(self.PK), WithdrawPayload(contract_id), rng)
        return ledger.submit(tx).amount


# -- transmission node -----------------------------------------------------------------

class TransmissionNode:
    def __init__(self, name: str, keypair: LedgerKeypair, daps: DapsKeypair):
        self.name = name
        self.keypair = keypair
        self.daps = daps
        self.fetched: dict[bytes, tuple[HybridCiphertext, LedgerSignature, bytes]] = {}
        self.signed: dict[bytes, dict[bytes, DapsSignature]] = {}  # addr -> payload -> sig
        self.proofs: dict[bytes, OabsSignature] = {}  # D_id -> Gamma

    @classmethod
    def create(cls, name: str, rng: random.Random | None = None) -> TransmissionNode:
        return cls(name, ledger_keygen(rng), daps_kgen(rng=rng))

    @property
    def PK(self) -> GroupElement:
        return self.keypair.PK

    @property
    def pk_t(self) -> GroupElement:
        return self.daps.pk

    def register(self, vendor: Vendor) -> bool:
        return vendor.register_node(self.pk_t)

    def query(self, vendor: Vendor, d_id: bytes, rng: random.Random | None = None) -> bytes:
        c, sigma = vendor.serve_query(self.pk_t, d_id, rng)
        return self.accept_update(vendor.PK, d_id, c, sigma)

    def accept_update(self, vendor_pk: GroupElement, d_id: bytes,
                      c: HybridCiphertext, sigma: LedgerSignature) -> bytes:
        if not ledger_verify(vendor_pk, _query_message(c, d_id), sigma):
            raise ProtocolError("vendor signature over (C, D_id) rejected", "integrity")
        binary = decrypt(self.daps.sk, c)
        if update_id(binary) != d_id:
            raise ProtocolError("decrypted update does not hash to D_id", "integrity")
        self.fetched[d_id] = (c, sigma, binary)
        return binary

    def _daps(self, addr: bytes, payload: bytes) -> DapsSignature:
        sigs = self.signed.setdefault(addr, {})
        if payload not in sigs:
            sigs[payload] = daps_sign(self.daps.sk, addr, payload)
        return sigs[payload]

    def sign1(self, d_id: bytes, m: bytes) -> DapsSignature:
        if d_id not in self.fetched:
            raise ProtocolError("node does not hold this update", "not-found")
        return self._daps(session_address(self.pk_t, d_id), m)

    def receive_proof(self, d_id: bytes, gamma: OabsSignature):
        self.proofs[d_id] = gamma

    def build_claim(self, ledger: Ledger, contract_id: str, d_id: bytes,
                    skip_second_signature: bool = False,
                    rng: random.Random | None = None) -> Transaction:
        gamma = self.proofs.get(d_id)
        if gamma is None:
            raise ProtocolError("no attribute signature to claim with", "no-proof")
        addr = session_address(self.pk_t, d_id)
        if skip_second_signature:
            # reuse delta_1 instead of committing to the claim
            delta2 = next(iter(self.signed[addr].values()))
        else:
            digest = claim_digest(contract_id, d_id, self.pk_t, self.PK, gamma)
            delta2 = self._daps(addr, digest)
        payload = ClaimPayload(contract_id, self.pk_t, gamma, delta2)
        return Transaction.create(self.keypair, ledger.nonce(self.PK), payload, rng)


# -- gateway --------------------------------------------------------------------------

@dataclass
class Session:
    device_id: str
    pk_t: GroupElement
    d_id: bytes
    contract_id: str
    m: bytes
    delta1: DapsSignature | None = None
    forwarded: bool = False
    extracted: int | None = None


class Gateway:
    def __init__(self, name: str, keypair: LedgerKeypair):
        self.name = name
        self.keypair = keypair
        self.devices: dict[str, Device] = {}  # L'
        self.outsourcing_keys: dict[str, object] = {}
        self.sessions: dict[bytes, Session] = {}  # keyed by address

    @classmethod
    def create(cls, name: str, rng: random.Random | None = None) -> Gateway:
        return cls(name, ledger_keygen(rng))

    def register_device(self, device: Device) -> bool:
        if device.device_id in self.devices:
            return False
        self.devices[device.device_id] = device
        return True

    def notification(self, pk_t: GroupElement, d_id: bytes, contract_id: str, device_id: str,
                     rng: random.Random) -> bytes:
        if device_id not in self.devices:
            raise ProtocolError(f"no registered device {device_id}", "declined")
        m = rng.randbytes(32)
        self.sessions[session_address(pk_t, d_id)] = Session(device_id, pk_t, d_id, contract_id, m)
        return m

    def sign1(self, pk_t: GroupElement, d_id: bytes, delta1: DapsSignature,
              bundle: tuple[HybridCiphertext, LedgerSignature]):
        addr = session_address(pk_t, d_id)
        s = self.sessions.get(addr)
        if s is None:
            raise ProtocolError("no open session", "no-session")
        if not daps_verify(pk_t, addr, s.m, delta1):
            del self.sessions[addr]
            raise ProtocolError("delta_1 rejected, session aborted", "bad-delta1")
        s.delta1 = delta1
        c, sigma = bundle
        self.devices[s.device_id].receive_bundle(d_id, c, sigma, pk_t)
        s.forwarded = True

    def sign2(self, pk_t: GroupElement, d_id: bytes, W: AttributeSet,
              rng: random.Random | None = None) -> OabsSignature | None:
        """Run Sign_out for the device and return Gamma (None if the device withholds)."""
        s = self.sessions[session_address(pk_t, d_id)]
        device = self.devices[s.device_id]
        ok = device.hand_over_outsourcing_key(d_id)
        if ok is None:
            return None
        self.outsourcing_keys[s.device_id] = ok
        partial = oabs_sign_out(device.params, ok, W, rng)
        return device.complete_signature(d_id, partial, rng)

    def watch(self, ledger: Ledger) -> list[str]:
        """Extract sk_t for every session whose claim is on chain; returns device ids served."""
        served = []
        for addr, s in self.sessions.items():
            if s.extracted is not None or s.delta1 is None:
                continue
            for rec in ledger.claims_for(s.contract_id):
                if rec.pk_t != s.pk_t or ledger.confirmations(rec) < CONFIRMATION_DEPTH:
                    continue
                try:
                    sk = daps_extract(s.pk_t, addr, (s.m, s.delta1), (rec.proof_payload, rec.daps_sig))
                except ExtractionError:
                    continue
                s.extracted = sk
                self.devices[s.device_id].install(s.d_id, sk)
                served.append(s.device_id)
                break
        return served


# -- device ---------------------------------------------------------------------------

class Device:
    def __init__(self, device_id: str, dk: DeviceSigningKey, vendor_pk: GroupElement,
                 params: PublicParams):
        self.device_id = device_id
        self.dk = dk
        self.vendor_pk = vendor_pk
        self.params = params
        self.firmware: bytes | None = None  # digest of the installed update
        self.image: bytes | None = None
        self.pending: dict[bytes, tuple[HybridCiphertext, LedgerSignature, GroupElement]] = {}
        self.withhold = False

    def receive_bundle(self, d_id: bytes, c: HybridCiphertext, sigma: LedgerSignature,
                       pk_t: GroupElement):
        self.pending[d_id] = (c, sigma, pk_t)

    def _bundle_ok(self, d_id: bytes) -> bool:
        c, sigma, _ = self.pending[d_id]
        return ledger_verify(self.vendor_pk, _query_message(c, d_id), sigma)

    def hand_over_outsourcing_key(self, d_id: bytes):
        if self.withhold or d_id not in self.pending:
            return None
        if not self._bundle_ok(d_id):
            raise ProtocolError("vendor signature over (C, D_id) rejected", "integrity")
        return self.dk.outsourcing

    def complete_signature(self, d_id: bytes, partial: PartialSignature,
                           rng: random.Random | None = None) -> OabsSignature:
        _, _, pk_t = self.pending[d_id]
        return oabs_sign(self.params, pk_t.to_bytes(), self.dk, partial, rng)

    def install(self, d_id: bytes, sk_t: int) -> bool:
        c, _, pk_t = self.pending[d_id]
        if GroupElement.generator() ** sk_t != pk_t:
            return False
        try:
            binary = decrypt(sk_t, c)
        except DecryptionError:
            return False
        if update_id(binary) != d_id:
            return False
        self.firmware = d_id
        self.image = binary
        del self.pending[d_id]
        return True


# -- one delivery, end to end -----------------------------------------------------------

ADVERSARIES = ("honest", "node-skips-delta2", "device-withholds-gamma",
               "unregistered-node", "late-claim")


@dataclass
class DeliveryResult:
    device_id: str
    node: str
    paid: int = 0
    delivered: bool = False
    aborted: str | None = None
    claim_reason: str | None = None


def run_delivery(ledger: Ledger, vendor: Vendor, node: TransmissionNode, gateway: Gateway,
                 device: Device, contract_id: str, d_id: bytes, trace: Trace,
                 rng: random.Random, adversary: str = "honest") -> DeliveryResult:
    """Query, Notification, Sign1, Sign2 and Receive for one node/device pair."""
    res = DeliveryResult(device.device_id, node.name)
    W = ledger.contract(contract_id).attribute_set

    node.query(vendor, d_id, rng)
    trace.add("query", node.name, vendor.name)

    m = gateway.notification(node.pk_t, d_id, contract_id, device.device_id, rng)
    trace.add("notification", gateway.name, node.name)

    delta1 = node.sign1(d_id, m)
    c, sigma, _ = node.fetched[d_id]
    gateway.sign1(node.pk_t, d_id, delta1, (c, sigma))
    trace.add("sign1", node.name, gateway.name)
    trace.add("forward", gateway.name, device.device_id)

    device.withhold = adversary == "device-withholds-gamma"
    try:
        gamma = gateway.sign2(node.pk_t, d_id, W, rng)
    except PolicyUnsatisfiedError:
        gamma = None
    if gamma is None:
        res.aborted = "no-gamma"
        trace.add("sign2-withheld", device.device_id, gateway.name)
        return res
    node.receive_proof(d_id, gamma)
    trace.add("sign2", gateway.name, node.name)

    if adversary == "late-claim":
        c_state = ledger.contract(contract_id)
        ledger.advance_epoch(max(0, c_state.limitation_time + 1 - ledger.height))
    tx = node.build_claim(ledger, contract_id, d_id,
                          skip_second_signature=adversary == "node-skips-delta2", rng=rng)
    before = ledger.balance(node.PK)
    try:
        ledger.submit(tx)
        trace.add("receive", node.name, "ledger", status="accepted")
    except LedgerError as exc:
        res.claim_reason = exc.reason
        trace.add("receive", node.name, "ledger", status="rejected", reason=exc.reason)
    res.paid = ledger.balance(node.PK) - before

    gateway.watch(ledger)
    res.delivered = device.firmware == d_id
    if res.delivered:
        trace.add("install", gateway.name, device.device_id)
    return res
