"""Hybrid ElGamal for update binaries, and the on-chain account signature.

Encryption (KEM/DEM):

    k random, E = g^k, shared = pk^k
    keys = SHAKE-256(E || shared)  ->  stream seed || mac key
    body = plaintext XOR SHAKE-256(stream seed)
    tag  = HMAC-SHA256(mac key, plaintext)

Decryption recomputes shared = E^sk; any wrong key or modified byte shows up
as a tag mismatch.

Ciphertext file layout (all integers big-endian)::

    offset  size  field
    0       4     magic  b"PODC"
    4       1     version (1)
    5       48    ephemeral point E (compressed G1)
    53      32    tag
    85      8     body length
    93      ...   body

Account signatures are Schnorr signatures over G1; the pair (e, s) is what
travels on the ledger.
"""

from __future__ import annotations

import hashlib
import hmac
import random
from dataclasses import dataclass

from .errors import DecryptionError, SerializationError
from .pairing_algebra import (
    G1_BYTES,
    Q,
    SCALAR_BYTES,
    GroupElement,
    default_rng,
    encode_fields,
    hash_to_scalar,
    random_scalar,
    scalar_from_bytes,
    scalar_to_bytes,
)

MAGIC = b"PODC"
VERSION = 1
TAG_BYTES = 32
_HEADER = len(MAGIC) + 1 + G1_BYTES + TAG_BYTES + 8


@dataclass(frozen=True)
class HybridCiphertext:
    ephemeral: GroupElement
    body: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        return (MAGIC + bytes([VERSION]) + self.ephemeral.to_bytes() + self.tag
                + len(self.body).to_bytes(8, "big") + self.body)

    @classmethod
    def from_bytes(cls, data: bytes) -> HybridCiphertext:
        if len(data) < _HEADER or data[:4] != MAGIC:
            raise SerializationError("not a PODC ciphertext")
        if data[4] != VERSION:
            raise SerializationError(f"unsupported ciphertext version {data[4]}")
        eph = GroupElement.from_bytes(data[5:5 + G1_BYTES])
        tag = data[5 + G1_BYTES:5 + G1_BYTES + TAG_BYTES]
        n = int.from_bytes(data[_HEADER - 8:_HEADER], "big")
        body = data[_HEADER:]
        if len(body) != n:
            raise SerializationError("body length does not match header")
        return cls(eph, body, tag)


def _derive(ephemeral: GroupElement, shared: GroupElement) -> tuple[bytes, bytes]:
    km = hashlib.shake_256(encode_fields(b"pod/kem", ephemeral.to_bytes(), shared.to_bytes())).digest(64)
    return km[:32], km[32:]


def _xor_stream(seed: bytes, data: bytes) -> bytes:
    if not data:
        return b""
    stream = hashlib.shake_256(seed).digest(len(data))
    n = int.from_bytes(data, "big") ^ int.from_bytes(stream, "big")
    return n.to_bytes(len(data), "big")


def _tag(mac_key: bytes, plaintext: bytes) -> bytes:
    return hmac.new(mac_key, plaintext, hashlib.sha256).digest()


def encrypt(pk: GroupElement, plaintext: bytes, rng: random.Random | None = None) -> HybridCiphertext:
    k = random_scalar(rng or default_rng())
    eph = GroupElement.generator() ** k
    seed, mac_key = _derive(eph, pk ** k)
    return HybridCiphertext(eph, _xor_stream(seed, plaintext), _tag(mac_key, plaintext))


def decrypt(sk: int, c: HybridCiphertext) -> bytes:
    seed, mac_key = _derive(c.ephemeral, c.ephemeral ** sk)
    plaintext = _xor_stream(seed, c.body)
    if not hmac.compare_digest(_tag(mac_key, plaintext), c.tag):
        raise DecryptionError("integrity tag mismatch")
    return plaintext


# -- account signatures ---------------------------------------------------------------

@dataclass(frozen=True)
class LedgerKeypair:
    SK: int
    PK: GroupElement


@dataclass(frozen=True)
class LedgerSignature:
    e: int
    s: int

    def to_bytes(self) -> bytes:
        return scalar_to_bytes(self.e) + scalar_to_bytes(self.s)

    @classmethod
    def from_bytes(cls, data: bytes) -> LedgerSignature:
        if len(data) != 2 * SCALAR_BYTES:
            raise SerializationError("ledger signature has the wrong length")
        return cls(scalar_from_bytes(data[:SCALAR_BYTES]), scalar_from_bytes(data[SCALAR_BYTES:]))


def ledger_keygen(rng: random.Random | None = None) -> LedgerKeypair:
    sk = random_scalar(rng or default_rng())
    return LedgerKeypair(sk, GroupElement.generator() ** sk)


def _ledger_challenge(R: GroupElement, PK: GroupElement, message: bytes) -> int:
    return hash_to_scalar(encode_fields(R.to_bytes(), PK.to_bytes(), message), b"ledger/sig")


def ledger_sign(SK: int, message: bytes, rng: random.Random | None = None) -> LedgerSignature:
    g = GroupElement.generator()
    k = random_scalar(rng or default_rng())
    e = _ledger_challenge(g ** k, g ** SK, message)
    return LedgerSignature(e, (k + e * SK) % Q)


def ledger_verify(PK: GroupElement, message: bytes, sig: LedgerSignature) -> bool:
    if sig is None or not (0 <= sig.e < Q and 0 <= sig.s < Q):
        return False
    R = GroupElement.generator() ** sig.s / PK ** sig.e
    return _ledger_challenge(R, PK, message) == sig.e
