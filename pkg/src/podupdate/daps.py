"""Double-authentication-preventing signatures in the discrete-log setting.

Schnorr-style signatures whose nonce is a deterministic function of the
secret key and the *address*.  Two signatures on one address share R, so
signing two different payloads there is a pair of linear equations in sk:

    z1 = k + c1 * sk,   z2 = k + c2 * sk   =>   sk = (z1 - z2) / (c1 - c2)

The keys live in G1 with the standard generator, the same group the hybrid
encryption in :mod:`podupdate.payload_crypto` uses, so an extracted DAPS key
is also a decryption key.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import AddressMismatchError, ExtractionError, NoConflictError, SerializationError
from .pairing_algebra import (
    G1_BYTES,
    Q,
    SCALAR_BYTES,
    GroupElement,
    default_rng,
    encode_fields,
    hash_to_scalar,
    inverse_mod,
    random_scalar,
    scalar_from_bytes,
    scalar_to_bytes,
)


@dataclass(frozen=True)
class DapsCrs:
    """Common reference string: the group description only."""

    generator: GroupElement = field(default_factory=GroupElement.generator)
    group: str = "BLS12-381/G1"


@dataclass(frozen=True)
class DapsKeypair:
    sk: int
    pk: GroupElement


@dataclass(frozen=True)
class DapsSignature:
    R: GroupElement
    z: int

    def to_bytes(self) -> bytes:
        return self.R.to_bytes() + scalar_to_bytes(self.z)

    @classmethod
    def from_bytes(cls, data: bytes) -> DapsSignature:
        if len(data) != G1_BYTES + SCALAR_BYTES:
            raise SerializationError("DAPS signature has the wrong length")
        return cls(GroupElement.from_bytes(data[:G1_BYTES]), scalar_from_bytes(data[G1_BYTES:]))


def session_address(pk_t: GroupElement, update_id: bytes) -> bytes:
    """Address binding one delivery session: pk_t || D_id."""
    return encode_fields(pk_t.to_bytes(), update_id)


def _challenge(R: GroupElement, addr: bytes, payload: bytes) -> int:
    return hash_to_scalar(encode_fields(R.to_bytes(), addr, payload), b"daps/challenge")


def daps_setup() -> DapsCrs:
    return DapsCrs()


def daps_kgen(crs: DapsCrs | None = None, rng: random.Random | None = None) -> DapsKeypair:
    crs = crs or DapsCrs()
    sk = random_scalar(rng or default_rng())
    return DapsKeypair(sk, crs.generator ** sk)


def daps_sign(sk: int, addr: bytes, payload: bytes, crs: DapsCrs | None = None) -> DapsSignature:
    if not addr:
        raise ValueError("DAPS address must be non-empty")
    crs = crs or DapsCrs()
    k = hash_to_scalar(encode_fields(scalar_to_bytes(sk), addr), b"daps/nonce")
    R = crs.generator ** k
    c = _challenge(R, addr, payload)
    return DapsSignature(R, (k + c * sk) % Q)


def daps_verify(pk: GroupElement, addr: bytes, payload: bytes, sig: DapsSignature,
                crs: DapsCrs | None = None) -> bool:
    """Accept iff g^z == R * pk^c with c = H(R || addr || payload)."""
    if not addr or sig is None:
        return False
    crs = crs or DapsCrs()
    c = _challenge(sig.R, addr, payload)
    return crs.generator ** sig.z == sig.R * pk ** c


def daps_extract(pk: GroupElement, addr: bytes,
                 first: tuple[bytes, DapsSignature],
                 second: tuple[bytes, DapsSignature],
                 crs: DapsCrs | None = None) -> int:
    """Recover sk from two valid signatures on different payloads under one address."""
    crs = crs or DapsCrs()
    (p1, s1), (p2, s2) = first, second
    if p1 == p2:
        raise NoConflictError("both signatures cover the same payload")
    if s1.R != s2.R:
        raise AddressMismatchError("signatures do not share a nonce commitment")
    if not (daps_verify(pk, addr, p1, s1, crs) and daps_verify(pk, addr, p2, s2, crs)):
        raise ExtractionError("a signature does not verify on this address")
    c1 = _challenge(s1.R, addr, p1)
    c2 = _challenge(s2.R, addr, p2)
    if c1 == c2:
        raise ExtractionError("challenge collision")
    sk = (s1.z - s2.z) * inverse_mod(c1 - c2) % Q
    if crs.generator ** sk != pk:
        raise ExtractionError("extracted scalar does not match the public key")
    return sk
