"""Outsourced attribute-based signatures.

Roles:

* the authority runs :func:`oabs_setup` and :func:`oabs_keygen`;
* a helper holding only the outsourcing key runs :func:`oabs_sign_out`;
* the signer finishes with :func:`oabs_sign` using the default-attribute
  components of its key;
* anyone runs :func:`oabs_verify` from the public parameters alone.

The master secret alpha is split as alpha1 + alpha2.  alpha1 is LSSS-shared
across the policy rows (outsourcing key), alpha2 lives in the default
attribute components that never leave the signer.

Group placement: g, V_k and u_j sit on both pairing sides and are dual
elements.  Key components and signature elements are only ever paired on the
left, so they are G1 elements.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

from .access_policy import (
    AccessStructure,
    AttributeSet,
    reconstruction_coefficients,
    vanishing_coefficients,
)
from .errors import CapacityError, KeyGenError, PolicyUnsatisfiedError, SerializationError
from .pairing_algebra import (
    HASH_BITS,
    Q,
    THETA,
    DualGroupElement,
    FixedBase,
    GroupElement,
    SubsetProduct,
    TargetElement,
    decode_fields,
    default_rng,
    encode_fields,
    fixed_multi_exp,
    hash_to_bits,
    multi_exp,
    multi_pair,
    pair,
    random_scalar,
    scalar_from_bytes,
    scalar_to_bytes,
)

SUPPORTED_SECURITY = 128


@dataclass(frozen=True)
class PublicParams:
    g: DualGroupElement
    Z: TargetElement
    V: tuple[DualGroupElement, ...]  # V_0 .. V_n
    u: tuple[DualGroupElement, ...]  # u_0 .. u_l
    theta: int = THETA

    q = Q

    @property
    def n(self) -> int:
        return len(self.V) - 1

    @property
    def l(self) -> int:
        return len(self.u) - 1

    @cached_property
    def _V1(self):
        return [FixedBase(v.g1()) for v in self.V]

    @cached_property
    def _V2(self):
        return [FixedBase(v.g2()) for v in self.V]

    def v_product_g1(self, exps: Sequence[int]) -> GroupElement:
        """prod_k V_k^{exps[k]} on the G1 side, k = 0..n."""
        return fixed_multi_exp(self._V1, exps)

    def v_product_g2(self, exps: Sequence[int]):
        return fixed_multi_exp(self._V2, exps)

    @cached_property
    def _u1_table(self):
        return SubsetProduct([x.g1() for x in self.u[1:]])

    @cached_property
    def _u2_table(self):
        return SubsetProduct([x.g2() for x in self.u[1:]])

    def message_base_g1(self, bits: Sequence[int]) -> GroupElement:
        """u_0 prod u_j^{m_j} on the G1 side."""
        return self.u[0].g1() * self._u1_table.select(bits)

    def message_base_g2(self, bits: Sequence[int]):
        return self.u[0].g2() * self._u2_table.select(bits)

    @cached_property
    def fingerprint(self) -> bytes:
        """SHA-256 of the canonical encoding; what contracts commit to."""
        return hashlib.sha256(self.to_bytes()).digest()

    def to_bytes(self) -> bytes:
        return encode_fields(
            self.g.to_bytes(),
            self.Z.to_bytes(),
            encode_fields(*(v.to_bytes() for v in self.V)),
            encode_fields(*(x.to_bytes() for x in self.u)),
            scalar_to_bytes(self.theta),
        )

    @classmethod
    def from_bytes(cls, data: bytes, check: bool = True) -> PublicParams:
        try:
            g_b, z_b, v_b, u_b, theta_b = decode_fields(data)
        except ValueError:
            raise SerializationError("public parameters need five fields") from None
        return cls(
            g=DualGroupElement.from_bytes(g_b, check),
            Z=TargetElement.from_bytes(z_b),
            V=tuple(DualGroupElement.from_bytes(b, check) for b in decode_fields(v_b)),
            u=tuple(DualGroupElement.from_bytes(b, check) for b in decode_fields(u_b)),
            theta=scalar_from_bytes(theta_b),
        )


@dataclass(frozen=True)
class MasterKey:
    alpha: int


@dataclass(frozen=True)
class KeyRow:
    """d = g^share V_0^r,  d' = g^r,  d''_x = (V_1^{-a^(x-1)} V_x)^r for x = 2..n."""

    attribute: int
    d: GroupElement
    d_prime: GroupElement
    d_dprime: tuple[GroupElement, ...]

    def to_bytes(self) -> bytes:
        return encode_fields(scalar_to_bytes(self.attribute), self.d.to_bytes(),
                             self.d_prime.to_bytes(),
                             encode_fields(*(x.to_bytes() for x in self.d_dprime)))

    @classmethod
    def from_bytes(cls, data: bytes) -> KeyRow:
        a, d, dp, ddp = decode_fields(data)
        return cls(scalar_from_bytes(a), GroupElement.from_bytes(d), GroupElement.from_bytes(dp),
                   tuple(GroupElement.from_bytes(x) for x in decode_fields(ddp)))


@dataclass(frozen=True)
class OutsourcingKey:
    policy: AccessStructure
    rows: tuple[KeyRow, ...]

    def to_bytes(self) -> bytes:
        return encode_fields(self.policy.to_bytes(), *(r.to_bytes() for r in self.rows))

    @classmethod
    def from_bytes(cls, data: bytes) -> OutsourcingKey:
        policy_b, *rows = decode_fields(data)
        return cls(AccessStructure.from_bytes(policy_b), tuple(KeyRow.from_bytes(r) for r in rows))


@dataclass(frozen=True)
class DeviceSigningKey:
    outsourcing: OutsourcingKey
    theta_row: KeyRow

    def to_bytes(self) -> bytes:
        return encode_fields(self.outsourcing.to_bytes(), self.theta_row.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> DeviceSigningKey:
        ok, th = decode_fields(data)
        return cls(OutsourcingKey.from_bytes(ok), KeyRow.from_bytes(th))


@dataclass(frozen=True)
class PartialSignature:
    sigma1p: GroupElement
    sigma2p: GroupElement
    W: AttributeSet


@dataclass(frozen=True)
class OabsSignature:
    sigma0: GroupElement
    sigma1: GroupElement
    sigma2: GroupElement
    W: AttributeSet

    def to_bytes(self) -> bytes:
        return encode_fields(self.sigma0.to_bytes(), self.sigma1.to_bytes(),
                             self.sigma2.to_bytes(), self.W.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> OabsSignature:
        try:
            s0, s1, s2, w = decode_fields(data)
        except ValueError:
            raise SerializationError("signature needs four fields") from None
        return cls(GroupElement.from_bytes(s0), GroupElement.from_bytes(s1),
                   GroupElement.from_bytes(s2), AttributeSet.from_bytes(w))


# -- helpers ------------------------------------------------------------------

def message_bits(params: PublicParams, message: bytes, sigma1: GroupElement,
                 W: AttributeSet) -> tuple[int, ...]:
    """(m_1..m_l) = H(message || sigma1 || W || theta), fields length-prefixed."""
    data = encode_fields(message, sigma1.to_bytes(), W.to_bytes(), scalar_to_bytes(params.theta))
    return hash_to_bits(data, params.l)


def _row(params: PublicParams, attribute: int, share: int, r: int) -> KeyRow:
    V = params._V1
    g = params.g.g1()
    d = g ** share * V[0].pow(r)
    d_prime = g ** r
    # d''_x = V_1^{-a^(x-1) r} V_x^r
    d_dprime = tuple(V[1].pow(-pow(attribute, x - 1, Q) * r) * V[x].pow(r)
                     for x in range(2, params.n + 1))
    return KeyRow(attribute, d, d_prime, d_dprime)


def _coefficients(params: PublicParams, W: AttributeSet) -> tuple[int, ...]:
    return vanishing_coefficients(W, params.theta, params.n)


# -- algorithms ---------------------------------------------------------------

def oabs_setup(n: int = 16, l: int = HASH_BITS, rng: random.Random | None = None,
               security: int = SUPPORTED_SECURITY) -> tuple[PublicParams, MasterKey]:
    """Generate public parameters for at most n - 2 signing attributes and l-bit message hashes."""
    if security > SUPPORTED_SECURITY:
        raise ValueError(f"BLS12-381 backend offers about {SUPPORTED_SECURITY}-bit security")
    if n < 3:
        raise ValueError("attribute capacity n must be at least 3")
    if l < 1:
        raise ValueError("message bit-length l must be positive")
    rng = rng or default_rng()
    g = DualGroupElement.generator()
    alpha = random_scalar(rng)
    # discrete logs of V and u relative to g are sampled and immediately dropped
    V = tuple(g ** random_scalar(rng) for _ in range(n + 1))
    u = tuple(g ** random_scalar(rng) for _ in range(l + 1))
    Z = pair(g ** alpha, g)
    return PublicParams(g=g, Z=Z, V=V, u=u), MasterKey(alpha)


def oabs_keygen(params: PublicParams, msk: MasterKey, A: AccessStructure,
                rng: random.Random | None = None) -> tuple[OutsourcingKey, DeviceSigningKey]:
    rng = rng or default_rng()
    if any(a % Q == params.theta for a in A.rho):
        raise KeyGenError("a policy row is labelled with the default attribute")
    alpha1 = random_scalar(rng)
    alpha2 = (msk.alpha - alpha1) % Q
    v = [alpha1] + [random_scalar(rng, nonzero=False) for _ in range(A.cols - 1)]
    rows = []
    for M_i, attr in zip(A.matrix, A.rho):
        share = sum(m * x for m, x in zip(M_i, v)) % Q
        rows.append(_row(params, attr, share, random_scalar(rng, nonzero=False)))
    ok = OutsourcingKey(A, tuple(rows))
    theta_row = _row(params, params.theta, alpha2, random_scalar(rng, nonzero=False))
    return ok, DeviceSigningKey(ok, theta_row)


def oabs_sign_out(params: PublicParams, ok: OutsourcingKey, W: AttributeSet,
                  rng: random.Random | None = None) -> PartialSignature:
    """Heavy half of signing, done by whoever holds the outsourcing key."""
    rng = rng or default_rng()
    w = reconstruction_coefficients(ok.policy, W)
    if w is None:
        raise PolicyUnsatisfiedError("attribute set does not satisfy the key's access structure")
    c = _coefficients(params, W)
    r = random_scalar(rng, nonzero=False)
    g = params.g.g1()

    sigma1p = multi_exp([g] + [ok.rows[i].d_prime for i in w], [r] + list(w.values()))

    # prod_i (d_i prod_x d''_{i,x}^{c_x})^{w_i} * (V_0 prod_k V_k^{c_k})^r
    bases: list[GroupElement] = []
    exps: list[int] = []
    for i, wi in w.items():
        row = ok.rows[i]
        bases.append(row.d)
        exps.append(wi)
        for x, ddp in enumerate(row.d_dprime, start=2):
            if c[x - 1]:
                bases.append(ddp)
                exps.append(c[x - 1] * wi)
    sigma2p = multi_exp(bases, exps) * params.v_product_g1([r] + [ck * r for ck in c])
    return PartialSignature(sigma1p, sigma2p, W)


def oabs_sign(params: PublicParams, message: bytes, dk: DeviceSigningKey,
              partial: PartialSignature, rng: random.Random | None = None) -> OabsSignature:
    """Signer-side completion: cheap, touches only the default-attribute key."""
    rng = rng or default_rng()
    W = partial.W
    th = dk.theta_row
    sigma1 = partial.sigma1p * th.d_prime
    m = message_bits(params, message, sigma1, W)
    s = random_scalar(rng, nonzero=False)
    sigma0 = params.g.g1() ** s
    c = _coefficients(params, W)

    u_m = params.message_base_g1(m)
    bases = [th.d, u_m] + [ddp for x, ddp in enumerate(th.d_dprime, start=2) if c[x - 1]]
    exps = [1, s] + [c[x - 1] for x in range(2, params.n + 1) if c[x - 1]]
    sigma2 = multi_exp(bases, exps) * partial.sigma2p
    return OabsSignature(sigma0, sigma1, sigma2, W)


def oabs_verify(params: PublicParams, message: bytes, sig: OabsSignature) -> bool:
    """Check Z == e(sigma2, g) / (e(sigma0, u_0 prod u_j^m_j) e(sigma1, V_0 prod V_k^c_k))."""
    try:
        c = _coefficients(params, sig.W)
    except CapacityError:
        return False
    m = message_bits(params, message, sig.sigma1, sig.W)
    u_m = params.message_base_g2(m)
    v_c = params.v_product_g2((1, *c))
    lhs = multi_pair([sig.sigma2, sig.sigma0.inverse(), sig.sigma1.inverse()],
                     [params.g, u_m, v_c])
    return lhs == params.Z


def verify_key_row(params: PublicParams, row: KeyRow) -> bool:
    """Pairing check e(d''_x, g) == e(d', V_1^{-a^(x-1)} V_x) for every x."""
    V = params.V
    for x, ddp in enumerate(row.d_dprime, start=2):
        rhs_base = multi_exp([V[1], V[x]], [-pow(row.attribute, x - 1, Q), 1])
        if multi_pair([ddp, row.d_prime.inverse()], [params.g, rhs_base]) != TargetElement.one():
            return False
    return True


def sign_with_policy(params: PublicParams, message: bytes, dk: DeviceSigningKey,
                     W: AttributeSet, rng: random.Random | None = None) -> OabsSignature:
    """Run both signing halves locally (tests and benchmarks)."""
    partial = oabs_sign_out(params, dk.outsourcing, W, rng)
    return oabs_sign(params, message, dk, partial, rng)


__all__: Sequence[str] = [
    "PublicParams", "MasterKey", "KeyRow", "OutsourcingKey", "DeviceSigningKey",
    "PartialSignature", "OabsSignature", "oabs_setup", "oabs_keygen", "oabs_sign_out",
    "oabs_sign", "oabs_verify", "verify_key_row", "message_bits", "sign_with_policy",
]
