"""Bilinear group arithmetic over BLS12-381, hashing and canonical encodings.

Everything is written multiplicatively: ``a * b`` is the group operation,
``a ** k`` exponentiation by a scalar and ``a / b`` multiplication by the
inverse.  Scalars are plain ``int`` values reduced modulo :data:`Q`.

The protocol equations assume a symmetric pairing ``e: G x G -> GT``.  On an
asymmetric curve an element that has to sit on *both* sides of a pairing is
carried as a :class:`DualGroupElement`, i.e. the same discrete log in G1 and
in G2.  Elements that only ever appear on the left are plain
:class:`GroupElement` values (G1).

Byte formats
------------
* scalar: 32 bytes, big-endian, value < Q
* GroupElement: 48-byte compressed G1 point
* DualGroupElement: 48-byte compressed G1 point || 96-byte compressed G2 point
* TargetElement: 576 bytes, twelve 48-byte little-endian Fq limbs
* composites: :func:`encode_fields`, each field prefixed by a 4-byte
  big-endian length
"""

from __future__ import annotations

import hashlib
import random
import secrets
from typing import Iterable, Sequence

from py_arkworks_bls12381 import GT, G1Point, G2Point, Scalar

from . import _fq12
from .errors import SerializationError

Q = 0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001
SCALAR_BYTES = (Q.bit_length() + 7) // 8
G1_BYTES = 48
G2_BYTES = 96
GT_BYTES = _fq12.FQ12_BYTES
HASH_BITS = 256


# -- randomness -----------------------------------------------------------------

def default_rng() -> random.Random:
    return secrets.SystemRandom()


def random_scalar(rng: random.Random | None = None, nonzero: bool = True) -> int:
    rng = rng or default_rng()
    return rng.randrange(1 if nonzero else 0, Q)


# -- scalars ----------------------------------------------------------------------

def scalar_to_bytes(x: int) -> bytes:
    return (x % Q).to_bytes(SCALAR_BYTES, "big")


def scalar_from_bytes(data: bytes) -> int:
    if len(data) != SCALAR_BYTES:
        raise SerializationError(f"scalar must be {SCALAR_BYTES} bytes")
    x = int.from_bytes(data, "big")
    if x >= Q:
        raise SerializationError("scalar not reduced modulo q")
    return x


def inverse_mod(x: int) -> int:
    x %= Q
    if x == 0:
        raise ZeroDivisionError("zero has no inverse mod q")
    return pow(x, -1, Q)


def _sc(x: int) -> Scalar:
    return Scalar(x % Q)


# -- fixed-base exponentiation -------------------------------------------------------

class _Window:
    """Fixed-base window table over raw backend points."""

    def __init__(self, point, identity, window: int):
        self.window = window
        self.identity = identity
        self.table = []
        base = point
        mask = (1 << window) - 1
        for _ in range((Q.bit_length() + window - 1) // window):
            row = [identity]
            for _ in range(mask):
                row.append(row[-1] + base)
            self.table.append(row)
            base = row[-1] + base

    def pow(self, k: int):
        k %= Q
        acc = self.identity
        mask = (1 << self.window) - 1
        for row in self.table:
            d = k & mask
            if d:
                acc = acc + row[d]
            k >>= self.window
            if not k:
                break
        return acc


_G1_GEN = G1Point()
_G2_GEN = G2Point()
_tables: dict[str, _Window] = {}


def _gen_pow(which: str, k: int):
    table = _tables.get(which)
    if table is None:
        if which == "g1":
            table = _Window(_G1_GEN, G1Point.identity(), 8)
        else:
            table = _Window(_G2_GEN, G2Point.identity(), 8)
        _tables[which] = table
    return table.pow(k)


class FixedBase:
    """Powers of one G1 or G2 element, with a window table built on demand.

    A 4-bit table costs ~1000 additions and makes each exponentiation ~64
    additions.  It only pays for itself after several uses, so the first
    ``build_after`` calls go through the plain backend routines.
    """

    def __init__(self, elem, window: int = 4, build_after: int = 8):
        self.kind = type(elem)
        self.elem = elem
        self.window = window
        self.build_after = build_after
        self._uses = 0
        self._w: _Window | None = None

    def _table(self) -> _Window | None:
        self._uses += 1
        if self._w is None and self._uses > self.build_after:
            self._w = _Window(self.elem.point, self.kind.identity().point, self.window)
        return self._w

    def pow(self, k: int):
        w = self._table()
        return self.kind(w.pow(k)) if w is not None else self.elem ** k


def fixed_multi_exp(bases: Sequence[FixedBase], exps: Sequence[int]):
    """Product of bases[i].pow(exps[i]); falls back to one backend MSM while cold."""
    if len(bases) != len(exps) or not bases:
        raise ValueError("need equally many (non-zero count) bases and exponents")
    kind = bases[0].kind
    tables = [fb._table() for fb in bases]
    live = [(fb, t, e % Q) for fb, t, e in zip(bases, tables, exps) if e % Q]
    if not live:
        return kind.identity()
    if any(t is None for _, t, _ in live):
        backend = type(live[0][0].elem.point)
        return kind(backend.multiexp_unchecked([fb.elem.point for fb, _, _ in live],
                                               [Scalar(e) for _, _, e in live]))
    acc = live[0][1].pow(live[0][2])
    for _, t, e in live[1:]:
        acc = acc + t.pow(e)
    return kind(acc)


class SubsetProduct:
    """Precomputed products of fixed points selected by a bit vector.

    Points are cut into 4-wide chunks with all 16 subset sums stored, so a
    256-bit selection costs 64 additions instead of ~128.
    """

    CHUNK = 4

    def __init__(self, points: Sequence):
        if not points:
            raise ValueError("SubsetProduct needs points")
        self.kind = type(points[0])
        raw = [p.point for p in points]
        ident = self.kind.identity().point
        self.identity = ident
        self.tables = []
        for start in range(0, len(raw), self.CHUNK):
            chunk = raw[start:start + self.CHUNK]
            sums = [ident]
            for j, p in enumerate(chunk):
                sums += [s + p for s in sums[: 1 << j]]
            self.tables.append(sums)

    def select(self, bits: Sequence[int]):
        acc = self.identity
        for c, table in enumerate(self.tables):
            idx = 0
            for j, b in enumerate(bits[c * self.CHUNK:(c + 1) * self.CHUNK]):
                if b:
                    idx |= 1 << j
            if idx:
                acc = acc + table[idx]
        return self.kind(acc)


# -- group elements ---------------------------------------------------------------

class GroupElement:
    """An element of G1."""

    __slots__ = ("point",)

    def __init__(self, point: G1Point):
        self.point = point

    @classmethod
    def generator(cls) -> GroupElement:
        return cls(G1Point())

    @classmethod
    def identity(cls) -> GroupElement:
        return cls(G1Point.identity())

    @classmethod
    def random(cls, rng: random.Random | None = None) -> GroupElement:
        return cls(_gen_pow("g1", random_scalar(rng)))

    def __mul__(self, other: GroupElement) -> GroupElement:
        return GroupElement(self.point + other.point)

    def __truediv__(self, other: GroupElement) -> GroupElement:
        return GroupElement(self.point - other.point)

    def __pow__(self, k: int) -> GroupElement:
        if self.point == _G1_GEN:
            return GroupElement(_gen_pow("g1", k))
        return GroupElement(self.point * _sc(k))

    def inverse(self) -> GroupElement:
        return GroupElement(-self.point)

    def is_identity(self) -> bool:
        return self.point == G1Point.identity()

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupElement) and self.point == other.point

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def __repr__(self) -> str:
        return f"GroupElement({self.to_bytes().hex()[:16]}...)"

    def to_bytes(self) -> bytes:
        return bytes(self.point.to_compressed_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> GroupElement:
        if len(data) != G1_BYTES:
            raise SerializationError(f"G1 point must be {G1_BYTES} bytes")
        try:
            return cls(G1Point.from_compressed_bytes(list(data)))
        except Exception as exc:
            raise SerializationError(f"invalid G1 encoding: {exc}") from None


class G2Element:
    """An element of G2; the right-hand projection of a dual element."""

    __slots__ = ("point",)

    def __init__(self, point: G2Point):
        self.point = point

    @classmethod
    def generator(cls) -> G2Element:
        return cls(G2Point())

    @classmethod
    def identity(cls) -> G2Element:
        return cls(G2Point.identity())

    def __mul__(self, other: G2Element) -> G2Element:
        return G2Element(self.point + other.point)

    def __pow__(self, k: int) -> G2Element:
        if self.point == _G2_GEN:
            return G2Element(_gen_pow("g2", k))
        return G2Element(self.point * _sc(k))

    def __eq__(self, other) -> bool:
        return isinstance(other, G2Element) and self.point == other.point

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def to_bytes(self) -> bytes:
        return bytes(self.point.to_compressed_bytes())


class DualGroupElement:
    """The same exponent in G1 (``left``) and G2 (``right``)."""

    __slots__ = ("left", "right")

    def __init__(self, left: G1Point, right: G2Point):
        self.left = left
        self.right = right

    @classmethod
    def generator(cls) -> DualGroupElement:
        return cls(G1Point(), G2Point())

    @classmethod
    def identity(cls) -> DualGroupElement:
        return cls(G1Point.identity(), G2Point.identity())

    @classmethod
    def from_exponent(cls, x: int) -> DualGroupElement:
        return cls(_gen_pow("g1", x), _gen_pow("g2", x))

    @classmethod
    def random(cls, rng: random.Random | None = None) -> DualGroupElement:
        return cls.from_exponent(random_scalar(rng))

    def __mul__(self, other: DualGroupElement) -> DualGroupElement:
        return DualGroupElement(self.left + other.left, self.right + other.right)

    def __truediv__(self, other: DualGroupElement) -> DualGroupElement:
        return DualGroupElement(self.left - other.left, self.right - other.right)

    def __pow__(self, k: int) -> DualGroupElement:
        if self.left == _G1_GEN and self.right == _G2_GEN:
            return DualGroupElement.from_exponent(k)
        s = _sc(k)
        return DualGroupElement(self.left * s, self.right * s)

    def inverse(self) -> DualGroupElement:
        return DualGroupElement(-self.left, -self.right)

    def g1(self) -> GroupElement:
        return GroupElement(self.left)

    def g2(self) -> G2Element:
        return G2Element(self.right)

    def is_consistent(self) -> bool:
        """Check e(left, g2) == e(g1, right)."""
        return GT.multi_pairing([self.left, -G1Point()], [G2Point(), self.right]) == GT.one()

    def __eq__(self, other) -> bool:
        return (isinstance(other, DualGroupElement)
                and self.left == other.left and self.right == other.right)

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def __repr__(self) -> str:
        return f"DualGroupElement({self.to_bytes().hex()[:16]}...)"

    def to_bytes(self) -> bytes:
        return bytes(self.left.to_compressed_bytes()) + bytes(self.right.to_compressed_bytes())

    @classmethod
    def from_bytes(cls, data: bytes, check: bool = True) -> DualGroupElement:
        if len(data) != G1_BYTES + G2_BYTES:
            raise SerializationError(f"dual element must be {G1_BYTES + G2_BYTES} bytes")
        try:
            left = G1Point.from_compressed_bytes(list(data[:G1_BYTES]))
            right = G2Point.from_compressed_bytes(list(data[G1_BYTES:]))
        except Exception as exc:
            raise SerializationError(f"invalid dual encoding: {exc}") from None
        elem = cls(left, right)
        if check and not elem.is_consistent():
            raise SerializationError("dual element halves have different exponents")
        return elem


class TargetElement:
    """An element of GT.

    Backed by the native type when it came out of a pairing, by a pure
    integer Fq12 tuple when it was deserialized.  Mixed operations fall back
    to the integer path.
    """

    __slots__ = ("_native", "_fq")

    def __init__(self, native: GT | None = None, fq=None):
        if native is None and fq is None:
            raise ValueError("TargetElement needs a value")
        self._native = native
        self._fq = fq

    @classmethod
    def one(cls) -> TargetElement:
        return cls(native=GT.one())

    def _as_fq(self):
        if self._fq is None:
            self._fq = _fq12.from_bytes(bytes.fromhex(str(self._native)))
        return self._fq

    def __mul__(self, other: TargetElement) -> TargetElement:
        if self._native is not None and other._native is not None:
            return TargetElement(native=self._native * other._native)
        return TargetElement(fq=_fq12.mul(self._as_fq(), other._as_fq()))

    def __pow__(self, k: int) -> TargetElement:
        k %= Q
        if self._native is None:
            return TargetElement(fq=_fq12.power(self._fq, k))
        result = GT.one()
        base = self._native
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return TargetElement(native=result)

    def inverse(self) -> TargetElement:
        if self._native is not None:
            return self ** (Q - 1)
        return TargetElement(fq=_fq12.conjugate(self._fq))

    def __truediv__(self, other: TargetElement) -> TargetElement:
        return self * other.inverse()

    def is_one(self) -> bool:
        return self.to_bytes() == _ONE_BYTES

    def __eq__(self, other) -> bool:
        return isinstance(other, TargetElement) and self.to_bytes() == other.to_bytes()

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def __repr__(self) -> str:
        return f"TargetElement({self.to_bytes().hex()[:16]}...)"

    def to_bytes(self) -> bytes:
        if self._native is not None:
            return bytes.fromhex(str(self._native))
        return _fq12.to_bytes(self._fq)

    @classmethod
    def from_bytes(cls, data: bytes) -> TargetElement:
        try:
            fq = _fq12.from_bytes(data)
        except ValueError as exc:
            raise SerializationError(str(exc)) from None
        if _fq12.power(fq, Q) != _fq12.ONE:
            raise SerializationError("element is not in the order-q target group")
        return cls(fq=fq)


_ONE_BYTES = _fq12.to_bytes(_fq12.ONE)


# -- pairing ----------------------------------------------------------------------

def _left(a) -> G1Point:
    return a.left if isinstance(a, DualGroupElement) else a.point


def _right(b) -> G2Point:
    return b.right if isinstance(b, DualGroupElement) else b.point


def pair(a: GroupElement | DualGroupElement, b: DualGroupElement | G2Element) -> TargetElement:
    """e(a, b) with ``a`` taken from G1 and ``b`` from G2."""
    return TargetElement(native=GT.pairing(_left(a), _right(b)))


def multi_pair(lefts: Sequence, rights: Sequence) -> TargetElement:
    """Product of e(lefts[i], rights[i]) with one shared final exponentiation."""
    if len(lefts) != len(rights):
        raise ValueError("pairing lists differ in length")
    return TargetElement(native=GT.multi_pairing([_left(a) for a in lefts],
                                                 [_right(b) for b in rights]))


def multi_exp(bases: Sequence, exps: Sequence[int]):
    """Product of bases[i] ** exps[i]; all bases of one kind."""
    if len(bases) != len(exps):
        raise ValueError(f"{len(bases)} bases but {len(exps)} exponents")
    if not bases:
        raise ValueError("multi_exp needs at least one base")
    kept = [(b, e % Q) for b, e in zip(bases, exps) if e % Q]
    kind = type(bases[0])
    if not kept:
        return kind.identity()
    scalars = [_sc(e) for _, e in kept]
    if kind is GroupElement:
        return GroupElement(G1Point.multiexp_unchecked([b.point for b, _ in kept], scalars))
    if kind is G2Element:
        return G2Element(G2Point.multiexp_unchecked([b.point for b, _ in kept], scalars))
    if kind is DualGroupElement:
        return DualGroupElement(
            G1Point.multiexp_unchecked([b.left for b, _ in kept], scalars),
            G2Point.multiexp_unchecked([b.right for b, _ in kept], scalars),
        )
    raise TypeError(f"cannot multi-exponentiate {kind.__name__}")


def product(elems: Iterable):
    """Group product of a non-empty iterable of same-kind elements."""
    it = iter(elems)
    acc = next(it, None)
    if acc is None:
        raise ValueError("product of empty sequence has no type")
    for e in it:
        acc = acc * e
    return acc


# -- encodings ----------------------------------------------------------------------

def encode_fields(*parts: bytes) -> bytes:
    out = bytearray()
    for p in parts:
        out += len(p).to_bytes(4, "big")
        out += p
    return bytes(out)


def decode_fields(data: bytes) -> list[bytes]:
    parts = []
    i = 0
    while i < len(data):
        if i + 4 > len(data):
            raise SerializationError("truncated length prefix")
        n = int.from_bytes(data[i:i + 4], "big")
        i += 4
        if i + n > len(data):
            raise SerializationError("truncated field")
        parts.append(data[i:i + n])
        i += n
    return parts


# -- hashing ----------------------------------------------------------------------

def hash_to_bits(data: bytes, length: int = HASH_BITS) -> tuple[int, ...]:
    """H: {0,1}* -> {0,1}^length, most significant bit first."""
    digest = hashlib.shake_256(b"pod/H-bits\x00" + data).digest((length + 7) // 8)
    n = int.from_bytes(digest, "big") >> (8 * len(digest) - length)
    return tuple((n >> (length - 1 - i)) & 1 for i in range(length))


def hash_to_scalar(data: bytes, domain: bytes = b"") -> int:
    """Wide reduction of SHA-512(domain || data) modulo Q."""
    h = hashlib.sha512(encode_fields(b"pod/H-scalar", domain, data)).digest()
    return int.from_bytes(h, "big") % Q


# The reserved attribute appended to every signing set.
THETA = hash_to_scalar(b"default attribute theta", b"theta")


def hash_to_attribute(label: bytes | str) -> int:
    """Map an attribute label into Z_q^* minus {THETA}."""
    if isinstance(label, str):
        label = label.encode()
    counter = 0
    while True:
        a = hash_to_scalar(encode_fields(label, counter.to_bytes(4, "big")), b"attribute")
        if a != 0 and a != THETA:
            return a
        counter += 1
