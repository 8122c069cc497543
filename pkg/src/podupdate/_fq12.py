"""Pure-integer arithmetic in the BLS12-381 target field Fq12.

The native backend can pair and multiply target elements but cannot rebuild
one from bytes.  Deserialized target elements fall back to this module.

Tower (same as the backend's byte layout):
    Fq2  = Fq[u]  / (u^2 + 1)
    Fq6  = Fq2[v] / (v^3 - (u + 1))
    Fq12 = Fq6[w] / (w^2 - v)

Encoding is 12 little-endian 48-byte field elements in the order
c0.c0.c0, c0.c0.c1, c0.c1.c0, ..., c1.c2.c1.
"""

P = 0x1A0111EA397FE69A4B1BA7B6434BACD764774B84F38512BF6730D2A0F6B0F6241EABFFFEB153FFFFB9FEFFFFFFFFAAAB
FQ_BYTES = 48
FQ12_BYTES = 12 * FQ_BYTES


# Fq2 -------------------------------------------------------------------

def _f2_add(a, b):
    return ((a[0] + b[0]) % P, (a[1] + b[1]) % P)


def _f2_sub(a, b):
    return ((a[0] - b[0]) % P, (a[1] - b[1]) % P)


def _f2_mul(a, b):
    t0 = a[0] * b[0]
    t1 = a[1] * b[1]
    return ((t0 - t1) % P, ((a[0] + a[1]) * (b[0] + b[1]) - t0 - t1) % P)


def _f2_mul_nr(a):
    # multiply by the Fq6 non-residue u + 1
    return ((a[0] - a[1]) % P, (a[0] + a[1]) % P)


def _f2_neg(a):
    return (-a[0] % P, -a[1] % P)


# Fq6 -------------------------------------------------------------------

def _f6_add(a, b):
    return (_f2_add(a[0], b[0]), _f2_add(a[1], b[1]), _f2_add(a[2], b[2]))


def _f6_sub(a, b):
    return (_f2_sub(a[0], b[0]), _f2_sub(a[1], b[1]), _f2_sub(a[2], b[2]))


def _f6_mul(a, b):
    a0, a1, a2 = a
    b0, b1, b2 = b
    t0 = _f2_mul(a0, b0)
    t1 = _f2_mul(a1, b1)
    t2 = _f2_mul(a2, b2)
    c0 = _f2_add(t0, _f2_mul_nr(_f2_sub(_f2_mul(_f2_add(a1, a2), _f2_add(b1, b2)), _f2_add(t1, t2))))
    c1 = _f2_add(_f2_sub(_f2_mul(_f2_add(a0, a1), _f2_add(b0, b1)), _f2_add(t0, t1)), _f2_mul_nr(t2))
    c2 = _f2_add(_f2_sub(_f2_mul(_f2_add(a0, a2), _f2_add(b0, b2)), _f2_add(t0, t2)), t1)
    return (c0, c1, c2)


def _f6_mul_v(a):
    # multiply by v: (a0 + a1 v + a2 v^2) v = xi a2 + a0 v + a1 v^2
    return (_f2_mul_nr(a[2]), a[0], a[1])


def _f6_neg(a):
    return (_f2_neg(a[0]), _f2_neg(a[1]), _f2_neg(a[2]))


# Fq12 ------------------------------------------------------------------

ONE = (((1, 0), (0, 0), (0, 0)), ((0, 0), (0, 0), (0, 0)))


def mul(a, b):
    a0, a1 = a
    b0, b1 = b
    t0 = _f6_mul(a0, b0)
    t1 = _f6_mul(a1, b1)
    c0 = _f6_add(t0, _f6_mul_v(t1))
    c1 = _f6_sub(_f6_mul(_f6_add(a0, a1), _f6_add(b0, b1)), _f6_add(t0, t1))
    return (c0, c1)


def conjugate(a):
    """Inverse for elements of the cyclotomic subgroup (which contains GT)."""
    return (a[0], _f6_neg(a[1]))


def power(a, e: int):
    result = ONE
    base = a
    while e > 0:
        if e & 1:
            result = mul(result, base)
        base = mul(base, base)
        e >>= 1
    return result


def from_bytes(data: bytes):
    if len(data) != FQ12_BYTES:
        raise ValueError(f"expected {FQ12_BYTES} bytes, got {len(data)}")
    limbs = []
    for i in range(12):
        x = int.from_bytes(data[i * FQ_BYTES:(i + 1) * FQ_BYTES], "little")
        if x >= P:
            raise ValueError("field element out of range")
        limbs.append(x)
    f2 = [(limbs[2 * i], limbs[2 * i + 1]) for i in range(6)]
    return ((f2[0], f2[1], f2[2]), (f2[3], f2[4], f2[5]))


def to_bytes(a) -> bytes:
    out = bytearray()
    for f6 in a:
        for f2 in f6:
            for x in f2:
                out += x.to_bytes(FQ_BYTES, "little")
    return bytes(out)
