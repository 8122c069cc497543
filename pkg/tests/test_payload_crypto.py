import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from podupdate.daps import daps_extract, daps_kgen, daps_sign
from podupdate.errors import DecryptionError, SerializationError
from podupdate.pairing_algebra import Q, GroupElement
from podupdate.payload_crypto import (
    HybridCiphertext,
    LedgerSignature,
    decrypt,
    encrypt,
    ledger_keygen,
    ledger_sign,
    ledger_verify,
)

G = GroupElement.generator()


@pytest.fixture(scope="module")
def keys():
    rng = random.Random(3)
    sk = rng.randrange(1, Q)
    return sk, G ** sk


def test_roundtrip_one_mib(keys):
    sk, pk = keys
    data = random.Random(1).randbytes(1 << 20)
    c = encrypt(pk, data, random.Random(2))
    assert len(c.body) == len(data)
    assert decrypt(sk, c) == data


def test_empty_plaintext(keys):
    sk, pk = keys
    c = encrypt(pk, b"", random.Random(0))
    assert c.body == b"" and len(c.tag) == 32
    assert decrypt(sk, c) == b""


@settings(max_examples=20, deadline=None)
@given(st.binary(max_size=2000))
def test_roundtrip_property(keys, data):
    sk, pk = keys
    assert decrypt(sk, encrypt(pk, data)) == data


def test_wrong_key_fails_tag(keys):
    sk, pk = keys
    c = encrypt(pk, b"update", random.Random(4))
    with pytest.raises(DecryptionError):
        decrypt(sk + 1, c)


def test_tampering_detected(keys):
    sk, pk = keys
    c = encrypt(pk, b"update image", random.Random(5))
    truncated = HybridCiphertext(c.ephemeral, c.body[:-1], c.tag)
    flipped = HybridCiphertext(c.ephemeral, bytes([c.body[0] ^ 1]) + c.body[1:], c.tag)
    moved = HybridCiphertext(c.ephemeral * G, c.body, c.tag)
    for bad in (truncated, flipped, moved):
        with pytest.raises(DecryptionError):
            decrypt(sk, bad)


def test_ciphertext_is_randomised(keys):
    _, pk = keys
    assert encrypt(pk, b"x", random.Random(1)).to_bytes() != encrypt(pk, b"x", random.Random(2)).to_bytes()


def test_file_format_layout(keys):
    _, pk = keys
    c = encrypt(pk, b"abc", random.Random(6))
    blob = c.to_bytes()
    assert blob[:4] == b"PODC" and blob[4] == 1
    assert blob[5:53] == c.ephemeral.to_bytes()
    assert blob[53:85] == c.tag
    assert int.from_bytes(blob[85:93], "big") == 3 and blob[93:] == c.body
    assert HybridCiphertext.from_bytes(blob) == c


@pytest.mark.parametrize("mutate", [
    lambda b: b[:10],
    lambda b: b"XXXX" + b[4:],
    lambda b: b[:4] + b"\x02" + b[5:],
    lambda b: b + b"\x00",
])
def test_file_format_rejects(keys, mutate):
    _, pk = keys
    blob = encrypt(pk, b"abc", random.Random(7)).to_bytes()
    with pytest.raises(SerializationError):
        HybridCiphertext.from_bytes(mutate(blob))


def test_extracted_daps_key_decrypts():
    kp = daps_kgen(rng=random.Random(8))
    c = encrypt(kp.pk, b"firmware v2", random.Random(9))
    s1, s2 = daps_sign(kp.sk, b"addr", b"a"), daps_sign(kp.sk, b"addr", b"b")
    sk = daps_extract(kp.pk, b"addr", (b"a", s1), (b"b", s2))
    assert decrypt(sk, c) == b"firmware v2"


# -- account signatures ----------------------------------------------------------

def test_ledger_keypair():
    kp = ledger_keygen(random.Random(10))
    assert G ** kp.SK == kp.PK


def test_ledger_sign_verify_and_rejections():
    rng = random.Random(11)
    kp, other = ledger_keygen(rng), ledger_keygen(rng)
    sig = ledger_sign(kp.SK, b"\x00\x01", rng)
    assert ledger_verify(kp.PK, b"\x00\x01", sig)
    assert not ledger_verify(kp.PK, b"\x00\x03", sig)
    assert not ledger_verify(other.PK, b"\x00\x01", sig)
    assert not ledger_verify(kp.PK, b"\x00\x01", LedgerSignature(sig.e, (sig.s + 1) % Q))
    assert not ledger_verify(kp.PK, b"\x00\x01", LedgerSignature(Q, sig.s))
    assert not ledger_verify(kp.PK, b"\x00\x01", None)


def test_ledger_signature_bytes():
    kp = ledger_keygen(random.Random(12))
    sig = ledger_sign(kp.SK, b"m", random.Random(13))
    assert LedgerSignature.from_bytes(sig.to_bytes()) == sig
    with pytest.raises(SerializationError):
        LedgerSignature.from_bytes(sig.to_bytes()[1:])
    with pytest.raises(SerializationError):
        LedgerSignature.from_bytes(Q.to_bytes(32, "big") * 2)
