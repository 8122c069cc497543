import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from podupdate.access_policy import AccessStructure, AttributeSet, policy_to_lsss
from podupdate.errors import KeyGenError, PolicyUnsatisfiedError
from podupdate.oabs import (
    DeviceSigningKey,
    OabsSignature,
    OutsourcingKey,
    PublicParams,
    oabs_keygen,
    oabs_setup,
    oabs_sign,
    oabs_sign_out,
    oabs_verify,
    sign_with_policy,
    verify_key_row,
)
from podupdate.pairing_algebra import THETA, GroupElement, pair
from podupdate.runner import random_policy


def W_of(*labels):
    return AttributeSet.from_labels(labels)


# -- setup ----------------------------------------------------------------------------

def test_setup_sizes(params16):
    params, _ = params16
    assert len(params.V) == 17 and len(params.u) == 257
    assert params.n == 16 and params.l == 256
    assert params.theta == THETA


def test_setup_z_matches_master_key(params16):
    params, msk = params16
    assert pair(params.g, params.g) ** msk.alpha == params.Z


def test_setup_deterministic_under_seed():
    a, _ = oabs_setup(4, 8, random.Random(3))
    b, _ = oabs_setup(4, 8, random.Random(3))
    c, _ = oabs_setup(4, 8, random.Random(4))
    assert a.to_bytes() == b.to_bytes() != c.to_bytes()


@pytest.mark.parametrize("n,l", [(2, 8), (0, 8), (4, 0)])
def test_setup_rejects_degenerate_sizes(n, l):
    with pytest.raises(ValueError):
        oabs_setup(n, l, random.Random(0))


def test_setup_rejects_unsupported_security():
    with pytest.raises(ValueError):
        oabs_setup(4, 8, random.Random(0), security=256)


def test_params_roundtrip(params_small):
    params, _ = params_small
    back = PublicParams.from_bytes(params.to_bytes())
    assert back.to_bytes() == params.to_bytes()
    assert back.fingerprint == params.fingerprint


# -- keygen ---------------------------------------------------------------------------

def test_keygen_rows_are_well_formed(params_small):
    params, msk = params_small
    ok, dk = oabs_keygen(params, msk, policy_to_lsss("(a AND b) OR c"), random.Random(1))
    assert all(verify_key_row(params, row) for row in ok.rows)
    assert verify_key_row(params, dk.theta_row)
    assert dk.outsourcing is ok


def test_keygen_tampered_row_fails_check(params_small):
    params, msk = params_small
    ok, _ = oabs_keygen(params, msk, policy_to_lsss("a"), random.Random(2))
    row = ok.rows[0]
    bad = type(row)(row.attribute, row.d, row.d_prime,
                    (row.d_dprime[0] * GroupElement.generator(),) + row.d_dprime[1:])
    assert not verify_key_row(params, bad)


def test_keygen_rejects_theta_row(params_small):
    params, msk = params_small
    A = policy_to_lsss("a")
    forged = object.__new__(AccessStructure)
    object.__setattr__(forged, "matrix", A.matrix)
    object.__setattr__(forged, "rho", (THETA,))
    object.__setattr__(forged, "labels", A.labels)
    with pytest.raises(KeyGenError):
        oabs_keygen(params, msk, forged, random.Random(3))


def test_single_row_policy_roundtrip(params_small):
    params, msk = params_small
    _, dk = oabs_keygen(params, msk, policy_to_lsss("a"), random.Random(4))
    sig = sign_with_policy(params, b"msg", dk, W_of("a"), random.Random(5))
    assert oabs_verify(params, b"msg", sig)


def test_two_keygens_same_policy_both_verify(params_small):
    params, msk = params_small
    A = policy_to_lsss("a AND b")
    W = W_of("a", "b")
    sigs = [sign_with_policy(params, b"m", oabs_keygen(params, msk, A, random.Random(s))[1], W,
                             random.Random(s + 10)) for s in (6, 7)]
    assert all(oabs_verify(params, b"m", s) for s in sigs)
    assert sigs[0].sigma2 != sigs[1].sigma2


def test_key_serialization_roundtrip(params_small):
    params, msk = params_small
    ok, dk = oabs_keygen(params, msk, policy_to_lsss("a OR (b AND c)"), random.Random(8))
    assert OutsourcingKey.from_bytes(ok.to_bytes()) == ok
    assert DeviceSigningKey.from_bytes(dk.to_bytes()) == dk


# -- signing --------------------------------------------------------------------------

def test_sign_out_unsatisfied_is_typed_error(params_small):
    params, msk = params_small
    ok, _ = oabs_keygen(params, msk, policy_to_lsss("a AND b"), random.Random(9))
    with pytest.raises(PolicyUnsatisfiedError):
        oabs_sign_out(params, ok, W_of("a"), random.Random(0))


def test_two_partials_both_complete(params_small):
    params, msk = params_small
    ok, dk = oabs_keygen(params, msk, policy_to_lsss("a OR b"), random.Random(10))
    W = W_of("a", "b", "z")
    p1 = oabs_sign_out(params, ok, W, random.Random(1))
    p2 = oabs_sign_out(params, ok, W, random.Random(2))
    assert p1.sigma1p != p2.sigma1p
    for p in (p1, p2):
        assert oabs_verify(params, b"x", oabs_sign(params, b"x", dk, p, random.Random(3)))


def test_wrong_message_rejected(params16):
    params, msk = params16
    _, dk = oabs_keygen(params, msk, policy_to_lsss("a"), random.Random(11))
    sig = sign_with_policy(params, b"\x00" * 48, dk, W_of("a"), random.Random(1))
    assert oabs_verify(params, b"\x00" * 48, sig)
    assert not oabs_verify(params, b"\x00" * 47 + b"\x01", sig)


def test_permuted_attribute_input_gives_same_signature(params_small):
    params, msk = params_small
    _, dk = oabs_keygen(params, msk, policy_to_lsss("a AND b"), random.Random(12))
    s1 = sign_with_policy(params, b"m", dk, W_of("a", "b", "c"), random.Random(5))
    s2 = sign_with_policy(params, b"m", dk, W_of("c", "b", "a"), random.Random(5))
    assert s1 == s2


def test_signature_bound_to_its_attribute_set(params_small):
    """Over a two-attribute universe, every other W rejects."""
    params, msk = params_small
    _, dk = oabs_keygen(params, msk, policy_to_lsss("a OR b"), random.Random(13))
    sets = [W_of("a"), W_of("b"), W_of("a", "b")]
    for W in sets:
        sig = sign_with_policy(params, b"m", dk, W, random.Random(6))
        for other in sets:
            moved = OabsSignature(sig.sigma0, sig.sigma1, sig.sigma2, other)
            assert oabs_verify(params, b"m", moved) == (other == W)


def test_oversized_attribute_set_rejects(params_small):
    params, msk = params_small
    _, dk = oabs_keygen(params, msk, policy_to_lsss("a"), random.Random(14))
    sig = sign_with_policy(params, b"m", dk, W_of("a"), random.Random(7))
    huge = AttributeSet.from_labels([f"x{i}" for i in range(params.n)])
    assert not oabs_verify(params, b"m", OabsSignature(sig.sigma0, sig.sigma1, sig.sigma2, huge))


def test_signature_roundtrip(params_small):
    params, msk = params_small
    _, dk = oabs_keygen(params, msk, policy_to_lsss("a"), random.Random(15))
    sig = sign_with_policy(params, b"m", dk, W_of("a"), random.Random(8))
    back = OabsSignature.from_bytes(sig.to_bytes())
    assert back == sig and oabs_verify(params, b"m", back)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32), st.binary(max_size=64))
def test_completeness_property(params_small, seed, message):
    params, msk = params_small
    rng = random.Random(seed)
    universe = [f"attr{i}" for i in range(6)]
    W = set(rng.sample(universe, rng.randint(1, params.n - 2)))
    policy = random_policy(rng, universe, 5, W)
    _, dk = oabs_keygen(params, msk, policy_to_lsss(policy), rng)
    sig = sign_with_policy(params, message, dk, AttributeSet.from_labels(W), rng)
    assert oabs_verify(params, message, sig)
