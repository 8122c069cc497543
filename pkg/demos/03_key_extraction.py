"""
Signing twice at one address gives the key away
===============================================

The node signs the gateway's challenge and, later, its on-chain claim under
the same address.  Anyone holding both signatures recovers the secret key,
which is what lets the device decrypt a payload encrypted to the node.
"""

import random

from podupdate import daps_extract, daps_kgen, daps_sign, daps_verify, decrypt, encrypt, session_address

rng = random.Random(9)
node = daps_kgen(rng=rng)
addr = session_address(node.pk, b"\x42" * 32)

challenge = rng.randbytes(32)
claim = b"claim digest"
first = daps_sign(node.sk, addr, challenge)
second = daps_sign(node.sk, addr, claim)
print("both verify:", daps_verify(node.pk, addr, challenge, first), daps_verify(node.pk, addr, claim, second))

recovered = daps_extract(node.pk, addr, (challenge, first), (claim, second))
print("recovered == sk:", recovered == node.sk)

ciphertext = encrypt(node.pk, b"firmware image", rng)
print("device decrypts:", decrypt(recovered, ciphertext))
