"""Lightweight primitives (Ascon) and the challenge-response built on them.

The permutation-heavy kernels come from the compiled ``_ascon_ext`` module
when it was built, otherwise from the pure-Python ``_ascon_py``. Set
``EDGEHANDOFF_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import hmac
import os
import random

from ..errors import AuthFailure, ChallengeFailed, LengthError, ProvisioningError

if os.environ.get("EDGEHANDOFF_PURE_PYTHON") == "1":
    from . import _ascon_py as _kernel
else:
    try:
        from . import _ascon_ext as _kernel
    except ImportError:
        from . import _ascon_py as _kernel

BACKEND = "cython" if _kernel.__name__.endswith("_ext") else "python"

KEY_LEN = 16
NONCE_LEN = 16
TAG_LEN = 16
DIGEST_LEN = 32
CHALLENGE_RESPONSE_LEN = NONCE_LEN + KEY_LEN + TAG_LEN

ASCON_AEAD128 = 0
ASCON_128 = 1
AEAD_VARIANTS = {"Ascon-AEAD128": ASCON_AEAD128, "Ascon-128": ASCON_128}

__all__ = [
    "BACKEND", "SymmetricKey", "aead_seal", "aead_open", "lw_hash",
    "digest_equal", "make_challenge", "solve_challenge", "verify_challenge",
    "derive_session_key", "device_fingerprint", "random_key",
]


class SymmetricKey(bytes):
    """Exactly 16 bytes of key material."""

    def __new__(cls, value):
        value = bytes(value)
        if len(value) != KEY_LEN:
            raise LengthError(f"key must be {KEY_LEN} bytes, got {len(value)}")
        return super().__new__(cls, value)

    def __repr__(self):
        # never print key material
        return f"SymmetricKey(<{KEY_LEN} bytes>)"

    @classmethod
    def provisioned(cls, value):
        key = cls(value)
        if not any(key):
            raise ProvisioningError("all-zero key rejected by provisioning")
        return key


def _check(name, value, length):
    if len(value) != length:
        raise LengthError(f"{name} must be {length} bytes, got {len(value)}")


def aead_seal(key: bytes, nonce: bytes, aad: bytes, plaintext: bytes,
              variant: int = ASCON_AEAD128) -> bytes:
    """Encrypt and authenticate; returns ciphertext followed by the 16-byte tag."""
    _check("key", key, KEY_LEN)
    _check("nonce", nonce, NONCE_LEN)
    return _kernel.aead_encrypt(bytes(key), bytes(nonce), bytes(aad), bytes(plaintext), variant)


def aead_open(key: bytes, nonce: bytes, aad: bytes, sealed: bytes,
              variant: int = ASCON_AEAD128) -> bytes:
    _check("key", key, KEY_LEN)
    _check("nonce", nonce, NONCE_LEN)
    if len(sealed) < TAG_LEN:
        raise LengthError(f"sealed input must be at least {TAG_LEN} bytes")
    sealed = bytes(sealed)
    plaintext, tag = _kernel.aead_decrypt(bytes(key), bytes(nonce), bytes(aad),
                                          sealed[:-TAG_LEN], variant)
    if not hmac.compare_digest(tag, sealed[-TAG_LEN:]):
        raise AuthFailure("tag mismatch")
    return plaintext


def lw_hash(data: bytes) -> bytes:
    """Ascon-Hash256 digest (32 bytes)."""
    return _kernel.hash256(bytes(data))


def digest_equal(a: bytes, b: bytes) -> bool:
    return hmac.compare_digest(bytes(a), bytes(b))


def random_key(rng: random.Random) -> SymmetricKey:
    while True:
        raw = rng.randbytes(KEY_LEN)
        if any(raw):
            return SymmetricKey(raw)


def make_challenge(rng: random.Random, used: set | None = None) -> bytes:
    """Draw a fresh 16-byte challenge, never repeating one already in ``used``."""
    while True:
        nonce = rng.randbytes(NONCE_LEN)
        if used is None:
            return nonce
        if nonce not in used:
            used.add(nonce)
            return nonce


def solve_challenge(psk: bytes, challenge: bytes, fp: bytes, rng: random.Random) -> bytes:
    _check("challenge", challenge, NONCE_LEN)
    responder_nonce = rng.randbytes(NONCE_LEN)
    return responder_nonce + aead_seal(psk, challenge, responder_nonce, fp)


def verify_challenge(psk: bytes, challenge: bytes, expected_fp: bytes, response: bytes) -> bytes:
    """Check a response from :func:`solve_challenge`; returns the responder nonce.

    Raises a single ChallengeFailed for both a wrong key and a wrong fingerprint.
    """
    if len(response) != CHALLENGE_RESPONSE_LEN:
        raise LengthError(f"challenge response must be {CHALLENGE_RESPONSE_LEN} bytes")
    responder_nonce = bytes(response[:NONCE_LEN])
    try:
        fp = aead_open(psk, challenge, responder_nonce, response[NONCE_LEN:])
    except AuthFailure:
        raise ChallengeFailed("challenge response rejected") from None
    if not digest_equal(fp, expected_fp):
        raise ChallengeFailed("challenge response rejected")
    return responder_nonce


def derive_session_key(base: bytes, challenge: bytes, responder_nonce: bytes) -> SymmetricKey:
    return SymmetricKey(lw_hash(bytes(base) + bytes(challenge) + bytes(responder_nonce))[:KEY_LEN])


def device_fingerprint(entity_id: bytes, model: str, salt: bytes) -> bytes:
    """16-byte summary of an entity's provisioned identity record.

    ``entity_id`` is the 9-byte wire encoding (kind byte + big-endian u64).
    """
    return lw_hash(bytes(entity_id) + model.encode("utf-8") + bytes(salt))[:16]
