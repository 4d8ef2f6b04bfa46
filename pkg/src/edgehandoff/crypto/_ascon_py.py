"""Pure-Python Ascon kernels.

Fallback used when the compiled ``_ascon_ext`` module is unavailable. Both
modules expose the same four functions with identical semantics.
"""

MASK = 0xFFFFFFFFFFFFFFFF

_RC = (0xF0, 0xE1, 0xD2, 0xC3, 0xB4, 0xA5, 0x96, 0x87, 0x78, 0x69, 0x5A, 0x4B)

# Ascon-AEAD128 / Ascon-Hash256 (SP 800-232) use little-endian lanes.
_IV_AEAD128 = 0x00001000808C0001
_IV_HASH256 = 0x0000080100CC0002
# Ascon-128 v1.2 uses big-endian lanes.
_IV_ASCON128 = 0x80400C0600000000


def permute(s0, s1, s2, s3, s4, rounds):
    for rc in _RC[12 - rounds:]:
        s2 ^= rc
        s0 ^= s4
        s4 ^= s3
        s2 ^= s1
        t0 = s0 ^ (~s1 & s2)
        t1 = s1 ^ (~s2 & s3)
        t2 = s2 ^ (~s3 & s4)
        t3 = s3 ^ (~s4 & s0)
        t4 = s4 ^ (~s0 & s1)
        t1 ^= t0
        t0 ^= t4
        t3 ^= t2
        t2 = ~t2 & MASK
        t0 &= MASK
        t1 &= MASK
        t3 &= MASK
        t4 &= MASK
        s0 = t0 ^ (((t0 >> 19) | (t0 << 45)) & MASK) ^ (((t0 >> 28) | (t0 << 36)) & MASK)
        s1 = t1 ^ (((t1 >> 61) | (t1 << 3)) & MASK) ^ (((t1 >> 39) | (t1 << 25)) & MASK)
        s2 = t2 ^ (((t2 >> 1) | (t2 << 63)) & MASK) ^ (((t2 >> 6) | (t2 << 58)) & MASK)
        s3 = t3 ^ (((t3 >> 10) | (t3 << 54)) & MASK) ^ (((t3 >> 17) | (t3 << 47)) & MASK)
        s4 = t4 ^ (((t4 >> 7) | (t4 << 57)) & MASK) ^ (((t4 >> 41) | (t4 << 23)) & MASK)
    return s0, s1, s2, s3, s4


def _le(b, off=0):
    return int.from_bytes(b[off:off + 8], "little")


def _be(b, off=0):
    return int.from_bytes(b[off:off + 8], "big")


def hash256(data):
    s = permute(_IV_HASH256, 0, 0, 0, 0, 12)
    s0, s1, s2, s3, s4 = s
    n = len(data)
    full = n - n % 8
    for off in range(0, full, 8):
        s0 ^= _le(data, off)
        s0, s1, s2, s3, s4 = permute(s0, s1, s2, s3, s4, 12)
    tail = data[full:]
    s0 ^= int.from_bytes(tail, "little") ^ (0x01 << (8 * len(tail)))
    out = bytearray()
    for i in range(4):
        s0, s1, s2, s3, s4 = permute(s0, s1, s2, s3, s4, 12)
        out += s0.to_bytes(8, "little")
    return bytes(out)


def _aead128_init(key, nonce):
    k0, k1 = _le(key), _le(key, 8)
    s0, s1, s2, s3, s4 = permute(_IV_AEAD128, k0, k1, _le(nonce), _le(nonce, 8), 12)
    return [s0, s1, s2, s3 ^ k0, s4 ^ k1], k0, k1


def _aead128_absorb_ad(s, ad):
    if ad:
        n = len(ad)
        full = n - n % 16
        for off in range(0, full, 16):
            s[0] ^= _le(ad, off)
            s[1] ^= _le(ad, off + 8)
            s[:] = permute(*s, 8)
        tail = ad[full:] + b"\x01" + bytes(15 - (n - full))
        s[0] ^= _le(tail)
        s[1] ^= _le(tail, 8)
        s[:] = permute(*s, 8)
    s[4] ^= 1 << 63


def _aead128_finalize(s, k0, k1):
    s[2] ^= k0
    s[3] ^= k1
    s[:] = permute(*s, 12)
    return (s[3] ^ k0).to_bytes(8, "little") + (s[4] ^ k1).to_bytes(8, "little")


def _ascon128_init(key, nonce):
    k0, k1 = _be(key), _be(key, 8)
    s0, s1, s2, s3, s4 = permute(_IV_ASCON128, k0, k1, _be(nonce), _be(nonce, 8), 12)
    return [s0, s1, s2, s3 ^ k0, s4 ^ k1], k0, k1


def _ascon128_absorb_ad(s, ad):
    if ad:
        n = len(ad)
        full = n - n % 8
        for off in range(0, full, 8):
            s[0] ^= _be(ad, off)
            s[:] = permute(*s, 6)
        tail = ad[full:] + b"\x80" + bytes(7 - (n - full))
        s[0] ^= _be(tail)
        s[:] = permute(*s, 6)
    s[4] ^= 1


def _ascon128_finalize(s, k0, k1):
    s[1] ^= k0
    s[2] ^= k1
    s[:] = permute(*s, 12)
    return (s[3] ^ k0).to_bytes(8, "big") + (s[4] ^ k1).to_bytes(8, "big")


def aead_encrypt(key, nonce, ad, pt, variant=0):
    """Return ciphertext || tag. variant 0 = Ascon-AEAD128, 1 = Ascon-128 v1.2."""
    out = bytearray()
    n = len(pt)
    if variant == 0:
        s, k0, k1 = _aead128_init(key, nonce)
        _aead128_absorb_ad(s, ad)
        full = n - n % 16
        for off in range(0, full, 16):
            s[0] ^= _le(pt, off)
            s[1] ^= _le(pt, off + 8)
            out += s[0].to_bytes(8, "little") + s[1].to_bytes(8, "little")
            s[:] = permute(*s, 8)
        r = n - full
        tail = pt[full:] + b"\x01" + bytes(15 - r)
        s[0] ^= _le(tail)
        s[1] ^= _le(tail, 8)
        out += (s[0].to_bytes(8, "little") + s[1].to_bytes(8, "little"))[:r]
        out += _aead128_finalize(s, k0, k1)
    else:
        s, k0, k1 = _ascon128_init(key, nonce)
        _ascon128_absorb_ad(s, ad)
        full = n - n % 8
        for off in range(0, full, 8):
            s[0] ^= _be(pt, off)
            out += s[0].to_bytes(8, "big")
            s[:] = permute(*s, 6)
        r = n - full
        tail = pt[full:] + b"\x80" + bytes(7 - r)
        s[0] ^= _be(tail)
        out += s[0].to_bytes(8, "big")[:r]
        out += _ascon128_finalize(s, k0, k1)
    return bytes(out)


def aead_decrypt(key, nonce, ad, ct, variant=0):
    """Return (plaintext, computed_tag) for ciphertext ``ct`` (tag excluded).

    Tag comparison is left to the caller so it can be done in constant time.
    """
    out = bytearray()
    n = len(ct)
    if variant == 0:
        s, k0, k1 = _aead128_init(key, nonce)
        _aead128_absorb_ad(s, ad)
        full = n - n % 16
        for off in range(0, full, 16):
            c0, c1 = _le(ct, off), _le(ct, off + 8)
            out += (s[0] ^ c0).to_bytes(8, "little") + (s[1] ^ c1).to_bytes(8, "little")
            s[0], s[1] = c0, c1
            s[:] = permute(*s, 8)
        r = n - full
        ks = s[0].to_bytes(8, "little") + s[1].to_bytes(8, "little")
        tail = ct[full:]
        out += bytes(a ^ b for a, b in zip(tail, ks))
        # Replace the first r rate bytes with ciphertext, then pad.
        block = tail + ks[r:]
        block = block[:r] + bytes([block[r] ^ 0x01]) + block[r + 1:]
        s[0], s[1] = _le(block), _le(block, 8)
        tag = _aead128_finalize(s, k0, k1)
    else:
        s, k0, k1 = _ascon128_init(key, nonce)
        _ascon128_absorb_ad(s, ad)
        full = n - n % 8
        for off in range(0, full, 8):
            c0 = _be(ct, off)
            out += (s[0] ^ c0).to_bytes(8, "big")
            s[0] = c0
            s[:] = permute(*s, 6)
        r = n - full
        ks = s[0].to_bytes(8, "big")
        tail = ct[full:]
        out += bytes(a ^ b for a, b in zip(tail, ks))
        block = tail + ks[r:]
        block = block[:r] + bytes([block[r] ^ 0x80]) + block[r + 1:]
        s[0] = _be(block)
        tag = _ascon128_finalize(s, k0, k1)
    return bytes(out), tag
