# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Ascon kernels; same API as ``_ascon_py``."""

from libc.stdint cimport uint64_t, uint8_t
from libc.string cimport memcpy, memset

cdef uint64_t[12] RC = [0xF0, 0xE1, 0xD2, 0xC3, 0xB4, 0xA5,
                        0x96, 0x87, 0x78, 0x69, 0x5A, 0x4B]

DEF IV_AEAD128 = 0x00001000808C0001
DEF IV_HASH256 = 0x0000080100CC0002
DEF IV_ASCON128 = 0x80400C0600000000


cdef inline uint64_t ror(uint64_t x, int n) nogil:
    return (x >> n) | (x << (64 - n))


cdef void perm(uint64_t* s, int rounds) nogil:
    cdef uint64_t t0, t1, t2, t3, t4
    cdef int r
    for r in range(12 - rounds, 12):
        s[2] ^= RC[r]
        s[0] ^= s[4]
        s[4] ^= s[3]
        s[2] ^= s[1]
        t0 = s[0] ^ (~s[1] & s[2])
        t1 = s[1] ^ (~s[2] & s[3])
        t2 = s[2] ^ (~s[3] & s[4])
        t3 = s[3] ^ (~s[4] & s[0])
        t4 = s[4] ^ (~s[0] & s[1])
        t1 ^= t0
        t0 ^= t4
        t3 ^= t2
        t2 = ~t2
        s[0] = t0 ^ ror(t0, 19) ^ ror(t0, 28)
        s[1] = t1 ^ ror(t1, 61) ^ ror(t1, 39)
        s[2] = t2 ^ ror(t2, 1) ^ ror(t2, 6)
        s[3] = t3 ^ ror(t3, 10) ^ ror(t3, 17)
        s[4] = t4 ^ ror(t4, 7) ^ ror(t4, 41)


cdef inline uint64_t load_le(const uint8_t* p, int n) nogil:
    cdef uint64_t x = 0
    cdef int i
    for i in range(n):
        x |= (<uint64_t>p[i]) << (8 * i)
    return x


cdef inline void store_le(uint8_t* p, uint64_t x, int n) nogil:
    cdef int i
    for i in range(n):
        p[i] = <uint8_t>(x >> (8 * i))


cdef inline uint64_t load_be(const uint8_t* p, int n) nogil:
    cdef uint64_t x = 0
    cdef int i
    for i in range(n):
        x |= (<uint64_t>p[i]) << (56 - 8 * i)
    return x


cdef inline void store_be(uint8_t* p, uint64_t x, int n) nogil:
    cdef int i
    for i in range(n):
        p[i] = <uint8_t>(x >> (56 - 8 * i))


def permute(s0, s1, s2, s3, s4, int rounds):
    cdef uint64_t s[5]
    s[0] = s0; s[1] = s1; s[2] = s2; s[3] = s3; s[4] = s4
    perm(s, rounds)
    return s[0], s[1], s[2], s[3], s[4]


def hash256(const uint8_t[::1] data not None):
    cdef uint64_t s[5]
    cdef Py_ssize_t n = data.shape[0], off = 0
    cdef uint8_t out[32]
    cdef int i
    cdef const uint8_t* p = &data[0] if n > 0 else NULL
    s[0] = IV_HASH256; s[1] = 0; s[2] = 0; s[3] = 0; s[4] = 0
    with nogil:
        perm(s, 12)
        while n - off >= 8:
            s[0] ^= load_le(p + off, 8)
            perm(s, 12)
            off += 8
        if n - off > 0:
            s[0] ^= load_le(p + off, <int>(n - off))
        s[0] ^= (<uint64_t>0x01) << (8 * (n - off))
        for i in range(4):
            perm(s, 12)
            store_le(out + 8 * i, s[0], 8)
    return (<char*>out)[:32]


cdef void init_aead(uint64_t* s, const uint8_t* key, const uint8_t* nonce,
                    int variant, uint64_t* k) nogil:
    if variant == 0:
        k[0] = load_le(key, 8); k[1] = load_le(key + 8, 8)
        s[0] = IV_AEAD128
        s[3] = load_le(nonce, 8); s[4] = load_le(nonce + 8, 8)
    else:
        k[0] = load_be(key, 8); k[1] = load_be(key + 8, 8)
        s[0] = IV_ASCON128
        s[3] = load_be(nonce, 8); s[4] = load_be(nonce + 8, 8)
    s[1] = k[0]; s[2] = k[1]
    perm(s, 12)
    s[3] ^= k[0]; s[4] ^= k[1]


cdef void absorb_ad(uint64_t* s, const uint8_t* ad, Py_ssize_t n, int variant) nogil:
    cdef Py_ssize_t off = 0
    cdef uint8_t blk[16]
    cdef int r
    if n > 0:
        if variant == 0:
            while n - off >= 16:
                s[0] ^= load_le(ad + off, 8); s[1] ^= load_le(ad + off + 8, 8)
                perm(s, 8)
                off += 16
            r = <int>(n - off)
            memset(blk, 0, 16)
            if r:
                memcpy(blk, ad + off, r)
            blk[r] = 0x01
            s[0] ^= load_le(blk, 8); s[1] ^= load_le(blk + 8, 8)
            perm(s, 8)
        else:
            while n - off >= 8:
                s[0] ^= load_be(ad + off, 8)
                perm(s, 6)
                off += 8
            r = <int>(n - off)
            memset(blk, 0, 8)
            if r:
                memcpy(blk, ad + off, r)
            blk[r] = 0x80
            s[0] ^= load_be(blk, 8)
            perm(s, 6)
    if variant == 0:
        s[4] ^= (<uint64_t>1) << 63
    else:
        s[4] ^= 1


cdef void finalize(uint64_t* s, uint64_t* k, int variant, uint8_t* tag) nogil:
    if variant == 0:
        s[2] ^= k[0]; s[3] ^= k[1]
        perm(s, 12)
        store_le(tag, s[3] ^ k[0], 8); store_le(tag + 8, s[4] ^ k[1], 8)
    else:
        s[1] ^= k[0]; s[2] ^= k[1]
        perm(s, 12)
        store_be(tag, s[3] ^ k[0], 8); store_be(tag + 8, s[4] ^ k[1], 8)


def aead_encrypt(const uint8_t[::1] key not None, const uint8_t[::1] nonce not None,
                 const uint8_t[::1] ad not None, const uint8_t[::1] pt not None,
                 int variant=0):
    cdef uint64_t s[5]
    cdef uint64_t k[2]
    cdef Py_ssize_t n = pt.shape[0], nad = ad.shape[0], off = 0
    cdef bytearray out = bytearray(n + 16)
    cdef uint8_t* o = out
    cdef const uint8_t* p = &pt[0] if n > 0 else NULL
    cdef const uint8_t* a = &ad[0] if nad > 0 else NULL
    cdef uint8_t blk[16]
    cdef int r
    with nogil:
        init_aead(s, &key[0], &nonce[0], variant, k)
        absorb_ad(s, a, nad, variant)
        if variant == 0:
            while n - off >= 16:
                s[0] ^= load_le(p + off, 8); s[1] ^= load_le(p + off + 8, 8)
                store_le(o + off, s[0], 8); store_le(o + off + 8, s[1], 8)
                perm(s, 8)
                off += 16
            r = <int>(n - off)
            memset(blk, 0, 16)
            if r:
                memcpy(blk, p + off, r)
            blk[r] = 0x01
            s[0] ^= load_le(blk, 8); s[1] ^= load_le(blk + 8, 8)
            store_le(blk, s[0], 8); store_le(blk + 8, s[1], 8)
        else:
            while n - off >= 8:
                s[0] ^= load_be(p + off, 8)
                store_be(o + off, s[0], 8)
                perm(s, 6)
                off += 8
            r = <int>(n - off)
            memset(blk, 0, 8)
            if r:
                memcpy(blk, p + off, r)
            blk[r] = 0x80
            s[0] ^= load_be(blk, 8)
            store_be(blk, s[0], 8)
        if r:
            memcpy(o + off, blk, r)
        finalize(s, k, variant, o + n)
    return bytes(out)


def aead_decrypt(const uint8_t[::1] key not None, const uint8_t[::1] nonce not None,
                 const uint8_t[::1] ad not None, const uint8_t[::1] ct not None,
                 int variant=0):
    cdef uint64_t s[5]
    cdef uint64_t k[2]
    cdef uint64_t c0, c1
    cdef Py_ssize_t n = ct.shape[0], nad = ad.shape[0], off = 0
    cdef bytearray out = bytearray(n)
    cdef uint8_t tag[16]
    cdef uint8_t* o = out
    cdef const uint8_t* c = &ct[0] if n > 0 else NULL
    cdef const uint8_t* a = &ad[0] if nad > 0 else NULL
    cdef uint8_t blk[16]
    cdef int r, i
    with nogil:
        init_aead(s, &key[0], &nonce[0], variant, k)
        absorb_ad(s, a, nad, variant)
        if variant == 0:
            while n - off >= 16:
                c0 = load_le(c + off, 8); c1 = load_le(c + off + 8, 8)
                store_le(o + off, s[0] ^ c0, 8); store_le(o + off + 8, s[1] ^ c1, 8)
                s[0] = c0; s[1] = c1
                perm(s, 8)
                off += 16
            r = <int>(n - off)
            store_le(blk, s[0], 8); store_le(blk + 8, s[1], 8)
            for i in range(r):
                o[off + i] = blk[i] ^ c[off + i]
                blk[i] = c[off + i]
            blk[r] ^= 0x01
            s[0] = load_le(blk, 8); s[1] = load_le(blk + 8, 8)
        else:
            while n - off >= 8:
                c0 = load_be(c + off, 8)
                store_be(o + off, s[0] ^ c0, 8)
                s[0] = c0
                perm(s, 6)
                off += 8
            r = <int>(n - off)
            store_be(blk, s[0], 8)
            for i in range(r):
                o[off + i] = blk[i] ^ c[off + i]
                blk[i] = c[off + i]
            blk[r] ^= 0x80
            s[0] = load_be(blk, 8)
        finalize(s, k, variant, tag)
    return bytes(out), (<char*>tag)[:16]
