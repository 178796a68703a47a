# cython: language_level=3
"""Compiled AES-128 key search."""
from libc.stdint cimport uint8_t, int64_t

cdef extern from "aes128.h":
    void mirage_aes_init()
    void mirage_aes128_expand(const uint8_t* key, uint8_t* rk)
    void mirage_aes128_encrypt(const uint8_t* rk, const uint8_t* inp, uint8_t* out)
    void mirage_aes128_decrypt(const uint8_t* rk, const uint8_t* inp, uint8_t* out)
    int64_t mirage_search_key(const uint8_t* cipher, const uint8_t* partial, int d,
                              const uint8_t* want, const uint8_t* mask) nogil

mirage_aes_init()


def _check16(b, name):
    if len(b) != 16:
        raise ValueError(f"{name} must be 16 bytes")


def encrypt_block(bytes key, bytes block):
    cdef uint8_t rk[176]
    cdef uint8_t out[16]
    _check16(key, "key")
    _check16(block, "block")
    mirage_aes128_expand(key, rk)
    mirage_aes128_encrypt(rk, block, out)
    return bytes(out[:16])


def decrypt_block(bytes key, bytes block):
    cdef uint8_t rk[176]
    cdef uint8_t out[16]
    _check16(key, "key")
    _check16(block, "block")
    mirage_aes128_expand(key, rk)
    mirage_aes128_decrypt(rk, block, out)
    return bytes(out[:16])


def search_key(bytes cipher, bytes partial_key, int d, bytes want, bytes mask):
    """Index of the first candidate key whose plaintext matches, or -1."""
    cdef int64_t k
    cdef const uint8_t* c = cipher
    cdef const uint8_t* p = partial_key
    cdef const uint8_t* w = want
    cdef const uint8_t* m = mask
    for b, name in ((cipher, "cipher"), (partial_key, "partial_key"), (want, "want"), (mask, "mask")):
        _check16(b, name)
    if not 0 <= d <= 62:
        raise ValueError("d out of range")
    with nogil:
        k = mirage_search_key(c, p, d, w, m)
    return k
