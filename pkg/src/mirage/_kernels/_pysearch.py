"""Pure-Python key search backed by the `cryptography` AES primitive."""
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes


def encrypt_block(key: bytes, block: bytes) -> bytes:
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def decrypt_block(key: bytes, block: bytes) -> bytes:
    dec = Cipher(algorithms.AES(key), modes.ECB()).decryptor()
    return dec.update(block) + dec.finalize()


def search_key(cipher: bytes, partial_key: bytes, d: int, want: bytes, mask: bytes) -> int:
    base = int.from_bytes(partial_key, "big")
    want_i = int.from_bytes(want, "big")
    mask_i = int.from_bytes(mask, "big")
    for k in range(1 << d):
        key = (base | k).to_bytes(16, "big")
        dec = Cipher(algorithms.AES(key), modes.ECB()).decryptor()
        pt = int.from_bytes(dec.update(cipher), "big")
        if pt & mask_i == want_i:
            return k
    return -1
