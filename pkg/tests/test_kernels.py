import os
import subprocess
import sys

import pytest
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from hypothesis import given, settings, strategies as st

from mirage import _kernels
from mirage._kernels import _pysearch

try:
    from mirage._kernels import _csearch
except ImportError:  # extension not built
    _csearch = None

BACKENDS = [_pysearch] + ([_csearch] if _csearch is not None else [])


def aes(key, block):
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
@settings(max_examples=60, deadline=None)
@given(key=st.binary(min_size=16, max_size=16), block=st.binary(min_size=16, max_size=16))
def test_block_ops_match_openssl(backend, key, block):
    ct = backend.encrypt_block(key, block)
    assert ct == aes(key, block)
    assert backend.decrypt_block(key, ct) == block


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def test_search_finds_lowest_candidate(backend):
    key = bytes(range(16))
    d = 7
    low = int.from_bytes(key, "big") & ((1 << d) - 1)
    partial = (int.from_bytes(key, "big") & ~((1 << d) - 1)).to_bytes(16, "big")
    plain = b"\xaa" * 8 + b"\x55" * 8
    ct = aes(key, plain)
    mask = b"\xff" * 8 + bytes(8)
    assert backend.search_key(ct, partial, d, b"\xaa" * 8 + bytes(8), mask) == low
    # an impossible check value
    assert backend.search_key(ct, partial, d, b"\x00" * 16, b"\xff" * 16) == -1


def test_backend_selection_env():
    code = "from mirage import _kernels; print(_kernels.BACKEND)"
    env = dict(os.environ, MIRAGE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
    assert _kernels.BACKEND in ("compiled", "python")


@pytest.mark.skipif(_csearch is None, reason="compiled extension not built")
def test_compiled_backend_is_default():
    assert _kernels.BACKEND == "compiled"
