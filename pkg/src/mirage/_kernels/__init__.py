"""Hot kernels with a compiled backend and a pure-Python fallback.

The compiled module is used when importable unless MIRAGE_PURE_PYTHON=1.
"""
import os

from . import _pysearch as python_backend

compiled_backend = None
if os.environ.get("MIRAGE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _csearch as compiled_backend
    except ImportError:
        compiled_backend = None

_active = compiled_backend or python_backend
BACKEND = "compiled" if compiled_backend is not None else "python"

search_key = _active.search_key
encrypt_block = _active.encrypt_block
decrypt_block = _active.decrypt_block
