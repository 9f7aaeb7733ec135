"""Process-level tuning for the training loop.

A training epoch allocates and frees the same few megabyte-sized arrays
thousands of times. With glibc's defaults those buffers go through mmap and
are returned to the kernel on every free, so each epoch pays for fresh
zeroed pages. Raising the mmap and trim thresholds keeps them on the heap.
"""

import ctypes
import sys

_M_TRIM_THRESHOLD = -1
_M_MMAP_THRESHOLD = -3
_THRESHOLD = 1 << 30

_state = {"done": False, "applied": False}


def tune_allocator():
    """Apply the allocator settings once; a no-op off glibc. Returns whether they took effect."""
    if _state["done"]:
        return _state["applied"]
    _state["done"] = True
    if not sys.platform.startswith("linux"):
        return False
    try:
        libc = ctypes.CDLL("libc.so.6")
        ok = libc.mallopt(_M_MMAP_THRESHOLD, _THRESHOLD) == 1
        ok = libc.mallopt(_M_TRIM_THRESHOLD, _THRESHOLD) == 1 and ok
    except (OSError, AttributeError):
        return False
    _state["applied"] = ok
    return ok
