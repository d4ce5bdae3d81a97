"""Atomic memory operations for use inside nogil numba kernels.

numba's CPU target does not expose atomics, so these intrinsics emit the
LLVM ``atomicrmw`` / ``cmpxchg`` / atomic load instructions directly.  All
of them operate on an element of a 1-D contiguous numpy array, which is how
the shared search tree stores its counters.

Orderings: plain counters (visits, rewards, virtual loss, budget countdown)
use ``monotonic``; publication of expanded child lists uses release stores
paired with acquire loads of the expansion state.
"""

import ctypes
import ctypes.util

from numba import types
from numba.core import cgutils
from numba.extending import intrinsic

__all__ = [
    "atomic_add_i32",
    "atomic_add_i64",
    "atomic_cas_i32",
    "atomic_xchg_i32_release",
    "atomic_load_i32_acquire",
    "sched_yield",
]


def _load_sched_yield():
    """POSIX sched_yield as a ctypes function callable from nopython kernels.

    Used by heavily contended spin loops (the expansion race harness) so
    waiters hand their timeslice back when threads outnumber cores.
    """
    try:
        libc = ctypes.CDLL(ctypes.util.find_library("c") or "libc.so.6", use_errno=False)
        fn = libc.sched_yield
        fn.restype = ctypes.c_int
        fn.argtypes = []
        return fn
    except (OSError, AttributeError):
        return None


sched_yield = _load_sched_yield()


def _element_ptr(context, builder, array_type, array_value, index_value):
    ary = context.make_array(array_type)(context, builder, array_value)
    return cgutils.get_item_pointer(
        context, builder, array_type, ary, [index_value], wraparound=False
    )


@intrinsic
def atomic_add_i32(typingctx, arr, idx, val):
    """``old = arr[idx]; arr[idx] += val`` as one atomic op; returns old."""
    sig = types.int32(arr, types.intp, types.int32)

    def codegen(context, builder, signature, args):
        ptr = _element_ptr(context, builder, signature.args[0], args[0], args[1])
        return builder.atomic_rmw("add", ptr, args[2], "monotonic")

    return sig, codegen


@intrinsic
def atomic_add_i64(typingctx, arr, idx, val):
    sig = types.int64(arr, types.intp, types.int64)

    def codegen(context, builder, signature, args):
        ptr = _element_ptr(context, builder, signature.args[0], args[0], args[1])
        return builder.atomic_rmw("add", ptr, args[2], "monotonic")

    return sig, codegen


@intrinsic
def atomic_cas_i32(typingctx, arr, idx, expected, desired):
    """Strong compare-exchange on arr[idx]; returns the value observed."""
    sig = types.int32(arr, types.intp, types.int32, types.int32)

    def codegen(context, builder, signature, args):
        ptr = _element_ptr(context, builder, signature.args[0], args[0], args[1])
        pair = builder.cmpxchg(ptr, args[2], args[3], "seq_cst", "seq_cst")
        return builder.extract_value(pair, 0)

    return sig, codegen


@intrinsic
def atomic_xchg_i32_release(typingctx, arr, idx, val):
    """Atomic store-with-release of val into arr[idx]; returns old value."""
    sig = types.int32(arr, types.intp, types.int32)

    def codegen(context, builder, signature, args):
        ptr = _element_ptr(context, builder, signature.args[0], args[0], args[1])
        return builder.atomic_rmw("xchg", ptr, args[2], "release")

    return sig, codegen


@intrinsic
def atomic_load_i32_acquire(typingctx, arr, idx):
    sig = types.int32(arr, types.intp)

    def codegen(context, builder, signature, args):
        ptr = _element_ptr(context, builder, signature.args[0], args[0], args[1])
        return builder.load_atomic(ptr, "acquire", 4)

    return sig, codegen
