"""Numba amplitude kernels.

All kernels take a bit *position* (0 = least significant bit of the basis
index), not a qubit label; the big-endian qubit mapping lives in
:mod:`qms.statevector`.
"""

import numba
import numpy as np

_JIT = dict(nogil=True, cache=True)


@numba.njit(**_JIT)
def _insert_zero(i, pos):
    lower = i & ((1 << pos) - 1)
    return ((i >> pos) << (pos + 1)) | lower


@numba.njit(**_JIT)
def apply_1q(a, pos, u00, u01, u10, u11):
    step = 1 << pos
    for i in range(a.shape[0] >> 1):
        i0 = _insert_zero(i, pos)
        i1 = i0 | step
        x = a[i0]
        y = a[i1]
        a[i0] = u00 * x + u01 * y
        a[i1] = u10 * x + u11 * y


@numba.njit(**_JIT)
def apply_controlled(a, cmask, pos, u00, u01, u10, u11):
    step = 1 << pos
    for i in range(a.shape[0] >> 1):
        i0 = _insert_zero(i, pos)
        if (i0 & cmask) != cmask:
            continue
        i1 = i0 | step
        x = a[i0]
        y = a[i1]
        a[i0] = u00 * x + u01 * y
        a[i1] = u10 * x + u11 * y


@numba.njit(**_JIT)
def apply_diag2(a, pos1, pos2, phases):
    # phases indexed by 2*bit(pos1) + bit(pos2)
    for k in range(a.shape[0]):
        sel = (((k >> pos1) & 1) << 1) | ((k >> pos2) & 1)
        a[k] *= phases[sel]


@numba.njit(**_JIT)
def _xrot_pass(re, im, lo, hi, step, c, s):
    for base in range(lo, hi, step << 1):
        for j in range(base, base + step):
            xr = re[j]
            xi = im[j]
            yr = re[j + step]
            yi = im[j + step]
            re[j] = c * xr - s * yi
            im[j] = c * xi + s * yr
            re[j + step] = c * yr - s * xi
            im[j + step] = c * yi + s * xr


@numba.njit(**_JIT)
def xrot_all_bits(re, im, nbits, c, s):
    """exp(i*beta*X) on bit positions 0..nbits-1 (c=cos beta, s=sin beta).

    Low bits are processed block-wise so each block stays in cache.
    """
    n = re.shape[0]
    blk = min(12, nbits)
    size = 1 << blk
    for lo in range(0, n, size):
        for b in range(blk):
            _xrot_pass(re, im, lo, lo + size, 1 << b, c, s)
    for b in range(blk, nbits):
        _xrot_pass(re, im, 0, n, 1 << b, c, s)


@numba.njit(**_JIT)
def diag_lookup(re, im, levels, offset, tr, ti):
    for k in range(re.shape[0]):
        i = levels[k] + offset
        x = re[k]
        y = im[k]
        re[k] = x * tr[i] - y * ti[i]
        im[k] = x * ti[i] + y * tr[i]


@numba.njit(**_JIT)
def weighted_norm(re, im, w):
    acc = 0.0
    for k in range(re.shape[0]):
        acc += (re[k] * re[k] + im[k] * im[k]) * w[k]
    return acc


def warmup():
    """Compile (or load cached) kernels so timing-sensitive callers avoid JIT cost."""
    a = np.zeros(4, dtype=np.complex128)
    a[0] = 1.0
    apply_1q(a, 0, 1.0 + 0j, 0j, 0j, 1.0 + 0j)
    apply_controlled(a, 2, 0, 1.0 + 0j, 0j, 0j, 1.0 + 0j)
    apply_diag2(a, 0, 1, np.ones(4, dtype=np.complex128))
    re = np.zeros(4)
    im = np.zeros(4)
    xrot_all_bits(re, im, 2, 1.0, 0.0)
    diag_lookup(re, im, np.zeros(4, dtype=np.int16), 0, np.ones(1), np.zeros(1))
    weighted_norm(re, im, np.zeros(4))
