# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled state-vector kernels.

Bit positions are counted from the least significant bit of the flat
amplitude index. All kernels mutate ``amps`` in place except ``permute``,
which scatters into ``out``. Loops run over contiguous inner blocks below the
lowest fixed bit so that gates on high qubits touch memory sequentially.
"""

from libc.stdlib cimport malloc, free

ctypedef long long i64


cdef inline i64 _insert(i64 j, const i64* pos, int k) noexcept nogil:
    # pos sorted ascending; inserts a zero bit at each position
    cdef int a
    cdef i64 low
    for a in range(k):
        low = j & ((<i64>1 << pos[a]) - 1)
        j = ((j >> pos[a]) << (pos[a] + 1)) | low
    return j


cdef int _fill_sorted(i64* dst, object src):
    cdef int a = 0
    for v in sorted(src):
        dst[a] = v
        a += 1
    return a


def apply_1q(double complex[::1] amps, int target, u,
             controls_pos, controls_val):
    """Apply the 2x2 matrix ``u`` on bit ``target`` where every control bit
    matches its value."""
    cdef double complex u00 = u[0][0], u01 = u[0][1]
    cdef double complex u10 = u[1][0], u11 = u[1][1]
    cdef int k = len(controls_pos) + 1
    cdef i64* pos = <i64*> malloc(k * sizeof(i64))
    cdef i64 base = 0, tbit = <i64>1 << target
    cdef i64 size = amps.shape[0], outer, run, jo, b, t, i0, i1
    cdef int low, nq
    cdef double complex a, c
    try:
        _fill_sorted(pos, list(controls_pos) + [target])
        for p, v in zip(controls_pos, controls_val):
            if v:
                base |= <i64>1 << p
        nq = size.bit_length() - 1
        low = pos[0]
        run = <i64>1 << low
        outer = <i64>1 << (nq - k - low)
        with nogil:
            for jo in range(outer):
                b = _insert(jo << low, pos, k) | base
                for t in range(run):
                    i0 = b + t
                    i1 = i0 | tbit
                    a = amps[i0]
                    c = amps[i1]
                    amps[i0] = u00 * a + u01 * c
                    amps[i1] = u10 * a + u11 * c
    finally:
        free(pos)


def apply_phase(double complex[::1] amps, positions, values,
                double complex phase):
    """Multiply by ``phase`` every amplitude whose bits match the pattern."""
    cdef int k = len(positions)
    cdef i64* pos = <i64*> malloc((k + 1) * sizeof(i64))
    cdef i64 base = 0
    cdef i64 size = amps.shape[0], outer, run, jo, b, t
    cdef int low, nq
    try:
        _fill_sorted(pos, positions)
        for p, v in zip(positions, values):
            if v:
                base |= <i64>1 << p
        nq = size.bit_length() - 1
        low = pos[0] if k else nq
        run = <i64>1 << low
        outer = <i64>1 << (nq - k - low)
        with nogil:
            for jo in range(outer):
                b = _insert(jo << low, pos, k) | base
                for t in range(run):
                    amps[b + t] = amps[b + t] * phase
    finally:
        free(pos)


def apply_diagonal(double complex[::1] amps, positions,
                   const double complex[::1] table):
    """Multiply amplitude ``i`` by ``table[s]`` where bit ``a`` of ``s`` is
    bit ``positions[a]`` of ``i``."""
    cdef int k = len(positions), a
    cdef i64* pos = <i64*> malloc((k + 1) * sizeof(i64))
    cdef i64 size = amps.shape[0], run, b, t, s
    cdef int low
    cdef double complex ph
    try:
        low = 63
        for a in range(k):
            pos[a] = positions[a]
            if pos[a] < low:
                low = pos[a]
        if k == 0:
            low = size.bit_length() - 1
        run = <i64>1 << low
        with nogil:
            b = 0
            while b < size:
                s = 0
                for a in range(k):
                    s |= ((b >> pos[a]) & 1) << a
                ph = table[s]
                if ph.real != 1.0 or ph.imag != 0.0:
                    for t in range(run):
                        amps[b + t] = amps[b + t] * ph
                b += run
    finally:
        free(pos)


def permute(const double complex[::1] amps, double complex[::1] out,
            shifts, widths, const i64[::1] table):
    """Scatter ``amps`` into ``out`` applying ``table`` to the sub-index
    formed by the listed bit ranges (first range most significant)."""
    cdef int k = len(shifts), a
    cdef i64* sh = <i64*> malloc(k * sizeof(i64))
    cdef i64* wd = <i64*> malloc(k * sizeof(i64))
    cdef i64* mk = <i64*> malloc(k * sizeof(i64))
    cdef i64 involved = 0, size = amps.shape[0], b, t, sub, dst, run
    cdef int low = 63
    try:
        for a in range(k):
            sh[a] = shifts[a]
            wd[a] = widths[a]
            mk[a] = (<i64>1 << wd[a]) - 1
            involved |= mk[a] << sh[a]
            if sh[a] < low:
                low = sh[a]
        run = <i64>1 << low
        with nogil:
            b = 0
            while b < size:
                sub = 0
                for a in range(k):
                    sub = (sub << wd[a]) | ((b >> sh[a]) & mk[a])
                t = table[sub]
                dst = b & ~involved
                for a in range(k - 1, -1, -1):
                    dst |= (t & mk[a]) << sh[a]
                    t >>= wd[a]
                if dst == b:
                    for t in range(run):
                        out[b + t] = amps[b + t]
                else:
                    for t in range(run):
                        out[dst + t] = amps[b + t]
                b += run
    finally:
        free(sh)
        free(wd)
        free(mk)
