# Compiled twin of _hotpath_py: identical rank keys, identical greedy
# fill, C loops and an inline sort instead of numpy temporaries.

from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef long long UTIL_SCALE = <long long>1 << 40
cdef int ID_BITS = 20
cdef long long ID_MASK = (<long long>1 << 20) - 1

ORDER_H2L = 0
ORDER_L2H = 1
ORDER_NPA = 2


cdef void _insertion_sort(long long* a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef long long key
    for i in range(1, n):
        key = a[i]
        j = i - 1
        while j >= 0 and a[j] > key:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = key


cdef void _sort_keys(long long* a, Py_ssize_t n) noexcept nogil:
    # quicksort, median-of-three pivot, insertion sort below 24 items;
    # keys are unique so the order is total and deterministic
    cdef Py_ssize_t i, j, mid
    cdef long long pivot, t
    while n > 24:
        mid = n >> 1
        if a[0] > a[mid]:
            t = a[0]; a[0] = a[mid]; a[mid] = t
        if a[0] > a[n - 1]:
            t = a[0]; a[0] = a[n - 1]; a[n - 1] = t
        if a[mid] > a[n - 1]:
            t = a[mid]; a[mid] = a[n - 1]; a[n - 1] = t
        pivot = a[mid]
        i = -1
        j = n
        while True:
            i += 1
            while a[i] < pivot:
                i += 1
            j -= 1
            while a[j] > pivot:
                j -= 1
            if i >= j:
                break
            t = a[i]; a[i] = a[j]; a[j] = t
        if j + 1 <= n - (j + 1):
            _sort_keys(a, j + 1)
            a += j + 1
            n -= j + 1
        else:
            _sort_keys(a + j + 1, n - (j + 1))
            n = j + 1
    _insertion_sort(a, n)


cdef long long* _build_keys(const long long* caps_cpu,
                            const long long* used_cpu,
                            int mode, Py_ssize_t n) except NULL:
    cdef long long* keys = <long long*>malloc(n * sizeof(long long))
    if keys == NULL:
        raise MemoryError()
    cdef Py_ssize_t h
    cdef long long base, ukey
    for h in range(n):
        ukey = (used_cpu[h] * UTIL_SCALE) // caps_cpu[h]
        if mode == 0:  # busiest first, idle hosts last
            base = UTIL_SCALE - ukey if used_cpu[h] > 0 else UTIL_SCALE + 1
        elif mode == 1:  # least busy active first, idle hosts last
            base = ukey if used_cpu[h] > 0 else UTIL_SCALE + 1
        else:  # emptiest first, idle hosts included up front
            base = ukey
        keys[h] = (base << ID_BITS) | <long long>h
    return keys


def rank_order(const long long[::1] caps_cpu,
               const long long[::1] used_cpu,
               int mode):
    """Host ids from most to least preferred under the given mode."""
    if mode < 0 or mode > 2:
        raise ValueError(f"unknown order mode {mode}")
    cdef Py_ssize_t n = caps_cpu.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
    if n == 0:
        return out
    cdef long long* keys = _build_keys(&caps_cpu[0], &used_cpu[0], mode, n)
    _sort_keys(keys, n)
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = keys[i] & ID_MASK
    free(keys)
    return out


def pack(const long long[::1] caps_cpu,
         const long long[:, ::1] residual,
         demand,
         long long count,
         int mode):
    """Greedy first-fit of identical VMs over ranked hosts; see _hotpath_py."""
    if mode < 0 or mode > 2:
        raise ValueError(f"unknown order mode {mode}")
    cdef long long d0 = demand[0]
    cdef long long d1 = demand[1]
    cdef long long d2 = demand[2]
    cdef long long d3 = demand[3]
    if d0 <= 0 and d1 <= 0 and d2 <= 0 and d3 <= 0:
        raise ValueError("cannot pack VMs with an all-zero demand vector")
    cdef Py_ssize_t n = caps_cpu.shape[0]
    if n == 0:
        return None
    cdef long long* used = <long long*>malloc(n * sizeof(long long))
    if used == NULL:
        raise MemoryError()
    cdef Py_ssize_t h
    for h in range(n):
        used[h] = caps_cpu[h] - residual[h, 0]
    cdef long long* keys
    try:
        keys = _build_keys(&caps_cpu[0], used, mode, n)
    finally:
        free(used)
    _sort_keys(keys, n)

    segments = []
    cdef long long remaining = count
    cdef long long fit, take
    cdef Py_ssize_t i
    for i in range(n):
        h = <Py_ssize_t>(keys[i] & ID_MASK)
        fit = -1
        if d0 > 0:
            fit = residual[h, 0] // d0
        if d1 > 0:
            take = residual[h, 1] // d1
            if fit < 0 or take < fit:
                fit = take
        if d2 > 0:
            take = residual[h, 2] // d2
            if fit < 0 or take < fit:
                fit = take
        if d3 > 0:
            take = residual[h, 3] // d3
            if fit < 0 or take < fit:
                fit = take
        if fit > remaining:
            fit = remaining
        if fit > 0:
            segments.append((<long long>h, fit))
            remaining -= fit
        if remaining == 0:
            break
    free(keys)
    if remaining > 0:
        return None
    return segments
