# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled straight-line evaluator for expression programs."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

DEF LOADC = 0
DEF LOADX = 1
DEF ADD = 2
DEF MUL = 3
DEF DIV = 4
DEF POW = 5
DEF SQRT = 6
DEF NEG = 7


cdef inline double _ipow(double x, int k) nogil:
    cdef double acc = 1.0
    while k > 0:
        if k & 1:
            acc *= x
        x *= x
        k >>= 1
    return acc


DEF BLOCK = 16


cdef int _scalar(const int[::1] ops, const int[::1] a, const int[::1] b, const double[::1] k,
                 const double[:, ::1] pts, Py_ssize_t s, double* reg, Py_ssize_t* instr) nogil:
    cdef Py_ssize_t i, n = ops.shape[0]
    cdef int op
    for i in range(n):
        op = ops[i]
        if op == LOADC:
            reg[i] = k[i]
        elif op == LOADX:
            reg[i] = pts[s, a[i]]
        elif op == ADD:
            reg[i] = reg[a[i]] + reg[b[i]]
        elif op == MUL:
            reg[i] = reg[a[i]] * reg[b[i]]
        elif op == DIV:
            if reg[b[i]] == 0.0:
                instr[0] = i
                return 1
            reg[i] = reg[a[i]] / reg[b[i]]
        elif op == POW:
            reg[i] = _ipow(reg[a[i]], b[i])
        elif op == SQRT:
            if reg[a[i]] < 0.0:
                instr[0] = i
                return 2
            reg[i] = sqrt(reg[a[i]])
        else:
            reg[i] = -reg[a[i]]
    return 0


def run(const int[::1] ops, const int[::1] a, const int[::1] b,
        const double[::1] k, const int[::1] outs, const double[:, ::1] pts):
    """Evaluate the program at every row of ``pts``.

    Samples go through in blocks so opcode dispatch is paid once per block.
    Returns ``(values, status, sample, instr)``; status 0 is success,
    1 a zero denominator, 2 a negative square-root argument.
    """
    cdef Py_ssize_t S = pts.shape[0]
    cdef Py_ssize_t n = ops.shape[0]
    cdef Py_ssize_t m = outs.shape[0]
    cdef Py_ssize_t s0, bs, s, i, j, q, ra, rb
    cdef Py_ssize_t instr = -1
    cdef int op, e, status = 0
    cdef bint bad
    cdef double* r
    values = np.empty((S, m), dtype=np.float64)
    cdef double[:, ::1] out = values
    cdef double[:, ::1] reg = np.empty((max(n, 1), BLOCK), dtype=np.float64)
    with nogil:
        s0 = 0
        while s0 < S:
            bs = min(BLOCK, S - s0)
            bad = False
            for i in range(n):
                op = ops[i]
                r = &reg[i, 0]
                ra = a[i]
                rb = b[i]
                if op == LOADC:
                    for q in range(bs):
                        r[q] = k[i]
                elif op == LOADX:
                    for q in range(bs):
                        r[q] = pts[s0 + q, ra]
                elif op == ADD:
                    for q in range(bs):
                        r[q] = reg[ra, q] + reg[rb, q]
                elif op == MUL:
                    for q in range(bs):
                        r[q] = reg[ra, q] * reg[rb, q]
                elif op == DIV:
                    for q in range(bs):
                        if reg[rb, q] == 0.0:
                            bad = True
                    if bad:
                        break
                    for q in range(bs):
                        r[q] = reg[ra, q] / reg[rb, q]
                elif op == POW:
                    for q in range(bs):
                        r[q] = _ipow(reg[ra, q], <int>rb)
                elif op == SQRT:
                    for q in range(bs):
                        if reg[ra, q] < 0.0:
                            bad = True
                    if bad:
                        break
                    for q in range(bs):
                        r[q] = sqrt(reg[ra, q])
                else:
                    for q in range(bs):
                        r[q] = -reg[ra, q]
            if bad:
                break
            for q in range(bs):
                for j in range(m):
                    out[s0 + q, j] = reg[outs[j], q]
            s0 += bs
    if s0 < S:
        # rescan the failing block sample by sample so the first bad sample is reported
        scratch = np.empty(max(n, 1), dtype=np.float64)
        for s in range(s0, min(s0 + BLOCK, S)):
            e = _scalar(ops, a, b, k, pts, s, <double*>cnp.PyArray_DATA(scratch), &instr)
            if e:
                return values, e, s, instr
        raise AssertionError("block failure vanished on rescan")
    return values, 0, -1, -1
