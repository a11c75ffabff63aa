"""Numpy evaluator with the same contract as the compiled ``_vm.run``."""
import numpy as np

LOADC, LOADX, ADD, MUL, DIV, POW, SQRT, NEG = range(8)


def _ipow(x, k):
    # same squaring order as the compiled kernel, so results match bitwise
    acc = np.ones_like(x)
    while k > 0:
        if k & 1:
            acc = acc * x
        x = x * x
        k >>= 1
    return acc


def _first_failure(ops, a, b, k, outs, pts):
    for s in range(pts.shape[0]):
        _, status, _, instr = run(ops, a, b, k, outs, pts[s:s + 1])
        if status:
            return status, s, instr
    raise AssertionError("failure vanished on rerun")


def run(ops, a, b, k, outs, pts):
    S = pts.shape[0]
    reg = [None] * len(ops)
    with np.errstate(all="ignore"):
        for i, op in enumerate(ops):
            if op == LOADC:
                reg[i] = np.full(S, k[i])
            elif op == LOADX:
                reg[i] = pts[:, a[i]]
            elif op == ADD:
                reg[i] = reg[a[i]] + reg[b[i]]
            elif op == MUL:
                reg[i] = reg[a[i]] * reg[b[i]]
            elif op == DIV:
                den = reg[b[i]]
                bad = np.flatnonzero(den == 0.0)
                if bad.size:
                    if S > 1:
                        return (np.empty((S, len(outs))),
                                *_first_failure(ops, a, b, k, outs, pts))
                    return np.empty((S, len(outs))), 1, 0, i
                reg[i] = reg[a[i]] / den
            elif op == POW:
                reg[i] = _ipow(reg[a[i]], int(b[i]))
            elif op == SQRT:
                bad = np.flatnonzero(reg[a[i]] < 0.0)
                if bad.size:
                    if S > 1:
                        return (np.empty((S, len(outs))),
                                *_first_failure(ops, a, b, k, outs, pts))
                    return np.empty((S, len(outs))), 2, 0, i
                reg[i] = np.sqrt(reg[a[i]])
            else:
                reg[i] = -reg[a[i]]
    values = np.empty((S, len(outs)))
    for j, slot in enumerate(outs):
        values[:, j] = reg[slot]
    return values, 0, -1, -1
