"""Compile expression batches into straight-line programs and run them.

Shared subexpressions become a single instruction because nodes are
hash-consed. The compiled kernel is used when it imports; setting
``ODDGEOM_BACKEND=python`` forces the numpy evaluator.
"""
from __future__ import annotations

import os

import numpy as np

from . import nodes as N
from . import _vm_py

try:
    from . import _vm as _vm_c
except ImportError:  # extension not built
    _vm_c = None

LOADC, LOADX, ADD, MUL, DIV, POW, SQRT, NEG = range(8)

_BACKENDS = {"python": _vm_py}
if _vm_c is not None:
    _BACKENDS["compiled"] = _vm_c

_requested = os.environ.get("ODDGEOM_BACKEND", "").strip().lower()
if _requested and _requested not in ("python", "compiled"):
    raise ImportError(f"ODDGEOM_BACKEND must be 'python' or 'compiled', got {_requested!r}")
_active = _requested or ("compiled" if _vm_c is not None else "python")
if _active not in _BACKENDS:
    raise ImportError("ODDGEOM_BACKEND=compiled but the extension is not built")


def backend() -> str:
    return _active


def available_backends() -> tuple:
    return tuple(sorted(_BACKENDS))


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    _active = name


class DomainError(ArithmeticError):
    """Evaluation left the domain; carries the offending point."""

    def __init__(self, kind: str, point: dict, sample_index: int):
        self.kind = kind
        self.point = point
        self.sample_index = sample_index
        where = ", ".join(f"{k}={v!r}" for k, v in point.items())
        super().__init__(f"{kind} at ({where})")


class Program:
    """A batch of expressions over fixed coordinates, ready to evaluate."""

    def __init__(self, outputs, coords, constants=None):
        self.coords = tuple(coords)
        constants = dict(constants or {})
        index = {c: i for i, c in enumerate(self.coords)}
        ops, aa, bb, kk = [], [], [], []
        slot: dict = {}

        def emit(op, a=0, b=0, k=0.0):
            ops.append(op)
            aa.append(a)
            bb.append(b)
            kk.append(k)
            return len(ops) - 1

        outputs = [N.lift(e) for e in outputs]
        for node in N.postorder(outputs):
            op = node.op
            if op == N.CONST:
                r = emit(LOADC, k=node.value)
            elif op == N.SYM:
                name = node.value
                if name in index:
                    r = emit(LOADX, a=index[name])
                elif name in constants:
                    r = emit(LOADC, k=float(constants[name]))
                else:
                    raise KeyError(f"symbol {name!r} is neither a coordinate nor a constant")
            elif op in (N.ADD, N.MUL):
                code = ADD if op == N.ADD else MUL
                args = node.args
                r = emit(code, slot[id(args[0])], slot[id(args[1])])
                for extra in args[2:]:
                    r = emit(code, r, slot[id(extra)])
            elif op == N.DIV:
                r = emit(DIV, slot[id(node.args[0])], slot[id(node.args[1])])
            elif op == N.POW:
                r = emit(POW, slot[id(node.args[0])], node.value)
            elif op == N.SQRT:
                r = emit(SQRT, slot[id(node.args[0])])
            else:
                r = emit(NEG, slot[id(node.args[0])])
            slot[id(node)] = r
        self.ops = np.asarray(ops, dtype=np.int32)
        self.a = np.asarray(aa, dtype=np.int32)
        self.b = np.asarray(bb, dtype=np.int32)
        self.k = np.asarray(kk, dtype=np.float64)
        self.outs = np.asarray([slot[id(e)] for e in outputs], dtype=np.int32)
        self._kinds = {1: "division by zero", 2: "square root of a negative number"}

    def __len__(self):
        return len(self.ops)

    def run(self, points) -> np.ndarray:
        """Values of every output at every point: shape (samples, outputs)."""
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[1] != len(self.coords):
            raise ValueError(f"points have {pts.shape[1]} coordinates, expected {len(self.coords)}")
        vm = _BACKENDS[_active]
        values, status, s, _ = vm.run(self.ops, self.a, self.b, self.k, self.outs, pts)
        if status:
            point = {c: float(v) for c, v in zip(self.coords, pts[s])}
            raise DomainError(self._kinds[status], point, int(s))
        return np.asarray(values)
