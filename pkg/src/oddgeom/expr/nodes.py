"""Hash-consed scalar expression DAG with exact partial derivatives.

Structurally equal expressions are the same Python object, so identity
comparison and ``id``-based hashing are sound and memoisation is cheap.
Simplification is limited to constant folding and 0/1 identities.
"""
from __future__ import annotations

import math
import weakref

CONST, SYM, ADD, MUL, DIV, POW, SQRT, NEG = range(8)
OP_NAMES = ("const", "sym", "add", "mul", "div", "pow", "sqrt", "neg")


class Expr:
    """Immutable expression node. Build with the module constructors."""

    __slots__ = ("op", "args", "value", "__weakref__")

    def __init__(self, op: int, args: tuple, value):
        self.op = op
        self.args = args
        self.value = value

    def __reduce__(self):
        # rebuild through the constructors so unpickled nodes are interned
        return (_rebuild, (self.op, self.args, self.value))

    # arithmetic sugar; python numbers are lifted to constants
    def __add__(self, other):
        return add(self, lift(other))

    def __radd__(self, other):
        return add(lift(other), self)

    def __sub__(self, other):
        return add(self, neg(lift(other)))

    def __rsub__(self, other):
        return add(lift(other), neg(self))

    def __mul__(self, other):
        return mul(self, lift(other))

    def __rmul__(self, other):
        return mul(lift(other), self)

    def __truediv__(self, other):
        return div(self, lift(other))

    def __rtruediv__(self, other):
        return div(lift(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        if not isinstance(k, int) or isinstance(k, bool):
            return NotImplemented
        return power(self, k)

    @property
    def is_const(self) -> bool:
        return self.op == CONST

    @property
    def is_zero(self) -> bool:
        return self.op == CONST and self.value == 0.0

    @property
    def is_one(self) -> bool:
        return self.op == CONST and self.value == 1.0

    def __repr__(self):
        return f"Expr({to_text(self)!r})"


_table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


def _intern(op: int, args: tuple = (), value=None) -> Expr:
    key = (op, value, args)
    node = _table.get(key)
    if node is None:
        node = Expr(op, args, value)
        _table[key] = node
    return node


def _rebuild(op, args, value):
    return _BUILDERS[op](args, value)


def const(v) -> Expr:
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"non-finite constant {v!r}")
    if v == 0.0:
        v = 0.0  # fold -0.0
    return _intern(CONST, (), v)


ZERO = const(0.0)
ONE = const(1.0)


def sym(name: str) -> Expr:
    return _intern(SYM, (), str(name))


def lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return const(x)
    expr = getattr(x, "expr", None)
    if isinstance(expr, Expr):
        return expr
    raise TypeError(f"cannot use {type(x).__name__} as an expression")


def add(*terms) -> Expr:
    flat = []
    c = 0.0
    stack = [lift(t) for t in reversed(terms)]
    while stack:
        t = stack.pop()
        if t.op == ADD:
            stack.extend(reversed(t.args))
        elif t.op == CONST:
            c += t.value
        else:
            flat.append(t)
    if c != 0.0:
        flat.append(const(c))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return _intern(ADD, tuple(flat))


def _mul_node(factors: list) -> Expr:
    if not factors:
        return ONE
    if len(factors) == 1:
        return factors[0]
    return _intern(MUL, tuple(factors))


def mul(*factors) -> Expr:
    flat = []
    c = 1.0
    stack = [lift(f) for f in reversed(factors)]
    while stack:
        f = stack.pop()
        if f.op == MUL:
            stack.extend(reversed(f.args))
        elif f.op == NEG:
            c = -c
            stack.append(f.args[0])
        elif f.op == CONST:
            c *= f.value
        else:
            flat.append(f)
    if c == 0.0:
        return ZERO
    if not flat:
        return const(c)
    if c == 1.0:
        return _mul_node(flat)
    if c == -1.0:
        return _intern(NEG, (_mul_node(flat),))
    return _intern(MUL, (const(c), *flat))


def neg(a) -> Expr:
    a = lift(a)
    if a.op == CONST:
        return const(-a.value)
    if a.op == NEG:
        return a.args[0]
    if a.op == MUL and a.args[0].op == CONST:
        return mul(const(-a.args[0].value), *a.args[1:])
    return _intern(NEG, (a,))


def div(a, b) -> Expr:
    a, b = lift(a), lift(b)
    if b.op == CONST:
        if b.value == 1.0:
            return a
        if b.value != 0.0 and a.op == CONST:
            return const(a.value / b.value)
    if a.is_zero:
        return ZERO
    return _intern(DIV, (a, b))


def power(a, k: int) -> Expr:
    a = lift(a)
    k = int(k)
    if k < 0:
        raise ValueError("only non-negative integer exponents are supported")
    if k == 0:
        return ONE
    if k == 1:
        return a
    if a.op == CONST:
        return const(a.value ** k)
    if a.op == POW:
        return _intern(POW, (a.args[0],), a.value * k)
    return _intern(POW, (a,), k)


def sqrt(a) -> Expr:
    a = lift(a)
    if a.op == CONST and a.value >= 0.0:
        return const(math.sqrt(a.value))
    return _intern(SQRT, (a,))


_BUILDERS = {
    CONST: lambda args, v: const(v),
    SYM: lambda args, v: sym(v),
    ADD: lambda args, v: add(*args),
    MUL: lambda args, v: mul(*args),
    DIV: lambda args, v: div(*args),
    POW: lambda args, v: power(args[0], v),
    SQRT: lambda args, v: sqrt(args[0]),
    NEG: lambda args, v: neg(args[0]),
}


def postorder(roots, skip=None) -> list:
    """Every node reachable from ``roots``, children before parents.

    Nodes for which ``skip(node)`` is true are neither listed nor entered.
    """
    seen = set()
    order = []
    for root in roots:
        if id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            if skip is not None and skip(node):
                continue
            stack.append((node, True))
            for ch in node.args:
                if id(ch) not in seen:
                    stack.append((ch, False))
    return order


def free_symbols(e: Expr) -> set:
    return {n.value for n in postorder([e]) if n.op == SYM}


def node_count(e: Expr) -> int:
    return len(postorder([e]))


# derivative cache: (node, variable) -> derivative node
_dcache: dict = {}


def diff(e: Expr, var: str) -> Expr:
    """Exact partial derivative with respect to the symbol ``var``."""
    hit = _dcache.get((e, var))
    if hit is not None:
        return hit
    for node in postorder([e], skip=lambda n: (n, var) in _dcache):
        _dcache[(node, var)] = _diff_node(node, var)
    return _dcache[(e, var)]


def _d(node, var):
    return _dcache[(node, var)]


def _diff_node(node: Expr, var: str) -> Expr:
    op = node.op
    if op == CONST:
        return ZERO
    if op == SYM:
        return ONE if node.value == var else ZERO
    if op == ADD:
        return add(*[_d(t, var) for t in node.args])
    if op == MUL:
        fs = node.args
        terms = []
        for i, f in enumerate(fs):
            df = _d(f, var)
            if df.is_zero:
                continue
            terms.append(mul(*fs[:i], df, *fs[i + 1:]))
        return add(*terms)
    if op == DIV:
        a, b = node.args
        da, db = _d(a, var), _d(b, var)
        if db.is_zero:
            return div(da, b)
        return add(div(da, b), neg(div(mul(a, db), power(b, 2))))
    if op == POW:
        a = node.args[0]
        da = _d(a, var)
        if da.is_zero:
            return ZERO
        k = node.value
        return mul(const(k), power(a, k - 1), da)
    if op == SQRT:
        da = _d(node.args[0], var)
        if da.is_zero:
            return ZERO
        return div(da, mul(const(2.0), node))
    if op == NEG:
        return neg(_d(node.args[0], var))
    raise AssertionError(op)


def clear_caches() -> None:
    _dcache.clear()


def substitute(e: Expr, mapping: dict) -> Expr:
    """Replace symbols by expressions (mapping: name -> Expr)."""
    out: dict = {}
    for node in postorder([e]):
        op = node.op
        if op == SYM:
            out[id(node)] = lift(mapping.get(node.value, node))
        elif op == CONST:
            out[id(node)] = node
        else:
            args = tuple(out[id(a)] for a in node.args)
            out[id(node)] = _BUILDERS[op](args, node.value)
    return out[id(e)]


# printing -----------------------------------------------------------------

_P_SUM, _P_TERM, _P_FACTOR, _P_BASE = 1, 2, 3, 4


def _fmt_const(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(e: Expr) -> str:
    """Render in the parser's grammar; parse(to_text(e)) evaluates like e."""
    memo: dict = {}
    for node in postorder([e]):
        memo[id(node)] = _render(node, memo)
    return memo[id(e)][0]


def _wrap(entry, need: int) -> str:
    text, prec = entry
    return text if prec >= need else f"({text})"


def _render(node: Expr, memo: dict):
    op = node.op
    if op == CONST:
        return _fmt_const(node.value), _P_BASE
    if op == SYM:
        return node.value, _P_BASE
    if op == SQRT:
        return f"sqrt({memo[id(node.args[0])][0]})", _P_BASE
    if op == NEG:
        inner = memo[id(node.args[0])]
        return "-" + _wrap(inner, _P_BASE), _P_BASE
    if op == POW:
        base = memo[id(node.args[0])]
        text = base[0] if base[1] >= _P_BASE and not base[0].startswith("-") else f"({base[0]})"
        return f"{text}^{node.value}", _P_FACTOR
    if op == MUL:
        parts = []
        for a in node.args:
            entry = memo[id(a)]
            txt = _wrap(entry, _P_FACTOR)
            if txt.startswith("-"):
                txt = f"({txt})"
            parts.append(txt)
        return "*".join(parts), _P_TERM
    if op == DIV:
        num = _wrap(memo[id(node.args[0])], _P_TERM)
        den = _wrap(memo[id(node.args[1])], _P_FACTOR)
        if den.startswith("-"):
            den = f"({den})"
        return f"{num}/{den}", _P_TERM
    if op == ADD:
        out = []
        for i, a in enumerate(node.args):
            if a.op == NEG:
                inner = memo[id(a.args[0])]
                if i == 0:
                    out.append("-" + _wrap(inner, _P_BASE))
                else:
                    out.append(" - " + _wrap(inner, _P_TERM))
            elif a.op == CONST and a.value < 0 and i > 0:
                out.append(" - " + _fmt_const(-a.value))
            else:
                txt = _wrap(memo[id(a)], _P_TERM)
                out.append(txt if i == 0 else " + " + txt)
        return "".join(out), _P_SUM
    raise AssertionError(op)
