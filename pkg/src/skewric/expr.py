"""Closed-form scalar fields on coordinate charts.

A field is an immutable expression tree over the chart variables
(y1, y2 on plane charts; additionally x1, x2 for the fibre coordinates of
the four-dimensional chart).  Node kinds: real constant, variable, add,
sub, mul, div, integer power, exp, log, sin, cos, tanh.

Trees are hash-consed: structurally identical trees are the same object,
so identity (`a is b`) is structural equality.  Constructors fold constant
subtrees on the fly and apply the exact cancellations ``(a + b) - b -> a``,
``(a - b) + b -> a`` and ``a - a -> 0``; nothing beyond that is simplified,
so repeated differentiation grows trees, which is acceptable at the tree
sizes this package produces.

Evaluation compiles a tree (or a batch of trees sharing subexpressions)
into a flat instruction tape executed by the compiled backend when the
extension module is available, else by a pure-Python/numpy interpreter
(see :mod:`skewric.kernel`).  Division and log nodes carry an implicit
singular locus; evaluating on it raises SingularPointError instead of
returning NaN.

Construction relies on the GIL for intern-table consistency; once built,
fields are immutable and safe to share and evaluate concurrently.
"""

from __future__ import annotations

import math
import re
import weakref
from dataclasses import dataclass

import numpy as np

from . import kernel
from .errors import ExprSyntaxError

VAR_NAMES = ("y1", "y2", "x1", "x2")

_FUNCS = ("exp", "log", "sin", "cos", "tanh")

# opcodes shared with the evaluation backends
OP_CONST, OP_VAR, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW = range(7)
OP_EXP, OP_LOG, OP_SIN, OP_COS, OP_TANH = range(7, 12)

_OPCODE = {
    "add": OP_ADD, "sub": OP_SUB, "mul": OP_MUL, "div": OP_DIV, "pow": OP_POW,
    "exp": OP_EXP, "log": OP_LOG, "sin": OP_SIN, "cos": OP_COS, "tanh": OP_TANH,
}

_intern: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()


class Expr:
    """Immutable, interned expression node.

    ``op`` is the node kind; ``args`` the child tuple; ``value`` holds the
    constant (op "const"), the variable index (op "var") or the integer
    exponent (op "pow").
    """

    __slots__ = ("op", "args", "value", "_prog", "__weakref__")

    def __repr__(self):
        return f"Expr[{to_infix(self)}]"

    def __str__(self):
        return to_infix(self)

    @property
    def is_zero(self):
        return self.op == "const" and self.value == 0.0

    @property
    def is_const(self):
        return self.op == "const"

    def diff(self, var):
        return diff(self, var)

    def eval(self, point):
        return evaluate(self, point)

    def eval_many(self, points):
        return evaluate_many(self, points)

    # arithmetic sugar for building fields in code
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, k):
        return powi(self, k)

    def __neg__(self):
        return mul(const(-1.0), self)


def _node(op, args=(), value=None):
    key = (op, value) + tuple(id(a) for a in args)
    found = _intern.get(key)
    if found is not None:
        return found
    e = object.__new__(Expr)
    e.op = op
    e.args = args
    e.value = value
    e._prog = None
    return _intern.setdefault(key, e)


# ---------------------------------------------------------------------------
# constructors (constant folding + exact cancellation happen here)

def const(v):
    return _node("const", (), float(v))


def var(index):
    if not 0 <= int(index) < len(VAR_NAMES):
        raise ValueError(f"variable index {index} out of range")
    return _node("var", (), int(index))


def as_expr(x):
    if isinstance(x, Expr):
        return x
    return const(x)


ZERO = const(0.0)
ONE = const(1.0)


def _finite_const(v):
    return const(v) if math.isfinite(v) else None


def add(a, b):
    if a.is_const and b.is_const:
        folded = _finite_const(a.value + b.value)
        if folded is not None:
            return folded
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    if a.op == "sub" and a.args[1] is b:
        return a.args[0]
    if b.op == "sub" and b.args[1] is a:
        return b.args[0]
    return _node("add", (a, b))


def sub(a, b):
    if a is b:
        return ZERO
    if a.is_const and b.is_const:
        folded = _finite_const(a.value - b.value)
        if folded is not None:
            return folded
    if b.is_zero:
        return a
    if a.op == "add":
        if a.args[1] is b:
            return a.args[0]
        if a.args[0] is b:
            return a.args[1]
    return _node("sub", (a, b))


def mul(a, b):
    if a.is_const and b.is_const:
        folded = _finite_const(a.value * b.value)
        if folded is not None:
            return folded
    if a.is_zero or b.is_zero:
        return ZERO
    if a.is_const and a.value == 1.0:
        return b
    if b.is_const and b.value == 1.0:
        return a
    return _node("mul", (a, b))


def div(a, b):
    if b.is_const:
        if b.value == 0.0:
            raise ZeroDivisionError("division by the zero constant")
        if b.value == 1.0:
            return a
        if a.is_const:
            folded = _finite_const(a.value / b.value)
            if folded is not None:
                return folded
    if a.is_zero:
        return ZERO
    return _node("div", (a, b))


def powi(a, k):
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return a
    if a.is_const:
        if a.value == 0.0 and k < 0:
            raise ZeroDivisionError("negative power of the zero constant")
        folded = _finite_const(a.value ** k)
        if folded is not None:
            return folded
    return _node("pow", (a,), k)


def _fn_builder(name, fn):
    def build(a):
        if a.is_const:
            try:
                v = fn(a.value)
            except ValueError:
                v = math.nan  # e.g. log of a non-positive constant
            folded = _finite_const(v)
            if folded is not None:
                return folded
        return _node(name, (a,))

    build.__name__ = name
    return build


exp = _fn_builder("exp", math.exp)
log = _fn_builder("log", math.log)
sin = _fn_builder("sin", math.sin)
cos = _fn_builder("cos", math.cos)
tanh = _fn_builder("tanh", math.tanh)

_BUILDERS = {"add": add, "sub": sub, "mul": mul, "div": div,
             "exp": exp, "log": log, "sin": sin, "cos": cos, "tanh": tanh}


# ---------------------------------------------------------------------------
# traversal helpers

def _postorder(roots):
    """Unique nodes of the forest, children before parents."""
    seen = set()
    order = []
    stack = [(r, False) for r in reversed(list(roots))]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            order.append(node)
        else:
            stack.append((node, True))
            for a in node.args:
                if id(a) not in seen:
                    stack.append((a, False))
    return order


def diff(e, varidx):
    """Exact symbolic partial derivative with respect to variable `varidx`."""
    out = {}
    for node in _postorder([e]):
        op = node.op
        if op == "const":
            d = ZERO
        elif op == "var":
            d = ONE if node.value == varidx else ZERO
        else:
            da = out[id(node.args[0])]
            if op == "add":
                d = add(da, out[id(node.args[1])])
            elif op == "sub":
                d = sub(da, out[id(node.args[1])])
            elif op == "mul":
                a, b = node.args
                d = add(mul(da, b), mul(a, out[id(b)]))
            elif op == "div":
                a, b = node.args
                d = div(sub(mul(da, b), mul(a, out[id(b)])), powi(b, 2))
            elif op == "pow":
                a = node.args[0]
                d = mul(const(node.value), mul(powi(a, node.value - 1), da))
            elif op == "exp":
                d = mul(node, da)
            elif op == "log":
                d = div(da, node.args[0])
            elif op == "sin":
                d = mul(cos(node.args[0]), da)
            elif op == "cos":
                d = mul(const(-1.0), mul(sin(node.args[0]), da))
            else:  # tanh
                d = mul(sub(ONE, powi(node, 2)), da)
        out[id(node)] = d
    return out[id(e)]


def fold_constants(e):
    """Rebuild through the folding constructors; result evaluates
    identically at every regular point of `e`."""
    out = {}
    for node in _postorder([e]):
        if node.op == "const":
            out[id(node)] = node
        elif node.op == "var":
            out[id(node)] = node
        elif node.op == "pow":
            out[id(node)] = powi(out[id(node.args[0])], node.value)
        else:
            args = tuple(out[id(a)] for a in node.args)
            out[id(node)] = _BUILDERS[node.op](*args)
    return out[id(e)]


def substitute(e, replacements):
    """Replace variables by expressions; `replacements` maps index -> Expr
    (or number)."""
    repl = {i: as_expr(v) for i, v in replacements.items()}
    out = {}
    for node in _postorder([e]):
        if node.op == "const":
            out[id(node)] = node
        elif node.op == "var":
            out[id(node)] = repl.get(node.value, node)
        elif node.op == "pow":
            out[id(node)] = powi(out[id(node.args[0])], node.value)
        else:
            args = tuple(out[id(a)] for a in node.args)
            out[id(node)] = _BUILDERS[node.op](*args)
    return out[id(e)]


# ---------------------------------------------------------------------------
# printing

_LEVEL_SUM, _LEVEL_PROD, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4


def _const_str(v):
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_infix(e):
    """Render `e` so that parse(to_infix(e)) rebuilds the identical tree."""
    txt = {}
    lvl = {}
    for node in _postorder([e]):
        op = node.op
        if op == "const":
            txt[id(node)], lvl[id(node)] = _const_str(node.value), _LEVEL_ATOM
        elif op == "var":
            txt[id(node)], lvl[id(node)] = VAR_NAMES[node.value], _LEVEL_ATOM
        elif op in ("add", "sub", "mul", "div"):
            mylvl = _LEVEL_SUM if op in ("add", "sub") else _LEVEL_PROD
            a, b = node.args
            left = txt[id(a)] if lvl[id(a)] >= mylvl else f"({txt[id(a)]})"
            right = txt[id(b)] if lvl[id(b)] > mylvl else f"({txt[id(b)]})"
            sym = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}[op]
            txt[id(node)], lvl[id(node)] = f"{left}{sym}{right}", mylvl
        elif op == "pow":
            a = node.args[0]
            base = txt[id(a)] if lvl[id(a)] >= _LEVEL_ATOM else f"({txt[id(a)]})"
            txt[id(node)], lvl[id(node)] = f"{base}^{node.value}", _LEVEL_POW
        else:
            txt[id(node)], lvl[id(node)] = f"{op}({txt[id(node.args[0])]})", _LEVEL_ATOM
    return txt[id(e)]


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<sym>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ExprSyntaxError(f"unexpected character {stripped[0]!r}", pos)
        if m.lastgroup is not None:
            tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens, variables):
        self.tokens = tokens
        self.i = 0
        self.variables = list(variables)

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_sym(self, s):
        kind, text, pos = self.next()
        if kind != "sym" or text != s:
            raise ExprSyntaxError(f"expected {s!r}", pos)

    def parse_expr(self):
        node = self.parse_term()
        while True:
            kind, text, _ = self.peek()
            if kind == "sym" and text in "+-":
                self.next()
                rhs = self.parse_term()
                node = add(node, rhs) if text == "+" else sub(node, rhs)
            else:
                return node

    def parse_term(self):
        node = self.parse_signed_factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "sym" and text in "*/":
                self.next()
                rhs = self.parse_signed_factor()
                node = mul(node, rhs) if text == "*" else div(node, rhs)
            else:
                return node

    def parse_signed_factor(self):
        negate = False
        while True:
            kind, text, _ = self.peek()
            if kind == "sym" and text in "+-":
                self.next()
                if text == "-":
                    negate = not negate
            else:
                break
        node = self.parse_factor()
        if negate:
            node = const(-node.value) if node.is_const else mul(const(-1.0), node)
        return node

    def parse_factor(self):
        node = self.parse_base()
        kind, text, pos = self.peek()
        if kind == "sym" and text == "^":
            self.next()
            node = powi(node, self.parse_int_exponent())
        return node

    def parse_int_exponent(self):
        sign = 1
        kind, text, pos = self.peek()
        if kind == "sym" and text == "-":
            self.next()
            sign = -1
        kind, text, pos = self.next()
        if kind != "num" or not text.isdigit():
            raise ExprSyntaxError("exponent must be an integer literal", pos)
        return sign * int(text)

    def parse_base(self):
        kind, text, pos = self.next()
        if kind == "num":
            return const(float(text))
        if kind == "ident":
            if text in _FUNCS:
                self.expect_sym("(")
                arg = self.parse_expr()
                self.expect_sym(")")
                return _BUILDERS[text](arg)
            if text in self.variables:
                return var(self.variables.index(text))
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
        if kind == "sym" and text == "(":
            node = self.parse_expr()
            self.expect_sym(")")
            return node
        raise ExprSyntaxError(f"unexpected token {text!r}" if text else "unexpected end of input", pos)


def parse(text, variables=("y1", "y2")):
    """Parse expression text over the given chart variables."""
    p = _Parser(_tokenize(text), variables)
    node = p.parse_expr()
    kind, text_, pos = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"trailing input {text_!r}", pos)
    return node


# ---------------------------------------------------------------------------
# canonical form for exact symbolic identity checks

def _sort_key(e):
    if e.op == "const":
        return ("const", e.value)
    if e.op == "var":
        return ("var", float(e.value))
    if e.op == "pow":
        return ("pow", _sort_key(e.args[0]), float(e.value))
    return (e.op,) + tuple(_sort_key(a) for a in e.args)


def _term_factors(e):
    """Multiplicative decomposition: coefficient plus factor -> power map
    with canonicalized factor expressions."""
    if e.op == "const":
        return e.value, {}
    if e.op == "mul":
        ca, fa = _term_factors(e.args[0])
        cb, fb = _term_factors(e.args[1])
        for f, k in fb.items():
            fa[f] = fa.get(f, 0) + k
        return ca * cb, fa
    if e.op == "div":
        ca, fa = _term_factors(e.args[0])
        cb, fb = _term_factors(e.args[1])
        for f, k in fb.items():
            fa[f] = fa.get(f, 0) - k
        if cb == 0.0:
            raise ZeroDivisionError("zero constant denominator")
        return ca / cb, fa
    if e.op == "pow":
        ca, fa = _term_factors(e.args[0])
        k = e.value
        coeff = ca ** k if (ca != 0.0 or k >= 0) else math.inf
        return coeff, {f: p * k for f, p in fa.items()}
    nf = normal_form(e)
    if nf is not e and nf.op in ("const", "mul", "div", "pow"):
        # a sum that collapsed to a single product: pull its coefficient out
        return _term_factors(nf)
    return 1.0, {nf: 1}


def _additive_terms(e, sign, acc):
    if e.op == "add":
        _additive_terms(e.args[0], sign, acc)
        _additive_terms(e.args[1], sign, acc)
    elif e.op == "sub":
        _additive_terms(e.args[0], sign, acc)
        _additive_terms(e.args[1], -sign, acc)
    else:
        coeff, factors = _term_factors(e)
        factors = {f: k for f, k in factors.items() if k != 0}
        items = tuple(sorted(((ff, kk) for ff, kk in factors.items()),
                             key=lambda it: (_sort_key(it[0]), it[1])))
        key = tuple((_sort_key(ff), kk) for ff, kk in items)
        prev = acc.get(key)
        if prev is None:
            acc[key] = [[sign * coeff], items]
        else:
            prev[0].append(sign * coeff)


def normal_form(e):
    """Light canonicalization used for exact-identity checks: flattens and
    sorts commutative chains and collects like terms with float
    coefficients.  Sums are never expanded, so this is not a simplifier."""
    if e.op == "const":
        return e
    if e.op == "var":
        return e
    if e.op not in ("add", "sub", "mul", "div", "pow"):
        return _BUILDERS[e.op](normal_form(e.args[0]))
    acc = {}
    _additive_terms(e, 1.0, acc)
    pieces = []
    for key in sorted(acc.keys()):
        coeff_list, items = acc[key]
        # fsum makes the collected coefficient independent of the order in
        # which equal contributions arrived, so exact cancellations stay exact
        coeff = math.fsum(coeff_list)
        if coeff == 0.0:
            continue
        prod = None
        for f, k in items:
            piece = powi(f, k)
            prod = piece if prod is None else mul(prod, piece)
        if prod is None:
            term = const(coeff)
        else:
            term = mul(const(coeff), prod)
        pieces.append(term)
    result = ZERO
    for term in pieces:
        result = add(result, term)
    return result


def symbolically_equal(a, b):
    """Exact equality of the canonical forms (a strictly stronger check
    than agreement at sample points)."""
    return normal_form(sub(a, b)).is_zero


# ---------------------------------------------------------------------------
# compilation and evaluation

@dataclass(frozen=True)
class Program:
    """Flat instruction tape for a forest of fields; one slot per unique
    node, outputs listing the root slots."""
    codes: np.ndarray
    arg1: np.ndarray
    arg2: np.ndarray
    consts: np.ndarray
    outputs: np.ndarray

    @property
    def n_ops(self):
        return len(self.codes)


def compile_program(roots):
    roots = list(roots)
    order = _postorder(roots)
    slot = {}
    codes, arg1, arg2 = [], [], []
    consts = []
    const_slot = {}
    for node in order:
        op = node.op
        if op == "const":
            ci = const_slot.get(node.value)
            if ci is None:
                ci = len(consts)
                consts.append(node.value)
                const_slot[node.value] = ci
            codes.append(OP_CONST)
            arg1.append(ci)
            arg2.append(0)
        elif op == "var":
            codes.append(OP_VAR)
            arg1.append(node.value)
            arg2.append(0)
        elif op == "pow":
            codes.append(OP_POW)
            arg1.append(slot[id(node.args[0])])
            arg2.append(node.value)
        else:
            codes.append(_OPCODE[op])
            arg1.append(slot[id(node.args[0])])
            arg2.append(slot[id(node.args[1])] if len(node.args) > 1 else 0)
        slot[id(node)] = len(codes) - 1
    return Program(
        codes=np.asarray(codes, dtype=np.int32),
        arg1=np.asarray(arg1, dtype=np.int32),
        arg2=np.asarray(arg2, dtype=np.int32),
        consts=np.asarray(consts, dtype=np.float64),
        outputs=np.asarray([slot[id(r)] for r in roots], dtype=np.int32),
    )


class Evaluator:
    """Reusable evaluator for a fixed forest of fields.

    `at(point)` returns the output values at one point; `at_many(points)`
    returns an array of shape (n_outputs, n_points).  Instances reuse an
    internal buffer and are not safe to share between threads; build one
    per thread.
    """

    def __init__(self, roots):
        self.program = compile_program(roots)
        self._buf = np.empty(self.program.n_ops, dtype=np.float64)

    def at(self, point):
        p = self.program
        pt = np.asarray(point, dtype=np.float64)
        kernel.backend.run_scalar(p.codes, p.arg1, p.arg2, p.consts, pt, self._buf)
        return self._buf[p.outputs].copy()

    def at_many(self, points):
        p = self.program
        pts = np.ascontiguousarray(points, dtype=np.float64)
        slots = kernel.backend.run_batch(p.codes, p.arg1, p.arg2, p.consts, pts)
        return slots[p.outputs]


def _cached_program(e):
    if e._prog is None:
        e._prog = compile_program([e])
    return e._prog


def evaluate(e, point):
    """Value of the field at one point (a sequence of coordinates)."""
    p = _cached_program(e)
    pt = np.asarray(point, dtype=np.float64)
    buf = np.empty(p.n_ops, dtype=np.float64)
    kernel.backend.run_scalar(p.codes, p.arg1, p.arg2, p.consts, pt, buf)
    return float(buf[p.outputs[0]])


def evaluate_many(e, points):
    """Values of the field at an (n, dim) array of points."""
    p = _cached_program(e)
    pts = np.ascontiguousarray(points, dtype=np.float64)
    slots = kernel.backend.run_batch(p.codes, p.arg1, p.arg2, p.consts, pts)
    return slots[p.outputs[0]]
