"""Symbolic expressions over bitstrings.

The expression language has constants, variables, operation applications,
concatenation, range extraction, length, and — only during symbolic execution
of machine code — typed pointers into stack or heap locations.  Expressions
without pointers are ordinary message expressions; pointers never appear in
extracted models.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .bits import BitString, WordParams, bs, concat, sub, val


@dataclass(frozen=True)
class Const:
    """A literal bitstring.  ``disp`` remembers the source spelling (e.g. a
    quoted tag) for printing and is ignored by equality."""

    bits: BitString
    disp: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Op:
    name: str
    args: tuple


@dataclass(frozen=True)
class Concat:
    left: "SymExpr"
    right: "SymExpr"


@dataclass(frozen=True)
class Range:
    """base{offset, length}: the length-bit slice of base starting at offset
    (both interpreted as numbers)."""

    base: "SymExpr"
    offset: "SymExpr"
    length: "SymExpr"


@dataclass(frozen=True)
class Len:
    arg: "SymExpr"


@dataclass(frozen=True)
class StackVar:
    """Pointer base: the fixed machine address of a program variable."""

    name: str


@dataclass(frozen=True)
class HeapId:
    """Pointer base: the i-th dynamically allocated region."""

    index: int


PtrBase = Union[StackVar, HeapId]


@dataclass(frozen=True)
class Ptr:
    """A pointer expression: some base address plus a pointer-free offset."""

    base: PtrBase
    offset: "SymExpr"


SymExpr = Union[Const, Var, Op, Concat, Range, Len, Ptr]

# Canonical operation names.  "+"/"-"/"*" are width-preserving modular
# machine ops; addN/subN are the widening/partial natural-number ops used in
# length arithmetic.
ADD, SUB, MUL = "+", "-", "*"
ADDN, SUBN = "addN", "subN"
EQ, LE, LT, GE, GT = "=", "<=", "<", ">=", ">"
NOT, OR, AND = "not", "or", "and"

INFIX_OPS = {ADD, SUB, EQ, LE, LT, GE, GT}


def i_const(n: int, params: WordParams) -> Const:
    return Const(bs(n, params))


def ptr_free(e: SymExpr) -> bool:
    match e:
        case Ptr():
            return False
        case Const() | Var():
            return True
        case Op(args=args):
            return all(ptr_free(a) for a in args)
        case Concat(left=l, right=r):
            return ptr_free(l) and ptr_free(r)
        case Range(base=b, offset=o, length=n):
            return ptr_free(b) and ptr_free(o) and ptr_free(n)
        case Len(arg=a):
            return ptr_free(a)
    raise TypeError(f"not a symbolic expression: {e!r}")


def vars_of(e: SymExpr) -> frozenset:
    """Free variable names plus pointer bases occurring in e."""
    out = set()

    def walk(t):
        match t:
            case Var(name=x):
                out.add(x)
            case Const():
                pass
            case Op(args=args):
                for a in args:
                    walk(a)
            case Concat(left=l, right=r):
                walk(l)
                walk(r)
            case Range(base=b, offset=o, length=n):
                walk(b)
                walk(o)
                walk(n)
            case Len(arg=a):
                walk(a)
            case Ptr(base=pb, offset=o):
                out.add(pb)
                walk(o)

    walk(e)
    return frozenset(out)


def subst(e: SymExpr, mapping: dict) -> SymExpr:
    """Capture-free substitution of variables by expressions (there are no
    binders inside expressions)."""
    match e:
        case Var(name=x):
            return mapping.get(x, e)
        case Const():
            return e
        case Op(name=op, args=args):
            return Op(op, tuple(subst(a, mapping) for a in args))
        case Concat(left=l, right=r):
            return Concat(subst(l, mapping), subst(r, mapping))
        case Range(base=b, offset=o, length=n):
            return Range(subst(b, mapping), subst(o, mapping), subst(n, mapping))
        case Len(arg=a):
            return Len(subst(a, mapping))
        case Ptr(base=pb, offset=o):
            return Ptr(pb, subst(o, mapping))
    raise TypeError(f"not a symbolic expression: {e!r}")


def eval_expr(e: SymExpr, env: dict, opset, params: WordParams):
    """Evaluate under a valuation.  Returns a BitString, or None for the
    undefined value; undefinedness propagates through every construct.

    The valuation maps variable names to bitstrings; for expressions carrying
    pointers it may also map StackVar/HeapId bases to address words.
    """
    match e:
        case Const(bits=b):
            return b
        case Var(name=x):
            return env.get(x)
        case Op(name=op, args=args):
            vals = []
            for a in args:
                v = eval_expr(a, env, opset, params)
                if v is None:
                    return None
                vals.append(v)
            spec = opset[op]
            if spec.arity != len(vals):
                return None
            return spec.fn(params, *vals)
        case Concat(left=l, right=r):
            lv = eval_expr(l, env, opset, params)
            rv = eval_expr(r, env, opset, params)
            if lv is None or rv is None:
                return None
            return concat(lv, rv)
        case Range(base=b, offset=o, length=n):
            bv = eval_expr(b, env, opset, params)
            ov = eval_expr(o, env, opset, params)
            nv = eval_expr(n, env, opset, params)
            if bv is None or ov is None or nv is None:
                return None
            return sub(bv, val(ov), val(nv))
        case Len(arg=a):
            av = eval_expr(a, env, opset, params)
            if av is None:
                return None
            return bs(len(av), params)
        case Ptr(base=pb, offset=o):
            base_word = env.get(pb)
            ov = eval_expr(o, env, opset, params)
            if base_word is None or ov is None:
                return None
            if len(ov) != len(base_word):
                return None
            m = 1 << len(base_word)
            return BitString(len(base_word), (val(base_word) + val(ov)) % m)
    raise TypeError(f"not a symbolic expression: {e!r}")


# The interface name; eval_expr stays available to avoid shadowing confusion
# inside this module.
eval = eval_expr


def get_len(e: SymExpr, params: WordParams) -> SymExpr:
    """The length of e as a pointer-free expression.

    Sound whenever e evaluates: the result evaluates to bs of e's bit length
    (lengths are assumed to fit a machine word, as everywhere else).
    """
    match e:
        case Ptr():
            return Const(bs(params.width, params))
        case Len():
            return Const(bs(params.width, params))
        case Const(bits=b):
            return Const(bs(len(b), params))
        case Var():
            return Len(e)
        case Op():
            return Len(e)
        case Concat(left=l, right=r):
            return Op(ADDN, (get_len(l, params), get_len(r, params)))
        case Range(length=n):
            return n
    raise TypeError(f"not a symbolic expression: {e!r}")


def apply_sym(op: str, args: list) -> SymExpr | None:
    """Build the result of applying op to symbolic arguments.

    Pointer-free arguments give a plain application.  Pointer arithmetic is
    kept symbolic: adding a pointer-free offset to a pointer shifts its
    offset (either argument order; machine addition commutes), subtracting
    two pointers with the same base yields the offset difference.  Every
    other pointer-involving application is undefined.
    """
    args = list(args)
    if all(ptr_free(a) for a in args):
        return Op(op, tuple(args))
    if op == ADD and len(args) == 2:
        a, b = args
        if isinstance(a, Ptr) and ptr_free(b):
            return Ptr(a.base, Op(ADD, (a.offset, b)))
        if isinstance(b, Ptr) and ptr_free(a):
            return Ptr(b.base, Op(ADD, (b.offset, a)))
    if op == SUB and len(args) == 2:
        a, b = args
        if isinstance(a, Ptr) and isinstance(b, Ptr) and a.base == b.base:
            return Op(SUB, (a.offset, b.offset))
    return None
