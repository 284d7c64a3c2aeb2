"""Fact-aware simplification of symbolic bitstring expressions.

Every rule preserves evaluation exactly, including undefinedness, for
each valuation that satisfies the ambient fact set.  That works because
a rule only fires when its side conditions are entailed, the entailment
checker refuses to prove a goal that is not provably defined, and every
side condition mentions each subexpression the rule would erase or,
failing that, its definedness is demanded separately.  With an empty
fact set only the unconditional rules apply, such as constant folding
and elision of empty pieces.

The slice rules carry the load during symbolic execution.  They are
built from two public cutting operations: cut_left keeps a prefix of a
concatenation chain, cut_right drops one.  A slice of a chain is the
composition of the two; a slice that provably covers a whole value
collapses to the value itself.

simplify never grows an expression beyond a small additive constant:
if the rewritten form ends up larger (symbolic cut offsets can double),
the input is returned unchanged.
"""

from __future__ import annotations

from .bits import EMPTY, concat, sub, val
from .solver import FactSet, PROVED
from .symcore import (
    ADDN,
    Concat,
    Const,
    GE,
    HeapId,
    LE,
    Len,
    Op,
    Ptr,
    Range,
    StackVar,
    SUBN,
    Var,
    get_len,
    i_const,
)

EPS = Const(EMPTY)

_FOLDABLE = ("arith", "compare", "logic")

# additive size slack of simplify: fallback range literals and split
# boundary pieces may add this much syntax, never more
SIZE_SLACK = 16


def is_eps(e) -> bool:
    return isinstance(e, Const) and len(e.bits) == 0


def expr_size(e) -> int:
    match e:
        case Const() | Var() | StackVar() | HeapId():
            return 1
        case Op(args=args):
            return 1 + sum(expr_size(a) for a in args)
        case Concat(left=a, right=b):
            return 1 + expr_size(a) + expr_size(b)
        case Range(base=b, offset=o, length=n):
            return 1 + expr_size(b) + expr_size(o) + expr_size(n)
        case Len(arg=a):
            return 1 + expr_size(a)
        case Ptr(offset=o):
            return 1 + expr_size(o)
    raise TypeError(f"not a symbolic expression: {e!r}")


def smart_concat(a, b):
    """Concatenation with empty-piece elision, literal merging, and a
    canonical right-leaning association."""
    if is_eps(a):
        return b
    if is_eps(b):
        return a
    if isinstance(a, Concat):
        return smart_concat(a.left, smart_concat(a.right, b))
    if isinstance(a, Const):
        if isinstance(b, Const):
            return Const(concat(a.bits, b.bits))
        if isinstance(b, Concat) and isinstance(b.left, Const):
            return smart_concat(Const(concat(a.bits, b.left.bits)), b.right)
    return Concat(a, b)


def flatten(e) -> list:
    """The pieces of a concatenation chain, left to right.  Any expression
    is a chain of length at least one."""
    out = []

    def walk(t):
        if isinstance(t, Concat):
            walk(t.left)
            walk(t.right)
        else:
            out.append(t)

    walk(e)
    return out


def _cat(pieces):
    out = EPS
    for p in reversed(pieces):
        out = smart_concat(p, out)
    return out


class _Simplifier:
    def __init__(self, facts: FactSet):
        self.fs = facts
        self.opset = facts.opset
        self.params = facts.params

    # --- solver shorthands ------------------------------------------------

    def _le(self, a, b) -> bool:
        return self.fs.entails(Op(LE, (a, b))) == PROVED

    def _ge(self, a, b) -> bool:
        return self.fs.entails(Op(GE, (a, b))) == PROVED

    def _num_eq(self, a, b) -> bool:
        return self._le(a, b) and self._ge(a, b)

    def _provably_defined(self, e) -> bool:
        # a trivially true goal mentioning e: provable exactly when e is
        # provably defined under the facts
        return self._le(Len(e), Len(e))

    # --- arithmetic helpers -------------------------------------------------

    def _fold(self, e):
        match e:
            case Op(name=n, args=args) if all(
                isinstance(a, Const) for a in args
            ):
                spec = self.opset.get(n)
                if spec is not None and spec.kind in _FOLDABLE:
                    v = spec.fn(self.params, *[a.bits for a in args])
                    if v is not None:
                        return Const(v)
        return e

    def _add(self, a, b):
        return self._fold(Op(ADDN, (a, b)))

    def _sub(self, a, b):
        return self._fold(Op(SUBN, (a, b)))

    # --- the rewriting --------------------------------------------------

    def run(self, e):
        match e:
            case Const() | Var() | StackVar() | HeapId():
                return e
            case Ptr(base=pb, offset=o):
                return Ptr(pb, self.run(o))
            case Len(arg=a):
                a2 = self.run(a)
                if isinstance(a2, Const):
                    return i_const(len(a2.bits), self.params)
                return Len(a2)
            case Op(name=n, args=args):
                return self._fold(Op(n, tuple(self.run(a) for a in args)))
            case Concat(left=a, right=b):
                return smart_concat(self.run(a), self.run(b))
            case Range(base=b, offset=o, length=n):
                return self.range(self.run(b), self.run(o), self.run(n))
        raise TypeError(f"not a symbolic expression: {e!r}")

    def range(self, base, o, l):
        zero = i_const(0, self.params)
        if (
            isinstance(base, Const)
            and isinstance(o, Const)
            and isinstance(l, Const)
        ):
            v = sub(base.bits, val(o.bits), val(l.bits))
            if v is not None:
                return Const(v)
        # the whole slice is empty
        if self._le(l, zero) and self._le(o, Len(base)):
            return EPS
        # the slice covers the value exactly
        if self._le(o, zero) and self._num_eq(l, Len(base)):
            return base
        match base:
            case Range(base=b2, offset=o2, length=l2):
                if self._le(self._add(o, l), l2) and self._le(
                    self._add(o2, l2), Len(b2)
                ):
                    return self.range(b2, self._add(o2, o), l)
            case Concat():
                pieces = flatten(base)
                suffix = self.cut_off(pieces, o)
                if suffix is not None:
                    kept = self.cut_at(suffix, l)
                    if kept is not None:
                        return _cat(kept)
                    return Range(_cat(suffix), zero, l)
        return Range(base, o, l)

    # --- chain cutting ----------------------------------------------------

    def _boundary(self, pieces, l):
        """Index i and prefix length before piece i such that the position l
        provably falls inside piece i, or None.  The smallest i wins."""
        before = i_const(0, self.params)
        for i, piece in enumerate(pieces):
            if self._ge(l, before) and self._le(
                l, self._add(before, get_len(piece, self.params))
            ):
                return i, before
            before = self._add(before, get_len(piece, self.params))
        return None

    def cut_at(self, pieces, l):
        """The prefix of the chain up to position l, as a piece list, with
        the boundary piece cut down; None when no boundary is provable or a
        dropped piece is not provably defined."""
        hit = self._boundary(pieces, l)
        if hit is None:
            return None
        i, before = hit
        dropped = pieces[i + 1:]
        if dropped and not self._provably_defined(_cat(dropped)):
            return None
        end = self._add(before, get_len(pieces[i], self.params))
        if self._ge(l, end):
            # the cut provably sits at the piece's end: keep it whole, so
            # that re-cutting is a fixed point
            head = pieces[i]
        else:
            head = self.range(pieces[i], i_const(0, self.params),
                              self._sub(l, before))
        return pieces[:i] + [head]

    def cut_off(self, pieces, l):
        """The suffix of the chain from position l onward, as a piece list;
        None when no boundary is provable or a dropped piece is not provably
        defined."""
        hit = self._boundary(pieces, l)
        if hit is None:
            return None
        i, before = hit
        dropped = pieces[:i]
        if dropped and not self._provably_defined(_cat(dropped)):
            return None
        if self._le(l, before):
            # cut at the piece's start: keep it whole
            tail = pieces[i]
        else:
            start = self._sub(l, before)
            tail = self.range(
                pieces[i], start,
                self._sub(get_len(pieces[i], self.params), start),
            )
        return [tail] + pieces[i + 1:]


def cut_left(facts: FactSet, l, e):
    """The prefix of length l of the concatenation chain e.

    When l provably falls on or inside one of the chain's pieces, the later
    pieces are dropped (they must be provably defined, since the rewrite
    erases them) and the boundary piece is recursively cut.  Otherwise the
    literal range e{i0, l} is returned.
    """
    s = _Simplifier(facts)
    kept = s.cut_at(flatten(e), s.run(l))
    if kept is None:
        return Range(e, i_const(0, facts.params), l)
    return _cat(kept)


def cut_right(facts: FactSet, l, e):
    """The suffix of e from position l onward; dual of cut_left.  Falls back
    to the literal range e{l, getLen(e) -N l}."""
    s = _Simplifier(facts)
    kept = s.cut_off(flatten(e), s.run(l))
    if kept is None:
        return Range(e, l, Op(SUBN, (get_len(e, facts.params), l)))
    return _cat(kept)


def simplify(facts: FactSet, e):
    """Rewrite e to an equivalent, usually smaller expression.  Equivalence
    means equal evaluation, undefined included, under every valuation that
    satisfies the facts.  The result never exceeds the input size by more
    than SIZE_SLACK nodes; a rewrite that would is discarded."""
    out = _Simplifier(facts).run(e)
    if expr_size(out) > expr_size(e) + SIZE_SLACK:
        return e
    return out
