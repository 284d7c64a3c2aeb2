"""Entailment checking for length and arithmetic side conditions.

A fact set collects the boolean expressions known to hold on the current
symbolic path.  `entails` asks whether every assignment of bitstrings to
the free variables that makes all facts true also makes the goal true.
The procedure is sound and incomplete: "proved" is a guarantee,
"unknown" is not a refutation.

Relations are linearized over atoms val(t) and len(t), where t ranges
over the maximal subterms that are not built from arithmetic.  Natural
addition and subtraction map to exact rational arithmetic; the modular
word ops map the same way, which is justified by the standing assumption
that word arithmetic in reachable code stays below the modulus.  The
goal's negation is then refuted by Fourier-Motzkin elimination, with
strict bounds strengthened by one since vals and lens are integers.

Because several ops are partial, a goal is reported proved only if it is
also provably defined whenever the facts hold: a natural subtraction
must be provably in range, a slice provably in bounds, modular operands
provably of equal length.  Facts themselves need no such check; a fact
that holds is in particular defined.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

from .bits import BitString, bs, render_literal, val
from .symcore import (
    ADD,
    ADDN,
    AND,
    Concat,
    Const,
    EQ,
    GE,
    GT,
    HeapId,
    LE,
    LT,
    Len,
    MUL,
    NOT,
    OR,
    Op,
    Ptr,
    Range,
    StackVar,
    SUB,
    SUBN,
    Var,
    eval_expr,
    vars_of,
)

PROVED = "proved"
UNKNOWN = "unknown"

_ORDER = (LE, LT, GE, GT)
# what must hold for the negation of an order relation to hold
_NEGATED = {LE: GT, LT: GE, GE: LT, GT: LE}


class _Lin:
    """Linear combination of atoms plus a rational constant."""

    __slots__ = ("coef", "const")

    def __init__(self, coef=None, const=0):
        self.coef = dict(coef) if coef else {}
        self.const = Fraction(const)

    def __add__(self, other):
        out = dict(self.coef)
        for k, c in other.coef.items():
            n = out.get(k, 0) + c
            if n:
                out[k] = n
            else:
                out.pop(k, None)
        return _Lin(out, self.const + other.const)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, k):
        k = Fraction(k)
        if not k:
            return _Lin()
        return _Lin({a: c * k for a, c in self.coef.items()}, self.const * k)

    def const_only(self):
        return not self.coef


def _atom(key):
    return _Lin({key: Fraction(1)})


def _row_le(lhs: _Lin, rhs: _Lin, slack: int = 0):
    """Constraint lhs <= rhs - slack, as (coef, bound) with coef.x <= bound."""
    d = lhs - rhs
    return (d.coef, -d.const - slack)


_FALSE = object()  # canonical form of an unsatisfiable constant row


def _canon(coef, bound):
    """Scale a row to a primitive integer form usable for deduplication.
    Returns None for trivially true rows and _FALSE for impossible ones."""
    if not coef:
        return _FALSE if bound < 0 else None
    den = 1
    for c in coef.values():
        den = den * Fraction(c).denominator // math.gcd(den, Fraction(c).denominator)
    ints = {k: int(Fraction(c) * den) for k, c in coef.items()}
    g = 0
    for v in ints.values():
        g = math.gcd(g, abs(v))
    return (frozenset((k, v // g) for k, v in ints.items()), Fraction(bound) * den / g)


def _fm_infeasible(rows, max_rows=6000):
    """Fourier-Motzkin refutation of a system of rows coef.x <= bound over
    the nonnegative rationals.  True means the system has no solution, which
    is sound for the integer-valued atoms; False means nothing."""
    work = []
    seen = set()

    def push(coef, bound):
        c = _canon(coef, bound)
        if c is _FALSE:
            return True
        if c is not None and c not in seen:
            seen.add(c)
            work.append((dict(c[0]), c[1]))
        return False

    for coef, bound in rows:
        if push(coef, bound):
            return True

    while work:
        occur = {}
        for coef, _ in work:
            for k, c in coef.items():
                s = occur.setdefault(k, [0, 0])
                s[0 if c > 0 else 1] += 1
        k = min(occur, key=lambda a: occur[a][0] * occur[a][1])
        pos, neg, rest = [], [], []
        for row in work:
            c = row[0].get(k, 0)
            (pos if c > 0 else neg if c < 0 else rest).append(row)
        work = rest
        seen = {_canon(c, b) for c, b in rest}
        for pc, pb in pos:
            a = pc[k]
            for nc, nb in neg:
                m = -nc[k]
                coef = {}
                for key in set(pc) | set(nc):
                    v = pc.get(key, 0) * m + nc.get(key, 0) * a
                    if v:
                        coef[key] = v
                if push(coef, pb * m + nb * a):
                    return True
        if len(work) > max_rows:
            return False
    return False


class _Linearizer:
    def __init__(self, opset, params):
        self.opset = opset
        self.params = params

    def value(self, e) -> _Lin:
        match e:
            case Const(bits=b):
                return _Lin(const=val(b))
            case Op(name=n, args=(a, b)) if n in (ADDN, ADD):
                return self.value(a) + self.value(b)
            case Op(name=n, args=(a, b)) if n in (SUBN, SUB):
                return self.value(a) - self.value(b)
            case Op(name=n, args=(a, b)) if n == MUL:
                la, lb = self.value(a), self.value(b)
                if la.const_only():
                    return lb.scale(la.const)
                if lb.const_only():
                    return la.scale(lb.const)
                return _atom(("val", e))
            case Len(arg=a):
                return self.length(a)
            case _:
                return _atom(("val", e))

    def length(self, e) -> _Lin:
        match e:
            case Const(bits=b):
                return _Lin(const=len(b))
            case Concat(left=a, right=b):
                return self.length(a) + self.length(b)
            case Range(length=n):
                return self.value(n)
            case Len() | Ptr():
                # a length is a word; so is an address
                return _Lin(const=self.params.width)
            case Op(name=n, args=args):
                spec = self.opset.get(n)
                if spec is not None and spec.length is not None:
                    if spec.length.kind == "fixed":
                        return _Lin(const=spec.length.value)
                    return self.length(args[spec.length.value])
                return _atom(("len", e))
            case _:
                return _atom(("len", e))


class FactSet:
    """Immutable collection of path facts over a fixed op vocabulary.

    Entailment results are cached per instance, so share instances where
    possible and extend them with with_fact / with_facts.
    """

    def __init__(self, opset, params, facts=()):
        self.opset = opset
        self.params = params
        self.facts = tuple(facts)
        self._lin = _Linearizer(opset, params)
        self._cache = {}
        self._built = None

    def with_fact(self, fact) -> "FactSet":
        if fact in self.facts:
            return self
        return FactSet(self.opset, self.params, self.facts + (fact,))

    def with_facts(self, facts) -> "FactSet":
        fs = self
        for f in facts:
            fs = fs.with_fact(f)
        return fs

    def entails(self, goal) -> str:
        got = self._cache.get(goal)
        if got is None:
            got = UNKNOWN
            if self._defined(goal) and self._holds(goal):
                got = PROVED
            self._cache[goal] = got
        return got

    # --- fact decomposition ---------------------------------------------

    def _rewrite_eq(self, a, b):
        # (cmp(x, y) = i0) and friends assert bitstring equality of x and y
        for x, y in ((a, b), (b, a)):
            match (x, y):
                case (Op(name=n, args=(p, q)), Const(bits=zb)) if val(zb) == 0:
                    spec = self.opset.get(n)
                    if spec is not None and spec.compare_rewrite:
                        return (p, q)
        return (a, b)

    def _decompose(self, e, out):
        match e:
            case Op(name="and", args=(a, b)):
                self._decompose(a, out)
                self._decompose(b, out)
            case Op(name="not", args=(inner,)):
                self._decompose_negated(inner, out)
            case Op(name="or"):
                pass  # disjunctive fact: no single linear content
            case Op(name="=", args=(a, b)):
                out.append((EQ, *self._rewrite_eq(a, b)))
            case Op(name=n, args=(a, b)) if n in _ORDER:
                out.append((n, a, b))
            case _:
                # a bare truth-valued fact is the exact word i1
                out.append((EQ, e, Const(bs(1, self.params))))

    def _decompose_negated(self, e, out):
        match e:
            case Op(name="not", args=(inner,)):
                self._decompose(inner, out)
            case Op(name="or", args=(a, b)):
                self._decompose_negated(a, out)
                self._decompose_negated(b, out)
            case Op(name=n, args=(a, b)) if n in _ORDER:
                out.append((_NEGATED[n], a, b))
            case Op(name="=") | Op(name="and"):
                pass  # negated equality / conjunction: disjunctive, dropped
            case _:
                # not(e) holding pins only the value: val(e) = 0
                out.append((LE, e, Const(bs(0, self.params))))

    def _fact_rows(self, rel, const_len):
        name, a, b = rel
        lv = self._lin
        va, vb = lv.value(a), lv.value(b)
        if name == EQ:
            la, lb = lv.length(a), lv.length(b)
            rows = [
                _row_le(va, vb),
                _row_le(vb, va),
                _row_le(la, lb),
                _row_le(lb, la),
            ]
            for x, y in ((va, vb), (vb, va), (la, lb), (lb, la)):
                d = x - y
                if len(d.coef) == 1:
                    ((key, c),) = d.coef.items()
                    if key[0] == "len" and abs(c) == 1:
                        n = -d.const / c
                        if n.denominator == 1 and n >= 0:
                            const_len[key[1]] = int(n)
            return rows
        if name == LE:
            return [_row_le(va, vb)]
        if name == LT:
            return [_row_le(va, vb, 1)]
        if name == GE:
            return [_row_le(vb, va)]
        return [_row_le(vb, va, 1)]

    def _base(self):
        if self._built is None:
            rels = []
            for f in self.facts:
                self._decompose(f, rels)
            rows = []
            const_len = {}
            for rel in rels:
                rows.extend(self._fact_rows(rel, const_len))
            self._built = (rows, const_len)
        return self._built

    # --- refutation core --------------------------------------------------

    def _bound_rows(self, rows, const_len):
        atoms = set()
        for coef, _ in rows:
            atoms.update(coef)
        out = []
        cap = (1 << self.params.width) - 1
        for key in atoms:
            kind, term = key
            out.append(({key: Fraction(-1)}, Fraction(0)))  # naturals
            if kind == "len":
                # lengths fit in a machine word
                out.append(({key: Fraction(1)}, Fraction(cap)))
            else:
                length = self._lin.length(term)
                n = None
                if length.const_only():
                    n = length.const
                elif term in const_len:
                    n = Fraction(const_len[term])
                if n is not None and n.denominator == 1 and 0 <= n <= 256:
                    out.append(({key: Fraction(1)}, Fraction((1 << int(n)) - 1)))
        return out

    def _refute(self, extra) -> bool:
        base, const_len = self._base()
        rows = base + extra
        rows = rows + self._bound_rows(rows, const_len)
        return _fm_infeasible(rows)

    def _prove_le(self, x: _Lin, y: _Lin) -> bool:
        return self._refute([_row_le(y, x, 1)])

    def _prove_eq(self, x: _Lin, y: _Lin) -> bool:
        return self._prove_le(x, y) and self._prove_le(y, x)

    # --- goal proving -------------------------------------------------------

    def _holds(self, e) -> bool:
        lv = self._lin
        match e:
            case Op(name="and", args=(a, b)):
                return self._holds(a) and self._holds(b)
            case Op(name="or", args=(a, b)):
                return self._holds(a) or self._holds(b)
            case Op(name="not", args=(inner,)):
                return self._holds_negation(inner)
            case Op(name="=", args=(a, b)):
                a, b = self._rewrite_eq(a, b)
                if a == b:
                    return True
                return self._prove_eq(lv.value(a), lv.value(b)) and self._prove_eq(
                    lv.length(a), lv.length(b)
                )
            case Op(name=n, args=(a, b)) if n in _ORDER:
                va, vb = lv.value(a), lv.value(b)
                if n == LE:
                    return self._prove_le(va, vb)
                if n == LT:
                    return self._refute([_row_le(vb, va)])
                if n == GE:
                    return self._prove_le(vb, va)
                return self._refute([_row_le(va, vb)])
            case _:
                return self._holds(Op(EQ, (e, Const(bs(1, self.params)))))

    def _holds_negation(self, e) -> bool:
        lv = self._lin
        match e:
            case Op(name="not", args=(inner,)):
                return self._holds(inner)
            case Op(name="and", args=(a, b)):
                return self._holds_negation(a) or self._holds_negation(b)
            case Op(name="or", args=(a, b)):
                return self._holds_negation(a) and self._holds_negation(b)
            case Op(name="=", args=(a, b)):
                a, b = self._rewrite_eq(a, b)
                va, vb = lv.value(a), lv.value(b)
                if self._refute([_row_le(va, vb), _row_le(vb, va)]):
                    return True  # values provably differ
                la, lb = lv.length(a), lv.length(b)
                return self._refute([_row_le(la, lb), _row_le(lb, la)])
            case Op(name=n, args=(a, b)) if n in _ORDER:
                return self._holds(Op(_NEGATED[n], (a, b)))
            case _:
                # not(e): e is defined with val(e) = 0
                return self._refute([_row_le(_Lin(const=1), lv.value(e))])

    # --- definedness --------------------------------------------------------

    def _defined(self, e) -> bool:
        lv = self._lin
        match e:
            case Const() | Var() | StackVar() | HeapId():
                return True
            case Ptr(offset=o):
                return self._defined(o)
            case Len(arg=a):
                return self._defined(a)
            case Concat(left=a, right=b):
                return self._defined(a) and self._defined(b)
            case Range(base=b, offset=o, length=n):
                if not (
                    self._defined(b) and self._defined(o) and self._defined(n)
                ):
                    return False
                return self._prove_le(lv.value(o) + lv.value(n), lv.length(b))
            case Op(name=n, args=args):
                if not all(self._defined(a) for a in args):
                    return False
                spec = self.opset.get(n)
                if spec is None:
                    return False
                if n == SUBN:
                    return self._prove_le(lv.value(args[1]), lv.value(args[0]))
                if n in (ADD, SUB, MUL, "<=s", "<s"):
                    return self._prove_eq(lv.length(args[0]), lv.length(args[1]))
                if n in (NOT, OR, AND):
                    return all(self._truth_valued(a) for a in args)
                return spec.total
            case _:
                return False

    def _truth_valued(self, e) -> bool:
        """Does e provably evaluate to i0 or i1?  Compare and logic ops do
        by construction; otherwise the value must provably be at most 1."""
        match e:
            case Op(name=n):
                spec = self.opset.get(n)
                if spec is not None and spec.kind in ("compare", "logic"):
                    return True
        return self._prove_le(self._lin.value(e), _Lin(const=1))


def entails(facts: FactSet, goal) -> str:
    return facts.entails(goal)


# --- test support: finding consistent valuations ------------------------------


def consistent_valuation_sampler(facts: FactSet, extra_vars=(), rng=None,
                                 tries=500, max_len=None):
    """Bounded random search for a valuation satisfying every fact.

    Returns a dict mapping variable names (and any pointer bases occurring
    in the facts) to bitstrings, or None when no satisfying assignment was
    found within the budget.  A returned valuation always satisfies the
    facts; this is checked by evaluation before returning.  Variables whose
    length the facts pin to a constant are sampled at exactly that length.
    """
    rng = rng or random.Random(0)
    params = facts.params
    cap = max_len if max_len is not None else min(params.modulus - 1,
                                                  2 * params.width)
    names = set(extra_vars)
    bases = set()
    for f in facts.facts:
        for v in vars_of(f):
            (names if isinstance(v, str) else bases).add(v)
    _, const_len = facts._base()
    pinned = {
        t.name: n for t, n in const_len.items() if isinstance(t, Var)
    }
    one = bs(1, params)
    for _ in range(tries):
        env = {}
        for x in sorted(names):
            n = pinned.get(x, None)
            if n is None:
                n = rng.randint(0, cap)
            env[x] = BitString(n, rng.getrandbits(n) if n else 0)
        for pb in bases:
            env[pb] = BitString(params.width,
                                rng.getrandbits(params.width))
        if all(
            eval_expr(f, env, facts.opset, params) == one
            for f in facts.facts
        ):
            return env
    return None


# --- inspection: the abstracted linear system ---------------------------------


def _fmt_term(e) -> str:
    match e:
        case Const(bits=b):
            return f"bits({b.n},{b.value:#x})"
        case Var(name=x):
            return x
        case Len(arg=a):
            return f"len({_fmt_term(a)})"
        case Concat(left=a, right=b):
            return f"{_fmt_term(a)}|{_fmt_term(b)}"
        case Range(base=b, offset=o, length=n):
            return f"{_fmt_term(b)}{{{_fmt_term(o)},{_fmt_term(n)}}}"
        case Op(name=n, args=args):
            return f"{n}({', '.join(_fmt_term(a) for a in args)})"
        case StackVar(name=x):
            return f"stack({x})"
        case HeapId(index=i):
            return f"heap({i})"
        case Ptr(base=pb, offset=o):
            return f"ptr({_fmt_term(pb)},{_fmt_term(o)})"
    return repr(e)


def _fmt_atom(key) -> str:
    kind, term = key
    return f"{kind}[{_fmt_term(term)}]"


def _fmt_row(coef, bound) -> str:
    if not coef:
        return f"0 <= {bound}"
    parts = []
    for key in sorted(coef, key=_fmt_atom):
        c = coef[key]
        parts.append(f"{c}*{_fmt_atom(key)}")
    return " + ".join(parts) + f" <= {bound}"


def _goal_blocks(facts: FactSet, goal):
    """The refutation systems whose joint infeasibility proves the goal:
    (label, negated-goal rows) pairs for relational goals."""
    lv = facts._lin
    match goal:
        case Op(name="=", args=(a, b)):
            a, b = facts._rewrite_eq(a, b)
            va, vb = lv.value(a), lv.value(b)
            la, lb = lv.length(a), lv.length(b)
            return [
                ("not val <=", [_row_le(vb, va, 1)]),
                ("not val >=", [_row_le(va, vb, 1)]),
                ("not len <=", [_row_le(lb, la, 1)]),
                ("not len >=", [_row_le(la, lb, 1)]),
            ]
        case Op(name=n, args=(a, b)) if n in _ORDER:
            va, vb = lv.value(a), lv.value(b)
            neg = {
                LE: [_row_le(vb, va, 1)],
                LT: [_row_le(vb, va)],
                GE: [_row_le(va, vb, 1)],
                GT: [_row_le(va, vb)],
            }[n]
            return [(f"not {n}", neg)]
    return []


def dump_linear_system(facts: FactSet, goal=None) -> str:
    """The abstracted linear system, one inequality per line.

    Shows the rows contributed by the facts plus the derived bounds; when a
    relational goal is given, each refutation attempt is shown as a block
    ending with the negated-goal row whose infeasibility would prove it.
    """
    base, const_len = facts._base()
    lines = ["facts:"]
    for coef, bound in base:
        lines.append("  " + _fmt_row(coef, bound))
    for coef, bound in facts._bound_rows(base, const_len):
        lines.append("  " + _fmt_row(coef, bound))
    if goal is not None:
        blocks = _goal_blocks(facts, goal)
        if not blocks:
            lines.append("goal: not relational, no linear rendering")
        for label, rows in blocks:
            lines.append(f"goal block ({label}):")
            for coef, bound in rows:
                lines.append("  " + _fmt_row(coef, bound))
    return "\n".join(lines)


def to_smt_text(facts: FactSet, goal=None) -> str:
    """Serialise the abstracted system as standard SMT text (QF_LIA), for
    inspection with an external solver.  Nothing in the package runs one;
    an unsat answer on the output corresponds to a provable goal block.
    """
    base, const_len = facts._base()
    rows = list(base)
    for label, block in _goal_blocks(facts, goal) if goal is not None else []:
        rows.extend(block)
    rows.extend(facts._bound_rows(rows, const_len))
    atoms = sorted({k for coef, _ in rows for k in coef}, key=_fmt_atom)
    names = {k: f"a{i}" for i, k in enumerate(atoms)}
    out = ["(set-logic QF_LIA)"]
    for k in atoms:
        out.append(f"; {names[k]} = {_fmt_atom(k)}")
        out.append(f"(declare-const {names[k]} Int)")
    for coef, bound in rows:
        b = Fraction(bound)
        scale = b.denominator
        for c in coef.values():
            d = Fraction(c).denominator
            scale = scale * d // math.gcd(scale, d)
        terms = " ".join(
            f"(* {int(c * scale)} {names[k]})" for k, c in coef.items()
        )
        lhs = f"(+ {terms})" if len(coef) > 1 else terms or "0"
        out.append(f"(assert (<= {lhs} {int(b * scale)}))")
    out.append("(check-sat)")
    return "\n".join(out)
