"""Simplifier tests.

The contract under test: for every valuation satisfying the fact set,
the simplified expression evaluates exactly like the original, with
undefined results preserved.  The campaign below builds fact sets that
are true by construction under a sampled valuation, so the contract can
be checked by direct evaluation.
"""

from promex.bits import BitString, WordParams, bs, parse_literal
from promex.opset import build_opset
from promex.simplify import (
    EPS,
    SIZE_SLACK,
    cut_left,
    cut_right,
    expr_size,
    simplify,
    smart_concat,
)
from promex.solver import FactSet
from promex.symcore import (
    ADDN,
    Concat,
    Const,
    Len,
    Op,
    Range,
    SUBN,
    Var,
    eval_expr,
    i_const,
)

from genutil import NAT_OPS, rand_env, rand_expr, rng_for

OPS = build_opset("core")
P4 = WordParams(4)
P8 = WordParams(8)


def FS(params, *facts):
    return FactSet(OPS, params, facts)


def B(text):
    return Const(parse_literal('b"' + text + '"', P8))


def rel(name, a, b):
    return Op(name, (a, b))


# --- unconditional rules -------------------------------------------------


def test_constant_folding():
    empty = FS(P8)
    e = rel(ADDN, i_const(4, P8), i_const(8, P8))
    assert simplify(empty, e) == i_const(12, P8)
    assert simplify(empty, rel(SUBN, i_const(9, P8), i_const(3, P8))) \
        == i_const(6, P8)
    # undefined folds are left alone
    bad = rel(SUBN, i_const(3, P8), i_const(5, P8))
    assert simplify(empty, bad) == bad
    assert simplify(empty, rel("<=", i_const(4, P8), i_const(7, P8))) \
        == i_const(1, P8)


def test_concat_canonical_form():
    a, b, c = Var("a"), Var("b"), Var("c")
    empty = FS(P8)
    e = Concat(Concat(a, b), c)
    assert simplify(empty, e) == Concat(a, Concat(b, c))
    assert simplify(empty, Concat(a, EPS)) == a
    assert simplify(empty, Concat(EPS, a)) == a
    assert smart_concat(B("01"), B("10")) == B("0110")
    assert smart_concat(EPS, a) == a
    assert smart_concat(a, EPS) == a
    assert smart_concat(B("0"), Concat(B("1"), a)) == Concat(B("01"), a)


def test_literal_slice():
    e = Range(B("0110"), i_const(1, P8), i_const(2, P8))
    assert simplify(FS(P8), e) == B("11")
    # out of bounds stays put: it evaluates to the undefined value
    oob = Range(B("01"), i_const(1, P8), i_const(5, P8))
    assert simplify(FS(P8), oob) == oob


def test_len_of_literal():
    assert simplify(FS(P8), Len(B("01101"))) == i_const(5, P8)


# --- the cutting operations ------------------------------------------------


def test_cut_left_at_piece_boundary():
    a, b = Var("a"), Var("b")
    assert cut_left(FS(P8), Len(a), Concat(a, b)) == a


def test_cut_right_at_piece_boundary():
    a, b = Var("a"), Var("b")
    assert cut_right(FS(P8), Len(a), Concat(a, b)) == b


def test_cut_left_fallback_is_literal_range():
    e = Concat(Var("a"), Var("b"))
    l = Var("l")
    # nothing relates l to the piece lengths
    assert cut_left(FS(P8), l, e) == Range(e, i_const(0, P8), l)


def test_cut_right_zero_boundary():
    e = Concat(Var("a"), Var("b"))
    assert cut_right(FS(P8), i_const(0, P8), e) == e


def test_cut_inside_boundary_piece():
    # the cut lands strictly inside the first piece; the piece is cut down
    tag = B("0011")
    x = Var("x")
    got = cut_left(FS(P8), i_const(2, P8), Concat(tag, x))
    assert got == B("00")


def test_cut_eval_equivalence():
    rng = rng_for(424242)
    params = P4
    zero = i_const(0, params)
    for _ in range(600):
        env = rand_env(rng, params, max_len=5)
        e = rand_expr(rng, params, depth=2, rels=False, arith=NAT_OPS)
        if not isinstance(e, Concat):
            e = Concat(e, rand_expr(rng, params, depth=1, rels=False,
                                    arith=NAT_OPS))
        l = rand_expr(rng, params, depth=1, rels=False, arith=NAT_OPS)
        fs = FS(params, *_true_facts(rng, env, params, rng.randrange(0, 3)))
        left = cut_left(fs, l, e)
        right = cut_right(fs, l, e)
        want_left = eval_expr(Range(e, zero, l), env, OPS, params)
        want_right = eval_expr(
            Range(e, l, Op(SUBN, (Len(e), l))), env, OPS, params)
        assert eval_expr(left, env, OPS, params) == want_left, (e, l, left)
        assert eval_expr(right, env, OPS, params) == want_right, (e, l, right)


# --- fact-driven slice rules ---------------------------------------------


def test_full_cover_collapses_to_value():
    # the shape a load takes after storing one value: x{i0, l} with
    # len(x) = l on the path
    x, l = Var("x"), Var("l")
    fs = FS(P8, rel("=", Len(x), l))
    e = Range(x, i_const(0, P8), l)
    assert simplify(fs, e) == x
    # without the fact nothing happens
    assert simplify(FS(P8), e) == e


def test_zero_length_slice_elides():
    x, l = Var("x"), Var("l")
    fs = FS(P8, rel("=", Len(x), l))
    e = Range(x, l, i_const(0, P8))
    assert simplify(fs, e) == EPS
    # in bounds not provable: kept, since the original can be undefined
    e2 = Range(x, Var("o"), i_const(0, P8))
    assert simplify(FS(P8), e2) == e2


def test_undefined_base_blocks_elision():
    x, y = Var("x"), Var("y")
    base = rel(SUBN, x, y)
    e = Range(base, i_const(0, P8), i_const(0, P8))
    assert simplify(FS(P8), e) == e
    fs = FS(P8, rel("<=", y, x), rel("<=", i_const(0, P8), Len(base)))
    assert simplify(fs, e) == EPS


def test_slice_into_first_piece():
    x1, x2 = Var("x1"), Var("x2")
    fs = FS(P8, rel("=", Len(x1), i_const(8, P8)))
    e = Range(Concat(x1, x2), i_const(0, P8), i_const(8, P8))
    assert simplify(fs, e) == x1


def test_slice_into_second_piece():
    x1, x2, l2 = Var("x1"), Var("x2"), Var("l2")
    fs = FS(
        P8,
        rel("=", Len(x1), i_const(8, P8)),
        rel("=", Len(x2), l2),
    )
    e = Range(Concat(x1, x2), i_const(8, P8), l2)
    assert simplify(fs, e) == x2


def test_tag_strip():
    # dropping a known literal tag in front of a payload
    tag = B("0011")
    x, l = Var("x"), Var("l")
    fs = FS(P8, rel("=", Len(x), l))
    e = Range(Concat(tag, x), i_const(4, P8), l)
    assert simplify(fs, e) == x


def test_mac_piece_extraction():
    # the authentication-check load: the second piece of a two-piece buffer
    # whose first piece has symbolic length
    ops = build_opset("fixtures")
    x1, k, l = Var("x1"), Var("k"), Var("l")
    macapp = Op("mac", (k, x1))
    fs = FactSet(ops, P8, (
        rel("=", Len(x1), l),
        rel("=", Len(macapp), i_const(20, P8)),
    ))
    e = Range(Concat(x1, macapp), l, i_const(20, P8))
    assert simplify(fs, e) == macapp


def test_straddling_slice_evaluates_right():
    x1, x2 = Var("x1"), Var("x2")
    fs = FS(
        P8,
        rel("=", Len(x1), i_const(8, P8)),
        rel("=", Len(x2), i_const(8, P8)),
    )
    e = Range(Concat(x1, x2), i_const(4, P8), i_const(8, P8))
    s = simplify(fs, e)
    assert isinstance(s, Concat)
    env = {
        "x1": BitString(8, 0b10110100),
        "x2": BitString(8, 0b01011110),
    }
    assert eval_expr(s, env, OPS, P8) == eval_expr(e, env, OPS, P8)


def test_nested_slice_fusion():
    x = Var("x")
    fs = FS(P8, rel("=", Len(x), i_const(12, P8)))
    inner = Range(x, i_const(2, P8), i_const(8, P8))
    e = Range(inner, i_const(1, P8), i_const(3, P8))
    assert simplify(fs, e) == Range(x, i_const(3, P8), i_const(3, P8))


# --- randomized equivalence ----------------------------------------------


def _true_facts(rng, env, params, k):
    facts = []
    one = bs(1, params)
    for _ in range(k * 3):
        if len(facts) >= k:
            break
        f = rand_expr(rng, params, depth=2, rels=True, arith=NAT_OPS)
        if eval_expr(f, env, OPS, params) == one:
            facts.append(f)
    return facts


def test_equivalence_campaign():
    rng = rng_for(616161)
    params = P4
    checked = 0
    simplified_away = 0
    for _ in range(2500):
        env = rand_env(rng, params, max_len=6)
        e = rand_expr(rng, params, depth=3, rels=False, arith=NAT_OPS)
        fs = FS(params, *_true_facts(rng, env, params, rng.randrange(0, 3)))
        s = simplify(fs, e)
        assert eval_expr(s, env, OPS, params) == eval_expr(e, env, OPS, params), (
            e,
            s,
            env,
            fs.facts,
        )
        checked += 1
        if s != e:
            simplified_away += 1
    assert checked == 2500
    assert simplified_away > 300  # the rules must actually fire


def test_idempotence_and_size():
    rng = rng_for(717171)
    params = P4
    for _ in range(800):
        env = rand_env(rng, params, max_len=6)
        e = rand_expr(rng, params, depth=3, rels=False, arith=NAT_OPS)
        fs = FS(params, *_true_facts(rng, env, params, rng.randrange(0, 3)))
        s = simplify(fs, e)
        assert simplify(fs, s) == s, (e, s)
        assert expr_size(s) <= expr_size(e) + SIZE_SLACK
