"""Concrete text syntax for expressions, shared by model files, fixtures and
the command line.

Grammar (precedence low to high):

    expr    := cat (RELOP cat)?          RELOP: = <= < >= > <=s <s (== is =)
    cat     := add ('@' add)*            concatenation, right associative
    add     := postfix (('+'|'-'|'*') postfix)*   machine arithmetic, left
    postfix := atom ('{' expr ',' expr '}')*      range extraction
    atom    := literal | len '(' expr ')' | IDENT '(' args ')' | IDENT
             | '(' expr ')'

Literals: i<dec>, iN, eps, "text", x"hex", b"bits".
"""

from __future__ import annotations

from dataclasses import dataclass

from .bits import WordParams, parse_literal, render_literal
from .symcore import (
    ADD,
    SUB,
    Concat,
    Const,
    HeapId,
    Len,
    Op,
    Ptr,
    Range,
    StackVar,
    SymExpr,
    Var,
)

RELOPS = ("<=s", "<s", "<=", ">=", "=", "<", ">")

_PUNCT = (
    "<=s", "<s", "<=", ">=", "==", "new~",
    "{", "}", "(", ")", ",", "@", "+", "-", "*", "=", "<", ">",
    "!", "|", ";", "[", "]",
)


@dataclass
class Tok:
    kind: str  # ident | lit | num | punct | eof
    text: str
    pos: int


class SyntaxParseError(ValueError):
    pass


def tokenize(text: str) -> list[Tok]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c == "#" or text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == '"' or (c in "xb" and i + 1 < n and text[i + 1] == '"'):
            start = i
            i = i + 1 if c == '"' else i + 2
            while i < n and text[i] != '"':
                i += 1
            if i >= n:
                raise SyntaxParseError(f"unterminated string at {start}")
            i += 1
            toks.append(Tok("lit", text[start:i], start))
            continue
        matched = False
        for p in _PUNCT:
            if text.startswith(p, i):
                # keep identifiers like "news" out of the "new~" match
                toks.append(Tok("punct", "=" if p == "==" else p, i))
                i += len(p)
                matched = True
                break
        if matched:
            continue
        if c.isdigit():
            start = i
            while i < n and text[i].isdigit():
                i += 1
            toks.append(Tok("num", text[start:i], start))
            continue
        if c.isalpha() or c == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i]
            if (
                word == "eps"
                or word == "iN"
                or (word[0] == "i" and word[1:].isdigit())
            ):
                toks.append(Tok("lit", word, start))
            else:
                toks.append(Tok("ident", word, start))
            continue
        raise SyntaxParseError(f"stray character {c!r} at {i}")
    toks.append(Tok("eof", "", n))
    return toks


class TokenStream:
    def __init__(self, toks: list[Tok]):
        self.toks = toks
        self.i = 0

    def peek(self) -> Tok:
        return self.toks[self.i]

    def next(self) -> Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at_punct(self, *texts) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.text in texts

    def at_ident(self, *words) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.text in words

    def expect(self, kind: str, text: str | None = None) -> Tok:
        t = self.next()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            raise SyntaxParseError(f"expected {want!r}, got {t.text!r} at {t.pos}")
        return t


def parse_expr_stream(ts: TokenStream, params: WordParams) -> SymExpr:
    left = _parse_cat(ts, params)
    if ts.at_punct(*RELOPS):
        op = ts.next().text
        right = _parse_cat(ts, params)
        return Op(op, (left, right))
    return left


def _parse_cat(ts, params):
    parts = [_parse_add(ts, params)]
    while ts.at_punct("@"):
        ts.next()
        parts.append(_parse_add(ts, params))
    e = parts[-1]
    for p in reversed(parts[:-1]):
        e = Concat(p, e)
    return e


def _parse_add(ts, params):
    e = _parse_postfix(ts, params)
    while ts.at_punct("+", "-", "*"):
        op = ts.next().text
        e = Op(op, (e, _parse_postfix(ts, params)))
    return e


def _parse_postfix(ts, params):
    e = _parse_atom(ts, params)
    while ts.at_punct("{"):
        ts.next()
        off = parse_expr_stream(ts, params)
        ts.expect("punct", ",")
        length = parse_expr_stream(ts, params)
        ts.expect("punct", "}")
        e = Range(e, off, length)
    return e


def _parse_atom(ts, params):
    t = ts.peek()
    if t.kind == "lit":
        ts.next()
        b = parse_literal(t.text, params)
        disp = t.text if t.text.startswith('"') else None
        return Const(b, disp)
    if ts.at_punct("("):
        ts.next()
        e = parse_expr_stream(ts, params)
        ts.expect("punct", ")")
        return e
    if t.kind == "ident":
        ts.next()
        if ts.at_punct("("):
            ts.next()
            args = []
            if not ts.at_punct(")"):
                args.append(parse_expr_stream(ts, params))
                while ts.at_punct(","):
                    ts.next()
                    args.append(parse_expr_stream(ts, params))
            ts.expect("punct", ")")
            if t.text == "len":
                if len(args) != 1:
                    raise SyntaxParseError(f"len takes one argument at {t.pos}")
                return Len(args[0])
            return Op(t.text, tuple(args))
        return Var(t.text)
    raise SyntaxParseError(f"expected an expression, got {t.text!r} at {t.pos}")


def parse_expr(text: str, params: WordParams) -> SymExpr:
    ts = TokenStream(tokenize(text))
    e = parse_expr_stream(ts, params)
    ts.expect("eof")
    return e


# --- printing ----------------------------------------------------------------

_LVL_CMP, _LVL_CAT, _LVL_ADD, _LVL_POST = 0, 1, 2, 3


def print_expr(e: SymExpr, params: WordParams) -> str:
    return _pr(e, params, _LVL_CMP)


def _paren(s: str, need: bool) -> str:
    return f"({s})" if need else s


def _pr(e, params, lvl) -> str:
    match e:
        case Const(bits=b, disp=d):
            return d if d is not None else render_literal(b, params)
        case Var(name=x):
            return x
        case Len(arg=a):
            return f"len({_pr(a, params, _LVL_CMP)})"
        case Concat(left=l, right=r):
            s = f"{_pr(l, params, _LVL_ADD)} @ {_pr(r, params, _LVL_CAT)}"
            return _paren(s, lvl > _LVL_CAT)
        case Range(base=b, offset=o, length=n):
            bare = isinstance(b, (Const, Var, Range, Len)) or (
                isinstance(b, Op) and b.name not in ("+", "-", "*", *RELOPS)
            )
            base = _paren(_pr(b, params, _LVL_CMP), not bare)
            return f"{base}{{{_pr(o, params, _LVL_CMP)}, {_pr(n, params, _LVL_CMP)}}}"
        case Op(name=op, args=args):
            if op in RELOPS and len(args) == 2:
                s = (
                    f"{_pr(args[0], params, _LVL_CAT)} {op} "
                    f"{_pr(args[1], params, _LVL_CAT)}"
                )
                return _paren(s, lvl > _LVL_CMP)
            if op in ("+", "-", "*") and len(args) == 2:
                s = (
                    f"{_pr(args[0], params, _LVL_ADD)} {op} "
                    f"{_pr(args[1], params, _LVL_POST)}"
                )
                return _paren(s, lvl > _LVL_ADD)
            inner = ", ".join(_pr(a, params, _LVL_CMP) for a in args)
            return f"{op}({inner})"
        case Ptr(base=pb, offset=o):
            where = (
                f"stack {pb.name}" if isinstance(pb, StackVar) else f"heap {pb.index}"
            )
            return f"ptr({where}, {_pr(o, params, _LVL_CMP)})"
    raise TypeError(f"not a symbolic expression: {e!r}")
