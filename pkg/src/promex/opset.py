"""Operation registry: concrete bitstring implementations plus the metadata
(result-length laws, comparison rewrites, crypto classification) that the
solver, the simplifier, and the translator read off each operation.

Crypto operations are opaque deterministic stubs: tag-prefixed digests or
tag-framed encodings good enough to run protocols concretely and to test
extraction differentially.  They make no security claims.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Optional

from .bits import BitString, WordParams, bs, concat, from_text, sub, val


@dataclass(frozen=True)
class LengthSpec:
    """Result-length law of an operation: either a fixed bit count or the
    length of one argument.  Each law is handed to the solver as a
    universally quantified axiom over applications of the op."""

    kind: str  # "fixed" | "same_as"
    value: int

    def __post_init__(self):
        if self.kind not in ("fixed", "same_as"):
            raise ValueError(self.kind)


def fixed_len(n: int) -> LengthSpec:
    return LengthSpec("fixed", n)


def same_as(arg_index: int) -> LengthSpec:
    return LengthSpec("same_as", arg_index)


@dataclass(frozen=True)
class OpSpec:
    name: str
    arity: int
    fn: Callable  # (params, *args) -> BitString | None
    kind: str = "other"  # arith | compare | logic | crypto | other
    deterministic: bool = True
    total: bool = True
    compare_rewrite: bool = False  # (op(a,b) = i0)  ~>  a = b
    length: Optional[LengthSpec] = None
    tag: Optional[BitString] = None  # payload tag prefix, for event splitting


class OpSet:
    """A name -> OpSpec registry with tag-prefix lookup for event payloads."""

    def __init__(self, specs=()):
        self._specs: dict[str, OpSpec] = {}
        for s in specs:
            self.register(s)

    def register(self, spec: OpSpec):
        if spec.name in self._specs:
            raise ValueError(f"duplicate op {spec.name}")
        if spec.tag is not None:
            for other in self._specs.values():
                if other.tag is not None and _prefix_related(spec.tag, other.tag):
                    raise ValueError(
                        f"tag of {spec.name} collides with {other.name}"
                    )
        self._specs[spec.name] = spec

    def __getitem__(self, name: str) -> OpSpec:
        return self._specs[name]

    def __contains__(self, name: str) -> bool:
        return name in self._specs

    def get(self, name: str) -> "OpSpec | None":
        return self._specs.get(name)

    def names(self):
        return sorted(self._specs)

    def specs(self):
        return [self._specs[n] for n in self.names()]

    def length_axioms(self):
        """(op name, arity, LengthSpec) triples for every op with a law."""
        return [
            (s.name, s.arity, s.length)
            for s in self.specs()
            if s.length is not None
        ]

    def split_event(self, payload: BitString):
        """Match a concrete event payload against registered tag prefixes.
        Returns (op name, rest-of-payload) or None."""
        for s in self.specs():
            if s.tag is not None and len(payload) >= len(s.tag):
                if sub(payload, 0, len(s.tag)) == s.tag:
                    return s.name, sub(payload, len(s.tag), len(payload) - len(s.tag))
        return None


def _prefix_related(a: BitString, b: BitString) -> bool:
    k = min(len(a), len(b))
    return sub(a, 0, k) == sub(b, 0, k)


# --- machine arithmetic -----------------------------------------------------

def _modular(f):
    def impl(params, a, b):
        if len(a) != len(b):
            return None
        return BitString(len(a), f(val(a), val(b)) % (1 << len(a)))

    return impl


def _add_widening(params, a, b):
    return bs(val(a) + val(b), params)


def _sub_natural(params, a, b):
    if val(a) < val(b):
        return None
    return bs(val(a) - val(b), params)


def _bool(params, truth: bool) -> BitString:
    return bs(1 if truth else 0, params)


def _cmp_by_val(rel):
    def impl(params, a, b):
        return _bool(params, rel(val(a), val(b)))

    return impl


def _signed(b: BitString) -> int:
    v = val(b)
    if len(b) and (v >> (len(b) - 1)) & 1:
        v -= 1 << len(b)
    return v


def _cmp_signed(rel):
    def impl(params, a, b):
        if len(a) != len(b):
            return None
        return _bool(params, rel(_signed(a), _signed(b)))

    return impl


def _truth_in(params, b):
    # i0/i1 by value; anything else is not a truth value
    v = val(b)
    return v if v in (0, 1) else None


def _not(params, a):
    v = _truth_in(params, a)
    return None if v is None else _bool(params, v == 0)


def _or(params, a, b):
    va, vb = _truth_in(params, a), _truth_in(params, b)
    if va is None or vb is None:
        return None
    return _bool(params, bool(va or vb))


def _and(params, a, b):
    va, vb = _truth_in(params, a), _truth_in(params, b)
    if va is None or vb is None:
        return None
    return _bool(params, bool(va and vb))


def _cmp_bytes(params, a, b):
    # memcmp-style: i0 on equal bitstrings, i1 otherwise
    return _bool(params, not (a == b))


def _eq_bits(params, a, b):
    # Bitstring identity, not value equality: (cmp(a,b) = i0) and (a = b)
    # must agree, or rewriting one into the other would change behaviour.
    return _bool(params, a == b)


def _eq_destructor(params, a, b):
    return a if a == b else None


def _nonce(params, a):
    return a


# --- opaque crypto stubs ----------------------------------------------------

def _ser(args) -> bytes:
    out = bytearray()
    for a in args:
        out += len(a).to_bytes(8, "little")
        out += a.value.to_bytes((len(a) + 7) // 8 or 1, "little")
    return bytes(out)


def _digest_stub(label: str, nbits: int):
    tag = label.encode()

    def impl(params, *args):
        h = hashlib.blake2b(tag + _ser(args), digest_size=16).digest()
        return BitString(nbits, int.from_bytes(h, "little") & ((1 << nbits) - 1))

    return impl


_T_EK = from_text("\xeb")
_T_DK = from_text("\xdb")
_T_ENC = from_text("\xec")
_T_E3 = from_text("\xee")


def _len32(b: BitString) -> BitString:
    return BitString(32, len(b))


def _take(b: BitString, pos: int, n: int):
    piece = sub(b, pos, n)
    return piece, pos + n


def _ek(params, r):
    return concat(_T_EK, r)


def _dk(params, r):
    return concat(_T_DK, r)


def _seed_of(key: BitString, tag: BitString):
    if len(key) < len(tag) or sub(key, 0, len(tag)) != tag:
        return None
    return sub(key, len(tag), len(key) - len(tag))


def _encrypt(params, k, m):
    return concat(concat(concat(_T_ENC, _len32(k)), k), m)


def _decrypt(params, k2, c):
    pos = 0
    t, pos = _take(c, pos, len(_T_ENC))
    if t != _T_ENC:
        return None
    klen_bits, pos = _take(c, pos, 32)
    if klen_bits is None:
        return None
    k, pos = _take(c, pos, val(klen_bits))
    if k is None:
        return None
    if k != k2:
        # asymmetric use: stored key must be ek(r) for our dk(r)
        r = _seed_of(k2, _T_DK)
        if r is None or k != concat(_T_EK, r):
            return None
    return sub(c, pos, len(c) - pos)


def _e3(params, pk, m, r):
    body = concat(concat(_len32(pk), pk), concat(_len32(m), m))
    return concat(concat(_T_E3, body), r)


def _parse_e3(c):
    pos = 0
    t, pos = _take(c, pos, len(_T_E3))
    if t != _T_E3:
        return None
    pklen, pos = _take(c, pos, 32)
    if pklen is None:
        return None
    pk, pos = _take(c, pos, val(pklen))
    if pk is None:
        return None
    mlen, pos = _take(c, pos, 32)
    if mlen is None:
        return None
    m, pos = _take(c, pos, val(mlen))
    if m is None:
        return None
    r = sub(c, pos, len(c) - pos)
    return pk, m, r


def _d2(params, sk, c):
    parsed = _parse_e3(c)
    if parsed is None:
        return None
    pk, m, _r = parsed
    r = _seed_of(sk, _T_DK)
    if r is None or pk != concat(_T_EK, r):
        return None
    return m


def _isek(params, x):
    return x if _seed_of(x, _T_EK) is not None else None


def _isenc(params, x):
    return x if _parse_e3(x) is not None else None


def _ekof(params, c):
    parsed = _parse_e3(c)
    return None if parsed is None else parsed[0]


def _pair(params, a, b):
    return concat(concat(_len32(a), a), b)


def _fst(params, p):
    n, pos = _take(p, 0, 32)
    if n is None:
        return None
    return sub(p, pos, val(n)) if pos + val(n) <= len(p) else None


def _snd(params, p):
    n, pos = _take(p, 0, 32)
    if n is None:
        return None
    pos += val(n)
    if pos > len(p):
        return None
    return sub(p, pos, len(p) - pos)


def _tagged(label: str):
    tag = from_text(label)

    def impl(params, a):
        return concat(tag, a)

    return impl, tag


def core_specs():
    import operator as _op

    return [
        OpSpec("+", 2, _modular(_op.add), kind="arith", total=False, length=same_as(0)),
        OpSpec("-", 2, _modular(_op.sub), kind="arith", total=False, length=same_as(0)),
        OpSpec("*", 2, _modular(_op.mul), kind="arith", total=False, length=same_as(0)),
        OpSpec("addN", 2, _add_widening, kind="arith"),
        OpSpec("subN", 2, _sub_natural, kind="arith", total=False),
        OpSpec("=", 2, _eq_bits, kind="compare"),
        OpSpec("<=", 2, _cmp_by_val(_op.le), kind="compare"),
        OpSpec("<", 2, _cmp_by_val(_op.lt), kind="compare"),
        OpSpec(">=", 2, _cmp_by_val(_op.ge), kind="compare"),
        OpSpec(">", 2, _cmp_by_val(_op.gt), kind="compare"),
        OpSpec("<=s", 2, _cmp_signed(_op.le), kind="compare", total=False),
        OpSpec("<s", 2, _cmp_signed(_op.lt), kind="compare", total=False),
        OpSpec("not", 1, _not, kind="logic", total=False),
        OpSpec("or", 2, _or, kind="logic", total=False),
        OpSpec("and", 2, _and, kind="logic", total=False),
        OpSpec("cmp", 2, _cmp_bytes, kind="compare", compare_rewrite=True),
        OpSpec("eq", 2, _eq_destructor, kind="crypto", total=False),
        OpSpec("nonce", 1, _nonce, kind="crypto", length=same_as(0)),
    ]


def fixture_specs():
    acc_fn, acc_tag = _tagged("acc")
    req_fn, req_tag = _tagged("req")
    fin_fn, fin_tag = _tagged("fin")
    return [
        OpSpec("mac", 2, _digest_stub("mac", 20), kind="crypto", length=fixed_len(20)),
        OpSpec("sha1", 1, _digest_stub("sha1", 20), kind="crypto", length=fixed_len(20)),
        OpSpec("kdf", 2, _digest_stub("kdf", 16), kind="crypto", length=fixed_len(16)),
        OpSpec("acc", 1, acc_fn, kind="crypto", tag=acc_tag),
        OpSpec("req", 1, req_fn, kind="crypto", tag=req_tag),
        OpSpec("fin", 1, fin_fn, kind="crypto", tag=fin_tag),
        OpSpec("encrypt", 2, _encrypt, kind="crypto", total=False),
        OpSpec("decrypt", 2, _decrypt, kind="crypto", total=False),
        OpSpec("ek", 1, _ek, kind="crypto"),
        OpSpec("dk", 1, _dk, kind="crypto"),
        OpSpec("E", 3, _e3, kind="crypto", total=False),
        OpSpec("D", 2, _d2, kind="crypto", total=False),
        OpSpec("isek", 1, _isek, kind="crypto", total=False),
        OpSpec("isenc", 1, _isenc, kind="crypto", total=False),
        OpSpec("ekof", 1, _ekof, kind="crypto", total=False),
        OpSpec("pair", 2, _pair, kind="crypto"),
        OpSpec("fst", 1, _fst, kind="crypto", total=False),
        OpSpec("snd", 1, _snd, kind="crypto", total=False),
    ]


PROFILES = {
    "core": core_specs,
    "fixtures": lambda: core_specs() + fixture_specs(),
}


def build_opset(profile: str = "fixtures") -> OpSet:
    try:
        factory = PROFILES[profile]
    except KeyError:
        raise ValueError(
            f"unknown opset profile {profile!r}; known: {sorted(PROFILES)}"
        ) from None
    return OpSet(factory())
