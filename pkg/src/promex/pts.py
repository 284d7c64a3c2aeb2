"""Protocol transition systems: attacker-driven execution of labelled
steppers over observation histories.

A transition system here is any object with three members:

    init_env    -- the starting valuation (a dict), usually empty
    init_state  -- the starting process state
    step(env, state, payload, rng) -> Trans | Done | Halted

Each executing process is classified by the kind of its next transition:
reading and control processes consume an attacker-chosen payload, a
randomising process draws from the RNG, writing and event processes
compute their payload themselves, and silent steps take a bare command.
The attacker addresses processes by observation histories: every step
extends the history of the stepped process with the observation it
produced (read, control, and write labels are observable; randomness,
events, and silent work are not) plus the index of the successor.
"""

from __future__ import annotations

import fnmatch
from dataclasses import dataclass, field
from random import Random
from typing import Callable, Optional

from .bits import BitString, LiteralError, parse_literal, render_literal

READ, CTR, RND, WRITE, EVENT, SILENT = \
    "read", "ctr", "rnd", "write", "event", "silent"

# kinds whose label the attacker supplies with the command
COMMANDED = (READ, CTR)
# kinds whose label is an observation extending the history
OBSERVED = (READ, CTR, WRITE)


@dataclass(frozen=True)
class Trans:
    """One enabled transition: its label kind, the label payload (None for
    silent steps), and the successor (env, state) pairs, indexed 1..n in
    order."""

    kind: str
    payload: Optional[BitString]
    successors: tuple


class Done:
    """The process has no instructions left; no transition exists."""

    def __repr__(self):
        return "Done"


DONE = Done()


@dataclass(frozen=True)
class Halted:
    """No transition: a rule premise failed.  Carries the rule name and a
    diagnostic snapshot."""

    rule: str
    reason: str
    snapshot: object = field(default=None, compare=False)


# --- observation histories --------------------------------------------------


def observation(kind: str, payload) -> Optional[tuple]:
    """The observation produced by a transition label, or None for the
    empty observation."""
    if kind in OBSERVED:
        return (kind, payload)
    return None


def render_history(h, params) -> str:
    """Canonical text form of a history: one `<obs>.<index>` element per
    step, joined by `/`; the empty observation renders as nothing."""
    parts = []
    for obs, idx in h:
        if obs is None:
            parts.append(f".{idx}")
        else:
            kind, payload = obs
            lit = render_literal(payload, params) if payload is not None \
                else "eps"
            parts.append(f"{kind[0]}:{lit}.{idx}")
    return "/".join(parts)


# --- attacker scripts ---------------------------------------------------------


@dataclass(frozen=True)
class Deliver:
    selector: str
    kind: Optional[str]  # read | ctr | None for a bare step
    payload: Optional[BitString]


@dataclass(frozen=True)
class Expect:
    payload: BitString


@dataclass(frozen=True)
class Seed:
    value: int


@dataclass(frozen=True)
class AttackerScript:
    entries: tuple

    @property
    def seed(self) -> int:
        for e in self.entries:
            if isinstance(e, Seed):
                return e.value
        return 0


class ScriptError(ValueError):
    pass


def parse_script(text: str, params) -> AttackerScript:
    """Line-oriented attacker scripts:

        seed <u64>
        deliver <selector>                  (bare step)
        deliver <selector> read <literal>
        deliver <selector> ctr <literal>
        expect write <literal>
        # comment
    """
    entries = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        try:
            match words:
                case ["seed", n]:
                    entries.append(Seed(int(n, 0)))
                case ["deliver", sel]:
                    entries.append(Deliver(sel, None, None))
                case ["deliver", sel, ("read" | "ctr") as k, lit]:
                    entries.append(Deliver(sel, k, parse_literal(lit, params)))
                case ["expect", "write", lit]:
                    entries.append(Expect(parse_literal(lit, params)))
                case _:
                    raise ScriptError(f"line {ln}: cannot parse {raw!r}")
        except (ValueError, LiteralError) as e:
            if isinstance(e, ScriptError):
                raise
            raise ScriptError(f"line {ln}: {e}") from None
    return AttackerScript(tuple(entries))


# --- execution ----------------------------------------------------------------

SCRIPT_END, BOUND, MALFORMED, STUCK = \
    "scriptEnd", "bound", "malformed", "stuck"


@dataclass
class ExecResult:
    trace: list  # raised event payloads, in order
    outputs: list  # write payloads forwarded to the attacker, in order
    final_state: dict  # history tuple -> (env, state)
    stop_reason: str
    detail: str = ""


def _resolve(pstate, selector: str, params, exact: bool):
    keys = list(pstate)
    if exact:
        hits = [h for h in keys if render_history(h, params) == selector]
    else:
        hits = [
            h for h in keys
            if fnmatch.fnmatchcase(render_history(h, params), selector)
        ]
    return hits


def execute(T, script: AttackerScript, bound: int = 10000,
            exact_selectors: bool = False, rng: Random | None = None,
            on_step: Callable | None = None) -> ExecResult:
    """Run a transition system under an attacker script.

    The protocol state maps observation histories to executing (env, state)
    pairs, starting from the empty history.  Each deliver entry addresses
    one live process, computes its transition with the given payload, and
    re-keys the successors under the extended histories.  Write payloads are
    forwarded (collected); events are raised (appended to the trace).
    """
    rng = rng if rng is not None else Random(script.seed)
    pstate = {(): (dict(T.init_env), T.init_state)}
    trace = []
    outputs = []
    expected = 0  # outputs already matched by expect entries
    steps = 0

    def result(reason, detail=""):
        return ExecResult(trace, outputs, pstate, reason, detail)

    for entry in script.entries:
        if isinstance(entry, Seed):
            rng = Random(entry.value)
            continue
        if isinstance(entry, Expect):
            if expected >= len(outputs):
                return result(MALFORMED, "expect: no unmatched output")
            got = outputs[expected]
            if got != entry.payload:
                return result(
                    MALFORMED,
                    f"expect: output {expected} differs",
                )
            expected += 1
            continue
        steps += 1
        if steps > bound:
            return result(BOUND)
        hits = _resolve(pstate, entry.selector, T.params, exact_selectors)
        if len(hits) != 1:
            return result(
                MALFORMED,
                f"selector {entry.selector!r} matched {len(hits)} histories",
            )
        h = hits[0]
        env, state = pstate[h]
        out = T.step(env, state, entry.payload, rng)
        if isinstance(out, Done):
            return result(STUCK, "process finished")
        if isinstance(out, Halted):
            return result(STUCK, f"{out.rule}: {out.reason}")
        kind = out.kind
        if kind in COMMANDED and entry.payload is None:
            return result(MALFORMED, f"{kind} step needs a payload")
        if kind not in COMMANDED and entry.payload is not None:
            return result(MALFORMED, f"{kind} step takes no payload")
        if on_step is not None:
            on_step(h, out)
        obs = observation(kind, out.payload)
        del pstate[h]
        for i, succ in enumerate(out.successors, 1):
            pstate[h + ((obs, i),)] = succ
        if kind == WRITE:
            outputs.append(out.payload)
        elif kind == EVENT:
            trace.append(out.payload)
    return result(SCRIPT_END)


# --- trace properties ---------------------------------------------------------


@dataclass(frozen=True)
class Prec:
    """Every event tagged `body` with payload x is preceded by an event
    tagged `head` with the same payload x."""

    head: str
    body: str


@dataclass(frozen=True)
class PrefixPredicate:
    """A pluggable prefix-closed predicate over event traces.  The caller
    asserts prefix closure; it is not enforced."""

    fn: Callable


def check_trace(trace, prop, tagging) -> bool:
    """Is the event trace in the property?  `tagging` maps a payload to a
    (tag, rest) pair or None for untagged payloads."""
    if isinstance(prop, PrefixPredicate):
        return bool(prop.fn(trace))
    if not isinstance(prop, Prec):
        raise TypeError(f"not a trace property: {prop!r}")
    seen_heads = []
    for payload in trace:
        split = tagging(payload)
        if split is None:
            continue
        tag, rest = split
        if tag == prop.body and rest not in seen_heads:
            return False
        if tag == prop.head:
            seen_heads.append(rest)
    return True
