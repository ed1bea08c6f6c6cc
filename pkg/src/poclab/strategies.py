"""Flaw-selection strategies: a preference-sequence DSL plus builtins.

A strategy is an ordered list of preferences, each naming the flaw
types it accepts ({o,n,s} for opens, nonseparable threats, separable
threats), an optional inclusive repair-cost range, and a tie-breaker.
Selection scans preferences in order and applies the tie-breaker within
the first preference that matches anything.  A strategy must be
exhaustive: every (type, cost) combination has to match some preference,
otherwise selection could come up empty on a live agenda.

Text form, e.g. ``{n,s}LIFO / {o}LIFO`` or ``{n}LIFO / {o}0 LIFO /
{o}1 New / {o}2-inf LIFO / {s}LIFO``.
"""

from __future__ import annotations

import random
import re
import warnings
from dataclasses import dataclass

from .domains import Domain
from .flaws import FROM_START, NEW_STEP, REUSE, enumerate_open_repairs, enumerate_repairs
from .plan import OPEN, Flaw, PartialPlan

FLAW_TYPES = ("o", "n", "s")
TIEBREAKS = ("LIFO", "FIFO", "LC", "R", "New")

_KIND_WORDS = {"o": "open conditions", "n": "nonseparable threats", "s": "separable threats"}


class StrategyError(ValueError):
    """DSL syntax or exhaustiveness error; `position` is a 1-based
    column when the error is positional."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message if position is None else f"column {position}: {message}")
        self.position = position


@dataclass(frozen=True)
class Preference:
    types: tuple[str, ...]
    lo: int = 0
    hi: int | None = None  # None = unbounded
    has_range: bool = False
    tiebreak: str = "LIFO"

    def matches_cost(self, cost: int) -> bool:
        if not self.has_range:
            return True
        return self.lo <= cost and (self.hi is None or cost <= self.hi)

    def __str__(self) -> str:
        types = "{" + ",".join(self.types) + "}"
        if not self.has_range:
            return f"{types}{self.tiebreak}"
        if self.hi == self.lo:
            rng = str(self.lo)
        else:
            rng = f"{self.lo}-{self.hi if self.hi is not None else 'inf'}"
        return f"{types}{rng} {self.tiebreak}"


@dataclass(frozen=True)
class Strategy:
    prefs: tuple[Preference, ...]
    name: str | None = None
    cached_costs: bool = False

    def __str__(self) -> str:
        return " / ".join(str(p) for p in self.prefs)


# ---------------------------------------------------------------------------
# parsing


_TOKEN_RE = re.compile(r"[ \t\n]*(\{|\}|/|,|-|\d+|[A-Za-z]+)")


def _tokenize(text: str) -> list[tuple[str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:]
            if not rest.strip():
                break
            col = pos + len(rest) - len(rest.lstrip()) + 1
            raise StrategyError(f"unexpected character {rest.strip()[0]!r}", col)
        out.append((m.group(1), m.start(1) + 1))
        pos = m.end()
    return out


class _Cursor:
    def __init__(self, tokens: list[tuple[str, int]], text_len: int):
        self.tokens = tokens
        self.i = 0
        self.end = text_len + 1

    def peek(self) -> str | None:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def pos(self) -> int:
        return self.tokens[self.i][1] if self.i < len(self.tokens) else self.end

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise StrategyError("unexpected end of strategy", self.end)
        self.i += 1
        return tok

    def expect(self, tok: str):
        got = self.peek()
        if got != tok:
            raise StrategyError(f"expected '{tok}', got {got!r}", self.pos())
        self.i += 1


def _parse_preference(cur: _Cursor) -> Preference:
    cur.expect("{")
    types: list[str] = []
    while True:
        pos = cur.pos()
        t = cur.take()
        if t not in FLAW_TYPES:
            raise StrategyError(f"flaw type must be one of o, n, s; got {t!r}", pos)
        if t in types:
            raise StrategyError(f"duplicate flaw type {t!r}", pos)
        types.append(t)
        if cur.peek() == ",":
            cur.take()
            continue
        break
    cur.expect("}")
    lo, hi, has_range = 0, None, False
    if cur.peek() is not None and cur.peek().isdigit():
        has_range = True
        lo = int(cur.take())
        hi = lo
        if cur.peek() == "-":
            cur.take()
            pos = cur.pos()
            bound = cur.take()
            if bound == "inf":
                hi = None
            elif bound.isdigit():
                hi = int(bound)
            else:
                raise StrategyError(f"range upper bound must be an integer or inf, got {bound!r}", pos)
            if hi is not None and lo > hi:
                raise StrategyError(f"empty cost range {lo}-{hi}", pos)
    pos = cur.pos()
    word = cur.take()
    canonical = {t.lower(): t for t in TIEBREAKS}.get(word.lower())
    if canonical is None:
        raise StrategyError(f"unknown tie-breaker {word!r} (expected one of {', '.join(TIEBREAKS)})", pos)
    pref = Preference(tuple(types), lo, hi, has_range, canonical)
    if canonical == "New" and not (has_range and lo == 1 and hi == 1):
        warnings.warn("'New' tie-breaking is only meaningful with cost range 1", stacklevel=4)
    return pref


def exhaustiveness_witness(prefs: tuple[Preference, ...]) -> tuple[str, int] | None:
    """(flaw type, cost) matched by no preference, or None if covered."""
    for t in FLAW_TYPES:
        intervals = sorted(
            ((p.lo, p.hi) for p in prefs if t in p.types),
            key=lambda iv: iv[0],
        )
        need: int | None = 0
        for lo, hi in intervals:
            if need is None:
                break
            if lo > need:
                return (t, need)
            if hi is None:
                need = None
            else:
                need = max(need, hi + 1)
        if need is not None:
            return (t, need)
    return None


def parse_strategy(text: str, name: str | None = None) -> Strategy:
    """Parse and validate the DSL; raises StrategyError with a column
    position on syntax errors, or with an uncovered (type, cost) witness
    when the preference sequence is not exhaustive."""
    cur = _Cursor(_tokenize(text), len(text))
    prefs = [_parse_preference(cur)]
    while cur.peek() is not None:
        cur.expect("/")
        prefs.append(_parse_preference(cur))
    witness = exhaustiveness_witness(tuple(prefs))
    if witness is not None:
        t, c = witness
        raise StrategyError(
            f"strategy is not exhaustive: {_KIND_WORDS[t]} uncovered (repair cost {c} matches no preference)"
        )
    return Strategy(tuple(prefs), name=name)


# ---------------------------------------------------------------------------
# builtins


_BUILTIN_DEFS: dict[str, str] = {
    "UCPOP": "{n,s}LIFO / {o}LIFO",
    "UCPOP-LC": "{n,s}LIFO / {o}LC",
    "DSep": "{n}LIFO / {o}LIFO / {s}LIFO",
    "DSep-LC": "{n}LIFO / {o}LC / {s}LIFO",
    "DSep-FIFO": "{n}LIFO / {o}FIFO / {s}LIFO",
    "DUnf": "{n,s}0 LIFO / {n,s}1 LIFO / {o}LIFO / {n,s}2-inf LIFO",
    "DUnf-LC": "{n,s}0 LIFO / {n,s}1 LIFO / {o}LC / {n,s}2-inf LIFO",
    "DUnf-FIFO": "{n,s}0 LIFO / {n,s}1 LIFO / {o}FIFO / {n,s}2-inf LIFO",
    "DUnf-Gen": "{n,s,o}0 LIFO / {n,s,o}1 LIFO / {n,s,o}2-inf LIFO",
    "LCFR": "{o,n,s}LC",
    "LCFR-DSep": "{n,o}LC / {s}LC",
    "ZLIFO": "{n}LIFO / {o}0 LIFO / {o}1 New / {o}2-inf LIFO / {s}LIFO",
    "LIFO": "{o,n,s}LIFO",
    "QLCFR": "{o,n,s}LC",
}

_CACHED_COST_BUILTINS = frozenset({"QLCFR"})

_BUILTIN_LOOKUP = {name.lower(): name for name in _BUILTIN_DEFS}


def builtin_names() -> tuple[str, ...]:
    return tuple(_BUILTIN_DEFS)


def builtin(name: str) -> Strategy:
    """Look up a builtin strategy by (case-insensitive) name."""
    canonical = _BUILTIN_LOOKUP.get(name.lower())
    if canonical is None:
        raise KeyError(f"unknown strategy '{name}' (have: {', '.join(_BUILTIN_DEFS)})")
    s = parse_strategy(_BUILTIN_DEFS[canonical], name=canonical)
    if canonical in _CACHED_COST_BUILTINS:
        s = Strategy(s.prefs, name=canonical, cached_costs=True)
    return s


def describe_builtins() -> list[tuple[str, str]]:
    out = []
    for name, text in _BUILTIN_DEFS.items():
        if name in _CACHED_COST_BUILTINS:
            text += "   (repair costs cached at flaw insertion)"
        out.append((name, text))
    return out


# ---------------------------------------------------------------------------
# selection


_NEW_RANKS = {NEW_STEP: 0, REUSE: 1, FROM_START: 2}


def _new_step_rank(plan: PartialPlan, flaw: Flaw, domain: Domain) -> int:
    """Preference order for 'New': flaws whose sole repair adds a new
    step come first, then sole-reuse, then sole-initial-state; anything
    with several repairs (or a threat) ranks last."""
    if flaw.kind != OPEN:
        return 3
    repairs = enumerate_open_repairs(plan, flaw, domain)
    if len(repairs) != 1:
        return 3
    return _NEW_RANKS.get(repairs[0].kind, 3)


def select_flaw(
    strategy: Strategy,
    plan: PartialPlan,
    domain: Domain,
    rng: random.Random | None = None,
    cost_mode: str = "exact",
) -> Flaw:
    """Pick the flaw to repair from a refreshed, non-empty agenda.

    Costs are computed only for flaws whose type matches a preference
    that actually needs them (a cost range, LC, or New), so cheap
    strategies stay cheap.
    """
    if not plan.agenda:
        raise ValueError("agenda is empty")
    if strategy.cached_costs:
        cost_mode = "cached"
    costs: dict[int, int] = {}  # id(flaw) -> cost; agenda entries are distinct objects

    def cost(f: Flaw) -> int:
        c = costs.get(id(f))
        if c is None:
            if cost_mode == "cached" and f.cached_cost is not None:
                c = f.cached_cost
            else:
                c = len(enumerate_repairs(plan, f, domain))
            costs[id(f)] = c
        return c

    for pref in strategy.prefs:
        if pref.has_range:
            matches = [f for f in plan.agenda if f.kind in pref.types and pref.matches_cost(cost(f))]
        else:
            matches = [f for f in plan.agenda if f.kind in pref.types]
        if not matches:
            continue
        tb = pref.tiebreak
        if len(matches) == 1 and tb != "R":
            return matches[0]
        if tb == "LIFO":
            return max(matches, key=lambda f: f.inserted_at)
        if tb == "FIFO":
            return min(matches, key=lambda f: f.inserted_at)
        if tb == "LC":
            return min(matches, key=lambda f: (cost(f), -f.inserted_at))
        if tb == "New":
            return min(matches, key=lambda f: (_new_step_rank(plan, f, domain), -f.inserted_at))
        if tb == "R":
            if rng is None:
                raise ValueError("strategy uses random tie-breaking; an rng is required")
            return matches[rng.randrange(len(matches))]
        raise AssertionError(f"unhandled tie-breaker {tb}")
    raise RuntimeError("no preference matched any flaw; strategy is not exhaustive")
