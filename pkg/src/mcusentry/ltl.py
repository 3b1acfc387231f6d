"""Linear temporal logic over finite traces lifted to lassos.

A finite simulator trace is completed to an infinite word by looping its
terminal record (halt or post-reset idle), which is sound because every
proposition is constant on that sink. Two evaluators are provided: a naive
recursive one that follows the operator definitions literally (the
reference), and a vectorized one used on large trace corpora. Tests keep
them in agreement.

Operator semantics on an infinite word w at position i:

    X f     f holds at i+1
    G f     f holds at every j >= i
    f U g   g holds at some k >= i and f holds on [i, k)
    f W g   (f U g) or G f
    f B g   not ((not f) U g): any g-position has a strictly earlier f

Text format is prefix s-expressions, e.g. ``(G (-> (read GPIO) (pc_in ER)))``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import FormulaError

# ---------------------------------------------------------------------------
# AST


class Formula:
    """Base class; nodes are immutable and hashable."""

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class X(Formula):
    sub: Formula


@dataclass(frozen=True)
class G(Formula):
    sub: Formula


@dataclass(frozen=True)
class U(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class W(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class B(Formula):
    left: Formula
    right: Formula


def iff(left: Formula, right: Formula) -> Formula:
    return And(Implies(left, right), Implies(right, left))


def conj(*parts: Formula) -> Formula:
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


# ---------------------------------------------------------------------------
# Lasso traces

PropValuation = Callable[[object], bool]


@dataclass
class LassoTrace:
    """Finite prefix plus a nonempty loop; positions index prefix+loop."""

    prefix: list
    loop: list

    def __post_init__(self):
        if not self.loop:
            raise ValueError("lasso loop must be nonempty")

    @property
    def length(self) -> int:
        return len(self.prefix) + len(self.loop)

    @property
    def loop_start(self) -> int:
        return len(self.prefix)

    def state(self, pos: int):
        states = self.prefix + self.loop
        return states[pos]

    def successor(self, pos: int) -> int:
        return pos + 1 if pos + 1 < self.length else self.loop_start

    @staticmethod
    def from_records(records: Sequence) -> "LassoTrace":
        """Stutter-complete a finite record sequence on its final record."""
        if not records:
            raise ValueError("cannot lift an empty trace")
        return LassoTrace(prefix=list(records[:-1]), loop=[records[-1]])


# ---------------------------------------------------------------------------
# Naive reference evaluator


def eval_naive(f: Formula, trace: LassoTrace, pos: int = 0,
               props: dict[str, PropValuation] | None = None) -> bool:
    """Literal recursive evaluation; the semantic reference."""
    n = trace.length
    ls = trace.loop_start
    if not 0 <= pos < n:
        raise ValueError(f"position {pos} outside unrolled trace of length {n}")

    def prop_at(name: str, i: int) -> bool:
        state = trace.state(i)
        if props is not None:
            return bool(props[name](state))
        return bool(getattr(state, name))

    def reach(i: int) -> range:
        # Positions visited from i onward: the remaining prefix plus the
        # whole loop (from inside the loop, the wrap covers [ls, i) too).
        return range(i if i < ls else ls, n)

    def ev(g: Formula, i: int) -> bool:
        if isinstance(g, Prop):
            return prop_at(g.name, i)
        if isinstance(g, Not):
            return not ev(g.sub, i)
        if isinstance(g, And):
            return ev(g.left, i) and ev(g.right, i)
        if isinstance(g, Or):
            return ev(g.left, i) or ev(g.right, i)
        if isinstance(g, Implies):
            return (not ev(g.left, i)) or ev(g.right, i)
        if isinstance(g, X):
            return ev(g.sub, trace.successor(i))
        if isinstance(g, G):
            return all(ev(g.sub, j) for j in reach(i))
        if isinstance(g, U):
            # Walk successors until a repeat: if right never holds before the
            # walk closes on itself, the until fails.
            j = i
            seen = set()
            while j not in seen:
                seen.add(j)
                if ev(g.right, j):
                    return True
                if not ev(g.left, j):
                    return False
                j = trace.successor(j)
            return False
        if isinstance(g, W):
            j = i
            seen = set()
            while j not in seen:
                seen.add(j)
                if ev(g.right, j):
                    return True
                if not ev(g.left, j):
                    return False
                j = trace.successor(j)
            return True  # left held forever around the loop
        if isinstance(g, B):
            # not ((not left) U right), unfolded natively.
            j = i
            seen = set()
            while j not in seen:
                seen.add(j)
                if ev(g.right, j):
                    return False
                if ev(g.left, j):
                    return True
                j = trace.successor(j)
            return True
        raise TypeError(f"unknown formula node {g!r}")

    return ev(f, pos)


# ---------------------------------------------------------------------------
# Vectorized evaluator


def _first_true_at_or_after(flags: np.ndarray) -> np.ndarray:
    """first[i] = least k >= i with flags[k], else len(flags)."""
    n = len(flags)
    idx = np.where(flags, np.arange(n), n)
    return np.minimum.accumulate(idx[::-1])[::-1]


def eval_vector(f: Formula, trace: LassoTrace,
                props: dict[str, PropValuation] | None = None) -> np.ndarray:
    """Evaluate ``f`` at every position; returns a bool array of length n.

    Temporal operators are computed on the trace doubled around its loop:
    one extra unrolling is enough for the least-fixpoint operators because
    every position then sees a full loop iteration ahead of it.
    """
    n = trace.length
    ls = trace.loop_start
    loop_len = n - ls
    ext = n + loop_len  # doubled-loop horizon

    def extend(vals: np.ndarray) -> np.ndarray:
        return np.concatenate([vals, vals[ls:n]])

    cache: dict[Formula, np.ndarray] = {}

    def ev(g: Formula) -> np.ndarray:
        if g in cache:
            return cache[g]
        if isinstance(g, Prop):
            if props is not None:
                fn = props[g.name]
                out = np.fromiter((bool(fn(trace.state(i))) for i in range(n)),
                                  dtype=bool, count=n)
            else:
                out = np.fromiter((bool(getattr(trace.state(i), g.name))
                                   for i in range(n)), dtype=bool, count=n)
        elif isinstance(g, Not):
            out = ~ev(g.sub)
        elif isinstance(g, And):
            out = ev(g.left) & ev(g.right)
        elif isinstance(g, Or):
            out = ev(g.left) | ev(g.right)
        elif isinstance(g, Implies):
            out = ~ev(g.left) | ev(g.right)
        elif isinstance(g, X):
            sub = ev(g.sub)
            out = np.empty(n, dtype=bool)
            out[:n - 1] = sub[1:]
            out[n - 1] = sub[ls]
        elif isinstance(g, G):
            sub = ev(g.sub)
            suffix_all = np.logical_and.accumulate(sub[::-1])[::-1]
            loop_all = bool(sub[ls:].all())
            out = suffix_all & loop_all
        elif isinstance(g, (U, W, B)):
            if isinstance(g, B):
                left = ~ev(g.left)
                right = ev(g.right)
            else:
                left = ev(g.left)
                right = ev(g.right)
            lx = extend(left)
            rx = extend(right)
            first_right = _first_true_at_or_after(rx)
            first_not_left = _first_true_at_or_after(~lx)
            until_ext = first_right <= first_not_left
            until = until_ext[:n] & (first_right[:n] < ext)
            if isinstance(g, U):
                out = until
            elif isinstance(g, W):
                loop_left_all = bool(left[ls:].all())
                g_left = np.logical_and.accumulate(left[::-1])[::-1] & loop_left_all
                out = until | g_left
            else:  # B
                out = ~until
        else:
            raise TypeError(f"unknown formula node {g!r}")
        cache[g] = out
        return out

    return ev(f)


def eval_formula(f: Formula, trace: LassoTrace, pos: int = 0,
                 props: dict[str, PropValuation] | None = None) -> bool:
    """Fast-path evaluation at one position (vectorized under the hood)."""
    return bool(eval_vector(f, trace, props)[pos])


# ---------------------------------------------------------------------------
# Text format

_BINARY = {"U": U, "W": W, "B": B, "&": And, "|": Or, "->": Implies}
_UNARY = {"X": X, "G": G, "!": Not}


@dataclass
class _Tokens:
    items: list[tuple[str, int]]
    pos: int = 0

    def peek(self) -> tuple[str, int] | None:
        return self.items[self.pos] if self.pos < len(self.items) else None

    def next(self) -> tuple[str, int]:
        tok = self.peek()
        if tok is None:
            raise FormulaError("unexpected end of input")
        self.pos += 1
        return tok


def _tokenize(text: str) -> _Tokens:
    items = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "()":
            items.append((c, i))
            i += 1
            continue
        j = i
        while j < len(text) and not text[j].isspace() and text[j] not in "()":
            j += 1
        items.append((text[i:j], i))
        i = j
    return _Tokens(items)


def parse(text: str) -> Formula:
    """Parse the prefix s-expression format with positioned errors.

    A top-level operator application may omit its outer parentheses,
    e.g. ``G (-> (read GPIO) (pc_in ER))``.
    """
    stripped = text.strip()
    head = stripped.split(None, 1)[0] if stripped else ""
    if head in _UNARY or head in _BINARY:
        return parse(f"({stripped})")
    toks = _tokenize(text)
    f = _parse_expr(toks)
    trailing = toks.peek()
    if trailing is not None:
        raise FormulaError(f"trailing input {trailing[0]!r}", trailing[1])
    return f


def _parse_expr(toks: _Tokens) -> Formula:
    tok, off = toks.next()
    if tok == ")":
        raise FormulaError("unexpected ')'", off)
    if tok != "(":
        return Prop(tok)
    head, hoff = toks.next()
    if head in _UNARY:
        sub = _parse_expr(toks)
        _expect_close(toks, head, hoff)
        return _UNARY[head](sub)
    if head in _BINARY:
        left = _parse_expr(toks)
        right = _parse_expr(toks)
        _expect_close(toks, head, hoff)
        return _BINARY[head](left, right)
    # Parametrized proposition like (read GPIO) or (pc_at ermax).
    parts = [head]
    while True:
        tok = toks.peek()
        if tok is None:
            raise FormulaError("missing ')'", hoff)
        if tok[0] == ")":
            toks.next()
            break
        if tok[0] == "(":
            raise FormulaError(f"operator {head!r} is not known", hoff)
        parts.append(toks.next()[0])
    return Prop(" ".join(parts))


def _expect_close(toks: _Tokens, head: str, off: int) -> None:
    tok = toks.peek()
    if tok is None or tok[0] != ")":
        raise FormulaError(f"missing ')' after {head!r}", off)
    toks.next()


def to_text(f: Formula) -> str:
    if isinstance(f, Prop):
        return f"({f.name})" if " " in f.name else f.name
    if isinstance(f, Not):
        return f"(! {to_text(f.sub)})"
    if isinstance(f, X):
        return f"(X {to_text(f.sub)})"
    if isinstance(f, G):
        return f"(G {to_text(f.sub)})"
    if isinstance(f, And):
        return f"(& {to_text(f.left)} {to_text(f.right)})"
    if isinstance(f, Or):
        return f"(| {to_text(f.left)} {to_text(f.right)})"
    if isinstance(f, Implies):
        return f"(-> {to_text(f.left)} {to_text(f.right)})"
    if isinstance(f, U):
        return f"(U {to_text(f.left)} {to_text(f.right)})"
    if isinstance(f, W):
        return f"(W {to_text(f.left)} {to_text(f.right)})"
    if isinstance(f, B):
        return f"(B {to_text(f.left)} {to_text(f.right)})"
    raise TypeError(f"unknown formula node {f!r}")
