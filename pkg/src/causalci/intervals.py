"""Clipped interval arithmetic on [0,1] and radius propagation.

A :class:`ProbInterval` is ``midpoint ± halfwidth`` realized as the subset
``[mid-hw, mid+hw] ∩ [0,1]``; an infinite halfwidth realizes exactly
[0,1].  The binary operations return the *sound superset* forms

    (a ± Δa) + (b ± Δb)  ⊆  (a+b) ± (Δa+Δb)
    (a ± Δa) × (b ± Δb)  ⊆  (a·b) ± (Δa+Δb)

rather than the tight products, because the effect half-widths are defined
in terms of these forms.  Evaluating an expression tree of +, −, × over
bound intervals therefore yields midpoint = expression at the midpoints
and halfwidth = sum of the leaf halfwidths counted with multiplicity
(every occurrence of a variable contributes once).

Midpoints may leave [0,1] transiently (after a subtraction); only realized
sets are clipped.  :func:`exact_range` is a testing oracle that samples
the pointwise semantics of the interval operations, where each operation's
result set is intersected with [0,1]; sampled combinations whose value
escapes [0,1] at an intermediate node are infeasible and dropped, so the
reported range never overstates the true composed set.

Guarantee domain: the superset property (pointwise composed set inside
midpoint ± summed radii) is proved by induction over the operations, and
the product step needs both operand midpoints in [0,1].  It therefore
holds whenever every node of the tree evaluates, at the bound midpoints,
to a value in [0,1] — true for every probability-adjustment polynomial,
whose partial sums are estimate-weighted averages.  Outside that domain
(an intermediate midpoint above 1 whose clipped set is still non-empty)
the product rule can genuinely under-cover; :func:`node_midpoints` lets
callers check the condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np


@dataclass(frozen=True)
class ProbInterval:
    midpoint: float
    halfwidth: float

    def __post_init__(self):
        if not (self.halfwidth >= 0):
            raise ValueError("halfwidth must be non-negative")

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.halfwidth)

    @property
    def lower(self) -> float:
        return max(0.0, self.midpoint - self.halfwidth)

    @property
    def upper(self) -> float:
        return min(1.0, self.midpoint + self.halfwidth)

    @property
    def is_empty(self) -> bool:
        return self.lower > self.upper

    def realized(self) -> tuple[float, float] | None:
        """The clipped interval as (lower, upper), or None when empty."""
        lo, hi = self.lower, self.upper
        return None if lo > hi else (lo, hi)

    def contains(self, p: float) -> bool:
        lo, hi = self.lower, self.upper
        return lo <= p <= hi


def iv_add(a: ProbInterval, b: ProbInterval) -> ProbInterval:
    return ProbInterval(a.midpoint + b.midpoint, a.halfwidth + b.halfwidth)


def iv_sub(a: ProbInterval, b: ProbInterval) -> ProbInterval:
    return ProbInterval(a.midpoint - b.midpoint, a.halfwidth + b.halfwidth)


def iv_mul(a: ProbInterval, b: ProbInterval) -> ProbInterval:
    return ProbInterval(a.midpoint * b.midpoint, a.halfwidth + b.halfwidth)


# -- expression trees ---------------------------------------------------------

class Expr:
    """A formal arithmetic expression over named variables (+, −, ×)."""

    __slots__ = ()

    def __add__(self, other: "Expr") -> "Expr":
        return BinOp('+', self, other)

    def __sub__(self, other: "Expr") -> "Expr":
        return BinOp('-', self, other)

    def __mul__(self, other: "Expr") -> "Expr":
        return BinOp('*', self, other)

    def leaves(self) -> Iterator["Var"]:
        raise NotImplementedError

    def leaf_count(self) -> int:
        return sum(1 for _ in self.leaves())


@dataclass(frozen=True)
class Var(Expr):
    __slots__ = ('name',)
    name: str

    def leaves(self) -> Iterator["Var"]:
        yield self


@dataclass(frozen=True)
class BinOp(Expr):
    __slots__ = ('op', 'left', 'right')
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in ('+', '-', '*'):
            raise ValueError(f"unsupported operation {self.op!r}")

    def leaves(self) -> Iterator[Var]:
        yield from self.left.leaves()
        yield from self.right.leaves()


def eval_expr(expr: Expr, bindings: Mapping[str, ProbInterval]) -> ProbInterval:
    """Fold the superset operations over the tree.

    The result has midpoint = the expression evaluated at the bound
    midpoints and halfwidth = the sum of the bound halfwidths over leaf
    occurrences (duplicates counted).
    """
    if isinstance(expr, Var):
        try:
            return bindings[expr.name]
        except KeyError:
            raise ValueError(f"unbound variable {expr.name!r}") from None
    assert isinstance(expr, BinOp)
    left = eval_expr(expr.left, bindings)
    right = eval_expr(expr.right, bindings)
    op = {'+': iv_add, '-': iv_sub, '*': iv_mul}[expr.op]
    return op(left, right)


def node_midpoints(expr: Expr, bindings: Mapping[str, ProbInterval]) -> list[float]:
    """Midpoint evaluation of every node (leaves included), root last.

    The composition guarantee — exact_range inside eval_expr's realized
    set — holds when all of these lie in [0,1]; see the module docstring.
    """
    out: list[float] = []

    def walk(node: Expr) -> float:
        if isinstance(node, Var):
            try:
                value = bindings[node.name].midpoint
            except KeyError:
                raise ValueError(f"unbound variable {node.name!r}") from None
        else:
            assert isinstance(node, BinOp)
            left = walk(node.left)
            right = walk(node.right)
            value = {'+': left + right, '-': left - right,
                     '*': left * right}[node.op]
        out.append(value)
        return value

    walk(expr)
    return out


MAX_EXACT_LEAVES = 12


def exact_range(expr: Expr, bindings: Mapping[str, ProbInterval],
                grid: int = 4) -> tuple[float, float] | None:
    """Sampled range of the pointwise interval-composition semantics.

    Every leaf occurrence ranges independently over its binding's realized
    set (repeats of the same variable are treated as independent, matching
    the duplicate-counting halfwidth accounting).  Samples are the
    realized endpoints plus a small grid; each operation's values are
    restricted to [0,1], combinations escaping it are dropped.  Returns
    None when the composed set is empty.  Because the tree is multilinear
    in every leaf occurrence and clipping is monotone, the endpoint
    samples alone already attain the extrema of the feasible combinations.
    """
    occurrences = list(expr.leaves())
    if len(occurrences) > MAX_EXACT_LEAVES:
        raise ValueError(f"expression too large ({len(occurrences)} leaves, "
                         f"max {MAX_EXACT_LEAVES})")
    axes = []
    for leaf in occurrences:
        if leaf.name not in bindings:
            raise ValueError(f"unbound variable {leaf.name!r}")
        realized = bindings[leaf.name].realized()
        if realized is None:
            return None
        lo, hi = realized
        pts = np.unique(np.concatenate([np.linspace(lo, hi, max(grid, 2)), [lo, hi]]))
        axes.append(pts)
    total = math.prod(len(a) for a in axes)
    if total > 300_000:  # corners still attain the extrema
        axes = [np.unique(np.array([a[0], a[-1]])) for a in axes]
    mesh = np.meshgrid(*axes, indexing='ij')
    columns = iter(m.reshape(-1) for m in mesh)

    def walk(node: Expr) -> np.ndarray:
        if isinstance(node, Var):
            return next(columns)
        assert isinstance(node, BinOp)
        left = walk(node.left)
        right = walk(node.right)
        if node.op == '+':
            vals = left + right
        elif node.op == '-':
            vals = left - right
        else:
            vals = left * right
        return np.where((vals < 0.0) | (vals > 1.0), np.nan, vals)

    values = walk(expr)
    if np.all(np.isnan(values)):
        return None
    return float(np.nanmin(values)), float(np.nanmax(values))
