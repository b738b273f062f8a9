"""Finite-variable DAGs and the back-door / front-door adjustment criteria.

Blocking follows standard d-separation semantics: a path between two
vertices is *blocked* by a conditioning set S iff it contains an interior
vertex v such that either

* v is a non-collider on the path (at least one of its two path edges
  points away from v) and v is in S, or
* v is a collider on the path (both path edges point into v) and neither v
  nor any descendant of v is in S.

A *backdoor path* from a to b is a path whose first edge points into a.
The back-door criterion for disjoint vertex sets X, Y, Z requires that no
Z-vertex is a descendant of any X-vertex and that Z blocks every backdoor
path from every X-vertex to every Y-vertex.  The front-door criterion for
single vertices x, y and a set Z requires that (i) every directed path
from x to y passes through Z, (ii) no backdoor path from x to a Z-vertex
is unblocked given the empty set, and (iii) every backdoor path from a
Z-vertex to y is blocked by {x}.

Criterion checks are advisory: the effect estimators accept user overrides
for situations where graph knowledge (e.g. about unobserved confounders
kept out of the adjustment formula) justifies skipping the structural
test.

Dags are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence


class DagParseError(ValueError):
    """Raised by the text-format parser; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class Dag:
    """A directed acyclic graph over named variables with finite domains."""

    def __init__(self, vertices: Sequence[str], edges: Iterable[tuple[str, str]],
                 domains: dict | None = None):
        self.vertices = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex names")
        vset = set(self.vertices)
        self.edges = frozenset((str(a), str(b)) for a, b in edges)
        for a, b in self.edges:
            if a not in vset or b not in vset:
                raise ValueError(f"edge ({a}, {b}) uses an undeclared vertex")
            if a == b:
                raise ValueError(f"self-loop at {a}")
        domains = domains or {}
        self.domains = {v: tuple(domains.get(v, (0, 1))) for v in self.vertices}
        for v, dom in self.domains.items():
            if not dom:
                raise ValueError(f"empty domain for {v}")

        self._children = {v: [] for v in self.vertices}
        self._parents = {v: [] for v in self.vertices}
        order = {v: i for i, v in enumerate(self.vertices)}
        for a, b in sorted(self.edges, key=lambda e: (order[e[0]], order[e[1]])):
            self._children[a].append(b)
            self._parents[b].append(a)

        self._topo = self._topological_sort()
        self._descendants = self._close_descendants()

    def _topological_sort(self) -> tuple[str, ...]:
        indeg = {v: len(self._parents[v]) for v in self.vertices}
        ready = [v for v in self.vertices if indeg[v] == 0]
        out: list[str] = []
        while ready:
            v = ready.pop(0)
            out.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(out) != len(self.vertices):
            cyclic = sorted(v for v in self.vertices if indeg[v] > 0)
            raise ValueError(f"graph has a cycle through {cyclic}")
        return tuple(out)

    def _close_descendants(self) -> dict[str, frozenset]:
        desc: dict[str, set] = {v: set() for v in self.vertices}
        for v in reversed(self._topo):
            for c in self._children[v]:
                desc[v].add(c)
                desc[v] |= desc[c]
        return {v: frozenset(s) for v, s in desc.items()}

    def parents(self, v: str) -> tuple[str, ...]:
        return tuple(self._parents[v])

    def children(self, v: str) -> tuple[str, ...]:
        return tuple(self._children[v])

    def descendants(self, v: str) -> frozenset:
        """All vertices reachable from v by directed edges (v excluded)."""
        return self._descendants[v]

    def topological_order(self) -> tuple[str, ...]:
        return self._topo

    def has_edge(self, a: str, b: str) -> bool:
        return (a, b) in self.edges

    def require(self, *names: str) -> None:
        for name in names:
            if name not in self._children:
                raise ValueError(f"unknown variable {name!r}")


@dataclass(frozen=True)
class CriterionReport:
    """Outcome of a criterion check with human-readable witnesses."""

    satisfied: bool
    violations: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.satisfied != (not self.violations):
            raise ValueError("satisfied flag inconsistent with violations")

    @classmethod
    def from_violations(cls, violations: Sequence[str]) -> "CriterionReport":
        vs = tuple(violations)
        return cls(satisfied=not vs, violations=vs)


def enumerate_paths(dag: Dag, a: str, b: str) -> list[tuple[str, ...]]:
    """All simple paths between a and b ignoring edge direction.

    Each path is the tuple of visited vertices; per-edge orientation is
    recoverable from the dag.  Deterministic order (DFS over neighbors in
    declaration order).
    """
    dag.require(a, b)
    if a == b:
        raise ValueError("endpoints must differ")
    neighbors = {v: dag.children(v) + dag.parents(v) for v in dag.vertices}
    order = {v: i for i, v in enumerate(dag.vertices)}
    paths: list[tuple[str, ...]] = []
    stack = [a]
    on_path = {a}

    def walk(v: str) -> None:
        for w in sorted(neighbors[v], key=order.get):
            if w == b:
                paths.append(tuple(stack) + (b,))
            elif w not in on_path:
                stack.append(w)
                on_path.add(w)
                walk(w)
                on_path.discard(w)
                stack.pop()

    walk(a)
    return paths


def format_path(dag: Dag, path: Sequence[str]) -> str:
    """Render a path with its edge orientations, e.g. ``X←Z→Y``."""
    parts = [path[0]]
    for u, v in zip(path, path[1:]):
        parts.append('→' if dag.has_edge(u, v) else '←')
        parts.append(v)
    return ''.join(parts)


def path_blocked(path: Sequence[str], conditioning: Iterable[str], dag: Dag) -> bool:
    """d-separation blocking test for one path (see module docstring)."""
    cond = set(conditioning)
    for i in range(1, len(path) - 1):
        v = path[i]
        collider = dag.has_edge(path[i - 1], v) and dag.has_edge(path[i + 1], v)
        if collider:
            if not cond & ({v} | dag.descendants(v)):
                return True
        elif v in cond:
            return True
    return False


def _backdoor_paths(dag: Dag, a: str, b: str) -> list[tuple[str, ...]]:
    return [p for p in enumerate_paths(dag, a, b) if dag.has_edge(p[1], p[0])]


def check_backdoor(dag: Dag, x_set: Iterable[str], y_set: Iterable[str],
                   z_set: Iterable[str]) -> CriterionReport:
    """Does z_set satisfy the back-door criterion relative to (x_set, y_set)?"""
    xs, ys, zs = set(x_set), set(y_set), set(z_set)
    _check_disjoint(dag, xs, ys, zs)
    order = {v: i for i, v in enumerate(dag.vertices)}
    violations = []
    for xv in sorted(xs, key=order.get):
        for zv in sorted(zs, key=order.get):
            if zv in dag.descendants(xv):
                violations.append(f"{zv} is a descendant of {xv}")
    for xv in sorted(xs, key=order.get):
        for yv in sorted(ys, key=order.get):
            for path in _backdoor_paths(dag, xv, yv):
                if not path_blocked(path, zs, dag):
                    violations.append(f"unblocked backdoor path {format_path(dag, path)}")
    return CriterionReport.from_violations(violations)


def _directed_paths(dag: Dag, a: str, b: str) -> list[tuple[str, ...]]:
    order = {v: i for i, v in enumerate(dag.vertices)}
    out: list[tuple[str, ...]] = []
    stack = [a]
    on_path = {a}

    def walk(v: str) -> None:
        for w in sorted(dag.children(v), key=order.get):
            if w == b:
                out.append(tuple(stack) + (b,))
            elif w not in on_path:
                stack.append(w)
                on_path.add(w)
                walk(w)
                on_path.discard(w)
                stack.pop()

    walk(a)
    return out


def check_frontdoor(dag: Dag, x: str, y: str, z_set: Iterable[str]) -> CriterionReport:
    """Does z_set satisfy the front-door criterion relative to (x, y)?"""
    zs = set(z_set)
    _check_disjoint(dag, {x}, {y}, zs)
    order = {v: i for i, v in enumerate(dag.vertices)}
    violations = []
    for path in _directed_paths(dag, x, y):
        if not zs & set(path[1:-1]):
            violations.append(f"directed path {format_path(dag, path)} avoids the set")
    for zv in sorted(zs, key=order.get):
        for path in _backdoor_paths(dag, x, zv):
            if not path_blocked(path, (), dag):
                violations.append(
                    f"unblocked backdoor path {format_path(dag, path)} into the set")
        for path in _backdoor_paths(dag, zv, y):
            if not path_blocked(path, {x}, dag):
                violations.append(
                    f"backdoor path {format_path(dag, path)} not blocked by {x}")
    return CriterionReport.from_violations(violations)


def _check_disjoint(dag: Dag, xs: set, ys: set, zs: set) -> None:
    dag.require(*sorted(xs | ys | zs))
    if not (xs and ys and zs):
        raise ValueError("X, Y and Z must be non-empty")
    for a, b, names in ((xs, ys, "X and Y"), (xs, zs, "X and Z"), (ys, zs, "Y and Z")):
        if a & b:
            raise ValueError(f"{names} overlap on {sorted(a & b)}")


# -- text format --------------------------------------------------------------
#
#   # comment
#   var Z : 0 1
#   var X            (domain defaults to 0 1)
#   Z -> X
#
# One declaration or edge per line; values parse as integers when they look
# like integers, otherwise as strings.

def parse_dag_text(text: str) -> Dag:
    vertices: list[str] = []
    domains: dict[str, tuple] = {}
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if line.startswith('var '):
            body = line[4:]
            name, _, dom = body.partition(':')
            name = name.strip()
            if not name or ' ' in name:
                raise DagParseError(lineno, f"bad variable declaration {raw.strip()!r}")
            if name in domains:
                raise DagParseError(lineno, f"variable {name!r} declared twice")
            vertices.append(name)
            values = tuple(_parse_value(t) for t in dom.split()) if dom.strip() else (0, 1)
            if len(set(values)) != len(values):
                raise DagParseError(lineno, f"duplicate values in domain of {name!r}")
            domains[name] = values
        elif '->' in line:
            a, _, b = line.partition('->')
            a, b = a.strip(), b.strip()
            if not a or not b or '->' in b:
                raise DagParseError(lineno, f"bad edge line {raw.strip()!r}")
            if a not in domains or b not in domains:
                missing = a if a not in domains else b
                raise DagParseError(lineno, f"edge uses undeclared vertex {missing!r}")
            edges.append((a, b))
        else:
            raise DagParseError(lineno, f"cannot parse {raw.strip()!r}")
    try:
        return Dag(vertices, edges, domains)
    except ValueError as exc:
        raise DagParseError(0, str(exc)) from exc


def _parse_value(token: str):
    try:
        return int(token)
    except ValueError:
        return token


def load_dag(path: str) -> Dag:
    with open(path, 'r', encoding='utf-8') as handle:
        return parse_dag_text(handle.read())
