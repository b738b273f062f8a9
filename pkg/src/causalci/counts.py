"""Streaming occurrence counts over categorical observation streams.

A :class:`CountTable` ingests observations ``(x, y, z)`` one at a time and
maintains, for every value pattern, the number of occurrences so far plus
dyadic checkpoint tallies: whenever a pattern's count reaches a power of
two ``2**j``, the table snapshots the joint counts over the pattern's
outcome coordinate.  Those snapshots are exactly what is needed to compute
estimates restricted to the first ``dyadic_floor(count)`` occurrences of a
condition, in O(1) per query and O(1) amortized per ingested observation.

Arrival positions (the 1-based stream index of every occurrence of every
pattern) are kept by default so that counts over arbitrary prefixes can be
queried via :meth:`CountTable.count_at`; pass ``track_arrivals=False`` for
a lower-memory table that supports only the dyadic queries (the Monte
Carlo harness does this).

Composite z-values are tuples ordered by the declared Z-component order,
and iteration over z patterns always follows the lexicographic order of
the declared domains, so outputs are deterministic.
"""

from __future__ import annotations

import csv
import io
import json
from bisect import bisect_right
from itertools import product
from typing import Iterable, Iterator, NamedTuple, Sequence


class Observation(NamedTuple):
    """One time-step's realized values: treatment, outcome, covariate tuple."""

    x: object
    y: object
    z: tuple


class ObservationParseError(ValueError):
    """Raised by the stream readers; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def dyadic_floor(n: int) -> int:
    """Largest power of two that is <= n; returns 1 for n < 2."""
    if n < 2:
        return 1
    return 1 << (n.bit_length() - 1)


def _is_pow2(n: int) -> bool:
    return n & (n - 1) == 0


class CountTable:
    """Streaming counts for all tracked value patterns of one stream.

    Tracked patterns: (x,y,z), (x,z), (x,y), (x), (y), (z), and the stream
    length itself.  Dyadic tallies are materialized for the condition
    patterns that the estimators condition on: (x,z) with outcome y,
    (x) with outcome z, and the whole stream with outcomes x and z.
    """

    def __init__(self, x_domain: Sequence, y_domain: Sequence,
                 z_domains: Sequence[Sequence], track_arrivals: bool = True):
        if not x_domain or not y_domain:
            raise ValueError("x and y domains must be non-empty")
        if not z_domains or any(not d for d in z_domains):
            raise ValueError("every z component needs a non-empty domain")
        self.x_domain = tuple(x_domain)
        self.y_domain = tuple(y_domain)
        self.z_domains = tuple(tuple(d) for d in z_domains)
        self.z_values = tuple(product(*self.z_domains))
        self.track_arrivals = track_arrivals

        self.n = 0
        self._counts: dict[tuple, int] = {}
        self._arrivals: dict[tuple, list[int]] = {}
        # condition key -> list of per-level outcome-count tuples; level j
        # holds the tallies among the first 2**j occurrences of the condition
        self._xz_levels: dict[tuple, list[tuple[int, ...]]] = {}
        self._x_levels: dict[object, list[tuple[int, ...]]] = {}
        self._n_levels_x: list[tuple[int, ...]] = []
        self._n_levels_z: list[tuple[int, ...]] = []
        self.checkpoint_version = 0

        self._x_set = set(self.x_domain)
        self._y_set = set(self.y_domain)
        self._z_sets = tuple(set(d) for d in self.z_domains)
        self._y_index = {v: i for i, v in enumerate(self.y_domain)}
        self._z_index = {v: i for i, v in enumerate(self.z_values)}
        self._x_index = {v: i for i, v in enumerate(self.x_domain)}

    # -- ingestion ---------------------------------------------------------

    def ingest(self, obs) -> None:
        """Add one observation to the stream; validates every coordinate."""
        x, y, z = obs
        z = tuple(z) if isinstance(z, (list, tuple)) else (z,)
        if x not in self._x_set:
            raise ValueError(f"x value {x!r} not in declared domain")
        if y not in self._y_set:
            raise ValueError(f"y value {y!r} not in declared domain")
        if len(z) != len(self.z_domains):
            raise ValueError(f"z has {len(z)} coordinates, expected {len(self.z_domains)}")
        for i, (zv, dom) in enumerate(zip(z, self._z_sets)):
            if zv not in dom:
                raise ValueError(f"z[{i}] value {zv!r} not in declared domain")

        self.n += 1
        keys = (('xyz', x, y, z), ('xz', x, z), ('xy', x, y),
                ('x', x), ('y', y), ('z', z))
        counts = self._counts
        for key in keys:
            counts[key] = counts.get(key, 0) + 1
        if self.track_arrivals:
            arrivals = self._arrivals
            for key in keys:
                arrivals.setdefault(key, []).append(self.n)

        # dyadic checkpoints, materialized after the increments
        c = counts[('xz', x, z)]
        if _is_pow2(c):
            vec = tuple(counts.get(('xyz', x, yv, z), 0) for yv in self.y_domain)
            self._xz_levels.setdefault((x, z), []).append(vec)
            self.checkpoint_version += 1
        c = counts[('x', x)]
        if _is_pow2(c):
            vec = tuple(counts.get(('xz', x, zv), 0) for zv in self.z_values)
            self._x_levels.setdefault(x, []).append(vec)
            self.checkpoint_version += 1
        if _is_pow2(self.n):
            self._n_levels_x.append(tuple(counts.get(('x', xv), 0) for xv in self.x_domain))
            self._n_levels_z.append(tuple(counts.get(('z', zv), 0) for zv in self.z_values))
            self.checkpoint_version += 1

    def ingest_all(self, stream: Iterable) -> None:
        for obs in stream:
            self.ingest(obs)

    # -- pattern helpers ---------------------------------------------------

    @staticmethod
    def _key(x=None, y=None, z=None) -> tuple | None:
        """Internal key for a (possibly partial) pattern; None = full stream."""
        if z is not None and not isinstance(z, tuple):
            z = tuple(z) if isinstance(z, list) else (z,)
        match (x is not None, y is not None, z is not None):
            case (True, True, True):
                return ('xyz', x, y, z)
            case (True, False, True):
                return ('xz', x, z)
            case (True, True, False):
                return ('xy', x, y)
            case (True, False, False):
                return ('x', x)
            case (False, True, False):
                return ('y', y)
            case (False, False, True):
                return ('z', z)
            case (False, False, False):
                return None
        raise ValueError("pattern (y, z) without x is not tracked")

    def count(self, x=None, y=None, z=None) -> int:
        """Occurrences of the pattern in the whole stream so far."""
        key = self._key(x, y, z)
        if key is None:
            return self.n
        return self._counts.get(key, 0)

    def count_at(self, m: int, x=None, y=None, z=None) -> int:
        """Occurrences of the pattern among the first m observations."""
        if m > self.n:
            raise ValueError(f"prefix length {m} exceeds stream length {self.n}")
        if m < 0:
            raise ValueError("prefix length must be >= 0")
        key = self._key(x, y, z)
        if key is None:
            return m
        if m == self.n:
            return self._counts.get(key, 0)
        if not self.track_arrivals:
            raise RuntimeError("prefix queries need track_arrivals=True")
        return bisect_right(self._arrivals.get(key, ()), m)

    # -- estimates ---------------------------------------------------------

    def empirical_estimate(self, event: dict, given: dict | None = None) -> float | None:
        """Joint count of event+given over the count of given; None if the
        condition has not occurred (callers decide what that means)."""
        given = given or {}
        overlap = set(event) & set(given)
        if overlap:
            raise ValueError(f"event and condition overlap on {sorted(overlap)}")
        denom = self.count(**given)
        if denom == 0:
            return None
        return self.count(**{**given, **event}) / denom

    def dyadic_estimate(self, event: dict, given: dict) -> float | None:
        """Fraction of the first dyadic_floor(#given) occurrences of the
        condition that also match the event; None if #given == 0."""
        c = self.count(**given)
        if c == 0:
            return None
        k = dyadic_floor(c)
        j = k.bit_length() - 1
        tally = self._dyadic_tally(event, given, j)
        return tally / k

    def dyadic_levels(self, event: dict, given: dict) -> list[int]:
        """Event tallies among the first 2**j condition occurrences, for
        every materialized level j."""
        c = self.count(**given)
        top = dyadic_floor(c).bit_length() - 1 if c else -1
        return [self._dyadic_tally(event, given, j) for j in range(top + 1)]

    def _dyadic_tally(self, event: dict, given: dict, j: int) -> int:
        gk = sorted(given)
        ek = sorted(event)
        if gk == ['x', 'z'] and ek == ['y']:
            vec = self._xz_levels[(given['x'], self._as_z(given['z']))][j]
            return vec[self._y_index[event['y']]]
        if gk == ['x'] and ek == ['z']:
            vec = self._x_levels[given['x']][j]
            return vec[self._z_index[self._as_z(event['z'])]]
        if gk == [] and ek == ['z']:
            return self._n_levels_z[j][self._z_index[self._as_z(event['z'])]]
        if gk == [] and ek == ['x']:
            return self._n_levels_x[j][self._x_index[event['x']]]
        # untracked combination: fall back to the arrival log
        if not self.track_arrivals:
            raise KeyError(f"no dyadic tally for event {ek} given {gk} "
                           "(enable track_arrivals for arbitrary patterns)")
        arr = self._arrivals.get(self._key(**given), ())
        t = arr[(1 << j) - 1]
        return self.count_at(t, **{**given, **event})

    @staticmethod
    def _as_z(z):
        if isinstance(z, tuple):
            return z
        return tuple(z) if isinstance(z, list) else (z,)

    def prefix_dyadic_estimate(self, event: dict, given: dict, m: int) -> float | None:
        """dyadic_estimate as it stood after the first m observations."""
        if m == self.n:
            return self.dyadic_estimate(event, given)
        if not self.track_arrivals:
            raise RuntimeError("prefix queries need track_arrivals=True")
        c = self.count_at(m, **given)
        if c == 0:
            return None
        k = dyadic_floor(c)
        gkey = self._key(**given)
        t = k if gkey is None else self._arrivals[gkey][k - 1]
        return self.count_at(t, **{**given, **event}) / k

    # -- housekeeping ------------------------------------------------------

    def snapshot(self) -> "CountTable":
        """Deep copy safe to hand to a concurrent reader."""
        other = CountTable(self.x_domain, self.y_domain, self.z_domains,
                           track_arrivals=self.track_arrivals)
        other.n = self.n
        other._counts = dict(self._counts)
        other._arrivals = {k: list(v) for k, v in self._arrivals.items()}
        other._xz_levels = {k: list(v) for k, v in self._xz_levels.items()}
        other._x_levels = {k: list(v) for k, v in self._x_levels.items()}
        other._n_levels_x = list(self._n_levels_x)
        other._n_levels_z = list(self._n_levels_z)
        other.checkpoint_version = self.checkpoint_version
        return other

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountTable):
            return NotImplemented
        return (self.n == other.n and self._counts == other._counts
                and self._arrivals == other._arrivals
                and self._xz_levels == other._xz_levels
                and self._x_levels == other._x_levels
                and self._n_levels_x == other._n_levels_x
                and self._n_levels_z == other._n_levels_z)

    def __repr__(self) -> str:
        return (f"CountTable(n={self.n}, |X|={len(self.x_domain)}, "
                f"|Y|={len(self.y_domain)}, |Z|={len(self.z_values)})")


# -- stream readers ---------------------------------------------------------

def read_jsonl(lines: Iterable[str]) -> Iterator[Observation]:
    """Parse a JSON-lines observation stream.

    Each line is an object with fields x, y, z (z an array).  An optional
    leading header object carrying ``format_version`` is accepted and
    skipped.  Raises :class:`ObservationParseError` with the line number on
    malformed input.
    """
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ObservationParseError(lineno, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(rec, dict):
            raise ObservationParseError(lineno, "expected a JSON object")
        if lineno == 1 and 'format_version' in rec and 'x' not in rec:
            continue
        try:
            x, y, z = rec['x'], rec['y'], rec['z']
        except KeyError as exc:
            raise ObservationParseError(lineno, f"missing field {exc.args[0]!r}") from exc
        if not isinstance(z, list):
            raise ObservationParseError(lineno, "field 'z' must be an array")
        yield Observation(x, y, tuple(z))


def read_csv(lines: Iterable[str], columns: dict) -> Iterator[Observation]:
    """Parse a CSV observation stream with a declared column mapping.

    ``columns`` maps 'x' and 'y' to column names and 'z' to a list of
    column names (one per z component).  Cell values are parsed as JSON
    scalars where possible, otherwise kept as strings.
    """
    reader = csv.DictReader(lines)
    zcols = columns['z']
    if isinstance(zcols, str):
        zcols = [zcols]
    for lineno, row in enumerate(reader, start=2):
        try:
            x = _coerce(row[columns['x']])
            y = _coerce(row[columns['y']])
            z = tuple(_coerce(row[c]) for c in zcols)
        except KeyError as exc:
            raise ObservationParseError(lineno, f"missing column {exc.args[0]!r}") from exc
        yield Observation(x, y, z)


def _coerce(cell: str):
    try:
        return json.loads(cell)
    except (json.JSONDecodeError, TypeError):
        return cell


def open_stream(path: str, columns: dict | None = None) -> Iterator[Observation]:
    """Read observations from a .jsonl/.csv file path or '-' for stdin."""
    import sys
    if path == '-':
        text = sys.stdin
        return read_csv(text, columns) if columns else read_jsonl(text)
    handle = open(path, 'r', encoding='utf-8')
    if columns or path.endswith('.csv'):
        if not columns:
            raise ValueError("CSV input needs a column mapping")
        return read_csv(handle, columns)
    return read_jsonl(handle)
