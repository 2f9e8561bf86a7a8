"""Rooted triplets: extraction from trees, the two-condition characterisation,
tree building, and topology recovery from a k-dissimilarity.

Triplet files hold one ``a b | c`` per line. An optional first line
``# labels: x1 x2 ...`` lists the label set, which matters when some label
occurs in no triplet (a rooted star has none at all). Other ``#`` lines and
blank lines are ignored.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import NamedTuple

from .conditions import ConditionReport, Violation, first_cover
from .fit import fit_subset
from .kdiss import KDissimilarity, restrict_map
from .tree import Tree, TreeError, check_label, is_generic


class TripletError(ValueError):
    """A triplet pipeline failure; ``labels`` names the offending subset."""

    def __init__(self, message: str, labels: Iterable[str] = ()):
        super().__init__(message)
        self.labels = tuple(labels)


class Triplet(NamedTuple):
    """``ab|c`` with ``a < b``; build with :meth:`of` to normalise the pair."""

    a: str
    b: str
    c: str

    @classmethod
    def of(cls, a: str, b: str, c: str) -> Triplet:
        if len({a, b, c}) != 3:
            raise TripletError(f"triplet labels must be distinct: {a} {b} | {c}", (a, b, c))
        return cls(min(a, b), max(a, b), c)

    def __str__(self) -> str:
        return f"{self.a} {self.b} | {self.c}"


@dataclass(frozen=True)
class TripletSystem:
    labels: tuple[str, ...]
    triplets: frozenset[Triplet]

    def __init__(self, labels: Iterable[str], triplets: Iterable[Triplet]):
        triplets = frozenset(triplets)
        labels = set(labels)
        for t in triplets:
            labels.update(t)
        for x in labels:
            check_label(x)
        object.__setattr__(self, "labels", tuple(sorted(labels)))
        object.__setattr__(self, "triplets", triplets)

    def __contains__(self, item) -> bool:
        return Triplet.of(*item) in self.triplets

    def __len__(self) -> int:
        return len(self.triplets)

    def sorted(self) -> list[Triplet]:
        return sorted(self.triplets)

    def induced(self, labels: Iterable[str]) -> TripletSystem:
        keep = set(labels)
        return TripletSystem(keep, (t for t in self.triplets if set(t) <= keep))


# ------------------------------------------------------------------ extraction


def _triplet_of(t: Tree, a: str, b: str, c: str) -> Triplet | None:
    top = t.lca((a, b, c))
    for x, y, z in ((a, b, c), (a, c, b), (b, c, a)):
        if t.lca((x, y)) != top:
            return Triplet.of(x, y, z)
    return None


def extract(t: Tree) -> TripletSystem:
    """All triplets ``ab|c`` displayed by the rooted tree ``t``."""
    if not t.is_rooted:
        raise TripletError("triplets are defined for rooted trees")
    out = []
    for a, b, c in combinations(t.leaves, 3):
        tr = _triplet_of(t, a, b, c)
        if tr is not None:
            out.append(tr)
    return TripletSystem(t.leaves, out)


def check_R1_R2(r: TripletSystem, first_only: bool = False) -> ConditionReport:
    """Check that ``r`` is the triplet system of some rooted tree.

    ``R1``: each 3-set resolves at most one way (witness: the 3-set).
    ``R2``: ``ab|c`` forces ``ad|c`` or ``ab|d`` (witness: ``(a, b, c, d)``).
    """
    out: list[Violation] = []
    zero = Fraction(0)
    for a, b, c in combinations(r.labels, 3):
        count = sum(Triplet.of(*p) in r.triplets for p in ((a, b, c), (b, c, a), (a, c, b)))
        if count > 1:
            out.append(Violation("R1", (a, b, c), Fraction(count), Fraction(1)))
            if first_only:
                return ConditionReport(out)
    for t in r.sorted():
        for x, y in ((t.a, t.b), (t.b, t.a)):
            for d in r.labels:
                if d in t:
                    continue
                if Triplet.of(x, d, t.c) in r.triplets or Triplet.of(x, y, d) in r.triplets:
                    continue
                out.append(Violation("R2", (x, y, t.c, d), zero, zero))
                if first_only:
                    return ConditionReport(out)
    return ConditionReport(out)


# --------------------------------------------------------------------- building


def _components(labels: list[str], r: frozenset[Triplet]) -> list[list[str]]:
    inside = set(labels)
    parent = {x: x for x in labels}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t in r:
        if t.a in inside and t.b in inside and t.c in inside:
            parent[find(t.a)] = find(t.b)
    groups: dict[str, list[str]] = {}
    for x in labels:
        groups.setdefault(find(x), []).append(x)
    return sorted(groups.values())


def build_tree(r: TripletSystem) -> Tree | None:
    """The rooted tree whose triplet system is exactly ``r``, or ``None``.

    Labels are split into connected components of the graph joining ``a`` and
    ``b`` whenever some ``ab|c`` lies inside the current label set; the
    components become the children of the current vertex. The result is
    checked against ``r`` before being returned.
    """
    if not r.labels:
        raise TripletError("empty label set")
    leaf_ids = {x: i for i, x in enumerate(r.labels)}
    edges: list[tuple[int, int, Fraction]] = []
    nxt = [len(r.labels)]

    def grow(labels: list[str]) -> int | None:
        if len(labels) == 1:
            return leaf_ids[labels[0]]
        parts = _components(labels, r.triplets)
        if len(parts) == 1:
            return None
        v = nxt[0]
        nxt[0] += 1
        for part in parts:
            child = grow(part)
            if child is None:
                return None
            edges.append((v, child, Fraction(1)))
        return v

    root = grow(list(r.labels))
    if root is None:
        return None
    t = Tree(edges, {i: x for x, i in leaf_ids.items()}, root)
    if len(r.labels) >= 3 and extract(t).triplets != r.triplets:
        return None
    if len(r.labels) < 3 and r.triplets:
        return None
    return t


# ----------------------------------------------------------- topology recovery


def topology_from_kdiss(d: KDissimilarity, k: int | None = None) -> Tree:
    """Rooted binary topology recovered from an equidistant k-dissimilarity.

    Each 3-set of labels takes its triplet from the equidistant fit of the
    lexicographically first (2k-1)-subset containing it; the triplets are
    then assembled with :func:`build_tree`. Every fit must exist and be
    generic (binary, distinct interior heights).
    """
    k = d.k if k is None else k
    if k != d.k:
        raise TripletError(f"map has k={d.k}, not {k}")
    labels = d.ground_set
    size = 2 * k - 1
    if len(labels) < size:
        raise TripletError(f"need at least {size} labels")
    cache: dict[tuple[str, ...], Tree] = {}
    found = []
    for triple in combinations(labels, 3):
        z = first_cover(labels, triple, size)
        if z not in cache:
            t = fit_subset(restrict_map(d, z), "equidistant")
            if t is None:
                raise TripletError(f"no equidistant tree fits {','.join(z)}", z)
            try:
                generic = is_generic(t)
            except TreeError:
                generic = False
            if not generic:
                raise TripletError(f"fitted tree on {','.join(z)} is not generic", z)
            cache[z] = t
        tr = _triplet_of(cache[z], *triple)
        if tr is None:
            raise TripletError(f"fitted tree leaves {','.join(triple)} unresolved", z)
        found.append(tr)
    t = build_tree(TripletSystem(labels, found))
    if t is None:
        raise TripletError("collected triplets are not displayed by any tree", labels)
    return t


# ------------------------------------------------------------------------ files


def format_triplets(r: TripletSystem) -> str:
    lines = ["# labels: " + " ".join(r.labels)]
    lines += [str(t) for t in r.sorted()]
    return "\n".join(lines) + "\n"


def parse_triplets(text: str) -> TripletSystem:
    labels: list[str] = []
    found = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("labels:"):
                labels += body[len("labels:") :].split()
            continue
        left, bar, right = line.partition("|")
        pair, out = left.split(), right.split()
        if not bar or len(pair) != 2 or len(out) != 1:
            raise TripletError(f"line {lineno}: expected 'a b | c'")
        try:
            for x in (*pair, *out):
                check_label(x)
            found.append(Triplet.of(pair[0], pair[1], out[0]))
        except (TreeError, TripletError) as exc:
            raise TripletError(f"line {lineno}: {exc}") from None
    try:
        return TripletSystem(labels, found)
    except TreeError as exc:
        raise TripletError(str(exc)) from None


def read_triplets(path: str | Path) -> TripletSystem:
    return parse_triplets(Path(path).read_text(encoding="utf-8"))


def write_triplets(r: TripletSystem, path: str | Path) -> None:
    Path(path).write_text(format_triplets(r), encoding="utf-8")

