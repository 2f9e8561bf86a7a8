"""k-dissimilarity maps: construction from trees, restriction, file I/O and
the sharpness counterexamples.

File format (UTF-8, ``\\n`` line endings)::

    k=3
    a,b,c,7
    a,b,d,15/2
    ...

One line per k-subset, labels in strictly increasing lexicographic order,
followed by the value (integer, finite decimal or ``p/q``). Every subset of
the ground set must appear exactly once.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from fractions import Fraction
from itertools import combinations
from math import comb
from pathlib import Path

from .rational import format_rational, parse_rational
from .tree import (
    Tree,
    TreeError,
    apply_alpha_surgery,
    check_label,
    is_equidistant_weighting,
    lift_and_unroot,
    min_lift,
    random_tree,
    root_sides,
)


class KDissError(ValueError):
    """Invalid k-dissimilarity data or a violated precondition."""


class KDissimilarity:
    """A total map from the k-element subsets of a ground set to rationals.

    Lookups accept labels in any order: ``D["b", "a", "c"] == D["a", "b", "c"]``.
    """

    def __init__(self, k: int, values: Mapping[Iterable[str], Fraction | int], ground_set: Iterable[str] | None = None):
        if k < 2:
            raise KDissError("k must be at least 2")
        self.k = k
        vals: dict[tuple[str, ...], Fraction] = {}
        for key, value in values.items():
            key = tuple(sorted(key))
            if len(key) != k or len(set(key)) != k:
                raise KDissError(f"subset {key} does not have {k} distinct labels")
            if key in vals:
                raise KDissError(f"duplicate subset {key}")
            vals[key] = Fraction(value)
        labels = set(ground_set) if ground_set is not None else {x for key in vals for x in key}
        for x in labels:
            check_label(x)
        self.ground_set: tuple[str, ...] = tuple(sorted(labels))
        if len(self.ground_set) < k:
            raise KDissError(f"ground set has fewer than k={k} labels")
        expected = comb(len(self.ground_set), k)
        if len(vals) != expected:
            missing = next(c for c in combinations(self.ground_set, k) if c not in vals)
            raise KDissError(f"map is not total: missing subset {','.join(missing)}")
        for key in vals:
            if not set(key) <= labels:
                raise KDissError(f"subset {key} leaves the ground set")
        self._values = vals

    def __getitem__(self, labels: Iterable[str]) -> Fraction:
        key = tuple(sorted(labels))
        try:
            return self._values[key]
        except KeyError:
            raise KeyError(key) from None

    def __len__(self) -> int:
        return len(self._values)

    def __iter__(self) -> Iterator[tuple[str, ...]]:
        return iter(combinations(self.ground_set, self.k))

    def items(self) -> Iterator[tuple[tuple[str, ...], Fraction]]:
        """Entries in lexicographic subset order."""
        for key in self:
            yield key, self._values[key]

    def __eq__(self, other) -> bool:
        if not isinstance(other, KDissimilarity):
            return NotImplemented
        return self.k == other.k and self.ground_set == other.ground_set and self._values == other._values

    def __hash__(self):
        return hash((self.k, self.ground_set, frozenset(self._values.items())))

    def __repr__(self) -> str:
        return f"KDissimilarity(k={self.k}, ground_set={self.ground_set})"

    def map_values(self, fn) -> KDissimilarity:
        return KDissimilarity(self.k, {key: fn(key, v) for key, v in self._values.items()}, self.ground_set)


def from_tree(t: Tree, k: int) -> KDissimilarity:
    """The map sending each k-subset of leaves to its Steiner-subtree weight."""
    if not 2 <= k <= len(t.leaves):
        raise KDissError(f"k={k} out of range for a tree with {len(t.leaves)} leaves")
    splits = [(side, w) for _, _, side, w in t.splits]
    idx = t.leaf_index
    values = {}
    for subset in combinations(t.leaves, k):
        a = 0
        for x in subset:
            a |= 1 << idx[x]
        values[subset] = sum((w for side, w in splits if a & side and a & ~side), Fraction(0))
    return KDissimilarity(k, values, t.leaves)


def restrict_map(d: KDissimilarity, labels: Iterable[str]) -> KDissimilarity:
    labels = sorted(set(labels))
    if not set(labels) <= set(d.ground_set):
        raise KDissError("restriction set leaves the ground set")
    if len(labels) < d.k:
        raise KDissError(f"restriction set has fewer than k={d.k} labels")
    return KDissimilarity(d.k, {c: d[c] for c in combinations(labels, d.k)}, labels)


# ---------------------------------------------------------------- file format


def format_kdiss(d: KDissimilarity) -> str:
    lines = [f"k={d.k}"]
    lines += [",".join(key) + "," + format_rational(v) for key, v in d.items()]
    return "\n".join(lines) + "\n"


def parse_kdiss(text: str) -> KDissimilarity:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith("k="):
        raise KDissError("line 1: expected 'k=<int>'")
    try:
        k = int(lines[0][2:])
    except ValueError:
        raise KDissError(f"line 1: malformed k {lines[0][2:]!r}") from None
    if k < 2:
        raise KDissError("line 1: k must be at least 2")
    values: dict[tuple[str, ...], Fraction] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != k + 1:
            raise KDissError(f"line {lineno}: expected {k} labels and a value (inconsistent k)")
        key, token = tuple(fields[:-1]), fields[-1]
        if any(a >= b for a, b in zip(key, key[1:])):
            raise KDissError(f"line {lineno}: labels not in strict lexicographic order")
        try:
            for x in key:
                check_label(x)
        except TreeError as exc:
            raise KDissError(f"line {lineno}: {exc}") from None
        if key in values:
            raise KDissError(f"line {lineno}: duplicate subset {','.join(key)}")
        try:
            values[key] = parse_rational(token)
        except ValueError as exc:
            raise KDissError(f"line {lineno}: {exc}") from None
    if not values:
        raise KDissError("no entries")
    return KDissimilarity(k, values)


def read_kdiss(path: str | Path) -> KDissimilarity:
    return parse_kdiss(Path(path).read_text(encoding="utf-8"))


def write_kdiss(d: KDissimilarity, path: str | Path) -> None:
    Path(path).write_text(format_kdiss(d), encoding="utf-8", newline="\n")


# ------------------------------------------------------------- counterexamples


def _balanced(labels: list[str], edges: list, nxt: list[int], leaf_ids: dict) -> tuple[int, int]:
    """Build a balanced binary subtree; returns (vertex, cluster size)."""
    if len(labels) == 1:
        return leaf_ids[labels[0]], 1
    mid = len(labels) // 2
    left, _ = _balanced(labels[:mid], edges, nxt, leaf_ids)
    right, _ = _balanced(labels[mid:], edges, nxt, leaf_ids)
    v = nxt[0]
    nxt[0] += 1
    edges += [(v, left), (v, right)]
    return v, len(labels)


def default_counterexample_tree(k: int) -> Tree:
    """Generic equidistant tree on ``x1..x{2k}`` with two balanced root sides.

    Interior vertices get heights 1, 2, ... in order of cluster size, so the
    two root children are the highest below the root and each root edge has
    weight at least 1.
    """
    labels = [f"x{i}" for i in range(1, 2 * k + 1)]
    leaf_ids = {x: i for i, x in enumerate(labels)}
    edges: list[tuple[int, int]] = []
    nxt = [len(labels)]
    u, _ = _balanced(labels[:k], edges, nxt, leaf_ids)
    v, _ = _balanced(labels[k:], edges, nxt, leaf_ids)
    root = nxt[0]
    edges += [(root, u), (root, v)]
    parent = {c: p for p, c in edges}
    size = {i: 1 for i in leaf_ids.values()}
    for p, c in edges:  # children are created before parents
        size[p] = size.get(p, 0) + size[c]
    interior = sorted((w for w in size if w not in leaf_ids.values() and w != root), key=lambda w: (size[w], w))
    h = {i: Fraction(0) for i in leaf_ids.values()}
    for i, w in enumerate(interior, start=1):
        h[w] = Fraction(i)
    h[root] = Fraction(len(interior) + 1)
    weighted = [(p, c, h[p] - h[c]) for c, p in parent.items()]
    return Tree(weighted, {i: x for x, i in leaf_ids.items()}, root)


def random_counterexample_tree(k: int, seed: int) -> Tree:
    """Random generic equidistant tree on 2k leaves with k leaves per root side."""
    labels = [f"x{i}" for i in range(1, 2 * k + 1)]
    for attempt in range(10_000):
        t = random_tree(labels, rooted=True, equidistant=True, seed=seed * 10_007 + attempt)
        u, v = t.children(t.root)
        if len(t.leaves_below(u)) == k:
            return t
    raise KDissError("could not draw a balanced-root tree")


def _check_counterexample_tree(t: Tree, k: int) -> tuple[list[str], list[str]]:
    if k < 3:
        raise KDissError("counterexamples need k >= 3")
    if not t.is_rooted or not is_equidistant_weighting(t):
        raise KDissError("counterexample tree must be rooted and equidistant")
    try:
        u, v = root_sides(t)
    except TreeError as exc:
        raise KDissError(str(exc)) from None
    left, right = t.leaves_below(u), t.leaves_below(v)
    if len(left) < k or len(right) < k:
        raise KDissError(f"both root subtrees need at least k={k} leaves")
    return left, right


def _spliced(base: KDissimilarity, shifted: KDissimilarity, side: list[str]) -> KDissimilarity:
    side = set(side)
    return base.map_values(lambda key, v: shifted[key] if set(key) <= side else v)


def counterexample_equidistant(k: int, tree: Tree | None = None, alpha: Fraction | int = 1) -> KDissimilarity:
    """A map equidistant on every (2k-1)-subset but not equidistant overall.

    Subsets inside the first root subtree take their values from the surgery
    weighting, all others from the original weighting.
    """
    t = tree if tree is not None else default_counterexample_tree(k)
    left, _ = _check_counterexample_tree(t, k)
    try:
        shifted = apply_alpha_surgery(t, k, alpha)
    except TreeError as exc:
        raise KDissError(str(exc)) from None
    return _spliced(from_tree(t, k), from_tree(shifted, k), left)


def counterexample_treelike(
    k: int,
    lift: Fraction | int | None = None,
    alpha: Fraction | int = 1,
    tree: Tree | None = None,
) -> KDissimilarity:
    """The unrooted analogue, built on the lifted and unrooted trees."""
    t = tree if tree is not None else default_counterexample_tree(k)
    left, _ = _check_counterexample_tree(t, k)
    alpha = Fraction(alpha)
    if alpha <= 0:
        raise KDissError("alpha must be positive")
    lift = min_lift(t) if lift is None else Fraction(lift)
    try:
        shifted = apply_alpha_surgery(t, k, alpha)
        base = lift_and_unroot(t, lift)
        moved = lift_and_unroot(shifted, lift)
    except TreeError as exc:
        raise KDissError(str(exc)) from None
    return _spliced(from_tree(base, k), from_tree(moved, k), left)
