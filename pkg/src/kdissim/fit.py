"""Deciding whether a k-dissimilarity comes from a tree, and rebuilding it.

Fitting a map on a small label set enumerates binary topologies by leaf
insertion and asks an exact LP whether some admissible weighting reproduces
every value. Multifurcating trees appear as binary ones with zero-weight
interior edges, which are contracted in the returned witness.

The search walks the insertion order depth first and abandons a partial
topology as soon as the map restricted to its labels is unfittable on it.
Every completion of such a topology restricts back to it, so the first fit
found is the first feasible topology of the full enumeration.
"""

from __future__ import annotations

import json
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .conditions import (
    ConditionReport,
    ConsistencyError,
    delta_global,
    first_cover,
    four_point_check,
    six_point_equidistant_check,
    six_point_treelike_check,
    ultrametric_check,
)
from .kdiss import KDissError, KDissimilarity, from_tree, restrict_map
from .lp import FeasibilitySystem, Unbounded, lp_feasible, lp_maximize
from .newick import write_newick
from .rational import to_json_value
from .tree import Tree, canonicalize, path_distance

MODES = ("treelike", "equidistant")
METHODS = ("constructive", "exhaustive", "six-point")

_PSEUDO = -1  # outgroup stub marking the root position in rooted shapes


# ------------------------------------------------------------------ topologies


class _Shape:
    """A binary topology on leaves ``0..m-1`` (plus the root stub if rooted)."""

    __slots__ = ("edges", "m", "rooted", "next_id")

    def __init__(self, edges: list[tuple[int, int]], m: int, rooted: bool, next_id: int):
        self.edges = edges
        self.m = m
        self.rooted = rooted
        self.next_id = next_id

    def insert(self, idx: int) -> _Shape:
        u, v = self.edges[idx]
        w = self.next_id
        edges = self.edges[:idx] + [(u, w), (w, v)] + self.edges[idx + 1 :] + [(w, self.m)]
        return _Shape(edges, self.m + 1, self.rooted, w + 1)

    def oriented(self) -> tuple[int | None, list[tuple[int, int, int]]]:
        """``(root, [(parent, child, child leaf mask)])`` over the real edges."""
        adj: dict[int, list[int]] = {}
        for u, v in self.edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        if self.rooted:
            root = adj[_PSEUDO][0]
        else:
            root = 0 if self.m > 1 else None
        order = [root]
        par = {root: _PSEUDO if self.rooted else None, _PSEUDO: None}
        for v in order:
            for w in adj[v]:
                if w not in par:
                    par[w] = v
                    order.append(w)
        mask: dict[int, int] = {}
        for v in reversed(order):
            m = 1 << v if 0 <= v < self.m else 0
            for w in adj[v]:
                if par.get(w) == v:
                    m |= mask[w]
            mask[v] = m
        return root, [(par[v], v, mask[v]) for v in order[1:]]


def _initial_shape(m: int, rooted: bool) -> _Shape:
    base = max(m, 1) + 1
    if rooted:
        return _Shape([(base, _PSEUDO), (base, 0), (base, 1)], 2, True, base + 1)
    if m == 2:
        return _Shape([(0, 1)], 2, False, base)
    return _Shape([(base, 0), (base, 1), (base, 2)], 3, False, base + 1)


def _grow(shape: _Shape, m: int, accept) -> Iterator[_Shape]:
    if not accept(shape):
        return
    if shape.m == m:
        yield shape
        return
    for idx in range(len(shape.edges)):
        yield from _grow(shape.insert(idx), m, accept)


def _shape_tree(shape: _Shape, labels: Sequence[str], weights: dict[tuple[int, int], Fraction] | None = None) -> Tree:
    root, oriented = shape.oriented()
    edges = [(p, c, weights[(p, c)] if weights else Fraction(1)) for p, c, _ in oriented]
    names = {i: labels[i] for i in range(shape.m)}
    return Tree(edges, names, root if shape.rooted else None)


def enumerate_binary_topologies(labels: Sequence[str], rooted: bool) -> Iterator[Tree]:
    """All binary topologies on ``labels`` (unit weights), by leaf insertion.

    Leaves are inserted in lexicographic label order into every edge of the
    current tree (for rooted trees also above the root), giving (2m-5)!!
    unrooted or (2m-3)!! rooted topologies without repetition.
    """
    labels = sorted(labels)
    m = len(labels)
    if m < 2:
        raise KDissError("need at least two labels")
    if not rooted and m == 2:
        yield _shape_tree(_initial_shape(2, False), labels)
        return
    for shape in _grow(_initial_shape(m, rooted), m, lambda s: True):
        yield _shape_tree(shape, labels)


def steiner_incidence(top: Tree, labels) -> list[int]:
    """0/1 per edge of ``top`` (in ``top.edges`` order): does it separate ``labels``?"""
    a = top.label_mask(labels)
    sep = {frozenset((u, v)): 1 if a & side and a & ~side else 0 for u, v, side, _ in top.splits}
    return [sep[frozenset((u, v))] for u, v, _ in top.edges]


# ----------------------------------------------------------------- LP systems


def _system(oriented, subsets: list[tuple[int, Fraction]], mode: str):
    """Feasibility system for one shape; returns ``(system, decode)``."""
    if mode == "treelike":
        n = len(oriented)
        sys = FeasibilitySystem(n)
        for amask, value in subsets:
            sys.add_eq([Fraction(1) if amask & c and amask & ~c else Fraction(0) for _, _, c in oriented], value)
        for i in range(n):
            row = [Fraction(0)] * n
            row[i] = Fraction(1)
            sys.add_ge(row, 0)

        def decode(x):
            return {(p, c): x[i] for i, (p, c, _) in enumerate(oriented)}

        return sys, decode

    interior = sorted({p for p, _, _ in oriented})
    col = {v: i for i, v in enumerate(interior)}
    n = len(interior)
    sys = FeasibilitySystem(n)
    for amask, value in subsets:
        row = [Fraction(0)] * n
        for p, c, cm in oriented:
            if amask & cm and amask & ~cm:
                row[col[p]] += 1
                if c in col:
                    row[col[c]] -= 1
        sys.add_eq(row, value)
    for p, c, _ in oriented:
        if c in col:
            row = [Fraction(0)] * n
            row[col[p]] = Fraction(1)
            row[col[c]] = Fraction(-1)
            sys.add_ge(row, 0)

    def decode(x):
        h = {v: x[col[v]] for v in interior}
        return {(p, c): h[p] - h.get(c, Fraction(0)) for p, c, _ in oriented}

    return sys, decode


def feasibility_system(top: Tree, d: KDissimilarity, mode: str) -> FeasibilitySystem:
    """The exact system whose solutions are admissible weightings of ``top``.

    Treelike: one variable per edge (``top.edges`` order), all non-negative.
    Equidistant: one height per interior vertex (sorted vertex order), leaf
    heights zero, parents at least as high as interior children.
    """
    if set(top.leaves) != set(d.ground_set):
        raise KDissError("topology and map have different labels")
    if mode == "equidistant" and not top.is_rooted:
        raise KDissError("equidistant fits need a rooted topology")
    idx = top.leaf_index
    subsets = [(sum(1 << idx[x] for x in key), v) for key, v in d.items()]
    if mode == "treelike":
        order = {frozenset((u, v)): i for i, (u, v, _) in enumerate(top.edges)}
        oriented = [None] * len(order)
        for p, c, side, _ in top.splits:
            oriented[order[frozenset((p, c))]] = (p, c, side)
        return _system(oriented, subsets, mode)[0]
    par = top.parent
    oriented = []
    for v in top.preorder[1:]:
        oriented.append((par[v], v, top.label_mask(top.leaves_below(v))))
    return _system(oriented, subsets, mode)[0]


def fit_subset(d: KDissimilarity, mode: str) -> Tree | None:
    """First binary topology (in enumeration order) admitting an exact fit.

    Returns the fitted tree with zero-weight interior edges contracted, or
    ``None`` if ``d`` is not treelike/equidistant. Treelike fits are unrooted
    with non-negative weights; equidistant fits are rooted with an
    equidistant weighting (pendant weights may be negative).
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    labels = d.ground_set
    m, k = len(labels), d.k
    rooted = mode == "equidistant"
    # subsets grouped by their largest label index
    by_top: dict[int, list[tuple[int, Fraction]]] = {}
    for key, value in d.items():
        idxs = [labels.index(x) for x in key]
        by_top.setdefault(max(idxs), []).append((sum(1 << i for i in idxs), value))
    found: list = []

    def accept(shape: _Shape) -> bool:
        if shape.m < k:
            return True
        subsets = [s for top in range(shape.m) for s in by_top.get(top, ())]
        _, oriented = shape.oriented()
        sys, decode = _system(oriented, subsets, mode)
        x = lp_feasible(sys)
        if x is None:
            return False
        if shape.m == m:
            found.append(decode(x))
        return True

    start = _initial_shape(m, rooted)
    if start.m > m:  # unrooted pair: a single edge
        start = _initial_shape(2, False)
    for shape in _grow(start, m, accept):
        return canonicalize(_shape_tree(shape, labels, found[-1]))
    return None


# --------------------------------------------------------------- reconstruction


class ReconstructionError(ValueError):
    def __init__(self, report: ConditionReport):
        v = report.violations[0]
        super().__init__(f"{v.condition} condition fails on {','.join(v.labels)}")
        self.report = report


def _treelike_from_delta(delta: KDissimilarity) -> Tree:
    labels = delta.ground_set
    ids = {x: i for i, x in enumerate(labels)}
    adj: dict[int, dict[int, Fraction]] = {0: {1: delta[labels[0], labels[1]]}, 1: {0: delta[labels[0], labels[1]]}}
    nxt = len(labels)

    def link(u, v, w):
        adj.setdefault(u, {})[v] = w
        adj.setdefault(v, {})[u] = w

    def path(i, j):
        prev = {i: None}
        stack = [i]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in prev:
                    prev[y] = x
                    stack.append(y)
        out = [j]
        while out[-1] != i:
            out.append(prev[out[-1]])
        return out[::-1]

    for n, x in enumerate(labels[2:], start=2):
        best = None
        for a, b in combinations(labels[:n], 2):
            reach = (delta[a, x] + delta[b, x] - delta[a, b]) / 2
            if best is None or reach < best[0]:
                best = (reach, a, b)
        reach, a, b = best
        offset = (delta[a, x] + delta[a, b] - delta[b, x]) / 2
        route = path(ids[a], ids[b])
        pos = Fraction(0)
        attach = None
        for u, v in zip(route, route[1:]):
            w = adj[u][v]
            if pos == offset:
                attach = u
                break
            if pos < offset < pos + w:
                attach = nxt
                nxt += 1
                del adj[u][v], adj[v][u]
                link(u, attach, offset - pos)
                link(attach, v, pos + w - offset)
                break
            pos += w
        if attach is None:
            attach = route[-1]
        if attach < len(labels):  # lands on a leaf: give it a zero pendant edge
            (nb, w), = adj[attach].items()
            mid = nxt
            nxt += 1
            del adj[attach][nb], adj[nb][attach]
            link(attach, mid, Fraction(0))
            link(mid, nb, w)
            attach = mid
        link(attach, ids[x], reach)
    _suppress_degree_two(adj, len(labels))
    edges = [(u, v, w) for u, nb in adj.items() for v, w in nb.items() if u < v]
    return canonicalize(Tree(edges, dict(enumerate(labels))))


def _suppress_degree_two(adj, n_leaves: int) -> None:
    for v in list(adj):
        if v >= n_leaves and len(adj[v]) == 2:
            (x, wx), (y, wy) = adj[v].items()
            del adj[x][v], adj[y][v], adj[v]
            adj[x][y] = adj[y][x] = wx + wy


def _equidistant_from_delta(delta: KDissimilarity) -> Tree:
    labels = delta.ground_set
    clusters = {i: (x, Fraction(0)) for i, x in enumerate(labels)}  # vertex -> (rep, height)
    edges = []
    nxt = len(labels)
    while len(clusters) > 1:
        best = None
        for (u, (ru, _)), (v, (rv, _)) in combinations(sorted(clusters.items(), key=lambda kv: kv[1][0]), 2):
            value = delta[ru, rv]
            if best is None or value < best[0]:
                best = (value, u, v)
        value, u, v = best
        h = value / 2
        w = nxt
        nxt += 1
        edges += [(w, u, h - clusters[u][1]), (w, v, h - clusters[v][1])]
        clusters[w] = (min(clusters[u][0], clusters[v][0]), h)
        del clusters[u], clusters[v]
    root = next(iter(clusters))
    return canonicalize(Tree(edges, dict(enumerate(labels)), root))


def reconstruct_from_delta(delta: KDissimilarity, mode: str) -> Tree:
    """The tree realising a pair map: unrooted (treelike) or equidistant rooted.

    Raises :class:`ReconstructionError` carrying the failed condition when
    ``delta`` is not a tree metric / ultrametric.
    """
    if delta.k != 2:
        raise KDissError("expected a 2-dissimilarity")
    check = four_point_check if mode == "treelike" else ultrametric_check
    report = check(delta, first_only=True)
    if not report.verdict:
        raise ReconstructionError(report)
    build = _treelike_from_delta if mode == "treelike" else _equidistant_from_delta
    t = build(delta)
    if from_tree(t, 2) != delta:
        raise AssertionError("reconstructed tree does not realise the pair map")
    return t


# --------------------------------------------------------------------- decide


@dataclass
class DecisionReport:
    verdict: bool
    mode: str
    method: str
    witness: Tree | None = None
    rejection: dict | None = None

    def to_dict(self) -> dict:
        out: dict = {"verdict": self.verdict, "mode": self.mode, "method": self.method}
        if self.witness is not None:
            out["witness_newick"] = write_newick(self.witness)
        if self.rejection is not None:
            out["rejection"] = self.rejection
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _reject(mode, method, kind, labels=None, detail="") -> DecisionReport:
    rej = {"kind": kind, "detail": detail}
    if labels is not None:
        rej["labels"] = list(labels)
    return DecisionReport(False, mode, method, None, rej)


def _violation_detail(report: ConditionReport) -> tuple[tuple[str, ...], str]:
    v = report.violations[0]
    return v.labels, f"{v.condition}: {to_json_value(v.lhs)} > {to_json_value(v.rhs)}" if v.condition != "consistency" else f"consistency: {to_json_value(v.lhs)} != {to_json_value(v.rhs)}"


def _verify(d: KDissimilarity, t: Tree, mode: str, method: str) -> DecisionReport:
    got = from_tree(t, d.k)
    for key, value in d.items():
        if got[key] != value:
            return _reject(
                mode, method, "mismatch", key, f"fitted tree gives {to_json_value(got[key])}, map has {to_json_value(value)}"
            )
    return DecisionReport(True, mode, method, t)


def _constructive(d: KDissimilarity, mode: str, cache: dict) -> DecisionReport:
    method = "constructive"
    labels, k = d.ground_set, d.k

    def fit(z):
        if z not in cache:
            cache[z] = fit_subset(restrict_map(d, z), mode)
        return cache[z]

    if len(labels) < 2 * k - 1:
        t = fit(labels)
        if t is None:
            return _reject(mode, method, "unfittable-subset", labels, "no tree fits the whole map")
        return _verify(d, t, mode, method)
    pairs = {}
    for a, b in combinations(labels, 2):
        z = first_cover(labels, (a, b), 2 * k - 1)
        t = fit(z)
        if t is None:
            return _reject(mode, method, "unfittable-subset", z, f"no {mode} tree fits this {len(z)}-subset")
        pairs[(a, b)] = path_distance(t, a, b)
    delta = KDissimilarity(2, pairs, labels)
    try:
        t = reconstruct_from_delta(delta, mode)
    except ReconstructionError as exc:
        lab, detail = _violation_detail(exc.report)
        return _reject(mode, method, "pair-condition", lab, detail)
    return _verify(d, t, mode, method)


def _six_point(d: KDissimilarity, mode: str) -> DecisionReport:
    check = six_point_treelike_check if mode == "treelike" else six_point_equidistant_check
    report = check(d, first_only=True)
    if not report.verdict:
        lab, detail = _violation_detail(report)
        return _reject(mode, "six-point", "six-point-condition", lab, detail)
    # With five labels the consistency clause is vacuous, so the derived tree
    # is still verified against every entry before accepting.
    try:
        t = reconstruct_from_delta(delta_global(d), mode)
    except (ReconstructionError, ConsistencyError) as exc:
        lab, detail = _violation_detail(exc.report)
        return _reject(mode, "six-point", "pair-condition", lab, detail)
    return _verify(d, t, mode, "six-point")


def decide(d: KDissimilarity, mode: str = "treelike", method: str = "constructive") -> DecisionReport:
    """Decide whether ``d`` is treelike/equidistant.

    ``constructive`` reads pair distances off fits of (2k-1)-subsets, builds
    one tree from them and verifies it on every k-subset. ``exhaustive``
    fits every 2k-subset (or the whole map when smaller) and then reports a
    witness from the constructive path. ``six-point`` applies the 5/6-point
    conditions (k = 3 only). Rejection is a verdict, never an exception.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if method == "six-point":
        if d.k != 3:
            raise KDissError("the six-point method needs k = 3")
        return _six_point(d, mode)
    cache: dict = {}
    if method == "constructive":
        return _constructive(d, mode, cache)
    labels, k = d.ground_set, d.k
    subsets = [labels] if len(labels) < 2 * k else combinations(labels, 2 * k)
    for z in subsets:
        z = tuple(z)
        if z not in cache:
            cache[z] = fit_subset(restrict_map(d, z), mode)
        if cache[z] is None:
            return _reject(mode, "exhaustive", "unfittable-subset", z, f"no {mode} tree fits this {len(z)}-subset")
    witness = _constructive(d, mode, cache)
    if not witness.verdict:
        raise AssertionError("every 2k-subset fits but the assembled tree does not")
    witness.method = "exhaustive"
    return witness


# ---------------------------------------------------------- generic fits


def generic_fit_topologies(d: KDissimilarity) -> list[Tree]:
    """Rooted binary topologies admitting a generic, interior-positive equidistant fit.

    A topology qualifies when some fit has every interior edge strictly
    positive and no pair of interior vertices is forced to share a height.
    """
    out = []
    for top in enumerate_binary_topologies(d.ground_set, rooted=True):
        sys = feasibility_system(top, d, "equidistant")
        n = sys.n_vars
        # extra variable: a common lower bound on all interior edge weights
        grown = FeasibilitySystem(n + 1)
        for row, rhs in sys.equalities:
            grown.add_eq(list(row) + [Fraction(0)], rhs)
        for row, rhs in sys.inequalities:
            grown.add_ge(list(row) + [Fraction(-1)], rhs)
        cap = [Fraction(0)] * n + [Fraction(-1)]
        grown.add_ge(cap, -1)
        best = lp_maximize(grown, [Fraction(0)] * n + [Fraction(1)])
        if best is None or best[0] <= 0:
            continue
        strict = FeasibilitySystem(n)
        strict.equalities = sys.equalities
        strict.inequalities = [(row, rhs + best[0] / 2) for row, rhs in sys.inequalities]
        interior = sorted(v for v in top.vertices if not top.is_leaf(v))
        forced = False
        for i, j in combinations(range(n), 2):
            diff = [Fraction(0)] * n
            diff[i], diff[j] = Fraction(1), Fraction(-1)
            try:
                hi = lp_maximize(strict, diff)
                lo = lp_maximize(strict, [-x for x in diff])
            except Unbounded:
                continue
            if hi[0] == 0 and lo[0] == 0:
                forced = True
                break
        if not forced and len(interior) == n:
            out.append(top)
    return out
