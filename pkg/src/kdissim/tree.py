"""Leaf-labelled, edge-weighted phylogenetic trees with exact weights.

A :class:`Tree` is immutable once built. Vertices are integers, leaves carry
distinct string labels, and every edge carries a :class:`fractions.Fraction`
weight. Rooted trees distinguish one vertex as the root.

All functions here are pure; the tree-level primitives (distances, Steiner
weights, restriction, isomorphism, equidistance, lifting, surgery) are module
functions taking the tree as first argument.
"""

from __future__ import annotations

import random
import re
from collections.abc import Iterable, Mapping
from fractions import Fraction
from functools import cached_property

_LABEL = re.compile(r"[^\s,():;\[\]']+")


class TreeError(ValueError):
    """Raised when a tree is malformed or an operation's precondition fails."""


def check_label(label: str) -> str:
    if not isinstance(label, str) or not _LABEL.fullmatch(label):
        raise TreeError(f"invalid leaf label {label!r}")
    return label


class Tree:
    """A phylogenetic tree.

    Parameters
    ----------
    edges
        Iterable of ``(u, v, weight)`` triples over integer vertex ids.
    labels
        Mapping from leaf vertex to its label. Every degree-one vertex must
        be labelled and every labelled vertex must be a leaf.
    root
        Root vertex for rooted trees, ``None`` for unrooted trees.

    A rooted tree on a single label is the lone vertex carrying that label
    (``edges`` empty, ``root`` equal to that vertex).
    """

    def __init__(
        self,
        edges: Iterable[tuple[int, int, Fraction | int]],
        labels: Mapping[int, str],
        root: int | None = None,
    ):
        adj: dict[int, dict[int, Fraction]] = {}
        for u, v, w in edges:
            if u == v:
                raise TreeError(f"self-loop at vertex {u}")
            if v in adj.get(u, {}):
                raise TreeError(f"duplicate edge {u}-{v}")
            w = Fraction(w)
            adj.setdefault(u, {})[v] = w
            adj.setdefault(v, {})[u] = w
        self._labels = {v: check_label(x) for v, x in labels.items()}
        self._vertex_of = {x: v for v, x in self._labels.items()}
        if len(self._vertex_of) != len(self._labels):
            raise TreeError("duplicate leaf label")
        if not adj:
            if len(self._labels) != 1 or root is None or root not in self._labels:
                raise TreeError("a tree without edges must be a single rooted leaf")
            adj = {root: {}}
        self._adj = adj
        self.root = root
        self._validate()

    def _validate(self) -> None:
        adj = self._adj
        if self.root is not None and self.root not in adj:
            raise TreeError(f"root {self.root} is not a vertex")
        n_edges = sum(len(nb) for nb in adj.values()) // 2
        if n_edges != len(adj) - 1:
            raise TreeError("graph is not a tree (edge count)")
        start = next(iter(adj))
        seen = {start}
        stack = [start]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != len(adj):
            raise TreeError("graph is not connected")
        if len(adj) == 1:
            return
        for v, nb in adj.items():
            deg = len(nb)
            if v in self._labels:
                if deg != 1:
                    raise TreeError(f"labelled vertex {self._labels[v]!r} is not a leaf")
            elif deg == 1:
                raise TreeError(f"unlabelled leaf vertex {v}")
            elif v == self.root:
                if deg < 2:
                    raise TreeError("root must have degree at least 2")
            elif deg < 3:
                raise TreeError(f"interior vertex {v} has degree {deg}")

    # ----------------------------------------------------------------- access

    @property
    def is_rooted(self) -> bool:
        return self.root is not None

    @cached_property
    def leaves(self) -> tuple[str, ...]:
        """Leaf labels in lexicographic order."""
        return tuple(sorted(self._vertex_of))

    @property
    def vertices(self) -> list[int]:
        return sorted(self._adj)

    @cached_property
    def edges(self) -> list[tuple[int, int, Fraction]]:
        return sorted((u, v, w) for u, nb in self._adj.items() for v, w in nb.items() if u < v)

    def neighbors(self, v: int) -> list[int]:
        return sorted(self._adj[v])

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def weight(self, u: int, v: int) -> Fraction:
        return self._adj[u][v]

    def is_leaf(self, v: int) -> bool:
        return v in self._labels

    def label(self, v: int) -> str | None:
        return self._labels.get(v)

    @property
    def labels(self) -> dict[int, str]:
        return dict(self._labels)

    def vertex(self, item: int | str) -> int:
        """Resolve a leaf label or vertex id to a vertex id."""
        if isinstance(item, str):
            try:
                return self._vertex_of[item]
            except KeyError:
                raise TreeError(f"unknown label {item!r}") from None
        if item not in self._adj:
            raise TreeError(f"unknown vertex {item!r}")
        return item

    def is_pendant(self, u: int, v: int) -> bool:
        return u in self._labels or v in self._labels

    # --------------------------------------------------------- rooted helpers

    @cached_property
    def parent(self) -> dict[int, int | None]:
        """Parent links toward the root (the partial order on vertices)."""
        if self.root is None:
            raise TreeError("tree is unrooted")
        parent: dict[int, int | None] = {self.root: None}
        stack = [self.root]
        while stack:
            v = stack.pop()
            for w in self._adj[v]:
                if w not in parent:
                    parent[w] = v
                    stack.append(w)
        return parent

    def children(self, v: int) -> list[int]:
        par = self.parent
        return sorted(w for w in self._adj[v] if par[v] != w)

    @cached_property
    def preorder(self) -> list[int]:
        """Vertices with every parent before its children (rooted trees)."""
        order = []
        stack = [self.root]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(self.children(v)))
        return order

    def leaves_below(self, v: int) -> list[str]:
        """Labels of the leaves of the rooted subtree at ``v``."""
        out = []
        stack = [v]
        par = self.parent
        while stack:
            x = stack.pop()
            if x in self._labels:
                out.append(self._labels[x])
            stack.extend(w for w in self._adj[x] if par[x] != w)
        return sorted(out)

    def root_distance(self) -> dict[int, Fraction]:
        dist = {self.root: Fraction(0)}
        par = self.parent
        for v in self.preorder[1:]:
            dist[v] = dist[par[v]] + self._adj[v][par[v]]
        return dist

    def lca(self, items: Iterable[int | str]) -> int:
        verts = [self.vertex(x) for x in items]
        par = self.parent
        paths = []
        for v in verts:
            path = []
            while v is not None:
                path.append(v)
                v = par[v]
            paths.append(path[::-1])
        best = None
        for level in zip(*paths):
            if all(x == level[0] for x in level):
                best = level[0]
            else:
                break
        return best

    # ---------------------------------------------------------- split masks

    @cached_property
    def leaf_index(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.leaves)}

    @cached_property
    def splits(self) -> list[tuple[int, int, int, Fraction]]:
        """``(u, v, mask, weight)`` per edge; ``mask`` is the leaf bitmask on v's side."""
        start = self.root if self.root is not None else min(self._adj)
        order = [start]
        par = {start: None}
        for v in order:
            for w in self._adj[v]:
                if w not in par:
                    par[w] = v
                    order.append(w)
        mask = {}
        idx = self.leaf_index
        for v in reversed(order):
            m = 1 << idx[self._labels[v]] if v in self._labels else 0
            for w in self._adj[v]:
                if par.get(w) == v:
                    m |= mask[w]
            mask[v] = m
        return [(par[v], v, mask[v], self._adj[v][par[v]]) for v in order[1:]]

    def label_mask(self, labels: Iterable[str]) -> int:
        idx = self.leaf_index
        m = 0
        for x in labels:
            if x not in idx:
                raise TreeError(f"label {x!r} not in tree")
            m |= 1 << idx[x]
        return m

    def __repr__(self) -> str:
        from .newick import write_newick

        return f"Tree({write_newick(self)!r})"


# --------------------------------------------------------------------- metrics


def path_distance(t: Tree, u: int | str, v: int | str) -> Fraction:
    """Length of the unique path between two vertices or leaf labels."""
    u, v = t.vertex(u), t.vertex(v)
    dist = {u: Fraction(0)}
    stack = [u]
    while stack:
        x = stack.pop()
        if x == v:
            return dist[x]
        for y in t.neighbors(x):
            if y not in dist:
                dist[y] = dist[x] + t.weight(x, y)
                stack.append(y)
    raise AssertionError("unreachable: tree is connected")


def pairwise_distances(t: Tree) -> dict[frozenset, Fraction]:
    """Path distance for every unordered pair of leaf labels."""
    out = {}
    leaves = t.leaves
    for i, a in enumerate(leaves):
        src = t.vertex(a)
        dist = {src: Fraction(0)}
        stack = [src]
        while stack:
            x = stack.pop()
            for y in t.neighbors(x):
                if y not in dist:
                    dist[y] = dist[x] + t.weight(x, y)
                    stack.append(y)
        for b in leaves[i + 1 :]:
            out[frozenset((a, b))] = dist[t.vertex(b)]
    return out


def steiner_weight(t: Tree, labels: Iterable[str]) -> Fraction:
    """Total weight of the smallest subtree spanning ``labels``.

    An edge counts exactly when both sides of it contain a requested leaf.
    """
    labels = set(labels)
    if len(labels) < 2:
        raise TreeError("steiner_weight needs at least two labels")
    a = t.label_mask(labels)
    total = Fraction(0)
    for _, _, side, w in t.splits:
        if a & side and a & ~side:
            total += w
    return total


# ----------------------------------------------------------------- restriction


def _suppress(adj: dict[int, dict[int, Fraction]], keep: set[int]) -> None:
    for v in list(adj):
        if v in keep or len(adj[v]) != 2:
            continue
        x, y = adj[v]
        w = adj[v][x] + adj[v][y]
        del adj[x][v], adj[y][v], adj[v]
        adj[x][y] = w
        adj[y][x] = w


def _from_adj(adj, labels, root) -> Tree:
    edges = [(u, v, w) for u, nb in adj.items() for v, w in nb.items() if u < v]
    return Tree(edges, {v: x for v, x in labels.items() if v in adj}, root)


def restrict(t: Tree, labels: Iterable[str]) -> Tree:
    """The restriction of ``t`` to a subset of its leaves.

    Degree-two vertices are suppressed with their two weights summed. For a
    rooted tree the root of the result is the vertex of the spanning subtree
    closest to the original root, kept even when it has degree two.
    """
    labels = set(labels)
    missing = labels - set(t.leaves)
    if missing:
        raise TreeError(f"labels not in tree: {sorted(missing)}")
    if len(labels) < (1 if t.is_rooted else 2):
        raise TreeError("restriction set too small")
    if len(labels) == 1:
        v = t.vertex(next(iter(labels)))
        return Tree([], {v: t.label(v)}, v)
    a = t.label_mask(labels)
    adj: dict[int, dict[int, Fraction]] = {}
    for u, v, side, w in t.splits:
        if a & side and a & ~side:
            adj.setdefault(u, {})[v] = w
            adj.setdefault(v, {})[u] = w
    root = None
    if t.is_rooted:
        root = t.lca(labels)
    _suppress(adj, {root} if root is not None else set())
    return _from_adj(adj, t.labels, root)


# ------------------------------------------------------------- canonical forms


def _min_label(t: Tree, v: int, parent: int | None, memo: dict) -> str:
    key = (v, parent)
    if key not in memo:
        if t.is_leaf(v):
            memo[key] = t.label(v)
        else:
            memo[key] = min(_min_label(t, w, v, memo) for w in t.neighbors(v) if w != parent)
    return memo[key]


def _ordered_children(t: Tree, v: int, parent: int | None, memo: dict) -> list[int]:
    kids = [w for w in t.neighbors(v) if w != parent]
    return sorted(kids, key=lambda w: _min_label(t, w, v, memo))


def _canonical_start(t: Tree) -> int:
    if t.is_rooted:
        return t.root
    # The smallest label determines a canonical anchor for unrooted trees.
    return t.vertex(t.leaves[0])


def canonical_form(t: Tree, weighted: bool = True) -> str:
    """A string that two trees share exactly when they are isomorphic."""
    memo: dict = {}

    def render(v: int, parent: int | None) -> str:
        if t.is_leaf(v) and parent is not None:
            return t.label(v)
        parts = []
        for w in _ordered_children(t, v, parent, memo):
            s = render(w, v)
            if weighted:
                s += ":" + str(t.weight(v, w))
            parts.append(s)
        head = t.label(v) if t.is_leaf(v) else ""
        return head + "(" + ",".join(parts) + ")"

    prefix = "R" if t.is_rooted else "U"
    return prefix + render(_canonical_start(t), None)


def isomorphic(t1: Tree, t2: Tree, weighted: bool = True) -> bool:
    """Leaf-label-fixing (and root-fixing) isomorphism test."""
    if set(t1.leaves) != set(t2.leaves):
        raise TreeError("trees have different label sets")
    if t1.is_rooted != t2.is_rooted:
        raise TreeError("cannot compare a rooted with an unrooted tree")
    return canonical_form(t1, weighted) == canonical_form(t2, weighted)


def canonicalize(t: Tree) -> Tree:
    """Contract zero-weight interior edges and renumber vertices canonically.

    Vertex 0 is the root (rooted) or the leaf with the smallest label
    (unrooted); the rest follow in preorder with children ordered by their
    smallest descendant label.
    """
    adj = {v: dict(t._adj[v]) for v in t._adj}
    labels = t.labels
    changed = True
    while changed:
        changed = False
        for u in list(adj):
            if u not in adj or u in labels:
                continue
            for v, w in list(adj[u].items()):
                if v in labels or w != 0:
                    continue
                # merge v into u (u survives; keeps the root if u is the root)
                if v == t.root:
                    u, v = v, u
                for x, wx in adj[v].items():
                    if x != u:
                        adj[u][x] = wx
                        adj[x][u] = wx
                        del adj[x][v]
                del adj[u][v], adj[v]
                changed = True
                break
            if changed:
                break
    tmp = _from_adj(adj, labels, t.root)
    memo: dict = {}
    start = _canonical_start(tmp)
    order = []
    stack = [(start, None)]
    while stack:
        v, parent = stack.pop()
        order.append(v)
        kids = _ordered_children(tmp, v, parent, memo)
        stack.extend((w, v) for w in reversed(kids))
    new = {v: i for i, v in enumerate(order)}
    edges = [(new[u], new[v], w) for u, v, w in tmp.edges]
    root = new[tmp.root] if tmp.is_rooted else None
    return Tree(edges, {new[v]: x for v, x in labels.items() if v in new}, root)


# ------------------------------------------------------------- equidistance


def is_equidistant_weighting(t: Tree) -> bool:
    """All leaves equally far from the root and interior heights monotone.

    Monotonicity is only required among interior vertices and the root, so
    negative pendant weights are allowed.
    """
    if not t.is_rooted:
        raise TreeError("equidistance is defined for rooted trees")
    dist = t.root_distance()
    depths = {dist[t.vertex(x)] for x in t.leaves}
    if len(depths) > 1:
        return False
    return all(w >= 0 for u, v, w in t.edges if not t.is_pendant(u, v))


def _require_equidistant(t: Tree) -> None:
    if not t.is_rooted or not is_equidistant_weighting(t):
        raise TreeError("weighting is not equidistant")


def heights(t: Tree) -> dict[int, Fraction]:
    """Height of every vertex of an equidistant rooted tree."""
    _require_equidistant(t)
    dist = t.root_distance()
    total = dist[t.vertex(t.leaves[0])]
    return {v: total - d for v, d in dist.items()}


def height(t: Tree, v: int | str) -> Fraction:
    return heights(t)[t.vertex(v)]


def is_generic(t: Tree) -> bool:
    """Binary, with pairwise distinct interior heights (root included)."""
    h = heights(t)
    interior = [v for v in t.vertices if not t.is_leaf(v)]
    for v in interior:
        if t.degree(v) != (2 if v == t.root else 3):
            return False
    values = [h[v] for v in interior]
    return len(set(values)) == len(values)


def lift_and_unroot(t: Tree, lift: Fraction | int) -> Tree:
    """Add ``lift`` to every pendant edge and drop a degree-two root.

    The two root edges of a degree-two root are merged into one edge. The
    result is the unrooted tree of the lifted weighting.
    """
    _require_equidistant(t)
    lift = Fraction(lift)
    if lift < 0:
        raise TreeError("lift must be non-negative")
    adj = {v: dict(t._adj[v]) for v in t._adj}
    for u, v, w in t.edges:
        if t.is_pendant(u, v):
            if w + lift < 0:
                raise TreeError(f"lift {lift} leaves a negative pendant weight")
            adj[u][v] = adj[v][u] = w + lift
    if t.degree(t.root) == 2:
        x, y = adj[t.root]
        w = adj[t.root][x] + adj[t.root][y]
        del adj[x][t.root], adj[y][t.root], adj[t.root]
        adj[x][y] = adj[y][x] = w
    return _from_adj(adj, t.labels, None)


def min_lift(t: Tree) -> Fraction:
    """Smallest lift that makes every pendant weight non-negative."""
    pend = [w for u, v, w in t.edges if t.is_pendant(u, v)]
    return max(Fraction(0), -min(pend)) if pend else Fraction(0)


def root_sides(t: Tree) -> tuple[int, int]:
    """The two children of a degree-two root."""
    if not t.is_rooted or t.degree(t.root) != 2:
        raise TreeError("root must have degree exactly 2")
    u, v = t.children(t.root)
    return u, v


def apply_alpha_surgery(t: Tree, k: int, alpha: Fraction | int) -> Tree:
    """Shift weight from the two root edges onto the pendant edges.

    Every pendant edge gains ``alpha/k`` and each root edge loses
    ``alpha/2``; an edge that is both (a leaf hanging off the root) gets both
    adjustments so the result stays equidistant.
    """
    _require_equidistant(t)
    alpha = Fraction(alpha)
    u, v = root_sides(t)
    a, b = t.weight(t.root, u), t.weight(t.root, v)
    if not alpha < 2 * min(a, b):
        raise TreeError(f"alpha must be below {2 * min(a, b)}")
    edges = []
    for x, y, w in t.edges:
        if t.is_pendant(x, y):
            w += alpha / k
        if t.root in (x, y):
            w -= alpha / 2
        edges.append((x, y, w))
    return Tree(edges, t.labels, t.root)


# ------------------------------------------------------------------ generation


def _random_weight(rng: random.Random, lo: Fraction, hi: Fraction) -> Fraction:
    den = rng.choice((1, 2, 3, 4, 5, 8))
    a, b = -((-lo * den) // 1), (hi * den) // 1
    if a > b:
        return lo
    return Fraction(rng.randint(int(a), int(b)), den)


def random_tree(
    labels: Iterable[str],
    rooted: bool = False,
    binary: bool = True,
    weight_range: tuple = (1, 10),
    seed: int = 0,
    equidistant: bool = False,
) -> Tree:
    """A random tree, fully determined by ``seed``.

    Edge weights are drawn from ``weight_range`` and are always positive on
    interior edges. With ``equidistant=True`` (rooted only) the interior
    vertices instead receive distinct heights from ``weight_range`` that
    increase toward the root, so a binary draw is generic.
    """
    labels = sorted(check_label(x) for x in labels)
    if len(labels) < 2:
        raise TreeError("need at least two labels")
    if equidistant and not rooted:
        raise TreeError("equidistant trees are rooted")
    lo, hi = Fraction(weight_range[0]), Fraction(weight_range[1])
    rng = random.Random(seed)
    order = labels[:]
    rng.shuffle(order)

    # Leaf insertion; vertices 0..n-1 are leaves, interior vertices follow.
    leaf = {x: i for i, x in enumerate(order)}
    nxt = len(order)
    if rooted:
        root = nxt
        nxt += 1
        edges = [(root, leaf[order[0]]), (root, leaf[order[1]])]
    else:
        root = None
        if len(order) == 2:
            edges = [(0, 1)]
        else:
            c = nxt
            nxt += 1
            edges = [(c, leaf[x]) for x in order[:3]]
    for x in order[2 if rooted else 3 :]:
        choice = rng.randrange(len(edges) + (1 if rooted else 0))
        w = nxt
        nxt += 1
        if choice == len(edges):
            edges += [(w, root), (w, leaf[x])]
            root = w
        else:
            p, q = edges.pop(choice)
            edges += [(p, w), (w, q), (w, leaf[x])]
    leaf_ids = set(leaf.values())

    if not binary:
        adj: dict[int, set[int]] = {}
        for p, q in edges:
            adj.setdefault(p, set()).add(q)
            adj.setdefault(q, set()).add(p)
        for p, q in list(edges):
            if p in leaf_ids or q in leaf_ids or rng.random() >= 0.35:
                continue
            if p not in adj or q not in adj or q not in adj[p]:
                continue
            if q == root:
                p, q = q, p
            for x in adj[q] - {p}:
                adj[x].discard(q)
                adj[x].add(p)
                adj[p].add(x)
            adj[p].discard(q)
            del adj[q]
        edges = sorted({(min(p, q), max(p, q)) for p in adj for q in adj[p]})

    names = {i: x for x, i in leaf.items()}
    if not equidistant:
        if hi <= 0:
            raise TreeError("weight range must contain positive values")
        weighted = []
        for p, q in edges:
            w = _random_weight(rng, lo, hi)
            if w <= 0 and p not in leaf_ids and q not in leaf_ids:
                w = hi
            weighted.append((p, q, w))
        return canonicalize(Tree(weighted, names, root))

    # Heights: a random linear extension of the vertex order, children first.
    nbrs: dict[int, list[int]] = {}
    for p, q in edges:
        nbrs.setdefault(p, []).append(q)
        nbrs.setdefault(q, []).append(p)
    par = {root: None}
    stack = [root]
    while stack:
        v = stack.pop()
        for w in nbrs[v]:
            if w not in par:
                par[w] = v
                stack.append(w)
    interior = [v for v in par if v not in leaf_ids]
    pending = {v: sum(1 for w in nbrs[v] if par.get(w) == v and w not in leaf_ids) for v in interior}
    ready = sorted(v for v in interior if pending[v] == 0)
    values: set[Fraction] = set()
    while len(values) < len(interior):
        values.add(_random_weight(rng, lo, hi))
    values_sorted = sorted(values)
    h = {v: Fraction(0) for v in leaf_ids}
    i = 0
    while ready:
        v = ready.pop(rng.randrange(len(ready)))
        h[v] = values_sorted[i]
        i += 1
        p = par[v]
        if p is not None:
            pending[p] -= 1
            if pending[p] == 0:
                ready.append(p)
                ready.sort()
    weighted = [(p, q, h[p] - h[q]) if par.get(q) == p else (p, q, h[q] - h[p]) for p, q in edges]
    return canonicalize(Tree(weighted, names, root))
