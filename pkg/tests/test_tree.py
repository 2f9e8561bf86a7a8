from fractions import Fraction

import pytest
from conftest import labels
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from kdissim import (
    Tree,
    TreeError,
    apply_alpha_surgery,
    canonicalize,
    height,
    is_equidistant_weighting,
    is_generic,
    isomorphic,
    lift_and_unroot,
    parse_newick,
    path_distance,
    random_tree,
    read_newick,
    restrict,
    steiner_weight,
)
from kdissim.tree import canonical_form, heights, min_lift, root_sides

PROPS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

seeds = st.integers(min_value=0, max_value=10**6)
sizes = st.integers(min_value=3, max_value=10)


def star(n: int, weight=1) -> Tree:
    return parse_newick("(" + ",".join(f"{x}:{weight}" for x in labels(n)) + ");")


# ----------------------------------------------------------------- distances


def test_star_pair_distances_are_two():
    t = star(4)
    for x in t.leaves:
        for y in t.leaves:
            assert path_distance(t, x, y) == (0 if x == y else 2)


def test_caterpillar_distance(data_dir):
    t = read_newick(data_dir / "caterpillar4.nwk")
    assert path_distance(t, "a", "c") == 5


def test_unknown_label_is_an_error():
    with pytest.raises(TreeError):
        path_distance(star(3), "x1", "nope")


def test_reference_tree_anchor_values(data_dir):
    assert steiner_weight(read_newick(data_dir / "unrooted6.nwk"), ["x1", "x4", "x5"]) == 11
    assert steiner_weight(read_newick(data_dir / "equidistant5.nwk"), ["x1", "x2", "x3"]) == 3


def test_star_steiner_weight_counts_pendants():
    t = star(6)
    assert steiner_weight(t, ["x1", "x3", "x5", "x6"]) == 4


def test_steiner_weight_needs_two_labels():
    with pytest.raises(TreeError):
        steiner_weight(star(3), ["x1"])
    with pytest.raises(TreeError):
        steiner_weight(star(3), ["x1", "zz"])


@PROPS
@given(seed=seeds, n=sizes, rooted=st.booleans())
def test_pair_steiner_weight_is_path_distance(seed, n, rooted):
    t = random_tree(labels(n), rooted=rooted, seed=seed)
    for i, x in enumerate(t.leaves):
        for y in t.leaves[i + 1 :]:
            assert steiner_weight(t, [x, y]) == path_distance(t, x, y)


# --------------------------------------------------------------- restriction


def test_restrict_to_all_leaves_is_identity():
    t = random_tree(labels(8), seed=4)
    assert isomorphic(restrict(t, t.leaves), t)


def test_restrict_caterpillar_to_two_leaves(data_dir):
    t = read_newick(data_dir / "caterpillar4.nwk")
    r = restrict(t, ["a", "d"])
    assert len(r.edges) == 1 and r.edges[0][2] == path_distance(t, "a", "d")


def test_rooted_restriction_roots_at_lca():
    t = parse_newick("(((a:1,b:1):1,c:2):3,d:5);")
    r = restrict(t, ["a", "b"])
    assert r.is_rooted and r.root_distance()[r.vertex("a")] == 1


@PROPS
@given(seed=seeds, n=st.integers(4, 10), data=st.data())
def test_restriction_preserves_distances_and_steiner(seed, n, data):
    t = random_tree(labels(n), rooted=data.draw(st.booleans()), seed=seed)
    y = data.draw(st.lists(st.sampled_from(t.leaves), min_size=2, max_size=n, unique=True))
    r = restrict(t, y)
    assert set(r.leaves) == set(y)
    for x in y:
        for z in y:
            assert path_distance(r, x, z) == path_distance(t, x, z)
    assert steiner_weight(r, y) == steiner_weight(t, y)


def test_restrict_rejects_foreign_labels():
    with pytest.raises(TreeError):
        restrict(star(4), ["x1", "q"])


# --------------------------------------------------------------- isomorphism


def test_isomorphism_examples():
    t = parse_newick("((a:1,b:2):3,c:1,d:1);", rooted_hint=False)
    assert isomorphic(t, t)
    other = parse_newick("((a:1,c:2):3,b:1,d:1);", rooted_hint=False)
    assert not isomorphic(t, other, weighted=False)
    heavier = parse_newick("((a:1,b:2):4,c:1,d:1);", rooted_hint=False)
    assert not isomorphic(t, heavier)
    assert isomorphic(t, heavier, weighted=False)


def test_isomorphism_ignores_vertex_numbering_and_child_order():
    t1 = parse_newick("((b:1,a:2):3,(d:1,c:1):2);")
    t2 = parse_newick("((c:1,d:1):2,(a:2,b:1):3);")
    assert isomorphic(t1, t2)


def test_isomorphism_respects_the_root():
    t1 = parse_newick("((a:1,b:1):1,c:2);")
    t2 = parse_newick("(a:2,(b:1,c:1):1);")
    assert not isomorphic(t1, t2, weighted=False)


def test_isomorphism_rejects_mismatched_inputs():
    with pytest.raises(TreeError):
        isomorphic(star(3), star(4))
    with pytest.raises(TreeError):
        isomorphic(parse_newick("((a,b),c);"), parse_newick("(a,b,c);"))


@PROPS
@given(seed=seeds, n=sizes, rooted=st.booleans())
def test_canonical_form_is_invariant_under_relabelled_vertices(seed, n, rooted):
    t = random_tree(labels(n), rooted=rooted, binary=seed % 2 == 0, seed=seed)
    shift = {v: v + 1000 for v in t.vertices}
    moved = Tree(
        [(shift[u], shift[v], w) for u, v, w in t.edges],
        {shift[v]: x for v, x in t.labels.items()},
        shift[t.root] if rooted else None,
    )
    assert canonical_form(moved) == canonical_form(t)
    assert isomorphic(canonicalize(t), t)


def test_canonicalize_contracts_zero_interior_edges():
    t = parse_newick("((a:1,b:1):0,c:1,d:1);", rooted_hint=False)
    c = canonicalize(t)
    assert len(c.vertices) == 5
    assert isomorphic(c, parse_newick("(a:1,b:1,c:1,d:1);"))


# --------------------------------------------------------------- equidistant


def test_equidistant_reference_is_generic(data_dir):
    t = read_newick(data_dir / "equidistant5.nwk")
    assert is_equidistant_weighting(t)
    assert is_generic(t)
    assert height(t, t.root) == path_distance(t, t.root, "x4")
    assert height(t, "x3") == 0
    # lca height is half the pair distance
    assert 2 * height(t, t.lca(["x1", "x2"])) == path_distance(t, "x1", "x2")


def test_unequal_star_is_not_equidistant():
    t = parse_newick("(a:1,b:2,c:1);", rooted_hint=True)
    assert not is_equidistant_weighting(t)


def test_equidistant_requires_monotone_interior_heights():
    # leaves equally deep but the interior vertex sits above the root
    t = parse_newick("((a:3,b:3):-1,c:2);")
    assert not is_equidistant_weighting(t)


def test_negative_pendants_are_allowed():
    t = parse_newick("((a:-1,b:-1):3,c:2);")
    assert is_equidistant_weighting(t)


def test_height_requires_equidistance():
    with pytest.raises(TreeError):
        height(parse_newick("(a:1,b:2);"), "a")


def test_generic_needs_distinct_heights(data_dir):
    assert not is_generic(read_newick(data_dir / "nongeneric7.nwk"))
    assert not is_generic(parse_newick("(a:1,b:1,c:1);", rooted_hint=True))


@PROPS
@given(seed=seeds, n=st.integers(2, 10))
def test_random_equidistant_trees_are_generic(seed, n):
    t = random_tree(labels(n), rooted=True, equidistant=True, seed=seed)
    assert is_equidistant_weighting(t)
    assert is_generic(t)
    assert all(w > 0 for u, v, w in t.edges if not t.is_pendant(u, v))


def test_random_tree_is_deterministic():
    a = random_tree(labels(9), seed=11, binary=False)
    b = random_tree(labels(9), seed=11, binary=False)
    assert canonical_form(a) == canonical_form(b)
    assert canonical_form(a) != canonical_form(random_tree(labels(9), seed=12, binary=False))


# ---------------------------------------------------------------------- lift


def test_lifted_reference_is_the_lift(data_dir):
    t = read_newick(data_dir / "equidistant5.nwk")
    assert isomorphic(lift_and_unroot(t, 2), read_newick(data_dir / "lifted5.nwk"))


def test_lift_zero_keeps_a_multifurcating_root():
    t = parse_newick("((a:1,b:1):1,c:2,d:2);", rooted_hint=True)
    u = lift_and_unroot(t, 0)
    assert not u.is_rooted
    assert sorted(w for *_, w in u.edges) == sorted(w for *_, w in t.edges)


def test_lift_too_small_is_an_error(data_dir):
    t = read_newick(data_dir / "equidistant5.nwk")
    assert min_lift(t) == 1
    with pytest.raises(TreeError):
        lift_and_unroot(t, Fraction(1, 2))


def _midpoint_reroot(u: Tree, lift: Fraction) -> Tree:
    """Re-root an unrooted tree at the point equidistant from all leaves."""
    leaves = u.leaves
    far = max(((x, y) for x in leaves for y in leaves), key=lambda p: path_distance(u, *p))
    half = path_distance(u, *far) / 2
    x, y = far
    # walk from x toward y
    prev = {u.vertex(x): None}
    stack = [u.vertex(x)]
    while stack:
        v = stack.pop()
        for w in u.neighbors(v):
            if w not in prev:
                prev[w] = v
                stack.append(w)
    route = [u.vertex(y)]
    while prev[route[-1]] is not None:
        route.append(prev[route[-1]])
    route.reverse()
    adj = {v: {w: u.weight(v, w) for w in u.neighbors(v)} for v in u.vertices}
    pos = Fraction(0)
    for a, b in zip(route, route[1:]):
        w = adj[a][b]
        if pos + w == half:
            root = b
            break
        if pos < half < pos + w:
            root = max(adj) + 1
            del adj[a][b], adj[b][a]
            adj[root] = {a: half - pos, b: pos + w - half}
            adj[a][root] = half - pos
            adj[b][root] = pos + w - half
            break
        pos += w
    edges = []
    for v, nbrs in adj.items():
        for w, wt in nbrs.items():
            if v < w:
                pendant = v in u.labels or w in u.labels
                edges.append((v, w, wt - lift if pendant else wt))
    return Tree(edges, u.labels, root)


@PROPS
@given(seed=seeds, n=st.integers(3, 9), extra=st.integers(0, 5))
def test_lift_round_trip_by_midpoint_rerooting(seed, n, extra):
    t = random_tree(labels(n), rooted=True, equidistant=True, weight_range=(-3, 6), seed=seed)
    lift = max(min_lift(t), Fraction(0)) + extra
    u = lift_and_unroot(t, lift)
    assert all(w >= 0 for *_, w in u.edges)
    assert isomorphic(_midpoint_reroot(u, lift), t)


# ------------------------------------------------------------------- surgery


def test_surgery_reproduces_reference(data_dir):
    t = read_newick(data_dir / "equidistant5.nwk")
    s = apply_alpha_surgery(t, 5, 10)
    assert isomorphic(s, read_newick(data_dir / "surgered5.nwk"))
    assert steiner_weight(s, t.leaves) == steiner_weight(t, t.leaves)


def test_surgery_with_zero_alpha_is_identity(data_dir):
    t = read_newick(data_dir / "equidistant5.nwk")
    assert isomorphic(apply_alpha_surgery(t, 3, 0), t)


def test_surgery_preconditions(data_dir):
    t = read_newick(data_dir / "equidistant5.nwk")
    with pytest.raises(TreeError):
        apply_alpha_surgery(t, 3, 12)  # root edges are 6 and 7
    with pytest.raises(TreeError):
        apply_alpha_surgery(parse_newick("(a:1,b:1,c:1);", rooted_hint=True), 3, 1)


def test_surgery_on_an_edge_that_is_both_pendant_and_root():
    t = parse_newick("((a:1,b:1):2,c:3);")
    s = apply_alpha_surgery(t, 3, 1)
    assert s.weight(s.root, s.vertex("c")) == 3 + Fraction(1, 3) - Fraction(1, 2)
    assert is_equidistant_weighting(s)


@PROPS
@given(seed=seeds, n=st.integers(4, 9), k=st.integers(2, 4), frac=st.fractions(0, 1))
def test_surgery_shift_matches_root_side_rule(seed, n, k, frac):
    from itertools import combinations

    t = random_tree(labels(n), rooted=True, equidistant=True, seed=seed)
    u, v = root_sides(t)
    a, b = t.weight(t.root, u), t.weight(t.root, v)
    alpha = frac * 2 * min(a, b) * Fraction(99, 100)
    s = apply_alpha_surgery(t, k, alpha)
    assert is_equidistant_weighting(s)
    assert heights(s)[s.root] == heights(t)[t.root] + alpha / k - alpha / 2
    sides = [set(t.leaves_below(u)), set(t.leaves_below(v))]
    for subset in combinations(t.leaves, min(k, n)):
        diff = steiner_weight(s, subset) - steiner_weight(t, subset)
        inside = any(set(subset) <= side for side in sides)
        assert diff == (alpha * len(subset) / k if inside else alpha * len(subset) / k - alpha)
