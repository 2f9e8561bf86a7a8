import json
from fractions import Fraction
from itertools import permutations

import pytest
from conftest import labels
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from kdissim import (
    A_INVERSE,
    A_MATRIX,
    ConsistencyError,
    KDissError,
    KDissimilarity,
    counterexample_equidistant,
    counterexample_treelike,
    delta_by_formula,
    delta_from_5subset,
    delta_global,
    four_point_check,
    from_tree,
    parse_newick,
    random_tree,
    read_newick,
    six_point_equidistant_check,
    six_point_treelike_check,
    ultrametric_check,
)
from kdissim.conditions import (
    CONSISTENCY_ASSIGNMENTS,
    PAIRS,
    ROLE_ASSIGNMENTS,
    TRIPLES,
    consistency_check,
    first_cover,
    matmul,
)
from kdissim.tree import pairwise_distances

PROPS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def pair_map(values: dict) -> KDissimilarity:
    return KDissimilarity(2, values)


# ------------------------------------------------------------------ matrices


def test_matrix_times_inverse_is_identity():
    eye = [[Fraction(int(i == j)) for j in range(10)] for i in range(10)]
    assert matmul(A_MATRIX, A_INVERSE) == eye
    assert matmul(A_INVERSE, A_MATRIX) == eye


def test_matrix_rows_are_triple_pair_incidence():
    for row, triple in zip(A_MATRIX, TRIPLES):
        ones = {PAIRS[j] for j, a in enumerate(row) if a == 1}
        assert ones == {(triple[0], triple[1]), (triple[0], triple[2]), (triple[1], triple[2])}
        assert sum(row) == 3


def test_inverse_entries():
    assert {x for row in A_INVERSE for x in row} == {Fraction(1, 3), Fraction(-1, 6)}


def test_role_assignment_counts():
    counts = {name: len(perms) for name, perms in ROLE_ASSIGNMENTS.items()}
    assert counts == {"pair-nonnegativity": 10, "pair-triangle": 30, "pair-four-point": 15, "pair-ultrametric": 30}
    assert len(CONSISTENCY_ASSIGNMENTS) == 45


# ------------------------------------------------------------------ pair maps


def test_four_point_violation_witness():
    d = pair_map({("x", "xp"): 10, ("y", "yp"): 10, ("x", "y"): 1, ("x", "yp"): 1, ("xp", "y"): 1, ("xp", "yp"): 1})
    report = four_point_check(d)
    assert not report.verdict
    fp = [v for v in report.violations if v.condition == "four-point"]
    assert fp[0].labels == ("x", "xp", "y", "yp")
    assert (fp[0].lhs, fp[0].rhs) == (20, 2)


def test_tree_metrics_pass_four_point():
    for seed in range(10):
        t = random_tree(labels(7), seed=seed, binary=seed % 2 == 0)
        assert four_point_check(from_tree(t, 2)).verdict


def test_constant_pair_map_passes_both():
    d = pair_map({(a, b): 4 for a in "abcde" for b in "abcde" if a < b})
    assert four_point_check(d).verdict and ultrametric_check(d).verdict


def test_negative_pair_value_and_triangle():
    assert four_point_check(pair_map({("a", "b"): -1, ("a", "c"): 1, ("b", "c"): 1})).violations[0].condition == "nonnegative"
    report = four_point_check(pair_map({("a", "b"): 5, ("a", "c"): 1, ("b", "c"): 1}))
    assert [v.condition for v in report.violations] == ["triangle"]


def test_ultrametric_violation_witness():
    report = ultrametric_check(pair_map({("x", "y"): 3, ("x", "z"): 1, ("y", "z"): 1}))
    assert not report.verdict
    assert report.violations[0].labels == ("x", "y", "z")


def test_ultrametric_allows_negative_values():
    assert ultrametric_check(pair_map({("x", "y"): -2, ("x", "z"): 4, ("y", "z"): 4})).verdict


def test_equidistant_pair_maps_are_ultrametric():
    for seed in range(10):
        t = random_tree(labels(7), rooted=True, equidistant=True, weight_range=(-4, 5), seed=seed)
        assert ultrametric_check(from_tree(t, 2)).verdict


def test_pair_checks_reject_other_k():
    d = from_tree(random_tree(labels(4), seed=1), 3)
    with pytest.raises(KDissError):
        four_point_check(d)


def test_report_json_shape():
    report = ultrametric_check(pair_map({("x", "y"): Fraction(7, 2), ("x", "z"): 1, ("y", "z"): 1}))
    doc = json.loads(report.to_json())
    assert doc["verdict"] is False
    assert doc["violations"][0] == {"condition": "ultrametric", "labels": ["x", "y", "z"], "lhs": "7/2", "rhs": "1"}


# --------------------------------------------------------------- derived map


def test_star_gives_constant_two():
    t = parse_newick("(a:1,b:1,c:1,d:1,e:1);")
    delta = delta_from_5subset(from_tree(t, 3), t.leaves)
    assert set(dict(delta.items()).values()) == {2}


@PROPS
@given(seed=st.integers(0, 10**6), rooted=st.booleans(), binary=st.booleans())
def test_delta_recovers_path_distances(seed, rooted, binary):
    t = random_tree(labels(5), rooted=rooted, binary=binary, seed=seed)
    d = from_tree(t, 3)
    dist = pairwise_distances(t)
    for fn in (delta_from_5subset, delta_by_formula):
        delta = fn(d, t.leaves)
        assert all(v == dist[frozenset(key)] for key, v in delta.items())


def test_delta_is_independent_of_role_order():
    t = random_tree(labels(5), seed=3)
    d = from_tree(t, 3).map_values(lambda key, v: v + len(key[0]))  # not treelike, still fine
    base = delta_from_5subset(d, t.leaves)
    for perm in permutations(t.leaves):
        assert delta_from_5subset(d, perm) == base
        assert delta_by_formula(d, perm) == base


def test_delta_rejects_bad_input():
    d = from_tree(random_tree(labels(6), seed=3), 3)
    with pytest.raises(KDissError):
        delta_from_5subset(d, labels(4))
    with pytest.raises(KDissError):
        delta_from_5subset(from_tree(random_tree(labels(6), seed=3), 2), labels(5))


def test_first_cover():
    assert first_cover(labels(7), ("x3", "x7"), 5) == ("x1", "x2", "x3", "x4", "x7")
    with pytest.raises(KDissError):
        first_cover(labels(3), ("x1",), 5)


def test_delta_global_matches_tree_distances():
    t = random_tree(labels(8), seed=9)
    dist = pairwise_distances(t)
    assert all(v == dist[frozenset(key)] for key, v in delta_global(from_tree(t, 3)).items())


def test_delta_global_rejects_inconsistent_maps():
    with pytest.raises(ConsistencyError) as info:
        delta_global(counterexample_treelike(3))
    assert len(info.value.report.violations[0].labels) == 6


@PROPS
@given(seed=st.integers(0, 10**6), n=st.integers(6, 8))
def test_consistency_is_independent_of_cover_choice(seed, n):
    d = from_tree(random_tree(labels(n), seed=seed), 3)
    assert consistency_check(d).verdict
    from itertools import combinations

    values = {}
    for z in combinations(d.ground_set, 5):
        for key, v in delta_from_5subset(d, z).items():
            assert values.setdefault(key, v) == v


# ---------------------------------------------------------------- six-point


def test_six_point_on_trees():
    for seed in range(6):
        n = 6 + seed % 3
        t = random_tree(labels(n), seed=seed)
        assert six_point_treelike_check(from_tree(t, 3)).verdict
        e = random_tree(labels(n), rooted=True, equidistant=True, weight_range=(-2, 6), seed=seed)
        assert six_point_equidistant_check(from_tree(e, 3)).verdict


def test_six_point_rejects_counterexamples():
    assert not six_point_treelike_check(counterexample_treelike(3)).verdict
    assert not six_point_equidistant_check(counterexample_equidistant(3)).verdict


def test_six_point_constant_map():
    d = from_tree(parse_newick("(" + ",".join(f"{x}:1" for x in labels(7)) + ");"), 3)
    assert six_point_treelike_check(d).verdict
    assert six_point_equidistant_check(d).verdict


def test_equidistant_reference_passes_six_point(data_dir):
    d = from_tree(read_newick(data_dir / "equidistant5.nwk"), 3)
    assert six_point_equidistant_check(d).verdict


def test_first_only_stops_early():
    d = counterexample_treelike(3).map_values(lambda key, v: -v)
    assert len(six_point_treelike_check(d, first_only=True).violations) == 1
    assert len(six_point_treelike_check(d).violations) > 1


def test_six_point_preconditions():
    with pytest.raises(KDissError):
        six_point_treelike_check(from_tree(random_tree(labels(4), seed=1), 3))
    with pytest.raises(KDissError):
        six_point_equidistant_check(from_tree(random_tree(labels(6), seed=1), 2))


@settings(max_examples=150, deadline=None)
@given(values=st.lists(st.integers(-3, 12), min_size=10, max_size=10))
def test_each_inequality_is_its_pair_condition_through_delta(values):
    from itertools import combinations

    from kdissim.conditions import _check_inequalities

    y = labels(5)
    d = KDissimilarity(3, dict(zip(combinations(y, 3), values)))
    delta = delta_from_5subset(d, y)
    pair = {v.condition for v in four_point_check(delta).violations}
    if not ultrametric_check(delta).verdict:
        pair.add("ultrametric")
    for name, condition in [
        ("pair-nonnegativity", "nonnegative"),
        ("pair-triangle", "triangle"),
        ("pair-four-point", "four-point"),
        ("pair-ultrametric", "ultrametric"),
    ]:
        assert _check_inequalities(d, [name], [], False) == (condition not in pair)


def test_non_ultrametric_tree_is_treelike_but_not_equidistant(data_dir):
    d = from_tree(read_newick(data_dir / "unrooted6.nwk"), 3)
    assert six_point_treelike_check(d).verdict
    assert not six_point_equidistant_check(d).verdict
