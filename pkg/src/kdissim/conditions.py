"""Point conditions for 2- and 3-dissimilarities.

For pair maps: non-negativity, the triangle inequality, the four-point
condition and the ultrametric condition. For 3-dissimilarities: the 5-point
inequalities and the 6-point consistency equality, together with the linear
map that turns a 3-dissimilarity on five labels into a pair map on them.

Five labels ``a < b < c < d < e`` index triples and pairs in the orders
``TRIPLES`` and ``PAIRS``; ``2 * v = A @ u`` links the triple values ``v`` to
the pair values ``u``.
"""

from __future__ import annotations

import json
from collections import Counter
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations

from .kdiss import KDissError, KDissimilarity
from .rational import to_json_value

TRIPLES = tuple(combinations(range(5), 3))
PAIRS = tuple(combinations(range(5), 2))

A_MATRIX = tuple(
    tuple(Fraction(x) for x in row)
    for row in (
        (1, 1, 0, 0, 1, 0, 0, 0, 0, 0),
        (1, 0, 1, 0, 0, 1, 0, 0, 0, 0),
        (1, 0, 0, 1, 0, 0, 1, 0, 0, 0),
        (0, 1, 1, 0, 0, 0, 0, 1, 0, 0),
        (0, 1, 0, 1, 0, 0, 0, 0, 1, 0),
        (0, 0, 1, 1, 0, 0, 0, 0, 0, 1),
        (0, 0, 0, 0, 1, 1, 0, 1, 0, 0),
        (0, 0, 0, 0, 1, 0, 1, 0, 1, 0),
        (0, 0, 0, 0, 0, 1, 1, 0, 0, 1),
        (0, 0, 0, 0, 0, 0, 0, 1, 1, 1),
    )
)

A_INVERSE = tuple(
    tuple(Fraction(x, 6) for x in row)
    for row in (
        (2, 2, 2, -1, -1, -1, -1, -1, -1, 2),
        (2, -1, -1, 2, 2, -1, -1, -1, 2, -1),
        (-1, 2, -1, 2, -1, 2, -1, 2, -1, -1),
        (-1, -1, 2, -1, 2, 2, 2, -1, -1, -1),
        (2, -1, -1, -1, -1, 2, 2, 2, -1, -1),
        (-1, 2, -1, -1, 2, -1, 2, -1, 2, -1),
        (-1, -1, 2, 2, -1, -1, -1, 2, 2, -1),
        (-1, -1, 2, 2, -1, -1, 2, -1, -1, 2),
        (-1, 2, -1, -1, 2, -1, -1, 2, -1, 2),
        (2, -1, -1, -1, -1, 2, -1, -1, 2, 2),
    )
)


def matmul(x: Sequence[Sequence[Fraction]], y: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    cols = range(len(y[0]))
    out = []
    for row in x:
        acc = [Fraction(0)] * len(y[0])
        for a, other in zip(row, y):
            if a == 1:
                for j in cols:
                    acc[j] += other[j]
            elif a:
                for j in cols:
                    acc[j] += a * other[j]
        out.append(acc)
    return out


# ---------------------------------------------------------------------- reports


@dataclass(frozen=True)
class Violation:
    condition: str
    labels: tuple[str, ...]
    lhs: Fraction
    rhs: Fraction

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "labels": list(self.labels),
            "lhs": to_json_value(self.lhs),
            "rhs": to_json_value(self.rhs),
        }


@dataclass
class ConditionReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "violations": [v.to_dict() for v in self.violations]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


class ConsistencyError(ValueError):
    """Pair values from different 5-subsets disagree."""

    def __init__(self, report: ConditionReport):
        v = report.violations[0]
        super().__init__(f"inconsistent 3-dissimilarity on {','.join(v.labels)}")
        self.report = report


# ------------------------------------------------------------------- pair maps


def _pair_check(d: KDissimilarity) -> None:
    if d.k != 2:
        raise KDissError("expected a 2-dissimilarity")


def four_point_check(d: KDissimilarity, first_only: bool = False) -> ConditionReport:
    """Non-negativity, triangle inequality and four-point condition."""
    _pair_check(d)
    out: list[Violation] = []
    for x, y in combinations(d.ground_set, 2):
        if d[x, y] < 0:
            out.append(Violation("nonnegative", (x, y), d[x, y], Fraction(0)))
            if first_only:
                return ConditionReport(out)
    for trio in combinations(d.ground_set, 3):
        for z in trio:
            x, y = (w for w in trio if w != z)
            lhs, rhs = d[x, y], d[x, z] + d[z, y]
            if lhs > rhs:
                out.append(Violation("triangle", (x, z, y), lhs, rhs))
                if first_only:
                    return ConditionReport(out)
    for p, q, r, s in combinations(d.ground_set, 4):
        for (x, xp), (y, yp) in (((p, q), (r, s)), ((p, r), (q, s)), ((p, s), (q, r))):
            lhs = d[x, xp] + d[y, yp]
            rhs = max(d[x, y] + d[xp, yp], d[x, yp] + d[xp, y])
            if lhs > rhs:
                out.append(Violation("four-point", (x, xp, y, yp), lhs, rhs))
                if first_only:
                    return ConditionReport(out)
    return ConditionReport(out)


def ultrametric_check(d: KDissimilarity, first_only: bool = False) -> ConditionReport:
    """``d(x,y) <= max(d(x,z), d(z,y))`` for all triples; signs are not restricted."""
    _pair_check(d)
    out: list[Violation] = []
    for trio in combinations(d.ground_set, 3):
        for z in trio:
            x, y = (w for w in trio if w != z)
            lhs, rhs = d[x, y], max(d[x, z], d[z, y])
            if lhs > rhs:
                out.append(Violation("ultrametric", (x, y, z), lhs, rhs))
                if first_only:
                    return ConditionReport(out)
    return ConditionReport(out)


# ---------------------------------------------------------- 3-dissimilarities

# An expression is a tuple of (coefficient, role triple) terms over roles
# a=0, b=1, c=2, d=3, e=4 (and e'=5 for the consistency equality).

_a, _b, _c, _d, _e, _f = range(6)


def _terms(coef: int, *triples) -> tuple:
    return tuple((coef, t) for t in triples)


# Each inequality is lhs <= max(alternatives).
_INEQUALITIES: dict[str, tuple[tuple, tuple[tuple, ...]]] = {
    "pair-nonnegativity": (
        _terms(1, (_a, _c, _d), (_a, _c, _e), (_a, _d, _e), (_b, _c, _d), (_b, _c, _e), (_b, _d, _e)),
        (_terms(2, (_a, _b, _c), (_a, _b, _d), (_a, _b, _e), (_c, _d, _e)),),
    ),
    "pair-triangle": (
        _terms(2, (_a, _c, _d), (_a, _c, _e), (_b, _d, _e)),
        (
            _terms(
                1, (_a, _b, _c), (_a, _b, _d), (_a, _b, _e), (_a, _d, _e), (_b, _c, _d), (_b, _c, _e), (_c, _d, _e)
            ),
        ),
    ),
    # four-point condition on the quartet {a,b,c,d}, seen through e
    "pair-four-point": (
        _terms(1, (_a, _b, _e), (_c, _d, _e)),
        (
            _terms(1, (_a, _c, _e), (_b, _d, _e)),
            _terms(1, (_a, _d, _e), (_b, _c, _e)),
        ),
    ),
    # ultrametric condition on the triple {a,b,c}
    "pair-ultrametric": (
        _terms(1, (_a, _c, _d), (_a, _c, _e), (_b, _d, _e)),
        (
            _terms(1, (_a, _b, _d), (_a, _b, _e), (_c, _d, _e)),
            _terms(1, (_a, _d, _e), (_b, _c, _d), (_b, _c, _e)),
        ),
    ),
}

TREELIKE_INEQUALITIES = ("pair-nonnegativity", "pair-triangle", "pair-four-point")
EQUIDISTANT_INEQUALITIES = ("pair-ultrametric",)


def _consistency_side(e: int) -> tuple:
    return (
        (2, (_a, _b, e)),
        (-1, (_a, _c, e)),
        (-1, (_a, _d, e)),
        (-1, (_b, _c, e)),
        (-1, (_b, _d, e)),
        (2, (_c, _d, e)),
    )


def _expr_key(expr: tuple, perm: Sequence[int]) -> tuple:
    return tuple(sorted(Counter((c, tuple(sorted(perm[r] for r in t))) for c, t in expr).items()))


def _representatives(size: int, key: Callable[[Sequence[int]], object]) -> tuple[tuple[int, ...], ...]:
    """One permutation per distinct instance of an expression, in lexicographic order."""
    seen = set()
    reps = []
    for perm in permutations(range(size)):
        k = key(perm)
        if k not in seen:
            seen.add(k)
            reps.append(perm)
    return tuple(reps)


def _inequality_key(name: str):
    lhs, alts = _INEQUALITIES[name]
    return lambda perm: (_expr_key(lhs, perm), frozenset(_expr_key(a, perm) for a in alts))


ROLE_ASSIGNMENTS = {name: _representatives(5, _inequality_key(name)) for name in _INEQUALITIES}
CONSISTENCY_ASSIGNMENTS = _representatives(
    6, lambda perm: frozenset((_expr_key(_consistency_side(_e), perm), _expr_key(_consistency_side(_f), perm)))
)


def _require_k3(d: KDissimilarity, minimum: int) -> None:
    if d.k != 3:
        raise KDissError("expected a 3-dissimilarity")
    if len(d.ground_set) < minimum:
        raise KDissError(f"need at least {minimum} labels")


def _evaluate(d: KDissimilarity, expr: tuple, labels: Sequence[str]) -> Fraction:
    return sum((c * d[labels[t[0]], labels[t[1]], labels[t[2]]] for c, t in expr), Fraction(0))


def _check_inequalities(d: KDissimilarity, names: Sequence[str], out: list[Violation], first_only: bool) -> bool:
    for subset in combinations(d.ground_set, 5):
        for name in names:
            lhs_expr, alts = _INEQUALITIES[name]
            for perm in ROLE_ASSIGNMENTS[name]:
                roles = [subset[i] for i in perm]
                lhs = _evaluate(d, lhs_expr, roles)
                rhs = max(_evaluate(d, a, roles) for a in alts)
                if lhs > rhs:
                    out.append(Violation(name, tuple(roles), lhs, rhs))
                    if first_only:
                        return False
    return not out


def consistency_check(d: KDissimilarity, first_only: bool = False) -> ConditionReport:
    """The 6-point equality that makes the derived pair map well defined.

    For every 6-subset, every choice of the two swapped labels ``e, e'`` and
    every split of the other four into pairs ``{a,b}``, ``{c,d}`` (45 cases
    per subset, in lexicographic permutation order).
    """
    _require_k3(d, 3)
    out: list[Violation] = []
    for subset in combinations(d.ground_set, 6):
        for perm in CONSISTENCY_ASSIGNMENTS:
            roles = [subset[i] for i in perm]
            lhs = _evaluate(d, _consistency_side(_e), roles)
            rhs = _evaluate(d, _consistency_side(_f), roles)
            if lhs != rhs:
                out.append(Violation("consistency", tuple(roles), lhs, rhs))
                if first_only:
                    return ConditionReport(out)
    return ConditionReport(out)


def six_point_treelike_check(d: KDissimilarity, first_only: bool = False) -> ConditionReport:
    """Treelike test for 3-dissimilarities on at least five labels."""
    _require_k3(d, 5)
    out: list[Violation] = []
    if not _check_inequalities(d, TREELIKE_INEQUALITIES, out, first_only) and first_only:
        return ConditionReport(out)
    out += consistency_check(d, first_only).violations
    return ConditionReport(out)


def six_point_equidistant_check(d: KDissimilarity, first_only: bool = False) -> ConditionReport:
    """Equidistance test for 3-dissimilarities on at least five labels."""
    _require_k3(d, 5)
    out: list[Violation] = []
    if not _check_inequalities(d, EQUIDISTANT_INEQUALITIES, out, first_only) and first_only:
        return ConditionReport(out)
    out += consistency_check(d, first_only).violations
    return ConditionReport(out)


# ------------------------------------------------------------ derived pair map


def _five(d: KDissimilarity, labels) -> tuple[str, ...]:
    _require_k3(d, 5)
    y = tuple(sorted(set(labels)))
    if len(y) != 5:
        raise KDissError("need exactly five labels")
    if not set(y) <= set(d.ground_set):
        raise KDissError("labels leave the ground set")
    return y


def delta_from_5subset(d: KDissimilarity, labels) -> KDissimilarity:
    """Pair map ``u`` on five labels solving ``2 v = A u`` (via the inverse)."""
    y = _five(d, labels)
    v = [2 * d[y[i], y[j], y[k]] for i, j, k in TRIPLES]
    u = [sum((a * x for a, x in zip(row, v)), Fraction(0)) for row in A_INVERSE]
    return KDissimilarity(2, {(y[i], y[j]): u[n] for n, (i, j) in enumerate(PAIRS)}, y)


def delta_by_formula(d: KDissimilarity, labels) -> KDissimilarity:
    """Closed form of the same map.

    Three times the pair value is twice the sum over triples containing the
    pair, plus twice the complementary triple, minus all remaining triples.
    """
    y = _five(d, labels)
    out = {}
    for x, z in PAIRS:
        total = Fraction(0)
        for t in TRIPLES:
            val = d[y[t[0]], y[t[1]], y[t[2]]]
            if (x in t and z in t) or (x not in t and z not in t):
                total += 2 * val
            else:
                total -= val
        out[(y[x], y[z])] = total / 3
    return KDissimilarity(2, out, y)


def first_cover(ground: Sequence[str], labels: Sequence[str], size: int) -> tuple[str, ...]:
    """Lexicographically first ``size``-subset of ``ground`` containing ``labels``."""
    chosen = set(labels)
    extra = [x for x in sorted(ground) if x not in chosen][: size - len(chosen)]
    if len(chosen) + len(extra) < size:
        raise KDissError(f"cannot cover {sorted(chosen)} with a {size}-subset")
    return tuple(sorted(chosen | set(extra)))


def delta_global(d: KDissimilarity) -> KDissimilarity:
    """Pair map on the whole ground set assembled from 5-subsets.

    Raises :class:`ConsistencyError` when the 6-point equality fails, since
    then the pair values depend on the chosen 5-subset.
    """
    _require_k3(d, 5)
    report = consistency_check(d, first_only=True)
    if not report.verdict:
        raise ConsistencyError(report)
    cache: dict[tuple[str, ...], KDissimilarity] = {}
    out = {}
    for a, b in combinations(d.ground_set, 2):
        z = first_cover(d.ground_set, (a, b), 5)
        if z not in cache:
            cache[z] = delta_from_5subset(d, z)
        out[(a, b)] = cache[z][a, b]
    return KDissimilarity(2, out, d.ground_set)
