"""Exact rational linear feasibility.

Systems are ``E x = f`` together with ``G x >= g`` over free rational
variables. The equalities are eliminated first by Gauss-Jordan reduction;
whatever freedom remains is handed to a two-phase simplex using Bland's rule,
so the procedure always terminates and is fully deterministic.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

Row = Sequence[Fraction]
_ZERO = Fraction(0)


@dataclass
class FeasibilitySystem:
    """``equalities``: rows with ``row . x == rhs``; ``inequalities``: ``row . x >= rhs``."""

    n_vars: int
    equalities: list[tuple[Row, Fraction]] = field(default_factory=list)
    inequalities: list[tuple[Row, Fraction]] = field(default_factory=list)

    def add_eq(self, row: Row, rhs) -> None:
        self.equalities.append((row, Fraction(rhs)))

    def add_ge(self, row: Row, rhs) -> None:
        self.inequalities.append((row, Fraction(rhs)))

    def satisfied_by(self, x: Sequence[Fraction]) -> bool:
        dot = lambda row: sum((a * b for a, b in zip(row, x) if a), _ZERO)
        return all(dot(r) == b for r, b in self.equalities) and all(dot(r) >= b for r, b in self.inequalities)


class Unbounded(Exception):
    pass


def _eliminate(system: FeasibilitySystem):
    """Reduce the equalities; returns ``(x0, basis_dirs)`` or ``None`` if inconsistent.

    Every solution of the equalities is ``x0 + sum(z_j * basis_dirs[j])``.
    """
    n = system.n_vars
    rows = [list(r) + [rhs] for r, rhs in system.equalities]
    pivots: list[tuple[int, int]] = []
    r = 0
    for c in range(n):
        pr = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        prow = rows[r]
        inv = 1 / prow[c]
        if inv != 1:
            for j in range(c, n + 1):
                if prow[j]:
                    prow[j] *= inv
        nz = [j for j in range(c, n + 1) if prow[j]]
        for i, row in enumerate(rows):
            if i != r and row[c]:
                f = row[c]
                for j in nz:
                    row[j] -= f * prow[j]
        pivots.append((r, c))
        r += 1
        if r == len(rows):
            break
    for row in rows[r:]:
        if row[n] != 0:
            return None
    pivot_cols = {c: i for i, c in pivots}
    free = [c for c in range(n) if c not in pivot_cols]
    x0 = [_ZERO] * n
    for i, c in pivots:
        x0[c] = rows[i][n]
    dirs = []
    for f in free:
        d = [_ZERO] * n
        d[f] = Fraction(1)
        for i, c in pivots:
            if rows[i][f]:
                d[c] = -rows[i][f]
        dirs.append(d)
    return x0, dirs


def _pivot(rows: list[list[Fraction]], rhs: list[Fraction], r: int, c: int) -> None:
    prow = rows[r]
    inv = 1 / prow[c]
    nz = [j for j, a in enumerate(prow) if a]
    for j in nz:
        prow[j] *= inv
    rhs[r] *= inv
    for i, row in enumerate(rows):
        if i != r and row[c]:
            f = row[c]
            for j in nz:
                row[j] -= f * prow[j]
            rhs[i] -= f * rhs[r]


def _simplex(rows, rhs, basis, cost) -> None:
    """Minimise ``cost . v`` in place over a canonical tableau (Bland's rule)."""
    m, width = len(rows), len(cost)
    while True:
        entering = None
        for j in range(width):
            red = cost[j] - sum((cost[basis[i]] * rows[i][j] for i in range(m) if rows[i][j]), _ZERO)
            if red < 0:
                entering = j
                break
        if entering is None:
            return
        best = None
        for i in range(m):
            a = rows[i][entering]
            if a > 0:
                ratio = rhs[i] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            raise Unbounded
        _pivot(rows, rhs, best[1], entering)
        basis[best[1]] = entering


def _solve(system: FeasibilitySystem, objective: Row | None):
    reduced = _eliminate(system)
    if reduced is None:
        return None
    x0, dirs = reduced
    p = len(dirs)
    cons = []
    for row, b in system.inequalities:
        coef = [sum((a * d[j] for j, a in enumerate(row) if a and d[j]), _ZERO) for d in dirs]
        slack = b - sum((a * x for a, x in zip(row, x0) if a), _ZERO)
        if not any(coef):
            if slack > 0:
                return None
            continue
        cons.append((coef, slack))

    def assemble(z):
        x = list(x0)
        for zj, d in zip(z, dirs):
            if zj:
                for i, dv in enumerate(d):
                    if dv:
                        x[i] += zj * dv
        return x

    if p == 0 or not cons:
        if objective is not None and p and any(sum((c * dv for c, dv in zip(objective, d)), _ZERO) for d in dirs):
            raise Unbounded
        return assemble([_ZERO] * p)

    # Columns: z+ (p), z- (p), surplus (m), artificials (as needed).
    m = len(cons)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    basis: list[int] = []
    art_rows = [i for i, (_, b) in enumerate(cons) if b > 0]
    width = 2 * p + m + len(art_rows)
    art_col = {i: 2 * p + m + j for j, i in enumerate(art_rows)}
    for i, (coef, b) in enumerate(cons):
        row = [_ZERO] * width
        sign = 1 if b > 0 else -1
        for j, a in enumerate(coef):
            row[j] = sign * a
            row[p + j] = -sign * a
        row[2 * p + i] = Fraction(-sign)
        if b > 0:
            row[art_col[i]] = Fraction(1)
            basis.append(art_col[i])
        else:
            basis.append(2 * p + i)
        rows.append(row)
        rhs.append(sign * b)
    if art_rows:
        cost = [_ZERO] * width
        for c in art_col.values():
            cost[c] = Fraction(1)
        _simplex(rows, rhs, basis, cost)
        if any(rhs[i] for i, b in enumerate(basis) if b >= 2 * p + m):
            return None
        # Drive zero-valued artificials out of the basis; drop redundant rows.
        keep = []
        for i, b in enumerate(basis):
            if b >= 2 * p + m:
                c = next((j for j in range(2 * p + m) if rows[i][j]), None)
                if c is None:
                    continue
                _pivot(rows, rhs, i, c)
                basis[i] = c
            keep.append(i)
        rows = [rows[i][: 2 * p + m] for i in keep]
        rhs = [rhs[i] for i in keep]
        basis = [basis[i] for i in keep]
    if objective is not None:
        dz = [sum((c * dv for c, dv in zip(objective, d) if c), _ZERO) for d in dirs]
        cost = [-v for v in dz] + dz + [_ZERO] * m
        _simplex(rows, rhs, basis, cost)
    value = [_ZERO] * (2 * p + m)
    for i, b in enumerate(basis):
        value[b] = rhs[i]
    return assemble([value[j] - value[p + j] for j in range(p)])


def lp_feasible(system: FeasibilitySystem) -> list[Fraction] | None:
    """An exact solution of ``system``, or ``None`` when it is infeasible."""
    return _solve(system, None)


def lp_maximize(system: FeasibilitySystem, objective: Row) -> tuple[Fraction, list[Fraction]] | None:
    """Maximise ``objective . x``; ``None`` if infeasible, raises :class:`Unbounded`."""
    x = _solve(system, objective)
    if x is None:
        return None
    return sum((c * v for c, v in zip(objective, x)), _ZERO), x
