"""Exact-rational linear feasibility via phase-1 simplex with Bland's rule.

No floats anywhere: a Feasible answer comes with a witness satisfying every
constraint exactly, and Infeasible means the phase-1 optimum is a positive
rational.  Variables are free reals (split internally as u - v); constraints
are (coeffs, relation, rhs) with relation in {"<=", "=", ">="}.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

RELATIONS = ("<=", "=", ">=")


def feasible_point(
    num_vars: int, constraints: Iterable[tuple[Sequence[Fraction], str, Fraction]]
) -> list[Fraction] | None:
    """A point satisfying all constraints, or None if the system is infeasible."""
    rows: list[list[Fraction]] = []
    rels: list[str] = []
    rhss: list[Fraction] = []
    for coeffs, rel, rhs in constraints:
        coeffs = [Fraction(c) for c in coeffs]
        if len(coeffs) != num_vars:
            raise ValueError(f"coefficient row of length {len(coeffs)}, expected {num_vars}")
        if rel not in RELATIONS:
            raise ValueError(f"unknown relation {rel!r}")
        rhs = Fraction(rhs)
        if rhs < 0:  # canonical: rhs >= 0
            coeffs = [-c for c in coeffs]
            rhs = -rhs
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        if rel == ">=" and rhs == 0:  # avoid a needless artificial
            coeffs = [-c for c in coeffs]
            rel = "<="
        rows.append(coeffs)
        rels.append(rel)
        rhss.append(rhs)

    m = len(rows)
    n_split = 2 * num_vars
    n_slack = sum(1 for r in rels if r != "=")
    slack_of = {}
    art_of = {}
    col = n_split
    for i, r in enumerate(rels):
        if r != "=":
            slack_of[i] = col
            col += 1
    for i, r in enumerate(rels):
        if r != "<=":
            art_of[i] = col
            col += 1
    width = col + 1  # + rhs
    rhs_col = col

    tableau: list[list[Fraction]] = []
    basis: list[int] = []
    zero = Fraction(0)
    one = Fraction(1)
    for i in range(m):
        row = [zero] * width
        for j, c in enumerate(rows[i]):
            row[j] = c
            row[num_vars + j] = -c
        if i in slack_of:
            row[slack_of[i]] = one if rels[i] == "<=" else -one
        if i in art_of:
            row[art_of[i]] = one
            basis.append(art_of[i])
        else:
            basis.append(slack_of[i])
        row[rhs_col] = rhss[i]
        tableau.append(row)

    art_cols = set(art_of.values())
    # objective: minimize sum of artificials; track z_j - c_j
    obj = [zero] * width
    for i in range(m):
        if basis[i] in art_cols:
            for j in range(width):
                obj[j] += tableau[i][j]
    for j in art_cols:
        obj[j] -= one

    while True:
        enter = next((j for j in range(rhs_col) if obj[j] > 0), None)
        if enter is None:
            break
        # Bland: smallest entering index above; leave by min ratio, then
        # smallest basic index
        leave, best = None, None
        for i in range(m):
            a = tableau[i][enter]
            if a > 0:
                ratio = tableau[i][rhs_col] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:
            # unbounded phase-1 cannot happen (objective bounded below by 0)
            raise RuntimeError("phase-1 simplex reported unbounded")
        piv = tableau[leave][enter]
        tableau[leave] = [v / piv for v in tableau[leave]]
        for i in range(m):
            if i != leave and tableau[i][enter] != 0:
                f = tableau[i][enter]
                tableau[i] = [v - f * p for v, p in zip(tableau[i], tableau[leave])]
        if obj[enter] != 0:
            f = obj[enter]
            obj = [v - f * p for v, p in zip(obj, tableau[leave])]
        basis[leave] = enter

    if obj[rhs_col] != 0:
        return None
    values = {}
    for i, b in enumerate(basis):
        values[b] = tableau[i][rhs_col]
    return [values.get(j, zero) - values.get(num_vars + j, zero) for j in range(num_vars)]
