"""Exact rational linear programming over `fractions.Fraction`.

A dense two-phase simplex with Bland's rule: deterministic given input order,
never cycles, and returns exact rational witnesses.  Strict inequalities are
handled by maximizing a shared margin variable; the system `{a_i·x < b_i, ...}`
is feasible iff the margin optimum is positive.

This is deliberately a small, auditable textbook implementation: the LPs in
this package have at most a few dozen constraints over <= 10 variables, and
exactness/determinism matter far more than speed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvariantViolation, ValidationError
from .rational import frac, rational_vector

_ZERO = Fraction(0)
_ONE = Fraction(1)

LE = "<="
LT = "<"
EQ = "="


@dataclass(frozen=True)
class LinearConstraint:
    """`normal . x  (sense)  offset` with sense one of "<=", "<", "=". """

    normal: tuple[Fraction, ...]
    offset: Fraction
    sense: str = LE

    def __post_init__(self):
        object.__setattr__(self, "normal", rational_vector(self.normal))
        object.__setattr__(self, "offset", frac(self.offset))
        if self.sense not in (LE, LT, EQ):
            raise ValidationError(f"unknown constraint sense {self.sense!r}")

    @staticmethod
    def le(normal, offset) -> "LinearConstraint":
        return LinearConstraint(tuple(normal), offset, LE)

    @staticmethod
    def lt(normal, offset) -> "LinearConstraint":
        return LinearConstraint(tuple(normal), offset, LT)

    @staticmethod
    def ge(normal, offset) -> "LinearConstraint":
        return LinearConstraint(tuple(-frac(a) for a in normal), -frac(offset), LE)

    @staticmethod
    def gt(normal, offset) -> "LinearConstraint":
        return LinearConstraint(tuple(-frac(a) for a in normal), -frac(offset), LT)

    @staticmethod
    def eq(normal, offset) -> "LinearConstraint":
        return LinearConstraint(tuple(normal), offset, EQ)

    def holds_at(self, x, strict_ok: bool = True) -> bool:
        lhs = sum(a * xi for a, xi in zip(self.normal, x))
        if self.sense == EQ:
            return lhs == self.offset
        if self.sense == LT and strict_ok:
            return lhs < self.offset
        return lhs <= self.offset

    def strictened(self) -> "LinearConstraint":
        """The same half-space with a strict sense (equalities unchanged)."""
        if self.sense == EQ:
            return self
        return LinearConstraint(self.normal, self.offset, LT)


# ----------------------------------------------------------------------------
# Dense two-phase simplex: maximize c.x  s.t.  A x <= b, x >= 0.
# ----------------------------------------------------------------------------

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"

_MAX_PIVOTS = 200_000


def _pivot(rows, obj, basis, pr, pc):
    piv = rows[pr][pc]
    rows[pr] = [v / piv for v in rows[pr]]
    prow = rows[pr]
    for i, row in enumerate(rows):
        if i != pr and row[pc] != 0:
            f = row[pc]
            rows[i] = [v - f * p for v, p in zip(row, prow)]
    if obj[pc] != 0:
        f = obj[pc]
        for j, p in enumerate(prow):
            obj[j] -= f * p
    basis[pr] = pc


def _run_simplex(rows, obj, basis, allowed_cols):
    """Bland's rule loop; `obj[j]` holds z_j - c_j, last entry the objective."""
    ncols = len(obj) - 1
    pivots = 0
    while True:
        pivots += 1
        if pivots > _MAX_PIVOTS:
            raise InvariantViolation("simplex pivot budget exhausted")
        enter = -1
        for j in range(ncols):
            if allowed_cols[j] and obj[j] < 0:
                enter = j
                break
        if enter < 0:
            return OPTIMAL
        leave = -1
        best = None
        for i, row in enumerate(rows):
            if row[enter] > 0:
                ratio = row[-1] / row[enter]
                if best is None or ratio < best or (
                    ratio == best and basis[i] < basis[leave]
                ):
                    best = ratio
                    leave = i
        if leave < 0:
            return UNBOUNDED
        _pivot(rows, obj, basis, leave, enter)


def simplex_maximize(A, b, c):
    """Exact solve of max c.x, A x <= b, x >= 0.

    Returns (status, x, value) with x the structural variables at optimum
    (None unless status is "optimal").
    """
    m = len(A)
    nv = len(c)
    art_rows = [i for i in range(m) if b[i] < 0]
    n_art = len(art_rows)
    ncols = nv + m + n_art
    rows = []
    for i in range(m):
        row = list(A[i]) + [_ZERO] * (m + n_art) + [b[i]]
        row[nv + i] = _ONE
        if b[i] < 0:
            row = [-v for v in row]
        rows.append(row)
    basis = [nv + i for i in range(m)]
    for k, i in enumerate(art_rows):
        rows[i][nv + m + k] = _ONE
        basis[i] = nv + m + k

    allowed = [True] * ncols

    if n_art:
        # Phase 1: maximize -sum(artificials); feasible iff the optimum is 0.
        obj = [_ZERO] * (ncols + 1)
        for k in range(n_art):
            obj[nv + m + k] = _ONE  # z_j - c_j with c_j = -1 on artificials
        for i in art_rows:
            for j in range(ncols + 1):
                obj[j] -= rows[i][j]  # c_B = -1 contribution of basic artificials
        _run_simplex(rows, obj, basis, allowed)
        if obj[-1] > 0:
            raise InvariantViolation("phase-1 objective above zero")
        if obj[-1] != 0:
            return INFEASIBLE, None, None
        # Drive leftover artificials out of the basis (degenerate rows); rows
        # that cannot be pivoted are all-zero outside the artificial columns
        # and stay inert because artificial columns never re-enter.
        for i in range(m):
            if basis[i] >= nv + m:
                pc = next((j for j in range(nv + m) if rows[i][j] != 0), None)
                if pc is not None:
                    _pivot(rows, obj, basis, i, pc)
        for j in range(nv + m, ncols):
            allowed[j] = False

    # Phase 2 objective from scratch for the current basis.
    cost = list(c) + [_ZERO] * (m + n_art)
    obj = [-cj for cj in cost] + [_ZERO]
    for i, bi in enumerate(basis):
        cb = cost[bi]
        if cb != 0:
            for j in range(ncols + 1):
                obj[j] += cb * rows[i][j]
    status = _run_simplex(rows, obj, basis, allowed)
    if status != OPTIMAL:
        return status, None, None

    x = [_ZERO] * nv
    for i, bi in enumerate(basis):
        if bi < nv:
            x[bi] = rows[i][-1]
    return OPTIMAL, tuple(x), obj[-1]


# ----------------------------------------------------------------------------
# Feasibility of mixed strict/non-strict rational systems over free variables.
# ----------------------------------------------------------------------------


def feasible_point(constraints, n: int):
    """Exact feasibility of a constraint system over R^n (variables free).

    Strict constraints are honored: the returned witness satisfies every "<"
    strictly.  Returns a tuple of Fractions, or None if infeasible.
    Deterministic given the constraint order.
    """
    cons = list(constraints)
    for c in cons:
        if len(c.normal) != n:
            raise ValidationError(
                f"constraint arity {len(c.normal)} != dimension {n}"
            )
    has_strict = any(c.sense == LT for c in cons)
    # Variables: x = u - v (u, v >= 0), plus margin t >= 0 if any strict.
    nv = 2 * n + (1 if has_strict else 0)
    A = []
    b = []

    def add_row(normal, t_coeff, offset):
        row = [_ZERO] * nv
        for j, a in enumerate(normal):
            row[j] = a
            row[n + j] = -a
        if has_strict:
            row[2 * n] = t_coeff
        A.append(row)
        b.append(offset)

    for c in cons:
        if c.sense == LE:
            add_row(c.normal, _ZERO, c.offset)
        elif c.sense == LT:
            add_row(c.normal, _ONE, c.offset)
        else:
            add_row(c.normal, _ZERO, c.offset)
            add_row([-a for a in c.normal], _ZERO, -c.offset)
    objective = [_ZERO] * nv
    if has_strict:
        add_row([_ZERO] * n, _ONE, _ONE)  # t <= 1 keeps the LP bounded
        objective[2 * n] = _ONE

    status, x, value = simplex_maximize(A, b, objective)
    if status != OPTIMAL:
        if status == UNBOUNDED:  # only possible without strict constraints
            raise InvariantViolation("feasibility LP reported unbounded")
        return None
    if has_strict and value <= 0:
        return None
    return tuple(x[j] - x[n + j] for j in range(n))


def lp_feasible(constraints, n: int):
    """Spec-facing alias: witness tuple for FEASIBLE, None for INFEASIBLE."""
    return feasible_point(constraints, n)


class LpCore:
    """Namespace object exposing the exact LP primitives as methods."""

    @staticmethod
    def feasible_point(constraints, n: int):
        return feasible_point(constraints, n)

    @staticmethod
    def maximize(objective, constraints, n: int):
        """max objective.x over non-strict constraints; (status, x, value)."""
        cons = list(constraints)
        if any(c.sense == LT for c in cons):
            raise ValidationError("maximize() accepts only <= and = senses")
        A = []
        b = []
        for c in cons:
            rows = [(c.normal, c.offset)]
            if c.sense == EQ:
                rows.append((tuple(-a for a in c.normal), -c.offset))
            for normal, offset in rows:
                row = []
                for j in range(n):
                    row.append(normal[j])
                for j in range(n):
                    row.append(-normal[j])
                A.append(row)
                b.append(offset)
        obj = list(rational_vector(objective)) + [
            -frac(v) for v in rational_vector(objective)
        ]
        status, x, value = simplex_maximize(A, b, obj)
        if status != OPTIMAL:
            return status, None, None
        return status, tuple(x[j] - x[n + j] for j in range(n)), value
