"""Exact rational linear programming.

Two-phase primal simplex over Fraction arithmetic with Bland's rule, so
termination is guaranteed and every optimum is exact.  Dual multipliers are
read off the final tableau from each row's initial unit column, and every
optimal result is KKT-verified before being returned.  Built for desk-scale
problems (tens of rows, hundreds of columns), not for sparsity or speed.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from .core import TsinormError, as_scalar

RELATIONS = ("<=", "=", ">=")

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpError(TsinormError):
    """Solver-internal inconsistency (a bug, never a caller error)."""


@dataclass(frozen=True)
class Constraint:
    coeffs: Tuple[Fraction, ...]
    relation: str
    rhs: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(as_scalar(c) for c in self.coeffs))
        object.__setattr__(self, "rhs", as_scalar(self.rhs))
        if self.relation not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}, got {self.relation!r}")


@dataclass(frozen=True)
class LinearProgram:
    """max/min objective . x subject to rows and per-variable bounds.

    Bounds default to 0 <= x_j (no upper).  A lower bound of None makes
    the variable free.
    """
    objective: Tuple[Fraction, ...]
    constraints: Tuple[Constraint, ...]
    lower: Optional[Tuple[Optional[Fraction], ...]] = None
    upper: Optional[Tuple[Optional[Fraction], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "objective", tuple(as_scalar(c) for c in self.objective))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        n = len(self.objective)
        for row in self.constraints:
            if len(row.coeffs) != n:
                raise ValueError(f"constraint has {len(row.coeffs)} coeffs, expected {n}")
        for bounds in (self.lower, self.upper):
            if bounds is not None and len(bounds) != n:
                raise ValueError("bounds length must match variable count")

    def bounds(self):
        n = len(self.objective)
        lo = self.lower if self.lower is not None else tuple(Fraction(0) for _ in range(n))
        hi = self.upper if self.upper is not None else (None,) * n
        return lo, hi


@dataclass(frozen=True)
class LpSolution:
    status: str
    value: Optional[Fraction] = None
    assignment: Optional[Tuple[Fraction, ...]] = None
    duals: Optional[Tuple[Fraction, ...]] = None


def solve(lp: LinearProgram, sense: str = "max") -> LpSolution:
    """Exact optimum with a verified dual certificate.

    Statuses infeasible/unbounded are results, not errors.  An optimal
    solution that fails the exact KKT check raises LpError; that cannot
    happen short of a solver bug.
    """
    if sense not in ("max", "min"):
        raise ValueError(f"sense must be 'max' or 'min', got {sense!r}")
    sol = _solve_max(lp) if sense == "max" else _negate(_solve_max(_flip_objective(lp)))
    if sol.status == OPTIMAL:
        verify_solution(lp, sense, sol)
    return sol


def _flip_objective(lp: LinearProgram) -> LinearProgram:
    return LinearProgram(tuple(-c for c in lp.objective), lp.constraints, lp.lower, lp.upper)


def _negate(sol: LpSolution) -> LpSolution:
    if sol.status != OPTIMAL:
        return sol
    return LpSolution(OPTIMAL, -sol.value, sol.assignment,
                      tuple(-y for y in sol.duals))


def _solve_max(lp: LinearProgram):
    n = len(lp.objective)
    lower, upper = lp.bounds()

    # Variable transform to x' >= 0: shift finite lower bounds, split free
    # variables into positive and negative parts.  cols holds, per tableau
    # column, (variable index, sign); shift holds the additive constant.
    cols = []
    shift = list(lower)
    for j in range(n):
        if lower[j] is None:
            shift[j] = Fraction(0)
            cols.append((j, 1))
            cols.append((j, -1))
        else:
            cols.append((j, 1))
    ncols = len(cols)

    def transformed_row(coeffs):
        return [coeffs[j] * s for j, s in cols]

    rows = []          # (coeff list, relation, rhs) over transformed columns
    row_origin = []    # original constraint index, or None for bound rows
    for i, con in enumerate(lp.constraints):
        rhs = con.rhs - sum(con.coeffs[j] * shift[j] for j in range(n))
        rows.append([transformed_row(con.coeffs), con.relation, rhs])
        row_origin.append(i)
    for j in range(n):
        if upper[j] is not None:
            if lower[j] is not None and upper[j] < lower[j]:
                return LpSolution(INFEASIBLE)
            unit = [Fraction(0)] * n
            unit[j] = Fraction(1)
            rows.append([transformed_row(unit), "<=", upper[j] - shift[j]])
            row_origin.append(None)

    obj = [lp.objective[j] * s for j, s in cols]

    tab = _Tableau(ncols, rows)
    if not tab.phase1():
        return LpSolution(INFEASIBLE)
    status = tab.phase2(obj)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED)

    xt = tab.column_values()
    assignment = list(shift)
    for col, (j, s) in enumerate(cols):
        if assignment[j] is None:
            assignment[j] = Fraction(0)
        assignment[j] += s * xt[col]
    duals = [Fraction(0)] * len(lp.constraints)
    for r, origin in enumerate(row_origin):
        if origin is not None:
            duals[origin] = tab.row_dual(r)
    value = sum(c * x for c, x in zip(lp.objective, assignment)) if assignment else Fraction(0)
    return LpSolution(OPTIMAL, value, tuple(assignment), tuple(duals))


class _Tableau:
    """Dense simplex tableau in the z_j - c_j convention.

    Columns: structural, then one slack/surplus per row that needs it,
    then one artificial per =/>= row.  Each input row keeps a pointer to
    its initial unit column so duals can be read from the final objective
    row.  Artificial columns are never allowed to re-enter.
    """

    def __init__(self, nstruct, rows):
        self.nstruct = nstruct
        self.flip = []
        matrix = []
        rhs = []
        rels = []
        for coeffs, rel, b in rows:
            if b < 0:
                coeffs = [-a for a in coeffs]
                b = -b
                rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
                self.flip.append(True)
            else:
                self.flip.append(False)
            matrix.append(list(coeffs))
            rhs.append(b)
            rels.append(rel)
        m = len(matrix)
        self.m = m
        self.unit_col = [None] * m   # the column whose reduced cost is this row's dual
        self.artificial = set()
        basis = [None] * m
        ncols = nstruct
        for r, rel in enumerate(rels):
            if rel == "<=":
                self._append_column(matrix, r, Fraction(1))
                self.unit_col[r] = ncols
                basis[r] = ncols
                ncols += 1
            elif rel == ">=":
                self._append_column(matrix, r, Fraction(-1))
                ncols += 1
        for r, rel in enumerate(rels):
            if rel in ("=", ">="):
                self._append_column(matrix, r, Fraction(1))
                self.unit_col[r] = ncols
                self.artificial.add(ncols)
                basis[r] = ncols
                ncols += 1
        self.T = matrix
        self.b = rhs
        self.basis = basis
        self.ncols = ncols
        self.obj = None
        self.deleted = [False] * m

    @staticmethod
    def _append_column(matrix, row, value):
        for r, line in enumerate(matrix):
            line.append(value if r == row else Fraction(0))

    def _pivot(self, r, j):
        T, b, obj = self.T, self.b, self.obj
        piv = T[r][j]
        inv = 1 / piv
        T[r] = [a * inv for a in T[r]]
        b[r] *= inv
        prow = T[r]
        brow = b[r]
        for r2 in range(self.m):
            if r2 == r or self.deleted[r2]:
                continue
            f = T[r2][j]
            if f:
                line = T[r2]
                T[r2] = [a - f * p for a, p in zip(line, prow)]
                b[r2] -= f * brow
        f = obj[j]
        if f:
            self.obj = [a - f * p for a, p in zip(obj, prow)]
            self.objval -= f * brow
        self.basis[r] = j

    def _run(self, banned):
        # Bland: entering = lowest-index improving column, leaving = lowest
        # basis index among minimum ratios.  Guarantees termination.
        while True:
            enter = -1
            for j in range(self.ncols):
                if j in banned:
                    continue
                if self.obj[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return OPTIMAL
            leave = -1
            best = None
            for r in range(self.m):
                if self.deleted[r]:
                    continue
                a = self.T[r][enter]
                if a > 0:
                    ratio = self.b[r] / a
                    if best is None or ratio < best or \
                            (ratio == best and self.basis[r] < self.basis[leave]):
                        best = ratio
                        leave = r
            if leave < 0:
                return UNBOUNDED
            self._pivot(leave, enter)

    def _set_objective(self, c):
        # rebuild the z_j - c_j row for cost vector c over the current basis
        obj = [-cj for cj in c] + [Fraction(0)] * (self.ncols - len(c))
        objval = Fraction(0)
        for r in range(self.m):
            if self.deleted[r]:
                continue
            cb = c[self.basis[r]] if self.basis[r] < len(c) else Fraction(0)
            if cb:
                row = self.T[r]
                obj = [a + cb * t for a, t in zip(obj, row)]
                objval += cb * self.b[r]
        self.obj = obj
        self.objval = objval

    def phase1(self) -> bool:
        cost = [Fraction(0)] * self.ncols
        for j in self.artificial:
            cost[j] = Fraction(-1)
        self._set_objective(cost)
        status = self._run(banned=frozenset())
        if status != OPTIMAL or self.objval != 0:
            return False
        # Remove artificials from the basis: pivot them out where the row
        # still carries structural content, delete the row where it does not
        # (the constraint was linearly dependent).
        for r in range(self.m):
            if self.deleted[r] or self.basis[r] not in self.artificial:
                continue
            pivot_col = next((j for j in range(self.ncols)
                              if j not in self.artificial and self.T[r][j] != 0), None)
            if pivot_col is None:
                self.deleted[r] = True
            else:
                self._pivot(r, pivot_col)
        return True

    def phase2(self, c) -> str:
        cost = list(c) + [Fraction(0)] * (self.ncols - len(c))
        self._set_objective(cost)
        return self._run(banned=frozenset(self.artificial))

    def column_values(self):
        vals = [Fraction(0)] * self.ncols
        for r in range(self.m):
            if not self.deleted[r]:
                vals[self.basis[r]] = self.b[r]
        return vals

    def row_dual(self, r) -> Fraction:
        # The reduced cost of row r's initial unit column equals y_r because
        # that column is zero-cost and carried the identity at the start.
        # Deleted rows were redundant; zero is a valid multiplier for them.
        if self.deleted[r]:
            return Fraction(0)
        if self.unit_col[r] is None:
            raise LpError("row lost its unit column")
        y = self.obj[self.unit_col[r]]
        return -y if self.flip[r] else y


def verify_solution(lp: LinearProgram, sense: str, sol: LpSolution) -> None:
    """Exact KKT check of an optimal solution; raises LpError on failure.

    Checks primal feasibility, dual sign conditions, complementary
    slackness, and the strong-duality value identity.
    """
    if sol.status != OPTIMAL:
        raise LpError("verify_solution needs an optimal solution")
    x = sol.assignment
    y = sol.duals
    n = len(lp.objective)
    lower, upper = lp.bounds()
    sgn = 1 if sense == "max" else -1

    for j in range(n):
        if lower[j] is not None and x[j] < lower[j]:
            raise LpError(f"x[{j}] = {x[j]} below lower bound {lower[j]}")
        if upper[j] is not None and x[j] > upper[j]:
            raise LpError(f"x[{j}] = {x[j]} above upper bound {upper[j]}")
    for i, con in enumerate(lp.constraints):
        lhs = sum(a * v for a, v in zip(con.coeffs, x))
        if con.relation == "<=" and lhs > con.rhs:
            raise LpError(f"row {i} violated: {lhs} > {con.rhs}")
        if con.relation == ">=" and lhs < con.rhs:
            raise LpError(f"row {i} violated: {lhs} < {con.rhs}")
        if con.relation == "=" and lhs != con.rhs:
            raise LpError(f"row {i} violated: {lhs} != {con.rhs}")
        # multiplier sign: for max, <= rows take y >= 0 and >= rows y <= 0;
        # everything reverses for min
        if con.relation == "<=" and sgn * y[i] < 0:
            raise LpError(f"dual sign wrong on <= row {i}: {y[i]}")
        if con.relation == ">=" and sgn * y[i] > 0:
            raise LpError(f"dual sign wrong on >= row {i}: {y[i]}")
        if y[i] != 0 and lhs != con.rhs:
            raise LpError(f"complementary slackness broken on row {i}")

    value_check = sum(c * v for c, v in zip(lp.objective, x))
    if value_check != sol.value:
        raise LpError(f"reported value {sol.value} != c.x = {value_check}")

    dual_value = sum(yi * con.rhs for yi, con in zip(y, lp.constraints))
    for j in range(n):
        d = lp.objective[j] - sum(y[i] * lp.constraints[i].coeffs[j]
                                  for i in range(len(lp.constraints)))
        at_lower = lower[j] is not None and x[j] == lower[j]
        at_upper = upper[j] is not None and x[j] == upper[j]
        if sgn * d > 0:
            if not at_upper:
                raise LpError(f"reduced cost {d} on variable {j} needs it at its upper bound")
            dual_value += d * upper[j]
        elif sgn * d < 0:
            if not at_lower:
                raise LpError(f"reduced cost {d} on variable {j} needs it at its lower bound")
            dual_value += d * lower[j]
    if dual_value != sol.value:
        raise LpError(f"strong duality broken: dual value {dual_value} != {sol.value}")
