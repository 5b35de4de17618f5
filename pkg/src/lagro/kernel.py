"""Exact LP/MILP kernel over the rationals.

Dense two-phase tableau simplex (Bland's rule) with dual prices and unbounded
rays, depth-first branch-and-bound, matrix norms, the vertex bound for
equality-form polyhedra and a brute-force total unimodularity test.
"""
import itertools
import logging
import math
import numbers
import re
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from lagro.errors import ConditionViolationError, InputError

logger = logging.getLogger(__name__)

Scalar = Fraction
Vec = Tuple[Fraction, ...]
Mat = Tuple[Vec, ...]
ExtValue = Union[Fraction, float]

INF = math.inf
ZERO = Fraction(0)
ONE = Fraction(1)

_RATIONAL_LITERAL = re.compile(r"^[+-]?\d+(/\d+)?$")


def to_scalar(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to an exact rational; floats are refused."""
    if isinstance(value, bool) or isinstance(value, float):
        raise InputError(f"Expected an exact rational, got {value!r}")
    if isinstance(value, numbers.Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, str):
        literal = value.strip()
        if not _RATIONAL_LITERAL.match(literal):
            raise InputError(f"Malformed rational literal {value!r}")
        try:
            return Fraction(literal)
        except ZeroDivisionError as exc:
            raise InputError(f"Zero denominator in {value!r}") from exc
    raise InputError(f"Expected an exact rational, got {value!r}")


def vec(values: Iterable) -> Vec:
    return tuple(to_scalar(v) for v in values)


def mat(rows: Iterable[Iterable]) -> Mat:
    return tuple(vec(row) for row in rows)


def zeros(n: int) -> Vec:
    return (ZERO,) * n


def zero_mat(rows: int, cols: int) -> Mat:
    return tuple(zeros(cols) for _ in range(rows))


def identity(n: int) -> Mat:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    if len(u) != len(v):
        raise InputError(f"Dimension mismatch in dot product: {len(u)} vs {len(v)}")
    return sum((a * b for a, b in zip(u, v) if a and b), ZERO)


def mat_vec(M: Mat, v: Sequence[Fraction]) -> Vec:
    return tuple(dot(row, v) for row in M)


def vec_mat(v: Sequence[Fraction], M: Mat, ncols: int) -> Vec:
    """Return ``v' M`` for an ``len(v) x ncols`` matrix (``ncols`` matters when M has no rows)."""
    if len(v) != len(M):
        raise InputError(f"Dimension mismatch in v'M: {len(v)} vs {len(M)} rows")
    return tuple(sum((v[i] * M[i][j] for i in range(len(M)) if v[i] and M[i][j]), ZERO) for j in range(ncols))


def add(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vec:
    if len(u) != len(v):
        raise InputError(f"Dimension mismatch in vector sum: {len(u)} vs {len(v)}")
    return tuple(a + b for a, b in zip(u, v))


def sub(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vec:
    if len(u) != len(v):
        raise InputError(f"Dimension mismatch in vector difference: {len(u)} vs {len(v)}")
    return tuple(a - b for a, b in zip(u, v))


def scale(c: Fraction, u: Sequence[Fraction]) -> Vec:
    return tuple(c * a for a in u)


def hstack(A: Mat, B: Mat) -> Mat:
    if len(A) != len(B):
        raise InputError(f"Cannot concatenate matrices with {len(A)} and {len(B)} rows")
    return tuple(tuple(a) + tuple(b) for a, b in zip(A, B))


def is_integral(value) -> bool:
    return Fraction(value).denominator == 1


def max_abs(values: Iterable[Fraction]) -> Fraction:
    return max((abs(Fraction(v)) for v in values), default=ZERO)


def max_abs_norm(M: Mat) -> Fraction:
    """Largest absolute entry; 0 for an empty matrix."""
    return max((max_abs(row) for row in M), default=ZERO)


def induced_inf_norm(M: Mat) -> Fraction:
    """Largest row sum of absolute entries; 0 for an empty matrix."""
    return max((sum((abs(a) for a in row), ZERO) for row in M), default=ZERO)


class Sense(str, Enum):
    MIN = "min"
    MAX = "max"


class RowSense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """``sense  objective'x + offset  s.t.  matrix x (row_senses) rhs,  lower <= x <= upper``.

    ``None`` in ``lower``/``upper`` stands for -inf/+inf.
    """

    objective: Vec
    matrix: Mat
    row_senses: Tuple[RowSense, ...]
    rhs: Vec
    lower: Tuple[Optional[Fraction], ...]
    upper: Tuple[Optional[Fraction], ...]
    integer: Tuple[bool, ...]
    sense: Sense = Sense.MIN
    offset: Fraction = ZERO

    @classmethod
    def build(
        cls,
        objective: Sequence,
        rows: Iterable[Tuple[Sequence, str, object]] = (),
        lower: Optional[Sequence] = None,
        upper: Optional[Sequence] = None,
        integer: Optional[Sequence[bool]] = None,
        sense: Union[Sense, str] = Sense.MIN,
        offset=0,
    ) -> "LinearProgram":
        objective = vec(objective)
        n = len(objective)
        matrix, senses, rhs = [], [], []
        for coeffs, row_sense, value in rows:
            matrix.append(vec(coeffs))
            senses.append(RowSense(row_sense))
            rhs.append(to_scalar(value))
        lower = zeros(n) if lower is None else tuple(None if v is None else to_scalar(v) for v in lower)
        upper = (None,) * n if upper is None else tuple(None if v is None else to_scalar(v) for v in upper)
        integer = (False,) * n if integer is None else tuple(bool(flag) for flag in integer)
        lp = cls(
            objective=objective,
            matrix=tuple(matrix),
            row_senses=tuple(senses),
            rhs=tuple(rhs),
            lower=lower,
            upper=upper,
            integer=integer,
            sense=Sense(sense),
            offset=to_scalar(offset),
        )
        lp.validate()
        return lp

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    @property
    def num_rows(self) -> int:
        return len(self.matrix)

    @property
    def has_integers(self) -> bool:
        return any(self.integer)

    def validate(self) -> None:
        n = self.num_vars
        if not (len(self.rhs) == len(self.row_senses) == len(self.matrix)):
            raise InputError(
                f"LP has {len(self.matrix)} rows, {len(self.row_senses)} senses and {len(self.rhs)} rhs entries"
            )
        for i, row in enumerate(self.matrix):
            if len(row) != n:
                raise InputError(f"LP row {i} has {len(row)} coefficients, expected {n}")
        for name, values in (("lower", self.lower), ("upper", self.upper), ("integer", self.integer)):
            if len(values) != n:
                raise InputError(f"LP {name} bounds have {len(values)} entries, expected {n}")
        for j, flag in enumerate(self.integer):
            if flag and (self.lower[j] is None or self.upper[j] is None):
                raise InputError(f"Integer variable {j} needs finite bounds")

    def value_at(self, x: Sequence[Fraction]) -> Fraction:
        return dot(self.objective, x) + self.offset

    def relaxation(self) -> "LinearProgram":
        return replace(self, integer=(False,) * self.num_vars)


@dataclass(frozen=True)
class SolveOutcome:
    """Result of an LP/MILP solve.

    ``objective`` is exact on OPTIMAL and follows the extended-value convention
    otherwise (infeasible minimization = +inf, unbounded minimization = -inf).
    On UNBOUNDED, ``x`` is a feasible point and ``ray`` an improving direction.
    ``duals`` are sensitivities d(objective)/d(rhs) and are absent for MILPs.
    """

    status: Status
    objective: ExtValue
    x: Optional[Vec] = None
    duals: Optional[Vec] = None
    reduced_costs: Optional[Vec] = None
    ray: Optional[Vec] = None
    nodes: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _infeasible(lp: LinearProgram, nodes: int = 0) -> SolveOutcome:
    return SolveOutcome(Status.INFEASIBLE, INF if lp.sense is Sense.MIN else -INF, nodes=nodes)


class _Tableau:
    def __init__(self, rows: List[List[Fraction]], rhs: List[Fraction], basis: List[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    def pivot(self, r: int, j: int) -> None:
        row = self.rows[r]
        piv = row[j]
        if piv != 1:
            row = [a / piv for a in row]
            self.rows[r] = row
            self.rhs[r] = self.rhs[r] / piv
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[j]
            if f:
                self.rows[i] = [a - f * b if b else a for a, b in zip(other, row)]
                self.rhs[i] -= f * self.rhs[r]
        self.basis[r] = j

    def _reduced_cost(self, cost: List[Fraction], cb: List[Fraction], j: int) -> Fraction:
        return cost[j] - sum((cb[i] * row[j] for i, row in enumerate(self.rows) if cb[i] and row[j]), ZERO)

    def optimize(self, cost: List[Fraction], n_allowed: int) -> Optional[int]:
        """Minimize ``cost`` over the first ``n_allowed`` columns; return the entering column on unboundedness."""
        while True:
            cb = [cost[b] for b in self.basis]
            entering = next((j for j in range(n_allowed) if self._reduced_cost(cost, cb, j) < 0), None)
            if entering is None:
                return None
            leave, best = None, None
            for i, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[leave]):
                        leave, best = i, ratio
            if leave is None:
                return entering
            self.pivot(leave, entering)


def solve_lp(lp: LinearProgram) -> SolveOutcome:
    """Solve a continuous LP exactly with a two-phase Bland-rule simplex."""
    lp.validate()
    if lp.has_integers:
        raise InputError("solve_lp received integer-flagged variables; use solve_milp")

    n = lp.num_vars
    sign = ONE if lp.sense is Sense.MIN else -ONE

    # x_j = shift_j + sum(coef * w_col) with w >= 0
    columns: List[List[Tuple[int, Fraction]]] = []
    shift: List[Fraction] = []
    bound_rows: List[Tuple[int, Fraction]] = []
    n_std = 0
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        if lo is not None and hi is not None and hi < lo:
            return _infeasible(lp)
        if lo is not None:
            shift.append(lo)
            columns.append([(n_std, ONE)])
            if hi is not None:
                bound_rows.append((n_std, hi - lo))
            n_std += 1
        elif hi is not None:
            shift.append(hi)
            columns.append([(n_std, -ONE)])
            n_std += 1
        else:
            shift.append(ZERO)
            columns.append([(n_std, ONE), (n_std + 1, -ONE)])
            n_std += 2

    row_data: List[Tuple[List[Fraction], Fraction, Fraction]] = []
    slack_of = {RowSense.LE: ONE, RowSense.GE: -ONE, RowSense.EQ: ZERO}
    for i, row in enumerate(lp.matrix):
        coeffs = [ZERO] * n_std
        b = lp.rhs[i]
        for j, a in enumerate(row):
            if not a:
                continue
            b -= a * shift[j]
            for col, coef in columns[j]:
                coeffs[col] += a * coef
        row_data.append((coeffs, slack_of[lp.row_senses[i]], b))
    for col, cap in bound_rows:
        coeffs = [ZERO] * n_std
        coeffs[col] = ONE
        row_data.append((coeffs, ONE, cap))

    m = len(row_data)
    n_slack = sum(1 for _, slack, _ in row_data if slack)
    art0 = n_std + n_slack
    width = art0 + m
    rows, rhs, flips = [], [], []
    slack_col = n_std
    for i, (coeffs, slack, b) in enumerate(row_data):
        full = coeffs + [ZERO] * (n_slack + m)
        if slack:
            full[slack_col] = slack
            slack_col += 1
        flip = ONE
        if b < 0:
            full = [-a for a in full]
            b = -b
            flip = -ONE
        full[art0 + i] = ONE
        rows.append(full)
        rhs.append(b)
        flips.append(flip)

    tab = _Tableau(rows, rhs, [art0 + i for i in range(m)])
    tab.optimize([ZERO] * art0 + [ONE] * m, width)
    if any(tab.rhs[i] > 0 for i, b in enumerate(tab.basis) if b >= art0):
        return _infeasible(lp)

    for i in range(m):
        if tab.basis[i] >= art0:
            j = next((j for j in range(art0) if tab.rows[i][j] != 0), None)
            if j is not None:
                tab.pivot(i, j)

    cost = [ZERO] * width
    for j in range(n):
        cj = sign * lp.objective[j]
        for col, coef in columns[j]:
            cost[col] += cj * coef
    entering = tab.optimize(cost, art0)

    point = [ZERO] * width
    for i, b in enumerate(tab.basis):
        point[b] = tab.rhs[i]
    x = tuple(shift[j] + sum((coef * point[col] for col, coef in columns[j]), ZERO) for j in range(n))

    if entering is not None:
        direction = [ZERO] * width
        direction[entering] = ONE
        for i, b in enumerate(tab.basis):
            direction[b] -= tab.rows[i][entering]
        ray = tuple(sum((coef * direction[col] for col, coef in columns[j]), ZERO) for j in range(n))
        return SolveOutcome(Status.UNBOUNDED, -INF if lp.sense is Sense.MIN else INF, x=x, ray=ray)

    cb = [cost[b] for b in tab.basis]
    duals = tuple(
        sign * flips[i] * sum((cb[r] * tab.rows[r][art0 + i] for r in range(m) if cb[r]), ZERO)
        for i in range(lp.num_rows)
    )
    reduced = tuple(
        lp.objective[j] - sum((lp.matrix[i][j] * duals[i] for i in range(lp.num_rows) if duals[i]), ZERO)
        for j in range(n)
    )
    return SolveOutcome(Status.OPTIMAL, lp.value_at(x), x=x, duals=duals, reduced_costs=reduced)


def _first_fractional(lp: LinearProgram, x: Sequence[Fraction]) -> Optional[int]:
    return next((j for j, flag in enumerate(lp.integer) if flag and x[j].denominator != 1), None)


def _better(candidate: Fraction, incumbent: Fraction, sense: Sense) -> bool:
    return candidate < incumbent if sense is Sense.MIN else candidate > incumbent


def solve_milp(lp: LinearProgram) -> SolveOutcome:
    """Depth-first branch-and-bound on the lowest-index fractional integer variable."""
    lp.validate()
    if not lp.has_integers:
        return solve_lp(lp)

    relaxed = lp.relaxation()
    best: Optional[SolveOutcome] = None
    stack = [(lp.lower, lp.upper)]
    nodes = 0
    while stack:
        lower, upper = stack.pop()
        nodes += 1
        node = replace(relaxed, lower=lower, upper=upper)
        outcome = solve_lp(node)
        if outcome.status is Status.INFEASIBLE:
            continue
        if outcome.status is Status.UNBOUNDED:
            point = outcome.x
            j = _first_fractional(lp, point)
            if j is None:
                logger.debug("MILP unbounded after %d nodes", nodes)
                return SolveOutcome(
                    Status.UNBOUNDED, outcome.objective, x=point, ray=outcome.ray, nodes=nodes
                )
        else:
            if best is not None and not _better(outcome.objective, best.objective, lp.sense):
                continue
            point = outcome.x
            j = _first_fractional(lp, point)
            if j is None:
                best = SolveOutcome(Status.OPTIMAL, outcome.objective, x=point)
                continue
        down = math.floor(point[j])
        up_lower = list(lower)
        up_lower[j] = Fraction(down + 1)
        down_upper = list(upper)
        down_upper[j] = Fraction(down)
        stack.append((tuple(up_lower), upper))
        stack.append((lower, tuple(down_upper)))

    if best is None:
        return _infeasible(lp, nodes)
    return replace(best, nodes=nodes)


def vertex_bound(A: Mat, b: Vec) -> Fraction:
    """Entry bound ``m! * ||b|| * ||A||^(m-1)`` for vertices of ``{w >= 0 : A w = b}`` (max-abs norms)."""
    bad = [f"A[{i}][{j}]={a}" for i, row in enumerate(A) for j, a in enumerate(row) if not is_integral(a)]
    bad += [f"b[{i}]={v}" for i, v in enumerate(b) if not is_integral(v)]
    if bad:
        raise ConditionViolationError("vertex_bound needs integer data: " + ", ".join(bad), ["integrality"])
    if len(A) != len(b):
        raise InputError(f"vertex_bound: A has {len(A)} rows but b has {len(b)} entries")
    m = len(A)
    if m == 0:
        return ZERO
    return math.factorial(m) * max_abs(b) * max_abs_norm(A) ** (m - 1)


def _bareiss_det(M: List[List[int]]) -> int:
    n = len(M)
    if n == 0:
        return 1
    A = [row[:] for row in M]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def find_non_unimodular_submatrix(M: Mat) -> Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """Row/column indices of a square submatrix with determinant outside {-1, 0, 1}, or ``None``."""
    for i, row in enumerate(M):
        for j, a in enumerate(row):
            if a not in (-1, 0, 1):
                return (i,), (j,)
    n_rows = len(M)
    n_cols = len(M[0]) if n_rows else 0
    ints = [[int(a) for a in row] for row in M]
    for k in range(2, min(n_rows, n_cols) + 1):
        for rs in itertools.combinations(range(n_rows), k):
            picked = [ints[r] for r in rs]
            for cs in itertools.combinations(range(n_cols), k):
                if _bareiss_det([[row[c] for c in cs] for row in picked]) not in (-1, 0, 1):
                    return rs, cs
    return None


def is_totally_unimodular(M: Mat) -> bool:
    return find_non_unimodular_submatrix(M) is None
