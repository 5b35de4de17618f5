"""Problem data for P (general) and P_I (indicator) and their second-stage evaluators.

Second-stage variables are ordered ``(y_c, y_d)``; Lagrangian programs append the
copy variables ``z`` after them.
"""
import itertools
import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional, Sequence, Tuple, Union

from lagro.errors import DomainError, InputError, InstanceFormatError, LimitExceededError
from lagro.kernel import (
    ONE,
    ZERO,
    ExtValue,
    LinearProgram,
    Mat,
    Vec,
    add,
    dot,
    is_integral,
    mat_vec,
    solve_lp,
    solve_milp,
    to_scalar,
    vec,
    vec_mat,
    zeros,
)
from lagro.utils import setting

logger = logging.getLogger(__name__)

Point = Tuple[int, ...]


def is_finite(value: ExtValue) -> bool:
    return not (isinstance(value, float) and math.isinf(value))


@dataclass(frozen=True)
class UncertaintySet:
    """Binary uncertainty set, explicit or budgeted (``sum(xi) <= budget``).

    Explicit points are kept sorted lexicographically and deduplicated, so the
    first point is always the lexicographically smallest member.
    """

    n_p: int
    explicit: Optional[Tuple[Point, ...]] = None
    budget: Optional[int] = None

    def __post_init__(self):
        if (self.explicit is None) == (self.budget is None):
            raise InstanceFormatError("Xi: give exactly one of 'points' or 'budget'")
        if self.n_p < 1:
            raise InstanceFormatError(f"Xi: np must be at least 1, got {self.n_p}")
        if self.explicit is not None:
            if not self.explicit:
                raise InstanceFormatError("Xi: point list is empty")
            cleaned = set()
            for idx, point in enumerate(self.explicit):
                if len(point) != self.n_p:
                    raise InstanceFormatError(f"Xi: point {idx} has {len(point)} entries, expected {self.n_p}")
                if any(v not in (0, 1) for v in point):
                    raise InstanceFormatError(f"Xi: point {idx} is not binary: {list(point)}")
                cleaned.add(tuple(int(v) for v in point))
            object.__setattr__(self, "explicit", tuple(sorted(cleaned)))
        elif self.budget < 0:
            raise InstanceFormatError(f"Xi: budget must be nonnegative, got {self.budget}")

    def size(self) -> int:
        if self.explicit is not None:
            return len(self.explicit)
        return sum(math.comb(self.n_p, i) for i in range(min(self.budget, self.n_p) + 1))

    @cached_property
    def points(self) -> Tuple[Point, ...]:
        if self.explicit is not None:
            return self.explicit
        cap = setting("uncertainty", "max_points")
        if self.size() > cap:
            raise LimitExceededError(
                f"Budget uncertainty set has {self.size()} points, above the cap of {cap}",
                {"np": self.n_p, "budget": self.budget},
            )
        expanded = []
        for k in range(min(self.budget, self.n_p) + 1):
            for ones in itertools.combinations(range(self.n_p), k):
                expanded.append(tuple(1 if j in ones else 0 for j in range(self.n_p)))
        return tuple(sorted(expanded))

    def __contains__(self, xi) -> bool:
        point = tuple(xi)
        if self.explicit is not None:
            return point in self.explicit
        return len(point) == self.n_p and all(v in (0, 1) for v in point) and sum(point) <= self.budget


@dataclass(frozen=True)
class BoundBox:
    """Boxes containing X and the second-stage feasible set (``y`` ordered ``(y_c, y_d)``)."""

    x_lower: Vec
    x_upper: Vec
    y_lower: Vec
    y_upper: Vec


def _check_vec(name: str, values: Sequence, length: int) -> None:
    if len(values) != length:
        raise InstanceFormatError(f"field '{name}': expected {length} entries, got {len(values)}")


def _check_mat(name: str, rows: Sequence[Sequence], n_rows: int, n_cols: int) -> None:
    if len(rows) != n_rows:
        raise InstanceFormatError(f"field '{name}': expected {n_rows} rows, got {len(rows)}")
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise InstanceFormatError(f"field '{name}' row {i}: expected {n_cols} entries, got {len(row)}")


@dataclass(frozen=True, kw_only=True)
class TwoStageInstance:
    """Data shared by P and P_I.

    c(xi) = c0 + C xi, d(xi) = d0 + D xi with D = [D_c; D_d]; y_c lives in
    [0, yc_upper] (``None`` = unbounded) and y_d in the integer box
    [yd_lower, yd_upper].
    """

    name: str = "instance"
    n1: int
    nc2: int
    nd2: int
    n_p: int
    m: int
    c0: Vec
    C: Mat
    d0: Vec
    D_c: Mat
    D_d: Mat
    T: Mat
    W_c: Mat
    W_d: Mat
    h0: Vec
    X: Tuple[Vec, ...]
    Xi: UncertaintySet
    yc_upper: Tuple[Optional[object], ...] = ()
    yd_lower: Tuple[int, ...] = ()
    yd_upper: Tuple[int, ...] = ()
    bounds: Optional[BoundBox] = None
    lambda0: Optional[object] = None

    kind = "base"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for dim in ("n1", "nc2", "nd2", "n_p", "m"):
            if getattr(self, dim) < 0:
                raise InstanceFormatError(f"dims: '{dim}' must be nonnegative")
        _check_vec("c0", self.c0, self.n1)
        _check_mat("C", self.C, self.n1, self.n_p)
        _check_vec("d0", self.d0, self.n2)
        _check_mat("D_c", self.D_c, self.nc2, self.n_p)
        _check_mat("D_d", self.D_d, self.nd2, self.n_p)
        _check_mat("T", self.T, self.m, self.n1)
        _check_mat("W_c", self.W_c, self.m, self.nc2)
        _check_mat("W_d", self.W_d, self.m, self.nd2)
        _check_vec("h0", self.h0, self.m)
        if not self.X:
            raise InstanceFormatError("X: point list is empty")
        for idx, point in enumerate(self.X):
            _check_vec(f"X point {idx}", point, self.n1)
        if self.Xi.n_p != self.n_p:
            raise InstanceFormatError(f"Xi: np is {self.Xi.n_p}, dims say {self.n_p}")
        _check_vec("yc_upper", self.yc_upper, self.nc2)
        for j, value in enumerate(self.yc_upper):
            if value is not None and value < 0:
                raise InstanceFormatError(f"field 'yc_upper' entry {j}: negative upper bound {value}")
        _check_vec("yd_lower", self.yd_lower, self.nd2)
        _check_vec("yd_upper", self.yd_upper, self.nd2)
        for j, (lo, hi) in enumerate(zip(self.yd_lower, self.yd_upper)):
            if not (is_integral(lo) and is_integral(hi)):
                raise InstanceFormatError(f"field 'yd_lower/yd_upper' entry {j}: bounds must be integers")
            if lo > hi:
                raise InstanceFormatError(f"field 'yd_lower/yd_upper' entry {j}: empty range [{lo}, {hi}]")
        if self.bounds is not None:
            _check_vec("bounds.x_lower", self.bounds.x_lower, self.n1)
            _check_vec("bounds.x_upper", self.bounds.x_upper, self.n1)
            _check_vec("bounds.y_lower", self.bounds.y_lower, self.n2)
            _check_vec("bounds.y_upper", self.bounds.y_upper, self.n2)
        if self.lambda0 is not None and self.lambda0 <= 0:
            raise InstanceFormatError(f"field 'lambda0': must be positive, got {self.lambda0}")

    @property
    def n2(self) -> int:
        return self.nc2 + self.nd2

    @property
    def W(self) -> Mat:
        return tuple(tuple(a) + tuple(b) for a, b in zip(self.W_c, self.W_d))

    @property
    def D(self) -> Mat:
        return self.D_c + self.D_d

    def c(self, xi: Sequence) -> Vec:
        return add(self.c0, mat_vec(self.C, vec(xi)))

    def d(self, xi: Sequence) -> Vec:
        return add(self.d0, mat_vec(self.D, vec(xi)))

    def d_c(self, xi: Sequence) -> Vec:
        return self.d(xi)[: self.nc2]

    def d_d(self, xi: Sequence) -> Vec:
        return self.d(xi)[self.nc2:]

    @property
    def xi_points(self) -> Tuple[Point, ...]:
        return self.Xi.points

    @cached_property
    def yd_points(self) -> Tuple[Tuple[int, ...], ...]:
        ranges = [range(int(lo), int(hi) + 1) for lo, hi in zip(self.yd_lower, self.yd_upper)]
        return tuple(itertools.product(*ranges))

    def check_x(self, x: Sequence) -> Vec:
        if len(x) != self.n1:
            raise InputError(f"x has {len(x)} entries, expected {self.n1}")
        return vec(x)

    def check_xi(self, xi: Sequence) -> Vec:
        if len(xi) != self.n_p:
            raise InputError(f"xi has {len(xi)} entries, expected {self.n_p}")
        if any(v not in (0, 1) for v in xi):
            raise DomainError(f"xi must be binary, got {list(xi)}")
        return vec(xi)

    def check_yd(self, y_d: Sequence) -> Vec:
        if len(y_d) != self.nd2:
            raise InputError(f"y_d has {len(y_d)} entries, expected {self.nd2}")
        for j, (v, lo, hi) in enumerate(zip(y_d, self.yd_lower, self.yd_upper)):
            if not is_integral(v) or not lo <= v <= hi:
                raise InputError(f"y_d[{j}] = {v} outside the integer box [{lo}, {hi}]")
        return vec(y_d)

    def effective_bounds(self) -> Tuple[BoundBox, str]:
        """The declared bound box, or one derived from X and the y_d box (y_c bounds from ``yc_upper``)."""
        if self.bounds is not None:
            return self.bounds, "declared"
        x_lower = tuple(min(p[i] for p in self.X) for i in range(self.n1))
        x_upper = tuple(max(p[i] for p in self.X) for i in range(self.n1))
        # unbounded y_c entries stay None; only the y_d part enters the bound formulas
        y_lower = zeros(self.nc2) + vec(self.yd_lower)
        y_upper = tuple(self.yc_upper) + vec(self.yd_upper)
        return BoundBox(x_lower, x_upper, y_lower, y_upper), "derived from X and Y"

    def _box_row_parts(self):
        rows = [j for j, u in enumerate(self.yc_upper) if u is not None]
        if not rows:
            return None
        T = self.T + tuple(zeros(self.n1) for _ in rows)
        W_c = self.W_c + tuple(tuple(-ONE if k == j else ZERO for k in range(self.nc2)) for j in rows)
        W_d = self.W_d + tuple(zeros(self.nd2) for _ in rows)
        h0 = self.h0 + tuple(-self.yc_upper[j] for j in rows)
        return dict(
            m=self.m + len(rows),
            T=T,
            W_c=W_c,
            W_d=W_d,
            h0=h0,
            yc_upper=(None,) * self.nc2,
        ), len(rows)


@dataclass(frozen=True, kw_only=True)
class GeneralInstance(TwoStageInstance):
    """Problem P: the second stage reads ``T x + W y >= h0 + H xi``."""

    H: Mat

    kind = "general"

    def validate(self) -> None:
        super().validate()
        _check_mat("H", self.H, self.m, self.n_p)

    def h(self, xi: Sequence) -> Vec:
        return add(self.h0, mat_vec(self.H, vec(xi)))

    def with_box_rows(self) -> "GeneralInstance":
        """Equivalent instance whose finite ``yc_upper`` entries became rows ``-y_c >= -u``."""
        parts = self._box_row_parts()
        if parts is None:
            return self
        changes, extra = parts
        return replace(self, H=self.H + tuple(zeros(self.n_p) for _ in range(extra)), **changes)

    @property
    def is_homogeneous(self) -> bool:
        return not any(self.c0) and not any(self.d0) and not any(self.h0)

    def lift_constant_component(self) -> "GeneralInstance":
        """Prepend a component fixed at 1 to xi so that c0, d0 and h0 become columns of C, D and H."""

        def prepend(column: Vec, M: Mat) -> Mat:
            return tuple((column[i],) + tuple(row) for i, row in enumerate(M))

        lifted_points = tuple((1,) + tuple(p) for p in self.xi_points)
        return replace(
            self,
            name=f"{self.name}+lift",
            n_p=self.n_p + 1,
            c0=zeros(self.n1),
            C=prepend(self.c0, self.C),
            d0=zeros(self.n2),
            D_c=prepend(self.d0[: self.nc2], self.D_c),
            D_d=prepend(self.d0[self.nc2:], self.D_d),
            h0=zeros(self.m),
            H=prepend(self.h0, self.H),
            Xi=UncertaintySet(self.n_p + 1, explicit=lifted_points),
        )


@dataclass(frozen=True, kw_only=True)
class IndicatorInstance(TwoStageInstance):
    """Problem P_I: ``g(x, y) = T x + W y - h0 >= 0`` with rows of ``I1[j]`` (``I0[j]``)
    forced to zero when ``xi_j = 1`` (``xi_j = 0``)."""

    I0: Tuple[Tuple[int, ...], ...]
    I1: Tuple[Tuple[int, ...], ...]

    kind = "indicator"

    def validate(self) -> None:
        super().validate()
        for name, sets in (("I0", self.I0), ("I1", self.I1)):
            if len(sets) != self.n_p:
                raise InstanceFormatError(f"field '{name}': expected {self.n_p} index sets, got {len(sets)}")
            for j, rows in enumerate(sets):
                for i in rows:
                    if not 0 <= i < self.m:
                        raise InstanceFormatError(f"field '{name}' set {j}: row index {i} outside [0, {self.m})")

    def active_rows(self, xi: Sequence) -> Tuple[int, ...]:
        rows = set()
        for j, v in enumerate(xi):
            rows.update(self.I1[j] if v == 1 else self.I0[j])
        return tuple(sorted(rows))

    def penalty_weights(self, xi: Sequence) -> Vec:
        """Row weights w with phi_I = w' g(x, y)."""
        weights = [ZERO] * self.m
        for j, v in enumerate(xi):
            for i in self.I1[j]:
                weights[i] += v
            for i in self.I0[j]:
                weights[i] += 1 - v
        return tuple(weights)

    @property
    def continuous_second_stage(self) -> bool:
        return self.nd2 == 0

    def with_box_rows(self) -> "IndicatorInstance":
        parts = self._box_row_parts()
        if parts is None:
            return self
        changes, _ = parts
        return replace(self, **changes)

    def g(self, x: Sequence, y: Sequence) -> Vec:
        return tuple(a - b for a, b in zip(add(mat_vec(self.T, vec(x)), mat_vec(self.W, vec(y))), self.h0))


Instance = Union[GeneralInstance, IndicatorInstance]


def penalty_phi(z: Sequence, xi: Sequence) -> object:
    """e'z + e'xi - 2 z'xi for z in [0,1]^np and binary xi."""
    if len(z) != len(xi):
        raise InputError(f"z has {len(z)} entries but xi has {len(xi)}")
    total = ZERO
    for zj, xj in zip(vec(z), xi):
        if not ZERO <= zj <= ONE:
            raise DomainError(f"z entries must lie in [0, 1], got {zj}")
        if xj not in (0, 1):
            raise DomainError(f"xi must be binary, got {list(xi)}")
        total += zj if xj == 0 else ONE - zj
    return total


def penalty_phi_indicator(inst: IndicatorInstance, x: Sequence, y: Sequence, xi: Sequence) -> object:
    x = inst.check_x(x)
    xi = inst.check_xi(xi)
    if len(y) != inst.n2:
        raise InputError(f"y has {len(y)} entries, expected {inst.n2}")
    return dot(inst.penalty_weights(xi), inst.g(x, y))


def _check_lambda(lam) -> object:
    lam = to_scalar(lam)
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")
    return lam


def _y_bounds(inst: TwoStageInstance, y_d: Optional[Vec]):
    lower = list(zeros(inst.nc2))
    upper = list(inst.yc_upper)
    integer = [False] * inst.nc2
    if y_d is None:
        lower += list(inst.yd_lower)
        upper += list(inst.yd_upper)
        integer += [True] * inst.nd2
    return lower, upper, integer


def second_stage_program(inst: GeneralInstance, x: Sequence, xi: Sequence, y_d: Optional[Sequence] = None) -> LinearProgram:
    """min c(xi)'x + d(xi)'y s.t. T x + W y >= h(xi); with ``y_d`` given only y_c is free."""
    x, xi = inst.check_x(x), inst.check_xi(xi)
    d_c, d_d = inst.d_c(xi), inst.d_d(xi)
    residual = tuple(a - b for a, b in zip(inst.h(xi), mat_vec(inst.T, x)))
    offset = dot(inst.c(xi), x)
    lower, upper, integer = _y_bounds(inst, y_d)
    if y_d is None:
        objective = d_c + d_d
        rows = [(inst.W_c[i] + inst.W_d[i], ">=", residual[i]) for i in range(inst.m)]
    else:
        y_d = inst.check_yd(y_d)
        objective = d_c
        offset += dot(d_d, y_d)
        fixed = mat_vec(inst.W_d, y_d)
        rows = [(inst.W_c[i], ">=", residual[i] - fixed[i]) for i in range(inst.m)]
    return LinearProgram.build(objective, rows, lower=lower, upper=upper, integer=integer, offset=offset)


def lagrangian_program(
    inst: GeneralInstance, x: Sequence, xi: Sequence, lam, y_d: Optional[Sequence] = None
) -> LinearProgram:
    """min c(xi)'x + d(xi)'y + lam*phi(z, xi) s.t. T x + W y >= h0 + H z, z in [0,1]^np."""
    lam = _check_lambda(lam)
    x, xi = inst.check_x(x), inst.check_xi(xi)
    d_c, d_d = inst.d_c(xi), inst.d_d(xi)
    residual = tuple(a - b for a, b in zip(inst.h0, mat_vec(inst.T, x)))
    offset = dot(inst.c(xi), x) + lam * sum(xi, ZERO)
    z_cost = tuple(lam * (1 - 2 * v) for v in xi)
    neg_H = tuple(tuple(-a for a in row) for row in inst.H)
    lower, upper, integer = _y_bounds(inst, y_d)
    lower += [ZERO] * inst.n_p
    upper += [ONE] * inst.n_p
    integer += [False] * inst.n_p
    if y_d is None:
        objective = d_c + d_d + z_cost
        rows = [(inst.W_c[i] + inst.W_d[i] + neg_H[i], ">=", residual[i]) for i in range(inst.m)]
    else:
        y_d = inst.check_yd(y_d)
        objective = d_c + z_cost
        offset += dot(d_d, y_d)
        fixed = mat_vec(inst.W_d, y_d)
        rows = [(inst.W_c[i] + neg_H[i], ">=", residual[i] - fixed[i]) for i in range(inst.m)]
    return LinearProgram.build(objective, rows, lower=lower, upper=upper, integer=integer, offset=offset)


def indicator_program(inst: IndicatorInstance, x: Sequence, xi: Sequence, lam=None) -> LinearProgram:
    """Q_I program (``lam is None``: active indicator rows as equalities) or the L_I program."""
    x, xi = inst.check_x(x), inst.check_xi(xi)
    residual = tuple(a - b for a, b in zip(inst.h0, mat_vec(inst.T, x)))
    W = inst.W
    objective = inst.d(xi)
    offset = dot(inst.c(xi), x)
    lower, upper, integer = _y_bounds(inst, None)
    if lam is None:
        active = set(inst.active_rows(xi))
        rows = [(W[i], "=" if i in active else ">=", residual[i]) for i in range(inst.m)]
    else:
        lam = _check_lambda(lam)
        weights = inst.penalty_weights(xi)
        objective = add(objective, tuple(lam * a for a in vec_mat(weights, W, inst.n2)))
        offset -= lam * dot(weights, residual)
        rows = [(W[i], ">=", residual[i]) for i in range(inst.m)]
    return LinearProgram.build(objective, rows, lower=lower, upper=upper, integer=integer, offset=offset)


def recession_program(inst: TwoStageInstance, xi: Sequence) -> LinearProgram:
    """min d_c(xi)'r s.t. W_c r >= 0, 0 <= r <= 1; a negative value is a descent ray of the continuous recourse."""
    inst = inst.with_box_rows()
    xi = inst.check_xi(xi)
    rows = [(inst.W_c[i], ">=", ZERO) for i in range(inst.m)]
    return LinearProgram.build(inst.d_c(xi), rows, lower=[ZERO] * inst.nc2, upper=[ONE] * inst.nc2)


def _require(inst, cls):
    if not isinstance(inst, cls):
        raise InputError(f"expected a {cls.kind} instance, got {getattr(inst, 'kind', type(inst).__name__)}")


def eval_Q(inst: GeneralInstance, x: Sequence, xi: Sequence) -> ExtValue:
    _require(inst, GeneralInstance)
    return solve_milp(second_stage_program(inst, x, xi)).objective


def eval_Q_restricted(inst: GeneralInstance, x: Sequence, xi: Sequence, y_d: Sequence) -> ExtValue:
    _require(inst, GeneralInstance)
    return solve_lp(second_stage_program(inst, x, xi, y_d)).objective


def eval_L(inst: GeneralInstance, x: Sequence, xi: Sequence, lam) -> ExtValue:
    _require(inst, GeneralInstance)
    return solve_milp(lagrangian_program(inst, x, xi, lam)).objective


def eval_L_restricted(inst: GeneralInstance, x: Sequence, xi: Sequence, lam, y_d: Sequence) -> ExtValue:
    _require(inst, GeneralInstance)
    return solve_lp(lagrangian_program(inst, x, xi, lam, y_d)).objective


def eval_QI(inst: IndicatorInstance, x: Sequence, xi: Sequence) -> ExtValue:
    _require(inst, IndicatorInstance)
    return solve_milp(indicator_program(inst, x, xi)).objective


def eval_LI(inst: IndicatorInstance, x: Sequence, xi: Sequence, lam) -> ExtValue:
    _require(inst, IndicatorInstance)
    return solve_milp(indicator_program(inst, x, xi, lam)).objective


def second_stage_value(inst: Instance, x: Sequence, xi: Sequence) -> ExtValue:
    """Q for P, Q_I for P_I."""
    if isinstance(inst, IndicatorInstance):
        return eval_QI(inst, x, xi)
    return eval_Q(inst, x, xi)


def lagrangian_value(inst: Instance, x: Sequence, xi: Sequence, lam) -> ExtValue:
    """L for P, L_I for P_I."""
    if isinstance(inst, IndicatorInstance):
        return eval_LI(inst, x, xi, lam)
    return eval_L(inst, x, xi, lam)
