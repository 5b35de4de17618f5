"""Instance generators.

Random families draw from ``numpy.random.default_rng(seed)`` (PCG64), so a
seed reproduces the same instance on every platform. All data are integers
converted to exact rationals.
"""
import itertools
import logging
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from lagro.errors import InputError, LimitExceededError
from lagro.kernel import mat, to_scalar, vec, zero_mat, zeros
from lagro.model import GeneralInstance, IndicatorInstance, UncertaintySet, is_finite
from lagro.oracle import solve_two_stage_bruteforce

logger = logging.getLogger(__name__)

GENERAL_DIMS: Dict[str, Any] = {
    "n1": 1,
    "nc2": 1,
    "nd2": 1,
    "np": 2,
    "m": 2,
    "n_x": 2,
    "budget": None,
    "magnitude": 2,
    "homogeneous": False,
    "yc_bounded": True,
}

INDICATOR_DIMS: Dict[str, Any] = {
    "n1": 1,
    "np": 2,
    "covers": 1,
    "n_x": 2,
    "budget": None,
    "magnitude": 2,
}

MAX_ATTEMPTS = 200


def _ints(rng: np.random.Generator, low: int, high: int, size: int) -> List[int]:
    return [int(v) for v in rng.integers(low, high + 1, size=size)]


def _int_matrix(rng: np.random.Generator, low: int, high: int, rows: int, cols: int) -> List[List[int]]:
    return [[int(v) for v in row] for row in rng.integers(low, high + 1, size=(rows, cols))]


def _binary_points(rng: np.random.Generator, count: int, n: int) -> tuple:
    points = []
    for row in rng.integers(0, 2, size=(count, n)):
        point = tuple(int(v) for v in row)
        if point not in points:
            points.append(point)
    return tuple(vec(p) for p in points)


def _all_binary(n: int) -> tuple:
    return tuple(vec(p) for p in itertools.product((0, 1), repeat=n))


def gen_counterexample(gamma=1) -> GeneralInstance:
    """X = {0}, Xi = {0, 1}, Y_d = {0, 1}; min -gamma*y s.t. -y >= -3/2 + xi."""
    gamma = to_scalar(gamma)
    if gamma <= 0:
        raise InputError(f"gamma must be positive, got {gamma}")
    return GeneralInstance(
        name="counterexample" if gamma == 1 else f"counterexample-gamma{gamma}",
        n1=1,
        nc2=0,
        nd2=1,
        n_p=1,
        m=1,
        c0=zeros(1),
        C=zero_mat(1, 1),
        d0=(-gamma,),
        D_c=(),
        D_d=zero_mat(1, 1),
        T=zero_mat(1, 1),
        W_c=((),),
        W_d=mat([[-1]]),
        h0=(Fraction(-3, 2),),
        H=mat([[1]]),
        X=(zeros(1),),
        Xi=UncertaintySet(1, explicit=((0,), (1,))),
        yc_upper=(),
        yd_lower=(0,),
        yd_upper=(1,),
    )


def gen_interdiction(n: int, seed: int) -> GeneralInstance:
    """Binary recourse y with interdiction rows y <= e - xi and one covering row.

    First stage x in {0,1}^2 buys two units of cover; one item is interdicted
    at a time (budget 1). W_c is empty and H has one unit entry per row, so the
    integrality and unimodularity conditions hold by construction.
    """
    if not 1 <= n <= 4:
        raise InputError(f"interdiction size must be between 1 and 4, got {n}")
    rng = np.random.default_rng(seed)
    n1 = 2
    target = int(rng.integers(1, n + 2))
    c0 = _ints(rng, 1, 3, n1)
    d0 = _ints(rng, 1, 4, n)
    D_d = _int_matrix(rng, 0, 1, n, n)
    T = [[0] * n1 for _ in range(n)] + [[1] * n1]
    W_d = [[-1 if k == i else 0 for k in range(n)] for i in range(n)] + [[1] * n]
    h0 = [-1] * n + [target]
    H = [[1 if k == i else 0 for k in range(n)] for i in range(n)] + [[0] * n]
    return GeneralInstance(
        name=f"interdiction-n{n}-s{seed}",
        n1=n1,
        nc2=0,
        nd2=n,
        n_p=n,
        m=n + 1,
        c0=vec(c0),
        C=zero_mat(n1, n),
        d0=vec(d0),
        D_c=(),
        D_d=mat(D_d),
        T=mat(T),
        W_c=tuple(() for _ in range(n + 1)),
        W_d=mat(W_d),
        h0=vec(h0),
        H=mat(H),
        X=_all_binary(n1),
        Xi=UncertaintySet(n, budget=1),
        yc_upper=(),
        yd_lower=(0,) * n,
        yd_upper=(1,) * n,
    )


def _random_general_candidate(rng: np.random.Generator, dims: Dict[str, Any], name: str) -> GeneralInstance:
    n1, nc2, nd2, n_p, m = dims["n1"], dims["nc2"], dims["nd2"], dims["np"], dims["m"]
    mag = dims["magnitude"]
    homogeneous, bounded = dims["homogeneous"], dims["yc_bounded"]
    # unbounded y_c needs d_c(xi) >= 0
    c_low = -mag if bounded else 0
    c0 = [0] * n1 if homogeneous else _ints(rng, -mag, mag, n1)
    d0_c = [0] * nc2 if homogeneous else _ints(rng, c_low, mag, nc2)
    d0_d = [0] * nd2 if homogeneous else _ints(rng, -mag, mag, nd2)
    h0 = [0] * m if homogeneous else _ints(rng, -mag, mag, m)
    budget = dims["budget"] if dims["budget"] is not None else n_p
    return GeneralInstance(
        name=name,
        n1=n1,
        nc2=nc2,
        nd2=nd2,
        n_p=n_p,
        m=m,
        c0=vec(c0),
        C=mat(_int_matrix(rng, -mag, mag, n1, n_p)),
        d0=vec(d0_c + d0_d),
        D_c=mat(_int_matrix(rng, c_low, mag, nc2, n_p)),
        D_d=mat(_int_matrix(rng, -mag, mag, nd2, n_p)),
        T=mat(_int_matrix(rng, -mag, mag, m, n1)),
        W_c=mat(_int_matrix(rng, -mag, mag, m, nc2)),
        W_d=mat(_int_matrix(rng, -mag, mag, m, nd2)),
        h0=vec(h0),
        H=mat(_int_matrix(rng, -1, 1, m, n_p)),
        X=_binary_points(rng, dims["n_x"], n1),
        Xi=UncertaintySet(n_p, budget=budget),
        yc_upper=tuple(Fraction(v) for v in _ints(rng, 1, mag, nc2)) if bounded else (None,) * nc2,
        yd_lower=(0,) * nd2,
        yd_upper=(1,) * nd2,
    )


def gen_random_general(dims: Optional[Dict[str, Any]] = None, seed: int = 0) -> GeneralInstance:
    """Random integer instance of P, resampled until the two-stage optimum is finite.

    ``dims`` keys (defaults in ``GENERAL_DIMS``): n1, nc2, nd2, np, m, n_x,
    budget (None = full cube), magnitude, homogeneous, yc_bounded.
    """
    dims = {**GENERAL_DIMS, **(dims or {})}
    rng = np.random.default_rng(seed)
    for attempt in range(MAX_ATTEMPTS):
        inst = _random_general_candidate(rng, dims, f"general-s{seed}")
        value, _ = solve_two_stage_bruteforce(inst)
        if is_finite(value):
            logger.debug("gen_random_general seed=%s accepted after %d attempts", seed, attempt + 1)
            return inst
    raise LimitExceededError("No feasible random general instance found", {"seed": seed, "attempts": MAX_ATTEMPTS})


def gen_random_indicator(dims: Optional[Dict[str, Any]] = None, seed: int = 0) -> IndicatorInstance:
    """Random P_I with continuous recourse: primary y_j (lost when xi_j = 1),
    backup u_j (available only when xi_j = 1) and an expensive slack s, all
    feeding the covering rows ``T x + a'(y + u) + s >= r``.
    """
    dims = {**INDICATOR_DIMS, **(dims or {})}
    n1, n_p, covers, mag = dims["n1"], dims["np"], dims["covers"], dims["magnitude"]
    rng = np.random.default_rng(seed)
    nc2 = 2 * n_p + 1
    m = 2 * n_p + covers
    W_c = [[1 if k == i else 0 for k in range(nc2)] for i in range(2 * n_p)]
    T = [[0] * n1 for _ in range(2 * n_p)]
    h0 = [0] * (2 * n_p)
    for _ in range(covers):
        weights = _ints(rng, 1, mag, n_p)
        W_c.append(weights + weights + [1])
        T.append(_ints(rng, 0, mag, n1))
        h0.append(int(rng.integers(1, 2 * mag + 1)))
    d0 = _ints(rng, 1, mag, n_p) + _ints(rng, mag, 2 * mag, n_p) + [3 * mag + 1]
    D_c = _int_matrix(rng, 0, 1, n_p, n_p) + [[0] * n_p for _ in range(n_p + 1)]
    budget = dims["budget"] if dims["budget"] is not None else n_p
    inst = IndicatorInstance(
        name=f"indicator-s{seed}",
        n1=n1,
        nc2=nc2,
        nd2=0,
        n_p=n_p,
        m=m,
        c0=vec(_ints(rng, 0, mag, n1)),
        C=mat(_int_matrix(rng, 0, 1, n1, n_p)),
        d0=vec(d0),
        D_c=mat(D_c),
        D_d=(),
        T=mat(T),
        W_c=mat(W_c),
        W_d=tuple(() for _ in range(m)),
        h0=vec(h0),
        X=_binary_points(rng, dims["n_x"], n1),
        Xi=UncertaintySet(n_p, budget=budget),
        I0=tuple((n_p + j,) for j in range(n_p)),
        I1=tuple((j,) for j in range(n_p)),
        yc_upper=(None,) * nc2,
    )
    value, _ = solve_two_stage_bruteforce(inst)
    if not is_finite(value):
        raise LimitExceededError("Random indicator instance is infeasible", {"seed": seed})
    return inst


def gen_network_design_small(nodes: int, k: int, x_points: Optional[Sequence[Sequence]] = None) -> IndicatorInstance:
    """Cycle network design: build forward arcs (x), route unit demands from node 0.

    Forward arc a runs a -> a+1 and may fail (xi_a = 1 forces its flow to 0);
    reverse arcs a+1 -> a always exist at a higher cost; unmet demand is
    penalized. Rows: conservation per non-source node, forward capacity
    ``cap*x_a - f_a >= 0``, reverse capacity ``-r_a >= -cap`` and ``f_a >= 0``
    (the indicator row of arc a).
    """
    if nodes < 2:
        raise InputError(f"network needs at least 2 nodes, got {nodes}")
    if not 0 <= k <= nodes:
        raise InputError(f"failure budget must lie in [0, {nodes}], got {k}")
    n = nodes
    cap = n
    nc2 = 3 * n - 1
    f, r, u = 0, n, 2 * n
    T: List[List[int]] = []
    W: List[List[int]] = []
    h0: List[int] = []

    def row(coeffs: Dict[int, int], t: Optional[Dict[int, int]] = None, rhs: int = 0) -> int:
        W.append([coeffs.get(j, 0) for j in range(nc2)])
        T.append([(t or {}).get(j, 0) for j in range(n)])
        h0.append(rhs)
        return len(W) - 1

    for v in range(1, n):
        row({f + v - 1: 1, f + v: -1, r + v: 1, r + v - 1: -1, u + v - 1: 1}, rhs=1)
    for a in range(n):
        row({f + a: -1}, t={a: cap})
    for a in range(n):
        row({r + a: -1}, rhs=-cap)
    nonneg = [row({f + a: 1}) for a in range(n)]

    X = tuple(vec(p) for p in x_points) if x_points is not None else _all_binary(n)
    m = len(W)
    return IndicatorInstance(
        name=f"network-n{n}-k{k}",
        n1=n,
        nc2=nc2,
        nd2=0,
        n_p=n,
        m=m,
        c0=vec([2] * n),
        C=zero_mat(n, n),
        d0=vec([1] * n + [3] * n + [10] * (n - 1)),
        D_c=zero_mat(nc2, n),
        D_d=(),
        T=mat(T),
        W_c=mat(W),
        W_d=tuple(() for _ in range(m)),
        h0=vec(h0),
        X=X,
        Xi=UncertaintySet(n, budget=k),
        I0=tuple(() for _ in range(n)),
        I1=tuple((nonneg[a],) for a in range(n)),
        yc_upper=(None,) * nc2,
    )


def gen_restart_example(lambda0="1/2") -> IndicatorInstance:
    """min y s.t. y >= 0, 1 - y >= 0, with 1 - y = 0 forced when xi = 1.

    The worst case is 1 while L_I(xi=1, lam) = min(lam, 1), so any starting
    multiplier below 1 is too small and verification triggers one restart.
    """
    return IndicatorInstance(
        name="tiny_multiplier",
        n1=1,
        nc2=1,
        nd2=0,
        n_p=1,
        m=2,
        c0=zeros(1),
        C=zero_mat(1, 1),
        d0=vec([1]),
        D_c=zero_mat(1, 1),
        D_d=(),
        T=zero_mat(2, 1),
        W_c=mat([[1], [-1]]),
        W_d=((), ()),
        h0=vec([0, -1]),
        X=(zeros(1),),
        Xi=UncertaintySet(1, explicit=((0,), (1,))),
        I0=((),),
        I1=((1,),),
        yc_upper=(None,),
        lambda0=to_scalar(lambda0),
    )
