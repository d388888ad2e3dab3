"""Dense two-phase simplex used by every LP-based operation in the package.

Small by design: the LPs here have at most a few thousand variables and a
handful of rows (or vice versa), so a dense tableau with Bland's anti-cycling
rule is fast enough and fully deterministic. Exposes primal values, one dual
multiplier per constraint, and a Farkas-style certificate on infeasibility.

Conventions. Variables have finite lower bounds (default 0) and optional
upper bounds (np.inf for none; enforced via internal rows). Duals are signed
so that dual_objective_value equals objective_value at an optimum for both
senses: for sense "min", >= rows carry nonnegative multipliers and <= rows
nonpositive ones; for "max" the signs flip. The Farkas certificate y refers
to the lower-bound-shifted system (identical to the input rows when all lower
bounds are 0, the certificate covers user rows only) and satisfies
sum_k y_k a_k <= 0 componentwise with sum_k y_k b_k > 0, where y_k >= 0 on
>= rows and y_k <= 0 on <= rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import InputError, ResourceError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LESS = "<="
GREATER = ">="
EQUAL = "="

_RELATIONS = (LESS, GREATER, EQUAL)

# ratio-test denominators smaller than this are treated as zero; kept well
# below tol_pivot so near-degenerate columns with tiny entries still pivot
_TOL_RATIO = 1e-12


@dataclass
class LPConfig:
    tol_feas: float = 1e-7
    tol_gap: float = 1e-7
    tol_pivot: float = 1e-9
    max_iter: int = 50_000


@dataclass
class LinearProgram:
    objective: Sequence[float]
    sense: str = "min"
    rows: List[Sequence[float]] = field(default_factory=list)
    relations: List[str] = field(default_factory=list)
    rhs: List[float] = field(default_factory=list)
    lower: Optional[Sequence[float]] = None  # default all-zero
    upper: Optional[Sequence[float]] = None  # np.inf entries mean unbounded

    def add_row(self, row: Sequence[float], relation: str, value: float) -> None:
        self.rows.append(row)
        self.relations.append(relation)
        self.rhs.append(value)


@dataclass
class LPSolution:
    status: str
    primal: Optional[np.ndarray]
    dual: Optional[np.ndarray]
    objective_value: float
    dual_objective_value: float
    farkas: Optional[np.ndarray]
    iterations: int


def _validate(lp: LinearProgram):
    c = np.asarray(lp.objective, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise InputError("objective must be a nonempty vector")
    nx = c.size
    if lp.sense not in ("min", "max"):
        raise InputError(f"sense must be 'min' or 'max', got {lp.sense!r}")
    if not (len(lp.rows) == len(lp.relations) == len(lp.rhs)):
        raise InputError("rows, relations, and rhs must have equal lengths")
    if lp.rows:
        rows = np.asarray(lp.rows, dtype=float)
        if rows.shape != (len(lp.rows), nx):
            raise InputError("constraint rows must match the objective length")
    else:
        rows = np.zeros((0, nx))
    rhs = np.asarray(lp.rhs, dtype=float)
    for rel in lp.relations:
        if rel not in _RELATIONS:
            raise InputError(f"unknown relation {rel!r}")
    lower = np.zeros(nx) if lp.lower is None else np.asarray(lp.lower, dtype=float)
    upper = np.full(nx, np.inf) if lp.upper is None else np.asarray(lp.upper, dtype=float)
    if lower.shape != (nx,) or upper.shape != (nx,):
        raise InputError("bound vectors must match the objective length")
    for name, arr in (("objective", c), ("rows", rows), ("rhs", rhs), ("lower", lower)):
        if not np.all(np.isfinite(arr)):
            raise InputError(f"non-finite value in {name}")
    if np.any(np.isnan(upper)) or np.any(upper == -np.inf):
        raise InputError("upper bounds must be finite or +inf")
    if np.any(upper < lower):
        raise InputError("upper bound below lower bound")
    return c, rows, list(lp.relations), rhs, lower, upper


def solve_lp(lp: LinearProgram, config: Optional[LPConfig] = None) -> LPSolution:
    cfg = config or LPConfig()
    c, rows, relations, rhs, lower, upper = _validate(lp)
    nx = c.size
    n_user = rows.shape[0]
    sense_sign = 1.0 if lp.sense == "min" else -1.0
    c_int = sense_sign * c

    # shift lower bounds to zero: x = z + lower
    b_shift = rhs - rows @ lower
    const_term = float(c_int @ lower)

    # upper bounds become internal rows z_j <= u_j - l_j
    a_blocks = [rows]
    rel_list = list(relations)
    b_parts = [b_shift]
    for j in range(nx):
        if np.isfinite(upper[j]):
            e = np.zeros(nx)
            e[j] = 1.0
            a_blocks.append(e.reshape(1, -1))
            rel_list.append(LESS)
            b_parts.append(np.array([upper[j] - lower[j]]))
    a = np.vstack(a_blocks)
    b = np.concatenate(b_parts)
    nr = a.shape[0]

    # orient every row so b >= 0, tracking signs for dual recovery
    sign = np.where(b < 0, -1.0, 1.0)
    a = a * sign[:, None]
    b = b * sign
    rels = []
    for k, rel in enumerate(rel_list):
        if sign[k] < 0 and rel != EQUAL:
            rel = LESS if rel == GREATER else GREATER
        rels.append(rel)

    # tableau columns: structural | slack | artificial | rhs
    slack_rows = [k for k, rel in enumerate(rels) if rel != EQUAL]
    ns = len(slack_rows)
    ncols = nx + ns + nr + 1
    t = np.zeros((nr + 1, ncols))
    t[:nr, :nx] = a
    for i, k in enumerate(slack_rows):
        t[k, nx + i] = 1.0 if rels[k] == LESS else -1.0
    for k in range(nr):
        t[k, nx + ns + k] = 1.0
    t[:nr, -1] = b
    basis = [nx + ns + k for k in range(nr)]
    art_start = nx + ns

    iterations = [0]

    def pivot(prow: int, pcol: int) -> None:
        t[prow] /= t[prow, pcol]
        col = t[:, pcol].copy()
        col[prow] = 0.0
        t[:, :] -= np.outer(col, t[prow])
        t[:, pcol] = 0.0
        t[prow, pcol] = 1.0
        basis[prow] = pcol
        iterations[0] += 1
        if iterations[0] > cfg.max_iter:
            raise ResourceError(
                f"simplex iteration limit {cfg.max_iter} exceeded ({nx} vars, {nr} rows)"
            )

    def run_simplex(enterable: np.ndarray) -> str:
        """Bland's rule on the maintained reduced-cost row."""
        while True:
            red = t[-1, :-1]
            candidates = np.flatnonzero(enterable & (red < -cfg.tol_pivot))
            if candidates.size == 0:
                return OPTIMAL
            j = int(candidates[0])
            col = t[:nr, j]
            pos = np.flatnonzero(col > _TOL_RATIO)
            if pos.size == 0:
                return UNBOUNDED
            ratios = t[pos, -1] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-15]
            prow = int(min(ties, key=lambda r: basis[r]))
            pivot(prow, j)
            t[:nr, -1] = np.maximum(t[:nr, -1], 0.0)

    # phase 1: minimize the artificial sum (reduced costs: 0 - sum of rows on
    # structural/slack columns, exactly 0 on artificial columns)
    t[-1, :] = -t[:nr, :].sum(axis=0)
    t[-1, art_start : art_start + nr] = 0.0
    enterable = np.zeros(ncols - 1, dtype=bool)
    enterable[:art_start] = True
    status = run_simplex(enterable)
    if status != OPTIMAL:  # the artificial sum is bounded below by 0
        raise ResourceError("phase-1 simplex lost boundedness to roundoff")
    phase1_value = -t[-1, -1]

    if phase1_value > cfg.tol_feas:
        # phase-1 duals: artificial costs are 1, so reduced_cost(art_k) = 1 - y_k
        y = 1.0 - t[-1, art_start : art_start + nr]
        farkas = (y * sign)[:n_user]
        return LPSolution(
            status=INFEASIBLE,
            primal=None,
            dual=None,
            objective_value=np.inf if lp.sense == "min" else -np.inf,
            dual_objective_value=np.nan,
            farkas=farkas,
            iterations=iterations[0],
        )

    # drive artificials out of the basis; rows that cannot pivot are redundant
    deleted = np.zeros(nr, dtype=bool)
    for prow in range(nr):
        if basis[prow] < art_start or deleted[prow]:
            continue
        row = t[prow, :art_start]
        pivots = np.flatnonzero(np.abs(row) > cfg.tol_pivot)
        if pivots.size:
            pivot(prow, int(pivots[0]))
        else:
            deleted[prow] = True
            t[prow, :] = 0.0

    # phase 2: rebuild the reduced-cost row for the real objective
    cost_full = np.zeros(ncols - 1)
    cost_full[:nx] = c_int
    cb = np.array([0.0 if deleted[k] else cost_full[basis[k]] for k in range(nr)])
    t[-1, :-1] = cost_full - cb @ t[:nr, :-1]
    t[-1, -1] = -float(cb @ t[:nr, -1])
    status = run_simplex(enterable)

    if status == UNBOUNDED:
        return LPSolution(
            status=UNBOUNDED,
            primal=None,
            dual=None,
            objective_value=-np.inf if lp.sense == "min" else np.inf,
            dual_objective_value=np.nan,
            farkas=None,
            iterations=iterations[0],
        )

    z = np.zeros(nx)
    for k in range(nr):
        if not deleted[k] and basis[k] < nx:
            z[basis[k]] = t[k, -1]
    value_int = -t[-1, -1] + const_term
    # phase-2 duals: artificial costs are 0, so reduced_cost(art_k) = -y_k
    y_int = -t[-1, art_start : art_start + nr].copy()
    y_int[deleted] = 0.0
    y_oriented = y_int * sign
    dual_obj_int = float(y_int @ b) + const_term
    return LPSolution(
        status=OPTIMAL,
        primal=z + lower,
        dual=sense_sign * y_oriented[:n_user],
        objective_value=sense_sign * value_int,
        dual_objective_value=sense_sign * dual_obj_int,
        farkas=None,
        iterations=iterations[0],
    )
