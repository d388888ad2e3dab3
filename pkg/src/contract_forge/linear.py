"""Linear and separable contracts.

A linear contract hands the agent a fixed fraction alpha of the reward, so the
agent's expected utility from action i is the line alpha * R_i - c_i.  The
upper envelope of those lines over alpha in [0, 1] tells us which action a
given alpha buys.  Everything here builds on that picture: the exact optimal
linear contract sits on an envelope breakpoint, the optimal separable contract
is one small LP per action, and approx_linear_delta trades an additive delta
of incentive slack for a (1-gamma)/(kappa+1) share of the first-best welfare,
using only kappa+2-ish candidate alphas picked along the envelope.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import InputError
from .lpcore import GREATER, LESS, LinearProgram, OPTIMAL, INFEASIBLE, solve_lp
from .model import (
    ADDITIVE,
    ExplicitSetting,
    Linear,
    ProductSetting,
    Separable,
    Setting,
    _item_marginals,
    expected_reward,
    is_normalized,
)

_TOL_DUP = 0.0  # duplicate expected rewards are rejected on exact equality
_TOL_PAYOFF_TIE = 1e-9  # payoffs this close (relative) count as tied


@dataclass(frozen=True)
class EnvelopeSegment:
    action: int
    left: float
    right: float


@dataclass(frozen=True)
class Envelope:
    """Best-response regions of alpha, ordered left to right."""

    segments: Tuple[EnvelopeSegment, ...]

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return tuple(seg.left for seg in self.segments)

    @property
    def actions(self) -> Tuple[int, ...]:
        return tuple(seg.action for seg in self.segments)


@dataclass(frozen=True)
class LinearApproxResult:
    alpha: float
    action: int
    payoff: float
    kappa: int
    candidates: Tuple[Tuple[float, int, float], ...]


def _rewards_costs(setting: Setting) -> tuple[np.ndarray, np.ndarray]:
    rewards = np.array([expected_reward(setting, i) for i in range(setting.n)])
    costs = np.asarray(setting.costs, dtype=float)
    return rewards, costs


def upper_envelope(setting: Setting) -> Envelope:
    """Trace the agent's best action as the reward fraction alpha sweeps [0, 1].

    Ties at a breakpoint go to the higher-reward action, which is also the
    principal's preference there.  Actions never on top are simply absent.
    """
    rewards, costs = _rewards_costs(setting)
    order = sorted(range(setting.n), key=lambda i: (rewards[i], -costs[i]))
    for a, b in zip(order, order[1:]):
        if rewards[b] - rewards[a] <= _TOL_DUP:
            raise InputError(
                f"actions {a} and {b} share expected reward {rewards[a]:.12g}; "
                "one dominates the other, so the envelope geometry is degenerate"
            )
    # lines y = rewards[i] * alpha - costs[i], scanned in slope order
    stack: List[tuple[int, float]] = []
    for i in order:
        x = 0.0
        while stack:
            top, top_left = stack[-1]
            x = (costs[i] - costs[top]) / (rewards[i] - rewards[top])
            if x <= top_left:
                stack.pop()
                continue
            break
        if not stack:
            x = 0.0
        if x > 1.0:
            continue
        stack.append((i, x))
    segments = []
    for idx, (action, left) in enumerate(stack):
        right = stack[idx + 1][1] if idx + 1 < len(stack) else 1.0
        segments.append(EnvelopeSegment(action=action, left=left, right=right))
    return Envelope(segments=tuple(segments))


def optimal_linear(setting: Setting, delta: float = 0.0) -> Tuple[float, int, float]:
    """Best (alpha, action, payoff) among additive delta-IC linear contracts.

    delta=0 reads the answer off the envelope's left endpoints; delta>0 solves
    a one-variable LP per action.  Payoff ties go to the higher-reward action.
    """
    if delta < 0.0:
        raise InputError("delta must be nonnegative")
    rewards, _ = _rewards_costs(setting)
    if delta == 0.0:
        env = upper_envelope(setting)
        candidates = [
            (seg.left, seg.action, (1.0 - seg.left) * rewards[seg.action])
            for seg in env.segments
        ]
    else:
        candidates = []
        for i in range(setting.n):
            alpha = _cheapest_delta_ic_alpha(setting, i, delta, rewards)
            if alpha is not None:
                candidates.append((alpha, i, (1.0 - alpha) * rewards[i]))
    if not candidates:
        raise InputError("no action admits a delta-IC linear contract")
    return _pick_best(candidates, rewards)


def _pick_best(
    candidates: Sequence[Tuple[float, int, float]], rewards: np.ndarray
) -> Tuple[float, int, float]:
    """Highest payoff wins; near-ties go to the higher-reward action."""
    best = candidates[0]
    for cand in candidates[1:]:
        tol = _TOL_PAYOFF_TIE * max(1.0, abs(best[2]), abs(cand[2]))
        if cand[2] > best[2] + tol:
            best = cand
        elif cand[2] >= best[2] - tol and rewards[cand[1]] > rewards[best[1]]:
            best = cand
    return best


def _cheapest_delta_ic_alpha(
    setting: Setting, action: int, delta: float, rewards: np.ndarray
) -> Optional[float]:
    """Smallest alpha in [0,1] at which `action` is an additive delta-best response."""
    costs = setting.costs
    rows, relations, rhs = [], [], []
    for other in range(setting.n):
        if other == action:
            continue
        rows.append([rewards[action] - rewards[other]])
        relations.append(GREATER)
        rhs.append(costs[action] - costs[other] - delta)
    lp = LinearProgram(
        objective=[1.0],
        sense="min",
        rows=rows,
        relations=relations,
        rhs=rhs,
        upper=[1.0],
    )
    sol = solve_lp(lp)
    if sol.status != OPTIMAL:
        return None
    return float(min(max(sol.primal[0], 0.0), 1.0))


def optimal_separable(
    setting: Setting, delta: float = 0.0
) -> Tuple[Tuple[float, ...], int, float]:
    """Best per-item payment vector, by one m-variable LP per action.

    Returns (item_payments, action, payoff); payoff ties go to the
    higher-reward action.  Works for explicit settings through their item
    marginals.
    """
    if delta < 0.0:
        raise InputError("delta must be nonnegative")
    rewards, costs = _rewards_costs(setting)
    if isinstance(setting, ProductSetting):
        marg = np.asarray(setting.probs, dtype=float)
    elif isinstance(setting, ExplicitSetting):
        marg = _item_marginals(setting)
    else:
        raise InputError(f"unsupported setting type {type(setting).__name__}")
    m = marg.shape[1]
    best = None
    for i in range(setting.n):
        rows, relations, rhs = [], [], []
        for other in range(setting.n):
            if other == i:
                continue
            rows.append(marg[other] - marg[i])
            relations.append(LESS)
            rhs.append(costs[other] - costs[i] + delta)
        sol = solve_lp(
            LinearProgram(objective=marg[i], sense="min", rows=rows, relations=relations, rhs=rhs)
        )
        if sol.status != OPTIMAL:
            continue
        payoff = float(rewards[i] - sol.objective_value)
        tol = _TOL_PAYOFF_TIE * max(1.0, abs(payoff), abs(best[2]) if best else 0.0)
        if (
            best is None
            or payoff > best[2] + tol
            or (payoff >= best[2] - tol and rewards[i] > rewards[best[1]])
        ):
            best = (tuple(float(p) for p in sol.primal), i, payoff)
    if best is None:
        raise InputError("no action admits a delta-IC separable contract")
    return best


def approx_linear_delta(setting: Setting, delta: float, gamma: float) -> LinearApproxResult:
    """Linear contract with payoff >= (1-gamma)/(kappa+1) of the best welfare.

    Carves [0,1] into kappa+1 geometrically growing intervals, takes the
    highest-reward envelope action entering in each, and considers one alpha
    per consecutive pair: the indifference point between them.  Paying the
    indifference alpha under-shoots the later action's exact threshold by at
    most a (1+delta) factor, which an additive delta of slack absorbs (this is
    where normalization matters).  The first candidate incentivizes its action
    exactly.
    """
    if not (0.0 < gamma < 1.0):
        raise InputError(f"gamma must lie in (0, 1), got {gamma}")
    if not (delta > 0.0):
        raise InputError("delta must be positive")
    if not is_normalized(setting):
        warnings.warn(
            "approximation guarantee assumes max expected reward <= 1", stacklevel=2
        )
    rewards, costs = _rewards_costs(setting)
    env = upper_envelope(setting)
    kappa = math.ceil(math.log(1.0 / gamma) / math.log(1.0 + delta))

    def interval_of(alpha: float) -> int:
        # interval 1 is [0, gamma); interval k >= 2 starts at gamma*(1+delta)^(k-2)
        if alpha < gamma:
            return 1
        k = 2 + math.floor(math.log(alpha / gamma) / math.log(1.0 + delta))
        return min(k, kappa + 1)

    chain: List[tuple[float, int]] = []  # (left endpoint alpha_i, action), one per interval
    last_k = 0
    for seg in env.segments:
        k = interval_of(seg.left)
        if k == last_k:
            chain[-1] = (seg.left, seg.action)  # later segment = higher reward
        else:
            chain.append((seg.left, seg.action))
            last_k = k

    first_alpha, first_action = chain[0]
    candidates = [(first_alpha, first_action, (1.0 - first_alpha) * rewards[first_action])]
    for (_, prev), (_, cur) in zip(chain, chain[1:]):
        alpha = (costs[cur] - costs[prev]) / (rewards[cur] - rewards[prev])
        alpha = min(max(alpha, 0.0), 1.0)
        candidates.append((alpha, cur, (1.0 - alpha) * rewards[cur]))
    best = _pick_best(candidates, rewards)
    return LinearApproxResult(
        alpha=best[0],
        action=best[1],
        payoff=best[2],
        kappa=kappa,
        candidates=tuple(candidates),
    )
