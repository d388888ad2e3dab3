"""Core data model: principal-agent settings, contracts, and their evaluation.

Settings come in two forms. A ProductSetting is succinct: n actions with costs,
m items with rewards, and per-action success probabilities q[i][j]; an outcome
is the random set of realized items, so outcome probabilities are products over
items. An ExplicitSetting enumerates K outcomes directly (costs, one reward per
outcome, and an n-by-K distribution matrix).

Outcomes are item subsets encoded as int bitmasks (item j <-> bit 1 << j). On
an ExplicitSetting, bitmask b addresses column b of the distribution matrix,
which matches the bit-set column order emitted by product_to_explicit.

The agent picks the action maximizing expected payment minus cost, breaking
near-ties (within TOL_TIE) in favor of the principal's payoff and then the
lowest action index. A contract together with a designated action is delta-IC
under the additive notion if no deviation gains more than delta in utility,
and under the multiplicative notion if boosting the designated action's
expected payment by (1 + delta) makes it a best response. Additive comparisons
are only calibrated for normalized settings (max expected reward <= 1).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import CapacityError, InputError

# Near-ties in agent utility are resolved by principal payoff within this.
TOL_TIE = 1e-9
# Default slack allowed when checking IC-style inequalities.
TOL_IC = 1e-9
# Validation slack for probabilities, welfare, and row sums.
TOL_VALID = 1e-9

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"

_NOTION_ALIASES = {
    "additive": ADDITIVE,
    "add": ADDITIVE,
    "multiplicative": MULTIPLICATIVE,
    "mult": MULTIPLICATIVE,
}


def normalize_notion(notion: str) -> str:
    try:
        return _NOTION_ALIASES[notion.lower()]
    except (KeyError, AttributeError):
        raise InputError(f"unknown IC notion {notion!r}; use 'additive' or 'multiplicative'")


# ---------------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProductSetting:
    """Succinct setting: costs per action, rewards per item, probs[i][j]."""

    costs: tuple
    rewards: tuple
    probs: tuple  # n rows of m item probabilities

    def __post_init__(self):
        costs = tuple(float(c) for c in self.costs)
        rewards = tuple(float(r) for r in self.rewards)
        probs = tuple(tuple(float(p) for p in row) for row in self.probs)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "probs", probs)
        if len(costs) < 1 or len(rewards) < 1:
            raise InputError("need at least one action and one item")
        if len(probs) != len(costs):
            raise InputError("probs must have one row per action")
        if any(len(row) != len(rewards) for row in probs):
            raise InputError("every probs row must have one entry per item")
        for row in probs:
            for p in row:
                if not (-TOL_VALID <= p <= 1.0 + TOL_VALID):
                    raise InputError(f"item probability {p} outside [0, 1]")
        if any(c < -TOL_VALID for c in costs):
            raise InputError("costs must be nonnegative")
        if any(r < -TOL_VALID for r in rewards):
            raise InputError("rewards must be nonnegative")
        for i in range(len(costs)):
            welfare = sum(q * r for q, r in zip(probs[i], rewards)) - costs[i]
            if welfare < -1e-7:
                raise InputError(f"action {i} has negative expected welfare {welfare}")

    @property
    def n(self) -> int:
        return len(self.costs)

    @property
    def m(self) -> int:
        return len(self.rewards)


@dataclass(frozen=True)
class ExplicitSetting:
    """Enumerated setting: costs, reward per outcome column, n-by-K dist."""

    costs: tuple
    outcome_rewards: tuple
    dist: tuple  # n rows of K outcome probabilities

    def __post_init__(self):
        costs = tuple(float(c) for c in self.costs)
        rewards = tuple(float(r) for r in self.outcome_rewards)
        dist = tuple(tuple(float(p) for p in row) for row in self.dist)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "outcome_rewards", rewards)
        object.__setattr__(self, "dist", dist)
        if len(costs) < 1:
            raise InputError("need at least one action")
        if len(rewards) < 1:
            raise InputError("need at least one outcome")
        if len(dist) != len(costs):
            raise InputError("dist must have one row per action")
        if any(len(row) != len(rewards) for row in dist):
            raise InputError("every dist row must have one entry per outcome")
        for i, row in enumerate(dist):
            if any(p < -TOL_VALID for p in row):
                raise InputError(f"dist row {i} has a negative entry")
            s = sum(row)
            if abs(s - 1.0) > TOL_VALID:
                raise InputError(f"dist row {i} sums to {s}, expected 1")

    @property
    def n(self) -> int:
        return len(self.costs)

    @property
    def num_outcomes(self) -> int:
        return len(self.outcome_rewards)


Setting = Union[ProductSetting, ExplicitSetting]


def is_normalized(setting: Setting, tol: float = TOL_VALID) -> bool:
    """True when every action's expected reward is at most 1 (plus tol)."""
    return max(expected_reward(setting, i) for i in range(setting.n)) <= 1.0 + tol


# ---------------------------------------------------------------------------
# Contracts
# ---------------------------------------------------------------------------


@dataclass
class Sparse:
    """Outcome-contingent payments: base paid always, payments[bitmask] extra."""

    base: float = 0.0
    payments: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.base < -TOL_VALID:
            raise InputError("base payment must be nonnegative")
        cleaned = {}
        for outcome, pay in self.payments.items():
            pay = float(pay)
            if pay < -TOL_VALID:
                raise InputError(f"payment for outcome {outcome} is negative")
            if pay > 0.0:
                cleaned[int(outcome)] = pay
        self.payments = cleaned

    def payment(self, outcome: int) -> float:
        return self.base + self.payments.get(outcome, 0.0)


@dataclass
class Linear:
    """Pays alpha times the realized reward."""

    alpha: float

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0 + TOL_VALID):
            raise InputError(f"linear share alpha={self.alpha} outside [0, 1]")


@dataclass
class Separable:
    """Pays item_payments[j] for each realized item j, independently."""

    item_payments: tuple

    def __post_init__(self):
        pays = tuple(float(p) for p in self.item_payments)
        if any(p < -TOL_VALID for p in pays):
            raise InputError("item payments must be nonnegative")
        self.item_payments = pays


@dataclass
class Mixed:
    """Sparse part plus a linear share: pays sparse(S) + alpha * reward(S)."""

    sparse: Sparse
    alpha: float

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0 + TOL_VALID):
            raise InputError(f"mixed linear share alpha={self.alpha} outside [0, 1]")


Contract = Union[Sparse, Linear, Separable, Mixed]


def make_sparse(base: float, payments: dict, drop_tol: float = 1e-12) -> Sparse:
    """Build a Sparse contract, dropping numerically-zero payments."""
    kept = {int(k): float(v) for k, v in payments.items() if float(v) > drop_tol}
    return Sparse(base=float(base), payments=kept)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def outcome_probability(setting: Setting, action: int, outcome: int) -> float:
    """Probability that `action` produces exactly the item set `outcome`."""
    _check_action(setting, action)
    if isinstance(setting, ExplicitSetting):
        if not (0 <= outcome < setting.num_outcomes):
            raise InputError(f"outcome {outcome} outside explicit outcome range")
        return setting.dist[action][outcome]
    if outcome < 0 or outcome >= (1 << setting.m):
        raise InputError(f"outcome bitmask {outcome} outside item range")
    prob = 1.0
    for j, q in enumerate(setting.probs[action]):
        prob *= q if (outcome >> j) & 1 else 1.0 - q
    return prob


def outcome_reward(setting: Setting, outcome: int) -> float:
    """Total reward of an outcome (sum of realized item rewards)."""
    if isinstance(setting, ExplicitSetting):
        if not (0 <= outcome < setting.num_outcomes):
            raise InputError(f"outcome {outcome} outside explicit outcome range")
        return setting.outcome_rewards[outcome]
    return sum(r for j, r in enumerate(setting.rewards) if (outcome >> j) & 1)


def expected_reward(setting: Setting, action: int) -> float:
    _check_action(setting, action)
    if isinstance(setting, ExplicitSetting):
        return float(np.dot(setting.dist[action], setting.outcome_rewards))
    return float(np.dot(setting.probs[action], setting.rewards))


def _item_marginals(setting: ExplicitSetting) -> np.ndarray:
    """Per-action item marginals of an explicit setting, via column bitmasks."""
    k = setting.num_outcomes
    m = max(1, (k - 1).bit_length())
    dist = np.asarray(setting.dist)
    marg = np.zeros((setting.n, m))
    cols = np.arange(k)
    for j in range(m):
        sel = (cols >> j) & 1 == 1
        marg[:, j] = dist[:, sel].sum(axis=1)
    return marg


def expected_payment(setting: Setting, action: int, contract: Contract) -> float:
    """Expected transfer to the agent for taking `action` under `contract`."""
    _check_action(setting, action)
    if isinstance(contract, Sparse):
        total = contract.base
        for outcome, pay in contract.payments.items():
            total += outcome_probability(setting, action, outcome) * pay
        return total
    if isinstance(contract, Linear):
        return contract.alpha * expected_reward(setting, action)
    if isinstance(contract, Mixed):
        return expected_payment(setting, action, contract.sparse) + contract.alpha * expected_reward(setting, action)
    if isinstance(contract, Separable):
        if isinstance(setting, ProductSetting):
            if len(contract.item_payments) != setting.m:
                raise InputError("separable contract length does not match item count")
            return float(np.dot(setting.probs[action], contract.item_payments))
        marg = _item_marginals(setting)
        if len(contract.item_payments) > marg.shape[1]:
            raise InputError("separable contract length does not match item count")
        pays = np.zeros(marg.shape[1])
        pays[: len(contract.item_payments)] = contract.item_payments
        return float(np.dot(marg[action], pays))
    raise InputError(f"unknown contract type {type(contract).__name__}")


def agent_utility(setting: Setting, action: int, contract: Contract) -> float:
    return expected_payment(setting, action, contract) - setting.costs[action]


def principal_payoff(setting: Setting, action: int, contract: Contract) -> float:
    return expected_reward(setting, action) - expected_payment(setting, action, contract)


@dataclass(frozen=True)
class AgentChoice:
    action: int
    utility: float
    payoff: float  # principal's expected payoff at the chosen action


def best_response(setting: Setting, contract: Contract, tol_tie: float = TOL_TIE) -> AgentChoice:
    """Agent's chosen action: max utility, ties to max principal payoff, then lowest index."""
    utils = [agent_utility(setting, i, contract) for i in range(setting.n)]
    best_u = max(utils)
    candidates = [i for i, u in enumerate(utils) if u >= best_u - tol_tie]
    payoffs = [principal_payoff(setting, i, contract) for i in candidates]
    best_p = max(payoffs)
    for i, p in zip(candidates, payoffs):
        if p >= best_p - tol_tie:
            return AgentChoice(action=i, utility=utils[i], payoff=p)
    raise AssertionError("unreachable")


def ic_slack(
    setting: Setting,
    contract: Contract,
    action: int,
    delta: float = 0.0,
    notion: str = ADDITIVE,
) -> float:
    """Worst-case slack of the delta-IC condition at `action` (>= 0 means it holds).

    Additive: (p_i - c_i) + delta - max_i' (p_i' - c_i').
    Multiplicative: (1+delta) p_i - c_i - max_i' (p_i' - c_i').
    """
    notion = normalize_notion(notion)
    if delta < 0:
        raise InputError("delta must be nonnegative")
    _check_action(setting, action)
    p_i = expected_payment(setting, action, contract)
    c_i = setting.costs[action]
    if notion == ADDITIVE:
        lhs = p_i - c_i + delta
    else:
        lhs = (1.0 + delta) * p_i - c_i
    slack = math.inf
    for other in range(setting.n):
        if other == action:
            continue
        u_other = expected_payment(setting, other, contract) - setting.costs[other]
        slack = min(slack, lhs - u_other)
    return slack


def verify_delta_ic(
    setting: Setting,
    contract: Contract,
    action: int,
    delta: float = 0.0,
    notion: str = ADDITIVE,
    tol: float = TOL_IC,
) -> bool:
    """Check that `action` is a delta-best response under `contract` (within tol)."""
    notion = normalize_notion(notion)
    if notion == ADDITIVE and delta > 0 and not is_normalized(setting):
        warnings.warn(
            "additive delta-IC is calibrated for normalized settings (max expected reward <= 1)",
            stacklevel=2,
        )
    return ic_slack(setting, contract, action, delta, notion) >= -tol


def _check_action(setting: Setting, action: int) -> None:
    if not (0 <= action < setting.n):
        raise InputError(f"action index {action} outside range [0, {setting.n})")


# ---------------------------------------------------------------------------
# Product -> explicit enumeration
# ---------------------------------------------------------------------------

M_MAX_ENUMERATE = 20


def product_to_explicit(setting: ProductSetting, m_max: int = M_MAX_ENUMERATE) -> ExplicitSetting:
    """Enumerate all 2^m outcomes of a product setting in bit-set column order."""
    if not isinstance(setting, ProductSetting):
        raise InputError("product_to_explicit expects a ProductSetting")
    m = setting.m
    if m > m_max:
        raise CapacityError(f"m={m} items would enumerate 2^{m} outcomes (cap {m_max})")
    dist = np.empty((setting.n, 1 << m))
    for i in range(setting.n):
        v = np.ones(1)
        for j in range(m):
            q = setting.probs[i][j]
            v = np.concatenate([v * (1.0 - q), v * q])
        dist[i] = v
    masks = np.arange(1 << m)
    rewards = np.zeros(1 << m)
    for j in range(m):
        rewards[(masks >> j) & 1 == 1] += setting.rewards[j]
    return ExplicitSetting(
        costs=setting.costs,
        outcome_rewards=tuple(rewards.tolist()),
        dist=tuple(tuple(row.tolist()) for row in dist),
    )


def as_explicit(setting: Setting, m_max: int = M_MAX_ENUMERATE) -> ExplicitSetting:
    if isinstance(setting, ExplicitSetting):
        return setting
    return product_to_explicit(setting, m_max=m_max)


def min_nonzero_outcome_probability(setting: Setting, m_max: int = M_MAX_ENUMERATE) -> float:
    """Smallest nonzero outcome probability across all actions."""
    explicit = as_explicit(setting, m_max=m_max)
    dist = np.asarray(explicit.dist)
    nz = dist[dist > 0.0]
    if nz.size == 0:
        raise InputError("setting has no positive-probability outcome")
    return float(nz.min())


# ---------------------------------------------------------------------------
# JSON wire formats
# ---------------------------------------------------------------------------


def outcome_to_items(outcome: int) -> list:
    return [j for j in range(outcome.bit_length()) if (outcome >> j) & 1]


def items_to_outcome(items: Iterable[int]) -> int:
    mask = 0
    for j in items:
        j = int(j)
        if j < 0:
            raise InputError("item indices must be nonnegative")
        mask |= 1 << j
    return mask


def setting_to_dict(setting: Setting) -> dict:
    if isinstance(setting, ProductSetting):
        return {
            "kind": "product",
            "costs": list(setting.costs),
            "rewards": list(setting.rewards),
            "probs": [list(row) for row in setting.probs],
        }
    return {
        "kind": "explicit",
        "costs": list(setting.costs),
        "outcome_rewards": list(setting.outcome_rewards),
        "dist": [list(row) for row in setting.dist],
    }


def setting_from_dict(data: dict, allow_no_free_action: bool = False) -> Setting:
    if not isinstance(data, dict) or "kind" not in data:
        raise InputError("setting JSON must be an object with a 'kind' field")
    kind = data["kind"]
    try:
        if kind == "product":
            setting = ProductSetting(
                costs=tuple(data["costs"]),
                rewards=tuple(data["rewards"]),
                probs=tuple(tuple(row) for row in data["probs"]),
            )
            if not allow_no_free_action and abs(setting.costs[0]) > 1e-12:
                raise InputError(
                    "first action must have zero cost (pass allow_no_free_action to override)"
                )
            return setting
        if kind == "explicit":
            return ExplicitSetting(
                costs=tuple(data["costs"]),
                outcome_rewards=tuple(data["outcome_rewards"]),
                dist=tuple(tuple(row) for row in data["dist"]),
            )
    except KeyError as exc:
        raise InputError(f"setting JSON missing field {exc}")
    raise InputError(f"unknown setting kind {kind!r}")


def contract_to_dict(contract: Contract) -> dict:
    if isinstance(contract, Sparse):
        return {
            "kind": "sparse",
            "base": contract.base,
            "payments": [
                {"outcome": outcome_to_items(outcome), "pay": pay}
                for outcome, pay in sorted(contract.payments.items())
            ],
        }
    if isinstance(contract, Linear):
        return {"kind": "linear", "alpha": contract.alpha}
    if isinstance(contract, Separable):
        return {"kind": "separable", "item_payments": list(contract.item_payments)}
    if isinstance(contract, Mixed):
        return {
            "kind": "mixed",
            "sparse": contract_to_dict(contract.sparse),
            "alpha": contract.alpha,
        }
    raise InputError(f"unknown contract type {type(contract).__name__}")


def contract_from_dict(data: dict) -> Contract:
    if not isinstance(data, dict) or "kind" not in data:
        raise InputError("contract JSON must be an object with a 'kind' field")
    kind = data["kind"]
    try:
        if kind == "sparse":
            payments = {
                items_to_outcome(entry["outcome"]): float(entry["pay"])
                for entry in data.get("payments", [])
            }
            return Sparse(base=float(data.get("base", 0.0)), payments=payments)
        if kind == "linear":
            return Linear(alpha=float(data["alpha"]))
        if kind == "separable":
            return Separable(item_payments=tuple(data["item_payments"]))
        if kind == "mixed":
            sparse = contract_from_dict(data["sparse"])
            if not isinstance(sparse, Sparse):
                raise InputError("mixed contract's 'sparse' part must be a sparse contract")
            return Mixed(sparse=sparse, alpha=float(data["alpha"]))
    except KeyError as exc:
        raise InputError(f"contract JSON missing field {exc}")
    raise InputError(f"unknown contract kind {kind!r}")


def dumps(obj: Union[Setting, Contract]) -> str:
    """Serialize a setting or contract to JSON (full double precision)."""
    if isinstance(obj, (ProductSetting, ExplicitSetting)):
        return json.dumps(setting_to_dict(obj))
    return json.dumps(contract_to_dict(obj))


def load_setting(path: str, allow_no_free_action: bool = False) -> Setting:
    with open(path) as fh:
        return setting_from_dict(json.load(fh), allow_no_free_action=allow_no_free_action)


def load_contract(path: str) -> Contract:
    with open(path) as fh:
        return contract_from_dict(json.load(fh))
