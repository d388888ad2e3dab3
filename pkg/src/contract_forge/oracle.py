"""Likelihood-ratio separation oracle: exact enumeration and a bucketing FPTAS.

The problem: given nonnegative weights alpha over a set of "mixture" product
distributions and a reference product distribution, find the item subset S
minimizing (sum_l alpha_l q_{l,S}) / q_{ref,S} over subsets with positive
reference probability. Enumeration is exponential in the item count; the
FPTAS runs one pass over items, keeping one representative partial solution
per family of partials whose marginals agree within a factor
bucket = (1+eps)^(1/2m) under every distribution, which guarantees a final
ratio within (1+eps) of the true minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import InputError

# int64 sentinel marking an exactly-zero marginal (its own bucket class)
_ZERO_BUCKET = np.iinfo(np.int64).min


@dataclass(frozen=True)
class SeparationInstance:
    weights: tuple  # one nonnegative weight per mixture, summing to 1
    mixtures: tuple  # rows of per-item probabilities
    reference: tuple  # per-item probabilities of the reference action

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        mixtures = tuple(tuple(float(p) for p in row) for row in self.mixtures)
        reference = tuple(float(p) for p in self.reference)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "mixtures", mixtures)
        object.__setattr__(self, "reference", reference)
        if not weights or len(weights) != len(mixtures):
            raise InputError("need one weight per mixture distribution")
        if any(w < -1e-12 for w in weights):
            raise InputError("weights must be nonnegative")
        if abs(sum(weights) - 1.0) > 1e-6:
            raise InputError(f"weights sum to {sum(weights)}, expected 1")
        m = len(reference)
        if m == 0 or any(len(row) != m for row in mixtures):
            raise InputError("mixtures and reference must share the item count")
        for row in mixtures + (reference,):
            for p in row:
                if not (0.0 <= p <= 1.0):
                    raise InputError(f"probability {p} outside [0, 1]")

    @property
    def m(self) -> int:
        return len(self.reference)

    @property
    def num_dists(self) -> int:
        return len(self.mixtures) + 1


@dataclass(frozen=True)
class OracleResult:
    outcome: int
    ratio: float


@dataclass(frozen=True)
class FptasStats:
    family_counts: tuple  # representatives kept after each item
    bucket_parts: int  # the t in the t^(#distributions) family budget
    family_budget: int


def _all_subset_probs(rows: np.ndarray) -> np.ndarray:
    """(d, m) per-item probs -> (d, 2^m) subset probs in bitmask column order."""
    d, m = rows.shape
    out = np.ones((d, 1))
    for j in range(m):
        q = rows[:, j : j + 1]
        out = np.hstack([out * (1.0 - q), out * q])
    return out


def min_ratio_bruteforce(inst: SeparationInstance) -> OracleResult:
    """Exact minimizer over all 2^m subsets; ties go to the lowest bitmask."""
    if inst.m > 20:
        raise InputError(f"m={inst.m} too large to enumerate (cap 20)")
    rows = np.vstack([np.asarray(inst.mixtures), np.asarray(inst.reference)])
    probs = _all_subset_probs(rows)
    ref = probs[-1]
    num = np.asarray(inst.weights) @ probs[:-1]
    valid = ref > 0.0
    if not valid.any():
        raise InputError("reference distribution assigns zero to every outcome")
    ratios = np.full(ref.shape, np.inf)
    ratios[valid] = num[valid] / ref[valid]
    best = int(np.argmin(ratios))  # first occurrence = lowest bitmask
    return OracleResult(outcome=best, ratio=float(ratios[best]))


def bucket_count_bound(inst: SeparationInstance, eps: float) -> Tuple[int, int]:
    """(t, t^d): per-distribution bucket count and the family budget it implies.

    t covers nonzero marginals, which lie in [q_min^m, 1]; two extra parts
    absorb the anchor at 1 and the zero sentinel.
    """
    _check_eps(eps)
    rows = np.vstack([np.asarray(inst.mixtures), np.asarray(inst.reference)])
    factors = np.concatenate([rows.ravel(), 1.0 - rows.ravel()])
    nz = factors[factors > 0.0]
    q_min = float(nz.min()) if nz.size else 1.0
    m = inst.m
    t = math.ceil(2.0 * m * m * math.log2(1.0 / q_min) / eps) + 2
    return t, t**inst.num_dists


def _check_eps(eps: float) -> None:
    if not (0.0 < eps <= 1.0):
        raise InputError(f"eps must lie in (0, 1], got {eps}")


def min_ratio_fptas(inst: SeparationInstance, eps: float) -> OracleResult:
    result, _ = min_ratio_fptas_stats(inst, eps)
    return result


def min_ratio_fptas_stats(inst: SeparationInstance, eps: float) -> Tuple[OracleResult, FptasStats]:
    """Bucketing dynamic program; returned ratio is within (1+eps) of optimal."""
    _check_eps(eps)
    m = inst.m
    rows = np.vstack([np.asarray(inst.mixtures), np.asarray(inst.reference)])
    d = rows.shape[0]
    log_bucket = math.log((1.0 + eps)) / (2.0 * m)  # ln of the bucket factor

    masks = np.zeros(1, dtype=np.int64)
    probs = np.ones((1, d))
    counts: List[int] = []
    for j in range(m):
        q = rows[:, j]
        masks = np.concatenate([masks, masks | np.int64(1 << j)])
        probs = np.vstack([probs * (1.0 - q), probs * q])
        keys = np.full(probs.shape, _ZERO_BUCKET, dtype=np.int64)
        pos = probs > 0.0
        # anchor: probability 1 -> bucket 0, indices descend as probs shrink
        keys[pos] = np.floor(np.log(probs[pos]) / log_bucket).astype(np.int64)
        _, first = np.unique(keys, axis=0, return_index=True)
        first.sort()  # keep insertion order stable for determinism
        masks = masks[first]
        probs = probs[first]
        counts.append(len(first))

    ref = probs[:, -1]
    valid = ref > 0.0
    if not valid.any():
        raise InputError("reference distribution assigns zero to every outcome")
    num = probs[:, :-1] @ np.asarray(inst.weights)
    ratios = num[valid] / ref[valid]
    cand_masks = masks[valid]
    best_ratio = ratios.min()
    best_mask = int(cand_masks[ratios == best_ratio].min())
    t, budget = bucket_count_bound(inst, eps)
    return (
        OracleResult(outcome=best_mask, ratio=float(best_ratio)),
        FptasStats(family_counts=tuple(counts), bucket_parts=t, family_budget=budget),
    )


def separation_to_dict(inst: SeparationInstance) -> dict:
    return {
        "kind": "separation",
        "weights": list(inst.weights),
        "mixtures": [list(row) for row in inst.mixtures],
        "reference": list(inst.reference),
    }


def separation_from_dict(data: dict) -> SeparationInstance:
    if not isinstance(data, dict) or data.get("kind") != "separation":
        raise InputError("separation JSON must be an object with kind 'separation'")
    try:
        return SeparationInstance(
            weights=tuple(data["weights"]),
            mixtures=tuple(tuple(row) for row in data["mixtures"]),
            reference=tuple(data["reference"]),
        )
    except KeyError as exc:
        raise InputError(f"separation JSON missing field {exc}")
