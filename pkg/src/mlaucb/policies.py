"""Arm-selection policies.

Three index policies share one state container and the ``select_arm`` /
``record`` pair:

* ``classical_ucb`` - known per-arm sigma, one initial pull per arm.
* ``chk_ucb`` - unknown variance baseline with index
  mean + sd * sqrt(t**(2/(n-2)) - 1), three initial pulls per arm.
* ``mla_ucb`` - ML-assisted mean plus t-quantile scaled width, four
  initial pulls per arm.

Policies only ever see (reward, surrogate) observations; true means live in
the harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .errors import ConfigurationError, InsufficientDataError, ProtocolError
from .estimator import ArmStatistics, estimate_with_fallback, index_from_estimate


class PolicyKind(str, Enum):
    CLASSICAL = "classical_ucb"
    CHK = "chk_ucb"
    MLA = "mla_ucb"

    def __str__(self):
        return self.value


INIT_PULLS = {PolicyKind.CLASSICAL: 1, PolicyKind.CHK: 3, PolicyKind.MLA: 4}


def init_pulls(kind) -> int:
    return INIT_PULLS[PolicyKind(kind)]


@dataclass
class PolicyState:
    kind: PolicyKind
    per_arm: list[ArmStatistics]
    known_sigmas: Optional[Sequence[float]] = None
    history: list[int] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.kind = PolicyKind(self.kind)
        if not self.per_arm:
            raise ConfigurationError("a policy needs at least one arm")
        if self.kind is PolicyKind.CLASSICAL:
            if self.known_sigmas is None:
                raise ConfigurationError("classical UCB requires known sigmas", "known_sigmas")
            if len(self.known_sigmas) != len(self.per_arm):
                raise ConfigurationError("one sigma per arm is required", "known_sigmas")
            if any(not s > 0 for s in self.known_sigmas):
                raise ConfigurationError("known sigmas must be positive", "known_sigmas")

    @property
    def n_arms(self) -> int:
        return len(self.per_arm)

    @property
    def t(self) -> int:
        """Current (1-based) time step: one more than the total pulls so far."""
        return 1 + sum(s.n for s in self.per_arm)


def new_policy(kind, n_arms: int, offline_pools=None, known_sigmas=None) -> PolicyState:
    """Fresh policy state. ``offline_pools`` is only consumed by MLA-UCB."""
    kind = PolicyKind(kind)
    arms = [ArmStatistics() for _ in range(n_arms)]
    if kind is PolicyKind.MLA and offline_pools is not None:
        if len(offline_pools) != n_arms:
            raise ConfigurationError("one offline pool per arm is required", "offline_size")
        for stats, pool in zip(arms, offline_pools):
            stats.ingest_offline(pool)
    return PolicyState(kind, arms, known_sigmas)


def chk_index(stats: ArmStatistics, t: float) -> float:
    """Unknown-variance baseline index with the biased (1/n) variance."""
    n = stats.n
    if n < 3:
        raise InsufficientDataError(f"the baseline index needs n >= 3, got {n}")
    sd = math.sqrt(max(stats.m2_r, 0.0) / n)
    return stats.mean_r + sd * math.sqrt(math.expm1(2.0 * math.log(t) / (n - 2)))


def classical_index(stats: ArmStatistics, sigma: float, t: float) -> float:
    return stats.mean_r + sigma * math.sqrt(2.0 * math.log(t) / stats.n)


def mla_index(stats: ArmStatistics, t: int) -> float:
    # the policy-level index tolerates a constant surrogate stream
    return index_from_estimate(estimate_with_fallback(stats), t)


def indices(state: PolicyState) -> list[float]:
    t = state.t
    if state.kind is PolicyKind.MLA:
        return [mla_index(s, t) for s in state.per_arm]
    if state.kind is PolicyKind.CHK:
        return [chk_index(s, t) for s in state.per_arm]
    return [classical_index(s, sig, t) for s, sig in zip(state.per_arm, state.known_sigmas)]


def select_arm(state: PolicyState) -> int:
    """Next arm: round-robin until every arm has its initial pulls, then arg max index.

    Ties go to the lowest arm index.
    """
    counts = [s.n for s in state.per_arm]
    fewest = min(counts)
    if fewest < INIT_PULLS[state.kind]:
        return counts.index(fewest)
    best, best_val = 0, -math.inf
    for k, val in enumerate(indices(state)):
        if val > best_val:
            best, best_val = k, val
    return best


def record(state: PolicyState, arm: int, r: float, rhat: Optional[float] = None) -> PolicyState:
    if not 0 <= arm < state.n_arms:
        raise ProtocolError(f"arm {arm} out of range for {state.n_arms} arms")
    if state.kind is PolicyKind.MLA:
        if rhat is None:
            raise ProtocolError("MLA-UCB needs a surrogate reward with every observation")
        state.per_arm[arm].observe(r, rhat)
    else:
        state.per_arm[arm].observe(r, 0.0 if rhat is None else rhat)
    state.history.append(arm)
    return state
