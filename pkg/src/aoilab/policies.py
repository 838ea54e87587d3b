"""Causal scheduling policies.

Each policy is a pure function of :class:`~aoilab.engine.CausalState`.
Whenever a policy has to choose among several updates it maximizes its own
key, then prefers the latest generation, then the smallest remaining size,
then the lowest index.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from typing import Callable, Iterable

from .engine import CausalState, Decision, Idle, Job, Transmit, simulate
from .model import Instance, Trace

ZERO = Fraction(0)


def gamma_index(generation: Fraction, remaining: Fraction, lam: Fraction) -> Fraction:
    """Age reduction per unit of remaining transmission time."""
    if remaining <= 0:
        raise ValueError("remaining size must be positive")
    return max(generation - lam, ZERO) / remaining


def _pick(jobs: Iterable[Job], key: Callable[[Job], object] = lambda j: 0) -> Job:
    return max(jobs, key=lambda j: (key(j), j.generation, -j.remaining, -j.index))


def _preemptor(state: CausalState, key: Callable[[Job], object]) -> Job | None:
    """A new arrival no larger than what is left of the update in service."""
    current = state.in_service
    assert current is not None
    small = [j for j in state.arrivals() if j.remaining <= current.remaining]
    return _pick(small, key) if small else None


def _latest_undelivered(state: CausalState) -> Job | None:
    """The latest-generated incomplete update, unless that generation was already delivered.

    Only real completions count: an update generated exactly at the initial
    credit ``lam(0)`` is still eligible.
    """
    jobs = state.jobs()
    if not jobs:
        return None
    newest = max(j.generation for j in jobs)
    if state.delivered is not None and newest <= state.delivered:
        return None
    return _pick(j for j in jobs if j.generation == newest)


def srpt_plus_decide(state: CausalState) -> Decision:
    gamma = lambda j: gamma_index(j.generation, j.remaining, state.lam)  # noqa: E731
    if state.in_service is not None:
        winner = _preemptor(state, gamma)
        return Transmit(winner.index if winner else state.in_service.index)
    useful = [j for j in state.jobs() if j.generation > state.lam]
    if not useful:
        return Idle
    return Transmit(_pick(useful, gamma).index)


def srpt_l_decide(state: CausalState) -> Decision:
    """Preempt like SRPT+, otherwise start the freshest update regardless of size.

    Older incomplete updates are abandoned once something newer exists, even
    if the newest one has already been delivered.
    """
    if state.in_service is not None:
        winner = _preemptor(state, lambda j: j.generation)
        return Transmit(winner.index if winner else state.in_service.index)
    latest = _latest_undelivered(state)
    return Transmit(latest.index) if latest else Idle


def srpt_decide(state: CausalState) -> Decision:
    jobs = state.jobs()
    if not jobs:
        return Idle
    return Transmit(_pick(jobs, lambda j: -j.remaining).index)


def fcfs_decide(state: CausalState) -> Decision:
    if state.in_service is not None:
        return Transmit(state.in_service.index)
    jobs = state.jobs()
    return Transmit(min(j.index for j in jobs)) if jobs else Idle


def non_preemptive_latest_decide(state: CausalState) -> Decision:
    if state.in_service is not None:
        return Transmit(state.in_service.index)
    latest = _latest_undelivered(state)
    return Transmit(latest.index) if latest else Idle


class PolicyId(str, enum.Enum):
    SRPT_PLUS = "srpt-plus"
    SRPT_L = "srpt-l"
    SRPT = "srpt"
    FCFS = "fcfs"
    NON_PREEMPTIVE_LATEST = "non-preemptive-latest"

    @property
    def decide(self) -> Callable[[CausalState], Decision]:
        return _DECIDERS[self]

    @property
    def ratio_bound(self) -> int | None:
        """Proven competitive-ratio ceiling, if any."""
        return {PolicyId.SRPT_PLUS: 4, PolicyId.SRPT_L: 29}.get(self)


_DECIDERS = {
    PolicyId.SRPT_PLUS: srpt_plus_decide,
    PolicyId.SRPT_L: srpt_l_decide,
    PolicyId.SRPT: srpt_decide,
    PolicyId.FCFS: fcfs_decide,
    PolicyId.NON_PREEMPTIVE_LATEST: non_preemptive_latest_decide,
}


class UnknownPolicy(ValueError):
    pass


def policy_from_name(name: str | PolicyId) -> PolicyId:
    if isinstance(name, PolicyId):
        return name
    try:
        return PolicyId(name)
    except ValueError:
        valid = ", ".join(p.value for p in PolicyId)
        raise UnknownPolicy(f"unknown policy {name!r}; valid ids: {valid}") from None


def run_policy(instance: Instance, policy: str | PolicyId) -> Trace:
    return simulate(instance, policy_from_name(policy).decide)
