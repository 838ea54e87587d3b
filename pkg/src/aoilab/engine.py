"""Event-driven single-link transmission simulator.

The engine owns time and work accounting; a policy only ever sees a
:class:`CausalState` built from updates that have already been generated.
Decision epochs are ``t = 0``, every generation time and every completion
time. At an epoch a completion is applied before arrivals, and the policy is
asked once after all same-time events are in.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

from .model import Instance, Segment, Trace


class PolicyProtocolViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class Job:
    """An arrived, incomplete update as the policy sees it."""

    index: int
    generation: Fraction
    remaining: Fraction


@dataclass(frozen=True)
class CausalState:
    now: Fraction
    lam: Fraction
    in_service: Optional[Job]
    pending: tuple[Job, ...]
    newly_arrived: frozenset[int]
    delivered: Optional[Fraction] = None  # freshest generation actually completed

    def jobs(self) -> list[Job]:
        """All incomplete arrived updates, the one in service first."""
        head = [self.in_service] if self.in_service is not None else []
        return head + list(self.pending)

    def arrivals(self) -> list[Job]:
        return [j for j in self.pending if j.index in self.newly_arrived]


@dataclass(frozen=True)
class Transmit:
    index: int


class _Idle:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Idle"


Idle = _Idle()
Decision = Union[Transmit, _Idle]
Policy = Callable[[CausalState], Decision]


def simulate(instance: Instance, policy: Policy) -> Trace:
    """Run ``policy`` on ``instance`` from ``t = 0`` to the horizon."""
    horizon = instance.horizon
    updates = instance.updates
    remaining: dict[int, Fraction] = {}
    lam = instance.initial_generation
    delivered: Optional[Fraction] = None
    now = Fraction(0)
    nxt = 0
    current: Optional[int] = None
    seg_start = now
    segments: list[Segment] = []
    completions: list[tuple[int, Fraction]] = []

    while True:
        fresh = []
        while nxt < len(updates) and updates[nxt].generation <= now:
            u = updates[nxt]
            remaining[u.index] = u.size
            fresh.append(u.index)
            nxt += 1

        in_service = None
        if current is not None:
            in_service = Job(current, instance[current].generation, remaining[current])
        pending = tuple(
            Job(k, instance[k].generation, remaining[k]) for k in sorted(remaining) if k != current
        )
        state = CausalState(now, lam, in_service, pending, frozenset(fresh), delivered)
        decision = policy(state)

        if isinstance(decision, Transmit):
            target = decision.index
            if target not in remaining:
                raise PolicyProtocolViolation(f"t={now}: update {target} is unknown or already complete")
        elif decision is Idle:
            target = None
        else:
            raise PolicyProtocolViolation(f"t={now}: not a decision: {decision!r}")

        if target != current:
            if current is not None and now > seg_start:
                segments.append(Segment(current, seg_start, now))
            current = target
            seg_start = now

        t_arrival = updates[nxt].generation if nxt < len(updates) else None
        t_done = now + remaining[current] if current is not None else None
        candidates = [t for t in (t_arrival, t_done) if t is not None]
        if not candidates:
            break
        t_next = min(candidates)
        if t_next > horizon:
            if current is not None and horizon > seg_start:
                segments.append(Segment(current, seg_start, horizon))
            break

        if current is not None:
            remaining[current] -= t_next - now
        now = t_next
        if current is not None and remaining[current] == 0:
            segments.append(Segment(current, seg_start, now))
            completions.append((current, now))
            g = instance[current].generation
            lam = max(lam, g)
            delivered = g if delivered is None else max(delivered, g)
            del remaining[current]
            current = None
            seg_start = now
        if now >= horizon:
            break

    return Trace(instance, tuple(segments), tuple(completions))
