"""Offline-optimal schedules by exhaustive search.

An offline scheduler that knows every arrival never gains from finishing an
update older than one it already delivered, from abandoning partial work, or
from interleaving the updates it does finish. Its schedule is therefore a
*chain*: an increasing set of updates, each sent non-preemptively as early as
possible. :func:`optimal` enumerates every chain; :func:`micro_validate`
checks that reduction against a brute-force search over all preemptive
schedules on a time lattice.

The search itself runs on integers: all times are rescaled by the least
common denominator, and the objective is the *benefit*
``sum (g_k - g_prev) * (T - c_k)`` over the chain, which the age integral
equals ``T**2/2 - lam0*T`` minus.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence

from .metrics import AoiReport, average_aoi
from .model import Instance, Segment, Trace

DEFAULT_CAP = 20
DEFAULT_STATE_CAP = 3_000_000


class InstanceTooLarge(ValueError):
    pass


class GridTooFine(ValueError):
    pass


Chain = tuple[int, ...]


@dataclass(frozen=True)
class OracleResult:
    chain: Chain
    best_trace: Trace
    best_report: AoiReport
    chains_examined: int


def chain_completions(chain: Sequence[int], instance: Instance) -> list[tuple[int, Fraction, Fraction]]:
    """``(update, start, completion)`` for the chain, trailing overruns dropped."""
    out = []
    c = None
    for k in chain:
        u = instance[k]
        start = u.generation if c is None else max(c, u.generation)
        end = start + u.size
        if end > instance.horizon:
            break
        out.append((k, start, end))
        c = end
    return out


def chain_schedule(chain: Sequence[int], instance: Instance) -> Trace:
    if list(chain) != sorted(set(chain)):
        raise ValueError(f"chain must be strictly increasing: {chain}")
    if chain and not (1 <= chain[0] and chain[-1] <= len(instance)):
        raise ValueError(f"chain names unknown updates: {chain}")
    steps = chain_completions(chain, instance)
    segments = tuple(Segment(k, a, b) for k, a, b in steps)
    return Trace(instance, segments, tuple((k, b) for k, _, b in steps))


class _Scaled:
    """The instance on an integer time grid."""

    def __init__(self, instance: Instance):
        values = [instance.horizon, instance.initial_generation]
        for u in instance.updates:
            values += [u.generation, u.size]
        self.scale = lcm(*(v.denominator for v in values))
        sc = self.scale
        self.g = [int(u.generation * sc) for u in instance.updates]
        self.s = [int(u.size * sc) for u in instance.updates]
        self.T = int(instance.horizon * sc)
        self.lam0 = int(instance.initial_generation * sc)


def _enumerate(sc: _Scaled) -> tuple[int, Chain, int]:
    """Best benefit, lexicographically smallest maximizer, number of chains visited."""
    g, s, T, n = sc.g, sc.s, sc.T, len(sc.g)
    best = [0, ()]
    visited = 0
    chain: list[int] = []

    def dfs(first: int, c: int, g_prev: int, benefit: int) -> None:
        nonlocal visited
        visited += 1
        if benefit > best[0]:
            best[0], best[1] = benefit, tuple(chain)
        for j in range(first, n):
            end = (g[j] if g[j] > c else c) + s[j]
            if end > T:
                continue
            chain.append(j + 1)
            dfs(j + 1, end, g[j], benefit + (g[j] - g_prev) * (T - end))
            chain.pop()

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, n + 100))
    try:
        dfs(0, -1, sc.lam0, 0)
    finally:
        sys.setrecursionlimit(limit)
    return best[0], best[1], visited


def _pareto(sc: _Scaled) -> tuple[int, Chain, int]:
    """Same optimum as :func:`_enumerate` via per-last-update Pareto fronts.

    A partial chain matters to the future only through its last update and
    completion time, so a chain ending at ``k`` that finishes later with no
    more benefit than another one ending at ``k`` can be discarded.
    """
    g, s, T, n = sc.g, sc.s, sc.T, len(sc.g)
    # front entries: (completion, benefit, chain)
    fronts: list[list[tuple[int, int, Chain]]] = []
    root = (-1, 0, ())
    examined = 1
    best_benefit, best_chain = 0, ()
    for j in range(n):
        cands = []
        for k, front in [(None, [root])] + list(enumerate(fronts)):
            g_prev = sc.lam0 if k is None else g[k]
            for c, benefit, chain in front:
                end = (g[j] if g[j] > c else c) + s[j]
                if end <= T:
                    cands.append((end, -(benefit + (g[j] - g_prev) * (T - end)), chain + (j + 1,)))
        examined += len(cands)
        cands.sort()
        front = []
        top = None
        for end, neg, chain in cands:
            if top is None or -neg > top:
                front.append((end, -neg, chain))
                top = -neg
        fronts.append(front)
        for end, benefit, chain in front:
            if benefit > best_benefit or (benefit == best_benefit and chain < best_chain):
                best_benefit, best_chain = benefit, chain
    return best_benefit, best_chain, examined


def optimal(instance: Instance, cap: int = DEFAULT_CAP, method: str = "enumerate") -> OracleResult:
    """Offline-optimal schedule on ``[0, horizon]``.

    ``method="enumerate"`` visits every feasible chain and breaks ties toward
    the lexicographically smallest one; it refuses instances with more than
    ``cap`` updates. ``method="pareto"`` has no cap and returns the same
    optimal value, though possibly a different optimal chain.
    """
    sc = _Scaled(instance)
    if method == "enumerate":
        if len(instance) > cap:
            raise InstanceTooLarge(
                f"{len(instance)} updates exceed the enumeration cap of {cap}; "
                "raise it with --cap or use the pareto method"
            )
        _, chain, examined = _enumerate(sc)
    elif method == "pareto":
        _, chain, examined = _pareto(sc)
    else:
        raise ValueError(f"unknown oracle method {method!r}")
    trace = chain_schedule(chain, instance)
    return OracleResult(chain, trace, average_aoi(trace, instance), examined)


def optimal_integral(instance: Instance, cap: int = DEFAULT_CAP, method: str = "enumerate") -> Fraction:
    """Optimal age integral only; skips building the trace."""
    sc = _Scaled(instance)
    if method == "enumerate":
        if len(instance) > cap:
            raise InstanceTooLarge(f"{len(instance)} updates exceed the enumeration cap of {cap}")
        benefit = _enumerate(sc)[0]
    else:
        benefit = _pareto(sc)[0]
    doubled = sc.T * sc.T - 2 * sc.lam0 * sc.T - 2 * benefit
    return Fraction(doubled, 2 * sc.scale * sc.scale)


def micro_validate(instance: Instance, grid: int, state_cap: int = DEFAULT_STATE_CAP) -> bool:
    """True iff no preemptive schedule on the ``1/grid`` lattice beats :func:`optimal`.

    In every slot ``[k/grid, (k+1)/grid)`` the server either idles or sends
    one unit of any arrived, incomplete update. The search is exact dynamic
    programming over (slot, remaining work, freshest delivered generation);
    an update no newer than what was already delivered is dropped from the
    state, since serving it costs the same as idling.
    """
    if len(instance) > 6:
        raise ValueError("lattice search is limited to 6 updates")
    values = [instance.horizon, instance.initial_generation]
    for u in instance.updates:
        values += [u.generation, u.size]
    if any((v * grid).denominator != 1 for v in values):
        raise ValueError(f"instance is not on the 1/{grid} lattice")
    G = [int(u.generation * grid) for u in instance.updates]
    S = [int(u.size * grid) for u in instance.updates]
    K = int(instance.horizon * grid)
    n = len(G)
    memo: dict[tuple, int] = {}

    def normalize(rem: tuple[int, ...], lam: int) -> tuple[int, ...]:
        return tuple(0 if G[i] <= lam else r for i, r in enumerate(rem))

    lam0 = int(instance.initial_generation * grid)

    def value(k: int, rem: tuple[int, ...], lam: int) -> int:
        # doubled area from slot k to K, in units of 1/grid**2
        if k == K:
            return 0
        key = (k, rem, lam)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if len(memo) >= state_cap:
            raise GridTooFine(f"more than {state_cap} lattice states; use a coarser grid")
        here = 2 * k + 1 - 2 * lam
        best = here + value(k + 1, rem, lam)
        for i in range(n):
            if rem[i] and G[i] <= k:
                nr = list(rem)
                nr[i] -= 1
                nl = lam
                if nr[i] == 0:
                    nl = max(lam, G[i])
                    nr = list(normalize(tuple(nr), nl))
                cand = here + value(k + 1, tuple(nr), nl)
                if cand < best:
                    best = cand
        memo[key] = best
        return best

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * K + 200))
    try:
        start = normalize(tuple(S), lam0)
        lattice_best = Fraction(value(0, start, lam0), 2 * grid * grid)
    finally:
        sys.setrecursionlimit(limit)
    return lattice_best >= optimal_integral(instance, cap=max(DEFAULT_CAP, n))
