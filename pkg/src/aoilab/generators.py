"""Instance constructors: the worked examples and seeded random families.

Random variates are dyadic rationals ``k / 2**bits`` drawn from Python's
``random.Random`` (MT19937) via ``getrandbits``, so a seed pins an instance
exactly and the canonical file for it is byte-identical across runs.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .metrics import aoi_integral
from .model import Instance, RatioLike, ratio, validate_instance
from .oracle import DEFAULT_CAP, InstanceTooLarge, optimal_integral
from .policies import PolicyId, policy_from_name, run_policy

DEFAULT_BITS = 16


class InvalidSpecParams(ValueError):
    pass


@dataclass(frozen=True)
class Example1:
    """Three updates at 0, 2, 4 delivered at 1, 3, 5; horizon 5."""


@dataclass(frozen=True)
class Example2:
    """A burst of ``m`` half-size updates in ``(0, epsilon]`` followed by unit updates at 1, 2, ..."""

    m: int
    epsilon: Fraction
    horizon: Fraction


@dataclass(frozen=True)
class Example3:
    """Six updates on ``[0, 2]`` used to contrast SRPT+, SRPT^L and the offline optimum."""


@dataclass(frozen=True)
class RandomUniform:
    n: int
    g_max: Fraction
    s_max: Fraction
    seed: int
    horizon: Fraction | None = None
    bits: int = DEFAULT_BITS


@dataclass(frozen=True)
class RandomPoissonLike:
    n: int
    rate: Fraction
    mean_size: Fraction
    seed: int
    horizon: Fraction | None = None
    bits: int = DEFAULT_BITS


@dataclass(frozen=True)
class Perturb:
    base: Instance
    magnitude: Fraction
    seed: int
    bits: int = DEFAULT_BITS


GeneratorSpec = Union[Example1, Example2, Example3, RandomUniform, RandomPoissonLike, Perturb]

EXAMPLE1_COMPLETIONS = ((1, Fraction(1)), (2, Fraction(3)), (3, Fraction(5)))
EXAMPLE3_PAIRS = (("0", "1.45"), ("0.25", "1.25"), ("0.75", "1"), ("1", "0.5"), ("1.25", "0.3"), ("1.8", "0.1"))


def _unit(rng: random.Random, bits: int) -> Fraction:
    """Uniform dyadic in ``[0, 1)``."""
    return Fraction(rng.getrandbits(bits), 1 << bits)


def _unit_open(rng: random.Random, bits: int) -> Fraction:
    """Uniform dyadic in ``(0, 1]``."""
    return Fraction(rng.getrandbits(bits) + 1, 1 << bits)


def _exponential(rng: random.Random, mean: Fraction, bits: int) -> Fraction:
    # Inverse-CDF in double precision, then snapped to the dyadic grid; the
    # instance itself never holds a float.
    u = float(_unit_open(rng, bits))
    x = -math.log(u) * float(mean)
    return Fraction(round(x * (1 << bits)), 1 << bits)


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise InvalidSpecParams(message)


def example1() -> Instance:
    """Instance of the delivery-only illustration; sizes equal the narrated service times."""
    return validate_instance([(0, 1), (2, 1), (4, 1)], 5)


def example2(m: int, epsilon: RatioLike, horizon: RatioLike) -> Instance:
    epsilon, horizon = ratio(epsilon), ratio(horizon)
    _check(m >= 1, "m must be a positive integer")
    _check(epsilon > 0, "epsilon must be positive")
    _check(horizon > epsilon, "horizon must exceed epsilon")
    burst = [(epsilon / (m - i), Fraction(1, 2)) for i in range(m)]
    steady = [(Fraction(i), Fraction(1)) for i in range(1, math.ceil(horizon))]
    return validate_instance(burst + steady, horizon)


def example3() -> Instance:
    return validate_instance(EXAMPLE3_PAIRS, 2)


def random_uniform(spec: RandomUniform) -> Instance:
    _check(spec.n >= 0, "n must be non-negative")
    _check(spec.g_max > 0 and spec.s_max > 0, "g_max and s_max must be positive")
    _check(1 <= spec.bits <= 32, "bits must be in 1..32")
    rng = random.Random(spec.seed)
    pairs = []
    for _ in range(spec.n):
        g = spec.g_max * _unit(rng, spec.bits)
        s = spec.s_max * _unit_open(rng, spec.bits)
        pairs.append((g, s))
    horizon = spec.horizon if spec.horizon is not None else spec.g_max + spec.s_max
    return validate_instance(pairs, horizon)


def random_poisson_like(spec: RandomPoissonLike) -> Instance:
    _check(spec.n >= 0, "n must be non-negative")
    _check(spec.rate > 0 and spec.mean_size > 0, "rate and mean_size must be positive")
    _check(1 <= spec.bits <= 32, "bits must be in 1..32")
    rng = random.Random(spec.seed)
    tick = Fraction(1, 1 << spec.bits)
    pairs = []
    t = Fraction(0)
    for k in range(spec.n):
        if k:
            t += _exponential(rng, 1 / spec.rate, spec.bits)
        pairs.append((t, max(_exponential(rng, spec.mean_size, spec.bits), tick)))
    if spec.horizon is not None:
        horizon = spec.horizon
    else:
        horizon = (t + max((s for _, s in pairs), default=Fraction(1)))
    return validate_instance(pairs, horizon)


def perturb(spec: Perturb) -> Instance:
    base = spec.base
    _check(spec.magnitude >= 0, "magnitude must be non-negative")
    rng = random.Random(spec.seed)
    tick = Fraction(1, 1 << spec.bits)
    lo_g = base.initial_generation
    hi_g = base.horizon - tick
    pairs = []
    for u in base.updates:
        dg = spec.magnitude * (2 * _unit(rng, spec.bits) - 1)
        ds = spec.magnitude * (2 * _unit(rng, spec.bits) - 1)
        g = min(max(u.generation + dg, lo_g), hi_g)
        s = max(u.size + ds, tick)
        pairs.append((g, s))
    return validate_instance(pairs, base.horizon, base.initial_generation)


def generate(spec: GeneratorSpec) -> Instance:
    if isinstance(spec, Example1):
        return example1()
    if isinstance(spec, Example2):
        return example2(spec.m, spec.epsilon, spec.horizon)
    if isinstance(spec, Example3):
        return example3()
    if isinstance(spec, RandomUniform):
        return random_uniform(spec)
    if isinstance(spec, RandomPoissonLike):
        return random_poisson_like(spec)
    if isinstance(spec, Perturb):
        return perturb(spec)
    raise InvalidSpecParams(f"unknown generator spec {spec!r}")


SEARCH_BITS = 10
RESTARTS = 10


def _ratio(instance: Instance, policy: PolicyId) -> Fraction:
    return aoi_integral(run_policy(instance, policy), instance) / optimal_integral(instance, cap=len(instance))


def _mutate(instance: Instance, rng: random.Random) -> Instance:
    """One random local move on the search lattice.

    Moves nudge a generation, rescale a size, copy one update's generation or
    whole (g, s) pair onto another (bursts of equal updates are what trap
    size-greedy policies), or shift the horizon.
    """
    tick = Fraction(1, 1 << SEARCH_BITS)
    T = instance.horizon
    pairs = [(u.generation, u.size) for u in instance.updates]
    step = Fraction(1, 1 << rng.choice((0, 2, 4, 6)))
    jitter = lambda: step * (2 * _unit(rng, SEARCH_BITS) - 1)
    k = rng.randrange(len(pairs))
    g, s = pairs[k]
    move = rng.random()
    if move < 0.35:
        pairs[k] = (min(max(g + jitter(), Fraction(0)), T - tick), s)
    elif move < 0.7:
        pairs[k] = (g, max(s * (1 + jitter()), tick))
    elif move < 0.8:
        pairs[k] = (pairs[rng.randrange(len(pairs))][0], s)
    elif move < 0.9:
        pairs[k] = pairs[rng.randrange(len(pairs))]
    else:
        T = max(T + jitter(), max(g for g, _ in pairs) + tick)
    # keep every value on the search lattice so denominators stay small
    snap = lambda v: Fraction(round(v * (1 << SEARCH_BITS)), 1 << SEARCH_BITS)
    pairs = [(snap(g), max(snap(s), tick)) for g, s in pairs]
    return validate_instance(pairs, snap(T))


def adversarial_search(
    policy: str | PolicyId,
    n: int,
    budget: int,
    seed: int,
    visit=None,
) -> tuple[Instance, Fraction]:
    """Hill-climb toward instances where ``policy`` does badly against the optimum.

    Starts from a seeded uniform instance with ``n`` updates and applies
    ``budget`` random local moves, keeping a move only when it strictly raises
    the exact competitive ratio. ``visit(instance, ratio)``, if given, sees
    every evaluated instance.
    """
    pid = policy_from_name(policy)
    if n < 1:
        raise InvalidSpecParams("n must be positive")
    if n > DEFAULT_CAP:
        raise InstanceTooLarge(f"{n} updates exceed the enumeration cap of {DEFAULT_CAP}")
    rng = random.Random(seed)
    restart_every = max(budget // RESTARTS, 1)

    def fresh() -> Instance:
        g_max = Fraction(max(n // 2, 1))
        spec = RandomUniform(n, g_max, Fraction(1), rng.getrandbits(32), g_max + 1, SEARCH_BITS)
        return random_uniform(spec)

    best = cur = fresh()
    best_ratio = cur_ratio = _ratio(cur, pid)
    if visit:
        visit(cur, cur_ratio)
    for it in range(1, budget + 1):
        if it % restart_every == 0 and it < budget:
            cand = fresh()
            cur, cur_ratio = cand, _ratio(cand, pid)
            if visit:
                visit(cur, cur_ratio)
            continue
        cand = cur
        for _ in range(1 + min(rng.getrandbits(2), 2)):
            cand = _mutate(cand, rng)
        r = _ratio(cand, pid)
        if visit:
            visit(cand, r)
        if r > cur_ratio:
            cur, cur_ratio = cand, r
            if r > best_ratio:
                best, best_ratio = cand, r
    return best, best_ratio
