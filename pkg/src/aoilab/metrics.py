"""AoI trajectories, exact integration and per-update delay metrics.

The age at time ``t`` is ``t - lam(t)`` where ``lam(t)`` is the generation
time of the freshest update delivered by ``t``. Between deliveries the age
grows with slope one, so every integral here is a sum of trapezoids and is
computed exactly.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_DOWN, Context, Decimal
from fractions import Fraction
from typing import Optional

from .model import Instance, Trace, validate_trace


class InvalidTrace(ValueError):
    pass


class RangeOutOfBounds(ValueError):
    pass


_DECIMAL = Context(prec=30, rounding=ROUND_DOWN)


def decimal_str(x: Fraction) -> str:
    """Human-readable rendering, truncated to 30 significant digits."""
    d = _DECIMAL.divide(Decimal(x.numerator), Decimal(x.denominator))
    text = format(d, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def _require_valid(trace: Trace, instance: Instance) -> None:
    ok, violations = validate_trace(trace, instance)
    if not ok:
        raise InvalidTrace("; ".join(f"{v.kind}: {v.detail}" for v in violations))


@dataclass(frozen=True)
class AoiTrajectory:
    """Piecewise description of ``lam(t)`` on ``[start_time, end_time]``.

    ``breakpoints[k] = (t_k, lam_k)`` means ``lam`` equals ``lam_k`` on
    ``[t_k, t_{k+1})``.
    """

    breakpoints: tuple[tuple[Fraction, Fraction], ...]
    start_time: Fraction
    end_time: Fraction

    def lam(self, t: Fraction) -> Fraction:
        current = self.breakpoints[0][1]
        for bt, lam in self.breakpoints:
            if bt <= t:
                current = lam
            else:
                break
        return current

    def age(self, t: Fraction) -> Fraction:
        return t - self.lam(t)


def trajectory_from_completions(
    completions: list[tuple[Fraction, Fraction]],
    initial_generation: Fraction,
    horizon: Fraction,
) -> AoiTrajectory:
    """Trajectory from ``(completion time, generation)`` pairs in time order."""
    points = [(Fraction(0), initial_generation)]
    lam = initial_generation
    for t, g in completions:
        if g > lam:
            lam = g
            points.append((t, lam))
    return AoiTrajectory(tuple(points), Fraction(0), horizon)


def trajectory_from_trace(trace: Trace, instance: Instance) -> AoiTrajectory:
    _require_valid(trace, instance)
    return trajectory_from_completions(
        [(t, instance[k].generation) for k, t in trace.completions],
        instance.initial_generation,
        instance.horizon,
    )


def integrate(trajectory: AoiTrajectory, start: Fraction, end: Fraction) -> Fraction:
    """Exact area under the age curve on ``[start, end]``."""
    if not trajectory.start_time <= start <= end <= trajectory.end_time:
        raise RangeOutOfBounds(
            f"[{start}, {end}] not within [{trajectory.start_time}, {trajectory.end_time}]"
        )
    total = Fraction(0)
    bps = trajectory.breakpoints
    for k, (t0, lam) in enumerate(bps):
        t1 = bps[k + 1][0] if k + 1 < len(bps) else trajectory.end_time
        a, b = max(t0, start), min(t1, end)
        if a < b:
            total += (b - a) * ((a + b) / 2 - lam)
    return total


@dataclass(frozen=True)
class UpdateMetrics:
    index: int
    generation: Fraction
    size: Fraction
    delta: Fraction
    b: Optional[Fraction]
    r: Optional[Fraction]
    nu_min: Fraction

    @property
    def w(self) -> Optional[Fraction]:
        return None if self.b is None else self.b - self.generation

    @property
    def d(self) -> Optional[Fraction]:
        if self.b is None or self.r is None:
            return None
        return self.r - self.b

    @property
    def nu(self) -> Optional[Fraction]:
        return None if self.r is None else self.r - self.generation


@dataclass(frozen=True)
class PerUpdateMetrics:
    rows: tuple[UpdateMetrics, ...]

    def __getitem__(self, index: int) -> UpdateMetrics:
        return self.rows[index - 1]

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["i", "g", "s", "delta", "b", "r", "w", "d", "nu", "nu_min"])
        for m in self.rows:
            cells = [m.generation, m.size, m.delta, m.b, m.r, m.w, m.d, m.nu, m.nu_min]
            writer.writerow([m.index] + ["" if c is None else str(c) for c in cells])
        return buf.getvalue()


def _suffix_min_by_generation(gens: list[Fraction], values: list[Optional[Fraction]]) -> list[Optional[Fraction]]:
    """``out[i] = min(values[j] for j with gens[j] >= gens[i])``, ignoring ``None``.

    ``gens`` must be sorted; equal generations share one answer.
    """
    n = len(gens)
    suffix: list[Optional[Fraction]] = [None] * (n + 1)
    for i in range(n - 1, -1, -1):
        v, rest = values[i], suffix[i + 1]
        suffix[i] = v if rest is None else (rest if v is None else min(v, rest))
    out: list[Optional[Fraction]] = [None] * n
    first = 0
    for i in range(n):
        if i and gens[i] != gens[i - 1]:
            first = i
        out[i] = suffix[first]
    return out


def nu_min(instance: Instance) -> list[Fraction]:
    """Policy-independent lower bound on every update's delivery delay."""
    gens = instance.generations
    ready = [u.generation + u.size for u in instance.updates]
    return [m - g for m, g in zip(_suffix_min_by_generation(gens, ready), gens)]


def metrics_from_events(
    instance: Instance,
    starts: dict[int, Fraction],
    completions: dict[int, Fraction],
) -> PerUpdateMetrics:
    """Metrics from each update's first start and its completion time (if any)."""
    gens = instance.generations
    n = len(gens)
    b = _suffix_min_by_generation(gens, [starts.get(i + 1) for i in range(n)])
    r = _suffix_min_by_generation(gens, [completions.get(i + 1) for i in range(n)])
    lower = nu_min(instance)
    rows = []
    prev = instance.initial_generation
    for i, u in enumerate(instance.updates):
        rows.append(UpdateMetrics(u.index, u.generation, u.size, u.generation - prev, b[i], r[i], lower[i]))
        prev = u.generation
    return PerUpdateMetrics(tuple(rows))


def per_update_metrics(trace: Trace, instance: Instance) -> PerUpdateMetrics:
    """Per-update ``b, r, w, d, nu`` and ``nu_min``.

    ``b_i`` (``r_i``) is the earliest start (completion) of any update
    generated no earlier than update ``i``; both are ``None`` when no such
    event happens before the horizon.
    """
    _require_valid(trace, instance)
    starts: dict[int, Fraction] = {}
    for seg in trace.segments:
        starts.setdefault(seg.update_index, seg.start)
    return metrics_from_events(instance, starts, dict(trace.completions))


@dataclass(frozen=True)
class AoiReport:
    horizon: Fraction
    integral: Fraction
    average: Fraction
    terms: tuple[Optional[Fraction], ...]
    tail: Fraction

    def to_dict(self) -> dict:
        return {
            "horizon": str(self.horizon),
            "integral": str(self.integral),
            "integral_decimal": decimal_str(self.integral),
            "average": str(self.average),
            "average_decimal": decimal_str(self.average),
            "terms": [None if t is None else str(t) for t in self.terms],
            "tail": str(self.tail),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def decomposition_terms(metrics: PerUpdateMetrics) -> tuple[Optional[Fraction], ...]:
    return tuple(
        None if m.nu is None else m.delta * m.delta / 2 + m.delta * m.nu for m in metrics
    )


def closed_form_tail(instance: Instance) -> Fraction:
    """Residual area once every update has a delivery by the horizon.

    The integral equals the per-update terms plus the final triangle from the
    last generation to the horizon, minus ``lam0**2 / 2`` because the age is
    ``-lam0`` rather than zero at ``t = 0``.
    """
    last = instance.updates[-1].generation if instance.updates else instance.initial_generation
    lam0 = instance.initial_generation
    return (instance.horizon - last) ** 2 / 2 - lam0 * lam0 / 2


def report_from_metrics(trajectory: AoiTrajectory, metrics: PerUpdateMetrics) -> AoiReport:
    horizon = trajectory.end_time
    integral = integrate(trajectory, Fraction(0), horizon)
    terms = decomposition_terms(metrics)
    tail = integral - sum((t for t in terms if t is not None), Fraction(0))
    return AoiReport(horizon, integral, integral / horizon, terms, tail)


def average_aoi(trace: Trace, instance: Instance) -> AoiReport:
    trajectory = trajectory_from_trace(trace, instance)
    return report_from_metrics(trajectory, per_update_metrics(trace, instance))


def aoi_integral(trace: Trace, instance: Instance) -> Fraction:
    """Area under the age curve on ``[0, horizon]`` without the decomposition."""
    return integrate(trajectory_from_trace(trace, instance), Fraction(0), instance.horizon)
