"""Verification suites: per-update inequalities, decomposition identity and
competitive ratios over instance corpora.

Every comparison is exact. A check that cannot be evaluated for some update
(because nothing relevant finished before the horizon) lists that update as
skipped instead of guessing.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .metrics import (
    PerUpdateMetrics,
    aoi_integral,
    average_aoi,
    closed_form_tail,
    decomposition_terms,
    per_update_metrics,
)
from .model import Instance, Trace, instance_id
from .oracle import DEFAULT_CAP, InstanceTooLarge, optimal, optimal_integral
from .policies import PolicyId, gamma_index, policy_from_name, run_policy


class DegenerateOptimal(ValueError):
    pass


@dataclass(frozen=True)
class Witness:
    update: Optional[int]  # None for an aggregate (summed) inequality
    lhs: Fraction
    rhs: Fraction
    label: str = ""


@dataclass(frozen=True)
class CheckReport:
    check_id: str
    instance_id: str
    witnesses: tuple[Witness, ...] = ()
    skipped: tuple[int, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.witnesses

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "instance_id": self.instance_id,
            "passed": self.passed,
            "witnesses": [
                {"update": w.update, "lhs": str(w.lhs), "rhs": str(w.rhs), "label": w.label}
                for w in self.witnesses
            ],
            "skipped": list(self.skipped),
        }


def _report(check_id: str, instance: Instance, witnesses, skipped) -> CheckReport:
    return CheckReport(check_id, instance_id(instance), tuple(witnesses), tuple(sorted(set(skipped))))


def check_lemma2(trace: Trace, instance: Instance, metrics: PerUpdateMetrics | None = None) -> CheckReport:
    """Delivery delay never beats the policy-free lower bound."""
    metrics = metrics or per_update_metrics(trace, instance)
    witnesses, skipped = [], []
    for m in metrics:
        if m.nu is None:
            skipped.append(m.index)
        elif m.nu < m.nu_min:
            witnesses.append(Witness(m.index, m.nu, m.nu_min, "nu >= nu_min"))
    return _report("lemma2", instance, witnesses, skipped)


def check_lemma4(
    instance: Instance,
    cap: int = DEFAULT_CAP,
    plus: PerUpdateMetrics | None = None,
    star: PerUpdateMetrics | None = None,
) -> CheckReport:
    """SRPT+ waits at most twice the optimal delay, and its weighted service
    delays sum to at most twice the optimal weighted delays.

    Updates with ``delta == 0`` carry no new information (SRPT+ never sends
    them), so the per-update bound skips them; they weigh nothing in the sum.
    """
    if plus is None:
        plus = per_update_metrics(run_policy(instance, PolicyId.SRPT_PLUS), instance)
    if star is None:
        best = optimal(instance, cap=cap)
        star = per_update_metrics(best.best_trace, instance)
    witnesses, skipped = [], []
    lhs = rhs = Fraction(0)
    for p, s in zip(plus, star):
        if p.delta == 0:
            skipped.append(p.index)
        elif p.w is not None and s.nu is not None:
            if p.w > 2 * s.nu:
                witnesses.append(Witness(p.index, p.w, 2 * s.nu, "w+ <= 2 nu*"))
        if p.d is None or s.nu is None:
            skipped.append(p.index)
            continue
        lhs += p.delta * p.d
        rhs += 2 * p.delta * s.nu
    if lhs > rhs:
        witnesses.append(Witness(None, lhs, rhs, "sum delta d+ <= 2 sum delta nu*"))
    return _report("lemma4", instance, witnesses, skipped)


def check_lemma5(
    instance: Instance,
    cap: int = DEFAULT_CAP,
    trace: Trace | None = None,
    star: PerUpdateMetrics | None = None,
) -> CheckReport:
    """Structural properties of SRPT^L.

    1. waiting time is at most ``nu_min``;
    2. an update is only ever started while it is the freshest one generated;
    3. a started update's cohort is delivered exactly at
       ``min(start + size, min over fresher j of g_j + s_j)`` and its service
       delay is at most ``nu_min``.

    Comparisons against the optimum's delays run only when the instance is
    within the enumeration cap.
    """
    trace = trace or run_policy(instance, PolicyId.SRPT_L)
    metrics = per_update_metrics(trace, instance)
    if star is None and len(instance) <= cap:
        star = per_update_metrics(optimal(instance, cap=cap).best_trace, instance)
    witnesses, skipped = [], []
    gens = instance.generations

    for m in metrics:
        if m.w is None:
            skipped.append(m.index)
            continue
        if m.w > m.nu_min:
            witnesses.append(Witness(m.index, m.w, m.nu_min, "wL <= nu_min"))
        if star is not None and star[m.index].nu is not None and m.nu_min > star[m.index].nu:
            witnesses.append(Witness(m.index, m.nu_min, star[m.index].nu, "nu_min <= nu*"))

    first_start: dict[int, Fraction] = {}
    for k, t in trace.started():
        newest = max(g for g in gens if g <= t)
        if instance[k].generation != newest:
            witnesses.append(Witness(k, instance[k].generation, newest, "started update is the freshest"))
        first_start.setdefault(k, t)

    for k, b in first_start.items():
        g_k = instance[k].generation
        expected = b + instance[k].size
        for u in instance.updates:
            if u.generation > g_k:
                expected = min(expected, u.generation + u.size)
        r = metrics[k].r
        if expected <= instance.horizon:
            if r != expected:
                witnesses.append(Witness(k, r if r is not None else instance.horizon, expected, "rL = min(...)"))
        elif r is not None:
            witnesses.append(Witness(k, r, expected, "rL undefined past horizon"))
        d = metrics[k].d
        if d is not None:
            if d > metrics[k].nu_min:
                witnesses.append(Witness(k, d, metrics[k].nu_min, "dL <= nu_min"))
            if star is not None and star[k].nu is not None and d > star[k].nu:
                witnesses.append(Witness(k, d, star[k].nu, "dL <= nu*"))
    return _report("lemma5", instance, witnesses, skipped)


def check_decomposition(trace: Trace, instance: Instance) -> CheckReport:
    """Area under the age curve equals the per-update terms plus the closed-form tail."""
    metrics = per_update_metrics(trace, instance)
    undefined = [m.index for m in metrics if m.r is None]
    if undefined:
        return _report("decomposition", instance, [], undefined)
    integral = aoi_integral(trace, instance)
    terms = sum(decomposition_terms(metrics), Fraction(0))
    expected = terms + closed_form_tail(instance)
    witnesses = [] if integral == expected else [Witness(None, integral, expected, "integral = terms + tail")]
    return _report("decomposition", instance, witnesses, [])


def check_non_delay(trace: Trace, instance: Instance) -> CheckReport:
    """Preemption never postpones the first delivery after a start.

    For every update started at ``b`` the earliest delivery of it or anything
    fresher is ``min(b + s_k, min over other j generated at or after b of g_j + s_j)``.
    """
    metrics = per_update_metrics(trace, instance)
    witnesses = []
    first: dict[int, Fraction] = {}
    for k, t in trace.started():
        first.setdefault(k, t)
    for k, b in first.items():
        expected = b + instance[k].size
        for u in instance.updates:
            if u.index != k and u.generation >= b:
                expected = min(expected, u.generation + u.size)
        r = metrics[k].r
        want = expected if expected <= instance.horizon else None
        if r != want:
            witnesses.append(Witness(k, r if r is not None else instance.horizon, expected, "non-delay"))
    return _report("non_delay", instance, witnesses, [])


def _lam_at(trace: Trace, instance: Instance, t: Fraction) -> Fraction:
    lam = instance.initial_generation
    for k, c in trace.completions:
        if c <= t:
            lam = max(lam, instance[k].generation)
    return lam


def _remaining_at(trace: Trace, instance: Instance, k: int, t: Fraction) -> Fraction:
    done = sum((min(s.end, t) - s.start for s in trace.segments if s.update_index == k and s.start < t), Fraction(0))
    return instance[k].size - done


def check_index_dominance(trace: Trace, instance: Instance) -> CheckReport:
    """SRPT+ only starts updates with positive index, and a preempting update
    has a strictly larger index than the one it interrupts."""
    witnesses = []
    completed_at = {(k, t) for k, t in trace.completions}
    prev = None
    for seg in trace.segments:
        t = seg.start
        lam = _lam_at(trace, instance, t)
        rem = _remaining_at(trace, instance, seg.update_index, t)
        g_new = gamma_index(instance[seg.update_index].generation, rem, lam)
        if g_new <= 0:
            witnesses.append(Witness(seg.update_index, g_new, Fraction(0), "gamma > 0 at start"))
        if prev is not None and prev.end == t and (prev.update_index, t) not in completed_at:
            i = prev.update_index
            g_old = gamma_index(instance[i].generation, _remaining_at(trace, instance, i, t), lam)
            if not g_new > g_old:
                witnesses.append(Witness(seg.update_index, g_new, g_old, "preemptor index dominates"))
        prev = seg
    return _report("index_dominance", instance, witnesses, [])


def competitive_ratio(
    instance: Instance,
    policy: str | PolicyId,
    cap: int = DEFAULT_CAP,
    method: str = "enumerate",
) -> Fraction:
    """Exact ratio of the policy's age integral to the offline optimum on ``[0, T]``."""
    best = optimal_integral(instance, cap=cap, method=method)
    if best <= 0:
        raise DegenerateOptimal(f"optimal age integral is {best}; ratio undefined")
    return aoi_integral(run_policy(instance, policy), instance) / best


# -- corpora ------------------------------------------------------------------

ALL_POLICIES = tuple(PolicyId)


@dataclass
class InstanceOutcome:
    instance_id: str
    n: int
    optimal: Fraction
    integrals: dict[str, Fraction]
    reports: list[CheckReport] = field(default_factory=list)

    def ratio(self, policy: str | PolicyId) -> Fraction:
        return self.integrals[policy_from_name(policy).value] / self.optimal

    @property
    def dominance_ok(self) -> bool:
        return all(v >= self.optimal for v in self.integrals.values())

    @property
    def failures(self) -> list[CheckReport]:
        return [r for r in self.reports if not r.passed]


def evaluate_instance(instance: Instance, cap: int = DEFAULT_CAP, checks: bool = True) -> InstanceOutcome:
    """Every policy, the oracle, and (optionally) every check on one instance."""
    best = optimal(instance, cap=cap)
    traces = {p.value: run_policy(instance, p) for p in ALL_POLICIES}
    integrals = {p: aoi_integral(t, instance) for p, t in traces.items()}
    outcome = InstanceOutcome(instance_id(instance), len(instance), best.best_report.integral, integrals)
    if not checks:
        return outcome
    star = per_update_metrics(best.best_trace, instance)
    plus_trace = traces[PolicyId.SRPT_PLUS.value]
    plus = per_update_metrics(plus_trace, instance)
    reports = outcome.reports
    for name, trace in traces.items():
        reports.append(_tag(check_lemma2(trace, instance), name))
        reports.append(_tag(check_decomposition(trace, instance), name))
    reports.append(_tag(check_lemma2(best.best_trace, instance, star), "oracle"))
    reports.append(_tag(check_decomposition(best.best_trace, instance), "oracle"))
    reports.append(check_lemma4(instance, cap, plus=plus, star=star))
    reports.append(check_lemma5(instance, cap, trace=traces[PolicyId.SRPT_L.value], star=star))
    reports.append(_tag(check_non_delay(plus_trace, instance), "srpt-plus"))
    reports.append(_tag(check_non_delay(traces[PolicyId.SRPT_L.value], instance), "srpt-l"))
    reports.append(check_index_dominance(plus_trace, instance))
    return outcome


def _tag(report: CheckReport, policy: str) -> CheckReport:
    return CheckReport(f"{report.check_id}[{policy}]", report.instance_id, report.witnesses, report.skipped)


@dataclass
class CorpusSummary:
    count: int = 0
    max_ratio: dict[str, Fraction] = field(default_factory=dict)
    argmax: dict[str, str] = field(default_factory=dict)
    failures: list[CheckReport] = field(default_factory=list)
    dominance_violations: list[str] = field(default_factory=list)
    checks_run: int = 0

    def add(self, outcome: InstanceOutcome) -> None:
        self.count += 1
        for p in outcome.integrals:
            r = outcome.ratio(p)
            if p not in self.max_ratio or r > self.max_ratio[p]:
                self.max_ratio[p] = r
                self.argmax[p] = outcome.instance_id
        self.checks_run += len(outcome.reports)
        self.failures.extend(outcome.failures)
        if not outcome.dominance_ok:
            self.dominance_violations.append(outcome.instance_id)

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "checks_run": self.checks_run,
            "max_ratio": {p: str(r) for p, r in sorted(self.max_ratio.items())},
            "argmax": dict(sorted(self.argmax.items())),
            "failures": [f.to_dict() for f in self.failures],
            "dominance_violations": self.dominance_violations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _evaluate_star(args):
    return evaluate_instance(*args)


def run_corpus(
    instances: Iterable[Instance],
    cap: int = DEFAULT_CAP,
    jobs: int = 1,
    checks: bool = True,
) -> CorpusSummary:
    """Evaluate a corpus; results are merged in input order, so ``jobs`` never changes the summary."""
    summary = CorpusSummary()
    work = [(inst, cap, checks) for inst in instances]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for outcome in pool.map(_evaluate_star, work, chunksize=64):
                summary.add(outcome)
    else:
        for args in work:
            summary.add(_evaluate_star(args))
    return summary


def run_suite(suite: str, instances: Sequence[Instance], policy: str | PolicyId = PolicyId.SRPT_PLUS, cap: int = DEFAULT_CAP) -> list[CheckReport]:
    """One named check across a corpus; used by the ``check`` command."""
    out = []
    for inst in instances:
        if suite == "lemma2":
            out.append(check_lemma2(run_policy(inst, policy), inst))
        elif suite == "lemma4":
            out.append(check_lemma4(inst, cap))
        elif suite == "lemma5":
            out.append(check_lemma5(inst, cap))
        elif suite == "decomposition":
            out.append(check_decomposition(run_policy(inst, policy), inst))
        elif suite == "cr":
            pid = policy_from_name(policy)
            r = competitive_ratio(inst, pid, cap)
            bound = pid.ratio_bound
            witnesses = [Witness(None, r, Fraction(bound), "ratio <= bound")] if bound is not None and r > bound else []
            out.append(CheckReport(f"cr[{pid.value}]", instance_id(inst), tuple(witnesses), ()))
        else:
            raise ValueError(f"unknown suite {suite!r}")
    return out


__all__ = [
    "CheckReport",
    "CorpusSummary",
    "DegenerateOptimal",
    "InstanceOutcome",
    "InstanceTooLarge",
    "Witness",
    "average_aoi",
    "check_decomposition",
    "check_index_dominance",
    "check_lemma2",
    "check_lemma4",
    "check_lemma5",
    "check_non_delay",
    "competitive_ratio",
    "evaluate_instance",
    "run_corpus",
    "run_suite",
]
