from fractions import Fraction as F

import pytest
from hypothesis import given

from aoilab.engine import CausalState, Idle, Job, Transmit
from aoilab.generators import example2, example3
from aoilab.harness import check_index_dominance, check_lemma5, check_non_delay
from aoilab.model import validate_instance
from aoilab.policies import (
    PolicyId,
    UnknownPolicy,
    gamma_index,
    non_preemptive_latest_decide,
    policy_from_name,
    run_policy,
    srpt_decide,
    srpt_l_decide,
    srpt_plus_decide,
)

from conftest import instances


def state(now, lam, in_service=None, pending=(), fresh=(), delivered=None):
    return CausalState(F(now), F(lam), in_service, tuple(pending), frozenset(fresh), delivered)


def test_gamma_index_values():
    assert gamma_index(F(1, 4), F(3, 4), F(0)) == F(1, 3)
    assert gamma_index(F(5, 4), F(3, 10), F(1)) == F(5, 6)
    assert gamma_index(F(0), F(1), F(0)) == 0
    with pytest.raises(ValueError):
        gamma_index(F(1), F(0), F(0))


def test_srpt_plus_preempts_on_small_arrival():
    s = state(1, 0, Job(2, F(1, 4), F(1, 2)), [Job(3, F(3, 4), F(1)), Job(4, F(1), F(1, 2))], fresh=[4])
    assert srpt_plus_decide(s) == Transmit(4)


def test_srpt_plus_keeps_serving_when_arrival_is_larger():
    s = state(F(3, 4), 0, Job(2, F(1, 4), F(3, 4)), [Job(1, F(0), F(29, 20)), Job(3, F(3, 4), F(1))], fresh=[3])
    assert srpt_plus_decide(s) == Transmit(2)


def test_srpt_plus_discards_stale_update():
    assert srpt_plus_decide(state(0, 0, None, [Job(1, F(0), F(29, 20))], fresh=[1])) is Idle


def test_srpt_l_starts_update_one():
    assert srpt_l_decide(state(0, 0, None, [Job(1, F(0), F(29, 20))], fresh=[1])) == Transmit(1)


def test_srpt_l_on_example3_states():
    after_one = state(F(29, 20), 0, None, [Job(k, F(g), F(s)) for k, g, s in [(2, "1/4", "5/4"), (3, "3/4", 1), (4, 1, "1/2"), (5, "5/4", "3/10")]], delivered=F(0))
    assert srpt_l_decide(after_one) == Transmit(5)
    after_five = state(F(7, 4), F(5, 4), None, [Job(k, F(g), F(s)) for k, g, s in [(2, "1/4", "5/4"), (3, "3/4", 1), (4, 1, "1/2")]], delivered=F(5, 4))
    assert srpt_l_decide(after_five) is Idle


def test_srpt_prefers_small_and_then_latest():
    burst = [Job(1, F(1, 100), F(1, 2)), Job(2, F(1, 50), F(1, 2)), Job(3, F(1), F(1))]
    assert srpt_decide(state(1, 0, None, burst)) == Transmit(2)
    tie = [Job(1, F(1, 10), F(1, 2)), Job(2, F(1, 5), F(1, 2))]
    assert srpt_decide(state(F(1, 5), 0, None, tie)) == Transmit(2)
    assert srpt_decide(state(0, 0, None, [Job(1, F(0), F(3))])) == Transmit(1)


def test_fcfs_on_example3_serves_in_order():
    trace = run_policy(example3(), PolicyId.FCFS)
    assert [s.update_index for s in trace.segments] == [1, 2]
    assert trace.completions == ((1, F(29, 20)),)


@pytest.mark.parametrize("policy", [PolicyId.FCFS, PolicyId.NON_PREEMPTIVE_LATEST])
def test_single_update_is_sent_on_arrival(policy):
    trace = run_policy(validate_instance([(F(1, 2), 1)], 3), policy)
    assert trace.segments[0].start == F(1, 2)


def test_latest_first_starts_each_steady_update_on_time():
    # with a single burst update the burst is cleared before t = 1
    trace = run_policy(example2(1, F(1, 100), 8), PolicyId.NON_PREEMPTIVE_LATEST)
    starts = {k: t for k, t in trace.started()}
    assert [starts[k] for k in range(2, 9)] == list(range(1, 8))


def test_latest_first_lag_with_a_larger_burst():
    # a burst of m updates shifts every steady update by exactly eps/m
    m, eps = 4, F(1, 100)
    inst = example2(m, eps, 10)
    trace = run_policy(inst, PolicyId.NON_PREEMPTIVE_LATEST)
    starts = dict(trace.started())
    for u in inst.updates[m:]:
        assert starts[u.index] == u.generation + eps / m


def test_policy_lookup():
    assert policy_from_name("srpt-l") is PolicyId.SRPT_L
    with pytest.raises(UnknownPolicy, match="valid ids: srpt-plus"):
        policy_from_name("lifo")
    assert non_preemptive_latest_decide(state(0, 0)) is Idle


@given(instances(max_n=8))
def test_srpt_plus_index_properties(inst):
    trace = run_policy(inst, PolicyId.SRPT_PLUS)
    assert check_index_dominance(trace, inst).passed


@given(instances(max_n=8))
def test_srpt_plus_gamma_stays_zero(inst):
    """Once an update's index hits zero it never recovers, so it is never started later."""
    trace = run_policy(inst, PolicyId.SRPT_PLUS)
    lam = inst.initial_generation
    dead = set()
    done = sorted(trace.completions, key=lambda c: c[1])
    for seg in trace.segments:
        for k, t in done:
            if t <= seg.start:
                lam = max(lam, inst[k].generation)
        dead |= {u.index for u in inst.updates if u.generation <= lam}
        assert seg.update_index not in dead


@given(instances(max_n=8))
def test_srpt_l_structure(inst):
    report = check_lemma5(inst, cap=8)
    assert report.passed, report.witnesses


@given(instances(max_n=8))
def test_non_delay(inst):
    for policy in (PolicyId.SRPT_PLUS, PolicyId.SRPT_L):
        report = check_non_delay(run_policy(inst, policy), inst)
        assert report.passed, report.witnesses
