from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from aoilab.engine import CausalState, Idle, PolicyProtocolViolation, Transmit, simulate
from aoilab.generators import example3
from aoilab.model import Segment, validate_instance, validate_trace
from aoilab.policies import PolicyId, run_policy

from conftest import dyadic, instances


def segs(trace):
    return [(s.update_index, s.start, s.end) for s in trace.segments]


def test_srpt_plus_example3_segments():
    trace = run_policy(example3(), PolicyId.SRPT_PLUS)
    assert segs(trace) == [(2, F(1, 4), 1), (4, 1, F(3, 2)), (5, F(3, 2), F(9, 5)), (6, F(9, 5), F(19, 10))]
    assert trace.completions == ((4, F(3, 2)), (5, F(9, 5)), (6, F(19, 10)))


def test_srpt_l_example3_segments():
    trace = run_policy(example3(), PolicyId.SRPT_L)
    assert segs(trace) == [(1, 0, F(29, 20)), (5, F(29, 20), F(7, 4)), (6, F(9, 5), F(19, 10))]
    assert trace.completions == ((1, F(29, 20)), (5, F(7, 4)), (6, F(19, 10)))


@pytest.mark.parametrize("policy", list(PolicyId))
def test_empty_instance_gives_empty_trace(policy):
    trace = run_policy(validate_instance([], 3), policy)
    assert trace.segments == () and trace.completions == ()


def test_unknown_target_is_a_protocol_violation():
    inst = validate_instance([(0, 1)], 2)
    with pytest.raises(PolicyProtocolViolation):
        simulate(inst, lambda s: Transmit(7))
    with pytest.raises(PolicyProtocolViolation):
        simulate(inst, lambda s: "nope")


def test_consultation_points_and_event_order():
    inst = validate_instance([(0, 1), (1, 1), (F(3, 2), 1)], 4)
    seen = []

    def policy(state: CausalState):
        seen.append((state.now, state.lam, tuple(sorted(state.newly_arrived)), state.in_service))
        jobs = state.jobs()
        return Transmit(jobs[0].index) if jobs else Idle

    simulate(inst, policy)
    times = [t for t, *_ in seen]
    assert times == [0, 1, F(3, 2), 2, 3]
    # at t=1 the completion of update 1 is applied first: lam moved, nothing in service
    _, lam, fresh, in_service = seen[1]
    assert lam == 0 and fresh == (2,) and in_service is None


def test_truncation_at_horizon():
    inst = validate_instance([(0, 3)], 2)
    trace = run_policy(inst, PolicyId.FCFS)
    assert segs(trace) == [(1, 0, 2)] and trace.completions == ()


@given(instances(), st.sampled_from(list(PolicyId)))
def test_traces_are_valid_and_deterministic(inst, policy):
    a, b = run_policy(inst, policy), run_policy(inst, policy)
    assert a == b
    ok, violations = validate_trace(a, inst)
    assert ok, violations
    served = a.served()
    done = dict(a.completions)
    for u in inst.updates:
        assert served.get(u.index, 0) <= u.size
        assert (served.get(u.index, 0) == u.size) == (u.index in done)


@given(instances(), st.sampled_from(list(PolicyId)), st.data())
def test_causality(inst, policy, data):
    """Changing what arrives after t never changes what happened before t."""
    T = inst.horizon
    cut = data.draw(st.integers(0, 31)) * T / 32
    kept = [(u.generation, u.size) for u in inst.updates if u.generation <= cut]
    extra = data.draw(st.lists(st.tuples(st.integers(1, 32), dyadic(1, 32)), max_size=4))
    other = kept + [(cut + (T - cut) * k / 33, s) for k, s in extra]
    other_inst = validate_instance(other, T)

    def before(trace):
        out = []
        for s in trace.segments:
            if s.start < cut:
                out.append((s.update_index, s.start, min(s.end, cut)))
        return out, [(k, t) for k, t in trace.completions if t <= cut]

    assert before(run_policy(inst, policy)) == before(run_policy(other_inst, policy))


@given(instances(), st.sampled_from(list(PolicyId)))
def test_switches_happen_only_at_events(inst, policy):
    trace = run_policy(inst, policy)
    events = {F(0), inst.horizon} | {u.generation for u in inst.updates} | {t for _, t in trace.completions}
    for s in trace.segments:
        assert s.start in events
        assert s.end in events
