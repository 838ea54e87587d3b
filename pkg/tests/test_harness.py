from fractions import Fraction as F

import pytest
from hypothesis import given

from aoilab.generators import RandomUniform, example1, example3, generate
from aoilab.harness import (
    CheckReport,
    DegenerateOptimal,
    Witness,
    check_decomposition,
    check_lemma2,
    check_lemma4,
    check_lemma5,
    competitive_ratio,
    evaluate_instance,
    run_corpus,
    run_suite,
)
from aoilab.metrics import InvalidTrace, per_update_metrics
from aoilab.model import Segment, Trace, validate_instance
from aoilab.oracle import chain_schedule
from aoilab.policies import PolicyId, run_policy

from conftest import instances

SINGLE = validate_instance([(0, 1)], 1)


def test_report_passes_iff_no_witnesses():
    assert CheckReport("x", "id").passed
    assert not CheckReport("x", "id", (Witness(1, F(2), F(1)),)).passed


def test_lemma2_examples():
    inst = example3()
    assert check_lemma2(run_policy(inst, PolicyId.SRPT_PLUS), inst).passed
    for p in PolicyId:
        assert check_lemma2(run_policy(SINGLE, p), SINGLE).witnesses == ()


def test_lemma2_refuses_impossible_trace():
    inst = validate_instance([(0, 1)], 2)
    too_fast = Trace(inst, (Segment(1, F(0), F(1, 2)),), ((1, F(1, 2)),))
    with pytest.raises(InvalidTrace):
        check_lemma2(too_fast, inst)


def test_lemma4_example3():
    inst = example3()
    plus = per_update_metrics(run_policy(inst, PolicyId.SRPT_PLUS), inst)
    assert (plus[1].w, plus[2].w) == (F(1, 4), 0)
    assert check_lemma4(inst).passed
    assert check_lemma4(validate_instance([(F(1, 2), 1)], 2)).passed


def test_lemma5_example3():
    inst = example3()
    trace = run_policy(inst, PolicyId.SRPT_L)
    assert sorted({k for k, _ in trace.started()}) == [1, 5, 6]
    assert check_lemma5(inst).passed
    assert check_lemma5(SINGLE).passed


def test_competitive_ratio_examples():
    inst = example3()
    assert competitive_ratio(inst, PolicyId.SRPT_PLUS) == F(558, 553)
    assert competitive_ratio(inst, PolicyId.SRPT_L) == F(653, 553)
    one = validate_instance([(F(1, 2), 1)], 3)
    for p in PolicyId:
        assert competitive_ratio(one, p) == 1


def test_degenerate_optimum():
    # a credit of lam0 = 1 makes the age negative early on
    inst = validate_instance([(1, 1)], F(3, 2), 1)
    with pytest.raises(DegenerateOptimal):
        competitive_ratio(inst, PolicyId.SRPT_PLUS)


def test_decomposition_examples():
    inst = example1()
    assert check_decomposition(chain_schedule((1, 2, 3), inst), inst).passed
    assert check_decomposition(run_policy(SINGLE, PolicyId.FCFS), SINGLE).passed
    srpt_plus = check_decomposition(run_policy(example3(), PolicyId.SRPT_PLUS), example3())
    assert srpt_plus.passed and srpt_plus.skipped == ()
    inst = validate_instance([(0, 1), (F(1, 2), 5)], 2)
    report = check_decomposition(run_policy(inst, PolicyId.FCFS), inst)
    assert report.passed and report.skipped == (2,)


def test_example3_has_every_check_green():
    outcome = evaluate_instance(example3())
    assert outcome.failures == []
    assert outcome.optimal == F(553, 400)
    assert outcome.dominance_ok


def test_corpus_summary_does_not_depend_on_workers():
    corpus = [generate(RandomUniform(1 + k % 6, F(2), F(1), k)) for k in range(24)]
    one, two = run_corpus(corpus, jobs=1), run_corpus(corpus, jobs=2)
    assert one.to_dict() == two.to_dict()
    assert one.failures == [] and one.count == 24
    assert one.max_ratio["srpt-plus"] <= 4


def test_run_suite_cr_and_unknown():
    reports = run_suite("cr", [example3()], PolicyId.SRPT_L)
    assert reports[0].passed and reports[0].check_id == "cr[srpt-l]"
    with pytest.raises(ValueError):
        run_suite("lemma9", [example3()])


@given(instances(max_n=7))
def test_all_checks_hold(inst):
    outcome = evaluate_instance(inst)
    assert outcome.failures == [], [f.to_dict() for f in outcome.failures]
    assert outcome.dominance_ok
