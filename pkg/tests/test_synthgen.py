from collections import Counter

import pytest

from suffixbeam.eventlog import variant_of
from suffixbeam.petri import compliance
from suffixbeam.synthgen import (
    EXC_B1_SHORT,
    EXC_B1_TAIL_BC,
    EXC_B1_TAIL_CB,
    EXC_B2,
    EXCEPTIONAL_VARIANTS,
    NORMAL_B1_BC,
    NORMAL_B1_CB,
    NORMAL_B2,
    SynthConfig,
    exceptional_process_net,
    generate,
)


def test_config_validation():
    with pytest.raises(ValueError, match="non-negative"):
        SynthConfig(n_train_normal=-1)
    with pytest.raises(ValueError, match=r"branch_probability must be in \[0, 1\]"):
        SynthConfig(branch_probability=1.2)
    with pytest.raises(ValueError, match="short_exceptional_fraction"):
        SynthConfig(short_exceptional_fraction=-0.5)


def test_default_variant_counts(synth):
    counts = Counter(variant_of(t) for t in synth.train_log.traces)
    # 800 normals split 70/30, 200 exceptionals split 25/75, the 50 branch-1
    # exceptionals split 4% short / 96% tailed, tails split evenly
    assert counts[NORMAL_B2] == 240
    assert counts[NORMAL_B1_BC] + counts[NORMAL_B1_CB] == 560
    assert counts[EXC_B1_SHORT] == 2
    assert counts[EXC_B1_TAIL_BC] == 24
    assert counts[EXC_B1_TAIL_CB] == 24
    assert counts[EXC_B2] == 150
    assert sum(counts.values()) == 1000
    # the B1b/B1c interleaving is sampled, not fixed
    assert counts[NORMAL_B1_BC] > 200 and counts[NORMAL_B1_CB] > 200


def test_test_log_is_the_exceptional_slice_of_train(synth):
    test_ids = [t.case_id for t in synth.test_log.traces]
    assert len(test_ids) == 200
    by_id = {t.case_id: t for t in synth.train_log.traces}
    for trace in synth.test_log.traces:
        assert by_id[trace.case_id] is trace  # same objects, not copies
    assert Counter(variant_of(t) for t in synth.test_log.traces) == {
        EXC_B1_SHORT: 2,
        EXC_B1_TAIL_BC: 24,
        EXC_B1_TAIL_CB: 24,
        EXC_B2: 150,
    }


def test_generation_is_deterministic():
    a = generate(SynthConfig(n_train_normal=40, n_train_exceptional=12))
    b = generate(SynthConfig(n_train_normal=40, n_train_exceptional=12))
    assert [variant_of(t) for t in a.train_log.traces] == [
        variant_of(t) for t in b.train_log.traces
    ]
    c = generate(SynthConfig(seed=99, n_train_normal=40, n_train_exceptional=12))
    assert [variant_of(t) for t in a.train_log.traces] != [
        variant_of(t) for t in c.train_log.traces
    ]


def test_no_exceptional_traces_is_an_error():
    with pytest.raises(ValueError, match="no exceptional traces"):
        generate(SynthConfig(n_train_normal=10, n_train_exceptional=0))


def test_net_accepts_exactly_the_exceptional_variants(synth):
    net = synth.net
    for variant in EXCEPTIONAL_VARIANTS:
        assert compliance(net, variant) == 1.0, variant
    for variant in (NORMAL_B1_BC, NORMAL_B1_CB, NORMAL_B2):
        assert compliance(net, variant) < 1.0, variant
    # prefix of an exceptional run that stops right after the repair:
    # legitimate completion in branch 1 (the short variant), not in branch 2
    assert compliance(net, EXC_B1_SHORT) == 1.0
    assert compliance(net, EXC_B2[:-1]) < 1.0


def test_net_blueprint_is_stable():
    net = exceptional_process_net()
    assert len(net.places) == 14
    assert len(net.transitions) == 14
    assert sum(1 for t in net.transitions if t.label is None) == 3
    assert net.initial_marking == {"p0": 1}
    assert net.final_marking == {"p_end": 1}


def test_custom_counts_follow_the_fractions():
    result = generate(
        SynthConfig(
            n_train_normal=100,
            n_train_exceptional=40,
            branch_probability=0.5,
            exceptional_branch1_fraction=0.5,
            short_exceptional_fraction=0.5,
        )
    )
    counts = Counter(variant_of(t) for t in result.train_log.traces)
    assert counts[NORMAL_B2] == 50
    assert counts[EXC_B1_SHORT] == 10
    assert counts[EXC_B1_TAIL_BC] == 5
    assert counts[EXC_B1_TAIL_CB] == 5
    assert counts[EXC_B2] == 20
    assert len(result.test_log) == 40
