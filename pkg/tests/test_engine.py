import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ilcscan.attribution import AppAnalysis
from ilcscan.engine import (
    DeviceProfile,
    additional_perm_distribution,
    analyze_device,
    benefiting_count_distribution,
    library_benefit_shares,
    library_prevalence,
    mean_libraries_per_device,
)
from ilcscan.errors import EmptyCorpus, EmptyPopulation, NoBenefitingFindings
from tests.oracle import (
    brute_force_benefiting_counts,
    brute_force_findings,
    random_population,
)


def app(app_id, library_perms, extra_libraries=()):
    """AppAnalysis with declared implied by the usable sets."""
    declared = frozenset().union(*library_perms.values()) if library_perms else frozenset()
    return AppAnalysis(
        app_id=app_id, version_label="t", declared=declared, target_sdk=None,
        library_perms={k: frozenset(v) for k, v in library_perms.items()},
        app_code_perms=frozenset(),
        libraries_present=frozenset(library_perms) | frozenset(extra_libraries))


@pytest.fixture
def shared_library_device():
    """Three apps all embedding lib2 with usable sets {A,B}, {A,C}, {F}."""
    corpus = {
        "app1": app("app1", {"lib1": {"A"}, "lib2": {"A", "B"}}),
        "app2": app("app2", {"lib2": {"A", "C"}, "lib3": set()}),
        "app3": app("app3", {"lib2": {"F"}}),
    }
    device = DeviceProfile("device-1", frozenset({"app1", "app2", "app3"}))
    return device, corpus


def test_union_exceeds_single_app_maximum(shared_library_device):
    device, corpus = shared_library_device
    findings = {f.library_id: f for f in analyze_device(device, corpus)}
    lib2 = findings["lib2"]
    assert lib2.union_set == {"A", "B", "C", "F"}
    assert len(lib2.union_set) == 4
    assert lib2.single_app_max == 2
    assert lib2.additional == 2
    assert lib2.benefits is True
    assert lib2.hosting_apps == ("app1", "app2", "app3")


def test_single_app_library_cannot_benefit(shared_library_device):
    device, corpus = shared_library_device
    findings = {f.library_id: f for f in analyze_device(device, corpus)}
    assert findings["lib1"].benefits is False
    assert findings["lib1"].additional == 0
    assert findings["lib3"].union_set == frozenset()


def test_single_app_device():
    corpus = {"a": app("a", {"x": {"P"}, "y": {"Q"}})}
    device = DeviceProfile("d", frozenset({"a"}))
    for finding in analyze_device(device, corpus):
        assert len(finding.hosting_apps) <= 1
        assert finding.benefits is False


def test_equal_sets_do_not_benefit():
    corpus = {"a": app("a", {"x": {"P"}}), "b": app("b", {"x": {"P"}})}
    device = DeviceProfile("d", frozenset({"a", "b"}))
    finding = analyze_device(device, corpus)[0]
    assert finding.union_set == {"P"}
    assert finding.additional == 0
    assert finding.benefits is False


def test_unresolved_apps_skipped_and_counted():
    corpus = {"a": app("a", {"x": {"P"}})}
    device = DeviceProfile("d", frozenset({"a", "ghost"}))
    skips = []
    findings = analyze_device(device, corpus, skip_counter=skips)
    assert skips == ["ghost"]
    assert [f.library_id for f in findings] == ["x"]


def test_findings_sorted_by_library():
    corpus = {"a": app("a", {"zeta": set(), "alpha": set(), "mid": set()})}
    device = DeviceProfile("d", frozenset({"a"}))
    assert [f.library_id for f in analyze_device(device, corpus)] == \
        ["alpha", "mid", "zeta"]


def test_benefiting_count_distribution_single_device(shared_library_device):
    device, corpus = shared_library_device
    dist = benefiting_count_distribution([device], corpus)
    assert dist["1"] == 1.0  # only lib2 benefits
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)


def test_benefiting_count_distribution_no_shared_library():
    corpus = {"a": app("a", {"x": {"P"}}), "b": app("b", {"y": {"Q"}})}
    population = [DeviceProfile("d", frozenset({"a", "b"}))]
    dist = benefiting_count_distribution(population, corpus)
    assert dist["0"] == 1.0


def test_benefiting_count_distribution_empty_population():
    with pytest.raises(EmptyPopulation):
        benefiting_count_distribution([], {})


def test_unresolved_device_contributes_to_bucket_zero():
    corpus = {"a": app("a", {"x": {"P"}})}
    population = [DeviceProfile("d", frozenset({"nope"}))]
    assert benefiting_count_distribution(population, corpus)["0"] == 1.0


def test_additional_perm_distribution(shared_library_device):
    device, corpus = shared_library_device
    dist = additional_perm_distribution([device], corpus)
    assert dist["2"] == 1.0
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)


def test_additional_perm_distribution_requires_benefit():
    corpus = {"a": app("a", {"x": {"P"}})}
    with pytest.raises(NoBenefitingFindings):
        additional_perm_distribution([DeviceProfile("d", frozenset({"a"}))], corpus)


def test_library_benefit_shares_hand_count():
    corpus = {
        "a": app("a", {"x": {"P"}, "y": {"R"}}),
        "b": app("b", {"x": {"Q"}, "y": {"S"}}),
        "c": app("c", {"x": {"P", "Q"}}),
    }
    dev1 = DeviceProfile("d1", frozenset({"a", "b"}))   # x and y benefit
    dev2 = DeviceProfile("d2", frozenset({"a", "b"}))   # x and y benefit
    shares = library_benefit_shares([dev1, dev2], corpus)
    assert shares == {"x": 0.5, "y": 0.5}
    # 3 findings x,x,y
    corpus2 = {"a": app("a", {"x": {"P"}}), "b": app("b", {"x": {"Q"}, "y": {"R"}}),
               "c": app("c", {"y": {"S"}})}
    d_x1 = DeviceProfile("d1", frozenset({"a", "b"}))       # x benefits
    d_x2 = DeviceProfile("d2", frozenset({"a", "b", "c"}))  # x and y benefit
    shares = library_benefit_shares([d_x1, d_x2], corpus2)
    assert shares["x"] == pytest.approx(2 / 3, abs=1e-9)
    assert shares["y"] == pytest.approx(1 / 3, abs=1e-9)


def test_library_prevalence():
    corpus = {"a": app("a", {"x": {"P"}}), "b": app("b", {})}
    assert library_prevalence(corpus) == {"x": 0.5}
    corpus["b"] = app("b", {"x": set()})
    assert library_prevalence(corpus) == {"x": 1.0}
    with pytest.raises(EmptyCorpus):
        library_prevalence({})


def test_mean_libraries_per_device():
    corpus = {"a": app("a", {"x": set(), "y": set()}),
              "b": app("b", {"y": set(), "z": set()})}
    one = DeviceProfile("d1", frozenset({"a", "b"}))
    assert mean_libraries_per_device([one], corpus) == 3.0
    empty = DeviceProfile("d2", frozenset({"ghost"}))
    assert mean_libraries_per_device([one, empty], corpus) == 1.5
    four_corpus = {"a": app("a", {"p": set(), "q": set()}),
                   "b": app("b", {"p": set(), "q": set(), "r": set(), "s": set()})}
    dev_a = DeviceProfile("d3", frozenset({"a"}))
    dev_b = DeviceProfile("d4", frozenset({"b"}))
    assert mean_libraries_per_device([dev_a, dev_b], four_corpus) == 3.0


# --- oracle equivalence ---

def assert_matches_oracle(device, corpus):
    expected = brute_force_findings(device, corpus)
    findings = analyze_device(device, corpus)
    assert sorted(f.library_id for f in findings) == sorted(expected)
    for finding in findings:
        want = expected[finding.library_id]
        assert finding.hosting_apps == want["hosting_apps"]
        assert finding.union_set == want["union_set"]
        assert finding.single_app_max == want["single_app_max"]
        assert finding.additional == want["additional"]
        assert finding.benefits == want["benefits"]


def test_oracle_equivalence_sample():
    for seed in range(100):  # acceptance runs the full 1000
        corpus, population = random_population(seed)
        for device in population:
            assert_matches_oracle(device, corpus)
        counts = brute_force_benefiting_counts(population, corpus)
        dist = benefiting_count_distribution(population, corpus)
        expected = Counter("5+" if c >= 5 else str(c) for c in counts)
        for bucket, share in dist.items():
            assert share == pytest.approx(expected[bucket] / len(population), abs=1e-12)


# --- properties ---

perm_sets = st.sets(st.sampled_from(["A", "B", "C", "D", "E", "F"]), max_size=6)


@st.composite
def corpora(draw):
    n_apps = draw(st.integers(1, 6))
    corpus = {}
    for i in range(n_apps):
        libs = draw(st.sets(st.sampled_from(["l1", "l2", "l3", "l4"]), max_size=4))
        corpus[f"app{i}"] = app(f"app{i}", {lib: draw(perm_sets) for lib in libs})
    return corpus


@given(corpora(), st.data())
@settings(max_examples=100, deadline=None)
def test_install_monotonicity(corpus, data):
    app_ids = sorted(corpus)
    subset = data.draw(st.sets(st.sampled_from(app_ids), min_size=1))
    addition = data.draw(st.sampled_from(app_ids))
    before = {f.library_id: f
              for f in analyze_device(DeviceProfile("d", frozenset(subset)), corpus)}
    after = {f.library_id: f
             for f in analyze_device(DeviceProfile("d", frozenset(subset) | {addition}),
                                     corpus)}
    for library_id, finding in before.items():
        assert after[library_id].union_set >= finding.union_set
        if finding.benefits:
            assert after[library_id].benefits


@given(corpora())
@settings(max_examples=50, deadline=None)
def test_permutation_invariance(corpus):
    app_ids = list(corpus)
    rng = random.Random(0)
    base = analyze_device(DeviceProfile("d", frozenset(app_ids)), corpus)
    for _ in range(3):
        rng.shuffle(app_ids)
        again = analyze_device(DeviceProfile("d", frozenset(app_ids)), corpus)
        assert again == base


@given(corpora(), st.data())
@settings(max_examples=100, deadline=None)
def test_condition_two_fidelity(corpus, data):
    subset = data.draw(st.sets(st.sampled_from(sorted(corpus)), min_size=1))
    for finding in analyze_device(DeviceProfile("d", frozenset(subset)), corpus):
        strictly_bigger = len(finding.union_set) > max(
            (len(s) for s in finding.per_app_sets), default=0)
        assert finding.benefits == (strictly_bigger and len(finding.hosting_apps) >= 2)
        assert finding.additional >= 0
        for per_app in finding.per_app_sets:
            assert per_app <= finding.union_set
