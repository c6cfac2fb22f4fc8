import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import existential_triples, greedy_flags, greedy_triples, max_matching_size
from qholo.coincidence import (
    CoincidenceReport,
    DelayCalibration,
    coincidence_report,
    count_coincidences,
    count_triples,
    find_delay,
    g2_zero,
    hbt_g2,
    rolling_g2,
)
from qholo.errors import ConfigurationError, DataError, UndefinedStatisticError
from qholo.source_sim import TimeTagStream


def random_tags(rng, n, span):
    return np.unique(rng.integers(0, span, size=n)).astype(np.int64)


def test_single_pair():
    assert count_coincidences([100], [100], 2000) == 1


def test_outside_half_window():
    assert count_coincidences([0, 10_000], [3_000], 2_000) == 0


def test_window_edge_is_inclusive():
    assert count_coincidences([0], [1000], 2000) == 1
    assert count_coincidences([0], [1001], 2000) == 0


def test_each_tag_used_once():
    assert count_coincidences([0, 1], [0], 10) == 1
    assert count_coincidences([0], [0, 1], 10) == 1


def test_offset_shifts_b():
    assert count_coincidences([5000], [0], 100, offset=5000) == 1
    assert count_coincidences([5000], [0], 100) == 0


def test_triples_trivial():
    assert count_triples([7], [7], [7], 10) == 1
    assert count_triples([7], [7], [], 10) == 0


def test_unsorted_input_rejected():
    with pytest.raises(DataError):
        count_coincidences([5, 1], [1], 10)


def test_nonpositive_window_rejected():
    with pytest.raises(ConfigurationError):
        count_coincidences([1], [1], 0)


def test_swap_symmetry_counterexample_for_nearest_matching():
    # nearest-per-a matching would give 1 here; a maximum matching gives 2
    a, b = [0, 8], [5, 13]
    assert count_coincidences(a, b, 10) == 2
    assert count_coincidences(b, a, 10) == 2


@pytest.mark.parametrize("seed", range(40))
def test_matches_graph_matching(seed):
    rng = np.random.default_rng(seed)
    span = int(rng.integers(50, 5000))
    a = random_tags(rng, int(rng.integers(0, 120)), span)
    b = random_tags(rng, int(rng.integers(0, 120)), span)
    window = int(rng.integers(1, 200))
    offset = int(rng.integers(-50, 50))
    n = count_coincidences(a, b, window, offset)
    assert n == max_matching_size(a, b, window, offset)
    assert n == count_coincidences(b, a, window, -offset)


@pytest.mark.parametrize("seed", range(40))
def test_triples_match_naive(seed):
    rng = np.random.default_rng(1000 + seed)
    span = int(rng.integers(100, 3000))
    h, a, b = (random_tags(rng, int(rng.integers(0, 80)), span) for _ in range(3))
    window = int(rng.integers(1, 100))
    assert count_triples(h, a, b, window) == greedy_triples(h, a, b, window)
    assert count_triples(h, a, b, window) <= existential_triples(h, a, b, window)


def test_sparse_triples_equal_existential():
    # tags far apart compared with the window: no contention for partners
    rng = np.random.default_rng(5)
    base = np.arange(0, 200) * 10_000
    h = base
    a = np.sort(rng.choice(base, 120, replace=False) + rng.integers(-40, 40, 120))
    b = np.sort(rng.choice(base, 120, replace=False) + rng.integers(-40, 40, 120))
    assert count_triples(h, a, b, 100) == existential_triples(h, a, b, 100)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 500), max_size=40, unique=True),
       st.lists(st.integers(0, 500), max_size=40, unique=True),
       st.integers(1, 60))
def test_flags_equal_naive(a, b, window):
    a, b = np.array(sorted(a), np.int64), np.array(sorted(b), np.int64)
    from qholo.coincidence import coincidence_flags
    assert np.array_equal(coincidence_flags(a, b, window), greedy_flags(a, b, window))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 2000), max_size=40, unique=True),
       st.lists(st.integers(0, 2000), max_size=40, unique=True),
       st.integers(1, 80), st.integers(1, 80))
def test_window_monotonic(a, b, w1, w2):
    a, b = sorted(a), sorted(b)
    lo, hi = min(w1, w2), max(w1, w2)
    assert count_coincidences(a, b, lo) <= count_coincidences(a, b, hi)


def test_triples_bounded_by_doubles():
    rng = np.random.default_rng(3)
    h, a, b = (random_tags(rng, 300, 20_000) for _ in range(3))
    r = coincidence_report(h, a, b, 200)
    assert r.N123 <= min(r.N12, r.N13)


def test_g2_formula_and_error():
    g2, s = g2_zero(1000, 100, 50, 2)
    assert g2 == pytest.approx(1000 * 2 / (100 * 50))
    assert s == pytest.approx(g2 * np.sqrt(1 / 1000 + 1 / 2 + 1 / 100 + 1 / 50))


def test_g2_zero_triples_has_finite_error():
    g2, s = g2_zero(1000, 100, 50, 0)
    assert g2 == 0
    assert s == pytest.approx(1000 / (100 * 50) * np.sqrt(1 / 1000 + 1 + 1 / 100 + 1 / 50))


def test_g2_undefined():
    with pytest.raises(UndefinedStatisticError):
        g2_zero(10, 0, 5, 0)


@pytest.mark.parametrize("k", [2, 3, 10])
def test_g2_scale_invariant(k):
    counts = (12345, 678, 654, 3)
    assert g2_zero(*(k * c for c in counts))[0] == pytest.approx(g2_zero(*counts)[0], rel=1e-12)


def test_report_csv_round_trip():
    r = CoincidenceReport.from_counts(1000, 100, 50, 2, 2.0)
    assert CoincidenceReport.from_csv(r.to_csv()) == r
    undefined = CoincidenceReport.from_counts(10, 0, 0, 0, 2.0)
    back = CoincidenceReport.from_csv(undefined.to_csv())
    assert back.N1 == 10 and np.isnan(back.g2)


def test_rolling_bins_sum_to_whole_run():
    rng = np.random.default_rng(9)
    span = 10**7
    h, a, b = (random_tags(rng, 3000, span) for _ in range(3))
    s = TimeTagStream(1, h, span)
    reports = rolling_g2(s, a, b, 5000, 1e-6)
    whole = coincidence_report(h, a, b, 5000)
    assert len(reports) == 10
    for f in ("N1", "N12", "N13", "N123"):
        assert sum(getattr(r, f) for r in reports) == getattr(whole, f)


def test_find_delay_recovers_shift():
    rng = np.random.default_rng(2)
    a = random_tags(rng, 5000, 10**9)
    b = a - 12_300
    b = b[b >= 0]
    est = find_delay(a, b, search_range=50_000, bin=100)
    assert est.offset_ps == 12_300
    assert est.significant
    assert count_coincidences(a, b, 200, offset=est.offset_ps) == b.size


def test_find_delay_noise_not_significant():
    rng = np.random.default_rng(4)
    a = random_tags(rng, 2000, 10**10)
    b = random_tags(rng, 2000, 10**10)
    assert not find_delay(a, b, search_range=20_000, bin=1000).significant


def test_delay_calibration_antisymmetric():
    cal = DelayCalibration()
    cal.set(1, 4, 250)
    assert cal.get(1, 4) == 250 and cal.get(4, 1) == -250 and cal.get(2, 2) == 0
    with pytest.raises(DataError):
        cal.set(1, 2, float("inf"))


def test_hbt_uncorrelated_near_one():
    rng = np.random.default_rng(6)
    span = 10**13
    a = random_tags(rng, 1_000_000, span)
    b = random_tags(rng, 1_000_000, span)
    # ~1000 accidental pairs expected; one-to-one matching loses < 0.1 % here
    g = hbt_g2(a, b, 10_000, duration_ps=span)
    assert g == pytest.approx(1.0, abs=0.15)
