import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from occsim.crosswalk import IscoSimilarityMatrix
from occsim.errors import ValidationError
from occsim.validation import (
    PowerLink,
    TransitionTable,
    ValidationConfig,
    evaluate,
    generate_transitions,
    nearest_rank_quantile,
    normalize_values,
    roc_curve,
    select_threshold,
)


def _codes(k):
    return tuple(f"{1000 + a}" for a in range(k))


def _isco(values):
    values = np.asarray(values, dtype=float)
    return IscoSimilarityMatrix("x", _codes(len(values)), values)


# -- normalisation and threshold -------------------------------------------------


def test_normalize_percentile():
    vals = np.arange(0, 101, dtype=float)
    assert nearest_rank_quantile(vals, 98) == 98.0
    out = normalize_values(vals, 98)
    assert out[49] == 0.5
    assert out[99] == 1.0
    assert out[98] == 1.0
    assert (out <= 1).all()


def test_normalize_degenerate():
    assert (normalize_values([3.0] * 5) == 1.0).all()
    assert (normalize_values([0.0] * 5) == 0.0).all()
    with pytest.raises(ValueError):
        normalize_values([])


def test_weighted_quantile_matches_expansion():
    rng = np.random.default_rng(0)
    vals = rng.random(30)
    w = rng.integers(1, 6, size=30)
    expanded = np.repeat(vals, w)
    for pct in (10, 50, 65, 98, 99.5):
        assert nearest_rank_quantile(vals, pct, w) == nearest_rank_quantile(expanded, pct)


@settings(max_examples=200)
@given(st.lists(st.floats(0, 100), min_size=1, max_size=200), st.floats(50, 99.9))
def test_normalize_clamp_share(values, pct):
    out = normalize_values(values, pct)
    q = nearest_rank_quantile(values, pct)
    strictly_above = sum(v > q for v in values)
    assert strictly_above <= (100 - pct) / 100 * len(values) + 1e-9
    assert ((out >= 0) & (out <= 1)).all()


def test_threshold_order_statistic():
    t, tnr = select_threshold([0.1] * 20 + [0.9] * 10, 0.65)
    assert t == 0.9
    assert tnr == pytest.approx(20 / 30)


def test_threshold_counting():
    t, tnr = select_threshold(np.arange(1, 101, dtype=float), 0.5)
    assert t == 51.0
    assert tnr == 0.5


def test_threshold_identical_values():
    t, tnr = select_threshold([0.4] * 10, 0.65)
    assert t > 0.4 and tnr == 1.0


def test_threshold_weighted_equals_expanded():
    vals = np.array([0.1, 0.5, 0.7])
    w = np.array([3, 1, 6])
    assert select_threshold(vals, 0.35, w) == select_threshold(np.repeat(vals, w), 0.35)


def test_threshold_empty():
    with pytest.raises(ValidationError):
        select_threshold([], 0.65)


@settings(max_examples=200)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=100), st.floats(0.01, 0.99))
def test_threshold_contract(values, target):
    t, tnr = select_threshold(values, target)
    v = np.asarray(values)
    assert tnr == pytest.approx(np.mean(v < t))
    assert tnr >= target - 1e-12


# -- ROC ---------------------------------------------------------------------------


def test_roc_identical_classes():
    rng = np.random.default_rng(3)
    vals = rng.random(500)
    fpr, tpr, thr, auc = roc_curve(vals, vals)
    assert auc == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(fpr, tpr)


def test_roc_separated():
    fpr, tpr, thr, auc = roc_curve([0.1, 0.2, 0.3], [0.6, 0.9], [5, 3, 1], [2, 7])
    assert auc == 1.0
    assert (fpr[0], tpr[0]) == (0.0, 0.0) and (fpr[-1], tpr[-1]) == (1.0, 1.0)


def test_roc_matches_pair_counting():
    rng = np.random.default_rng(4)
    neg, pos = rng.integers(0, 10, 60) / 10, rng.integers(3, 13, 40) / 10
    _, _, _, auc = roc_curve(neg, pos)
    wins = sum((p > n) + 0.5 * (p == n) for p in pos for n in neg)
    assert auc == pytest.approx(wins / (len(pos) * len(neg)), abs=1e-12)


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.lists(st.floats(0, 1), min_size=1, max_size=50))
def test_roc_validity(neg, pos):
    fpr, tpr, thr, auc = roc_curve(neg, pos)
    assert (np.diff(fpr) >= 0).all() and (np.diff(tpr) >= 0).all()
    assert fpr[0] == tpr[0] == 0.0 and fpr[-1] == tpr[-1] == 1.0
    assert 0.0 <= auc <= 1.0
    # scaling by a power of two is strictly monotone even in floating point
    _, _, _, auc2 = roc_curve(8 * np.asarray(neg), 8 * np.asarray(pos))
    assert auc2 == pytest.approx(auc, abs=1e-12)


def test_roc_empty_class():
    with pytest.raises(ValidationError):
        roc_curve([], [0.5])


# -- evaluate ----------------------------------------------------------------------


def test_evaluate_transfers_mass_and_exclusions():
    sim = _isco([[0, 0.9, 0.1], [0.2, 0, 0.8], [np.nan, 0.3, 0]])
    codes = sim.codes
    trans = TransitionTable({
        (codes[0], codes[1]): 30,
        (codes[1], codes[2]): 25,
        (codes[0], codes[2]): 3,
        (codes[1], codes[0]): 5,
        (codes[2], codes[0]): 7,   # NaN cell: excluded
        (codes[0], codes[0]): 50,  # self transition
        ("9999", codes[0]): 4,     # unknown code
    })
    rep = evaluate(sim, trans, ValidationConfig())
    assert rep.n_rare == 8 and rep.n_common == 55
    assert rep.excluded_pairs == 2 and rep.excluded_transfers == 11
    assert rep.self_transitions == 50
    assert rep.n_rare + rep.n_common + rep.excluded_transfers + rep.self_transitions == trans.total
    assert rep.auc == 1.0
    assert rep.tnr >= 0.65


def test_evaluate_pairs_mode():
    sim = _isco([[0, 0.9, 0.1], [0.2, 0, 0.8], [np.nan, 0.3, 0]])
    codes = sim.codes
    trans = TransitionTable({(codes[0], codes[1]): 30})
    rep = evaluate(sim, trans, ValidationConfig(mode="pairs"))
    assert rep.n_observations == 5
    assert rep.n_common == 1 and rep.n_rare == 4


def test_evaluate_identical_classes():
    k = 40
    rng = np.random.default_rng(5)
    upper = np.triu(rng.random((k, k)), 1)
    sim = _isco(upper + upper.T)
    codes = sim.codes
    # (a, b) with a < b is common, its mirror image rare: same value multiset
    counts = {(codes[a], codes[b]): (30 if a < b else 10) for a in range(k) for b in range(k) if a != b}
    rep = evaluate(sim, TransitionTable(counts), ValidationConfig(rare_threshold=20))
    assert rep.auc == pytest.approx(0.5, abs=1e-9)
    rep = evaluate(sim, TransitionTable(counts), ValidationConfig(rare_threshold=20, mode="pairs"))
    assert rep.auc == pytest.approx(0.5, abs=1e-9)


def test_evaluate_one_class_empty():
    sim = _isco([[0, 1], [1, 0]])
    codes = sim.codes
    with pytest.raises(ValidationError, match="common class is empty"):
        evaluate(sim, TransitionTable({(codes[0], codes[1]): 3}))
    with pytest.raises(ValidationError, match="rare class is empty"):
        evaluate(sim, TransitionTable({(codes[0], codes[1]): 30, (codes[1], codes[0]): 30}))


def test_pairs_mode_cardinality_small():
    k = 12
    sim = _isco(np.random.default_rng(0).random((k, k)))
    trans = TransitionTable({(sim.codes[0], sim.codes[1]): 100})
    rep = evaluate(sim, trans, ValidationConfig(mode="pairs"))
    assert rep.n_observations == k * (k - 1)


def test_histograms_are_densities():
    sim = _isco(np.random.default_rng(2).random((10, 10)))
    trans = generate_transitions(sim, 5000, seed=1)
    rep = evaluate(sim, trans, ValidationConfig(bins=20))
    width = np.diff(rep.hist_edges)
    assert np.sum(rep.hist_rare * width) == pytest.approx(1.0)
    assert np.sum(rep.hist_common * width) == pytest.approx(1.0)


# -- generator ---------------------------------------------------------------------


def test_generator_degenerate():
    sim = _isco([[0, 1], [0, 0]])
    table = generate_transitions(sim, 1000, seed=0, link=PowerLink(2, 0.0))
    assert table.counts == {(sim.codes[0], sim.codes[1]): 1000}


def test_generator_all_zero():
    with pytest.raises(ValueError, match="zero weight"):
        generate_transitions(_isco(np.zeros((3, 3))), 10, link=PowerLink(2, 0.0))


def test_generator_uniform_chi_square():
    k = 6
    sim = _isco(np.full((k, k), 0.4))
    table = generate_transitions(sim, 10_000, seed=11)
    assert table.total == 10_000
    observed = [table.counts.get((a, b), 0) for a in sim.codes for b in sim.codes if a != b]
    assert len(observed) == k * (k - 1)
    assert stats.chisquare(observed).pvalue > 0.001


def test_generator_deterministic():
    sim = _isco(np.random.default_rng(7).random((8, 8)))
    assert generate_transitions(sim, 500, seed=3) == generate_transitions(sim, 500, seed=3)
    assert generate_transitions(sim, 500, seed=3) != generate_transitions(sim, 500, seed=4)


def test_generator_no_self_transitions():
    sim = _isco(np.ones((5, 5)))
    assert not generate_transitions(sim, 2000, seed=0).self_transitions


def test_config_ranges():
    for bad in (dict(rare_threshold=0), dict(norm_percentile=100), dict(target_tnr=1.0),
                dict(bins=1), dict(mode="both")):
        with pytest.raises(ValueError):
            ValidationConfig(**bad)
