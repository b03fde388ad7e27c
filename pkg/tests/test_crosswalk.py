import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import write_csv
from occsim.crosswalk import Crosswalk, aggregate_to_isco, load_crosswalk
from occsim.errors import DataError
from occsim.projections import SimilarityMatrix


def _brute(values, ids, mapping, codes):
    out = np.full((len(codes), len(codes)), np.nan)
    for a, cm in enumerate(codes):
        for b, cn in enumerate(codes):
            best = None
            for i, oi in enumerate(ids):
                for j, oj in enumerate(ids):
                    if i == j or mapping.get(oi) != cm or mapping.get(oj) != cn:
                        continue
                    best = values[i][j] if best is None else max(best, values[i][j])
            if best is not None:
                out[a, b] = best
    return out


def test_load(tiny, tiny_dir):
    cw = load_crosswalk(tiny_dir / "crosswalk.csv", tiny)
    assert cw.codes == ("7123", "7124")
    assert cw.unmapped == ()
    assert Crosswalk.from_taxonomy(tiny).mapping == cw.mapping


def test_load_duplicates(tmp_path):
    p = write_csv(tmp_path / "c.csv", "occupation_id,isco_code\na,1000\na,1000\n")
    assert load_crosswalk(p).mapping == {"a": "1000"}
    p = write_csv(tmp_path / "c.csv", "occupation_id,isco_code\na,1000\na,1001\n")
    with pytest.raises(DataError, match="mapped to both"):
        load_crosswalk(p)
    p = write_csv(tmp_path / "c.csv", "occupation_id,isco_code\na,10X0\n")
    with pytest.raises(DataError, match="malformed"):
        load_crosswalk(p)


def test_load_reports_unmapped(tiny, tmp_path):
    p = write_csv(tmp_path / "c.csv", "occupation_id,isco_code\no1,1000\nzz,1001\n")
    cw = load_crosswalk(p, tiny)
    assert cw.mapping == {"o1": "1000"}
    assert cw.unmapped == ("o2", "o3")


def test_direct_max():
    ids = ("a", "b", "c")
    v = np.array([[0, 0.1, 0.2], [0.3, 0, 0.5], [0.4, 0.6, 0]])
    isco = aggregate_to_isco(SimilarityMatrix("x", ids, v), Crosswalk({"a": "m", "b": "m", "c": "n"}))
    assert isco.codes == ("m", "n")
    assert isco.values[0, 1] == 0.5
    assert isco.values[1, 0] == 0.6
    assert isco.values[0, 0] == 0.3  # within-code, distinct occupations only
    assert np.isnan(isco.values[1, 1])  # single occupation: no distinct pair


def test_bijection_is_relabel():
    rng = np.random.default_rng(1)
    v = rng.random((5, 5))
    ids = tuple("abcde")
    cw = Crosswalk({o: f"{1000 + k}" for k, o in enumerate(ids)})
    isco = aggregate_to_isco(SimilarityMatrix("x", ids, v), cw)
    off = ~np.eye(5, dtype=bool)
    assert np.array_equal(isco.values[off], v[off])
    assert np.isnan(np.diag(isco.values)).all()


def test_disjoint_crosswalk():
    sim = SimilarityMatrix("x", ("a",), np.zeros((1, 1)))
    with pytest.raises(DataError):
        aggregate_to_isco(sim, Crosswalk({"zz": "1000"}))


@st.composite
def matrix_and_crosswalk(draw):
    m = draw(st.integers(1, 6))
    k = draw(st.integers(1, 3))
    ids = tuple(f"o{i}" for i in range(m))
    v = np.array(draw(st.lists(st.lists(st.floats(0, 10), min_size=m, max_size=m), min_size=m, max_size=m)))
    mapping = {}
    for oid in ids:
        code = draw(st.one_of(st.none(), st.integers(0, k - 1)))
        if code is not None:
            mapping[oid] = f"{1000 + code}"
    return ids, v, mapping


@settings(max_examples=200, deadline=None)
@given(matrix_and_crosswalk())
def test_exhaustive_oracle(case):
    ids, v, mapping = case
    cw = Crosswalk(mapping)
    sim = SimilarityMatrix("x", ids, v)
    expect = _brute(v, ids, mapping, cw.codes)
    if not mapping or np.isnan(expect).all():
        with pytest.raises(DataError):
            aggregate_to_isco(sim, cw)
        return
    got = aggregate_to_isco(sim, cw).values
    assert np.array_equal(got, expect, equal_nan=True)
    # upper bound: the largest code value is the largest mapped off-diagonal entry
    assert np.nanmax(got) == np.nanmax(expect)


@settings(max_examples=100, deadline=None)
@given(matrix_and_crosswalk(), st.floats(0, 5))
def test_monotone(case, bump):
    ids, v, mapping = case
    if len(ids) < 2 or len(set(mapping.values())) == 0:
        return
    cw = Crosswalk(mapping)
    try:
        before = aggregate_to_isco(SimilarityMatrix("x", ids, v), cw).values
    except DataError:
        return
    v2 = v.copy()
    v2[0, 1] += bump
    after = aggregate_to_isco(SimilarityMatrix("x", ids, v2), cw).values
    mask = ~np.isnan(before)
    assert (after[mask] >= before[mask]).all()
