import logging
import shutil

import pytest

from conftest import write_csv
from occsim.errors import DataError
from occsim.ingest import (
    TaxonomyFiles,
    load_external_rankings,
    load_taxonomy,
    load_transitions,
    write_rankings,
    write_taxonomy,
    write_transitions,
)
from occsim.validation import TransitionTable


def _copy(tiny_dir, tmp_path):
    d = tmp_path / "tax"
    shutil.copytree(tiny_dir, d)
    return d


def _structure(t):
    occ = [(o.id, o.label, o.isco_code) for o in t.occupations]
    sk = {(s.id, s.skill_type, s.block_id) for s in t.skills}
    ids_o, ids_s = t.occupation_ids, [s.id for s in t.skills]
    ea = {(ids_o[i], ids_s[k]) for i, k in t.edges_all}
    ee = {(ids_o[i], ids_s[k]) for i, k in t.edges_ess}
    return occ, sk, ea, ee


def test_tiny_counts(tiny):
    assert (tiny.m, tiny.n, len(tiny.blocks)) == (3, 4, 2)
    assert len(tiny.edges_all) == 7
    assert len(tiny.edges_ess) == 5
    assert tiny.block_counts_by_type() == {"core": 1, "knowledge": 1, "attitude": 0, "language": 0}


def test_from_files_object(tiny_dir):
    t = load_taxonomy(TaxonomyFiles.from_dir(tiny_dir))
    assert t.m == 3


def test_skill_in_two_blocks(tiny_dir, tmp_path):
    d = _copy(tiny_dir, tmp_path)
    with open(d / "blocks.csv", "a") as fh:
        fh.write("s1,P2\n")
    with pytest.raises(DataError, match="skill in multiple blocks"):
        load_taxonomy(d)


def test_empty_relations_warns(tiny_dir, tmp_path, caplog):
    d = _copy(tiny_dir, tmp_path)
    write_csv(d / "relations.csv", "occupation_id,skill_id,relation\n")
    with caplog.at_level(logging.WARNING):
        t = load_taxonomy(d)
    assert len(t.isolated_occupations()) == t.m == 3
    assert "3 isolated occupation" in caplog.text
    assert (t.degrees("all") == 0).all()


def test_essential_beats_optional(tiny_dir, tmp_path):
    d = _copy(tiny_dir, tmp_path)
    with open(d / "relations.csv", "a") as fh:
        fh.write("o3,s3,essential\no1,s1,optional\n")
    t = load_taxonomy(d)
    o3, s3, o1, s1 = t.occupation_index["o3"], t.skill_index["s3"], t.occupation_index["o1"], t.skill_index["s1"]
    assert (o3, s3) in t.edges_ess
    assert (o1, s1) in t.edges_ess
    assert len(t.edges_all) == 7


def test_duplicated_rows_idempotent(tiny_dir, tmp_path):
    d = _copy(tiny_dir, tmp_path)
    for name in ("relations.csv", "blocks.csv"):
        lines = (d / name).read_text().splitlines()
        (d / name).write_text("\n".join([lines[0], *lines[1:], *lines[1:]]) + "\n")
    assert _structure(load_taxonomy(d)) == _structure(load_taxonomy(tiny_dir))


def test_round_trip(tiny, tmp_path):
    write_taxonomy(tiny, tmp_path / "out")
    again = load_taxonomy(tmp_path / "out")
    assert _structure(again) == _structure(tiny)


def test_unassigned_block(tiny_dir, tmp_path):
    d = _copy(tiny_dir, tmp_path)
    with open(d / "skills.csv", "a") as fh:
        fh.write("s5,speak slovene,language\n")
    t = load_taxonomy(d)
    s5 = t.skills[t.skill_index["s5"]]
    assert s5.block_id == "unassigned-language"
    assert t.block_counts_by_type()["language"] == 1


@pytest.mark.parametrize(
    "name, line, match",
    [
        ("relations.csv", "o9,s1,essential", "dangling reference to occupation"),
        ("relations.csv", "o1,s9,essential", "dangling reference to skill"),
        ("relations.csv", "o1,s1,sometimes", "unknown relation"),
        ("relations.csv", "o1,s1", "wrong number of fields"),
        ("skills.csv", "s9,x,skill", "unknown skill_type"),
        ("blocks.csv", "s9,P1", "dangling reference to skill"),
        ("occupations.csv", "o9,x,123", "malformed isco_code"),
    ],
)
def test_malformed_rows(tiny_dir, tmp_path, name, line, match):
    d = _copy(tiny_dir, tmp_path)
    n_lines = len((d / name).read_text().splitlines())
    with open(d / name, "a") as fh:
        fh.write(line + "\n")
    with pytest.raises(DataError, match=match) as exc:
        load_taxonomy(d)
    assert exc.value.line in (None, n_lines + 1)


def test_empty_occupations(tiny_dir, tmp_path):
    d = _copy(tiny_dir, tmp_path)
    write_csv(d / "occupations.csv", "occupation_id,label\n")
    write_csv(d / "relations.csv", "occupation_id,skill_id,relation\n")
    with pytest.raises(DataError, match="empty occupation set"):
        load_taxonomy(d)


def test_missing_header_column(tiny_dir, tmp_path):
    d = _copy(tiny_dir, tmp_path)
    write_csv(d / "blocks.csv", "skill,block_id\ns1,P1\n")
    with pytest.raises(DataError, match="header lacks"):
        load_taxonomy(d)


# -- transitions ---------------------------------------------------------------


def test_transitions_summed(tmp_path):
    p = write_csv(tmp_path / "t.csv", "source_isco,target_isco,count\n2411,2412,5\n2411,2412,3\n2412,2412,4\n")
    table = load_transitions(p)
    assert table.counts[("2411", "2412")] == 8
    assert table.self_transitions == {("2412", "2412"): 4}
    assert table.total == 12


@pytest.mark.parametrize(
    "row, match",
    [("2411,2412,-1", "negative count"), ("2411,2412,x", "non-numeric"), ("241,2412,1", "malformed ISCO")],
)
def test_transitions_errors(tmp_path, row, match):
    p = write_csv(tmp_path / "t.csv", f"source_isco,target_isco,count\n{row}\n")
    with pytest.raises(DataError, match=match):
        load_transitions(p)


def test_transitions_round_trip(tmp_path):
    table = TransitionTable({("1000", "1001"): 3, ("1001", "1000"): 7})
    write_transitions(table, tmp_path / "t.csv")
    assert load_transitions(tmp_path / "t.csv") == table


# -- rankings -------------------------------------------------------------------


def test_rankings_basic(tmp_path):
    p = write_csv(tmp_path / "r.csv", "source_id,rank,target_id\na,2,c\na,1,b\n")
    assert load_external_rankings(p).lists == {"a": ("b", "c")}


def test_rankings_gap(tmp_path):
    p = write_csv(tmp_path / "r.csv", "source_id,rank,target_id\na,1,b\na,3,c\n")
    with pytest.raises(DataError, match="rank gap"):
        load_external_rankings(p)


def test_rankings_duplicate_rank(tmp_path):
    p = write_csv(tmp_path / "r.csv", "source_id,rank,target_id\na,1,b\na,1,c\n")
    with pytest.raises(DataError, match="duplicate"):
        load_external_rankings(p)


def test_rankings_duplicate_target(tmp_path):
    p = write_csv(tmp_path / "r.csv", "source_id,rank,target_id\na,1,b\na,2,b\n")
    with pytest.raises(DataError, match="duplicate target"):
        load_external_rankings(p)


def test_rankings_five_by_twenty(tmp_path):
    lists = {f"src{s}": tuple(f"t{s}_{r}" for r in range(20)) for s in range(5)}
    write_rankings(lists, tmp_path / "r.csv")
    loaded = load_external_rankings(tmp_path / "r.csv").lists
    assert len(loaded) == 5
    assert all(len(v) == 20 for v in loaded.values())
    assert loaded == lists


def test_rankings_unresolvable_rejected(tiny, tmp_path):
    p = write_csv(tmp_path / "r.csv", "source_id,rank,target_id\no1,1,zz\no1,2,o2\nqq,1,o1\n")
    ext = load_external_rankings(p, tiny)
    assert ext.lists == {"o1": ("o2",)}
    assert ext.rejected == 2
