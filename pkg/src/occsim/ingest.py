"""Readers and writers for the canonical CSV files.

All files are UTF-8, comma separated, with a mandatory header row:

* ``occupations.csv``: ``occupation_id,label[,isco_code]``
* ``skills.csv``: ``skill_id,label,skill_type``
* ``relations.csv``: ``occupation_id,skill_id,relation``
* ``blocks.csv``: ``skill_id,block_id``
* ``transitions.csv``: ``source_isco,target_isco,count``
* ``rankings.csv``: ``source_id,rank,target_id``
"""

from __future__ import annotations

import csv
import logging
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import DataError
from .graph import SKILL_TYPES, Block, Occupation, Skill, Taxonomy
from .validation import TransitionTable

log = logging.getLogger(__name__)

ISCO_RE = re.compile(r"^\d{4}$")
RELATIONS = ("essential", "optional")
UNASSIGNED_PREFIX = "unassigned-"


@dataclass(frozen=True)
class TaxonomyFiles:
    occupations_path: Path
    skills_path: Path
    relations_path: Path
    blocks_path: Path

    @classmethod
    def from_dir(cls, directory) -> TaxonomyFiles:
        d = Path(directory)
        return cls(d / "occupations.csv", d / "skills.csv", d / "relations.csv", d / "blocks.csv")

    def paths(self) -> tuple[Path, ...]:
        return (self.occupations_path, self.skills_path, self.relations_path, self.blocks_path)


@dataclass(frozen=True)
class ExternalRankingSet:
    """Ranked target lists keyed by source occupation id."""

    lists: dict[str, tuple[str, ...]]
    rejected: int = 0


def _rows(path, required: tuple[str, ...]) -> Iterator[tuple[int, dict[str, str]]]:
    path = Path(path)
    if not path.is_file():
        raise DataError("file not found", path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError("missing header row", path, 1)
        header = [h.strip() for h in reader.fieldnames]
        missing = [c for c in required if c not in header]
        if missing:
            raise DataError(f"header lacks column(s) {', '.join(missing)}", path, 1)
        reader.fieldnames = header
        for row in reader:
            if None in row or any(row.get(c) is None for c in required):
                raise DataError("wrong number of fields", path, reader.line_num)
            yield reader.line_num, {k: (v or "").strip() for k, v in row.items()}


def _require(value: str, name: str, path, line: int) -> str:
    if not value:
        raise DataError(f"empty {name}", path, line)
    return value


def load_taxonomy(files) -> Taxonomy:
    """Parse the four taxonomy CSVs into a :class:`Taxonomy`.

    ``files`` is a :class:`TaxonomyFiles` or a directory holding the
    canonical file names.  Duplicate relation rows are dropped; when a pair
    is listed as both essential and optional, it is kept as essential.
    Skills missing from ``blocks.csv`` go to an ``unassigned-<type>`` block.
    """
    if not isinstance(files, TaxonomyFiles):
        files = TaxonomyFiles.from_dir(files)

    occupations: list[Occupation] = []
    seen_occ: set[str] = set()
    for line, row in _rows(files.occupations_path, ("occupation_id", "label")):
        oid = _require(row["occupation_id"], "occupation_id", files.occupations_path, line)
        if oid in seen_occ:
            raise DataError(f"duplicate occupation id {oid!r}", files.occupations_path, line)
        code = row.get("isco_code") or None
        if code is not None and not ISCO_RE.match(code):
            raise DataError(f"malformed isco_code {code!r}", files.occupations_path, line)
        seen_occ.add(oid)
        occupations.append(Occupation(oid, row["label"], code))
    if not occupations:
        raise DataError("empty occupation set", files.occupations_path)

    raw_skills: list[tuple[str, str, str]] = []
    seen_skill: set[str] = set()
    for line, row in _rows(files.skills_path, ("skill_id", "label", "skill_type")):
        sid = _require(row["skill_id"], "skill_id", files.skills_path, line)
        if sid in seen_skill:
            raise DataError(f"duplicate skill id {sid!r}", files.skills_path, line)
        stype = row["skill_type"]
        if stype not in SKILL_TYPES:
            raise DataError(f"unknown skill_type {stype!r}", files.skills_path, line)
        seen_skill.add(sid)
        raw_skills.append((sid, row["label"], stype))
    skill_type = {sid: stype for sid, _, stype in raw_skills}

    block_of: dict[str, str] = {}
    block_order: list[str] = []
    for line, row in _rows(files.blocks_path, ("skill_id", "block_id")):
        sid = _require(row["skill_id"], "skill_id", files.blocks_path, line)
        bid = _require(row["block_id"], "block_id", files.blocks_path, line)
        if sid not in skill_type:
            raise DataError(f"dangling reference to skill {sid!r}", files.blocks_path, line)
        if sid in block_of and block_of[sid] != bid:
            raise DataError(f"skill in multiple blocks: {sid!r}", files.blocks_path, line)
        block_of[sid] = bid
        if bid not in block_order:
            block_order.append(bid)

    skills = []
    for sid, label, stype in raw_skills:
        if sid not in block_of:
            block_of[sid] = UNASSIGNED_PREFIX + stype
        skills.append(Skill(sid, label, stype, block_of[sid]))
    for s in skills:
        if s.block_id not in block_order:
            block_order.append(s.block_id)
    # a block takes the type of its first listed skill
    first_type: dict[str, str] = {}
    for s in skills:
        first_type.setdefault(s.block_id, s.skill_type)
    blocks = tuple(Block(b, first_type.get(b, "core")) for b in block_order)

    occ_idx = {o.id: i for i, o in enumerate(occupations)}
    skill_idx = {s.id: k for k, s in enumerate(skills)}
    edges_all: set[tuple[int, int]] = set()
    edges_ess: set[tuple[int, int]] = set()
    for line, row in _rows(files.relations_path, ("occupation_id", "skill_id", "relation")):
        oid, sid, rel = row["occupation_id"], row["skill_id"], row["relation"]
        if rel not in RELATIONS:
            raise DataError(f"unknown relation {rel!r}", files.relations_path, line)
        if oid not in occ_idx:
            raise DataError(f"dangling reference to occupation {oid!r}", files.relations_path, line)
        if sid not in skill_idx:
            raise DataError(f"dangling reference to skill {sid!r}", files.relations_path, line)
        pair = (occ_idx[oid], skill_idx[sid])
        edges_all.add(pair)
        if rel == "essential":
            edges_ess.add(pair)

    t = Taxonomy(tuple(occupations), tuple(skills), blocks, frozenset(edges_all), frozenset(edges_ess))
    isolated = t.isolated_occupations()
    if isolated:
        log.warning("%d isolated occupation(s) without any skill", len(isolated))
    return t


def write_taxonomy(t: Taxonomy, directory) -> TaxonomyFiles:
    """Write ``t`` as the four canonical CSVs; inverse of :func:`load_taxonomy`."""
    files = TaxonomyFiles.from_dir(directory)
    Path(directory).mkdir(parents=True, exist_ok=True)
    with open(files.occupations_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["occupation_id", "label", "isco_code"])
        for o in t.occupations:
            w.writerow([o.id, o.label, o.isco_code or ""])
    with open(files.skills_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["skill_id", "label", "skill_type"])
        for s in t.skills:
            w.writerow([s.id, s.label, s.skill_type])
    with open(files.blocks_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["skill_id", "block_id"])
        for s in t.skills:
            w.writerow([s.id, s.block_id])
    with open(files.relations_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["occupation_id", "skill_id", "relation"])
        for i, k in sorted(t.edges_all):
            rel = "essential" if (i, k) in t.edges_ess else "optional"
            w.writerow([t.occupations[i].id, t.skills[k].id, rel])
    return files


def _parse_count(raw: str, path, line: int) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise DataError(f"non-numeric count {raw!r}", path, line) from None
    if value < 0:
        raise DataError(f"negative count {value}", path, line)
    return value


def load_transitions(path) -> TransitionTable:
    """Read ordered ISCO transfer counts; repeated pairs are summed."""
    counts: dict[tuple[str, str], int] = defaultdict(int)
    for line, row in _rows(path, ("source_isco", "target_isco", "count")):
        src, tgt = row["source_isco"], row["target_isco"]
        for code in (src, tgt):
            if not ISCO_RE.match(code):
                raise DataError(f"malformed ISCO code {code!r} (expected 4 digits)", path, line)
        counts[(src, tgt)] += _parse_count(row["count"], path, line)
    return TransitionTable(dict(counts))


def write_transitions(table: TransitionTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_isco", "target_isco", "count"])
        for (src, tgt), c in sorted(table.counts.items()):
            w.writerow([src, tgt, c])


def load_external_rankings(path, taxonomy: Taxonomy | None = None) -> ExternalRankingSet:
    """Read ``source_id,rank,target_id`` rows into per-source ranked lists.

    Ranks for each source must be exactly ``1..k``.  When ``taxonomy`` is
    given, rows naming ids it does not know are dropped and counted in
    ``rejected``; the relative order of the remaining targets is kept.
    """
    by_source: dict[str, dict[int, str]] = defaultdict(dict)
    for line, row in _rows(path, ("source_id", "rank", "target_id")):
        src = _require(row["source_id"], "source_id", path, line)
        tgt = _require(row["target_id"], "target_id", path, line)
        try:
            rank = int(row["rank"])
        except ValueError:
            raise DataError(f"non-numeric rank {row['rank']!r}", path, line) from None
        if rank < 1:
            raise DataError(f"rank must be >= 1, got {rank}", path, line)
        if rank in by_source[src]:
            raise DataError(f"duplicate (source, rank) ({src!r}, {rank})", path, line)
        by_source[src][rank] = tgt

    known = set(taxonomy.occupation_ids) if taxonomy is not None else None
    lists: dict[str, tuple[str, ...]] = {}
    rejected = 0
    for src in sorted(by_source):
        ranks = by_source[src]
        if sorted(ranks) != list(range(1, len(ranks) + 1)):
            raise DataError(f"rank gap in list for source {src!r}", path)
        ordered = [ranks[r] for r in range(1, len(ranks) + 1)]
        if len(set(ordered)) != len(ordered):
            raise DataError(f"duplicate target in list for source {src!r}", path)
        if known is not None:
            if src not in known:
                rejected += len(ordered)
                continue
            kept = [x for x in ordered if x in known]
            rejected += len(ordered) - len(kept)
            ordered = kept
        lists[src] = tuple(ordered)
    if rejected:
        log.warning("%d ranking row(s) reference unknown occupations and were dropped", rejected)
    return ExternalRankingSet(lists, rejected)


def write_rankings(lists: dict[str, tuple[str, ...]], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_id", "rank", "target_id"])
        for src in sorted(lists):
            for r, tgt in enumerate(lists[src], start=1):
                w.writerow([src, r, tgt])
