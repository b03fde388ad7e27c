"""Occupation to ISCO code mapping and max-aggregation of similarity matrices."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .graph import Taxonomy
from .ingest import ISCO_RE, _rows
from .projections import SimilarityMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Crosswalk:
    """Function from occupation id to 4-digit ISCO code.

    ``unmapped`` lists taxonomy occupations without a code; they are left
    out of aggregation.
    """

    mapping: dict[str, str]
    unmapped: tuple[str, ...] = ()

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.mapping.values())))

    @classmethod
    def from_taxonomy(cls, t: Taxonomy) -> Crosswalk:
        """Use the optional ``isco_code`` column of ``occupations.csv``."""
        mapping = {o.id: o.isco_code for o in t.occupations if o.isco_code}
        unmapped = tuple(o.id for o in t.occupations if not o.isco_code)
        return cls(mapping, unmapped)


def load_crosswalk(path, taxonomy: Taxonomy | None = None) -> Crosswalk:
    """Read ``occupation_id,isco_code`` rows.

    Repeating a row is harmless; mapping one occupation to two codes is an
    error.  Rows for occupations the taxonomy does not know are ignored.
    """
    mapping: dict[str, str] = {}
    for line, row in _rows(path, ("occupation_id", "isco_code")):
        oid, code = row["occupation_id"], row["isco_code"]
        if not ISCO_RE.match(code):
            raise DataError(f"malformed ISCO code {code!r}", path, line)
        if mapping.get(oid, code) != code:
            raise DataError(f"occupation {oid!r} mapped to both {mapping[oid]} and {code}", path, line)
        mapping[oid] = code

    unmapped: tuple[str, ...] = ()
    if taxonomy is not None:
        known = set(taxonomy.occupation_ids)
        stray = [oid for oid in mapping if oid not in known]
        if stray:
            log.warning("%d crosswalk row(s) name unknown occupations", len(stray))
            for oid in stray:
                del mapping[oid]
        unmapped = tuple(oid for oid in taxonomy.occupation_ids if oid not in mapping)
        if unmapped:
            log.warning("%d occupation(s) have no ISCO code and are excluded", len(unmapped))
    return Crosswalk(mapping, unmapped)


@dataclass(frozen=True)
class IscoSimilarityMatrix:
    """Code-level similarity; ``NaN`` marks cells with no contributing pair."""

    measure: str
    codes: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        k = len(self.codes)
        if self.values.shape != (k, k):
            raise ValueError(f"values shape {self.values.shape} does not match {k} codes")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("source_id,target_id,value\n")
            for a, src in enumerate(self.codes):
                for b, tgt in enumerate(self.codes):
                    v = self.values[a, b]
                    if a != b and not np.isnan(v):
                        fh.write(f"{src},{tgt},{float(v)!r}\n")


def aggregate_to_isco(sim: SimilarityMatrix, cw: Crosswalk) -> IscoSimilarityMatrix:
    """Code-level matrix: d(m, n) = max d(i, j) over f(i) = m, f(j) = n, i != j."""
    codes = cw.codes
    code_idx = {c: a for a, c in enumerate(codes)}
    rows = [i for i, oid in enumerate(sim.ids) if oid in cw.mapping]
    if not rows:
        raise DataError("crosswalk shares no occupation with the similarity matrix")
    groups = np.array([code_idx[cw.mapping[sim.ids[i]]] for i in rows])
    # group rows by code so that each code is one contiguous run
    order = np.argsort(groups, kind="stable")
    rows = np.asarray(rows)[order]
    groups = groups[order]

    sub = sim.values[np.ix_(rows, rows)].astype(np.float64, copy=True)
    np.fill_diagonal(sub, -np.inf)
    starts = np.flatnonzero(np.r_[True, groups[1:] != groups[:-1]])
    present = groups[starts]
    reduced = np.maximum.reduceat(np.maximum.reduceat(sub, starts, axis=0), starts, axis=1)
    reduced[np.isneginf(reduced)] = np.nan

    values = np.full((len(codes), len(codes)), np.nan)
    values[np.ix_(present, present)] = reduced
    if np.isnan(values).all():
        raise DataError("no ISCO cell has a contributing occupation pair")
    return IscoSimilarityMatrix(sim.measure, codes, values)
