"""Occupation-to-occupation projections of the occupation/skill graphs.

Ten measures are available (see :class:`Measure`).  ``jacc_sym``,
``jacc_asym``, ``coll_sym``, ``gjacc_sym`` and ``colf_sym`` read
``edges_all`` on both sides; the other five take the source occupation's
full skill set and the target's essential skills only.  Jaccard and
collaboration measures work on skills, generalised Jaccard and
collaborative filtering on block counts.

Every ratio with a zero denominator evaluates to 0.
"""

from __future__ import annotations

import enum
import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .graph import BlockWeightedGraph, Taxonomy, aggregate_blocks, neighbor_sets

CHUNK_ROWS = 256
BIN_MAGIC = b"OCSM1\n"


class Measure(str, enum.Enum):
    JACC_SYM = "jacc_sym"
    JACC_MULTI_SYM = "jacc_multi_sym"
    JACC_ASYM = "jacc_asym"
    JACC = "jacc"
    COLL_SYM = "coll_sym"
    COLL = "coll"
    GJACC_SYM = "gjacc_sym"
    GJACC = "gjacc"
    COLF_SYM = "colf_sym"
    COLF = "colf"

    @property
    def symmetric(self) -> bool:
        return self in (Measure.JACC_SYM, Measure.COLL_SYM, Measure.GJACC_SYM)

    @property
    def uses_blocks(self) -> bool:
        return self in (Measure.GJACC_SYM, Measure.GJACC, Measure.COLF_SYM, Measure.COLF)

    @property
    def jaccard_family(self) -> bool:
        return self.value.startswith(("jacc", "gjacc"))

    @classmethod
    def parse(cls, name: str) -> Measure:
        try:
            return cls(name)
        except ValueError:
            raise ValueError(
                f"unknown measure {name!r}; choose from {', '.join(m.value for m in cls)}"
            ) from None


@dataclass(frozen=True)
class SimilarityMatrix:
    """Dense m x m similarity values; ``values[i, j]`` is d(ids[i] -> ids[j]).

    The diagonal is computed but never used for ranking or export.
    """

    measure: str
    ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        m = len(self.ids)
        if self.values.shape != (m, m):
            raise ValueError(f"values shape {self.values.shape} does not match {m} ids")

    def index(self, occupation_id: str) -> int:
        try:
            return self.ids.index(occupation_id)
        except ValueError:
            raise KeyError(occupation_id) from None

    def to_csv(self, path) -> None:
        """Write ``source_id,target_id,value`` rows, diagonal omitted."""
        ids = self.ids
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("source_id,target_id,value\n")
            for i, src in enumerate(ids):
                row = self.values[i].tolist()
                fh.write("".join(
                    f"{src},{ids[j]},{row[j]!r}\n" for j in range(len(ids)) if j != i
                ))

    def to_bin(self, path) -> None:
        """Binary cache: magic, u64 header length, JSON id manifest, '<f8' row-major."""
        header = json.dumps({"measure": self.measure, "ids": list(self.ids)}).encode()
        with open(path, "wb") as fh:
            fh.write(BIN_MAGIC)
            fh.write(struct.pack("<Q", len(header)))
            fh.write(header)
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def from_bin(cls, path) -> SimilarityMatrix:
        with open(path, "rb") as fh:
            if fh.read(len(BIN_MAGIC)) != BIN_MAGIC:
                raise ValueError(f"{path}: not a similarity matrix cache")
            (hlen,) = struct.unpack("<Q", fh.read(8))
            header = json.loads(fh.read(hlen))
            m = len(header["ids"])
            values = np.frombuffer(fh.read(8 * m * m), dtype="<f8").reshape(m, m)
        return cls(header["measure"], tuple(header["ids"]), values.astype(np.float64))


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


# -- per-pair forms -----------------------------------------------------------


def jaccard_symmetric(t: Taxonomy, i: int, j: int) -> float:
    a, b = neighbor_sets(t, i, "all"), neighbor_sets(t, j, "all")
    return _ratio(len(a & b), len(a | b))


def jaccard_multi_symmetric(t: Taxonomy, i: int, j: int) -> float:
    a, b = neighbor_sets(t, i, "all"), neighbor_sets(t, j, "ess")
    return _ratio(len(a & b), len(a | b))


def jaccard_asym(t: Taxonomy, i: int, j: int) -> float:
    a, b = neighbor_sets(t, i, "all"), neighbor_sets(t, j, "all")
    return _ratio(len(a & b), len(b))


def jaccard_final(t: Taxonomy, i: int, j: int) -> float:
    a, b = neighbor_sets(t, i, "all"), neighbor_sets(t, j, "ess")
    return _ratio(len(a & b), len(b))


def _collab_weights(deg: np.ndarray) -> np.ndarray:
    # 1 / max(deg - 1, 1): a skill reached by one occupation only gets weight 1
    return 1.0 / np.maximum(deg - 1, 1)


def collaboration_symmetric(t: Taxonomy, i: int, j: int) -> float:
    weights = _collab_weights(t.skill_degrees("all"))
    shared = neighbor_sets(t, i, "all") & neighbor_sets(t, j, "all")
    return float(sum(weights[k] for k in sorted(shared)))


def collaboration(t: Taxonomy, i: int, j: int) -> float:
    weights = _collab_weights(t.skill_degrees("ess"))
    shared = neighbor_sets(t, i, "all") & neighbor_sets(t, j, "ess")
    return float(sum(weights[k] for k in sorted(shared)))


def gjaccard_symmetric(w: BlockWeightedGraph, i: int, j: int) -> float:
    a, b = w.weights_all[i], w.weights_all[j]
    return _ratio(int(np.minimum(a, b).sum()), int(np.maximum(a, b).sum()))


def gjaccard(w: BlockWeightedGraph, i: int, j: int) -> float:
    a, b = w.weights_all[i], w.weights_ess[j]
    return _ratio(int(np.minimum(a, b).sum()), int(np.maximum(a, b).sum()))


def _colf_pair(src: np.ndarray, tgt: np.ndarray, order: np.ndarray, i: int) -> float:
    r_i = order[i, :].sum()
    if r_i == 0:
        return 0.0
    r_k = order.sum(axis=0)
    terms = [src[k] * tgt[k] / r_k[k] for k in range(len(src)) if r_k[k] > 0 and src[k] and tgt[k]]
    return float(sum(terms)) / float(r_i)


def colf_symmetric(w: BlockWeightedGraph, i: int, j: int) -> float:
    return _colf_pair(w.weights_all[i], w.weights_all[j], w.weights_all, i)


def colf(w: BlockWeightedGraph, i: int, j: int) -> float:
    return _colf_pair(w.weights_all[i], w.weights_ess[j], w.weights_ess, i)


# -- full matrices ------------------------------------------------------------


def _jaccard_rows(t: Taxonomy, measure: Measure):
    src = t.incidence("all")
    tgt = t.incidence("all" if measure in (Measure.JACC_SYM, Measure.JACC_ASYM) else "ess")
    tgt_t = tgt.T.tocsr()
    deg_src = np.asarray(src.sum(axis=1)).ravel()
    deg_tgt = np.asarray(tgt.sum(axis=1)).ravel()
    union = measure in (Measure.JACC_SYM, Measure.JACC_MULTI_SYM)

    def rows(lo: int, hi: int) -> np.ndarray:
        inter = (src[lo:hi] @ tgt_t).toarray()
        if union:
            den = deg_src[lo:hi, None] + deg_tgt[None, :] - inter
        else:
            den = np.broadcast_to(deg_tgt[None, :], inter.shape)
        out = np.zeros(inter.shape, dtype=np.float64)
        np.divide(inter, den, out=out, where=den > 0)
        return out

    return rows


def _collaboration_rows(t: Taxonomy, measure: Measure):
    src = t.incidence("all")
    tgt = t.incidence("all" if measure is Measure.COLL_SYM else "ess")
    weights = _collab_weights(np.asarray(tgt.sum(axis=0)).ravel())
    weighted_t = (tgt.multiply(weights[None, :])).T.tocsr()

    def rows(lo: int, hi: int) -> np.ndarray:
        return (src[lo:hi].astype(np.float64) @ weighted_t).toarray()

    return rows


def _gjaccard_rows(w: BlockWeightedGraph, measure: Measure):
    wa = w.weights_all
    wt = wa if measure is Measure.GJACC_SYM else w.weights_ess
    sum_src, sum_tgt = wa.sum(axis=1), wt.sum(axis=1)
    top = int(max(wa.max(initial=0), wt.max(initial=0)))
    # sum_k min(a_k, b_k) = sum_{l>=1} #{k : a_k >= l and b_k >= l}; exact in integers
    levels_src = [sp.csr_matrix((wa >= lvl).astype(np.int64)) for lvl in range(1, top + 1)]
    levels_tgt = [sp.csr_matrix((wt >= lvl).astype(np.int64)).T.tocsr() for lvl in range(1, top + 1)]

    def rows(lo: int, hi: int) -> np.ndarray:
        mins = np.zeros((hi - lo, wt.shape[0]), dtype=np.int64)
        for a, b in zip(levels_src, levels_tgt):
            mins += (a[lo:hi] @ b).toarray()
        maxs = sum_src[lo:hi, None] + sum_tgt[None, :] - mins
        out = np.zeros(mins.shape, dtype=np.float64)
        np.divide(mins, maxs, out=out, where=maxs > 0)
        return out

    return rows


def _colf_rows(w: BlockWeightedGraph, measure: Measure):
    wa = w.weights_all
    wt = wa if measure is Measure.COLF_SYM else w.weights_ess
    r_occ = wt.sum(axis=1)
    r_block = wt.sum(axis=0)
    inv_block = np.zeros(r_block.shape, dtype=np.float64)
    np.divide(1.0, r_block, out=inv_block, where=r_block > 0)
    src = sp.csr_matrix(wa.astype(np.float64))
    tgt_scaled = sp.csr_matrix(wt.astype(np.float64) * inv_block[None, :]).T.tocsr()

    def rows(lo: int, hi: int) -> np.ndarray:
        acc = (src[lo:hi] @ tgt_scaled).toarray()
        r = r_occ[lo:hi, None].astype(np.float64)
        out = np.zeros(acc.shape, dtype=np.float64)
        np.divide(acc, r, out=out, where=r > 0)
        return out

    return rows


def project(
    t: Taxonomy,
    w: BlockWeightedGraph | None = None,
    measure: Measure | str = Measure.JACC,
    workers: int = 1,
) -> SimilarityMatrix:
    """Compute the full m x m matrix for ``measure``.

    Rows are evaluated in fixed-size chunks, optionally on a thread pool;
    chunk boundaries do not depend on ``workers``, so the result is
    identical for every worker count.
    """
    measure = Measure.parse(measure) if isinstance(measure, str) else measure
    if measure.uses_blocks and w is None:
        w = aggregate_blocks(t)

    if measure in (Measure.JACC_SYM, Measure.JACC_MULTI_SYM, Measure.JACC_ASYM, Measure.JACC):
        rows = _jaccard_rows(t, measure)
    elif measure in (Measure.COLL_SYM, Measure.COLL):
        rows = _collaboration_rows(t, measure)
    elif measure in (Measure.GJACC_SYM, Measure.GJACC):
        rows = _gjaccard_rows(w, measure)
    else:
        rows = _colf_rows(w, measure)

    m = t.m
    values = np.zeros((m, m), dtype=np.float64)
    chunks = [(lo, min(lo + CHUNK_ROWS, m)) for lo in range(0, m, CHUNK_ROWS)]

    def fill(bounds):
        lo, hi = bounds
        values[lo:hi] = rows(lo, hi)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, chunks))
    else:
        for c in chunks:
            fill(c)

    if measure.symmetric:
        upper = np.triu(values)
        values = upper + np.triu(values, 1).T
    return SimilarityMatrix(measure.value, t.occupation_ids, values)


def _ranking_order(sim: SimilarityMatrix) -> np.ndarray:
    # position of each id in ascending-id order, the tie-breaker
    order = np.argsort(np.array(sim.ids, dtype=object), kind="stable")
    tie = np.empty(len(order), dtype=np.int64)
    tie[order] = np.arange(len(order))
    return tie


def rank_row(sim: SimilarityMatrix, i: int, k: int | None = None, _tie=None) -> tuple[str, ...]:
    m = len(sim.ids)
    tie = _ranking_order(sim) if _tie is None else _tie
    row = sim.values[i]
    order = np.lexsort((tie, -row))
    order = order[order != i]
    if k is not None:
        order = order[: max(0, min(k, m - 1))]
    return tuple(sim.ids[j] for j in order)


def rank_from_matrix(sim: SimilarityMatrix, source_id: str, k: int | None = None) -> tuple[str, ...]:
    """Top-``k`` targets for ``source_id`` by descending similarity.

    The source itself is excluded; ties go to the smaller occupation id;
    ``k`` larger than ``m - 1`` is clamped and ``None`` returns all.
    """
    return rank_row(sim, sim.index(source_id), k)


def rank_all(sim: SimilarityMatrix, k: int | None = None) -> dict[str, tuple[str, ...]]:
    tie = _ranking_order(sim)
    return {sid: rank_row(sim, i, k, tie) for i, sid in enumerate(sim.ids)}
