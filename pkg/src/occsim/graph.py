"""Bipartite occupation/skill graphs and their block-weighted forms.

A :class:`Taxonomy` holds the two edge relations of the occupation/skill
multigraph: ``edges_all`` (essential or optional) and ``edges_ess``
(essential only).  :func:`aggregate_blocks` collapses skills into their
blocks, counting edges per (occupation, block).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.sparse as sp

SKILL_TYPES = ("core", "knowledge", "attitude", "language")

EdgeKind = Literal["all", "ess"]


@dataclass(frozen=True)
class Occupation:
    id: str
    label: str
    isco_code: str | None = None


@dataclass(frozen=True)
class Skill:
    id: str
    label: str
    skill_type: str
    block_id: str


@dataclass(frozen=True)
class Block:
    id: str
    skill_type: str


@dataclass(frozen=True)
class Taxonomy:
    """Occupations, skills, skill blocks and the two edge relations.

    Edges are ``(occupation_index, skill_index)`` pairs.  Construction
    checks the structural invariants; loaders in :mod:`occsim.ingest`
    are the usual way to build one.
    """

    occupations: tuple[Occupation, ...]
    skills: tuple[Skill, ...]
    blocks: tuple[Block, ...]
    edges_all: frozenset[tuple[int, int]]
    edges_ess: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        m, n = len(self.occupations), len(self.skills)
        if len({o.id for o in self.occupations}) != m:
            raise ValueError("duplicate occupation ids")
        if len({s.id for s in self.skills}) != n:
            raise ValueError("duplicate skill ids")
        block_ids = {b.id for b in self.blocks}
        if len(block_ids) != len(self.blocks):
            raise ValueError("duplicate block ids")
        for s in self.skills:
            if s.block_id not in block_ids:
                raise ValueError(f"skill {s.id!r} assigned to unknown block {s.block_id!r}")
        for i, k in self.edges_all:
            if not (0 <= i < m and 0 <= k < n):
                raise ValueError(f"edge {(i, k)} out of range")
        if not self.edges_ess <= self.edges_all:
            raise ValueError("edges_ess must be a subset of edges_all")

    @property
    def m(self) -> int:
        return len(self.occupations)

    @property
    def n(self) -> int:
        return len(self.skills)

    @cached_property
    def occupation_ids(self) -> tuple[str, ...]:
        return tuple(o.id for o in self.occupations)

    @cached_property
    def occupation_index(self) -> dict[str, int]:
        return {o.id: i for i, o in enumerate(self.occupations)}

    @cached_property
    def skill_index(self) -> dict[str, int]:
        return {s.id: k for k, s in enumerate(self.skills)}

    @cached_property
    def block_index(self) -> dict[str, int]:
        return {b.id: j for j, b in enumerate(self.blocks)}

    @cached_property
    def skill_block(self) -> np.ndarray:
        """Block index of every skill."""
        idx = self.block_index
        return np.array([idx[s.block_id] for s in self.skills], dtype=np.int64)

    def block_counts_by_type(self) -> dict[str, int]:
        counts = {t: 0 for t in SKILL_TYPES}
        for b in self.blocks:
            counts[b.skill_type] = counts.get(b.skill_type, 0) + 1
        return counts

    def incidence(self, kind: EdgeKind = "all") -> sp.csr_matrix:
        """Biadjacency matrix (m x n, int64 0/1) for the requested relation."""
        return self._incidence_all if kind == "all" else self._incidence_ess

    @cached_property
    def _incidence_all(self) -> sp.csr_matrix:
        return _edges_to_csr(self.edges_all, self.m, self.n)

    @cached_property
    def _incidence_ess(self) -> sp.csr_matrix:
        return _edges_to_csr(self.edges_ess, self.m, self.n)

    def degrees(self, kind: EdgeKind = "all") -> np.ndarray:
        """Occupation degrees under the requested relation."""
        return np.asarray(self.incidence(kind).sum(axis=1)).ravel()

    def skill_degrees(self, kind: EdgeKind = "all") -> np.ndarray:
        return np.asarray(self.incidence(kind).sum(axis=0)).ravel()

    def isolated_occupations(self) -> list[str]:
        deg = self.degrees("all")
        return [o.id for o, d in zip(self.occupations, deg) if d == 0]


def _edges_to_csr(edges, m: int, n: int) -> sp.csr_matrix:
    if edges:
        rows, cols = np.array(sorted(edges), dtype=np.int64).T
    else:
        rows = cols = np.empty(0, dtype=np.int64)
    data = np.ones(len(rows), dtype=np.int64)
    mat = sp.csr_matrix((data, (rows, cols)), shape=(m, n))
    mat.sort_indices()
    return mat


def neighbor_sets(t: Taxonomy, occupation_index: int, edge_kind: EdgeKind = "all") -> set[int]:
    """Skill indices adjacent to an occupation under ``edge_kind``."""
    if not 0 <= occupation_index < t.m:
        raise IndexError(f"occupation index {occupation_index} out of range for m={t.m}")
    if edge_kind not in ("all", "ess"):
        raise ValueError(f"unknown edge kind {edge_kind!r}")
    mat = t.incidence(edge_kind)
    lo, hi = mat.indptr[occupation_index], mat.indptr[occupation_index + 1]
    return set(mat.indices[lo:hi].tolist())


@dataclass(frozen=True)
class BlockWeightedGraph:
    """Per-occupation, per-block edge counts for both edge relations."""

    weights_all: np.ndarray
    weights_ess: np.ndarray
    block_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.weights_all.shape != self.weights_ess.shape:
            raise ValueError("weight matrices must have the same shape")
        if self.weights_all.ndim != 2:
            raise ValueError("weight matrices must be 2-D")
        if (self.weights_all < 0).any() or (self.weights_ess < 0).any():
            raise ValueError("weights must be non-negative")
        if (self.weights_ess > self.weights_all).any():
            raise ValueError("weights_ess must not exceed weights_all")

    @classmethod
    def from_rows(cls, weights_all, weights_ess=None) -> BlockWeightedGraph:
        wa = np.asarray(weights_all, dtype=np.int64)
        we = wa.copy() if weights_ess is None else np.asarray(weights_ess, dtype=np.int64)
        return cls(wa, we)

    @property
    def m(self) -> int:
        return self.weights_all.shape[0]


def aggregate_blocks(t: Taxonomy) -> BlockWeightedGraph:
    """Count, for every occupation, its edges into each skill block."""
    n_blocks = len(t.blocks)
    # skill -> block membership as an n x B 0/1 matrix; counts are E @ membership
    membership = sp.csr_matrix(
        (np.ones(t.n, dtype=np.int64), (np.arange(t.n), t.skill_block)),
        shape=(t.n, n_blocks),
    )
    wa = (t.incidence("all") @ membership).toarray().astype(np.int64)
    we = (t.incidence("ess") @ membership).toarray().astype(np.int64)
    return BlockWeightedGraph(wa, we, tuple(b.id for b in t.blocks))
