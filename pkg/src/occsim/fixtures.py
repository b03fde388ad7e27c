"""Deterministic test taxonomies and a brute-force reference for every measure.

:func:`oracle_measure` deliberately re-derives everything from the raw
edge sets with plain loops.  It must not call into
:mod:`occsim.projections` or :mod:`occsim.graph` helpers other than the
data classes themselves.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .graph import SKILL_TYPES, Block, Occupation, Skill, Taxonomy


@dataclass(frozen=True)
class FixtureSpec:
    m: int = 5
    n: int = 10
    n_blocks: int = 3
    p_edge: float = 0.4
    p_essential: float = 0.6
    seed: int = 0

    def __post_init__(self) -> None:
        if not (1 <= self.m <= 10 and 1 <= self.n <= 20):
            raise ValueError("fixtures are limited to m <= 10, n <= 20")
        if not 1 <= self.n_blocks <= self.n:
            raise ValueError("need 1 <= n_blocks <= n")
        for p in (self.p_edge, self.p_essential):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")


def _build(m, n, n_blocks, p_edge, p_essential, rng) -> Taxonomy:
    block_of = [k % n_blocks for k in range(n)]
    rng.shuffle(block_of)
    block_type = [rng.choice(SKILL_TYPES) for _ in range(n_blocks)]
    blocks = tuple(Block(f"b{j:03d}", block_type[j]) for j in range(n_blocks))
    skills = tuple(
        Skill(f"s{k:05d}", f"skill {k}", block_type[block_of[k]], blocks[block_of[k]].id)
        for k in range(n)
    )
    occupations = tuple(Occupation(f"o{i:04d}", f"occupation {i}") for i in range(m))
    edges_all, edges_ess = set(), set()
    for i in range(m):
        for k in range(n):
            if rng.random() < p_edge:
                edges_all.add((i, k))
                if rng.random() < p_essential:
                    edges_ess.add((i, k))
    return Taxonomy(occupations, skills, blocks, frozenset(edges_all), frozenset(edges_ess))


def random_taxonomy(spec: FixtureSpec) -> Taxonomy:
    rng = random.Random(spec.seed)
    return _build(spec.m, spec.n, spec.n_blocks, spec.p_edge, spec.p_essential, rng)


def synthetic_taxonomy(
    m: int, n: int, n_blocks: int, n_codes: int, mean_degree: float = 20.0,
    p_essential: float = 0.6, seed: int = 0,
) -> Taxonomy:
    """Larger random taxonomy with ISCO codes for pipeline runs and timing.

    Occupations draw skills mostly from a few home blocks, so similarities
    are structured rather than uniform noise.
    """
    rng = random.Random(seed)
    block_of = [k % n_blocks for k in range(n)]
    rng.shuffle(block_of)
    block_type = [rng.choice(SKILL_TYPES) for _ in range(n_blocks)]
    blocks = tuple(Block(f"b{j:04d}", block_type[j]) for j in range(n_blocks))
    skills = tuple(
        Skill(f"s{k:06d}", f"skill {k}", block_type[block_of[k]], blocks[block_of[k]].id)
        for k in range(n)
    )
    members: list[list[int]] = [[] for _ in range(n_blocks)]
    for k, b in enumerate(block_of):
        members[b].append(k)
    occupations, edges_all, edges_ess = [], set(), set()
    codes = [f"{1000 + 7 * c:04d}" for c in range(n_codes)]
    for i in range(m):
        home = rng.sample(range(n_blocks), k=min(3, n_blocks))
        occupations.append(Occupation(f"o{i:05d}", f"occupation {i}", codes[i % n_codes] if n_codes else None))
        degree = max(1, int(rng.expovariate(1.0 / mean_degree)))
        for _ in range(degree):
            if rng.random() < 0.7:
                pool = members[rng.choice(home)]
                if not pool:
                    continue
                k = rng.choice(pool)
            else:
                k = rng.randrange(n)
            edges_all.add((i, k))
            if rng.random() < p_essential:
                edges_ess.add((i, k))
    return Taxonomy(tuple(occupations), skills, blocks, frozenset(edges_all), frozenset(edges_ess))


def worked_example() -> Taxonomy:
    """Three occupations, four skills, two blocks.

    all: o1 {s1,s2,s3}, o2 {s2,s3}, o3 {s3,s4}
    ess: o1 {s1,s2},    o2 {s2,s3}, o3 {s4}
    blocks: P1 {s1,s2}, P2 {s3,s4}
    """
    blocks = (Block("P1", "core"), Block("P2", "knowledge"))
    skills = (
        Skill("s1", "skill 1", "core", "P1"),
        Skill("s2", "skill 2", "core", "P1"),
        Skill("s3", "skill 3", "knowledge", "P2"),
        Skill("s4", "skill 4", "knowledge", "P2"),
    )
    occupations = (
        Occupation("o1", "occupation 1", "1111"),
        Occupation("o2", "occupation 2", "1111"),
        Occupation("o3", "occupation 3", "2222"),
    )
    edges_all = {(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2), (2, 3)}
    edges_ess = {(0, 0), (0, 1), (1, 1), (1, 2), (2, 3)}
    return Taxonomy(occupations, skills, blocks, frozenset(edges_all), frozenset(edges_ess))


# -- oracle -------------------------------------------------------------------


def _neighbours(t: Taxonomy, i: int, edges) -> set[int]:
    return {k for k in range(t.n) if (i, k) in edges}


def _block_weights(t: Taxonomy, edges) -> list[list[int]]:
    block_pos = {b.id: j for j, b in enumerate(t.blocks)}
    out = [[0] * len(t.blocks) for _ in range(t.m)]
    for i in range(t.m):
        for k in range(t.n):
            if (i, k) in edges:
                out[i][block_pos[t.skills[k].block_id]] += 1
    return out


def _div(a, b) -> float:
    return a / b if b != 0 else 0.0


def oracle_measure(t: Taxonomy, measure: str, i: int, j: int, w=None) -> float:
    """Naive evaluation of one entry d(i -> j).

    ``w`` optionally supplies block weights (an object with
    ``weights_all``/``weights_ess``); otherwise they are counted here.
    """
    measure = getattr(measure, "value", measure)

    if measure in ("jacc_sym", "jacc_multi_sym", "jacc_asym", "jacc"):
        ea, ee = t.edges_all, t.edges_ess
        src = _neighbours(t, i, ea)
        tgt = _neighbours(t, j, ea if measure in ("jacc_sym", "jacc_asym") else ee)
        if measure in ("jacc_sym", "jacc_multi_sym"):
            return _div(len(src & tgt), len(src | tgt))
        return _div(len(src & tgt), len(tgt))

    if measure in ("coll_sym", "coll"):
        ea, ee = t.edges_all, t.edges_ess
        tgt_edges = ea if measure == "coll_sym" else ee
        total = 0.0
        for k in range(t.n):
            num = (1 if (i, k) in ea else 0) * (1 if (j, k) in tgt_edges else 0)
            if num == 0:
                continue
            deg = 0
            for l in range(t.m):
                if (l, k) in tgt_edges:
                    deg += 1
            total += num / max(deg - 1, 1)
        return total

    if w is not None:
        wa = [list(map(int, row)) for row in w.weights_all]
        we = [list(map(int, row)) for row in w.weights_ess]
    else:
        wa, we = _block_weights(t, t.edges_all), _block_weights(t, t.edges_ess)
    n_blocks = len(wa[0]) if wa else 0

    if measure in ("gjacc_sym", "gjacc"):
        tgt = wa if measure == "gjacc_sym" else we
        lo = hi = 0
        for k in range(n_blocks):
            lo += min(wa[i][k], tgt[j][k])
            hi += max(wa[i][k], tgt[j][k])
        return _div(lo, hi)

    if measure in ("colf_sym", "colf"):
        order = wa if measure == "colf_sym" else we
        r_i = 0
        for k in range(n_blocks):
            if order[i][k] > 0:
                r_i += order[i][k]
        if r_i == 0:
            return 0.0
        total = 0.0
        for k in range(n_blocks):
            r_k = 0
            for l in range(len(order)):
                if order[l][k] > 0:
                    r_k += order[l][k]
            if r_k == 0:
                continue
            total += wa[i][k] * order[j][k] / r_k
        return total / r_i

    raise ValueError(f"unknown measure {measure!r}")
