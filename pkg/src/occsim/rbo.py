"""Rank-biased overlap between ranked lists.

Truncated RBO: ``(1 - p) * sum_{d=1..D} p**(d-1) * A_d`` where ``A_d`` is
the overlap of the depth-``d`` prefixes divided by ``d`` and ``D`` is the
shorter list length (or ``max_depth``).  The unevaluated tail can add at
most ``p**D``, returned as the residual.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

RankedList = Sequence[str]


@dataclass(frozen=True)
class RboConfig:
    p: float = 0.9
    max_depth: int | None = None

    def __post_init__(self) -> None:
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")


def _check_list(lst: RankedList, name: str) -> None:
    if len(lst) == 0:
        raise ValueError(f"{name} is empty")
    if len(set(lst)) != len(lst):
        raise ValueError(f"{name} contains duplicate ids")


def rbo(l1: RankedList, l2: RankedList, cfg: RboConfig = RboConfig()) -> tuple[float, float]:
    """Return ``(value, residual)`` for two duplicate-free rankings."""
    _check_list(l1, "l1")
    _check_list(l2, "l2")
    p = cfg.p
    depth = min(len(l1), len(l2))
    if cfg.max_depth is not None:
        depth = min(depth, cfg.max_depth)

    seen1: set = set()
    seen2: set = set()
    overlap = 0
    agree = 0.0  # sum p^(d-1) * A_d
    disagree = 0.0  # sum p^(d-1) * (1 - A_d)
    weight = 1.0
    for d in range(1, depth + 1):
        a, b = l1[d - 1], l2[d - 1]
        if a == b:
            overlap += 1
        else:
            overlap += (a in seen2) + (b in seen1)
        seen1.add(a)
        seen2.add(b)
        if overlap:
            agree += weight * overlap / d
        if overlap != d:
            disagree += weight * (d - overlap) / d
        weight *= p

    residual = p**depth
    # both forms are equal in exact arithmetic; the one built from the
    # smaller sum loses less to rounding (and is exact at the extremes)
    if agree <= disagree:
        value = (1 - p) * agree
    else:
        value = (1 - residual) - (1 - p) * disagree
    return min(max(value, 0.0), 1.0), residual


def rbo_weight(p: float, d: int) -> float:
    """Share of the (infinite) RBO weight carried by the top ``d`` ranks."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if d < 1:
        raise ValueError(f"depth must be >= 1, got {d}")
    if d <= 8:
        head = sum(p**i / i for i in range(1, d))
        tail = math.log(1 / (1 - p)) - head
    else:
        # ln(1/(1-p)) - sum_{i<d} p^i/i == sum_{i>=d} p^i/i; the direct
        # tail avoids cancellation once the head is close to the log
        tail, term, i = 0.0, p**d / d, d
        while term > 1e-18 * tail or tail == 0.0:
            tail += term
            i += 1
            term = p**i / i
            if term == 0.0:
                break
    return 1 - p ** (d - 1) + (d * (1 - p) / p) * tail


@dataclass(frozen=True)
class RboDistribution:
    values: list[tuple[str, float]]
    only_in_a: int = 0
    only_in_b: int = 0
    residuals: list[float] = field(default_factory=list)

    def histogram(self, bins: int = 50) -> list[tuple[float, float, float]]:
        return density_histogram([v for _, v in self.values], bins)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["source_id", "rbo"])
            for src, v in self.values:
                w.writerow([src, repr(v)])


def density_histogram(values, bins: int, weights=None) -> list[tuple[float, float, float]]:
    """``(bin_left, bin_right, density)`` over [0, 1]; zero density for no data."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _ = np.histogram(np.asarray(values, dtype=float), bins=edges, weights=weights)
    total = counts.sum()
    width = 1.0 / bins
    dens = counts / (total * width) if total > 0 else np.zeros_like(counts, dtype=float)
    return [(float(edges[b]), float(edges[b + 1]), float(dens[b])) for b in range(bins)]


def write_histogram(hist, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "density"])
        for left, right, dens in hist:
            w.writerow([repr(left), repr(right), repr(dens)])


def rbo_distribution(
    set_a: Mapping[str, RankedList],
    set_b: Mapping[str, RankedList],
    cfg: RboConfig = RboConfig(),
    workers: int = 1,
) -> RboDistribution:
    """One RBO value per source present in both sets, sorted by source id."""
    shared = sorted(set(set_a) & set(set_b))
    if not shared:
        raise ValueError("the two ranking sets share no source occupation")

    def one(src):
        return rbo(set_a[src], set_b[src], cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, shared))
    else:
        results = [one(s) for s in shared]
    return RboDistribution(
        values=[(s, v) for s, (v, _) in zip(shared, results)],
        only_in_a=len(set(set_a) - set(set_b)),
        only_in_b=len(set(set_b) - set(set_a)),
        residuals=[r for _, r in results],
    )
