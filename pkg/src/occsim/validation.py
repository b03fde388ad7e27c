"""Validation of a code-level similarity measure against observed transfers.

Observed ordered code pairs are split into *rare* (fewer than
``rare_threshold`` transfers, the negative class) and *common* (the
positive class).  Similarities are rescaled by a high percentile, a
threshold is picked to reach a target true-negative rate on the rare
class, and a ROC curve is swept over all distinct rescaled values.

Two modes decide what one observation is:

``transfers``
    every observed transfer, i.e. pair (m, n) counts ``N[m, n]`` times;
``pairs``
    every ordered pair of distinct codes with a defined similarity counts
    once; pairs never observed are rare.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

import numpy as np

from .errors import ValidationError

if TYPE_CHECKING:
    from .crosswalk import IscoSimilarityMatrix

MODES = ("transfers", "pairs")


@dataclass(frozen=True)
class TransitionTable:
    """Transfer counts keyed by ordered ``(source_isco, target_isco)``."""

    counts: dict[tuple[str, str], int]

    def __post_init__(self) -> None:
        for pair, c in self.counts.items():
            if c < 0:
                raise ValueError(f"negative count for {pair}")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def self_transitions(self) -> dict[tuple[str, str], int]:
        return {p: c for p, c in self.counts.items() if p[0] == p[1]}

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(sorted({c for pair in self.counts for c in pair}))


@dataclass(frozen=True)
class ValidationConfig:
    rare_threshold: int = 20
    norm_percentile: float = 98.0
    target_tnr: float = 0.65
    bins: int = 50
    mode: str = "transfers"

    def __post_init__(self) -> None:
        if self.rare_threshold < 1:
            raise ValueError("rare_threshold must be >= 1")
        if not 0 < self.norm_percentile < 100:
            raise ValueError("norm_percentile must lie in (0, 100)")
        if not 0 < self.target_tnr < 1:
            raise ValueError("target_tnr must lie in (0, 1)")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


def _weights(values: np.ndarray, weights) -> np.ndarray:
    if weights is None:
        return np.ones(len(values), dtype=np.int64)
    w = np.asarray(weights)
    if w.shape != values.shape:
        raise ValueError("weights must match values")
    return w


def nearest_rank_quantile(values, percentile: float, weights=None) -> float:
    """Smallest value whose cumulative weight reaches ``percentile`` % of the total."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("empty input")
    w = _weights(v, weights)
    order = np.argsort(v, kind="stable")
    cum = np.cumsum(w[order])
    # rounding guards against 0.98 * 100 style representation error
    rank = max(1, math.ceil(round(percentile * float(cum[-1]) / 100.0, 9)))
    pos = int(np.searchsorted(cum, rank, side="left"))
    return float(v[order][min(pos, len(v) - 1)])


def normalize_values(values, percentile: float = 98.0, weights=None) -> np.ndarray:
    """Map values onto [0, 1] by dividing by the nearest-rank percentile.

    Values above the percentile clamp to 1.  If the percentile value is 0
    every value maps to 0 (non-negative input assumed).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("empty input")
    if not np.isfinite(v).all():
        raise ValueError("values must be finite")
    q = nearest_rank_quantile(v, percentile, weights)
    if q <= 0:
        return np.zeros_like(v)
    return np.minimum(v / q, 1.0)


def select_threshold(rare_values, target_tnr: float = 0.65, weights=None) -> tuple[float, float]:
    """Pick the smallest observed value ``t`` with TNR(t) >= ``target_tnr``.

    TNR(t) is the (weighted) share of rare observations strictly below
    ``t``.  If no observed value gets there, ``t`` is placed just above the
    maximum, making the TNR 1.  Returns ``(t, realized_tnr)``.
    """
    v = np.asarray(rare_values, dtype=np.float64)
    if v.size == 0:
        raise ValidationError("rare class is empty")
    w = _weights(v, weights)
    uniq, inv = np.unique(v, return_inverse=True)
    per_value = np.bincount(inv, weights=w, minlength=len(uniq))
    total = per_value.sum()
    below = np.concatenate([[0.0], np.cumsum(per_value)[:-1]])
    ok = np.flatnonzero(below / total >= target_tnr)
    if ok.size:
        k = int(ok[0])
        return float(uniq[k]), float(below[k] / total)
    return float(np.nextafter(uniq[-1], np.inf)), 1.0


@dataclass
class ValidationReport:
    measure: str
    mode: str
    config: ValidationConfig
    threshold: float
    tnr: float
    tpr: float
    auc: float
    n_rare: float
    n_common: float
    n_rare_pairs: int
    n_common_pairs: int
    normalization_quantile: float
    excluded_pairs: int
    excluded_transfers: int
    self_transitions: int
    roc_fpr: np.ndarray = field(repr=False)
    roc_tpr: np.ndarray = field(repr=False)
    roc_thresholds: np.ndarray = field(repr=False)
    hist_edges: np.ndarray = field(repr=False)
    hist_rare: np.ndarray = field(repr=False)
    hist_common: np.ndarray = field(repr=False)

    @property
    def n_observations(self) -> float:
        return self.n_rare + self.n_common

    def summary(self) -> dict:
        return {
            "measure": self.measure,
            "mode": self.mode,
            "rare_threshold": self.config.rare_threshold,
            "norm_percentile": self.config.norm_percentile,
            "target_tnr": self.config.target_tnr,
            "bins": self.config.bins,
            "threshold": self.threshold,
            "tnr": self.tnr,
            "tpr": self.tpr,
            "auc": self.auc,
            "observations": _num(self.n_observations),
            "rare_observations": _num(self.n_rare),
            "common_observations": _num(self.n_common),
            "rare_pairs": self.n_rare_pairs,
            "common_pairs": self.n_common_pairs,
            "normalization_quantile": self.normalization_quantile,
            "excluded_pairs": self.excluded_pairs,
            "excluded_transfers": self.excluded_transfers,
            "self_transitions": self.self_transitions,
        }


def _num(x: float):
    return int(x) if float(x).is_integer() else float(x)


def roc_curve(neg_values, pos_values, neg_weights=None, pos_weights=None):
    """ROC points and AUC from raw observations.

    Sweeps every distinct value ``t`` from high to low; TPR and FPR are the
    shares of positives and negatives with value >= ``t``.  The AUC is the
    trapezoid area of the resulting polyline, accumulated on raw weight
    sums so that integer weights give exact extremes.
    Returns ``(fpr, tpr, thresholds, auc)``; the first point is (0, 0) at
    threshold +inf.
    """
    neg = np.asarray(neg_values, dtype=np.float64)
    pos = np.asarray(pos_values, dtype=np.float64)
    if neg.size == 0 or pos.size == 0:
        raise ValidationError("ROC undefined: one class is empty")
    wn, wp = _weights(neg, neg_weights), _weights(pos, pos_weights)
    uniq = np.unique(np.concatenate([neg, pos]))[::-1]
    # per distinct value, descending
    n_at = np.zeros(len(uniq))
    p_at = np.zeros(len(uniq))
    idx_n = len(uniq) - 1 - np.searchsorted(uniq[::-1], neg)
    idx_p = len(uniq) - 1 - np.searchsorted(uniq[::-1], pos)
    np.add.at(n_at, idx_n, wn)
    np.add.at(p_at, idx_p, wp)
    cum_n = np.concatenate([[0.0], np.cumsum(n_at)])
    cum_p = np.concatenate([[0.0], np.cumsum(p_at)])
    tot_n, tot_p = cum_n[-1], cum_p[-1]
    area = float(np.sum(np.diff(cum_n) * (cum_p[:-1] + cum_p[1:]))) / 2.0
    auc = area / (tot_n * tot_p)
    thresholds = np.concatenate([[np.inf], uniq])
    return cum_n / tot_n, cum_p / tot_p, thresholds, auc


def evaluate(sim: IscoSimilarityMatrix, trans: TransitionTable, cfg: ValidationConfig = ValidationConfig()) -> ValidationReport:
    """Classify rare/common pairs by similarity and report threshold, TNR/TPR and ROC."""
    code_idx = {c: a for a, c in enumerate(sim.codes)}
    values = sim.values
    self_tr = 0
    excluded_pairs = excluded_transfers = 0
    observed: dict[tuple[int, int], int] = {}
    for (src, tgt), n in sorted(trans.counts.items()):
        if src == tgt:
            self_tr += n
            continue
        a, b = code_idx.get(src), code_idx.get(tgt)
        if a is None or b is None or np.isnan(values[a, b]):
            excluded_pairs += 1
            excluded_transfers += n
            continue
        observed[(a, b)] = n

    if cfg.mode == "transfers":
        pairs = sorted(p for p, n in observed.items() if n > 0)
        counts = np.array([observed[p] for p in pairs], dtype=np.int64)
        weights = counts
    else:
        k = len(sim.codes)
        aa, bb = np.nonzero(~np.isnan(values) & ~np.eye(k, dtype=bool))
        pairs = list(zip(aa.tolist(), bb.tolist()))
        counts = np.array([observed.get(p, 0) for p in pairs], dtype=np.int64)
        weights = np.ones(len(pairs), dtype=np.int64)

    if not pairs:
        raise ValidationError("no observation shares the similarity matrix's code space")
    raw = np.array([values[a, b] for a, b in pairs], dtype=np.float64)
    quantile = nearest_rank_quantile(raw, cfg.norm_percentile, weights)
    normed = normalize_values(raw, cfg.norm_percentile, weights)
    rare = counts < cfg.rare_threshold
    if rare.all() or not rare.any():
        which = "common" if rare.all() else "rare"
        raise ValidationError(f"ROC undefined: the {which} class is empty")

    t, tnr = select_threshold(normed[rare], cfg.target_tnr, weights[rare])
    w_common = weights[~rare]
    tpr = float(w_common[normed[~rare] >= t].sum() / w_common.sum())
    fpr, tpr_curve, thr, auc = roc_curve(normed[rare], normed[~rare], weights[rare], weights[~rare])

    edges = np.linspace(0.0, 1.0, cfg.bins + 1)
    hist_rare, _ = np.histogram(normed[rare], bins=edges, weights=weights[rare], density=True)
    hist_common, _ = np.histogram(normed[~rare], bins=edges, weights=weights[~rare], density=True)

    return ValidationReport(
        measure=sim.measure,
        mode=cfg.mode,
        config=cfg,
        threshold=t,
        tnr=tnr,
        tpr=tpr,
        auc=auc,
        n_rare=float(weights[rare].sum()),
        n_common=float(weights[~rare].sum()),
        n_rare_pairs=int(rare.sum()),
        n_common_pairs=int((~rare).sum()),
        normalization_quantile=quantile,
        excluded_pairs=excluded_pairs,
        excluded_transfers=excluded_transfers,
        self_transitions=self_tr,
        roc_fpr=fpr,
        roc_tpr=tpr_curve,
        roc_thresholds=thr,
        hist_edges=edges,
        hist_rare=hist_rare,
        hist_common=hist_common,
    )


@dataclass(frozen=True)
class PowerLink:
    """Monotone link ``x -> x**exponent + eps`` for the transfer generator."""

    exponent: float = 2.0
    eps: float = 1e-3

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.power(x, self.exponent) + self.eps


def generate_transitions(
    sim: IscoSimilarityMatrix,
    total: int,
    seed: int = 0,
    link: Callable[[np.ndarray], np.ndarray] | None = None,
    percentile: float = 98.0,
) -> TransitionTable:
    """Sample ``total`` synthetic transfers between distinct codes.

    Pair probabilities are proportional to ``link`` applied to the
    percentile-normalised similarity (default ``x**2 + 1e-3``).  Cells
    without a similarity value never receive transfers.
    """
    if total < 1:
        raise ValueError("total must be >= 1")
    link = PowerLink() if link is None else link
    k = len(sim.codes)
    if k == 0:
        raise ValueError("similarity matrix is empty")
    aa, bb = np.nonzero(~np.isnan(sim.values) & ~np.eye(k, dtype=bool))
    if aa.size == 0:
        raise ValueError("similarity matrix has no off-diagonal values")
    normed = normalize_values(sim.values[aa, bb], percentile)
    mass = np.asarray(link(normed), dtype=np.float64)
    if (mass < 0).any() or not np.isfinite(mass).all():
        raise ValueError("link must return finite non-negative weights")
    if mass.sum() <= 0:
        raise ValueError("link assigns zero weight to every pair; no valid distribution")
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(total, mass / mass.sum())
    counts = {
        (sim.codes[a], sim.codes[b]): int(c)
        for a, b, c in zip(aa.tolist(), bb.tolist(), draws.tolist())
        if c > 0
    }
    return TransitionTable(counts)
