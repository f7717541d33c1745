"""K-fold error-function estimation and exhaustive relevant-subset search.

The estimator scores a factor subset by a K-fold cross-validated,
penalty-weighted misclassification estimate.  Per class, the sample positions
are cut into K ordered blocks; for each held-out block a plug-in rule is
trained on the rest: per-class frequency tables of the projected factor
values, combined with a prevalence pair into an estimate of
P(Y = 1 | X_subset) that is thresholded against the penalty boundary.  The
estimate is

    (2/K) * sum over classes y and folds k of
        weight(y) * (held-out misclassification fraction of class y in fold k)

where weight(y) is psi_hat(y) * P_hat(y), which is identically 1 under the
natural penalty.  Cells never seen in training score 0/0 := 0 and predict -1;
a held-out block with no members of a class contributes 0.

Both the stratified and the i.i.d. variants share this structure.  For
stratified samples the blocks live inside each class's arrival order and the
prevalence comes from outside the sample (known, stream-frequency or
external).  For i.i.d. samples the blocks are cut from the raw arrival order,
each class block is the fold's members of that class, and when the case rate
is unknown it is re-estimated from the training folds of each split.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .exact import PenaltySpec
from .stratify import PrevalenceEstimate, StratifiedSample


class ClassTooSmallError(ValueError):
    """A class has fewer members than the number of folds."""


@dataclass(frozen=True)
class IidSample:
    """Plain i.i.d. observations in arrival order."""

    x: np.ndarray  # (size, n) genotypes
    y: np.ndarray  # (size,) labels in {-1, +1}

    def __post_init__(self):
        if self.x.ndim != 2 or self.y.ndim != 1 or self.x.shape[0] != self.y.shape[0]:
            raise ValueError("x must be (size, n) and y (size,) with matching size")

    @property
    def size(self) -> int:
        return self.y.shape[0]

    @property
    def n_factors(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class FoldPartition:
    """Per-class ordered K-way split of sample positions.

    Blocks are half-open (start, stop) ranges over 0-based positions within
    each class; blocks 1..K-1 have floor(N_y/K) positions and the last block
    absorbs the remainder.
    """

    k_folds: int
    case_blocks: tuple[tuple[int, int], ...]
    control_blocks: tuple[tuple[int, int], ...]

    def indices(self, y: int, k: int) -> range:
        start, stop = (self.case_blocks if y == 1 else self.control_blocks)[k]
        return range(start, stop)


def fold_block_bounds(count: int, k_folds: int) -> tuple[tuple[int, int], ...]:
    """(start, stop) bounds of K ordered blocks over ``count`` positions."""
    if k_folds < 2:
        raise ValueError("need at least 2 folds")
    if count < k_folds:
        raise ClassTooSmallError(f"cannot split {count} positions into {k_folds} folds")
    q = count // k_folds
    bounds = [((k - 1) * q, k * q) for k in range(1, k_folds)]
    bounds.append(((k_folds - 1) * q, count))
    return tuple(bounds)


def partition_folds(sample: StratifiedSample, k_folds: int) -> FoldPartition:
    """Deterministic per-class fold partition; arrival order is kept as is."""
    return FoldPartition(
        k_folds=k_folds,
        case_blocks=fold_block_bounds(sample.n_cases, k_folds),
        control_blocks=fold_block_bounds(sample.n_controls, k_folds),
    )


def _resolve_prevalence(prevalence) -> float:
    if isinstance(prevalence, PrevalenceEstimate):
        p = prevalence.p_hat
    else:
        p = float(prevalence)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"prevalence must lie in [0, 1], got {p}")
    return p


def _check_subset(subset, n: int) -> tuple[int, ...]:
    subset = tuple(int(i) for i in subset)
    if not subset:
        raise ValueError("factor subset must be nonempty")
    if len(set(subset)) != len(subset):
        raise ValueError("factor subset must be duplicate-free")
    if min(subset) < 1 or max(subset) > n:
        raise ValueError(f"factor indices outside 1..{n}: {subset}")
    return subset


def _encode(x: np.ndarray, cols) -> np.ndarray:
    enc = x[:, cols[0]].astype(np.int64)
    for c in cols[1:]:
        enc = enc * 3 + x[:, c]
    return enc


@dataclass
class TrainedRule:
    """Plug-in rule for one training split: frequency tables plus prevalence.

    ``freq_minus`` / ``freq_plus`` map projected factor tuples to their
    relative frequency among that class's training positions; absent keys
    mean frequency 0.  ``psi_hat`` stores the penalty estimates actually in
    force (reciprocal prevalences under the natural penalty).
    """

    subset: tuple[int, ...]
    freq_minus: dict
    freq_plus: dict
    prevalence: tuple[float, float]  # (P_hat(-1), P_hat(+1))
    psi_hat: tuple[float, float]  # (psi_hat(-1), psi_hat(+1))
    natural: bool

    @property
    def h(self) -> float:
        """Decision threshold the plug-in conditional probability must beat."""
        if self.natural:
            return self.prevalence[1]
        return self.psi_hat[0] / (self.psi_hat[0] + self.psi_hat[1])


def train_rule(
    sample: StratifiedSample,
    partition: FoldPartition,
    held_out: int,
    subset,
    prevalence,
    psi: PenaltySpec | None = None,
) -> TrainedRule:
    """Fit the plug-in rule on all folds except ``held_out`` (0-based)."""
    subset = _check_subset(subset, sample.n_factors)
    cols = [i - 1 for i in subset]
    p1 = _resolve_prevalence(prevalence)
    tables = []
    for x, blocks in (
        (sample.controls, partition.control_blocks),
        (sample.cases, partition.case_blocks),
    ):
        start, stop = blocks[held_out]
        train_idx = np.r_[0:start, stop : x.shape[0]]
        table: dict[tuple[int, ...], float] = {}
        if train_idx.size:
            rows = x[train_idx][:, cols]
            keys, counts = np.unique(rows, axis=0, return_counts=True)
            for key, count in zip(keys, counts):
                table[tuple(int(v) for v in key)] = int(count) / int(train_idx.size)
        tables.append(table)
    natural = psi is None or psi.mode == "natural"
    if natural:
        psi_hat = (
            1.0 / (1.0 - p1) if p1 < 1.0 else float("inf"),
            1.0 / p1 if p1 > 0.0 else float("inf"),
        )
    else:
        psi_hat = (psi.psi_minus, psi.psi_plus)
    return TrainedRule(
        subset=subset,
        freq_minus=tables[0],
        freq_plus=tables[1],
        prevalence=(1.0 - p1, p1),
        psi_hat=psi_hat,
        natural=natural,
    )


def predict(rule: TrainedRule, x) -> int:
    """Label for a full factor vector; ties and unseen cells go to -1."""
    x = np.asarray(x)
    key = tuple(int(x[i - 1]) for i in rule.subset)
    i_plus = rule.freq_plus.get(key, 0.0)
    i_minus = rule.freq_minus.get(key, 0.0)
    num = rule.prevalence[1] * i_plus
    den = rule.prevalence[0] * i_minus + num
    g = num / den if den > 0.0 else 0.0
    return 1 if g > rule.h else -1


@dataclass(frozen=True)
class ErrEstimate:
    """A subset's cross-validated error value with its per-fold breakdown.

    ``fold_fractions`` holds the held-out misclassification fractions as
    (per-fold controls row, per-fold cases row); empty class blocks are
    recorded as 0.
    """

    subset: tuple[int, ...]
    value: float
    fold_fractions: tuple[tuple[float, ...], tuple[float, ...]]


def _assemble(k_folds, weights, wrongs, sizes, subset) -> ErrEstimate:
    # weights/wrongs/sizes: pairs of per-fold sequences, class -1 first.
    total = 0.0
    fracs = ([], [])
    for cls in (0, 1):
        for k in range(k_folds):
            size = sizes[cls][k]
            if size == 0:
                fracs[cls].append(0.0)
                continue
            frac = wrongs[cls][k] / size
            total += weights[cls][k] * frac
            fracs[cls].append(frac)
    return ErrEstimate(
        subset=subset,
        value=(2.0 / k_folds) * total,
        fold_fractions=(tuple(fracs[0]), tuple(fracs[1])),
    )


def _fold_weights_and_h(p1: float, psi: PenaltySpec | None) -> tuple[float, float, float]:
    """(weight(-1), weight(+1), threshold h) for one training split."""
    if psi is None or psi.mode == "natural":
        return 1.0, 1.0, p1
    return (
        psi.psi_minus * (1.0 - p1),
        psi.psi_plus * p1,
        psi.psi_minus / (psi.psi_minus + psi.psi_plus),
    )


def _predict_plus_cells(
    train_minus: np.ndarray,
    train_plus: np.ndarray,
    w_minus: int,
    w_plus: int,
    p1: float,
    h: float,
) -> np.ndarray:
    """Boolean mask over projected cells where the trained rule says +1."""
    i_minus = train_minus / w_minus if w_minus > 0 else np.zeros(train_minus.shape)
    i_plus = train_plus / w_plus if w_plus > 0 else np.zeros(train_plus.shape)
    num = p1 * i_plus
    den = (1.0 - p1) * i_minus + num
    pred = np.zeros(num.shape, dtype=bool)
    pos = den > 0.0
    pred[pos] = num[pos] / den[pos] > h
    return pred


class _StratifiedEvaluator:
    """Shared per-sample state for scoring many subsets of one sample."""

    def __init__(self, sample: StratifiedSample, k_folds, prevalence, psi):
        if prevalence is None:
            raise ValueError("stratified estimation needs an explicit prevalence")
        self.sample = sample
        self.k_folds = k_folds
        self.case_blocks = fold_block_bounds(sample.n_cases, k_folds)
        self.control_blocks = fold_block_bounds(sample.n_controls, k_folds)
        self.p1 = _resolve_prevalence(prevalence)
        w_minus, w_plus, h = _fold_weights_and_h(self.p1, psi)
        self.weights = ([w_minus] * k_folds, [w_plus] * k_folds)
        self.h = h
        self.sizes = (
            [stop - start for start, stop in self.control_blocks],
            [stop - start for start, stop in self.case_blocks],
        )

    def evaluate(self, subset: tuple[int, ...]) -> ErrEstimate:
        cols = [i - 1 for i in subset]
        cells = 3 ** len(cols)
        enc_minus = _encode(self.sample.controls, cols)
        enc_plus = _encode(self.sample.cases, cols)
        tot_minus = np.bincount(enc_minus, minlength=cells)
        tot_plus = np.bincount(enc_plus, minlength=cells)
        n_minus = enc_minus.shape[0]
        n_plus = enc_plus.shape[0]
        wrongs = ([], [])
        for k in range(self.k_folds):
            a0, b0 = self.control_blocks[k]
            a1, b1 = self.case_blocks[k]
            held_minus = np.bincount(enc_minus[a0:b0], minlength=cells)
            held_plus = np.bincount(enc_plus[a1:b1], minlength=cells)
            pred_plus = _predict_plus_cells(
                tot_minus - held_minus,
                tot_plus - held_plus,
                n_minus - (b0 - a0),
                n_plus - (b1 - a1),
                self.p1,
                self.h,
            )
            wrongs[0].append(int(held_minus[pred_plus].sum()))
            wrongs[1].append(int(held_plus[~pred_plus].sum()))
        return _assemble(self.k_folds, self.weights, wrongs, self.sizes, subset)


class _IidEvaluator:
    """Same scoring over an i.i.d. sample with raw-order fold blocks.

    With ``prevalence`` None the case rate (and with it the natural penalty)
    is recomputed from the training folds of every split.
    """

    def __init__(self, sample: IidSample, k_folds, prevalence, psi):
        self.sample = sample
        self.k_folds = k_folds
        blocks = fold_block_bounds(sample.size, k_folds)
        is_plus = np.asarray(sample.y) == 1
        total_plus = int(is_plus.sum())
        total_minus = sample.size - total_plus
        self.held_minus_idx = []
        self.held_plus_idx = []
        self.p1_by_fold = []
        sizes = ([], [])
        for start, stop in blocks:
            fold_plus = is_plus[start:stop]
            self.held_plus_idx.append(start + np.flatnonzero(fold_plus))
            self.held_minus_idx.append(start + np.flatnonzero(~fold_plus))
            train_plus = total_plus - int(fold_plus.sum())
            train_minus = total_minus - (stop - start - int(fold_plus.sum()))
            sizes[0].append(int((~fold_plus).sum()))
            sizes[1].append(int(fold_plus.sum()))
            if prevalence is None:
                self.p1_by_fold.append(train_plus / (train_plus + train_minus))
            else:
                self.p1_by_fold.append(_resolve_prevalence(prevalence))
        self.sizes = sizes
        self.w_minus_train = [total_minus - s for s in sizes[0]]
        self.w_plus_train = [total_plus - s for s in sizes[1]]
        self.weights = ([], [])
        self.h_by_fold = []
        for p1 in self.p1_by_fold:
            w_minus, w_plus, h = _fold_weights_and_h(p1, psi)
            self.weights[0].append(w_minus)
            self.weights[1].append(w_plus)
            self.h_by_fold.append(h)

    def evaluate(self, subset: tuple[int, ...]) -> ErrEstimate:
        cols = [i - 1 for i in subset]
        cells = 3 ** len(cols)
        enc = _encode(self.sample.x, cols)
        tot_minus = np.bincount(enc[np.asarray(self.sample.y) != 1], minlength=cells)
        tot_plus = np.bincount(enc[np.asarray(self.sample.y) == 1], minlength=cells)
        wrongs = ([], [])
        for k in range(self.k_folds):
            held_minus = np.bincount(enc[self.held_minus_idx[k]], minlength=cells)
            held_plus = np.bincount(enc[self.held_plus_idx[k]], minlength=cells)
            pred_plus = _predict_plus_cells(
                tot_minus - held_minus,
                tot_plus - held_plus,
                self.w_minus_train[k],
                self.w_plus_train[k],
                self.p1_by_fold[k],
                self.h_by_fold[k],
            )
            wrongs[0].append(int(held_minus[pred_plus].sum()))
            wrongs[1].append(int(held_plus[~pred_plus].sum()))
        return _assemble(self.k_folds, self.weights, wrongs, self.sizes, subset)


def err_hat_K(
    sample: StratifiedSample,
    k_folds: int,
    subset,
    prevalence,
    psi: PenaltySpec | None = None,
) -> ErrEstimate:
    """Cross-validated error estimate of one subset on a stratified sample."""
    subset = _check_subset(subset, sample.n_factors)
    return _StratifiedEvaluator(sample, k_folds, prevalence, psi).evaluate(subset)


def err_hat_iid(
    sample: IidSample,
    k_folds: int,
    subset,
    prevalence=None,
    psi: PenaltySpec | None = None,
) -> ErrEstimate:
    """Cross-validated error estimate of one subset on an i.i.d. sample.

    ``prevalence`` None means the case rate is unknown and gets re-estimated
    from the training folds of each split; passing a value pins it (and the
    natural penalty) to that value everywhere.
    """
    subset = _check_subset(subset, sample.n_factors)
    return _IidEvaluator(sample, k_folds, prevalence, psi).evaluate(subset)


def _colex_subsets(n: int, r: int):
    """All r-subsets of 0..n-1 in colexicographic order, streamed."""

    def rec(limit: int, size: int):
        if size == 0:
            yield ()
            return
        for last in range(size - 1, limit):
            for rest in rec(last, size - 1):
                yield rest + (last,)

    yield from rec(n, r)


def select_relevant(
    sample,
    k_folds: int,
    r: int,
    prevalence=None,
    psi: PenaltySpec | None = None,
) -> tuple[tuple[int, ...], ErrEstimate]:
    """Exhaustively score every r-subset and return the minimizer.

    Ties in the estimate are broken toward the lexicographically smallest
    subset, so the result does not depend on enumeration order.  Works on
    both stratified and i.i.d. samples.
    """
    if isinstance(sample, StratifiedSample):
        evaluator = _StratifiedEvaluator(sample, k_folds, prevalence, psi)
    elif isinstance(sample, IidSample):
        evaluator = _IidEvaluator(sample, k_folds, prevalence, psi)
    else:
        raise TypeError(f"unsupported sample type {type(sample).__name__}")
    n = sample.n_factors
    if not 1 <= r <= n:
        raise ValueError(f"subset size must lie in 1..{n}, got {r}")
    best: ErrEstimate | None = None
    for cols in _colex_subsets(n, r):
        subset = tuple(c + 1 for c in cols)
        estimate = evaluator.evaluate(subset)
        if (
            best is None
            or estimate.value < best.value
            or (estimate.value == best.value and subset < best.subset)
        ):
            best = estimate
    return best.subset, best
