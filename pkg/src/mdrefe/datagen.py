"""Synthetic case-control data: independent SNP-style genotypes with a parity response.

Each factor takes values in {0, 1, 2} with a per-factor minor allele frequency
(MAF).  The binary response depends only on a designated subset of factors: it
fires (with probability ``gamma``) exactly when the sum of the relevant factor
values is odd, so no strict sub-collection of the relevant factors carries any
signal.  All sampling is driven by counter-addressable seeded streams, so any
observation is a pure function of (seed, counter) and replicates are exactly
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAF_DRAW_LOW = 0.05
MAF_DRAW_HIGH = 0.5

_BLOCK = 256


def derive_seed(base_seed: int, *path: int) -> int:
    """Derive a 64-bit substream seed from a base seed and an index path.

    Uses numpy's SeedSequence entropy hash, which is documented as stable
    across platforms and releases, so (base_seed, path) always maps to the
    same substream.
    """
    ss = np.random.SeedSequence([int(base_seed), *[int(p) for p in path]])
    return int(ss.generate_state(1, np.uint64)[0])


def genotype_pmf(p: float, v: int) -> float:
    """Probability of genotype value ``v`` (minor-allele count) at MAF ``p``."""
    if not 0.0 < p <= 0.5:
        raise ValueError(f"MAF must lie in (0, 0.5], got {p}")
    if v == 0:
        return (1.0 - p) ** 2
    if v == 1:
        return 2.0 * p * (1.0 - p)
    if v == 2:
        return p * p
    raise ValueError(f"genotype value must be 0, 1 or 2, got {v}")


def odd_parity_prob(mafs) -> float:
    """Probability that the sum of independent genotypes over ``mafs`` is odd.

    Each genotype is odd exactly when it equals 1, which happens with
    probability 2p(1-p); the parity of the sum then follows the standard
    product formula.  At MAF 0.5 every factor contributes a fair bit, so the
    result is exactly 0.5 as soon as one such factor is present.
    """
    t = np.asarray([2.0 * p * (1.0 - p) for p in mafs], dtype=float)
    return float((1.0 - np.prod(1.0 - 2.0 * t)) / 2.0)


@dataclass(frozen=True)
class XorModel:
    """Joint law of (X, Y): independent genotypes plus the parity response.

    ``relevant`` holds 1-based factor indices; the MAF of every relevant
    factor must be 0.5 (``allow_unbalanced_relevant`` lifts that check for
    experimentation, but none of the shipped guarantees cover that regime).
    ``gamma`` is the response rate on odd-parity states; gamma = 1 makes the
    response a deterministic function of the parity.
    """

    n: int
    mafs: tuple[float, ...]
    relevant: tuple[int, ...]
    gamma: float
    allow_unbalanced_relevant: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        object.__setattr__(self, "mafs", tuple(float(p) for p in self.mafs))
        object.__setattr__(self, "relevant", tuple(int(i) for i in self.relevant))
        if len(self.mafs) != self.n:
            raise ValueError(f"expected {self.n} MAFs, got {len(self.mafs)}")
        for p in self.mafs:
            if not 0.0 < p <= 0.5:
                raise ValueError(f"MAF must lie in (0, 0.5], got {p}")
        if not self.relevant:
            raise ValueError("relevant factor set must be nonempty")
        if list(self.relevant) != sorted(set(self.relevant)):
            raise ValueError("relevant indices must be sorted and duplicate-free")
        if self.relevant[0] < 1 or self.relevant[-1] > self.n:
            raise ValueError("relevant indices must lie in 1..n")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not self.allow_unbalanced_relevant:
            for i in self.relevant:
                if self.mafs[i - 1] != 0.5:
                    raise ValueError(
                        f"relevant factor {i} must have MAF 0.5, got {self.mafs[i - 1]}"
                    )

    @property
    def relevant_cols(self) -> tuple[int, ...]:
        """Zero-based column indices of the relevant factors."""
        return tuple(i - 1 for i in self.relevant)

    def response_rate(self) -> float:
        """Marginal case probability P(Y = 1) = gamma * P(relevant parity odd)."""
        return self.gamma * odd_parity_prob(self.mafs[i - 1] for i in self.relevant)


def response_prob(model: XorModel, x) -> float:
    """Conditional case probability given a full factor vector."""
    x = np.asarray(x)
    parity = int(x[list(model.relevant_cols)].sum()) & 1
    return model.gamma if parity == 1 else 0.0


@dataclass(frozen=True)
class Observation:
    x: np.ndarray  # genotype vector, values in {0, 1, 2}
    y: int  # label in {-1, +1}


@lru_cache(maxsize=256)
def _genotype_thresholds(mafs: tuple[float, ...]):
    """Uniform-to-genotype cut points per factor: u < t0 -> 0, u < t1 -> 1."""
    p = np.asarray(mafs)
    return (1.0 - p) ** 2, 1.0 - p * p


class SeededStream:
    """Deterministic observation source addressed by (seed, counter).

    Draw ``counter`` consumes a fixed row of n+1 uniforms (one per factor
    plus one for the response coin), generated in blocks keyed by
    (seed, block index).  Because the uniforms for a draw never depend on
    what was done with earlier draws, labels can be emitted first and the
    factor vector materialized later, or never: skipped observations cost
    nothing and do not shift the rest of the stream.

    A stream is bound to the uniform width of its first use (a model's n+1,
    or 1 for plain MAF draws) and must not be shared across widths.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed)
        self.counter = int(counter)
        self._width: int | None = None
        self._block_id = -1
        self._uniforms: np.ndarray | None = None
        self._label_block = -1
        self._label_key = None
        self._labels: np.ndarray | None = None

    def _require_width(self, width: int) -> None:
        if self._width is None:
            self._width = width
        elif self._width != width:
            raise ValueError(
                f"stream already bound to uniform width {self._width}, requested {width}"
            )

    def _block(self, block_id: int) -> np.ndarray:
        if block_id != self._block_id:
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, block_id]))
            self._uniforms = rng.random((_BLOCK, self._width))
            self._block_id = block_id
        return self._uniforms

    def _label_table(self, model: XorModel, block_id: int) -> np.ndarray:
        key = (model.n, model.gamma, model.relevant, model.mafs)
        if block_id == self._label_block and key == self._label_key:
            return self._labels
        u = self._block(block_id)
        cols = list(model.relevant_cols)
        t0, t1 = _genotype_thresholds(tuple(model.mafs[c] for c in cols))
        codes = (u[:, cols] >= t0).astype(np.int64) + (u[:, cols] >= t1)
        odd = (codes.sum(axis=1) & 1) == 1
        hit = u[:, model.n] < model.gamma
        self._labels = np.where(odd & hit, 1, -1).astype(np.int8)
        self._label_block = block_id
        self._label_key = key
        return self._labels

    def draw_label(self, model: XorModel) -> tuple[int, int]:
        """Emit the next label without materializing the factor vector.

        Returns (label, token); the token can be passed to ``materialize`` to
        recover the factor vector of exactly this draw.
        """
        self._require_width(model.n + 1)
        token = self.counter
        labels = self._label_table(model, token // _BLOCK)
        self.counter = token + 1
        return int(labels[token % _BLOCK]), token

    def materialize(self, model: XorModel, token: int) -> np.ndarray:
        """Genotype vector of a previously drawn observation."""
        self._require_width(model.n + 1)
        u = self._block(token // _BLOCK)[token % _BLOCK, : model.n]
        t0, t1 = _genotype_thresholds(model.mafs)
        return ((u >= t0).astype(np.int8) + (u >= t1)).astype(np.int8)

    def uniform(self) -> float:
        """One raw uniform draw, consuming a full counter tick."""
        self._require_width(1)
        token = self.counter
        value = self._block(token // _BLOCK)[token % _BLOCK, 0]
        self.counter = token + 1
        return float(value)


def sample_observation(model: XorModel, stream: SeededStream) -> Observation:
    """Draw one (X, Y) pair; advances the stream by one counter tick."""
    y, token = stream.draw_label(model)
    return Observation(x=stream.materialize(model, token), y=y)


def sample_many(model: XorModel, stream: SeededStream, count: int):
    """Draw ``count`` observations with every factor vector materialized."""
    xs = np.empty((count, model.n), dtype=np.int8)
    ys = np.empty(count, dtype=np.int8)
    for i in range(count):
        y, token = stream.draw_label(model)
        xs[i] = stream.materialize(model, token)
        ys[i] = y
    return xs, ys


def draw_maf(stream: SeededStream) -> float:
    """One MAF drawn uniformly from [0.05, 0.5] for a non-relevant factor."""
    return MAF_DRAW_LOW + (MAF_DRAW_HIGH - MAF_DRAW_LOW) * stream.uniform()


def model_with_drawn_mafs(
    n: int, relevant, gamma: float, stream: SeededStream
) -> XorModel:
    """Build a model whose non-relevant MAFs are drawn from the MAF prior.

    Relevant factors keep MAF 0.5.  MAFs are drawn in factor order, one
    stream tick each, so the model is reproducible from the stream seed.
    """
    relevant = tuple(int(i) for i in relevant)
    mafs = [0.0] * n
    for i in range(1, n + 1):
        if i in relevant:
            mafs[i - 1] = 0.5
        else:
            mafs[i - 1] = draw_maf(stream)
    return XorModel(n=n, mafs=tuple(mafs), relevant=relevant, gamma=gamma)
