"""Stratified sample construction by label-dependent acceptance.

A stratified sample of size N holds exactly N1 = max(floor(a*N), 1) cases and
N - N1 controls, collected by walking an observation stream and accepting
draws whose class quota is still open.  Factor vectors are materialized only
for accepted draws; for skipped ones only the label is ever touched.  The
total number of raw draws consumed (n_tilde) and the label counts over those
draws are tracked so the case rate can be estimated for free afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .datagen import SeededStream, XorModel, genotype_pmf, response_prob

DEFAULT_DRAW_CAP = 10**9


class DrawBudgetError(RuntimeError):
    """Raised when a stratified build exceeds its raw-draw cap."""


@dataclass(frozen=True)
class StratifiedSample:
    """Cases and controls in arrival order, plus raw-stream bookkeeping.

    ``y_counts`` is (#labels -1, #labels +1) over the first ``n_tilde`` raw
    draws; both quotas are subsets of those draws, so y_counts[1] >= n_cases
    and y_counts[0] >= n_controls always hold.
    """

    cases: np.ndarray  # (N1, n) genotypes
    controls: np.ndarray  # (N-1 quota, n) genotypes
    a: float
    n_tilde: int
    y_counts: tuple[int, int]

    @property
    def n_cases(self) -> int:
        return self.cases.shape[0]

    @property
    def n_controls(self) -> int:
        return self.controls.shape[0]

    @property
    def size(self) -> int:
        return self.n_cases + self.n_controls

    @property
    def n_factors(self) -> int:
        return self.cases.shape[1]


@dataclass(frozen=True)
class PrevalenceEstimate:
    """A value standing in for P(Y = 1), tagged with where it came from."""

    p_hat: float
    source: str  # "known" | "stream-frequency" | "external-sample"

    def __post_init__(self):
        if self.source not in ("known", "stream-frequency", "external-sample"):
            raise ValueError(f"unknown prevalence source {self.source!r}")
        if not 0.0 <= self.p_hat <= 1.0:
            raise ValueError(f"prevalence must lie in [0, 1], got {self.p_hat}")


def case_quota(n_size: int, a: float) -> int:
    """Number of cases in a stratified sample of size N at case ratio a."""
    return max(int(a * n_size), 1)


def build_stratified(
    model: XorModel,
    stream: SeededStream,
    n_size: int,
    a: float,
    max_draws: int = DEFAULT_DRAW_CAP,
) -> StratifiedSample:
    """Consume raw draws until both class quotas are filled.

    Termination is almost sure for any nondegenerate model, but has no
    worst-case bound; ``max_draws`` turns a pathological run into a
    DrawBudgetError instead of a hang.
    """
    if n_size < 2:
        raise ValueError("stratified sample size must be at least 2")
    if not 0.0 < a < 1.0:
        raise ValueError(f"case ratio a must lie in (0, 1), got {a}")
    n_cases = case_quota(n_size, a)
    n_controls = n_size - n_cases
    cases = np.empty((n_cases, model.n), dtype=np.int8)
    controls = np.empty((n_controls, model.n), dtype=np.int8)
    got_cases = 0
    got_controls = 0
    seen_minus = 0
    seen_plus = 0
    drawn = 0
    while got_cases < n_cases or got_controls < n_controls:
        if drawn >= max_draws:
            raise DrawBudgetError(
                f"no stratified sample of size {n_size} within {max_draws} draws"
            )
        y, token = stream.draw_label(model)
        drawn += 1
        if y == 1:
            seen_plus += 1
            if got_cases < n_cases:
                cases[got_cases] = stream.materialize(model, token)
                got_cases += 1
        else:
            seen_minus += 1
            if got_controls < n_controls:
                controls[got_controls] = stream.materialize(model, token)
                got_controls += 1
    return StratifiedSample(
        cases=cases,
        controls=controls,
        a=a,
        n_tilde=drawn,
        y_counts=(seen_minus, seen_plus),
    )


def estimate_prevalence(sample: StratifiedSample) -> PrevalenceEstimate:
    """Case-rate estimate from the labels of all raw draws behind the sample.

    The accepted vectors themselves carry no information about P(Y = 1); the
    label frequency over the n_tilde raw draws does, and is strongly
    consistent as the sample size grows.
    """
    return PrevalenceEstimate(
        p_hat=sample.y_counts[1] / sample.n_tilde, source="stream-frequency"
    )


def conditional_case_law(model: XorModel) -> dict[tuple[int, ...], float]:
    """Analytic law of X given Y = 1 over the full state space (small n only).

    Bayes over all 3^n states; intended for executable checks, not for
    production-size models.
    """
    if model.n > 6:
        raise ValueError("conditional_case_law enumerates 3^n states; use n <= 6")
    p = model.response_rate()
    law = {}
    for state in product((0, 1, 2), repeat=model.n):
        prob = 1.0
        for i, v in enumerate(state):
            prob *= genotype_pmf(model.mafs[i], v)
        law[state] = response_prob(model, state) * prob / p
    return law


def collect_cases(
    model: XorModel,
    stream: SeededStream,
    count: int,
    max_draws: int = DEFAULT_DRAW_CAP,
) -> np.ndarray:
    """Accept ``count`` case vectors from the stream, skipping controls."""
    out = np.empty((count, model.n), dtype=np.int8)
    got = 0
    drawn = 0
    while got < count:
        if drawn >= max_draws:
            raise DrawBudgetError(f"fewer than {count} cases within {max_draws} draws")
        y, token = stream.draw_label(model)
        drawn += 1
        if y == 1:
            out[got] = stream.materialize(model, token)
            got += 1
    return out


def _tv_distance(empirical: dict, law: dict) -> float:
    keys = set(empirical) | set(law)
    return 0.5 * sum(abs(empirical.get(k, 0.0) - law.get(k, 0.0)) for k in keys)


def case_law_check(
    model: XorModel, stream: SeededStream, n_cases: int, trials: int = 1
) -> float:
    """Total-variation gap between accepted cases and the analytic case law.

    Pools ``n_cases`` accepted case vectors from each of ``trials``
    consecutive acceptance runs on the stream and compares their empirical
    distribution with the Bayes law of X given Y = 1.  Accepted cases are
    i.i.d. from that law, so the gap shrinks as the pool grows.
    """
    if model.n > 3:
        raise ValueError("case_law_check is meant for small state spaces (n <= 3)")
    pooled = np.concatenate(
        [collect_cases(model, stream, n_cases) for _ in range(trials)]
    )
    total = pooled.shape[0]
    empirical: dict[tuple[int, ...], float] = {}
    for row in pooled:
        key = tuple(int(v) for v in row)
        empirical[key] = empirical.get(key, 0.0) + 1.0 / total
    return _tv_distance(empirical, conditional_case_law(model))


def case_pair_independence_check(
    model: XorModel, stream: SeededStream, pairs: int
) -> float:
    """Total-variation gap between consecutive case pairs and the product law.

    Draws 2 * ``pairs`` accepted cases, groups them into disjoint consecutive
    pairs and compares the empirical joint distribution with the product of
    the analytic case law with itself.
    """
    if model.n > 2:
        raise ValueError("pair check enumerates 9^n joint states; use n <= 2")
    cases = collect_cases(model, stream, 2 * pairs)
    empirical: dict[tuple, float] = {}
    for i in range(pairs):
        key = (
            tuple(int(v) for v in cases[2 * i]),
            tuple(int(v) for v in cases[2 * i + 1]),
        )
        empirical[key] = empirical.get(key, 0.0) + 1.0 / pairs
    law = conditional_case_law(model)
    product_law = {
        (s, t): ps * pt for s, ps in law.items() for t, pt in law.items()
    }
    return _tv_distance(empirical, product_law)
