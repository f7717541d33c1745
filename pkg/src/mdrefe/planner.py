"""Budget arithmetic for stratified designs with a random number of raw draws.

Filling both strata of a size-N sample consumes a random total of raw draws:
the larger of two negative-binomial stopping times.  With response
measurement priced at ``w`` relative to a full observation, the total cost of
the design is

    cost(N) = N / (w + 1) + w * n_tilde / (w + 1),

so the largest size whose cost stays within a budget C with probability at
least 1 - alpha is found by scanning N downward from C against the exact law
of n_tilde.  An i.i.d. design of the same budget always affords exactly C
observations, which bounds the stratified size from above; asymptotically the
affordable ratio N/C tends to a closed-form boundary lambda0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import nbinom

from .stratify import case_quota


class PlanInfeasibleError(RuntimeError):
    """No sample size meets the budget confidence requirement."""


@dataclass(frozen=True)
class CostParams:
    """Budget C, price ratio w of a label to a full observation, case ratio a,
    and the allowed overrun probability alpha."""

    c: int
    w: float
    a: float
    alpha: float

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("budget must be a positive integer")
        if self.w < 0.0:
            raise ValueError("price ratio w must be nonnegative")
        if not 0.0 < self.a < 1.0:
            raise ValueError("case ratio a must lie in (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


def nb_pmf(r: int, q: float, k: int) -> float:
    """P(exactly k successes before the r-th failure), success probability q.

    Evaluated through scipy's negative binomial, which works in log space,
    so large k and r are safe from overflow.
    """
    if r < 1 or int(r) != r:
        raise ValueError(f"r must be a positive integer, got {r}")
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    if k < 0 or int(k) != k:
        raise ValueError(f"k must be a nonnegative integer, got {k}")
    return float(nbinom.pmf(k, r, 1.0 - q))


@dataclass(frozen=True)
class NTildeLaw:
    """Law of the total raw draws needed for n_cases cases and n_controls
    controls at case probability p.

    The total is max of the two per-class stopping times; on m >= N its mass
    splits exactly into the event that the control quota finishes last
    (m - n_controls cases seen so far, at least n_cases of them) and the
    mirrored case-quota event.
    """

    n_cases: int
    n_controls: int
    p: float

    def __post_init__(self):
        if self.n_cases < 1 or self.n_controls < 0:
            raise ValueError("need at least one case and a nonnegative control quota")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"case probability must lie in (0, 1), got {self.p}")

    @property
    def size(self) -> int:
        return self.n_cases + self.n_controls

    def pmf(self, m: int) -> float:
        if m < self.size:
            return 0.0
        # no control quota: the total is just the case stopping time
        if self.n_controls == 0:
            return float(nbinom.pmf(m - self.n_cases, self.n_cases, self.p))
        last_control = nbinom.pmf(m - self.n_controls, self.n_controls, 1.0 - self.p)
        last_case = nbinom.pmf(m - self.n_cases, self.n_cases, self.p)
        return float(last_control + last_case)

    def cdf(self, m: float) -> float:
        """P(total draws <= m); exact through negative-binomial CDFs."""
        hi = math.floor(m)
        if hi < self.size:
            return 0.0
        if self.n_controls == 0:
            return float(nbinom.cdf(hi - self.n_cases, self.n_cases, self.p))
        term_control = nbinom.cdf(hi - self.n_controls, self.n_controls, 1.0 - self.p) - nbinom.cdf(
            self.n_cases - 1, self.n_controls, 1.0 - self.p
        )
        term_case = nbinom.cdf(hi - self.n_cases, self.n_cases, self.p) - nbinom.cdf(
            self.n_controls - 1, self.n_cases, self.p
        )
        return float(max(term_control, 0.0) + max(term_case, 0.0))

    def mean(self) -> float:
        """Expected total draws, via finite corrections to both NB means."""
        if self.n_controls == 0:
            return self.n_cases / self.p
        mu_control_side = self.n_controls * self.p / (1.0 - self.p)
        mu_case_side = self.n_cases * (1.0 - self.p) / self.p
        j_control = np.arange(self.n_cases)
        j_case = np.arange(self.n_controls)
        head_control = float(
            (j_control * nbinom.pmf(j_control, self.n_controls, 1.0 - self.p)).sum()
        )
        head_case = float((j_case * nbinom.pmf(j_case, self.n_cases, self.p)).sum())
        sf_control = 1.0 - float(nbinom.cdf(self.n_cases - 1, self.n_controls, 1.0 - self.p))
        sf_case = 1.0 - float(nbinom.cdf(self.n_controls - 1, self.n_cases, self.p))
        return (
            self.n_controls * sf_control
            + (mu_control_side - head_control)
            + self.n_cases * sf_case
            + (mu_case_side - head_case)
        )

    def quantile(self, q: float) -> int:
        """Smallest m with cdf(m) >= q."""
        if not 0.0 < q < 1.0:
            raise ValueError("quantile level must lie in (0, 1)")
        lo = self.size
        hi = max(lo + 1, int(2 * self.mean()) + 16)
        while self.cdf(hi) < q:
            hi *= 2
        while lo < hi:
            mid = (lo + hi) // 2
            if self.cdf(mid) >= q:
                hi = mid
            else:
                lo = mid + 1
        return lo


def ntilde_law(n_size: int, a: float, p: float) -> NTildeLaw:
    """Law of the raw-draw total for a size-N stratified build at ratio a."""
    n_cases = case_quota(n_size, a)
    return NTildeLaw(n_cases=n_cases, n_controls=n_size - n_cases, p=p)


def ntilde_pmf(law: NTildeLaw, m: int) -> float:
    """P(total raw draws = m); zero below the sample size."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    return law.pmf(m)


def prob_cost_within(n_size: int, params: CostParams, p: float) -> float:
    """P(cost of a size-N stratified design stays within the budget).

    For w = 0 the cost is N deterministically.  Otherwise the budget caps the
    raw-draw total at ((w+1)C - N) / w and the two stopping-time events are
    summed over their exact ranges; empty ranges contribute 0.
    """
    if n_size < 1:
        raise ValueError("sample size must be positive")
    if n_size > params.c:
        return 0.0
    if params.w == 0.0:
        return 1.0
    law = ntilde_law(n_size, params.a, p)
    cap = ((params.w + 1.0) * params.c - n_size) / params.w
    return law.cdf(cap)


def s_str(params: CostParams, p: float) -> int:
    """Largest stratified size affordable with probability >= 1 - alpha.

    The within-budget probability is nonincreasing in N, so the first hit of
    a downward scan from C is the maximum.  With w = 0 labels are free and
    the answer is the full budget C, as for an i.i.d. design.
    """
    if params.w == 0.0:
        return params.c
    if not 0.0 < p < 1.0:
        raise ValueError(f"case probability must lie in (0, 1), got {p}")
    target = 1.0 - params.alpha
    for n_size in range(params.c, 0, -1):
        if prob_cost_within(n_size, params, p) >= target:
            return n_size
    raise PlanInfeasibleError(
        f"no stratified size fits budget {params.c} at w={params.w}, "
        f"alpha={params.alpha}, p={p}"
    )


def s_str_estimated(params: CostParams, p_hat: float) -> int:
    """Plug-in version of the size scan driven by an estimated case rate.

    Substitutes p_hat into the exact within-budget probability; as the
    estimate converges the returned size stabilizes at the true one.
    """
    return s_str(params, p_hat)


def lambda0(a: float, w: float, p: float) -> float:
    """Asymptotic upper bound on the affordable size-to-budget ratio N/C.

    Equals 1 when labels are free (w = 0) and decreases as labels get
    relatively more expensive or as the rarer stratum gets rarer.
    """
    if not 0.0 < a < 1.0:
        raise ValueError("a must lie in (0, 1)")
    if w < 0.0:
        raise ValueError("w must be nonnegative")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    return (1.0 + w) / (1.0 + w * max(a / p, (1.0 - a) / (1.0 - p)))
