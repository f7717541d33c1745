"""Negative-binomial draw law, budget probabilities, size scan, boundary."""

import math
from fractions import Fraction

import numpy as np
import pytest

from mdrefe import (
    CostParams,
    NTildeLaw,
    PlanInfeasibleError,
    SeededStream,
    XorModel,
    build_stratified,
    lambda0,
    nb_pmf,
    ntilde_law,
    ntilde_pmf,
    prob_cost_within,
    s_str,
    s_str_estimated,
)


def test_nb_pmf_zero_successes():
    for r, q in [(1, 0.3), (4, 0.5), (7, 0.9)]:
        assert nb_pmf(r, q, 0) == pytest.approx((1 - q) ** r, abs=1e-15)


def test_nb_pmf_geometric_reduction():
    for k in range(8):
        assert nb_pmf(1, 0.4, k) == pytest.approx(0.4**k * 0.6, abs=1e-15)


def test_nb_pmf_matches_binomial_formula():
    for r, q, k in [(3, 0.25, 5), (6, 0.5, 0), (2, 0.8, 11), (10, 0.1, 3)]:
        want = math.comb(k + r - 1, k) * q**k * (1 - q) ** r
        assert nb_pmf(r, q, k) == pytest.approx(want, rel=1e-12)


def test_nb_pmf_normalizes():
    for r, q in [(2, 0.3), (5, 0.7), (12, 0.5)]:
        total, k = 0.0, 0
        while total < 1.0 - 1e-13 and k < 100_000:
            total += nb_pmf(r, q, k)
            k += 1
        assert abs(total - 1.0) < 1e-10


def test_nb_pmf_domain_errors():
    with pytest.raises(ValueError):
        nb_pmf(0, 0.5, 1)
    with pytest.raises(ValueError):
        nb_pmf(2, 0.0, 1)
    with pytest.raises(ValueError):
        nb_pmf(2, 1.0, 1)
    with pytest.raises(ValueError):
        nb_pmf(2, 0.5, -1)


def test_ntilde_pmf_below_size_is_zero():
    law = ntilde_law(6, 0.5, 0.3)
    assert ntilde_pmf(law, 5) == 0.0
    assert ntilde_pmf(law, 0) == 0.0


def test_ntilde_pmf_two_draw_case():
    # one case and one control needed: stops at 2 iff the first two labels
    # differ, probability 1/2 at p = 0.5 (checked against all 4 sequences)
    law = NTildeLaw(n_cases=1, n_controls=1, p=0.5)
    assert law.pmf(2) == pytest.approx(0.5, abs=1e-15)


def test_ntilde_pmf_six_draw_balanced():
    # (3,3,p=0.5): first six draws hold exactly three of each: C(6,3)/2^6
    law = NTildeLaw(n_cases=3, n_controls=3, p=0.5)
    assert law.pmf(6) == pytest.approx(20 / 64, rel=1e-12)


def test_ntilde_pmf_sums_to_one():
    for n_cases, n_controls, p in [(3, 3, 0.5), (2, 8, 0.1), (10, 5, 0.7), (1, 1, 0.5)]:
        law = NTildeLaw(n_cases=n_cases, n_controls=n_controls, p=p)
        top = law.quantile(1 - 1e-13)
        total = sum(law.pmf(m) for m in range(law.size, top + 1))
        assert abs(total - 1.0) < 1e-10


def test_ntilde_mean_matches_pmf_sum():
    law = NTildeLaw(n_cases=4, n_controls=6, p=0.35)
    top = law.quantile(1 - 1e-13)
    direct = sum(m * law.pmf(m) for m in range(law.size, top + 1))
    assert law.mean() == pytest.approx(direct, rel=1e-9)


def test_prob_cost_within_over_budget_is_zero():
    params = CostParams(c=30, w=0.1, a=0.5, alpha=0.05)
    assert prob_cost_within(31, params, 0.3) == 0.0
    assert prob_cost_within(30, params, 0.3) > 0.0


def test_prob_cost_within_free_labels():
    params = CostParams(c=30, w=0.0, a=0.5, alpha=0.05)
    assert prob_cost_within(30, params, 0.3) == 1.0
    assert prob_cost_within(1, params, 0.3) == 1.0


def test_prob_cost_within_nonincreasing_in_size():
    for c, w, p in [(25, 0.1, 0.5), (40, 0.3, 0.1), (15, 1.0, 0.25)]:
        params = CostParams(c=c, w=w, a=0.5, alpha=0.05)
        probs = [prob_cost_within(n, params, p) for n in range(1, c + 1)]
        assert all(a >= b - 1e-12 for a, b in zip(probs, probs[1:]))


def test_prob_cost_within_matches_simulation():
    # independent route: walk real label streams and compare frequencies
    c_budget, w, p = 20, 0.1, 0.5
    params = CostParams(c=c_budget, w=w, a=0.5, alpha=0.05)
    model = XorModel(n=1, mafs=(0.5,), relevant=(1,), gamma=1.0)  # p = 0.5
    trials = 20_000
    stream = SeededStream(50)
    for n_size in (14, 16, 18, 20):
        cap = ((w + 1) * c_budget - n_size) / w
        hits = 0
        for _ in range(trials):
            sample = build_stratified(model, stream, n_size, 0.5)
            hits += sample.n_tilde <= cap
        want = prob_cost_within(n_size, params, p)
        sigma = max((want * (1 - want) / trials) ** 0.5, 1e-4)
        assert abs(hits / trials - want) < 3.5 * sigma


def test_s_str_free_labels_returns_budget():
    for c in (10, 137, 500):
        for alpha in (0.01, 0.05, 0.5):
            for p in (0.05, 0.3, 0.49):
                assert s_str(CostParams(c=c, w=0.0, a=0.5, alpha=alpha), p) == c


def test_s_str_bounded_by_budget_and_monotone_in_budget():
    sizes = []
    for c in range(10, 31, 5):
        params = CostParams(c=c, w=0.1, a=0.5, alpha=0.05)
        size = s_str(params, 0.3)
        assert 1 <= size <= c
        sizes.append(size)
    assert all(a <= b for a, b in zip(sizes, sizes[1:]))


def test_s_str_loose_alpha_hits_budget():
    # alpha close to 1 accepts any size with positive within-budget mass
    params = CostParams(c=20, w=0.1, a=0.5, alpha=0.999)
    assert s_str(params, 0.5) == 20


def test_s_str_matches_probability_definition():
    params = CostParams(c=25, w=0.2, a=0.5, alpha=0.1)
    p = 0.3
    size = s_str(params, p)
    assert prob_cost_within(size, params, p) >= 0.9
    if size < params.c:
        assert prob_cost_within(size + 1, params, p) < 0.9


def test_s_str_estimated_plugin_identity_and_stabilization():
    params = CostParams(c=60, w=0.1, a=0.5, alpha=0.05)
    p = 0.2
    assert s_str_estimated(params, p) == s_str(params, p)
    # deterministic estimate schedule converging to p stabilizes the answer
    answers = [s_str_estimated(params, p + 0.5 / k) for k in range(2, 200, 7)]
    assert answers[-3:] == [s_str(params, p)] * 3


def test_s_str_estimated_monotone_in_budget():
    p_hat = 0.17
    sizes = [
        s_str_estimated(CostParams(c=c, w=0.1, a=0.5, alpha=0.05), p_hat)
        for c in range(10, 31)
    ]
    assert all(a <= b for a, b in zip(sizes, sizes[1:]))


def test_s_str_approaches_asymptotic_boundary():
    # large budgets: the exact scan lands within 5% of lambda0 * C
    size = s_str(CostParams(c=5000, w=0.1, a=0.5, alpha=0.05), 0.1)
    target = lambda0(0.5, 0.1, 0.1) * 5000
    assert abs(size - target) / target < 0.05


def test_lambda0_golden_values():
    golden = {0.05: Fraction(11, 30), 0.1: Fraction(11, 20), 0.2: Fraction(11, 15)}
    for gamma, frac in golden.items():
        assert abs(lambda0(0.5, 0.1, gamma / 2) - float(frac)) <= 1e-12


def test_lambda0_free_labels_and_monotonicity():
    for a, p in [(0.5, 0.1), (0.2, 0.4), (0.8, 0.3)]:
        assert lambda0(a, 0.0, p) == 1.0
        values = [lambda0(a, w, p) for w in np.linspace(0.0, 3.0, 40)]
        assert all(x >= y - 1e-15 for x, y in zip(values, values[1:]))
        assert all(v <= 1.0 for v in values)
        assert all(v < 1.0 for v in values[1:])  # equality only at w = 0


def test_cost_params_validation():
    with pytest.raises(ValueError):
        CostParams(c=0, w=0.1, a=0.5, alpha=0.05)
    with pytest.raises(ValueError):
        CostParams(c=10, w=-0.1, a=0.5, alpha=0.05)
    with pytest.raises(ValueError):
        CostParams(c=10, w=0.1, a=1.0, alpha=0.05)
    with pytest.raises(ValueError):
        CostParams(c=10, w=0.1, a=0.5, alpha=0.0)
    with pytest.raises(ValueError):
        s_str(CostParams(c=10, w=0.1, a=0.5, alpha=0.05), 1.5)
