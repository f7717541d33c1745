"""Exact error functional, optimal rule, and consistency diagnostics."""

from itertools import combinations, product

import numpy as np
import pytest

from mdrefe import (
    Classifier,
    PenaltySpec,
    XorModel,
    conditional_response_rate,
    error_exact,
    maincond_residual,
    model_diagnostics,
    optimal_classifier,
)

from oracles import oracle_error_exact


def parity_model(n, relevant, gamma, other_maf=0.3):
    mafs = tuple(0.5 if i + 1 in relevant else other_maf for i in range(n))
    return XorModel(n=n, mafs=mafs, relevant=relevant, gamma=gamma)


def test_natural_threshold_equals_prevalence():
    model = parity_model(4, (1, 2), 0.2)
    psi = PenaltySpec.natural(model)
    assert psi.threshold() == pytest.approx(model.response_rate(), abs=1e-15)


def test_penalty_validation():
    with pytest.raises(ValueError):
        PenaltySpec.explicit(0.0, 1.0)
    with pytest.raises(ValueError):
        PenaltySpec(psi_minus=1.0, psi_plus=1.0, mode="weird")


def test_optimal_classifier_is_parity_rule():
    model = parity_model(5, (2, 3, 5), 0.2)
    f = optimal_classifier(model, PenaltySpec.natural(model))
    assert f.subset == (2, 3, 5)
    for state in product((0, 1, 2), repeat=3):
        expected = 1 if sum(state) % 2 == 1 else -1
        assert f(state) == expected


def test_optimal_classifier_gamma_one_unit_weights():
    model = parity_model(3, (1, 3), 1.0)
    f = optimal_classifier(model, PenaltySpec.explicit(1.0, 1.0))
    for state in product((0, 1, 2), repeat=2):
        assert f(state) == (1 if sum(state) % 2 == 1 else -1)


def test_optimal_classifier_empty_decision_set():
    # threshold at or above gamma: no state clears it, constant -1
    model = parity_model(3, (1, 2), 0.4)
    f = optimal_classifier(model, PenaltySpec.explicit(2.0, 3.0))  # threshold 0.4
    assert all(label == -1 for label in f.decision.values())


def test_error_exact_optimal_closed_form():
    for gamma in (0.05, 0.1, 0.2, 0.5, 0.9):
        model = parity_model(6, (2, 3, 5), gamma)
        psi = PenaltySpec.natural(model)
        f = optimal_classifier(model, psi)
        expected = (1.0 - gamma) / (1.0 - gamma / 2.0)
        assert error_exact(model, f, psi) == pytest.approx(expected, abs=1e-12)


def test_error_exact_constant_plus_one():
    model = parity_model(4, (1, 2, 4), 0.2)
    psi = PenaltySpec.natural(model)
    const = Classifier(subset=(3,), decision={(0,): 1, (1,): 1, (2,): 1})
    assert error_exact(model, const, psi) == pytest.approx(2.0, abs=1e-12)


def test_error_exact_superset_equals_relevant():
    model = parity_model(5, (2, 4), 0.5)
    psi = PenaltySpec.natural(model)
    on_relevant = error_exact(model, optimal_classifier(model, psi), psi)
    on_superset = error_exact(model, optimal_classifier(model, psi, (1, 2, 4)), psi)
    assert on_superset == pytest.approx(on_relevant, abs=1e-14)


def test_error_exact_rejects_foreign_indices():
    model = parity_model(3, (1, 2), 0.2)
    f = Classifier(subset=(4,), decision={(0,): 1, (1,): -1, (2,): 1})
    with pytest.raises(ValueError):
        error_exact(model, f, PenaltySpec.natural(model))


def test_error_exact_matches_full_enumeration():
    # collapsed-space computation vs literal 3^n sweep, several shapes
    rng = np.random.default_rng(5)
    configs = [
        (3, (1, 3), 0.2),
        (4, (2, 3), 0.35),
        (5, (1, 4, 5), 0.1),
        (6, (2, 3, 5), 0.2),
    ]
    for n, relevant, gamma in configs:
        mafs = tuple(
            0.5 if i + 1 in relevant else float(rng.uniform(0.05, 0.5))
            for i in range(n)
        )
        model = XorModel(n=n, mafs=mafs, relevant=relevant, gamma=gamma)
        for psi in (PenaltySpec.natural(model), PenaltySpec.explicit(0.7, 2.3)):
            size = int(rng.integers(1, min(n, 3) + 1))
            subset = tuple(sorted(rng.choice(n, size=size, replace=False) + 1))
            decision = {
                state: int(rng.choice((-1, 1)))
                for state in product((0, 1, 2), repeat=size)
            }
            f = Classifier(subset=subset, decision=decision)
            fast = error_exact(model, f, psi)
            full = oracle_error_exact(
                mafs, relevant, gamma, subset, decision, psi.psi_minus, psi.psi_plus
            )
            assert fast == pytest.approx(full, abs=1e-12)


@pytest.mark.parametrize("relevant", [(2,), (1, 3)])
def test_optimal_beats_all_decision_maps(relevant):
    # exhaustive over every decision map on the relevant coordinates
    model = parity_model(3, relevant, 0.3)
    psi = PenaltySpec.natural(model)
    best = error_exact(model, optimal_classifier(model, psi), psi)
    r = len(relevant)
    states = list(product((0, 1, 2), repeat=r))
    for labels in product((-1, 1), repeat=len(states)):
        f = Classifier(subset=relevant, decision=dict(zip(states, labels)))
        assert best <= error_exact(model, f, psi) + 1e-12


def test_optimal_beats_maps_three_relevant():
    # 2^27 maps is out of reach; use the per-state decomposition (the error
    # splits into independent per-cell costs) plus a large random sweep
    model = parity_model(4, (1, 2, 4), 0.25)
    psi = PenaltySpec.natural(model)
    f_star = optimal_classifier(model, psi)
    states = list(product((0, 1, 2), repeat=3))
    for state in states:
        q = conditional_response_rate(model, (1, 2, 4), state)
        cost_plus = psi.psi_minus * (1.0 - q)
        cost_minus = psi.psi_plus * q
        if cost_plus < cost_minus:
            assert f_star(state) == 1
        else:
            assert f_star(state) == -1  # ties also resolve to -1
    best = error_exact(model, f_star, psi)
    rng = np.random.default_rng(11)
    for _ in range(2000):
        labels = rng.choice((-1, 1), size=len(states))
        f = Classifier(subset=(1, 2, 4), decision=dict(zip(states, labels)))
        assert best <= error_exact(model, f, psi) + 1e-12


@pytest.mark.parametrize("n,relevant", [(6, (2, 5)), (8, (2, 5, 7)), (5, (3,))])
def test_subset_argmin_at_relevant(n, relevant):
    model = parity_model(n, relevant, 0.3)
    psi = PenaltySpec.natural(model)
    r = len(relevant)
    scores = {}
    for subset in combinations(range(1, n + 1), r):
        f = optimal_classifier(model, psi, subset)
        scores[subset] = error_exact(model, f, psi)
    assert min(scores, key=scores.get) == relevant
    # every wrong subset carries no signal: its best rule is constant -1
    for subset, value in scores.items():
        if subset != relevant:
            assert value == pytest.approx(2.0, abs=1e-12)


def test_conditional_rate_marginalizes_missing_relevant():
    model = parity_model(4, (1, 2), 0.4)
    # subset misses relevant factor 1: flat at gamma/2 whatever the values
    for state in product((0, 1, 2), repeat=2):
        q = conditional_response_rate(model, (2, 3), state)
        assert q == pytest.approx(0.2, abs=1e-15)
    # full relevant coverage: parity decides
    assert conditional_response_rate(model, (1, 2), (1, 0)) == 0.4
    assert conditional_response_rate(model, (1, 2), (1, 1)) == 0.0


def test_diagnostics_nesting_and_sign():
    model = parity_model(4, (2, 4), 0.3)
    for psi in (PenaltySpec.natural(model), PenaltySpec.explicit(1.0, 1.5)):
        diag = model_diagnostics(model, psi)
        assert diag.set_a <= diag.set_u
        assert diag.set_u <= set(diag.support_m)
        for state in diag.support_m:
            assert (diag.l_weights[state] > 0) == (state in diag.set_a)


def test_maincond_residual_zero_when_predictions_match():
    model = parity_model(3, (1, 3), 0.3)
    psi = PenaltySpec.natural(model)
    f = optimal_classifier(model, psi)
    predictions = {state: f(state) for state in product((0, 1, 2), repeat=2)}
    assert maincond_residual(model, psi, predictions, f, set_u=set()) == 0.0


def test_maincond_residual_zero_off_good_set():
    # with U as the off-boundary set, L vanishes outside U: any predictions work
    model = parity_model(3, (1, 3), 0.3)
    psi = PenaltySpec.natural(model)
    f = optimal_classifier(model, psi)
    diag = model_diagnostics(model, psi)
    adversarial = {state: -f(state) for state in diag.support_m}
    residual = maincond_residual(model, psi, adversarial, f, diag.set_u)
    assert residual == pytest.approx(0.0, abs=1e-15)


def test_maincond_residual_single_misprediction():
    model = parity_model(3, (1, 3), 0.3)
    psi = PenaltySpec.natural(model)
    f = optimal_classifier(model, psi)
    diag = model_diagnostics(model, psi)
    for flipped in [(0, 1), (0, 0)]:  # one decision-set state, one complement state
        predictions = {state: f(state) for state in diag.support_m}
        predictions[flipped] = -f(flipped)
        set_u = set(diag.support_m) - {flipped}
        residual = maincond_residual(model, psi, predictions, f, set_u)
        assert residual == pytest.approx(f(flipped) * diag.l_weights[flipped], abs=1e-15)
        assert residual != 0.0


def test_maincond_residual_requires_predictions_off_u():
    model = parity_model(3, (1, 3), 0.3)
    psi = PenaltySpec.natural(model)
    f = optimal_classifier(model, psi)
    with pytest.raises(ValueError):
        maincond_residual(model, psi, {}, f, set_u=set())
