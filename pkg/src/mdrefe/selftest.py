"""Built-in verification battery behind ``mdrefe selftest``.

Each check prints one PASS/FAIL line.  The default battery covers the fast
guarantees (closed-form golden values, law checks against Monte Carlo,
estimator self-consistency, determinism); ``--full`` adds the slow
statistical criteria.  The pytest suite remains the authoritative gate; this
battery exists so an installed copy can be validated without the test tree.
"""

from __future__ import annotations

import time
from fractions import Fraction

import numpy as np

from .datagen import SeededStream, XorModel, sample_observation
from .estimator import err_hat_K, partition_folds, predict, train_rule
from .exact import PenaltySpec, error_exact, optimal_classifier
from .planner import CostParams, NTildeLaw, lambda0, ntilde_law, s_str
from .stratify import build_stratified, case_law_check, case_quota, estimate_prevalence


def check_lambda0_golden():
    golden = {0.05: Fraction(11, 30), 0.1: Fraction(11, 20), 0.2: Fraction(11, 15)}
    worst = max(
        abs(lambda0(0.5, 0.1, gamma / 2.0) - float(frac)) for gamma, frac in golden.items()
    )
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def check_free_label_plan():
    bad = []
    for c in (10, 137, 500):
        for alpha in (0.01, 0.05, 0.5):
            for p in (0.05, 0.3, 0.49):
                if s_str(CostParams(c=c, w=0.0, a=0.5, alpha=alpha), p) != c:
                    bad.append((c, alpha, p))
    return not bad, f"{27 - len(bad)}/27 grid points returned C"


def check_ntilde_closure():
    worst = 0.0
    for n_cases, n_controls, p in ((3, 3, 0.5), (2, 8, 0.1), (10, 5, 0.7), (1, 1, 0.5)):
        law = NTildeLaw(n_cases=n_cases, n_controls=n_controls, p=p)
        top = law.quantile(1.0 - 1e-13)
        total = sum(law.pmf(m) for m in range(law.size, top + 1))
        worst = max(worst, abs(total - 1.0))
        if law.pmf(law.size - 1) != 0.0:
            return False, f"mass below the sample size at {(n_cases, n_controls, p)}"
    return worst < 1e-10, f"max |sum pmf - 1| = {worst:.2e}"


def check_ntilde_empirical(trials: int = 100_000):
    model = XorModel(n=1, mafs=(0.5,), relevant=(1,), gamma=1.0)  # p = 0.5
    law = ntilde_law(6, 0.5, 0.5)
    counts: dict[int, int] = {}
    stream = SeededStream(20240)
    for _ in range(trials):
        sample = build_stratified(model, stream, 6, 0.5)
        counts[sample.n_tilde] = counts.get(sample.n_tilde, 0) + 1
    top = max(counts)
    sup = max(
        abs(counts.get(m, 0) / trials - law.pmf(m)) for m in range(6, top + 1)
    )
    return sup < 0.01, f"sup |empirical - pmf| = {sup:.4f} over {trials} builds"


def check_case_law(cases: int = 100_000):
    model = XorModel(n=2, mafs=(0.5, 0.5), relevant=(1,), gamma=0.5)
    tv = case_law_check(model, SeededStream(333), cases)
    return tv < 0.02, f"TV = {tv:.4f} at {cases} accepted cases"


def check_prevalence(draws: int = 100_000):
    details = []
    ok = True
    for gamma in (0.1, 0.4):
        model = XorModel(n=2, mafs=(0.5, 0.3), relevant=(1,), gamma=gamma)
        stream = SeededStream(91 + int(gamma * 100))
        hits = sum(sample_observation(model, stream).y == 1 for _ in range(draws))
        p = gamma / 2.0
        bound = 3.0 * (p * (1.0 - p) / draws) ** 0.5
        dev = abs(hits / draws - p)
        ok = ok and dev < bound
        details.append(f"gamma={gamma}: |dev|={dev:.4f} < {bound:.4f}")
    return ok, "; ".join(details)


def check_budget_feasibility(trials: int = 10_000):
    c_budget, p, a, w = 5000, 0.1, 0.5, 0.1
    lam0 = lambda0(a, w, p)
    rng = np.random.default_rng(7)
    rates = {}
    for factor in (0.9, 1.1):
        n_size = int(factor * lam0 * c_budget)
        n_cases = case_quota(n_size, a)
        n_controls = n_size - n_cases
        cap = int(((w + 1.0) * c_budget - n_size) / w)
        # within budget iff the first `cap` labels hold both quotas
        case_counts = rng.binomial(cap, p, size=trials)
        hold = (case_counts >= n_cases) & (cap - case_counts >= n_controls)
        rates[factor] = hold.mean()
    ok = rates[0.9] > 0.95 and rates[1.1] < 0.05
    return ok, f"P(fit) at 0.9*lambda0: {rates[0.9]:.3f}, at 1.1*lambda0: {rates[1.1]:.3f}"


def check_estimator_self_consistency(samples: int = 25):
    rng = np.random.default_rng(11)
    for i in range(samples):
        model = XorModel(n=3, mafs=(0.5, 0.4, 0.5), relevant=(1, 3), gamma=0.6)
        stream = SeededStream(5000 + i)
        k_folds = int(rng.integers(2, 4))
        size = int(rng.integers(4 * k_folds, 24))
        sample = build_stratified(model, stream, size, 0.5)
        subset = tuple(sorted(rng.choice(3, size=2, replace=False) + 1))
        p_hat = estimate_prevalence(sample)
        estimate = err_hat_K(sample, k_folds, subset, p_hat)
        partition = partition_folds(sample, k_folds)
        total = 0.0
        for cls, x in ((0, sample.controls), (1, sample.cases)):
            y = -1 if cls == 0 else 1
            for k in range(k_folds):
                rule = train_rule(sample, partition, k, subset, p_hat)
                idx = partition.indices(y, k)
                wrong = sum(predict(rule, x[j]) != y for j in idx)
                total += 1.0 * (wrong / len(idx))
        if (2.0 / k_folds) * total != estimate.value:
            return False, f"mismatch on random sample {i}"
    return True, f"{samples} random samples, fold-by-fold recomputation identical"


def check_stream_determinism():
    model = XorModel(n=4, mafs=(0.5, 0.2, 0.3, 0.5), relevant=(1, 4), gamma=0.3)
    a = SeededStream(555)
    eager = [sample_observation(model, a) for _ in range(40)]
    b = SeededStream(555)
    lazy_labels = [b.draw_label(model)[0] for _ in range(40)]
    if [o.y for o in eager] != lazy_labels:
        return False, "labels shift when factor vectors are not materialized"
    c = SeededStream(555, counter=17)
    obs = sample_observation(model, c)
    same = obs.y == eager[17].y and (obs.x == eager[17].x).all()
    return same, "counter-addressed replay matches sequential draw"


def check_consistency_50_seeds():
    model = XorModel(n=6, mafs=(0.5,) * 6, relevant=(2, 3), gamma=0.2)
    psi = PenaltySpec.natural(model)
    target = error_exact(model, optimal_classifier(model, psi), psi)
    hits = 0
    seeds = 50
    for seed in range(seeds):
        sample = build_stratified(model, SeededStream(seed), 2000, 0.5)
        estimate = err_hat_K(sample, 5, (2, 3), model.response_rate())
        if abs(estimate.value - target) < 0.05:
            hits += 1
    return hits >= 45, f"{hits}/{seeds} seeds within 0.05 of {target:.6f}"


def check_desk_trend():
    from .harness import desk_config, run_experiment, MethodVariant
    import tempfile, os

    config = desk_config()
    with tempfile.TemporaryDirectory() as tmp:
        report = run_experiment(config, os.path.join(tmp, "desk.csv"))
    cells = report.by_cell()
    inversions_ok = True
    for variant in MethodVariant:
        for gamma in config.gamma_levels:
            curve = [cells[(variant, gamma, c)] for c in config.C_levels]
            drops = sum(1 for lo, hi in zip(curve, curve[1:]) if hi < lo)
            if drops > 1:
                inversions_ok = False
    smdr = [
        MethodVariant.SMDR_PLANNED_N_KNOWN_P,
        MethodVariant.SMDR_SIZEC_ESTIMATED_P,
        MethodVariant.SMDR_SIZEC_KNOWN_P,
    ]
    imdr = [MethodVariant.IMDR_UNKNOWN_P, MethodVariant.IMDR_KNOWN_P]
    wins = 0
    for gamma in config.gamma_levels:
        for c in config.C_levels:
            best_s = max(cells[(v, gamma, c)] for v in smdr)
            best_i = max(cells[(v, gamma, c)] for v in imdr)
            wins += best_s >= best_i
    ok = inversions_ok and wins >= 6
    return ok, f"curves monotone within one inversion: {inversions_ok}; stratified wins {wins}/9 cells"


def check_run_determinism():
    from .harness import ExperimentConfig, run_experiment
    import tempfile, os

    config = ExperimentConfig(
        n=6, K=2, r=2, relevant=(2, 5), gamma_levels=(0.4,), C_levels=(40, 60),
        w_levels=(0.0, 0.1), D=3, base_seed=3,
    )
    with tempfile.TemporaryDirectory() as tmp:
        first = os.path.join(tmp, "a.csv")
        second = os.path.join(tmp, "b.csv")
        run_experiment(config, first)
        run_experiment(config, second)
        with open(first, "rb") as fa, open(second, "rb") as fb:
            same = fa.read() == fb.read()
    return same, "repeated runs byte-identical"


FAST_CHECKS = [
    ("lambda0 golden values", check_lambda0_golden),
    ("free-label plan returns C", check_free_label_plan),
    ("raw-draw law sums to one", check_ntilde_closure),
    ("raw-draw law vs Monte Carlo", check_ntilde_empirical),
    ("accepted-case law", check_case_law),
    ("marginal case probability", check_prevalence),
    ("budget feasibility boundary", check_budget_feasibility),
    ("estimator self-consistency", check_estimator_self_consistency),
    ("stream determinism", check_stream_determinism),
]

FULL_CHECKS = [
    ("error estimate consistency (50 seeds)", check_consistency_50_seeds),
    ("desk-scale TMR trend", check_desk_trend),
    ("run CSV determinism", check_run_determinism),
]


def run(full: bool = False) -> bool:
    checks = FAST_CHECKS + (FULL_CHECKS if full else [])
    all_ok = True
    for name, check in checks:
        start = time.time()
        try:
            ok, detail = check()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail} ({time.time() - start:.1f}s)")
        all_ok = all_ok and ok
    print("selftest:", "all checks passed" if all_ok else "FAILURES above")
    return all_ok
