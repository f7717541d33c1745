"""Exact quantities of the joint law: error functional, optimal rule, diagnostics.

The error of a classifier f is the penalty-weighted misclassification
functional

    err(f) = 2 * sum_y psi(y) * P(Y = y, f(X) != y),

minimized by predicting +1 exactly where P(Y = 1 | X = x) exceeds
psi(-1) / (psi(-1) + psi(1)).  Because the response depends only on the
relevant factors and factors are independent, every sum here collapses to
the coordinates actually involved (the classifier's subset united with the
relevant set); the full 3^n state space is never enumerated.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping

from .datagen import XorModel, genotype_pmf, odd_parity_prob

GENOTYPES = (0, 1, 2)


@dataclass(frozen=True)
class PenaltySpec:
    """Positive weights charged for mispredicting each label.

    ``natural`` mode ties the weights to a model: psi(y) = 1 / P(Y = y),
    which makes the two per-class error terms directly comparable and the
    optimal decision threshold equal to P(Y = 1).
    """

    psi_minus: float
    psi_plus: float
    mode: str = "explicit"

    def __post_init__(self):
        if self.mode not in ("explicit", "natural"):
            raise ValueError(f"unknown penalty mode {self.mode!r}")
        if not (self.psi_minus > 0.0 and self.psi_plus > 0.0):
            raise ValueError("penalty weights must be strictly positive")

    @classmethod
    def explicit(cls, psi_minus: float, psi_plus: float) -> "PenaltySpec":
        return cls(psi_minus=psi_minus, psi_plus=psi_plus, mode="explicit")

    @classmethod
    def natural(cls, model: XorModel) -> "PenaltySpec":
        p = model.response_rate()
        if not 0.0 < p < 1.0:
            raise ValueError("natural penalty requires a nondegenerate response rate")
        return cls(psi_minus=1.0 / (1.0 - p), psi_plus=1.0 / p, mode="natural")

    def threshold(self) -> float:
        """Decision boundary psi(-1) / (psi(-1) + psi(1)) for predicting +1."""
        return self.psi_minus / (self.psi_minus + self.psi_plus)


@dataclass(frozen=True)
class Classifier:
    """A decision rule that reads only the factors in ``subset`` (1-based).

    ``decision`` must assign a label in {-1, +1} to every state of the
    projected factor space {0,1,2}^len(subset).
    """

    subset: tuple[int, ...]
    decision: Mapping[tuple[int, ...], int]

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(int(i) for i in self.subset))
        if not self.subset:
            raise ValueError("classifier subset must be nonempty")
        if len(set(self.subset)) != len(self.subset):
            raise ValueError("classifier subset must be duplicate-free")
        r = len(self.subset)
        if len(self.decision) != 3**r:
            raise ValueError(
                f"decision map must be total on {{0,1,2}}^{r} "
                f"({3 ** r} states, got {len(self.decision)})"
            )
        for label in self.decision.values():
            if label not in (-1, 1):
                raise ValueError("decision values must be -1 or +1")

    def __call__(self, values: tuple[int, ...]) -> int:
        return self.decision[tuple(values)]


@dataclass(frozen=True)
class ModelDiagnostics:
    """Consistency diagnostics over a collapsed factor space.

    ``space`` lists the (1-based) coordinates the states refer to.  ``set_a``
    is where the optimal rule predicts +1, ``set_u`` is where the conditional
    case probability is off the decision boundary (pointwise convergence of a
    plug-in rule there suffices for consistency), and ``l_weights`` carries
    the signed evidence weight of each state.
    """

    space: tuple[int, ...]
    support_m: tuple[tuple[int, ...], ...]
    set_a: frozenset
    set_u: frozenset
    l_weights: dict


def _collapsed_space(model: XorModel, subset) -> tuple[int, ...]:
    coords = set(int(i) for i in subset) | set(model.relevant)
    bad = [i for i in coords if not 1 <= i <= model.n]
    if bad:
        raise ValueError(f"factor indices outside 1..{model.n}: {sorted(bad)}")
    return tuple(sorted(coords))


def state_prob(model: XorModel, coords, values) -> float:
    """P(X_coords = values) under independent per-factor genotype laws."""
    prob = 1.0
    for i, v in zip(coords, values):
        prob *= genotype_pmf(model.mafs[i - 1], v)
    return prob


def conditional_response_rate(model: XorModel, coords, values) -> float:
    """P(Y = 1 | X_coords = values) for an arbitrary coordinate collection.

    Relevant coordinates outside ``coords`` are marginalized through the
    parity law of their independent sum; once any relevant factor is missing
    the conditional rate collapses to the marginal rate over that remainder.
    """
    fixed = dict(zip(coords, values))
    offset = sum(fixed[i] for i in model.relevant if i in fixed) & 1
    missing = [i for i in model.relevant if i not in fixed]
    if not missing:
        return model.gamma if offset == 1 else 0.0
    odd = odd_parity_prob(model.mafs[i - 1] for i in missing)
    # parity of the missing part must complement the fixed offset to odd
    return model.gamma * (odd if offset == 0 else 1.0 - odd)


def error_exact(model: XorModel, f: Classifier, psi: PenaltySpec) -> float:
    """Exact penalty-weighted error of ``f`` under the model.

    Sums over the collapsed space of f's subset united with the relevant
    set; coordinates outside it are independent of both the response and the
    decision and marginalize away exactly.
    """
    space = _collapsed_space(model, f.subset)
    positions = [space.index(i) for i in f.subset]
    total = 0.0
    for state in product(GENOTYPES, repeat=len(space)):
        q = conditional_response_rate(model, space, state)
        prob = state_prob(model, space, state)
        if f(tuple(state[j] for j in positions)) == 1:
            total += psi.psi_minus * (1.0 - q) * prob
        else:
            total += psi.psi_plus * q * prob
    return 2.0 * total


def optimal_classifier(
    model: XorModel, psi: PenaltySpec, subset=None
) -> Classifier:
    """Best rule readable from ``subset`` (default: the relevant factors).

    Predicts +1 exactly where the conditional case probability given the
    subset strictly exceeds the penalty threshold; ties go to -1.
    """
    coords = tuple(sorted(int(i) for i in subset)) if subset else model.relevant
    bad = [i for i in coords if not 1 <= i <= model.n]
    if bad:
        raise ValueError(f"factor indices outside 1..{model.n}: {sorted(bad)}")
    thr = psi.threshold()
    decision = {}
    for state in product(GENOTYPES, repeat=len(coords)):
        q = conditional_response_rate(model, coords, state)
        decision[state] = 1 if q > thr else -1
    return Classifier(subset=coords, decision=decision)


def model_diagnostics(
    model: XorModel, psi: PenaltySpec, subset=None
) -> ModelDiagnostics:
    """Materialize support, decision set, off-boundary set and L-weights.

    All four live on the collapsed space of ``subset`` united with the
    relevant factors.  L(x) aggregates psi(1) P(X=x, Y=1) - psi(-1) P(X=x,
    Y=-1) over the cylinder of each collapsed state; its sign is positive
    exactly on the decision set.
    """
    space = _collapsed_space(model, subset or ())
    thr = psi.threshold()
    support = []
    set_a = set()
    set_u = set()
    l_weights = {}
    for state in product(GENOTYPES, repeat=len(space)):
        prob = state_prob(model, space, state)
        if prob <= 0.0:
            continue
        support.append(state)
        q = conditional_response_rate(model, space, state)
        if q > thr:
            set_a.add(state)
        if q != thr:
            set_u.add(state)
        l_weights[state] = prob * (psi.psi_plus * q - psi.psi_minus * (1.0 - q))
    return ModelDiagnostics(
        space=space,
        support_m=tuple(support),
        set_a=frozenset(set_a),
        set_u=frozenset(set_u),
        l_weights=l_weights,
    )


def maincond_residual(
    model: XorModel,
    psi: PenaltySpec,
    predictions: Mapping[tuple[int, ...], int],
    f: Classifier,
    set_u,
) -> float:
    """Signed residual a plug-in rule leaves outside the good set U, one fold.

    For states off U where f says y, a prediction of -y contributes
    y * L(x); the estimator tracks the target error exactly when this sum
    tends to zero.  With U chosen as the off-boundary set the weights vanish
    off U and the residual is identically zero.
    """
    space = _collapsed_space(model, f.subset)
    positions = [space.index(i) for i in f.subset]
    set_u = set(tuple(s) for s in set_u)
    total = 0.0
    for state in product(GENOTYPES, repeat=len(space)):
        if state in set_u:
            continue
        if state_prob(model, space, state) <= 0.0:
            continue
        y = f(tuple(state[j] for j in positions))
        try:
            pred = predictions[state]
        except KeyError:
            raise ValueError(f"prediction missing for state {state} outside U") from None
        if pred == -y:
            q = conditional_response_rate(model, space, state)
            prob = state_prob(model, space, state)
            l_x = prob * (psi.psi_plus * q - psi.psi_minus * (1.0 - q))
            total += y * l_x
    return total
