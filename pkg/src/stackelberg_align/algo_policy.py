"""The engagement-maximizing algorithm's exact best response.

The algorithm recommends A exactly when the belief-weighted classifier
weights are nonnegative.  Each type's weight depends only on that type's own
strategy, which is what makes the per-type margin well defined.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .domain import Content, Scenario, StrategyProfile


@dataclass(frozen=True)
class QVector:
    q_a: np.ndarray
    q_b: np.ndarray

    def __getitem__(self, s: Content) -> np.ndarray:
        return self.q_a if s is Content.A else self.q_b


def weights_from_arrays(
    alpha: np.ndarray, f: np.ndarray, u: Optional[np.ndarray], gamma: float
) -> np.ndarray:
    """Classifier weights h from (2, ...) arrays; broadcasts over trailing axes."""
    keep = f if u is None else f * (1.0 - u)
    num = (1.0 - gamma) * (f[0] / alpha[0] - f[1] / alpha[1])
    return num / ((1.0 - gamma * keep[0]) * (1.0 - gamma * keep[1]))


def q_from_arrays(
    alpha: np.ndarray, f: np.ndarray, u: Optional[np.ndarray], gamma: float
) -> np.ndarray:
    """Per-type values q(s) as a (2, n) array.

    q(s) is the algorithm's discounted engagement from showing s to a known
    type and switching to the other content after the first decline or
    signal.
    """
    if u is None:
        u = np.zeros_like(f)
    q = np.empty_like(f, dtype=float)
    for s in (0, 1):
        o = 1 - s
        keep = (1.0 - u[s]) * f[s]
        stay = 1.0 - gamma * keep
        q[s] = f[s] / (stay * alpha[s]) + gamma * f[o] * (1.0 - keep) / (
            stay * (1.0 - gamma * f[o]) * alpha[o]
        )
    return q


def classifier_weights(scenario: Scenario, profile: StrategyProfile) -> np.ndarray:
    f, u = profile.arrays(scenario)
    return weights_from_arrays(scenario.alpha, f, u if scenario.signaling else None, scenario.gamma_alg)


def q_vector(scenario: Scenario, profile: StrategyProfile) -> QVector:
    f, u = profile.arrays(scenario)
    q = q_from_arrays(scenario.alpha, f, u if scenario.signaling else None, scenario.gamma_alg)
    return QVector(q[0], q[1])


def qa_value(
    scenario: Scenario, profile: StrategyProfile, belief: np.ndarray, start: Content
) -> float:
    """Optimal discounted engagement when the algorithm must show ``start`` first."""
    f, u = profile.arrays(scenario)
    q = q_from_arrays(scenario.alpha, f, u, scenario.gamma_alg)
    return qa_from_arrays(q, f, u, scenario.gamma_alg, np.asarray(belief, dtype=float), start)


def qa_from_arrays(
    q: np.ndarray, f: np.ndarray, u: np.ndarray, gamma: float, belief: np.ndarray, start: int
) -> float:
    s, o = int(start), 1 - int(start)
    switch_gain = np.dot(belief, (q[o] - q[s]) * (1.0 - u[s]) * f[s])
    return float(np.dot(belief, q[s]) + gamma * max(switch_gain, 0.0))


def best_content(scenario: Scenario, profile: StrategyProfile, belief: np.ndarray) -> Content:
    """A iff the belief-weighted classifier weight is >= 0 (ties go to A)."""
    h = classifier_weights(scenario, profile)
    return Content.A if float(np.dot(belief, h)) >= 0.0 else Content.B


def margin(scenario: Scenario, profile: StrategyProfile, type_id: str) -> float:
    """Classifier mass contributed by every type other than ``type_id``."""
    i = scenario.index(type_id)
    return float(margins_from_weights(classifier_weights(scenario, profile), scenario.prior_array)[i])


def margins(scenario: Scenario, profile: StrategyProfile) -> dict[str, float]:
    m = margins_from_weights(classifier_weights(scenario, profile), scenario.prior_array)
    return {t.id: float(v) for t, v in zip(scenario.types, m)}


def margins_from_weights(h: np.ndarray, belief: np.ndarray) -> np.ndarray:
    # explicit leave-one-out sums rather than total minus own term, so the
    # result does not carry rounding from the type's own weight
    hl = h * belief
    n = hl.shape[0]
    return np.array([sum(hl[j] for j in range(n) if j != i) for i in range(n)], dtype=float)
