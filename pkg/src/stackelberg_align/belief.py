"""Posterior over user types given binary engagement (and signal) indicators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .domain import PRIOR_TOL, Content, Scenario, StrategyProfile
from .errors import MalformedInput, ZeroProbabilityObservation


@dataclass(frozen=True)
class Observation:
    content: Content
    engaged: bool
    signaled: Optional[bool] = None


def as_belief(weights, n: Optional[int] = None) -> np.ndarray:
    """Validate a probability vector and return it as a float array."""
    b = np.asarray(weights, dtype=float)
    if b.ndim != 1 or (n is not None and b.shape[0] != n):
        raise MalformedInput(f"belief must be a vector of length {n}, got shape {b.shape}")
    if np.any(~np.isfinite(b)) or np.any(b < 0) or abs(b.sum() - 1.0) > PRIOR_TOL:
        raise MalformedInput(f"belief {b.tolist()} is not a probability vector")
    return b


def likelihood(f: np.ndarray, u: Optional[np.ndarray], obs: Observation) -> np.ndarray:
    """Per-type probability of ``obs`` given (2, n) engagement/signal arrays."""
    fs = f[obs.content]
    lik = fs if obs.engaged else 1.0 - fs
    if obs.signaled is not None:
        if u is None:
            raise MalformedInput("signal indicator given but no signal probabilities")
        us = u[obs.content]
        lik = lik * (us if obs.signaled else 1.0 - us)
    return lik


def _check_obs(scenario: Scenario, obs: Observation) -> None:
    if (obs.signaled is not None) != scenario.signaling:
        raise MalformedInput(
            "signal indicator must be present exactly when the scenario has signaling"
        )


def observation_probability(
    scenario: Scenario, belief: np.ndarray, profile: StrategyProfile, obs: Observation
) -> float:
    _check_obs(scenario, obs)
    f, u = profile.arrays(scenario)
    return float(np.dot(belief, likelihood(f, u, obs)))


def update(
    scenario: Scenario, belief: np.ndarray, profile: StrategyProfile, obs: Observation
) -> np.ndarray:
    """Bayes update of ``belief`` after ``obs``."""
    _check_obs(scenario, obs)
    f, u = profile.arrays(scenario)
    return update_arrays(belief, likelihood(f, u, obs))


def update_arrays(belief: np.ndarray, lik: np.ndarray) -> np.ndarray:
    w = np.asarray(belief, dtype=float) * lik
    total = w.sum()
    if total <= 0.0:
        raise ZeroProbabilityObservation("observation has zero probability under the belief")
    return w / total


def observations(scenario: Scenario, content: Content) -> Iterator[Observation]:
    """All observations that can follow showing ``content``."""
    for engaged in (True, False):
        if scenario.signaling:
            for signaled in (True, False):
                yield Observation(content, engaged, signaled)
        else:
            yield Observation(content, engaged)
