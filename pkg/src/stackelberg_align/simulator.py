"""Monte Carlo sessions against the exact best-responding algorithm.

Each replication owns a random stream derived from (seed, replication), and
draws a (T, 3) block of uniforms up front: engagement, signal and length.
Replications are then advanced together as arrays, so results do not depend
on how replications are batched.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import algo_policy
from .domain import Content, EntryMode, Scenario, StrategyProfile
from .equilibrium import Selection, SolverConfig, solve_equilibrium

BASELINE_GAMMA = 1.0 - 1e-9
CHUNK = 2048


class LengthModel(Enum):
    GEOMETRIC = "geometric"
    DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class SessionStep:
    content: Content
    engaged: bool
    length: int
    signaled: bool
    belief_after: np.ndarray


@dataclass(frozen=True)
class SessionTranscript:
    type_id: str
    steps: tuple[SessionStep, ...]

    @property
    def contents(self) -> list[Content]:
        return [s.content for s in self.steps]

    @property
    def engaged(self) -> list[bool]:
        return [s.engaged for s in self.steps]

    def total_reward(self, scenario: Scenario) -> float:
        p = scenario.params(self.type_id)
        c = scenario.cost or 0.0
        return sum(
            (p.reward(s.content) if s.engaged else 0.0) - (c if s.signaled else 0.0)
            for s in self.steps
        )


@dataclass(frozen=True)
class RegretCurve:
    type_id: str
    t: np.ndarray
    value_actual: np.ndarray
    value_baseline: np.ndarray

    @property
    def regret(self) -> np.ndarray:
        return self.value_baseline - self.value_actual


def engagement_lengths(
    alpha: np.ndarray, uniforms: np.ndarray, model: LengthModel = LengthModel.GEOMETRIC
) -> np.ndarray:
    """Lengths on {1, 2, ...} with mean 1/alpha, by inverse CDF of the uniforms."""
    alpha = np.asarray(alpha, dtype=float)
    if model is LengthModel.DETERMINISTIC:
        return np.broadcast_to(np.ceil(1.0 / alpha), np.shape(uniforms)).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.floor(np.log1p(-uniforms) / np.log1p(-alpha)) + 1.0
    return np.where(alpha >= 1.0, 1, raw).astype(np.int64)


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))


def _uniforms(seed: int, reps: Sequence[int], T: int) -> tuple[np.ndarray, np.ndarray]:
    entry = np.empty(len(reps))
    U = np.empty((len(reps), T, 3))
    for j, r in enumerate(reps):
        g = replication_rng(seed, r)
        entry[j] = g.random()
        U[j] = g.random((T, 3))
    return entry, U


def _run(
    scenario: Scenario,
    profile: StrategyProfile,
    type_id: str,
    T: int,
    seed: int,
    reps: Sequence[int],
    model: LengthModel,
    keep_beliefs: bool = False,
) -> dict[str, np.ndarray]:
    i = scenario.index(type_id)
    f, u = profile.arrays(scenario)
    h = algo_policy.classifier_weights(scenario, profile)
    signaling = scenario.signaling
    c = scenario.cost or 0.0
    R = len(reps)
    entry_u, U = _uniforms(seed, reps, T)

    belief = np.tile(scenario.prior_array, (R, 1))
    if scenario.entry.mode is EntryMode.AE:
        first = int(algo_policy.best_content(scenario, profile, scenario.prior_array))
        content = np.full(R, first)
    else:
        content = np.where(entry_u < scenario.entry.p1_a, 0, 1)

    out = {
        "content": np.empty((R, T), dtype=np.int64),
        "engaged": np.empty((R, T), dtype=bool),
        "signaled": np.zeros((R, T), dtype=bool),
        "length": np.zeros((R, T), dtype=np.int64),
        "reward": np.empty((R, T)),
    }
    if keep_beliefs:
        out["belief"] = np.empty((R, T, scenario.n_types))
    for t in range(T):
        out["content"][:, t] = content
        fs = f[content, i]
        engaged = U[:, t, 0] < fs
        lik = np.where(engaged[:, None], f[content], 1.0 - f[content])
        reward = np.where(engaged, scenario.reward[content, i], 0.0)
        if signaling:
            signaled = U[:, t, 1] < u[content, i]
            lik = lik * np.where(signaled[:, None], u[content], 1.0 - u[content])
            reward = reward - np.where(signaled, c, 0.0)
            out["signaled"][:, t] = signaled
        out["engaged"][:, t] = engaged
        out["length"][:, t] = np.where(
            engaged, engagement_lengths(scenario.alpha[content, i], U[:, t, 2], model), 0
        )
        out["reward"][:, t] = reward
        w = belief * lik
        belief = w / w.sum(axis=1, keepdims=True)
        if keep_beliefs:
            out["belief"][:, t] = belief
        content = np.where((belief * h).sum(axis=1) >= 0.0, 0, 1)
    return out


def simulate_session(
    scenario: Scenario,
    profile: StrategyProfile,
    type_id: str,
    T: int,
    seed: int,
    rep: int = 0,
    length_model: LengthModel = LengthModel.GEOMETRIC,
) -> SessionTranscript:
    run = _run(scenario, profile, type_id, T, seed, [rep], length_model, keep_beliefs=True)
    steps = tuple(
        SessionStep(
            Content(int(run["content"][0, t])),
            bool(run["engaged"][0, t]),
            int(run["length"][0, t]),
            bool(run["signaled"][0, t]),
            run["belief"][0, t].copy(),
        )
        for t in range(T)
    )
    return SessionTranscript(type_id, steps)


def value_T(
    scenario: Scenario,
    profile: StrategyProfile,
    type_id: str,
    T: int,
    reps: int,
    seed: int,
    length_model: LengthModel = LengthModel.GEOMETRIC,
) -> np.ndarray:
    """Mean cumulative undiscounted reward; entry t is V^t, with V^0 = 0."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    total = np.zeros(T)
    for start in range(0, reps, CHUNK):
        chunk = range(start, min(reps, start + CHUNK))
        run = _run(scenario, profile, type_id, T, seed, chunk, length_model)
        total += np.cumsum(run["reward"], axis=1).sum(axis=0)
    return np.concatenate([[0.0], total / reps])


def regret_curve(
    scenario: Scenario,
    gamma_user_actual: Optional[float],
    T: int,
    reps: int,
    seed: int,
    selection: Selection = None,
    type_ids: Optional[Sequence[str]] = None,
    actual_profile: Optional[StrategyProfile] = None,
    solver_cfg: Optional[SolverConfig] = None,
    baseline_gamma: float = BASELINE_GAMMA,
) -> dict[str, RegretCurve]:
    """Value under the actual equilibrium against the far-sighted baseline.

    Both profiles are simulated with the same random streams.
    """
    if actual_profile is None:
        actual_sc = scenario if gamma_user_actual is None else scenario.with_(gamma_user=gamma_user_actual)
        actual_profile = solve_equilibrium(actual_sc, selection, solver_cfg).profile
    baseline = solve_equilibrium(
        scenario.with_(gamma_user=baseline_gamma), selection, solver_cfg
    ).profile
    out = {}
    for tid in type_ids or scenario.ids:
        va = value_T(scenario, actual_profile, tid, T, reps, seed)[1:]
        vb = value_T(scenario, baseline, tid, T, reps, seed)[1:]
        out[tid] = RegretCurve(tid, np.arange(1, T + 1), va, vb)
    return out
