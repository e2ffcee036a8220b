"""Random valid scenarios, profiles and beliefs for property checks."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .domain import (
    Entry,
    EntryMode,
    Scenario,
    StrategyProfile,
    TypeStrategy,
    UserTypeParams,
)

RATIO_SHRINK = 1.0 - 1e-9


def random_type(rng: np.random.Generator, type_id: str, min_alpha: float = 0.2) -> UserTypeParams:
    alpha_b = rng.uniform(min_alpha + 0.05, 1.0)
    alpha_a = rng.uniform(min_alpha, alpha_b - 0.01)
    r_lo, r_hi = sorted(rng.uniform(0.1, 3.0, size=2))
    if r_lo == r_hi:
        r_hi += 0.5
    if rng.random() < 0.5:
        r_a, r_b = r_lo, r_hi  # Type1
    else:
        r_a, r_b = r_hi, r_lo  # Type2
    return UserTypeParams(type_id, float(alpha_a), float(alpha_b), float(r_a), float(r_b))


def random_belief(rng: np.random.Generator, n: int, interior: bool = True) -> np.ndarray:
    b = rng.dirichlet(np.ones(n))
    if not interior and n > 1 and rng.random() < 0.2:
        b[rng.integers(n)] = 0.0
        b = b / b.sum()
    return b


def random_scenario(
    rng: np.random.Generator,
    n_types: Optional[int] = None,
    signaling: bool = False,
    gamma_alg: tuple[float, float] = (0.5, 0.95),
    gamma_user: tuple[float, float] = (0.05, 0.95),
    min_alpha: float = 0.2,
) -> Scenario:
    n = int(rng.integers(2, 5)) if n_types is None else n_types
    types = tuple(random_type(rng, f"t{j}", min_alpha) for j in range(n))
    prior = random_belief(rng, n)
    cost = float(rng.uniform(0.0, 1.0)) if signaling else None
    return Scenario(
        types,
        tuple(float(x) for x in prior),
        float(rng.uniform(*gamma_alg)),
        float(rng.uniform(*gamma_user)),
        Entry(EntryMode.AE),
        cost,
    )


def random_strategy(
    rng: np.random.Generator, params: UserTypeParams, signaling: bool = False
) -> TypeStrategy:
    """f(-s*) uniform on the half-open feasible interval, or the {1} atom w.p. 1/2."""
    hi = min(params.ratio * RATIO_SHRINK, 1.0)
    if rng.random() < 0.5:
        x = 1.0
    else:
        x = float(rng.uniform(0.0, hi))
    y = 0.0
    if signaling and x < params.ratio:
        k = rng.integers(3)
        y = 0.0 if k == 0 else 1.0 if k == 1 else float(rng.random())
    return TypeStrategy.from_point(params, x, y)


def random_profile(
    rng: np.random.Generator, scenario: Scenario, signaling: Optional[bool] = None
) -> StrategyProfile:
    sig = scenario.signaling if signaling is None else signaling
    return StrategyProfile({t.id: random_strategy(rng, t, sig) for t in scenario.types})
