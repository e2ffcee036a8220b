"""User best responses and the fixed-point equilibrium solver.

A user type steers the algorithm when, given the classifier mass of all
other types (its margin), it can pick an engagement level at its
non-preferred content that keeps the algorithm on its preferred content.
Points are written as ``(x, y)``: engagement and signal probability at the
non-preferred content; the preferred content is always fully engaged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Union

import numpy as np

from . import algo_policy
from .domain import (
    Content,
    EntryMode,
    Group,
    Scenario,
    StrategyProfile,
    TypeStrategy,
    UserTypeParams,
    all_ones,
    validate_strategy,
)
from .errors import ConditionNotCovered, CycleDetected, DegenerateGamma, NotConverged

DEFAULT_EPSILON = 1e-9


class SelectionRule(Enum):
    MIN = "min"
    MAX_FEASIBLE = "max"


class Rationale(Enum):
    STEERED = "Steered"
    EMPTY_SET_DISENGAGE = "EmptySetDisengage"
    EMPTY_SET_ENGAGE = "EmptySetEngage"
    EMPTY_SET_SIGNAL = "EmptySetSignal"
    INDIFFERENT = "Indifferent"
    RANDOM_ENTRY = "RandomEntry"


def default_selection(params: UserTypeParams) -> SelectionRule:
    return SelectionRule.MIN if params.group is Group.TYPE1 else SelectionRule.MAX_FEASIBLE


# ------------------------------------------------------------ steerable sets


@dataclass(frozen=True)
class Interval:
    """Solutions of a one-dimensional constraint; ``lo`` is always attained."""

    empty: bool
    lo: float = 0.0
    hi: float = 0.0
    hi_closed: bool = True

    def contains(self, x: float) -> bool:
        if self.empty or x < self.lo:
            return False
        return x <= self.hi if self.hi_closed else x < self.hi

    def largest(self, epsilon: float) -> float:
        """Largest member, or hi - epsilon when the upper end is open."""
        if self.hi_closed:
            return self.hi
        return max(self.lo, self.hi - epsilon)


def solve_linear(a: float, b: float, dom_hi: float, dom_closed: bool) -> Interval:
    """All x in [0, dom_hi] (or [0, dom_hi)) with a - x*b >= 0."""
    if b > 0:
        if a < 0:
            return Interval(True)
        bound = a / b
        if bound < dom_hi:
            return Interval(False, 0.0, bound, True)
        return Interval(False, 0.0, dom_hi, dom_closed)
    if b < 0:
        lo = max(a / b, 0.0)
        if lo > dom_hi or (lo == dom_hi and not dom_closed):
            return Interval(True)
        return Interval(False, lo, dom_hi, dom_closed)
    return Interval(False, 0.0, dom_hi, dom_closed) if a >= 0 else Interval(True)


@dataclass(frozen=True)
class SteerableSet:
    """Steerable points of one type for a fixed margin.

    Without signaling only ``interval`` matters.  With signaling the region
    is described through slices at fixed signal probability ``y``.
    """

    type_id: str
    group: Group
    signaling: bool
    interval: Interval
    _lam: float = field(repr=False, default=0.0)
    _inv_pref: float = field(repr=False, default=0.0)
    _inv_other: float = field(repr=False, default=0.0)
    _signed_margin: float = field(repr=False, default=0.0)
    _gamma: float = field(repr=False, default=0.0)
    _dom_hi: float = field(repr=False, default=1.0)
    _dom_closed: bool = field(repr=False, default=True)

    def slice(self, y: float) -> Interval:
        """Steerable engagement levels at signal probability y."""
        if not self.signaling:
            if y != 0:
                raise ValueError("no signaling in this game")
            return self.interval
        a = self._lam * self._inv_pref + self._signed_margin
        b = self._lam * self._inv_other + self._gamma * (1.0 - y) * self._signed_margin
        return solve_linear(a, b, self._dom_hi, self._dom_closed)

    @property
    def is_empty(self) -> bool:
        if not self.signaling:
            return self.interval.empty
        # the constraint is linear in y for fixed x, so the extreme slices decide
        return self.slice(0.0).empty and self.slice(1.0).empty

    @property
    def kind(self) -> str:
        if self.is_empty:
            return "Empty"
        return "Region" if self.signaling else "Interval"

    def contains(self, x: float, y: float = 0.0) -> bool:
        return self.slice(y).contains(x)


def _domain(params: UserTypeParams) -> tuple[float, bool]:
    # Type1: [0, rho) ; Type2: rho > 1 so the whole of [0, 1]
    if params.group is Group.TYPE1:
        return params.ratio, False
    return 1.0, True


def steerable_set(scenario: Scenario, type_id: str, margin: float) -> SteerableSet:
    i = scenario.index(type_id)
    p = scenario.types[i]
    lam = float(scenario.prior_array[i])
    g = scenario.gamma_alg
    dom_hi, dom_closed = _domain(p)
    if p.group is Group.TYPE1:
        a = lam / p.alpha_b - margin
        b = lam / p.alpha_a - g * margin
    else:
        a = lam / p.alpha_a + margin
        b = lam / p.alpha_b + g * margin
    interval = solve_linear(a, b, dom_hi, dom_closed)
    signed = -margin if p.group is Group.TYPE1 else margin
    return SteerableSet(
        type_id=type_id,
        group=p.group,
        signaling=scenario.signaling,
        interval=interval,
        _lam=lam,
        _inv_pref=1.0 / p.alpha(p.preferred),
        _inv_other=1.0 / p.alpha(p.other),
        _signed_margin=signed,
        _gamma=g,
        _dom_hi=dom_hi,
        _dom_closed=dom_closed,
    )


def steerable_nonempty(scenario: Scenario, type_id: str, margin: float) -> bool:
    i = scenario.index(type_id)
    p = scenario.types[i]
    if p.group is Group.TYPE1:
        # the same test holds with signaling: the y = 1 slice has the same
        # value at x = 0 and a nonnegative slope coefficient
        return scenario.prior[i] >= p.alpha_b * margin
    return not steerable_set(scenario, type_id, margin).is_empty


# --------------------------------------------------------- thresholds, values


@dataclass(frozen=True)
class CriticalGamma:
    no_signal: float
    with_signal: Optional[float] = None
    reduction: Optional[float] = None
    reason: Optional[str] = None


def signal_engagement_limit(params: UserTypeParams) -> float:
    """Supremum of engagement compatible with signaling: min(rho, 1)."""
    return min(params.ratio, 1.0)


def critical_gamma(
    scenario: Scenario, type_id: str, cost: Optional[float] = None
) -> CriticalGamma:
    p = scenario.params(type_id)
    r_pref, r_oth = p.reward(p.preferred), p.reward(p.other)
    no_signal = r_oth / r_pref
    c = scenario.cost if cost is None else cost
    if c is None:
        return CriticalGamma(no_signal, reason="NoSignaling")
    phi = signal_engagement_limit(p)
    if not c < phi * r_oth:
        return CriticalGamma(no_signal, reason="CostTooLarge")
    with_signal = (c + r_oth * (1.0 - phi)) / (c + r_pref - r_oth * phi)
    reduction = (r_oth / r_pref) * phi - c / r_pref
    return CriticalGamma(no_signal, with_signal, reduction)


@dataclass(frozen=True)
class UserQ:
    q_preferred: float
    q_other: float


def user_q_closed_form(
    scenario: Scenario, type_id: str, strategy: TypeStrategy, gamma_user: Optional[float] = None
) -> UserQ:
    """User values when the session starts at the preferred / other content."""
    p = scenario.params(type_id)
    g = scenario.gamma_user if gamma_user is None else gamma_user
    c = scenario.cost or 0.0
    x, y = strategy.point(p)
    return UserQ(*_user_q(p.reward(p.preferred), p.reward(p.other), c, g, x, y))


def _user_q(r_pref, r_oth, c, g, x, y):
    q_pref = r_pref / (1.0 - g)
    q_other = q_pref - (r_pref - x * r_oth + y * c) / (1.0 - g * (1.0 - y) * x)
    return q_pref, q_other


def user_value_ae(scenario: Scenario, profile: StrategyProfile, type_id: str) -> float:
    """A type's value under algorithmic entry, from the closed forms."""
    p = scenario.params(type_id)
    entry = algo_policy.best_content(scenario, profile, scenario.prior_array)
    q = user_q_closed_form(scenario, type_id, profile[type_id])
    return q.q_preferred if entry is p.preferred else q.q_other


# ------------------------------------------------------------ best responses


@dataclass(frozen=True)
class BestResponse:
    strategy: TypeStrategy
    rationale: Rationale
    point: tuple[float, float] = (0.0, 0.0)


def _respond(p: UserTypeParams, x: float, y: float, why: Rationale) -> BestResponse:
    return BestResponse(TypeStrategy.from_point(p, x, y), why, (x, y))


def _select(
    sset: SteerableSet, rule: SelectionRule, epsilon: float
) -> tuple[float, float]:
    slices = [(0.0, sset.slice(0.0))]
    if sset.signaling:
        slices.append((1.0, sset.slice(1.0)))
    slices = [(y, s) for y, s in slices if not s.empty]
    if rule is SelectionRule.MIN:
        # ties prefer y = 0 because min() keeps the first occurrence
        y, s = min(slices, key=lambda t: t[1].lo)
        return s.lo, y
    y, s = max(slices, key=lambda t: (t[1].largest(epsilon), -t[0]))
    return s.largest(epsilon), y


def best_response_ae(
    scenario: Scenario,
    type_id: str,
    margin: float,
    selection: Optional[SelectionRule] = None,
    epsilon: float = DEFAULT_EPSILON,
    allow_degenerate: bool = False,
) -> BestResponse:
    p = scenario.params(type_id)
    sset = steerable_set(scenario, type_id, margin)
    if not sset.is_empty:
        rule = selection or default_selection(p)
        x, y = _select(sset, rule, epsilon)
        return _respond(p, x, y, Rationale.STEERED)

    g = scenario.gamma_user
    crit = critical_gamma(scenario, type_id)
    if crit.with_signal is not None:
        if g == crit.with_signal:
            if allow_degenerate:
                return _respond(p, 1.0, 0.0, Rationale.INDIFFERENT)
            raise DegenerateGamma(
                f"type {type_id}: gamma_user equals the signaling threshold {crit.with_signal}"
            )
        if g > crit.with_signal:
            phi = signal_engagement_limit(p)
            x = phi - epsilon if p.ratio <= 1.0 else phi
            return _respond(p, x, 1.0, Rationale.EMPTY_SET_SIGNAL)
        return _respond(p, 1.0, 0.0, Rationale.EMPTY_SET_ENGAGE)

    if g == crit.no_signal:
        if allow_degenerate:
            return _respond(p, 0.0, 0.0, Rationale.INDIFFERENT)
        raise DegenerateGamma(f"type {type_id}: gamma_user equals the threshold {crit.no_signal}")
    if g > crit.no_signal:
        return _respond(p, 0.0, 0.0, Rationale.EMPTY_SET_DISENGAGE)
    return _respond(p, 1.0, 0.0, Rationale.EMPTY_SET_ENGAGE)


def best_response_re(
    scenario: Scenario,
    type_id: str,
    margin: float,
    p1: Optional[np.ndarray] = None,
    profile: Optional[StrategyProfile] = None,
) -> BestResponse:
    """Best response under random entry, where it is characterized.

    Type1: requires margin > lambda / alpha_b; then f_b = 1 and f_a is 1
    exactly when gamma_user < r_a / r_b.  Type2: full engagement is returned
    when, with the type fully engaged, the algorithm keeps showing A after
    any engaged entry content (it then attains the type's upper bound).
    """
    if scenario.signaling:
        raise ConditionNotCovered("random entry with signaling is not characterized")
    i = scenario.index(type_id)
    p = scenario.types[i]
    lam = scenario.prior[i]
    if p1 is None:
        p1 = scenario.entry.p1
    if p.group is Group.TYPE1:
        if not margin > lam / p.alpha_b:
            raise ConditionNotCovered(
                f"type {type_id}: margin {margin} <= lambda/alpha_b = {lam / p.alpha_b}"
            )
        ratio = p.r_a / p.r_b
        if scenario.gamma_user == ratio:
            raise DegenerateGamma(f"type {type_id}: gamma_user equals r_a/r_b = {ratio}")
        x = 1.0 if scenario.gamma_user < ratio else 0.0
        return _respond(p, x, 0.0, Rationale.RANDOM_ENTRY)

    if profile is None:
        raise ConditionNotCovered(f"type {type_id}: Type2 under random entry needs the profile")
    trial = profile.replace(type_id, TypeStrategy(1.0, 1.0))
    f, _ = trial.arrays(scenario)
    h = algo_policy.classifier_weights(scenario, trial)
    for s in (Content.A, Content.B):
        if p1[s] > 0 and float(np.dot(scenario.prior_array * f[s], h)) < 0.0:
            raise ConditionNotCovered(
                f"type {type_id}: algorithm leaves A after engagement with {s.name}"
            )
    return _respond(p, 1.0, 0.0, Rationale.RANDOM_ENTRY)


# -------------------------------------------------------------------- solver


@dataclass
class SolverConfig:
    init: Optional[StrategyProfile] = None
    max_iters: int = 100
    tol: float = 1e-12
    max_cycle: int = 8
    epsilon: float = DEFAULT_EPSILON
    allow_degenerate: bool = False


@dataclass
class EquilibriumResult:
    profile: StrategyProfile
    margins: dict[str, float]
    responses: dict[str, BestResponse]
    iterations: int
    converged: bool
    cycle: list[StrategyProfile] = field(default_factory=list)

    @property
    def rationales(self) -> dict[str, Rationale]:
        return {k: r.rationale for k, r in self.responses.items()}


Selection = Union[None, SelectionRule, Mapping[str, SelectionRule]]


def _rule_for(selection: Selection, type_id: str) -> Optional[SelectionRule]:
    if isinstance(selection, Mapping):
        return selection.get(type_id)
    return selection


def best_responses(
    scenario: Scenario, profile: StrategyProfile, selection: Selection = None,
    cfg: Optional[SolverConfig] = None,
) -> tuple[dict[str, float], dict[str, BestResponse]]:
    """One synchronous round: every type responds to the same snapshot."""
    cfg = cfg or SolverConfig()
    m = algo_policy.margins(scenario, profile)
    out = {}
    for t in scenario.types:
        if scenario.entry.mode is EntryMode.AE:
            out[t.id] = best_response_ae(
                scenario, t.id, m[t.id], _rule_for(selection, t.id), cfg.epsilon, cfg.allow_degenerate
            )
        else:
            out[t.id] = best_response_re(scenario, t.id, m[t.id], profile=profile)
    return m, out


def _same(a: StrategyProfile, b: StrategyProfile, tol: float) -> bool:
    return all(a[k].close_to(b[k], tol) for k in a)


def solve_equilibrium(
    scenario: Scenario, selection: Selection = None, cfg: Optional[SolverConfig] = None
) -> EquilibriumResult:
    """Synchronous best-response iteration from ``cfg.init`` (all-ones by default)."""
    cfg = cfg or SolverConfig()
    profile = cfg.init if cfg.init is not None else all_ones(scenario)
    for t in scenario.types:
        validate_strategy(scenario, t, profile[t.id])
    history: list[tuple[StrategyProfile, Optional[dict]]] = [(profile, None)]
    prev_why = None
    for it in range(1, cfg.max_iters + 1):
        _, responses = best_responses(scenario, profile, selection, cfg)
        new = StrategyProfile({k: r.strategy for k, r in responses.items()})
        why = {k: r.rationale for k, r in responses.items()}
        if _same(new, profile, cfg.tol) and why == prev_why:
            return EquilibriumResult(
                profile, algo_policy.margins(scenario, profile), responses, it, True
            )
        for back in range(2, min(cfg.max_cycle, len(history)) + 1):
            old, old_why = history[-back]
            if old_why == why and _same(new, old, cfg.tol):
                cycle = [h[0] for h in history[-back:]]
                result = EquilibriumResult(
                    new, algo_policy.margins(scenario, new), responses, it, False, cycle
                )
                raise CycleDetected(f"best responses cycle with period {back}", result, cycle)
        history.append((new, why))
        profile, prev_why = new, why
    result = EquilibriumResult(
        profile, algo_policy.margins(scenario, profile), responses, cfg.max_iters, False
    )
    raise NotConverged(f"no fixed point within {cfg.max_iters} rounds", result)
