"""Core data types: contents, user types, scenarios and strategy profiles.

Vector layouts follow the order of ``Scenario.types``.  Arrays indexed by
content use row 0 for A and row 1 for B, so ``scenario.alpha[s]`` is the
per-type vector of success rates for content ``s``.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from functools import cached_property
from pathlib import Path
from typing import Any, Iterator, Optional

import numpy as np

from .errors import (
    AmbiguousRewards,
    DiscountOutOfRange,
    IncompleteProfile,
    MalformedInput,
    NegativeCost,
    NonProbabilityPrior,
    OccasionalEngagementForbidden,
    PreferredContentNotFullyEngaged,
    ProbabilityOutOfRange,
    SignalingDisabled,
    SignalOnPreferred,
    SignalWithoutDiscouragement,
    TemptationOrderViolated,
    UnknownTypeId,
)

PRIOR_TOL = 1e-12
# f(s*) = 1 and the {1} atom are compared with this slack; values are never altered.
UNIT_TOL = 1e-12


class Content(IntEnum):
    """The two contents. A is the tempting one (longer engagements)."""

    A = 0
    B = 1

    @property
    def other(self) -> "Content":
        return Content(1 - self.value)

    def __neg__(self) -> "Content":
        return self.other

    @classmethod
    def parse(cls, text: str) -> "Content":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise MalformedInput(f"unknown content {text!r}") from None


class Group(Enum):
    TYPE1 = "Type1"  # prefers B, tempted by A
    TYPE2 = "Type2"  # prefers A, no conflict


class EntryMode(Enum):
    AE = "ae"
    RE = "re"


@dataclass(frozen=True)
class Entry:
    mode: EntryMode = EntryMode.AE
    p1_a: Optional[float] = None

    @property
    def p1(self) -> np.ndarray:
        """Distribution of the first content under random entry."""
        if self.mode is not EntryMode.RE:
            raise ValueError("p1 only defined for random entry")
        return np.array([self.p1_a, 1.0 - self.p1_a])


@dataclass(frozen=True)
class UserTypeParams:
    id: str
    alpha_a: float
    alpha_b: float
    r_a: float
    r_b: float

    @property
    def group(self) -> Group:
        return Group.TYPE1 if self.r_b > self.r_a else Group.TYPE2

    @property
    def preferred(self) -> Content:
        """The high-reward content s*."""
        return Content.B if self.group is Group.TYPE1 else Content.A

    @property
    def other(self) -> Content:
        return self.preferred.other

    def alpha(self, s: Content) -> float:
        return self.alpha_a if s is Content.A else self.alpha_b

    def reward(self, s: Content) -> float:
        return self.r_a if s is Content.A else self.r_b

    @property
    def ratio(self) -> float:
        """alpha(-s*) / alpha(s*): below 1 for Type1, above 1 for Type2."""
        return self.alpha(self.other) / self.alpha(self.preferred)


@dataclass(frozen=True)
class Scenario:
    types: tuple[UserTypeParams, ...]
    prior: tuple[float, ...]
    gamma_alg: float
    gamma_user: float
    entry: Entry = field(default_factory=Entry)
    cost: Optional[float] = None

    @property
    def n_types(self) -> int:
        return len(self.types)

    @property
    def ids(self) -> list[str]:
        return [t.id for t in self.types]

    @property
    def signaling(self) -> bool:
        return self.cost is not None

    def index(self, type_id: str) -> int:
        for i, t in enumerate(self.types):
            if t.id == type_id:
                return i
        raise UnknownTypeId(f"unknown type id {type_id!r}")

    def params(self, type_id: str) -> UserTypeParams:
        return self.types[self.index(type_id)]

    @cached_property
    def prior_array(self) -> np.ndarray:
        return _frozen(np.array(self.prior, dtype=float))

    @cached_property
    def alpha(self) -> np.ndarray:
        return _frozen(np.array([[t.alpha_a for t in self.types], [t.alpha_b for t in self.types]]))

    @cached_property
    def reward(self) -> np.ndarray:
        return _frozen(np.array([[t.r_a for t in self.types], [t.r_b for t in self.types]]))

    def with_(self, **changes: Any) -> "Scenario":
        """Copy with changed fields, re-validated."""
        return validate_scenario(scenario_to_dict(replace(self, **changes)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TypeStrategy:
    f_a: float
    f_b: float
    u_a: float = 0.0
    u_b: float = 0.0

    def f(self, s: Content) -> float:
        return self.f_a if s is Content.A else self.f_b

    def u(self, s: Content) -> float:
        return self.u_a if s is Content.A else self.u_b

    @classmethod
    def from_point(cls, params: UserTypeParams, x: float, y: float = 0.0) -> "TypeStrategy":
        """Strategy with f(s*) = 1, f(-s*) = x, u(-s*) = y."""
        if params.preferred is Content.B:
            return cls(f_a=x, f_b=1.0, u_a=y, u_b=0.0)
        return cls(f_a=1.0, f_b=x, u_a=0.0, u_b=y)

    def point(self, params: UserTypeParams) -> tuple[float, float]:
        """(f, u) at the non-preferred content."""
        return self.f(params.other), self.u(params.other)

    def close_to(self, other: "TypeStrategy", tol: float = 1e-12) -> bool:
        return all(
            abs(a - b) <= tol
            for a, b in zip(
                (self.f_a, self.f_b, self.u_a, self.u_b), (other.f_a, other.f_b, other.u_a, other.u_b)
            )
        )


class StrategyProfile(Mapping):
    """Immutable map from type id to TypeStrategy."""

    def __init__(self, strategies: Mapping[str, TypeStrategy]):
        self._s = dict(strategies)

    def __getitem__(self, key: str) -> TypeStrategy:
        try:
            return self._s[key]
        except KeyError:
            raise UnknownTypeId(f"unknown type id {key!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._s)

    def __len__(self) -> int:
        return len(self._s)

    def __repr__(self) -> str:
        return f"StrategyProfile({self._s!r})"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, StrategyProfile):
            return self._s == other._s
        return NotImplemented

    __hash__ = None  # type: ignore[assignment]

    def replace(self, type_id: str, strategy: TypeStrategy) -> "StrategyProfile":
        d = dict(self._s)
        d[type_id] = strategy
        return StrategyProfile(d)

    def arrays(self, scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
        """Engagement and signal probabilities as (2, n) arrays in scenario order."""
        f = np.empty((2, scenario.n_types))
        u = np.empty((2, scenario.n_types))
        for i, t in enumerate(scenario.types):
            st = self[t.id]
            f[:, i] = (st.f_a, st.f_b)
            u[:, i] = (st.u_a, st.u_b)
        return f, u

    @classmethod
    def uniform(cls, scenario: Scenario, strategy: TypeStrategy) -> "StrategyProfile":
        return cls({t.id: strategy for t in scenario.types})


def all_ones(scenario: Scenario) -> StrategyProfile:
    return StrategyProfile.uniform(scenario, TypeStrategy(1.0, 1.0))


# ---------------------------------------------------------------- validation


def _num(raw: Mapping, key: str, where: str) -> float:
    if key not in raw:
        raise MalformedInput(f"{where}: missing key {key!r}")
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MalformedInput(f"{where}: {key} must be a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise MalformedInput(f"{where}: {key} must be finite")
    return v


def _validate_type(raw: Any) -> UserTypeParams:
    if not isinstance(raw, Mapping) or "id" not in raw:
        raise MalformedInput(f"type entry must be an object with an id, got {raw!r}")
    tid = str(raw["id"])
    where = f"type {tid}"
    p = UserTypeParams(
        id=tid,
        alpha_a=_num(raw, "alpha_a", where),
        alpha_b=_num(raw, "alpha_b", where),
        r_a=_num(raw, "r_a", where),
        r_b=_num(raw, "r_b", where),
    )
    for name in ("alpha_a", "alpha_b"):
        a = getattr(p, name)
        if not 0.0 < a <= 1.0:
            raise MalformedInput(f"{where}: {name}={a} outside (0, 1]")
    if p.r_a < 0 or p.r_b < 0:
        raise MalformedInput(f"{where}: rewards must be nonnegative")
    if p.alpha_a >= p.alpha_b:
        raise TemptationOrderViolated(
            f"{where}: need alpha_a < alpha_b, got {p.alpha_a} >= {p.alpha_b}"
        )
    if p.r_a == p.r_b:
        raise AmbiguousRewards(f"{where}: r_a == r_b leaves the preferred content undefined")
    return p


def validate_scenario(raw: Mapping[str, Any]) -> Scenario:
    """Build a Scenario from parsed file content, checking every invariant."""
    if not isinstance(raw, Mapping):
        raise MalformedInput("scenario must be an object")
    types_raw = raw.get("types")
    if not isinstance(types_raw, (list, tuple)) or not types_raw:
        raise MalformedInput("scenario needs a nonempty 'types' list")
    types = tuple(_validate_type(t) for t in types_raw)
    ids = [t.id for t in types]
    if len(set(ids)) != len(ids):
        raise MalformedInput(f"duplicate type ids in {ids}")

    prior_raw = raw.get("prior")
    if not isinstance(prior_raw, (list, tuple)) or len(prior_raw) != len(types):
        raise NonProbabilityPrior(f"prior must be a list of {len(types)} numbers")
    try:
        prior = tuple(float(x) for x in prior_raw)
    except (TypeError, ValueError):
        raise NonProbabilityPrior(f"prior entries must be numbers: {prior_raw!r}") from None
    if any(not math.isfinite(x) or x < 0 for x in prior) or abs(math.fsum(prior) - 1.0) > PRIOR_TOL:
        raise NonProbabilityPrior(f"prior {list(prior)} is not a probability vector")

    gammas = {}
    for key in ("gamma_alg", "gamma_user"):
        g = _num(raw, key, "scenario")
        if not 0.0 <= g < 1.0:
            raise DiscountOutOfRange(f"{key}={g} outside [0, 1)")
        gammas[key] = g

    entry_raw = raw.get("entry", {"mode": "ae"})
    if isinstance(entry_raw, str):
        entry_raw = {"mode": entry_raw}
    if not isinstance(entry_raw, Mapping):
        raise MalformedInput("entry must be an object")
    mode_txt = str(entry_raw.get("mode", "ae")).lower()
    try:
        mode = EntryMode(mode_txt)
    except ValueError:
        raise MalformedInput(f"entry mode must be 'ae' or 're', got {mode_txt!r}") from None
    if mode is EntryMode.RE:
        p1_a = _num(entry_raw, "p1_a", "entry")
        if not 0.0 <= p1_a <= 1.0:
            raise ProbabilityOutOfRange(f"p1_a={p1_a} outside [0, 1]")
        entry = Entry(mode, p1_a)
    else:
        entry = Entry(mode)

    cost = None
    if raw.get("cost") is not None:
        cost = _num(raw, "cost", "scenario")
        if cost < 0:
            raise NegativeCost(f"cost={cost} is negative")

    return Scenario(types, prior, gammas["gamma_alg"], gammas["gamma_user"], entry, cost)


def validate_strategy(scenario: Scenario, params: UserTypeParams, st: TypeStrategy) -> TypeStrategy:
    where = f"type {params.id}"
    for name in ("f_a", "f_b", "u_a", "u_b"):
        v = getattr(st, name)
        if not (isinstance(v, (int, float)) and math.isfinite(v) and 0.0 <= v <= 1.0):
            raise ProbabilityOutOfRange(f"{where}: {name}={v} is not a probability")
    pref, oth = params.preferred, params.other
    if abs(st.f(pref) - 1.0) > UNIT_TOL:
        raise PreferredContentNotFullyEngaged(
            f"{where}: f({pref.name}) = {st.f(pref)} but must be 1"
        )
    x = st.f(oth)
    if not (x < params.ratio or abs(x - 1.0) <= UNIT_TOL):
        raise OccasionalEngagementForbidden(
            f"{where}: f({oth.name}) = {x} lies in [{params.ratio}, 1)"
        )
    if (st.u_a > 0 or st.u_b > 0) and not scenario.signaling:
        raise SignalingDisabled(f"{where}: signal probabilities must be 0 without a signaling cost")
    if st.u(pref) != 0.0:
        raise SignalOnPreferred(f"{where}: u({pref.name}) = {st.u(pref)} but must be 0")
    if st.u(oth) > 0 and not x < params.ratio:
        raise SignalWithoutDiscouragement(
            f"{where}: signals on {oth.name} while f = {x} >= {params.ratio}"
        )
    return st


def validate_profile(scenario: Scenario, profile: Mapping[str, TypeStrategy]) -> StrategyProfile:
    """Check every strategy against its type; returns the profile unchanged."""
    missing = [t.id for t in scenario.types if t.id not in profile]
    if missing:
        raise IncompleteProfile(f"profile lacks types {missing}")
    extra = [k for k in profile if k not in scenario.ids]
    if extra:
        raise UnknownTypeId(f"profile has unknown types {extra}")
    for t in scenario.types:
        validate_strategy(scenario, t, profile[t.id])
    return profile if isinstance(profile, StrategyProfile) else StrategyProfile(profile)


# ------------------------------------------------------------------------ io


def scenario_to_dict(scenario: Scenario) -> dict[str, Any]:
    d: dict[str, Any] = {
        "types": [
            {"id": t.id, "alpha_a": t.alpha_a, "alpha_b": t.alpha_b, "r_a": t.r_a, "r_b": t.r_b}
            for t in scenario.types
        ],
        "prior": list(scenario.prior),
        "gamma_alg": scenario.gamma_alg,
        "gamma_user": scenario.gamma_user,
        "entry": {"mode": scenario.entry.mode.value},
    }
    if scenario.entry.mode is EntryMode.RE:
        d["entry"]["p1_a"] = scenario.entry.p1_a
    if scenario.cost is not None:
        d["cost"] = scenario.cost
    return d


def load_scenario(path: str | Path) -> Scenario:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"{path}: not valid JSON ({exc})") from None
    return validate_scenario(raw)


def dump_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")


def profile_to_dict(profile: Mapping[str, TypeStrategy]) -> dict[str, dict[str, float]]:
    return {
        k: {"f_a": s.f_a, "f_b": s.f_b, "u_a": s.u_a, "u_b": s.u_b} for k, s in profile.items()
    }


def profile_from_dict(raw: Mapping[str, Any]) -> StrategyProfile:
    """Parse a profile object; also accepts a solve output with a 'profile' key."""
    if isinstance(raw, Mapping) and isinstance(raw.get("profile"), Mapping):
        raw = raw["profile"]
    if not isinstance(raw, Mapping):
        raise MalformedInput("profile must be an object")
    out = {}
    for k, v in raw.items():
        if not isinstance(v, Mapping):
            raise MalformedInput(f"profile entry {k!r} must be an object")
        where = f"profile {k}"
        out[str(k)] = TypeStrategy(
            f_a=_num(v, "f_a", where),
            f_b=_num(v, "f_b", where),
            u_a=_num(v, "u_a", where) if "u_a" in v else 0.0,
            u_b=_num(v, "u_b", where) if "u_b" in v else 0.0,
        )
    return StrategyProfile(out)


def load_profile(path: str | Path, scenario: Optional[Scenario] = None) -> StrategyProfile:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"{path}: not valid JSON ({exc})") from None
    profile = profile_from_dict(raw)
    return validate_profile(scenario, profile) if scenario is not None else profile
