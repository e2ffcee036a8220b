"""Brute-force verifiers for the closed forms.

``value_iterate`` runs the algorithm's finite-horizon Bellman recursion over
beliefs, by one of two routes.

* ``vectors`` (default): the k-step value is convex and piecewise linear in
  the belief, so it is carried as a set of vectors, V(b) = max <b, v>.  One
  backup takes, per content, the immediate term plus the discounted
  cross-sum of the next set scaled by each observation's likelihood.
  Dominated vectors are removed only with a checked certificate (a convex
  combination of kept vectors that is componentwise at least as large, up to
  ``PRUNE_SLACK``), so the value is exact up to that slack per removal.
* ``lattice``: the recursion on explicit posteriors.  Every history with the
  same count of each (content, outcome) kind leads to the same belief, so a
  level is a set of count vectors; a state is identified by the set of types
  still possible and the counts of the kinds that separate them.  Exact, but
  the state count grows like horizon^dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from . import algo_policy
from .domain import Content, EntryMode, Group, Scenario, StrategyProfile, TypeStrategy
from .equilibrium import EquilibriumResult, user_q_closed_form
from .errors import DeviationFound, HorizonTooLarge, MalformedInput
from .parallel import parallel_map

MAX_ENUMERATION_HORIZON = 4
PRUNE_SLACK = 1e-13
METHODS = ("vectors", "lattice")


@dataclass
class OracleConfig:
    horizon: Optional[int] = None  # None: derived from tolerance
    tolerance: float = 1e-6
    deviation_grid: int = 201
    # gap kept below an open upper bound when gridding [0, rho)
    epsilon_atom: float = 1e-9
    method: str = "vectors"


def horizon_for(gamma: float, scale: float, tolerance: float) -> int:
    """Smallest T with gamma^T * scale / (1 - gamma) < tolerance."""
    if scale <= 0:
        return 0
    if gamma == 0.0:
        return 1
    t = max(0, math.ceil(math.log(tolerance * (1.0 - gamma) / scale) / math.log(gamma)))
    while gamma**t * scale / (1.0 - gamma) >= tolerance:
        t += 1
    while t > 0 and gamma ** (t - 1) * scale / (1.0 - gamma) < tolerance:
        t -= 1
    return t


def truncation_bound(gamma: float, scale: float, horizon: int) -> float:
    return gamma**horizon * scale / (1.0 - gamma)


def engagement_scale(scenario: Scenario) -> float:
    return float(np.max(1.0 / scenario.alpha))


# ------------------------------------------------------------ lattice tools


def _kinds(f: np.ndarray, u: Optional[np.ndarray]) -> tuple[np.ndarray, int]:
    """Likelihood table (K, n), kinds grouped by content, and kinds per content."""
    rows = []
    for s in (0, 1):
        for e in (f[s], 1.0 - f[s]):
            if u is None:
                rows.append(e)
            else:
                rows.append(e * u[s])
                rows.append(e * (1.0 - u[s]))
    per = 2 if u is None else 4
    return np.array(rows), per


class _Lattice:
    """Count-vector states with log-likelihoods computed in a fixed order."""

    def __init__(self, L: np.ndarray):
        self.L = L
        self.K = L.shape[0]
        self.logL = np.where(L > 0, np.log(np.where(L > 0, L, 1.0)), 0.0)
        self.zero = L == 0

    def loglik(self, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.L.shape[1]
        ll = np.zeros((C.shape[0], n))
        alive = np.ones((C.shape[0], n), dtype=bool)
        for k in range(self.K):
            ck = C[:, k : k + 1]
            ll += ck * self.logL[k]
            alive &= ~((ck > 0) & self.zero[k])
        return ll, alive


def _beliefs(logprior: np.ndarray, ll: np.ndarray, alive: np.ndarray) -> np.ndarray:
    """Posteriors (R, N, n) for root log-priors (R, n)."""
    w = logprior[:, None, :] + ll[None]
    w = np.where(alive[None], w, -np.inf)
    w = w - w.max(axis=2, keepdims=True)
    e = np.exp(w)
    return e / e.sum(axis=2, keepdims=True)


def _row_keys(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    return a.view(np.dtype((np.void, a.dtype.itemsize * a.shape[1]))).ravel()


@dataclass
class ValueResult:
    q: np.ndarray  # (R, 2): value of starting with A / B for each root
    horizon: int
    truncation_bound: float
    size: int  # lattice states visited, or vectors kept over all steps
    prune_bound: float = 0.0

    @property
    def error_bound(self) -> float:
        return self.truncation_bound + self.prune_bound


def _pack_keys(mask: np.ndarray, counts: np.ndarray, horizon: int, n: int) -> np.ndarray:
    """One sortable key per row: a packed int64 when it fits, raw bytes otherwise."""
    K = counts.shape[1]
    width = max(1, int(horizon).bit_length())
    if n + K * width <= 63:
        key = mask.astype(np.int64)
        for k in range(K):
            key = (key << width) | counts[:, k]
        return key
    return _row_keys(np.concatenate([mask[:, None], counts], axis=1))


def lattice_value_arrays(
    alpha: np.ndarray,
    f: np.ndarray,
    u: Optional[np.ndarray],
    gamma: float,
    roots: np.ndarray,
    horizon: int,
) -> ValueResult:
    """Finite-horizon optimal values of both first contents for a batch of roots.

    All roots must share the same support.  A state is keyed by the set of
    types still possible plus the counts of the kinds that are informative
    among them; states with equal keys have identical posteriors.
    """
    roots = np.atleast_2d(np.asarray(roots, dtype=float))
    supp = roots[0] > 0
    if np.any((roots > 0) != supp):
        raise MalformedInput("batched roots must share their support")
    roots = roots[:, supp]
    alpha, f = alpha[:, supp], f[:, supp]
    u = None if u is None else u[:, supp]
    R, n = roots.shape
    tb = truncation_bound(gamma, float(np.max(1.0 / alpha)), horizon)
    if horizon == 0:
        return ValueResult(np.zeros((R, 2)), 0, tb, 0)

    L, per = _kinds(f, u)
    content = np.repeat([0, 1], per)
    occurs = np.any(L > 0, axis=1)  # kinds no type can produce are dropped
    L, content = L[occurs], content[occurs]
    K = L.shape[0]
    logL = np.where(L > 0, np.log(np.where(L > 0, L, 1.0)), 0.0)
    possible = L > 0  # (K, n)
    logprior = np.log(roots)
    immediate = (f / alpha).T  # (n, 2)
    eye = np.eye(K, dtype=np.int64)
    bits = 1 << np.arange(n)
    # informative[mask, k]: kind k separates the types in alive-set ``mask``
    informative = np.zeros((1 << n, K), dtype=bool)
    for mask in range(1, 1 << n):
        sel = (mask & bits) > 0
        informative[mask] = np.ptp(L[:, sel], axis=1) > 0
    on_a = content == 0

    levels = []
    C = np.zeros((1, K), dtype=np.int64)
    ll = np.zeros((1, n))
    alive = np.ones((1, n), dtype=bool)
    size = 0
    for t in range(horizon):
        size += C.shape[0]
        if t == horizon - 1:
            levels.append((ll, alive, None))
            break
        N = C.shape[0]
        CC = (C[:, None, :] + eye[None]).reshape(N * K, K)
        alive_c = (alive[:, None, :] & possible[None]).reshape(N * K, n)
        mask_c = alive_c @ bits
        kept = np.flatnonzero(mask_c > 0)
        child = np.full(N * K, -1, dtype=np.int64)
        key = np.where(informative[mask_c[kept]], CC[kept], 0)
        _, first, inverse = np.unique(
            _pack_keys(mask_c[kept], key, horizon, n), return_index=True, return_inverse=True
        )
        child[kept] = inverse.ravel()
        levels.append((ll, alive, child.reshape(N, K)))
        src = kept[first]
        ll = (ll[:, None, :] + logL[None]).reshape(N * K, n)[src]
        C, alive = CC[src], alive_c[src]

    V_next = None
    Q = None
    for ll, alive, child in reversed(levels):
        B = _beliefs(logprior, ll, alive)  # (R, N, n)
        Q = B @ immediate  # (R, N, 2)
        if child is not None:
            safe = np.where(child >= 0, child, 0)
            PV = (B @ L.T) * np.where(child[None] >= 0, V_next[:, safe], 0.0)
            Q[..., 0] += gamma * PV[..., on_a].sum(axis=2)
            Q[..., 1] += gamma * PV[..., ~on_a].sum(axis=2)
        V_next = Q.max(axis=2)
    return ValueResult(Q[:, 0, :], horizon, tb, size)


def _dominated(v: np.ndarray, others: np.ndarray) -> bool:
    """True when some convex combination of ``others`` is >= v - PRUNE_SLACK.

    The LP proposes the weights; the claim is rechecked in plain arithmetic,
    so a loose solver tolerance can only keep a vector, never drop one.
    """
    m, n = others.shape
    c = np.zeros(m + 1)
    c[-1] = 1.0
    A_ub = np.hstack([-others.T, -np.ones((n, 1))])
    A_eq = np.append(np.ones(m), 0.0)[None]
    res = linprog(
        c, A_ub=A_ub, b_ub=-v, A_eq=A_eq, b_eq=[1.0],
        bounds=[(0, None)] * m + [(None, None)], method="highs",
    )
    if res.status != 0:
        return False
    mu = np.clip(res.x[:m], 0.0, None)
    mu /= mu.sum()
    return float(np.max(v - mu @ others)) <= PRUNE_SLACK


def _prune(V: np.ndarray) -> tuple[np.ndarray, int]:
    """Drop vectors that never attain the max; returns (kept, lossy removals)."""
    V = np.unique(V, axis=0)
    if len(V) <= 1:
        return V, 0
    # componentwise dominance loses nothing
    ge = np.all(V[:, None, :] >= V[None, :, :], axis=2)
    np.fill_diagonal(ge, False)
    V = V[~ge.any(axis=0)]
    if len(V) <= 1:
        return V, 0
    n = V.shape[1]
    probes = np.vstack([np.eye(n), np.full(n, 1.0 / n)])
    vals = probes @ V.T
    sure = set()
    for row in vals:
        order = np.argsort(row)
        if row[order[-1]] - row[order[-2]] > PRUNE_SLACK:
            sure.add(int(order[-1]))
    keep = np.ones(len(V), dtype=bool)
    lossy = 0
    for j in range(len(V)):
        if j in sure:
            continue
        keep[j] = False
        if keep.any() and _dominated(V[j], V[keep]):
            lossy += 1
        else:
            keep[j] = True
    return V[keep], lossy


def vector_value_arrays(
    alpha: np.ndarray,
    f: np.ndarray,
    u: Optional[np.ndarray],
    gamma: float,
    roots: np.ndarray,
    horizon: int,
) -> ValueResult:
    """Finite-horizon optimal values of both first contents, any batch of roots."""
    roots = np.atleast_2d(np.asarray(roots, dtype=float))
    R, n = roots.shape
    tb = truncation_bound(gamma, float(np.max(1.0 / alpha)), horizon)
    if horizon == 0:
        return ValueResult(np.zeros((R, 2)), 0, tb, 0)
    L, per = _kinds(f, u)
    gain = f / alpha
    nxt = np.zeros((1, n))  # value of the empty continuation
    err = 0.0  # bound on how far the kept set undershoots the exact value
    size = 0
    for t in range(horizon):
        sets, lossy = [], 0
        for s in (0, 1):
            acc = gain[s][None]
            if t > 0:
                for k in range(s * per, (s + 1) * per):
                    if not np.any(L[k] > 0):
                        continue
                    cand = (acc[:, None, :] + gamma * L[k][None, None, :] * nxt[None]).reshape(-1, n)
                    acc, d = _prune(cand)
                    lossy += d
            sets.append(acc)
        if t == horizon - 1:
            break
        nxt, d = _prune(np.vstack(sets))
        lossy += d
        size += len(nxt)
        err = gamma * err + lossy * PRUNE_SLACK
    # the last round's content sets are built on the second-to-last `nxt`
    err = gamma * err + lossy * PRUNE_SLACK
    q = np.column_stack([np.max(roots @ S.T, axis=1) for S in sets])
    return ValueResult(q, horizon, tb, size + sum(len(S) for S in sets), err)


def _profile_arrays(scenario: Scenario, profile: StrategyProfile):
    f, u = profile.arrays(scenario)
    return f, (u if scenario.signaling else None)


def oracle_horizon(scenario: Scenario, cfg: OracleConfig) -> int:
    if cfg.horizon is not None:
        return cfg.horizon
    return horizon_for(scenario.gamma_alg, engagement_scale(scenario), cfg.tolerance)


def value_iterate(
    scenario: Scenario,
    profile: StrategyProfile,
    beliefs,
    cfg: Optional[OracleConfig] = None,
) -> ValueResult:
    """Values of both first contents for one belief or a batch of beliefs."""
    cfg = cfg or OracleConfig()
    if cfg.method not in METHODS:
        raise MalformedInput(f"unknown oracle method {cfg.method!r}")
    f, u = _profile_arrays(scenario, profile)
    roots = np.atleast_2d(np.asarray(beliefs, dtype=float))
    horizon = oracle_horizon(scenario, cfg)
    args = (scenario.alpha, f, u, scenario.gamma_alg)
    if cfg.method == "vectors":
        return vector_value_arrays(*args, roots, horizon)
    # the lattice needs a common support per call
    q = np.empty((roots.shape[0], 2))
    size, res = 0, None
    groups: dict[bytes, list[int]] = {}
    for j, b in enumerate(roots):
        groups.setdefault((b > 0).tobytes(), []).append(j)
    for idx in groups.values():
        res = lattice_value_arrays(*args, roots[idx], horizon)
        q[idx] = res.q
        size += res.size
    return ValueResult(q, horizon, res.truncation_bound, size)


def value_iterate_qa(
    scenario: Scenario,
    profile: StrategyProfile,
    belief,
    start: Content,
    cfg: Optional[OracleConfig] = None,
) -> float:
    return float(value_iterate(scenario, profile, belief, cfg).q[0, int(start)])


# ------------------------------------------------------ history enumeration


def enumerate_qa_over_histories(
    scenario: Scenario,
    profile: StrategyProfile,
    start: Content,
    horizon: int,
    belief=None,
) -> float:
    """Value computed over the full history tree, without forming posteriors.

    Each node carries the joint probability of its history for every type;
    the content choice at a node compares unnormalized continuation values,
    which depend on the whole prefix rather than on a posterior.
    """
    if horizon > MAX_ENUMERATION_HORIZON:
        raise HorizonTooLarge(f"horizon {horizon} > {MAX_ENUMERATION_HORIZON}")
    if horizon < 0:
        raise MalformedInput("horizon must be nonnegative")
    f, u = _profile_arrays(scenario, profile)
    L, per = _kinds(f, u)
    gain = f / scenario.alpha
    g = scenario.gamma_alg
    lam = scenario.prior_array if belief is None else np.asarray(belief, dtype=float)

    def node(joint: np.ndarray, s: int, depth: int) -> float:
        # joint[theta] = lambda_theta * P(history | theta)
        total = float(np.dot(joint, gain[s]))
        if depth + 1 >= horizon:
            return total
        cont = 0.0
        for k in range(s * per, (s + 1) * per):
            nxt = joint * L[k]
            if not np.any(nxt > 0):
                continue
            cont += max(node(nxt, 0, depth + 1), node(nxt, 1, depth + 1))
        return total + g * cont

    if horizon == 0:
        return 0.0
    return node(lam.copy(), int(start), 0)


# ------------------------------------------------------------ user recursion


def value_iterate_user(
    scenario: Scenario,
    profile: StrategyProfile,
    type_id: str,
    start: Content,
    horizon: int,
    belief=None,
    strategy: Optional[TypeStrategy] = None,
) -> float:
    """A type's discounted reward along the algorithm's best-response path.

    ``strategy`` overrides the type's own play; the algorithm best-responds
    to the profile with that override installed (the user commits first).
    """
    i = scenario.index(type_id)
    if strategy is not None:
        profile = profile.replace(type_id, strategy)
    f, u = _profile_arrays(scenario, profile)
    h = algo_policy.weights_from_arrays(scenario.alpha, f, u, scenario.gamma_alg)
    L, per = _kinds(f, u)
    lam = scenario.prior_array if belief is None else np.asarray(belief, dtype=float)
    supp = lam > 0
    if not supp[i]:
        raise MalformedInput(f"type {type_id} has zero prior weight")
    lat = _Lattice(L[:, supp])
    h = h[supp]
    logprior = np.log(lam[supp])[None]
    own = L[:, i]
    c = scenario.cost or 0.0
    K = L.shape[0]
    # per-kind reward for this type: engaged kinds earn r(s), signal kinds pay c
    reward = np.zeros(K)
    for s in (0, 1):
        r = scenario.reward[s, i]
        for j in range(per):
            k = s * per + j
            engaged = j < per // 2
            signaled = u is not None and j % 2 == 0
            reward[k] = (r if engaged else 0.0) - (c if signaled else 0.0)
    gamma = scenario.gamma_user
    eye = np.eye(K, dtype=np.int64)

    levels = []
    C = np.zeros((1, K), dtype=np.int64)
    contents = np.array([int(start)])
    for t in range(horizon):
        levels.append((C, contents))
        if t == horizon - 1:
            break
        kinds = contents[:, None] * per + np.arange(per)[None]  # (N, per)
        CC = (C[:, None, :] + eye[kinds]).reshape(-1, K)
        ok = (own[kinds] > 0).ravel()
        CC = CC[ok]
        CC, inverse = np.unique(CC, axis=0, return_inverse=True)
        child = np.full(ok.shape[0], -1, dtype=np.int64)
        child[ok] = inverse.ravel()
        levels[-1] = (C, contents, child.reshape(-1, per))
        ll, alive = lat.loglik(CC)
        B = _beliefs(logprior, ll, alive)[0]
        contents = np.where(B @ h >= 0.0, 0, 1)
        C = CC

    V_next = None
    for lvl in reversed(levels):
        C, contents = lvl[0], lvl[1]
        kinds = contents[:, None] * per + np.arange(per)[None]
        P = own[kinds]
        val = (P * reward[kinds]).sum(axis=1)
        if len(lvl) == 3 and V_next is not None:
            child = lvl[2]
            Vc = np.where(child >= 0, V_next[np.where(child >= 0, child, 0)], 0.0)
            val = val + gamma * (P * Vc).sum(axis=1)
        V_next = val
    return float(V_next[0]) if horizon > 0 else 0.0


def user_horizon(scenario: Scenario, tolerance: float) -> int:
    scale = float(np.max(scenario.reward)) + (scenario.cost or 0.0)
    return horizon_for(scenario.gamma_user, scale, tolerance)


# --------------------------------------------------------------- deviations


@dataclass
class TypeDeviation:
    type_id: str
    equilibrium_value: float
    best_value: float
    witness: TypeStrategy
    grid_points: int

    @property
    def improvement(self) -> float:
        return self.best_value - self.equilibrium_value


@dataclass
class DeviationReport:
    per_type: dict[str, TypeDeviation] = field(default_factory=dict)
    tolerance: float = 0.0

    @property
    def max_improvement(self) -> float:
        return max((d.improvement for d in self.per_type.values()), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_improvement <= self.tolerance


def deviation_grid(scenario: Scenario, type_id: str, cfg: OracleConfig) -> tuple[np.ndarray, np.ndarray]:
    """Feasible (x, y) grid at the non-preferred content, including the {1} atom."""
    p = scenario.params(type_id)
    if p.group is Group.TYPE1:
        xs = np.linspace(0.0, p.ratio - cfg.epsilon_atom, cfg.deviation_grid)
    else:
        xs = np.linspace(0.0, 1.0, cfg.deviation_grid)
    if scenario.signaling:
        ys = np.linspace(0.0, 1.0, cfg.deviation_grid)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        X, Y = X.ravel(), Y.ravel()
    else:
        X, Y = xs, np.zeros_like(xs)
    if p.group is Group.TYPE1:
        X, Y = np.append(X, 1.0), np.append(Y, 0.0)
    return X, Y


def _ae_values(scenario: Scenario, profile: StrategyProfile, type_id: str, X, Y) -> np.ndarray:
    """Closed-form user value for each deviation (x, y), with the entry recomputed."""
    i = scenario.index(type_id)
    p = scenario.types[i]
    m = algo_policy.margin(scenario, profile, type_id)
    pref = int(p.preferred)
    f = np.empty((2, X.shape[0]))
    u = np.zeros((2, X.shape[0]))
    f[pref], f[1 - pref] = 1.0, X
    u[1 - pref] = Y
    alpha = scenario.alpha[:, i : i + 1]
    h = algo_policy.weights_from_arrays(alpha, f, u if scenario.signaling else None, scenario.gamma_alg)
    entry_a = scenario.prior[i] * h + m >= 0.0
    shows_pref = entry_a if pref == 0 else ~entry_a
    out = np.empty(X.shape[0])
    for j in range(X.shape[0]):
        q = user_q_closed_form(scenario, type_id, TypeStrategy.from_point(p, float(X[j]), float(Y[j])))
        out[j] = q.q_preferred if shows_pref[j] else q.q_other
    return out


def _re_value(scenario, profile, type_id, strategy, horizon) -> float:
    p1 = scenario.entry.p1
    return sum(
        p1[s] * value_iterate_user(scenario, profile, type_id, s, horizon, strategy=strategy)
        for s in (Content.A, Content.B)
        if p1[s] > 0
    )


def verify_no_deviation(
    scenario: Scenario,
    result: EquilibriumResult | StrategyProfile,
    cfg: Optional[OracleConfig] = None,
    tolerance: float = 1e-9,
    raise_on_failure: bool = True,
) -> DeviationReport:
    """Grid search for a profitable unilateral deviation by any type."""
    cfg = cfg or OracleConfig()
    profile = result.profile if isinstance(result, EquilibriumResult) else result
    report = DeviationReport(tolerance=tolerance)
    for t in scenario.types:
        X, Y = deviation_grid(scenario, t.id, cfg)
        if scenario.entry.mode is EntryMode.AE:
            vals = _ae_values(scenario, profile, t.id, X, Y)
            own = profile[t.id]
            eq = _ae_values(scenario, profile, t.id, *map(np.atleast_1d, own.point(t)))[0]
        else:
            horizon = user_horizon(scenario, cfg.tolerance * 1e-3)
            pts = [TypeStrategy.from_point(t, float(x), float(y)) for x, y in zip(X, Y)]
            vals = np.array(
                parallel_map(lambda st: _re_value(scenario, profile, t.id, st, horizon), pts)
            )
            eq = _re_value(scenario, profile, t.id, profile[t.id], horizon)
        j = int(np.argmax(vals))
        report.per_type[t.id] = TypeDeviation(
            t.id, float(eq), float(vals[j]), TypeStrategy.from_point(t, float(X[j]), float(Y[j])), X.shape[0]
        )
    if raise_on_failure and not report.passed:
        worst = max(report.per_type.values(), key=lambda d: d.improvement)
        raise DeviationFound(
            f"type {worst.type_id} gains {worst.improvement} by deviating to {worst.witness}", report
        )
    return report


# ---------------------------------------------------------- policy agreement


@dataclass
class PolicyCheck:
    belief: np.ndarray
    score: float  # <belief, h>
    closed_form: Content
    oracle: Content
    gap: float  # |Q(A) - Q(B)| from the oracle
    error_bound: float

    @property
    def decisive(self) -> bool:
        return self.gap > 2.0 * self.error_bound


def policy_agreement(
    scenario: Scenario,
    profile: StrategyProfile,
    beliefs: Sequence,
    cfg: Optional[OracleConfig] = None,
) -> list[PolicyCheck]:
    """Compare best_content with the oracle's argmax at each belief."""
    cfg = cfg or OracleConfig()
    beliefs = np.asarray(beliefs, dtype=float)
    h = algo_policy.classifier_weights(scenario, profile)
    res = value_iterate(scenario, profile, beliefs, cfg)
    out = []
    for j, b in enumerate(beliefs):
        qa, qb = res.q[j]
        score = float(np.dot(b, h))
        out.append(
            PolicyCheck(
                b,
                score,
                Content.A if score >= 0 else Content.B,
                Content.A if qa >= qb else Content.B,
                abs(qa - qb),
                res.error_bound,
            )
        )
    return out
