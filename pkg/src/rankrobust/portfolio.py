"""Mean-risk portfolio selection over finite scenario panels.

The performance criterion is E_P[portfolio return] - rho(portfolio return),
where rho is the negative of the robust rank-dependent value under a linear
utility (a robustified weighted-VaR risk measure).  The optimizer is a
deterministic coarse simplex grid followed by pairwise coordinate polish
with step halving; every evaluation is recorded so runs are auditable and
reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .ambiguity import Prior
from .distribution import TwoStageVariable
from .errors import BudgetError, ConfigError, DomainError, ShapeError
from .evaluator import Preference, evaluate
from .utility import is_affine

WEIGHT_SUM_TOL = 1e-12


class ScenarioPanel:
    """Per-(state, outcome, asset) returns with shared outcome probabilities."""

    __slots__ = ("assets", "state_ids", "outcome_probs", "returns")

    def __init__(self, assets, state_ids, outcome_probs, returns):
        self.assets = tuple(str(a) for a in assets)
        probs = np.array(outcome_probs, dtype=float)
        rets = np.array(returns, dtype=float)
        if rets.ndim != 3:
            raise ShapeError("returns must be a (state, outcome, asset) array")
        if rets.shape[2] != len(self.assets):
            raise ShapeError(f"{len(self.assets)} assets but returns have {rets.shape[2]} columns")
        if probs.shape != rets.shape[:2]:
            raise ShapeError(f"outcome_probs shape {probs.shape} does not match returns {rets.shape[:2]}")
        if not np.all(np.isfinite(rets)):
            raise DomainError("returns must be finite")
        # Row validation is delegated to the variable constructor below.
        TwoStageVariable(state_ids, probs, rets[:, :, 0])
        probs.setflags(write=False)
        rets.setflags(write=False)
        self.state_ids = tuple(str(s) for s in state_ids)
        self.outcome_probs = probs
        self.returns = rets

    @property
    def n_assets(self) -> int:
        return len(self.assets)


@dataclass(frozen=True)
class Weights:
    """Per-asset allocation; sums to one, optionally long-only."""

    values: np.ndarray
    long_only: bool = True

    def __post_init__(self):
        w = np.asarray(self.values, dtype=float).copy()
        if w.ndim != 1 or w.size == 0:
            raise ShapeError("weights must be a non-empty 1-D vector")
        total = math.fsum(w)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise DomainError(f"weights must sum to 1 within {WEIGHT_SUM_TOL}, got {total!r}")
        if self.long_only and np.any(w < 0.0):
            raise DomainError("long-only weights must be >= 0")
        w.setflags(write=False)
        object.__setattr__(self, "values", w)

    def __iter__(self):
        return iter(self.values)


def portfolio_variable(panel: ScenarioPanel, w: Weights) -> TwoStageVariable:
    """Linear aggregation: payoff(state, outcome) = sum_assets weight * return."""
    weights = np.asarray(w.values if isinstance(w, Weights) else w, dtype=float)
    if weights.size != panel.n_assets:
        raise ShapeError(f"{weights.size} weights for {panel.n_assets} assets")
    payoffs = panel.returns @ weights
    return TwoStageVariable(panel.state_ids, panel.outcome_probs, payoffs)


def risk_measure(v: TwoStageVariable, pref: Preference) -> float:
    """rho(v) = -(robust value), normalized to the linear-utility scale."""
    if not is_affine(pref.phi):
        raise ConfigError(
            "the mean-risk criterion needs an affine utility; "
            f"got {pref.phi.describe()}"
        )
    intercept = pref.phi(0.0)
    slope = pref.phi(1.0) - intercept
    value = evaluate(v, pref).value_utils
    return -(value - intercept) / slope


def mean_risk_objective(panel: ScenarioPanel, w: Weights, p_mean: Prior, pref: Preference) -> float:
    """E_P[v] - rho(v) for the portfolio with weights w."""
    mean, rho = mean_risk_components(panel, w, p_mean, pref)
    return mean - rho


def mean_risk_components(panel: ScenarioPanel, w: Weights, p_mean: Prior, pref: Preference) -> tuple[float, float]:
    """The (mean term, risk term) pair, reported separately so degenerate
    configurations (e.g. a risk-neutral rho that doubles the mean) stay visible."""
    v = portfolio_variable(panel, w)
    if p_mean.n_states != v.n_states:
        raise ShapeError(f"mean prior covers {p_mean.n_states} states, panel has {v.n_states}")
    state_means = np.array([
        float(v.outcome_probs[i] @ v.payoffs[i]) for i in range(v.n_states)
    ])
    mean = float(p_mean.weights @ state_means)
    return mean, risk_measure(v, pref)


def _coarse_grid(n_assets: int, resolution: int) -> np.ndarray:
    """All long-only weight vectors with entries k/resolution."""
    rows = []
    for combo in combinations_with_replacement(range(n_assets), resolution):
        counts = np.bincount(combo, minlength=n_assets)
        rows.append(counts / resolution)
    return np.unique(np.asarray(rows, dtype=float), axis=0)


@dataclass(frozen=True)
class OptimizeResult:
    weights: Weights
    objective: float
    trace: tuple

    def to_dict(self) -> dict:
        return {
            "weights": [float(x) for x in self.weights.values],
            "objective": self.objective,
            "evaluations": len(self.trace),
            "trace": [{"weights": [float(x) for x in w], "objective": o} for w, o in self.trace],
        }


def optimize(
    panel: ScenarioPanel,
    p_mean: Prior,
    pref: Preference,
    budget: int = 2000,
    long_only: bool = True,
    coarse_resolution: int = 10,
    step_tol: float = 1e-6,
) -> OptimizeResult:
    """Deterministic grid-then-polish search of the mean-risk objective.

    The coarse stage scans the simplex lattice at the given resolution; the
    polish stage repeatedly shifts mass between asset pairs, halving the
    step until it falls below ``step_tol`` or the evaluation budget runs
    out.  Ties are broken toward the lexicographically smallest weight
    vector, so results are schedule-independent.
    """
    if panel.n_assets < 1:
        raise ShapeError("panel has no assets")
    if not long_only:
        raise ConfigError("only long-only optimization is supported")
    if panel.n_assets == 1:
        w = Weights(np.array([1.0]))
        obj = mean_risk_objective(panel, w, p_mean, pref)
        return OptimizeResult(w, obj, ((tuple(w.values), obj),))

    grid = _coarse_grid(panel.n_assets, coarse_resolution)
    if budget < grid.shape[0]:
        raise BudgetError(
            f"budget {budget} is below the coarse grid size {grid.shape[0]}"
        )
    trace: list[tuple[tuple, float]] = []

    def score(vec: np.ndarray) -> float:
        obj = mean_risk_objective(panel, Weights(vec), p_mean, pref)
        trace.append((tuple(float(x) for x in vec), obj))
        return obj

    # The grid is lexicographically sorted and only strict improvements move
    # the incumbent, so ties resolve to the smallest weight vector.
    best_w = None
    best_obj = -math.inf
    for row in grid:
        obj = score(row)
        if obj > best_obj:
            best_obj = obj
            best_w = row.copy()

    step = 1.0 / coarse_resolution
    n = panel.n_assets
    while step >= step_tol and len(trace) < budget:
        improved = False
        candidates = []
        for i in range(n):
            for j in range(n):
                if i == j or best_w[j] < step - 1e-15:
                    continue
                cand = best_w.copy()
                cand[i] += step
                cand[j] -= step
                if cand[j] < 0:
                    cand[j] = 0.0
                cand /= cand.sum()
                candidates.append(cand)
        for cand in candidates:
            if len(trace) >= budget:
                break
            obj = score(cand)
            if obj > best_obj + 1e-12:
                best_obj = obj
                best_w = cand
                improved = True
        if not improved:
            step /= 2.0
    weights = Weights(best_w)
    return OptimizeResult(weights, best_obj, tuple(trace))
