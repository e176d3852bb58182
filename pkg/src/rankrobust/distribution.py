"""Finite discrete distributions, two-stage payoff variables, and dominance checks.

A :class:`DiscreteDistribution` is the law of a one-stage payoff: a sorted,
strictly increasing support with probabilities summing to one.  A
:class:`TwoStageVariable` is a payoff matrix over (state of the world,
outcome) together with per-state outcome probabilities; its per-state rows
are one-stage lotteries.  Both are immutable after construction and all
operations here are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError

#: Support points closer than this are merged at construction.
MERGE_TOL = 1e-12

#: Probabilities must sum to one within this tolerance.
PROB_SUM_TOL = 1e-12

#: Recognized dominance orders.
ORDERS = ("fsd", "ssd", "phissd")


def _merge_support(values, probs):
    """Sort support, merge points within MERGE_TOL of a group leader, drop zero mass.

    Group sums use math.fsum so merged probabilities are correctly rounded
    and independent of input ordering (label permutations cannot change
    any downstream value).
    """
    v = np.asarray(values, dtype=float)
    p = np.asarray(probs, dtype=float)
    if v.ndim != 1 or p.ndim != 1 or v.shape != p.shape or v.size == 0:
        raise ShapeError("values and probs must be equal-length non-empty 1-D sequences")
    if not np.all(np.isfinite(v)):
        raise DomainError("support values must be finite")
    if np.any(p < 0.0):
        raise DomainError(f"probabilities must be >= 0, got min {p.min()}")
    order = np.argsort(v, kind="stable")
    v = v[order]
    p = p[order]
    out_v: list[float] = []
    out_p: list[float] = []
    i = 0
    n = v.size
    while i < n:
        j = i + 1
        while j < n and v[j] - v[i] <= MERGE_TOL:
            j += 1
        mass = math.fsum(p[i:j])
        if mass > 0.0:
            out_v.append(float(v[i]))
            out_p.append(mass)
        i = j
    if not out_v:
        raise DomainError("distribution has no support point with positive mass")
    return np.array(out_v), np.array(out_p)


class DiscreteDistribution:
    """Finite-support probability law of a monetary payoff.

    Duplicate (within 1e-12) support points are merged at construction by
    summing probabilities; zero-mass points are dropped.  The stored
    ``values`` are strictly increasing and ``probs`` sum to one within
    1e-12.
    """

    __slots__ = ("values", "probs", "_cum")

    def __init__(self, values, probs):
        v, p = _merge_support(values, probs)
        total = math.fsum(p)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise DomainError(f"probabilities must sum to 1 within {PROB_SUM_TOL}, got {total!r}")
        cum = np.array([math.fsum(p[: i + 1]) for i in range(p.size)])
        cum[-1] = 1.0
        v.setflags(write=False)
        p.setflags(write=False)
        cum.setflags(write=False)
        self.values = v
        self.probs = p
        self._cum = cum

    @classmethod
    def from_mapping(cls, mapping) -> "DiscreteDistribution":
        """Build from a {value: probability} mapping."""
        items = list(mapping.items())
        return cls([k for k, _ in items], [q for _, q in items])

    @classmethod
    def degenerate(cls, value: float) -> "DiscreteDistribution":
        return cls([value], [1.0])

    @property
    def n_points(self) -> int:
        return self.values.size

    def cdf(self, t: float) -> float:
        """P(payoff <= t); right-continuous, 0 below the support, 1 at/above its max."""
        idx = int(np.searchsorted(self.values, t, side="right"))
        return 0.0 if idx == 0 else float(self._cum[idx - 1])

    def cdf_many(self, ts) -> np.ndarray:
        idx = np.searchsorted(self.values, np.asarray(ts, dtype=float), side="right")
        cum0 = np.concatenate(([0.0], self._cum))
        return cum0[idx]

    def quantile(self, lam: float) -> float:
        """Left-continuous generalized inverse of the cdf, inf{t : F(t) >= lam}.

        Cumulative probabilities within 1e-12 of lam count as reaching it,
        mirroring the support-merge tolerance.
        """
        if not 0.0 < lam < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {lam}")
        idx = int(np.searchsorted(self._cum, lam - 1e-12, side="left"))
        return float(self.values[idx])

    @property
    def cumulative(self) -> np.ndarray:
        """Correctly rounded cumulative probabilities; the last entry is 1."""
        return self._cum

    def survival(self, i: int) -> float:
        """P(payoff > values[i]), correctly rounded."""
        return math.fsum(self.probs[i + 1 :])

    def mean(self) -> float:
        return math.fsum(self.values * self.probs)

    def negated(self) -> "DiscreteDistribution":
        """Law of the negated payoff (the loss -v)."""
        return DiscreteDistribution(-self.values[::-1], self.probs[::-1])

    def pushforward(self, fn) -> "DiscreteDistribution":
        """Law of fn(payoff) for strictly increasing fn (order is preserved)."""
        return DiscreteDistribution(np.asarray(fn(self.values), dtype=float), self.probs)

    def __repr__(self):
        pairs = ", ".join(f"{v:g}: {q:g}" for v, q in zip(self.values, self.probs))
        return f"DiscreteDistribution({{{pairs}}})"


class TwoStageVariable:
    """Bounded payoff over (state of the world w, outcome s).

    ``outcome_probs[w, s]`` is the probability of outcome ``s`` in state
    ``w`` (every row sums to one); ``payoffs[w, s]`` is the monetary payoff.
    All states share the same outcome index set, so point-wise arithmetic
    across variables on the same space is well defined.
    """

    __slots__ = ("state_ids", "outcome_probs", "payoffs", "_index")

    def __init__(self, state_ids, outcome_probs, payoffs):
        ids = tuple(str(s) for s in state_ids)
        probs = np.array(outcome_probs, dtype=float)
        pay = np.array(payoffs, dtype=float)
        if len(ids) == 0:
            raise ShapeError("at least one state is required")
        if len(set(ids)) != len(ids):
            raise ShapeError("state ids must be unique")
        if probs.ndim != 2 or pay.ndim != 2:
            raise ShapeError("outcome_probs and payoffs must be 2-D (state x outcome)")
        if probs.shape != pay.shape or probs.shape[0] != len(ids):
            raise ShapeError(
                f"inconsistent shapes: {len(ids)} states, probs {probs.shape}, payoffs {pay.shape}"
            )
        if not np.all(np.isfinite(pay)):
            raise DomainError("payoffs must be finite")
        if np.any(probs < 0.0):
            raise DomainError("outcome probabilities must be >= 0")
        for w, sid in enumerate(ids):
            total = math.fsum(probs[w])
            if abs(total - 1.0) > PROB_SUM_TOL:
                raise DomainError(
                    f"outcome probabilities in state {sid!r} sum to {total!r}, not 1"
                )
        probs.setflags(write=False)
        pay.setflags(write=False)
        self.state_ids = ids
        self.outcome_probs = probs
        self.payoffs = pay
        self._index = {sid: w for w, sid in enumerate(ids)}

    @classmethod
    def from_state_mapping(cls, mapping) -> "TwoStageVariable":
        """Build from {state_id: {"probs": [...], "payoffs": [...]}}."""
        ids = list(mapping)
        probs = [mapping[s]["probs"] for s in ids]
        pays = [mapping[s]["payoffs"] for s in ids]
        return cls(ids, probs, pays)

    @property
    def n_states(self) -> int:
        return len(self.state_ids)

    @property
    def n_outcomes(self) -> int:
        return self.payoffs.shape[1]

    def state_index(self, state) -> int:
        try:
            return self._index[str(state)]
        except KeyError:
            raise KeyError(f"unknown state {state!r}; known states: {self.state_ids}") from None

    def marginal(self, state) -> DiscreteDistribution:
        """One-stage law of the payoff in the given state (duplicates merged)."""
        w = self.state_index(state)
        return DiscreteDistribution(self.payoffs[w], self.outcome_probs[w])

    def marginals(self) -> list[DiscreteDistribution]:
        return [DiscreteDistribution(self.payoffs[w], self.outcome_probs[w]) for w in range(self.n_states)]

    def with_payoffs(self, payoffs) -> "TwoStageVariable":
        """Same space, new payoff matrix."""
        return TwoStageVariable(self.state_ids, self.outcome_probs, payoffs)

    def is_unambiguous(self, tol: float = 1e-12) -> bool:
        """True when every state induces the same one-stage law."""
        first = self.marginal(self.state_ids[0])
        for sid in self.state_ids[1:]:
            m = self.marginal(sid)
            if m.n_points != first.n_points:
                return False
            if not (
                np.allclose(m.values, first.values, atol=tol, rtol=0.0)
                and np.allclose(m.probs, first.probs, atol=tol, rtol=0.0)
            ):
                return False
        return True

    def __repr__(self):
        return (
            f"TwoStageVariable(n_states={self.n_states}, n_outcomes={self.n_outcomes})"
        )


def same_space(v: TwoStageVariable, u: TwoStageVariable, check_probs: bool = True) -> None:
    """Raise ShapeError unless v and u live on the same state/outcome space."""
    if v.state_ids != u.state_ids:
        raise ShapeError(f"state ids differ: {v.state_ids} vs {u.state_ids}")
    if v.payoffs.shape != u.payoffs.shape:
        raise ShapeError(f"outcome counts differ: {v.payoffs.shape} vs {u.payoffs.shape}")
    if check_probs and not np.allclose(
        v.outcome_probs, u.outcome_probs, atol=1e-12, rtol=0.0
    ):
        raise ShapeError("outcome probabilities differ; variables live on different spaces")


def comonotonic(v: TwoStageVariable, u: TwoStageVariable) -> bool:
    """True iff payoffs of v and u move weakly in tandem in every state.

    The defining product inequality uses weak comparison with exact zeros
    allowed: ties on either side never break comonotonicity.
    """
    same_space(v, u, check_probs=False)
    for w in range(v.n_states):
        a = v.payoffs[w]
        b = u.payoffs[w]
        da = a[None, :] - a[:, None]
        db = b[None, :] - b[:, None]
        if np.any(((da > 0.0) & (db < 0.0)) | ((da < 0.0) & (db > 0.0))):
            return False
    return True


@dataclass(frozen=True)
class DominanceReport:
    """Outcome of a stochastic-dominance comparison.

    ``witness_t`` is a point where the first distribution's claim to
    dominate fails; it is present exactly when the pair is incomparable.
    """

    relation: str  # dominates | dominated | incomparable | equal
    order: str  # fsd | ssd | phissd
    witness_t: float | None = None

    def __post_init__(self):
        if self.relation not in ("dominates", "dominated", "incomparable", "equal"):
            raise DomainError(f"unknown relation {self.relation!r}")
        if self.order not in ORDERS:
            raise DomainError(f"unknown order {self.order!r}")
        if (self.witness_t is not None) != (self.relation == "incomparable"):
            raise DomainError("witness_t must be present iff relation is incomparable")

    def to_dict(self) -> dict:
        return {"relation": self.relation, "order": self.order, "witness_t": self.witness_t}


def _comparison_grid(d1: DiscreteDistribution, d2: DiscreteDistribution) -> np.ndarray:
    """Merged support points plus interval midpoints.

    Step cdfs are constant between support points and their integrals are
    piecewise linear, so this grid decides both FSD and SSD exactly.
    """
    pts = np.union1d(d1.values, d2.values)
    if pts.size > 1:
        mids = 0.5 * (pts[:-1] + pts[1:])
        pts = np.union1d(pts, mids)
    return pts


def _integrated_cdf(d: DiscreteDistribution, grid: np.ndarray) -> np.ndarray:
    """Exact integral of the cdf from -inf up to each grid point."""
    f = d.cdf_many(grid)
    out = np.zeros_like(grid)
    # F is constant on [grid[k], grid[k+1]) because the grid refines the support.
    out[1:] = np.cumsum(f[:-1] * np.diff(grid))
    return out


def dominance(
    d1: DiscreteDistribution,
    d2: DiscreteDistribution,
    order: str,
    phi=None,
    tol: float = 1e-12,
) -> DominanceReport:
    """Compare two one-stage laws by stochastic dominance.

    FSD compares cdfs point-wise, SSD compares exactly integrated cdfs, and
    phi-SSD applies SSD to the push-forward laws under the strictly
    increasing utility ``phi`` (required for that order).
    """
    order = str(order).lower()
    if order not in ORDERS:
        raise DomainError(f"order must be one of {ORDERS}, got {order!r}")
    if order == "phissd":
        if phi is None:
            raise DomainError("phissd comparison requires a utility function")
        d1 = d1.pushforward(phi)
        d2 = d2.pushforward(phi)
    grid = _comparison_grid(d1, d2)
    if order == "fsd":
        g1 = d1.cdf_many(grid)
        g2 = d2.cdf_many(grid)
    else:
        g1 = _integrated_cdf(d1, grid)
        g2 = _integrated_cdf(d2, grid)
    diff = g1 - g2
    if np.all(np.abs(diff) <= tol):
        return DominanceReport("equal", order)
    if np.all(diff <= tol):
        return DominanceReport("dominates", order)
    if np.all(diff >= -tol):
        return DominanceReport("dominated", order)
    witness = float(grid[np.argmax(diff > tol)])
    return DominanceReport("incomparable", order, witness_t=witness)
