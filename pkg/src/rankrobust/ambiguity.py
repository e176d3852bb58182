"""Ambiguity indices on priors over a finite state set and robust minimization.

An ambiguity index is a grounded convex penalty c on the simplex of priors.
The workhorse is ``robust_min(u) = min_q { q . u + c(q) }``: an indicator
penalty over a finite prior set gives worst-case (maxmin) evaluation, the
relative-entropy penalty gives the multiplier closed form, the relative
Gini penalty a water-filling quadratic program, and tabulated penalties an
explicit grid scan.  ``c_min_bruteforce`` is the dual-side oracle: it
reconstructs the minimal penalty from certainty values alone.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp, rel_entr

from .errors import DomainError, ShapeError, SpecStringError, UnknownPriorError

PRIOR_SUM_TOL = 1e-12
HULL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Prior:
    """A probability vector over the (ordered) state set."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        if w.ndim != 1 or w.size == 0:
            raise ShapeError("a prior must be a non-empty 1-D weight vector")
        if np.any(w < 0.0):
            raise DomainError(f"prior weights must be >= 0, got min {w.min()}")
        total = math.fsum(w)
        if abs(total - 1.0) > PRIOR_SUM_TOL:
            raise DomainError(f"prior weights must sum to 1 within {PRIOR_SUM_TOL}, got {total!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n: int) -> "Prior":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, n: int, index: int) -> "Prior":
        w = np.zeros(n)
        w[index] = 1.0
        return cls(w)

    @property
    def n_states(self) -> int:
        return self.weights.size

    def __repr__(self):
        return f"Prior({np.array2string(self.weights, precision=6, separator=', ')})"


def _as_weights(q, n: int) -> np.ndarray:
    w = q.weights if isinstance(q, Prior) else Prior(np.asarray(q, dtype=float)).weights
    if w.size != n:
        raise ShapeError(f"prior has {w.size} states, index expects {n}")
    return w


class AmbiguityIndex:
    """Base class: a grounded convex penalty on priors over n_states states."""

    kind = "abstract"

    @property
    def n_states(self) -> int:
        raise NotImplementedError

    def penalty(self, q) -> float:
        """Penalty of the prior q; non-negative, possibly +inf."""
        raise NotImplementedError

    def robust_min(self, u) -> tuple[float, Prior]:
        """min_q { q . u + c(q) } with an attaining prior."""
        raise NotImplementedError

    def robust_values(self, U: np.ndarray) -> np.ndarray:
        """Vectorized robust_min values for rows of U (no minimizers)."""
        raise NotImplementedError

    def zero_penalty_prior(self) -> Prior:
        """Some prior with penalty zero (exists by groundedness)."""
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError

    def _check_u(self, u) -> np.ndarray:
        arr = np.asarray(u, dtype=float)
        if arr.ndim != 1 or arr.size != self.n_states:
            raise ShapeError(f"per-state vector must have length {self.n_states}, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("per-state utilities must be finite")
        return arr


class MaxminSet(AmbiguityIndex):
    """Indicator penalty of the convex hull of finitely many priors.

    Stored as extreme points; membership is an LP feasibility check.  For a
    linear objective the minimum over the hull is attained at a listed
    point, so robust_min scans them (first index wins ties, making results
    schedule-independent).
    """

    kind = "maxmin"

    def __init__(self, priors):
        priors = [p if isinstance(p, Prior) else Prior(np.asarray(p, dtype=float)) for p in priors]
        if not priors:
            raise DomainError("maxmin set needs at least one prior")
        n = priors[0].n_states
        if any(p.n_states != n for p in priors):
            raise ShapeError("all priors in a maxmin set must have the same length")
        self.priors = tuple(priors)
        self._matrix = np.vstack([p.weights for p in priors])

    @property
    def n_states(self) -> int:
        return self._matrix.shape[1]

    def penalty(self, q) -> float:
        w = _as_weights(q, self.n_states)
        # Cheap exact-vertex test first; the LP decides general hull membership.
        if np.min(np.max(np.abs(self._matrix - w), axis=1)) <= HULL_TOL:
            return 0.0
        k = len(self.priors)
        a_eq = np.vstack([self._matrix.T, np.ones((1, k))])
        b_eq = np.concatenate([w, [1.0]])
        res = linprog(np.zeros(k), A_eq=a_eq, b_eq=b_eq, bounds=[(0.0, None)] * k, method="highs")
        if res.status == 0 and res.x is not None:
            mix = np.clip(res.x, 0.0, None)
            if np.max(np.abs(self._matrix.T @ mix - w)) <= HULL_TOL:
                return 0.0
        return math.inf

    def robust_min(self, u) -> tuple[float, Prior]:
        arr = self._check_u(u)
        vals = self._matrix @ arr
        idx = int(np.argmin(vals))
        return float(vals[idx]), self.priors[idx]

    def robust_values(self, U: np.ndarray) -> np.ndarray:
        return np.min(np.asarray(U, dtype=float) @ self._matrix.T, axis=-1)

    def zero_penalty_prior(self) -> Prior:
        return self.priors[0]

    def describe(self) -> str:
        return f"maxmin over {len(self.priors)} priors"


class Entropic(AmbiguityIndex):
    """Relative-entropy penalty theta * sum_w q_w log(q_w / p'_w).

    The reference prior must have full support.  robust_min has the
    multiplier closed form -theta * log E'[exp(-u/theta)] with minimizer
    proportional to p'_w exp(-u_w/theta).
    """

    kind = "entropic"

    def __init__(self, theta: float, reference: Prior):
        if not theta > 0:
            raise DomainError(f"entropic penalty needs theta > 0, got {theta}")
        reference = reference if isinstance(reference, Prior) else Prior(np.asarray(reference, dtype=float))
        if np.any(reference.weights <= 0.0):
            raise DomainError("entropic reference prior must have strictly positive weights")
        self.theta = float(theta)
        self.reference = reference

    @property
    def n_states(self) -> int:
        return self.reference.n_states

    def penalty(self, q) -> float:
        w = _as_weights(q, self.n_states)
        return self.theta * float(np.sum(rel_entr(w, self.reference.weights)))

    def robust_min(self, u) -> tuple[float, Prior]:
        arr = self._check_u(u)
        logits = np.log(self.reference.weights) - arr / self.theta
        lse = logsumexp(logits)
        value = -self.theta * float(lse)
        q = np.exp(logits - lse)
        q = q / math.fsum(q)
        return value, Prior(q)

    def robust_values(self, U: np.ndarray) -> np.ndarray:
        logits = np.log(self.reference.weights) - np.asarray(U, dtype=float) / self.theta
        return -self.theta * logsumexp(logits, axis=-1)

    def zero_penalty_prior(self) -> Prior:
        return self.reference

    def describe(self) -> str:
        return f"entropic(theta={self.theta:g}) around {self.reference!r}"


class Gini(AmbiguityIndex):
    """Relative Gini penalty theta * E'[(dq/dp' - 1)^2] (expectation under p').

    robust_min solves the convex quadratic over the simplex by water-filling:
    q_w = p'_w * max(0, 1 + (mu - u_w) / (2 theta)) with the multiplier mu
    found by monotone bisection on the mass constraint.
    """

    kind = "gini"

    def __init__(self, theta: float, reference: Prior):
        if not theta > 0:
            raise DomainError(f"gini penalty needs theta > 0, got {theta}")
        reference = reference if isinstance(reference, Prior) else Prior(np.asarray(reference, dtype=float))
        if np.any(reference.weights <= 0.0):
            raise DomainError("gini reference prior must have strictly positive weights")
        self.theta = float(theta)
        self.reference = reference

    @property
    def n_states(self) -> int:
        return self.reference.n_states

    def penalty(self, q) -> float:
        w = _as_weights(q, self.n_states)
        p = self.reference.weights
        return self.theta * float(np.sum((w - p) ** 2 / p))

    def _minimizers(self, U: np.ndarray) -> np.ndarray:
        p = self.reference.weights
        theta = self.theta
        lo = U.min(axis=-1) - 2.0 * theta
        hi = U.max(axis=-1) + 2.0 * theta

        def mass(mu):
            return np.sum(p * np.maximum(0.0, 1.0 + (mu[..., None] - U) / (2.0 * theta)), axis=-1)

        for _ in range(200):
            mid = 0.5 * (lo + hi)
            hit = mass(mid) < 1.0
            lo = np.where(hit, mid, lo)
            hi = np.where(hit, hi, mid)
            if np.max(hi - lo) < 1e-14 * (1.0 + np.max(np.abs(hi))):
                break
        mu = 0.5 * (lo + hi)
        q = p * np.maximum(0.0, 1.0 + (mu[..., None] - U) / (2.0 * theta))
        return q / q.sum(axis=-1, keepdims=True)

    def robust_min(self, u) -> tuple[float, Prior]:
        arr = self._check_u(u)
        q = self._minimizers(arr[None, :])[0]
        prior = Prior(q)
        return float(arr @ q) + self.penalty(prior), prior

    def robust_values(self, U: np.ndarray) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        q = self._minimizers(U)
        p = self.reference.weights
        return np.sum(q * U, axis=-1) + self.theta * np.sum((q - p) ** 2 / p, axis=-1)

    def zero_penalty_prior(self) -> Prior:
        return self.reference

    def describe(self) -> str:
        return f"gini(theta={self.theta:g}) around {self.reference!r}"


class Tabulated(AmbiguityIndex):
    """Explicit (prior, penalty) grid, re-grounded at construction.

    Lookups require an exact grid match; anything else is an error rather
    than a silent nearest-neighbour guess.
    """

    kind = "tabulated"

    def __init__(self, entries):
        rows = []
        vals = []
        for prior, value in entries:
            prior = prior if isinstance(prior, Prior) else Prior(np.asarray(prior, dtype=float))
            value = float(value)
            if value < 0 or not math.isfinite(value):
                raise DomainError(f"tabulated penalty values must be finite and >= 0, got {value}")
            rows.append(prior)
            vals.append(value)
        if not rows:
            raise DomainError("tabulated penalty needs at least one grid entry")
        n = rows[0].n_states
        if any(p.n_states != n for p in rows):
            raise ShapeError("all tabulated priors must have the same length")
        vals = np.asarray(vals, dtype=float)
        vals = vals - vals.min()  # re-ground: minimum penalty must be zero
        self.priors = tuple(rows)
        self.values = vals
        self._matrix = np.vstack([p.weights for p in rows])

    @property
    def n_states(self) -> int:
        return self._matrix.shape[1]

    def penalty(self, q) -> float:
        w = _as_weights(q, self.n_states)
        gaps = np.max(np.abs(self._matrix - w), axis=1)
        idx = int(np.argmin(gaps))
        if gaps[idx] > 1e-12:
            raise UnknownPriorError(
                f"prior {w} is not on the tabulated grid (closest gap {gaps[idx]:g})"
            )
        return float(self.values[idx])

    def robust_min(self, u) -> tuple[float, Prior]:
        arr = self._check_u(u)
        vals = self._matrix @ arr + self.values
        idx = int(np.argmin(vals))
        return float(vals[idx]), self.priors[idx]

    def robust_values(self, U: np.ndarray) -> np.ndarray:
        return np.min(np.asarray(U, dtype=float) @ self._matrix.T + self.values, axis=-1)

    def zero_penalty_prior(self) -> Prior:
        return self.priors[int(np.argmin(self.values))]

    def describe(self) -> str:
        return f"tabulated on {len(self.priors)} priors"


# ---------------------------------------------------------------------------
# Module-level operation surface
# ---------------------------------------------------------------------------

def penalty(c: AmbiguityIndex, q) -> float:
    return c.penalty(q)


def robust_min(c: AmbiguityIndex, u) -> tuple[float, Prior]:
    return c.robust_min(u)


@dataclass(frozen=True)
class UtilityGrid:
    """A per-axis lattice low:step:high for brute-force duality search."""

    low: float
    high: float
    step: float

    def axis(self) -> np.ndarray:
        if not (self.step > 0 and self.high >= self.low):
            raise DomainError(f"degenerate utility grid {self}")
        n = int(math.floor((self.high - self.low) / self.step + 1e-9)) + 1
        return self.low + self.step * np.arange(n)


def utility_lattice(grid: UtilityGrid, n_states: int) -> np.ndarray:
    """Full product lattice as an (m, n_states) array."""
    axis = grid.axis()
    if axis.size == 0 or n_states < 1:
        raise DomainError("empty utility lattice")
    mesh = np.meshgrid(*([axis] * n_states), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def c_min_bruteforce(eval_ce, q, grid: UtilityGrid, chunk: int = 262_144) -> float:
    """Lower-bound the minimal penalty at q from certainty values alone.

    Maximizes eval_ce(v) - q . v over the lattice of utility-unit
    pure-ambiguity vectors.  ``eval_ce`` must accept an (m, n_states) array
    of candidate vectors and return their m certainty values (utility
    units); :meth:`AmbiguityIndex.robust_values` conforms.  The sweep is
    monotone under grid refinement and never exceeds the true penalty.
    """
    w = q.weights if isinstance(q, Prior) else Prior(np.asarray(q, dtype=float)).weights
    lattice = utility_lattice(grid, w.size)
    best = -math.inf
    for start in range(0, lattice.shape[0], chunk):
        block = lattice[start : start + chunk]
        ce = np.asarray(eval_ce(block), dtype=float)
        if ce.shape != (block.shape[0],):
            raise ShapeError(
                f"eval_ce must map an (m, {w.size}) array to m values, got shape {ce.shape}"
            )
        gap = ce - block @ w
        best = max(best, float(gap.max()))
    return best


def simplex_grid(n: int, resolution: int) -> np.ndarray:
    """All probability vectors with weights k/resolution, as an (m, n) array."""
    if n < 1 or resolution < 1:
        raise DomainError("simplex grid needs n >= 1 and resolution >= 1")
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        k = np.arange(resolution + 1)
        return np.stack([k, resolution - k], axis=1) / resolution
    if n == 3:
        counts = resolution + 1 - np.arange(resolution + 1)
        i = np.repeat(np.arange(resolution + 1), counts)
        j = np.concatenate([np.arange(c) for c in counts])
        return np.stack([i, j, resolution - i - j], axis=1) / resolution
    rows = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            rows.append(prefix + [remaining])
            return
        for k in range(remaining + 1):
            rec(prefix + [k], remaining - k, slots - 1)

    rec([], resolution, n)
    return np.asarray(rows, dtype=float) / resolution


# ---------------------------------------------------------------------------
# Spec-string parsing (grammar consumed by the CLI)
# ---------------------------------------------------------------------------

def parse_prior(spec: str, state_ids) -> Prior:
    """Parse `w1=p1,w2=p2,...`, `uniform`, or a bare comma list of weights.

    Named weights are aligned to ``state_ids``; omitted states get weight
    zero.
    """
    ids = [str(s) for s in state_ids]
    text = spec.strip()
    if text.lower() == "uniform":
        return Prior.uniform(len(ids))
    try:
        if "=" in text:
            weights = dict.fromkeys(ids, 0.0)
            for part in text.split(","):
                name, _, val = part.partition("=")
                name = name.strip()
                if name not in weights:
                    raise SpecStringError(f"prior names unknown state {name!r}")
                weights[name] = float(val)
            return Prior(np.array([weights[s] for s in ids]))
        vals = [float(x) for x in text.split(",")]
        if len(vals) != len(ids):
            raise SpecStringError(
                f"prior lists {len(vals)} weights for {len(ids)} states"
            )
        return Prior(np.array(vals))
    except (ValueError, DomainError, ShapeError) as exc:
        if isinstance(exc, SpecStringError):
            raise
        raise SpecStringError(f"bad prior spec {spec!r}: {exc}") from exc


def _load_penalty_table(path: str, state_ids) -> Tabulated:
    ids = [str(s) for s in state_ids]
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ids + ["penalty"] if c not in (reader.fieldnames or [])]
        if missing:
            raise SpecStringError(f"penalty table {path} lacks columns {missing}")
        for line, row in enumerate(reader, start=2):
            try:
                prior = Prior(np.array([float(row[c]) for c in ids]))
                entries.append((prior, float(row["penalty"])))
            except (ValueError, DomainError) as exc:
                raise SpecStringError(f"penalty table {path} line {line}: {exc}") from exc
    return Tabulated(entries)


def parse_penalty(spec: str, state_ids) -> AmbiguityIndex:
    """Parse `maxmin:[prior;prior;...] | entropic:theta@prior | gini:theta@prior
    | table:file.csv` (plus the `maxmin:vertices` convenience)."""
    text = spec.strip()
    head, _, rest = text.partition(":")
    head = head.lower()
    n = len(state_ids)
    try:
        if head == "maxmin":
            if rest.strip().lower() == "vertices":
                return MaxminSet([Prior.point_mass(n, i) for i in range(n)])
            body = rest.strip()
            if body.startswith("[") and body.endswith("]"):
                body = body[1:-1]
            priors = [parse_prior(p, state_ids) for p in body.split(";") if p.strip()]
            return MaxminSet(priors)
        if head == "entropic":
            theta, _, prior = rest.partition("@")
            return Entropic(float(theta), parse_prior(prior, state_ids))
        if head == "gini":
            theta, _, prior = rest.partition("@")
            return Gini(float(theta), parse_prior(prior, state_ids))
        if head == "table":
            return _load_penalty_table(rest.strip(), state_ids)
    except (ValueError, DomainError, ShapeError, OSError) as exc:
        if isinstance(exc, SpecStringError):
            raise
        raise SpecStringError(f"bad penalty spec {spec!r}: {exc}") from exc
    raise SpecStringError(f"unknown penalty kind in spec {spec!r}")
