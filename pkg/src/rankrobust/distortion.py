"""Probability weighting functions and the distorted-expectation risk measures.

A distortion is a non-decreasing map psi on [0, 1] with psi(0) = 0 and
psi(1) = 1 applied to survival probabilities.  The central functional is
:func:`choquet`, the distorted expectation of a finite-support payoff; the
value-at-risk / expected-shortfall / weighted-VaR family is derived from
the same quantile conventions and cross-checked against it.
"""

from __future__ import annotations

import math

import numpy as np

from .distribution import DiscreteDistribution
from .errors import DomainError, SpecStringError

_VALIDATION_GRID = np.linspace(0.0, 1.0, 4097)
_MONOTONE_SLACK = 1e-9


class Distortion:
    """A probability weighting function with shape metadata.

    ``is_continuous`` is False only for the VaR step distortion.
    ``is_convex`` is established on a dense grid at construction (second
    differences down to -1e-9 slack); it gates the portfolio concavity
    regime downstream.
    """

    __slots__ = ("kind", "params", "is_continuous", "is_convex", "_fn")

    def __init__(self, kind, fn, params=None, *, continuous=True):
        self.kind = kind
        self.params = dict(params or {})
        self.is_continuous = bool(continuous)
        self._fn = fn
        vals = np.asarray(fn(_VALIDATION_GRID), dtype=float)
        if abs(vals[0]) > _MONOTONE_SLACK or abs(vals[-1] - 1.0) > _MONOTONE_SLACK:
            raise DomainError(
                f"distortion {kind!r} must satisfy psi(0)=0 and psi(1)=1, "
                f"got {vals[0]!r} and {vals[-1]!r}"
            )
        if np.any(np.diff(vals) < -_MONOTONE_SLACK):
            raise DomainError(f"distortion {kind!r} is not non-decreasing on [0, 1]")
        second = np.diff(vals, 2)
        self.is_convex = bool(self.is_continuous and np.all(second >= -_MONOTONE_SLACK))

    def __call__(self, p):
        """Evaluate psi at p (scalar or array), p in [0, 1]."""
        arr = np.asarray(p, dtype=float)
        if np.any(arr < -1e-12) or np.any(arr > 1.0 + 1e-12):
            raise DomainError(f"distortion argument must lie in [0, 1], got {p!r}")
        out = self._fn(np.clip(arr, 0.0, 1.0))
        return float(out) if np.ndim(p) == 0 else np.asarray(out, dtype=float)

    def __repr__(self):
        inner = ", ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.params.items())
        return f"Distortion({self.kind}{':' if inner else ''}{inner})"

    def describe(self) -> str:
        """Canonical spec string (round-trips through parse_distortion)."""
        k = self.kind
        p = self.params
        if k == "identity":
            return "identity"
        if k == "power":
            return f"power:{p['a']:g}"
        if k == "prelec":
            return f"prelec:{p['alpha']:g},{p['beta']:g}"
        if k == "tk":
            return f"tk:{p['gamma']:g}"
        if k == "es_tail":
            return f"es:{p['lam']:g}"
        if k == "var_step":
            return f"var:{p['lam']:g}"
        if k == "dual_power":
            return f"dualpower:{p['k']:g}"
        if k == "piecewise_linear":
            return "pwl:" + ";".join(f"{x:g},{y:g}" for x, y in p["knots"])
        return k


def identity() -> Distortion:
    return Distortion("identity", lambda p: p)


def power(a: float) -> Distortion:
    """psi(p) = p**a; convex for a >= 1, concave for a <= 1."""
    if not a > 0:
        raise DomainError(f"power distortion needs a > 0, got {a}")
    return Distortion("power", lambda p: np.power(p, a), {"a": float(a)})


def prelec(alpha: float, beta: float) -> Distortion:
    """psi(p) = exp(-beta * (-ln p)**alpha); prelec(1, 1) is the identity."""
    if not (alpha > 0 and beta > 0):
        raise DomainError(f"prelec distortion needs alpha, beta > 0, got {alpha}, {beta}")

    def fn(p):
        p = np.asarray(p, dtype=float)
        out = np.zeros_like(p)
        pos = p > 0.0
        with np.errstate(divide="ignore"):
            out[pos] = np.exp(-beta * np.power(-np.log(p[pos]), alpha))
        return out

    return Distortion("prelec", fn, {"alpha": float(alpha), "beta": float(beta)})


def tversky_kahneman(gamma: float) -> Distortion:
    """Inverse-S weighting p**g / (p**g + (1-p)**g)**(1/g); monotone only for g > ~0.28."""
    if not 0.28 < gamma <= 1.0:
        raise DomainError(f"tk distortion needs gamma in (0.28, 1], got {gamma}")

    def fn(p):
        p = np.asarray(p, dtype=float)
        num = np.power(p, gamma)
        den = np.power(num + np.power(1.0 - p, gamma), 1.0 / gamma)
        return num / den

    return Distortion("tk", fn, {"gamma": float(gamma)})


def es_tail(lam: float) -> Distortion:
    """psi(p) = max(p - (1 - lam), 0) / lam, the expected-shortfall kink."""
    if not 0.0 < lam <= 1.0:
        raise DomainError(f"es distortion needs lambda in (0, 1], got {lam}")
    return Distortion(
        "es_tail",
        lambda p: np.maximum(np.asarray(p, dtype=float) - (1.0 - lam), 0.0) / lam,
        {"lam": float(lam)},
    )


def var_step(lam: float) -> Distortion:
    """psi(p) = 1{p >= 1 - lam}, the (discontinuous) VaR indicator.

    The jump is right-closed: psi(1 - lam) = 1.
    """
    if not 0.0 < lam < 1.0:
        raise DomainError(f"var distortion needs lambda in (0, 1), got {lam}")
    return Distortion(
        "var_step",
        lambda p: (np.asarray(p, dtype=float) >= 1.0 - lam).astype(float),
        {"lam": float(lam)},
        continuous=False,
    )


def dual_power(k: float) -> Distortion:
    """psi(p) = 1 - (1 - p)**k for k >= 1 (concave)."""
    if not k >= 1.0:
        raise DomainError(f"dualpower distortion needs k >= 1, got {k}")
    return Distortion("dual_power", lambda p: 1.0 - np.power(1.0 - np.asarray(p, dtype=float), k), {"k": float(k)})


def piecewise_linear(knots) -> Distortion:
    """Linear interpolation through (p, psi(p)) knots from (0, 0) to (1, 1).

    Monotonicity of user knots is a construction error, not a runtime
    surprise.
    """
    pts = sorted((float(x), float(y)) for x, y in knots)
    xs = np.array([x for x, _ in pts])
    ys = np.array([y for _, y in pts])
    if xs.size < 2:
        raise DomainError("pwl distortion needs at least two knots")
    if np.any(np.diff(xs) <= 0):
        raise DomainError("pwl distortion knots must have strictly increasing p")
    if abs(xs[0]) > 1e-9 or abs(xs[-1] - 1.0) > 1e-9:
        raise DomainError("pwl distortion knots must span p=0 to p=1")
    if abs(ys[0]) > 1e-9 or abs(ys[-1] - 1.0) > 1e-9:
        raise DomainError("pwl distortion must map 0 to 0 and 1 to 1")
    if np.any(np.diff(ys) < -1e-12):
        raise DomainError("pwl distortion knots must be non-decreasing")
    return Distortion(
        "piecewise_linear",
        lambda p: np.interp(np.asarray(p, dtype=float), xs, ys),
        {"knots": tuple(pts)},
    )


def parse_distortion(spec: str) -> Distortion:
    """Parse `identity | power:a | prelec:alpha,beta | tk:gamma | es:lambda |
    var:lambda | dualpower:k | pwl:p1,y1;p2,y2;...`."""
    text = spec.strip()
    head, _, rest = text.partition(":")
    head = head.lower()
    try:
        if head == "identity":
            if rest:
                raise SpecStringError("identity takes no parameters")
            return identity()
        if head == "power":
            return power(float(rest))
        if head == "prelec":
            a, b = (float(x) for x in rest.split(","))
            return prelec(a, b)
        if head == "tk":
            return tversky_kahneman(float(rest))
        if head == "es":
            return es_tail(float(rest))
        if head == "var":
            return var_step(float(rest))
        if head == "dualpower":
            return dual_power(float(rest))
        if head == "pwl":
            knots = [tuple(float(x) for x in pair.split(",")) for pair in rest.split(";") if pair]
            return piecewise_linear(knots)
    except (ValueError, DomainError) as exc:
        if isinstance(exc, SpecStringError):
            raise
        raise SpecStringError(f"bad distortion spec {spec!r}: {exc}") from exc
    raise SpecStringError(f"unknown distortion kind in spec {spec!r}")


def choquet(d: DiscreteDistribution, psi: Distortion) -> float:
    """Distorted expectation of d under psi.

    With support x_1 < ... < x_n and survivals S_i = P(v > x_i), returns
    x_1 + sum_i (x_{i+1} - x_i) * psi(S_i).  For step cdfs this evaluates
    the survival-distortion integral exactly; survivals are correctly
    rounded tail sums, so relabeling or splitting outcomes cannot change
    the result.
    """
    v = d.values
    n = v.size
    if n == 1:
        return float(v[0])
    survivals = np.array([d.survival(i) for i in range(n - 1)])
    weights = psi(survivals)
    terms = np.diff(v) * weights
    return math.fsum([float(v[0]), *terms])


def value_at_risk(d: DiscreteDistribution, lam: float) -> float:
    """Smallest capital t with P(-v <= t) >= 1 - lam (left-continuous inverse)."""
    if not 0.0 < lam < 1.0:
        raise DomainError(f"VaR level must lie in (0, 1), got {lam}")
    return d.negated().quantile(1.0 - lam)


def expected_shortfall(d: DiscreteDistribution, lam: float) -> float:
    """Average of VaR_gamma(v) over gamma in (0, lam], integrated exactly.

    The VaR curve is piecewise constant; the integral is a finite sum over
    loss-quantile segments, so there is no quadrature error.
    """
    if not 0.0 < lam <= 1.0:
        raise DomainError(f"ES level must lie in (0, 1], got {lam}")
    loss = d.negated()
    cum = np.concatenate(([0.0], loss.cumulative))
    lo = 1.0 - lam
    terms = []
    for i, level in enumerate(loss.values):
        seg = min(cum[i + 1], 1.0) - max(cum[i], lo)
        if seg > 0.0:
            terms.append(level * seg)
    return math.fsum(terms) / lam


def weighted_var(d: DiscreteDistribution, psi: Distortion) -> float:
    """VaR curve integrated against the distortion, int_0^1 VaR_g(v) d psi(1-g).

    Defined here only for continuous psi: the quantile function of a
    finite-support payoff is itself a step function, and the integral has
    no agreed value when both integrand and integrator jump.  Numerically
    this is a signed Stieltjes sum over the finitely many VaR segments and
    must coincide with :func:`choquet`.
    """
    if not psi.is_continuous:
        raise DomainError(
            "weighted VaR of a finite-support payoff requires a continuous "
            "distortion; the step (VaR) distortion is not supported here"
        )
    loss = d.negated()
    cum = np.concatenate(([0.0], loss.cumulative))
    weights = psi(cum)
    terms = loss.values * (weights[:-1] - weights[1:])
    return math.fsum(terms)
