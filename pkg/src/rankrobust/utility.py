"""Strictly increasing utility maps and the utility-scale mixture algebra.

The mixture operations combine *utility profiles*: a mix of x and y is the
payoff whose utility is the convex combination of the utilities of x and y,
and the addition x (+) y is the payoff whose shifted utility is the sum of
shifted utilities (shift = phi - phi(0), the unique affine-invariant
normalization).  Addition is built literally as doubling of the half-mix,
so the defining identity holds bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distribution import TwoStageVariable, same_space
from .errors import DomainError, ImageOverflowError, SpecStringError

_INF = math.inf


@dataclass(frozen=True)
class Interval:
    """A real interval with per-end closedness flags."""

    lo: float
    hi: float
    closed_lo: bool = False
    closed_hi: bool = False

    def contains(self, x, tol: float = 0.0) -> bool:
        """Whole-array membership; the tolerance relaxes only closed ends.

        Open ends stay strict: values on an open boundary are outside by
        definition and must not be absorbed by float slack.
        """
        arr = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(arr)):
            return False
        if self.lo == -_INF:
            ok_lo = True
        elif self.closed_lo:
            ok_lo = bool(np.all(arr >= self.lo - tol))
        else:
            ok_lo = bool(np.all(arr > self.lo))
        if self.hi == _INF:
            ok_hi = True
        elif self.closed_hi:
            ok_hi = bool(np.all(arr <= self.hi + tol))
        else:
            ok_hi = bool(np.all(arr < self.hi))
        return ok_lo and ok_hi

    def contains_mask(self, x, tol: float = 0.0) -> np.ndarray:
        """Element-wise membership under the same end conventions as contains()."""
        arr = np.asarray(x, dtype=float)
        ok = np.isfinite(arr)
        if self.lo != -_INF:
            ok &= (arr >= self.lo - tol) if self.closed_lo else (arr > self.lo)
        if self.hi != _INF:
            ok &= (arr <= self.hi + tol) if self.closed_hi else (arr < self.hi)
        return ok

    def clamp(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)

    def __repr__(self):
        left = "[" if self.closed_lo else "("
        right = "]" if self.closed_hi else ")"
        return f"{left}{self.lo:g}, {self.hi:g}{right}"


_REAL_LINE = Interval(-_INF, _INF)

_CHECK_POINTS = 257


class UtilityFn:
    """A strictly increasing, continuous utility with tracked image interval.

    Evaluation and inversion are closed form for every built-in kind and
    round-trip to better than 1e-10.  Both accept scalars or arrays and use
    the same numpy kernels, so lifted (matrix) operations reproduce scalar
    results exactly.
    """

    __slots__ = ("kind", "params", "domain", "image", "_fwd", "_inv")

    def __init__(self, kind, fwd, inv, domain: Interval, image: Interval, params=None):
        self.kind = kind
        self.params = dict(params or {})
        self.domain = domain
        self.image = image
        self._fwd = fwd
        self._inv = inv
        self._validate_monotone()

    def _validate_monotone(self):
        lo = self.domain.lo if math.isfinite(self.domain.lo) else -10.0
        hi = self.domain.hi if math.isfinite(self.domain.hi) else 10.0
        if not lo < hi:
            raise DomainError(f"empty domain {self.domain}")
        pad = 1e-9 * (1.0 + abs(lo) + abs(hi))
        grid = np.linspace(lo + (0 if self.domain.closed_lo else pad), hi - (0 if self.domain.closed_hi else pad), _CHECK_POINTS)
        vals = np.asarray(self._fwd(grid), dtype=float)
        if not np.all(np.isfinite(vals)) or np.any(np.diff(vals) <= 0.0):
            raise DomainError(f"utility {self.kind!r} is not strictly increasing on {self.domain}")

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        tol = 1e-12 * (1.0 + np.max(np.abs(arr), initial=0.0))
        if not self.domain.contains(arr, tol=tol):
            raise DomainError(f"utility argument outside domain {self.domain}: {t!r}")
        out = self._fwd(arr)
        return float(out) if np.ndim(t) == 0 else np.asarray(out, dtype=float)

    def inverse(self, y):
        arr = np.asarray(y, dtype=float)
        tol = 1e-12 * (1.0 + np.max(np.abs(arr), initial=0.0))
        if not self.image.contains(arr, tol=tol):
            raise DomainError(f"inverse argument outside image {self.image}: {y!r}")
        out = self._inv(arr)
        return float(out) if np.ndim(y) == 0 else np.asarray(out, dtype=float)

    def rescaled(self, a: float, b: float) -> "UtilityFn":
        """The positive affine transform a*phi + b (represents the same preferences)."""
        if not a > 0:
            raise DomainError(f"rescaling slope must be positive, got {a}")
        lo, hi = a * self.image.lo + b, a * self.image.hi + b
        image = Interval(lo, hi, self.image.closed_lo, self.image.closed_hi)
        base_fwd, base_inv = self._fwd, self._inv
        return UtilityFn(
            "rescaled",
            lambda t: a * base_fwd(t) + b,
            lambda y: base_inv((np.asarray(y, dtype=float) - b) / a),
            self.domain,
            image,
            {"a": float(a), "b": float(b), "base": self.describe()},
        )

    def describe(self) -> str:
        k = self.kind
        p = self.params
        if k == "affine":
            return f"affine:{p['a']:g},{p['b']:g}"
        if k == "exponential":
            return f"exp:{p['a']:g}"
        if k == "power":
            return f"power:{p['r']:g}"
        if k == "piecewise_linear":
            return "pwl:" + ";".join(f"{x:g},{y:g}" for x, y in p["knots"])
        if k == "rescaled":
            return f"rescaled:{p['a']:g},{p['b']:g}({p['base']})"
        return k

    def __repr__(self):
        return f"UtilityFn({self.describe()}, domain={self.domain}, image={self.image})"


def affine(a: float, b: float = 0.0) -> UtilityFn:
    """phi(t) = a*t + b with a > 0."""
    if not a > 0:
        raise DomainError(f"affine utility needs slope a > 0, got {a}")
    return UtilityFn(
        "affine",
        lambda t: a * np.asarray(t, dtype=float) + b,
        lambda y: (np.asarray(y, dtype=float) - b) / a,
        _REAL_LINE,
        _REAL_LINE,
        {"a": float(a), "b": float(b)},
    )


def identity_utility() -> UtilityFn:
    return affine(1.0, 0.0)


def exponential(a: float) -> UtilityFn:
    """phi(t) = (1 - exp(-a*t)) / a, increasing for any a != 0, phi(0) = 0.

    For a > 0 the image is bounded above by 1/a, so utility-scale addition
    can overflow; that is surfaced as ImageOverflowError downstream.
    """
    if a == 0:
        raise DomainError("exponential utility needs a != 0 (use affine for the linear case)")
    if a > 0:
        image = Interval(-_INF, 1.0 / a)
    else:
        image = Interval(1.0 / a, _INF)
    return UtilityFn(
        "exponential",
        lambda t: -np.expm1(-a * np.asarray(t, dtype=float)) / a,
        lambda y: -np.log1p(-a * np.asarray(y, dtype=float)) / a,
        _REAL_LINE,
        image,
        {"a": float(a)},
    )


def power_utility(r: float, domain: tuple[float, float] = (0.0, _INF)) -> UtilityFn:
    """phi(t) = t**r on a positive domain, or the odd extension sign(t)|t|**r
    when the stated domain reaches non-positive values (strictly increasing
    through zero for every r > 0)."""
    if not r > 0:
        raise DomainError(f"power utility needs exponent r > 0, got {r}")
    lo, hi = float(domain[0]), float(domain[1])
    dom = Interval(lo, hi)
    if lo >= 0.0:
        fwd = lambda t: np.power(np.asarray(t, dtype=float), r)
        inv = lambda y: np.power(np.asarray(y, dtype=float), 1.0 / r)
    else:
        fwd = lambda t: np.sign(t) * np.power(np.abs(np.asarray(t, dtype=float)), r)
        inv = lambda y: np.sign(y) * np.power(np.abs(np.asarray(y, dtype=float)), 1.0 / r)
    img_lo = float(fwd(lo)) if math.isfinite(lo) else -_INF if lo < 0 else 0.0
    if lo == 0.0:
        img_lo = 0.0
    img_hi = float(fwd(hi)) if math.isfinite(hi) else _INF
    return UtilityFn("power", fwd, inv, dom, Interval(img_lo, img_hi), {"r": float(r), "domain": (lo, hi)})


def piecewise_linear_utility(knots) -> UtilityFn:
    """Linear interpolation through strictly increasing (x, y) knots.

    Domain and image are the closed knot ranges.
    """
    pts = sorted((float(x), float(y)) for x, y in knots)
    xs = np.array([x for x, _ in pts])
    ys = np.array([y for _, y in pts])
    if xs.size < 2:
        raise DomainError("pwl utility needs at least two knots")
    if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
        raise DomainError("pwl utility knots must be strictly increasing in x and y")
    return UtilityFn(
        "piecewise_linear",
        lambda t: np.interp(np.asarray(t, dtype=float), xs, ys),
        lambda y: np.interp(np.asarray(y, dtype=float), ys, xs),
        Interval(xs[0], xs[-1], True, True),
        Interval(ys[0], ys[-1], True, True),
        {"knots": tuple(pts)},
    )


def parse_utility(spec: str) -> UtilityFn:
    """Parse `affine:a,b | exp:a | power:r | pwl:x1,y1;x2,y2;...` (plus `identity`)."""
    text = spec.strip()
    head, _, rest = text.partition(":")
    head = head.lower()
    try:
        if head == "identity":
            return identity_utility()
        if head == "affine":
            parts = [float(x) for x in rest.split(",")]
            if len(parts) == 1:
                parts.append(0.0)
            return affine(*parts)
        if head == "exp":
            return exponential(float(rest))
        if head == "power":
            return power_utility(float(rest))
        if head == "pwl":
            knots = [tuple(float(x) for x in pair.split(",")) for pair in rest.split(";") if pair]
            return piecewise_linear_utility(knots)
    except (ValueError, DomainError) as exc:
        if isinstance(exc, SpecStringError):
            raise
        raise SpecStringError(f"bad utility spec {spec!r}: {exc}") from exc
    raise SpecStringError(f"unknown utility kind in spec {spec!r}")


def is_affine(phi: UtilityFn) -> bool:
    return phi.kind == "affine" or (phi.kind == "rescaled" and phi.params.get("base", "").startswith("affine"))


# ---------------------------------------------------------------------------
# Scalar mixture algebra
# ---------------------------------------------------------------------------

def subjective_mix(x: float, y: float, alpha: float, phi: UtilityFn) -> float:
    """The payoff whose utility is alpha*phi(x) + (1-alpha)*phi(y).

    Always lies between x and y, so it never leaves the domain.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"mixing weight must lie in [0, 1], got {alpha}")
    fx = phi(x)
    fy = phi(y)
    target = alpha * fx + (1.0 - alpha) * fy
    # The exact blend lies in [min, max]; clipping only removes float spill.
    target = min(max(target, min(fx, fy)), max(fx, fy))
    return phi.inverse(target)


def preference_average(t: float, x: float, phi: UtilityFn) -> float:
    """Equal-weight subjective mix of t and x."""
    return subjective_mix(t, x, 0.5, phi)


def preference_double(x: float, phi: UtilityFn) -> float:
    """The payoff z solving phi(z)/2 + phi(0)/2 = phi(x).

    Invariant under positive affine transformations of phi.  When
    2*phi(x) - phi(0) falls outside the image the overflow is reported,
    never clamped.
    """
    f0 = phi(0.0)
    target = 2.0 * phi(x) - f0
    tol = 1e-12 * (1.0 + abs(target))
    if not phi.image.contains(target, tol=tol):
        raise ImageOverflowError(
            f"doubling of {x!r} needs utility value {target!r} outside image {phi.image}"
        )
    return phi.inverse(target)


def subjective_add(x: float, y: float, phi: UtilityFn) -> float:
    """Utility-scale addition: shifted utilities add (shift = phi - phi(0)).

    Built as the doubling of the half mix, so
    subjective_add(x, y) == preference_double(subjective_mix(x, y, 1/2))
    holds exactly, and the closed form inv(phi(x) + phi(y) - phi(0)) holds
    to roundoff.
    """
    return preference_double(subjective_mix(x, y, 0.5, phi), phi)


# ---------------------------------------------------------------------------
# Lifted (point-wise) operations on two-stage variables
# ---------------------------------------------------------------------------

def _locate_overflow(mask: np.ndarray, v: TwoStageVariable):
    w, s = np.argwhere(mask)[0]
    return (v.state_ids[w], int(s))


def mix_variables(v: TwoStageVariable, u: TwoStageVariable, alpha: float, phi: UtilityFn) -> TwoStageVariable:
    """Point-wise subjective mix of two variables on the same space."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"mixing weight must lie in [0, 1], got {alpha}")
    same_space(v, u)
    fv = phi(v.payoffs)
    fu = phi(u.payoffs)
    target = alpha * fv + (1.0 - alpha) * fu
    target = np.minimum(np.maximum(target, np.minimum(fv, fu)), np.maximum(fv, fu))
    return v.with_payoffs(phi.inverse(target))


def add_variables(v: TwoStageVariable, u: TwoStageVariable, phi: UtilityFn) -> TwoStageVariable:
    """Point-wise utility-scale addition, doubling of the half mix.

    Overflow reports the offending (state, outcome).
    """
    half = mix_variables(v, u, 0.5, phi)
    f0 = phi(0.0)
    target = 2.0 * phi(half.payoffs) - f0
    tol = 1e-12 * (1.0 + float(np.max(np.abs(target))))
    inside = phi.image.contains_mask(target, tol=tol)
    if not np.all(inside):
        loc = _locate_overflow(~inside, v)
        raise ImageOverflowError(
            f"utility-scale addition leaves image {phi.image} at (state, outcome) = {loc}",
            location=loc,
        )
    return v.with_payoffs(phi.inverse(target))


def translate_variable(v: TwoStageVariable, m: float, phi: UtilityFn) -> TwoStageVariable:
    """Utility-scale addition of the constant m to every payoff."""
    const = v.with_payoffs(np.full_like(v.payoffs, float(m)))
    return add_variables(v, const, phi)
