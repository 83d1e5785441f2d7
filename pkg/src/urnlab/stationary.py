"""Stationary points of the drift, their stability, and phase labels.

For the symmetric three-colour model every stationary point has two equal
coordinates, ``(1, 1, r) / (r + 2)`` up to permutation, with ``r`` a positive
root of

    P(z) = a z^(beta+1) - z^beta + (1 + a) z - 2a.

The two-colour analogue is ``a z^(beta+1) - z^beta + z - a``. Both share the
second derivative ``beta z^(beta-2) (a (beta+1) z - (beta-1))``: concave below
``z* = (beta-1) / (a (beta+1))`` and convex above, so the positive roots can
be bracketed exactly from the two critical points of ``P``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .field import (
    F_cyclic,
    F_general,
    eigenvalues_2x2,
    from_chart,
    jacobian_reduced,
    symmetric_center_eigenvalue,
)
from .urn import ModelSpec
from .validation import check_int, check_positive

ROOT_RESIDUAL_TOL = 1e-10
DOUBLE_ROOT_TOL = 1e-9
# large roots cannot meet an absolute residual; allow this many ulps of the
# largest term instead
_RESIDUAL_ULPS = 16
MARGINAL_TOL = 1e-9
_ONE_SNAP = 1e-6


class RootCertificationError(RuntimeError):
    """The bracketing argument could not certify the number of roots."""


class Variant(enum.Enum):
    THREE_TYPE_SYMMETRIC = "three-type-symmetric"
    TWO_TYPE_SYMMETRIC = "two-type-symmetric"


class Stability(enum.Enum):
    STABLE = "linearly_stable"
    UNSTABLE = "linearly_unstable"
    MARGINAL = "marginal"


class PhaseLabel(enum.Enum):
    SYMMETRIC_ONLY = "symmetric_only"
    COEXISTENCE = "coexistence"
    ASYMMETRIC_ONLY = "asymmetric_only"
    SUPERCRITICAL_A = "supercritical_a"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class PolyParams:
    a: float
    beta: float
    variant: Variant = Variant.THREE_TYPE_SYMMETRIC

    def __post_init__(self):
        object.__setattr__(self, "a", check_positive("a", self.a))
        object.__setattr__(self, "beta", check_positive("beta", self.beta))
        object.__setattr__(self, "variant", Variant(self.variant))

    @property
    def linear(self):
        # coefficients (k, m) of the trailing terms k z - m
        if self.variant is Variant.THREE_TYPE_SYMMETRIC:
            return 1.0 + self.a, 2.0 * self.a
        return 1.0, self.a


@dataclass(frozen=True)
class Root:
    value: float
    multiplicity: int = 1


@dataclass(eq=False)
class StationaryPoint:
    """A zero of the drift.

    ``r`` is the generating root and ``axis`` the coordinate that carries
    ``r / (r + 2)``; both are ``None`` for points found numerically and
    ``axis`` is ``None`` for the center.
    """

    location: np.ndarray
    stability: Stability
    r: float | None = None
    axis: int | None = None
    multiplicity: int = 1
    max_real_eigenvalue: float | None = None

    @property
    def is_center(self):
        d = self.location.shape[0]
        return bool(np.allclose(self.location, 1.0 / d, atol=1e-12, rtol=0))

    def to_dict(self):
        return {
            "location": [float(v) for v in self.location],
            "is_center": self.is_center,
            "r": self.r,
            "axis": self.axis,
            "stability": self.stability.value,
            "multiplicity": self.multiplicity,
            "max_real_eigenvalue": self.max_real_eigenvalue,
        }


@dataclass(frozen=True)
class SymmetricPhase:
    """Phase of the symmetric three-colour model at ``(a, beta)``.

    ``beta1`` and ``beta_asymmetric = (1 + 2a) / (1 - a)`` are the two
    boundaries in ``beta``; both are ``None`` when ``a >= 1``.
    """

    label: PhaseLabel
    a: float
    beta: float
    beta1: float | None = None
    beta_asymmetric: float | None = None

    @property
    def marginal(self):
        return self.label is PhaseLabel.MARGINAL

    def to_dict(self):
        return {
            "label": self.label.value,
            "a": self.a,
            "beta": self.beta,
            "beta1": self.beta1,
            "beta_asymmetric": self.beta_asymmetric,
        }


# ---------------------------------------------------------------- polynomial


def poly_eval(params: PolyParams, z):
    """Value and derivative of the characteristic polynomial at ``z > 0``."""
    z = float(z)
    if z <= 0:
        raise ValueError("the characteristic polynomial is evaluated at z > 0")
    a, beta = params.a, params.beta
    k, m = params.linear
    zb1 = z ** (beta - 1.0)
    zb = zb1 * z
    # grouped so that z = 1 gives exactly 0
    if params.variant is Variant.THREE_TYPE_SYMMETRIC:
        value = a * (zb * z + z - 2.0) + (z - zb)
    else:
        value = a * (zb * z - 1.0) + (z - zb)
    deriv = a * (beta + 1.0) * zb - beta * zb1 + k
    return value, deriv


def _value(params, z):
    if z == 0.0:
        return -params.linear[1]
    v, _ = poly_eval(params, z)
    if not math.isfinite(v):
        raise RootCertificationError(f"polynomial overflowed at z={z} (a={params.a}, beta={params.beta})")
    return v


def _deriv(params, z):
    _, d = poly_eval(params, z)
    if not math.isfinite(d):
        raise RootCertificationError(f"derivative overflowed at z={z} (a={params.a}, beta={params.beta})")
    return d


def _bisect(f, lo, hi, f_lo=None, max_iter=400):
    """Bisect a sign change of ``f`` on ``[lo, hi]`` down to adjacent floats."""
    if f_lo is None:
        f_lo = f(lo)
    f_hi = f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise RootCertificationError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _grow_until(pred, start):
    z = start
    for _ in range(2000):
        if pred(z):
            return z
        z *= 2.0
    raise RootCertificationError("could not find an upper bracket")


def _simple_root(params, lo, hi):
    # exactly one root in [lo, hi]; z = 1 is always a root, so return it exactly
    if lo <= 1.0 <= hi:
        return 1.0
    return _bisect(lambda z: _value(params, z), lo, hi)


def _critical_points(params):
    """The local max ``c1`` and local min ``c2`` of ``P``, or ``None`` if ``P`` is monotone on (0, inf)."""
    a, beta = params.a, params.beta
    k, _ = params.linear
    if beta <= 1.0:
        return None
    z_star = (beta - 1.0) / (a * (beta + 1.0))
    # P'(z*) = k - z*^(beta-1) is the minimum slope; use the evaluated
    # derivative so the test agrees in sign with the bracketing below
    dp = lambda z: _deriv(params, z)  # noqa: E731
    if dp(z_star) >= 0.0:
        return None
    # P' falls from k > 0 at 0+ to its minimum at z*, then rises to +inf
    c1 = _bisect(dp, 0.0, z_star, f_lo=k)
    hi = _grow_until(lambda z: dp(z) > 0, 2.0 * max(z_star, 1.0))
    c2 = _bisect(dp, z_star, hi)
    return c1, c2


def _upper(params, start):
    return _grow_until(lambda z: _value(params, z) > 0 and _deriv(params, z) > 0, max(2.0 * start, 2.0))


def find_positive_roots(params: PolyParams):
    """Positive roots of the characteristic polynomial, with multiplicities.

    Three-type: ``z = 1`` plus zero or two further roots (a double root is
    listed once with multiplicity 2, a triple root once with multiplicity 3). Two-type: roots in ``(0, 1]``; the
    roots above 1 are the reciprocals of those below.

    Raises
    ------
    RootCertificationError
        If the sign structure needed for the count cannot be established.
    """
    crit = _critical_points(params)
    roots = []
    if crit is None:
        hi = _upper(params, 1.0)
        roots.append(Root(_simple_root(params, 0.0, hi)))
    else:
        c1, c2 = crit
        p1, p2 = _value(params, c1), _value(params, c2)
        double1 = abs(p1) <= DOUBLE_ROOT_TOL
        double2 = abs(p2) <= DOUBLE_ROOT_TOL
        if double1 and double2:
            # c1 and c2 straddle a (near-)triple root
            roots.append(Root(_snap_one(0.5 * (c1 + c2)), 3))
        elif not double1 and not double2 and p1 < 0:
            roots.append(Root(_simple_root(params, c2, _upper(params, c2))))
        elif not double1 and not double2 and p2 > 0:
            roots.append(Root(_simple_root(params, 0.0, c1)))
        else:
            if double1:
                roots.append(Root(_snap_one(c1), 2))
            else:
                roots.append(Root(_simple_root(params, 0.0, c1)))
                if not double2:
                    roots.append(Root(_simple_root(params, c1, c2)))
            if double2:
                roots.append(Root(_snap_one(c2), 2))
            else:
                roots.append(Root(_simple_root(params, c2, _upper(params, c2))))
    for root in roots:
        tol = residual_tolerance(params, root.value, ROOT_RESIDUAL_TOL if root.multiplicity == 1 else DOUBLE_ROOT_TOL)
        residual = abs(_value(params, root.value))
        if residual > tol:
            raise RootCertificationError(f"root {root.value} has residual {residual:.3g} > {tol:g}")
    if params.variant is Variant.TWO_TYPE_SYMMETRIC:
        roots = [r for r in roots if r.value <= 1.0]
    roots.sort(key=lambda r: r.value)
    return roots


def residual_tolerance(params, z, base=ROOT_RESIDUAL_TOL):
    """``max(base, 16 ulp x largest term)``: the accuracy the evaluation can deliver at ``z``."""
    k, m = params.linear
    scale = max(params.a * z ** (params.beta + 1.0), z**params.beta, k * z, m)
    return max(base, _RESIDUAL_ULPS * np.finfo(float).eps * scale)


def _snap_one(c):
    return 1.0 if abs(c - 1.0) < _ONE_SNAP else c


def root_count(a, beta):
    """Number of positive roots (with multiplicity) of the three-type polynomial."""
    return sum(r.multiplicity for r in find_positive_roots(PolyParams(a, beta)))


# ---------------------------------------------------------------- boundaries


def beta_asymmetric(a):
    """``(1 + 2a) / (1 - a)``, above which the center is linearly unstable."""
    a = check_positive("a", a)
    if a >= 1:
        raise ValueError("the asymmetric boundary exists only for a < 1")
    return (1.0 + 2.0 * a) / (1.0 - a)


def _beta0_residual(a, beta):
    # log form of ((1 - 2/(beta+1)) / a)^(beta-1) - (1 + a)
    return (beta - 1.0) * math.log((beta - 1.0) / ((beta + 1.0) * a)) - math.log1p(a)


def beta0(a):
    """Largest ``beta`` below which ``P`` is increasing on the whole half line.

    Solves ``1 + a = ((1 - 2/(beta+1)) / a)^(beta-1)``. The solution exceeds
    ``2/(1-a) - 1``, where the base first exceeds 1.
    """
    a = check_positive("a", a)
    if a >= 1:
        raise ValueError("beta0 is defined for 0 < a < 1")
    lo = 2.0 / (1.0 - a) - 1.0
    hi = _grow_until(lambda b: _beta0_residual(a, b) > 0, lo + 1.0)
    return _bisect(lambda b: _beta0_residual(a, b), lo, hi)


def beta1(a, tol=1e-10):
    """The ``beta`` at which two further positive roots appear.

    Bisection on "three roots counting multiplicity" over
    ``[beta0(a), (1 + 2a) / (1 - a)]``.
    """
    a = check_positive("a", a)
    if a >= 1:
        raise ValueError("beta1 is defined for 0 < a < 1")
    return _beta1(a, float(tol))


@lru_cache(maxsize=4096)
def _beta1(a, tol):
    lo, hi = beta0(a), beta_asymmetric(a)
    three = lambda b: root_count(a, b) == 3  # noqa: E731
    if three(lo) or not three(hi):
        raise RootCertificationError(f"root count is not monotone on [{lo}, {hi}] for a={a}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if three(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- stability


def classify_stationary(a, beta, r, tol=MARGINAL_TOL, root_tol=1e-6):
    """Linear stability of the stationary point generated by root ``r``.

    Stable when ``P'(r) > 0`` and ``(r^beta + 2)/(r + 2) > beta (1-a)/(2a+1)``;
    unstable when either is reversed; marginal when either side is within
    ``tol`` of equality.
    """
    params = PolyParams(a, beta)
    r = check_positive("r", r)
    value, deriv = poly_eval(params, r)
    scale = 1.0 + a * r ** (beta + 1.0) + r**beta + (1.0 + a) * r + 2.0 * a
    if abs(value) > root_tol * scale:
        raise ValueError(f"r={r} is not a root (P(r)={value:.3g})")
    transverse = (r**beta + 2.0) / (r + 2.0) - beta * (1.0 - a) / (2.0 * a + 1.0)
    if abs(deriv) <= tol or abs(transverse) <= tol:
        return Stability.MARGINAL
    if deriv > 0 and transverse > 0:
        return Stability.STABLE
    return Stability.UNSTABLE


def symmetric_point(r, axis):
    loc = np.full(3, 1.0 / (r + 2.0))
    loc[axis] = r / (r + 2.0)
    return loc


def enumerate_stationary_points(a, beta):
    """All stationary points of the symmetric three-colour drift.

    The center comes first, then three permutations per root ``r != 1`` in
    increasing order of ``r``.
    """
    roots = find_positive_roots(PolyParams(a, beta))
    points = []
    for root in roots:
        r = root.value
        if root.multiplicity > 1:
            stability = Stability.MARGINAL
        else:
            stability = classify_stationary(a, beta, r)
        if r == 1.0:
            points.insert(0, StationaryPoint(np.full(3, 1.0 / 3.0), stability, r=1.0, multiplicity=root.multiplicity))
            continue
        for axis in range(3):
            points.append(StationaryPoint(symmetric_point(r, axis), stability, r=r, axis=axis, multiplicity=root.multiplicity))
    return points


def phase_symmetric(a, beta, tol=MARGINAL_TOL):
    """Phase label of the symmetric three-colour model."""
    a = check_positive("a", a)
    beta = check_positive("beta", beta)
    if a >= 1:
        return SymmetricPhase(PhaseLabel.SUPERCRITICAL_A, a, beta)
    b1, bu = beta1(a), beta_asymmetric(a)
    if abs(beta - b1) <= tol or abs(beta - bu) <= tol:
        label = PhaseLabel.MARGINAL
    elif beta < b1:
        label = PhaseLabel.SYMMETRIC_ONLY
    elif beta < bu:
        label = PhaseLabel.COEXISTENCE
    else:
        label = PhaseLabel.ASYMMETRIC_ONLY
    return SymmetricPhase(label, a, beta, beta1=b1, beta_asymmetric=bu)


def two_type_root(a, beta):
    """Root of ``a z^(beta+1) - z^beta + z - a`` in ``(0, 1)``, or ``None``.

    When it exists the two-colour proportions converge to
    ``(1, r) / (1 + r)`` or its mirror image. The decision is made on signs
    alone: a root below 1 exists iff the local maximum of the polynomial
    lies below 1 and is positive.
    """
    params = PolyParams(a, beta, Variant.TWO_TYPE_SYMMETRIC)
    crit = _critical_points(params)
    if crit is None:
        return None
    c1 = crit[0]
    if c1 >= 1.0 or not _value(params, c1) > 0.0:
        return None
    r = _bisect(lambda z: _value(params, z), 0.0, c1)
    if abs(_value(params, r)) > residual_tolerance(params, r):
        raise RootCertificationError(f"two-type root {r} failed the residual check")
    return r


def _center_from_eigenvalue(a, beta, d, tol=MARGINAL_TOL):
    lam = symmetric_center_eigenvalue(a, beta, d)
    if abs(lam) <= tol:
        stability = Stability.MARGINAL
    else:
        stability = Stability.STABLE if lam < 0 else Stability.UNSTABLE
    return StationaryPoint(np.full(d, 1.0 / d), stability, r=1.0, max_real_eigenvalue=lam)


def two_type_stationary_points(a, beta):
    r = two_type_root(a, beta)
    center = _center_from_eigenvalue(a, beta, 2)
    if r is None:
        return [center]
    lo, hi = 1.0 / (1.0 + r), r / (1.0 + r)
    return [
        center,
        StationaryPoint(np.array([lo, hi]), Stability.STABLE, r=r, axis=1),
        StationaryPoint(np.array([hi, lo]), Stability.STABLE, r=r, axis=0),
    ]


def cyclic_center_stability(a, beta, tol=MARGINAL_TOL):
    """Linear stability of the center for the cyclic matrix with weight ``a``.

    Stable for ``a >= 2`` or ``beta < 2(1+a)/(2-a)``, unstable above that.
    """
    a = check_positive("a", a)
    beta = check_positive("beta", beta)
    if a >= 2:
        return Stability.STABLE
    threshold = 2.0 * (1.0 + a) / (2.0 - a)
    if abs(beta - threshold) <= tol:
        return Stability.MARGINAL
    return Stability.STABLE if beta < threshold else Stability.UNSTABLE


# ---------------------------------------------------------------- grid search


@dataclass
class SearchResult:
    """Stationary points found by :func:`grid_stationary_search`.

    ``unrefined`` holds grid candidates on which Newton refinement failed;
    they are reported, not guessed at.
    """

    points: list = field(default_factory=list)
    unrefined: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    @property
    def stable(self):
        return [p for p in self.points if p.stability is Stability.STABLE]

    def non_center(self):
        return [p for p in self.points if not p.is_center]


def _simplex_grid(resolution):
    s = (np.arange(resolution) + 0.5) / resolution
    y1, y2 = np.meshgrid(s, s, indexing="ij")
    inside = (1.0 - y1 - y2) > 0.5 / resolution
    return y1, y2, inside


def _local_minima(values):
    padded = np.pad(values, 1, constant_values=np.inf)
    n1, n2 = values.shape
    is_min = np.isfinite(values)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            is_min &= values <= padded[1 + di : 1 + di + n1, 1 + dj : 1 + dj + n2]
    return np.argwhere(is_min)


def _newton(F, y, max_iter=60, tol=1e-13):
    for _ in range(max_iter):
        x = from_chart(y)
        if np.min(x) <= 4e-6:
            return None
        g = F(x)[:2]
        if np.max(np.abs(g)) < tol:
            return y
        J = jacobian_reduced(F, x)
        try:
            delta = np.linalg.solve(J, g)
        except np.linalg.LinAlgError:
            return None
        # damp steps that would leave the simplex
        t = 1.0
        while t > 1e-4:
            y_new = y - t * delta
            if np.min(from_chart(y_new)) > 4e-6:
                break
            t *= 0.5
        else:
            return None
        y = y_new
    x = from_chart(y)
    return y if np.max(np.abs(F(x)[:2])) < tol * 10 else None


def grid_stationary_search(field_fn, resolution=400, residual_tol=1e-10, candidate_tol=0.05, dedupe_tol=1e-7, tol=MARGINAL_TOL):
    """Locate zeros of a three-colour drift by grid scan plus Newton refinement.

    ``|F|`` is evaluated on a ``resolution x resolution`` grid over the open
    simplex; grid-local minima below ``candidate_tol`` are refined by damped
    Newton iteration in chart coordinates. Stability comes from the real
    parts of the finite-difference Jacobian eigenvalues.
    """
    resolution = check_int("resolution", resolution, minimum=8)
    y1, y2, inside = _simplex_grid(resolution)
    grid = from_chart(np.stack([y1, y2], axis=-1))
    grid[~inside] = 1.0 / 3.0
    norms = np.linalg.norm(field_fn(grid), axis=-1)
    norms[~inside] = np.inf
    result = SearchResult()
    found = []
    for i, j in _local_minima(norms):
        if norms[i, j] > candidate_tol:
            continue
        start = np.array([y1[i, j], y2[i, j]])
        y = _newton(field_fn, start)
        if y is None:
            # near-misses of size comparable to the grid spacing are worth reporting
            if norms[i, j] < 2.0 / resolution:
                result.unrefined.append({"location": [float(v) for v in from_chart(start)], "residual": float(norms[i, j])})
            continue
        x = from_chart(y)
        if np.linalg.norm(field_fn(x)) >= residual_tol:
            result.unrefined.append({"location": [float(v) for v in x], "residual": float(np.linalg.norm(field_fn(x)))})
            continue
        if any(np.max(np.abs(x - f)) < dedupe_tol for f in found):
            continue
        found.append(x)
        lam = max(ev.real for ev in eigenvalues_2x2(jacobian_reduced(field_fn, x)))
        if abs(lam) <= tol:
            stability = Stability.MARGINAL
        else:
            stability = Stability.STABLE if lam < 0 else Stability.UNSTABLE
        result.points.append(StationaryPoint(x, stability, max_real_eigenvalue=float(lam)))
    result.points.sort(key=lambda p: (not p.is_center, tuple(np.round(p.location, 12))))
    return result


def cyclic_stationary_search(a, beta, grid_resolution=400):
    """Grid search for stationary points of the cyclic drift with weight ``a``."""
    a = check_positive("a", a)
    beta = check_positive("beta", beta)
    return grid_stationary_search(lambda x: F_cyclic(a, beta, x), resolution=grid_resolution)


def stationary_points_for(model: ModelSpec, grid_resolution=400):
    """Known stationary points of ``model``, used to label trajectory limits.

    Symmetric d = 3 points are exact; for symmetric d > 3 only the center is
    known. Cyclic and general three-colour models use the grid search.
    """
    if model.kind == "symmetric" and model.d == 3:
        return enumerate_stationary_points(model.a, model.beta)
    if model.kind == "two-type":
        return two_type_stationary_points(model.a, model.beta)
    if model.kind == "symmetric":
        return [_center_from_eigenvalue(model.a, model.beta, model.d)]
    if model.d == 3:
        if model.kind == "cyclic":
            return cyclic_stationary_search(model.a, model.beta, grid_resolution).points
        return grid_stationary_search(lambda x: F_general(model, x), resolution=grid_resolution).points
    raise NotImplementedError("stationary points are only available for d = 3 or the symmetric family")
