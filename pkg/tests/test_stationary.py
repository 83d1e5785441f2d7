import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from urnlab.field import F_cyclic, F_symmetric, max_real_eigenvalue
from urnlab.stationary import (
    DOUBLE_ROOT_TOL,
    PhaseLabel,
    PolyParams,
    Stability,
    Variant,
    beta0,
    beta1,
    beta_asymmetric,
    classify_stationary,
    cyclic_center_stability,
    cyclic_stationary_search,
    enumerate_stationary_points,
    find_positive_roots,
    phase_symmetric,
    poly_eval,
    root_count,
    stationary_points_for,
    two_type_root,
    two_type_stationary_points,
)
from urnlab.urn import ModelSpec

SQRT8 = (math.sqrt(8) - 1) / 7


def quadratic_oracle(a):
    disc = math.sqrt(1 - 2 * a - 7 * a * a)
    return (1 - a - disc) / (2 * a), (1 - a + disc) / (2 * a)


def bisect_oracle(f, lo, hi, n=200):
    flo = f(lo)
    for _ in range(n):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo, flo = mid, f(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


def values(roots):
    return [r.value for r in roots]


# ---------------------------------------------------------------- polynomial


@given(st.floats(0.01, 10), st.floats(0.05, 10))
def test_unit_root(a, beta):
    assert poly_eval(PolyParams(a, beta), 1.0)[0] == 0.0


def test_poly_eval_derivative_and_domain():
    p = PolyParams(0.3, 2.5)
    v, d = poly_eval(p, 1.7)
    h = 1e-6
    fd = (poly_eval(p, 1.7 + h)[0] - poly_eval(p, 1.7 - h)[0]) / (2 * h)
    assert abs(d - fd) < 1e-8
    assert poly_eval(p, 1e-300)[0] == pytest.approx(-0.6)
    with pytest.raises(ValueError):
        poly_eval(p, 0.0)


def test_quadratic_root_residual():
    _, r_plus = quadratic_oracle(0.2)
    assert abs(poly_eval(PolyParams(0.2, 2.0), r_plus)[0]) < 1e-6
    assert abs(r_plus - 3.414214) < 1e-6


# ---------------------------------------------------------------- roots


def test_roots_a02():
    lo, hi = quadratic_oracle(0.2)
    np.testing.assert_allclose(values(find_positive_roots(PolyParams(0.2, 2.0))), [lo, 1.0, hi], atol=1e-12)
    np.testing.assert_allclose([lo, hi], [0.585786, 3.414214], atol=1e-6)


def test_roots_a026_reproduce_known_point():
    roots = values(find_positive_roots(PolyParams(0.26, 2.0)))
    lo, hi = quadratic_oracle(0.26)
    np.testing.assert_allclose(roots, [1.0, lo, hi], atol=1e-12)
    assert abs(1 / (hi + 2) - 0.27920) < 5e-6


def test_roots_a05():
    assert values(find_positive_roots(PolyParams(0.5, 2.0))) == [1.0]


@pytest.mark.parametrize("a, count", [(0.35, 3), (0.41, 3), (0.45, 1)])
def test_beta3_against_cubic_factor(a, count):
    cubic = np.roots([a, a - 1, a - 1, 2 * a])
    ref = sorted([1.0] + [z.real for z in cubic if abs(z.imag) < 1e-9 and z.real > 0])
    np.testing.assert_allclose(values(find_positive_roots(PolyParams(a, 3.0))), ref, atol=1e-8)
    assert root_count(a, 3.0) == count


def test_double_roots_at_boundaries():
    # beta = 2: a = 1/4 gives a double root at 1, a = (sqrt8 - 1)/7 a double root at sqrt2
    # P = (z - 1)^2 (z - 2) / 4 at a = 1/4
    roots = find_positive_roots(PolyParams(0.25, 2.0))
    assert [r.multiplicity for r in roots] == [2, 1]
    assert roots[0].value == 1.0 and abs(roots[1].value - 2.0) < 1e-12
    roots = find_positive_roots(PolyParams(SQRT8, 2.0))
    assert [r.multiplicity for r in roots] == [1, 2]
    assert abs(roots[1].value - math.sqrt(2)) < 1e-4


@given(st.floats(0.01, 3), st.floats(0.05, 12))
def test_root_certification(a, beta):
    params = PolyParams(a, beta)
    roots = find_positive_roots(params)
    assert sum(r.multiplicity for r in roots) in (1, 3)
    assert any(r.value == 1.0 for r in roots)
    for r in roots:
        tol = 1e-10 if r.multiplicity == 1 else DOUBLE_ROOT_TOL
        # large roots: a few ulps of the largest term
        scale = max(a * r.value ** (beta + 1), r.value**beta, (1 + a) * r.value, 2 * a)
        assert abs(poly_eval(params, r.value)[0]) <= max(tol, 16 * np.finfo(float).eps * scale)
        if r.value < 10:
            assert abs(poly_eval(params, r.value)[0]) < tol
    assert values(roots) == sorted(values(roots))


def test_supercritical_single_root(rng):
    for _ in range(20):
        a, beta = float(rng.uniform(1.0001, 10)), float(rng.uniform(0.1, 20))
        assert values(find_positive_roots(PolyParams(a, beta))) == [1.0]


def test_roots_monotone_in_beta():
    plus, minus = [], []
    for beta in (2.0, 3.0, 4.0, 5.0):
        r = values(find_positive_roots(PolyParams(0.2, beta)))
        assert len(r) == 3
        minus.append(r[0])
        plus.append(r[2])
    assert all(np.diff(plus) > 0) and all(np.diff(minus) < 0)


def test_root_scan_oracle():
    # count sign changes of P on a fine grid as an independent root count
    for a, beta in [(0.2, 2.0), (0.3, 2.5), (0.4, 3.5), (0.1, 1.5), (0.6, 2.0)]:
        z = np.linspace(1e-4, 40, 400_001)
        p = a * z ** (beta + 1) - z**beta + (1 + a) * z - 2 * a
        changes = int(np.sum(np.sign(p[1:]) != np.sign(p[:-1])))
        assert root_count(a, beta) == changes


# ---------------------------------------------------------------- beta0 / beta1


def test_beta1_anchors():
    assert abs(beta1(SQRT8) - 2.0) < 1e-4
    assert abs(beta1(0.4160306) - 3.0) < 1e-3


def test_beta1_bounds_and_monotone():
    b9, b5 = beta1(0.9), beta1(0.5)
    assert 1 < b9 < 28 and b9 > b5
    grid = np.linspace(0.05, 0.95, 19)
    vals = [beta1(a) for a in grid]
    assert all(np.diff(vals) > 0)
    assert all(1 < b < beta_asymmetric(a) for a, b in zip(grid, vals))


def test_beta1_matches_root_count_scan():
    a = 0.3
    b = beta1(a)
    assert root_count(a, b - 1e-6) == 1 and root_count(a, b + 1e-6) == 3


def test_beta0():
    b = beta0(0.5)
    assert 3 < b < 28
    assert abs(1.5 - ((1 - 2 / (b + 1)) * 2) ** (b - 1)) < 1e-9
    assert beta0(0.9) > 19
    for a in (0.1, 0.3, 0.7):
        b = beta0(a)
        assert abs((1 + a) - ((1 - 2 / (b + 1)) / a) ** (b - 1)) < 1e-9
        assert b > 2 / (1 - a) - 1
        # below beta0 the polynomial has only z = 1
        assert root_count(a, b * 0.999) == 1


def test_beta_ranges_rejected():
    for fn in (beta0, beta1, beta_asymmetric):
        with pytest.raises(ValueError):
            fn(1.0)


# ---------------------------------------------------------------- stability


def test_classify_examples():
    assert classify_stationary(0.2, 2.0, 3.414213562373095) is Stability.STABLE
    assert classify_stationary(0.2, 2.0, 1.0) is Stability.UNSTABLE
    assert classify_stationary(0.25, 2.0, 1.0) is Stability.MARGINAL
    with pytest.raises(ValueError):
        classify_stationary(0.2, 2.0, 2.0)


def test_enumerate_counts():
    pts = enumerate_stationary_points(0.5, 2.0)
    assert len(pts) == 1 and pts[0].stability is Stability.STABLE and pts[0].is_center

    pts = enumerate_stationary_points(0.2, 2.0)
    assert len(pts) == 7
    assert pts[0].is_center and pts[0].stability is Stability.UNSTABLE
    assert sum(p.stability is Stability.STABLE for p in pts) == 3
    assert all(p.stability is Stability.UNSTABLE for p in pts if p.r and abs(p.r - 0.585786) < 1e-5)

    pts = enumerate_stationary_points(0.26, 2.0)
    assert len(pts) == 7
    assert pts[0].stability is Stability.STABLE
    stable = [p for p in pts[1:] if p.stability is Stability.STABLE]
    assert len(stable) == 3 and all(abs(p.r - quadratic_oracle(0.26)[1]) < 1e-12 for p in stable)

    pts = enumerate_stationary_points(SQRT8, 2.0)
    assert len(pts) == 4 and all(p.stability is Stability.MARGINAL for p in pts[1:])


def test_enumerated_point_shape():
    for p in enumerate_stationary_points(0.2, 2.0):
        loc = p.location
        assert abs(loc.sum() - 1) < 1e-15
        if not p.is_center:
            others = np.delete(loc, p.axis)
            assert others[0] == others[1] == pytest.approx(1 / (p.r + 2), abs=1e-15)
            assert loc[p.axis] == pytest.approx(p.r / (p.r + 2), abs=1e-15)


@pytest.mark.parametrize("a, beta", [(0.2, 2.0), (0.26, 2.0), (0.3, 2.5), (0.1, 4.0), (0.4, 3.5), (0.5, 2.0), (2.0, 3.0)])
def test_points_are_zeros_and_verdicts_match_jacobian(a, beta):
    field = lambda x: F_symmetric(a, beta, x)  # noqa: E731
    for p in enumerate_stationary_points(a, beta):
        assert np.max(np.abs(F_symmetric(a, beta, p.location))) < 1e-8
        if p.stability is Stability.MARGINAL or p.location.min() < 1e-4:
            continue
        lam = max_real_eigenvalue(field, p.location)
        assert (lam < 0) == (p.stability is Stability.STABLE), (p.location, lam)


def test_center_flip_at_quarter():
    assert classify_stationary(0.25 - 1e-6, 2.0, 1.0) is Stability.UNSTABLE
    assert classify_stationary(0.25 + 1e-6, 2.0, 1.0) is Stability.STABLE


# ---------------------------------------------------------------- phases


@pytest.mark.parametrize(
    "a, beta, label",
    [
        (0.2, 2.0, PhaseLabel.ASYMMETRIC_ONLY),
        (0.26, 2.0, PhaseLabel.COEXISTENCE),
        (2.0, 10.0, PhaseLabel.SUPERCRITICAL_A),
        (1.0, 3.0, PhaseLabel.SUPERCRITICAL_A),
        (0.5, 2.0, PhaseLabel.SYMMETRIC_ONLY),
        (0.25, 2.0, PhaseLabel.MARGINAL),
    ],
)
def test_phase_examples(a, beta, label):
    assert phase_symmetric(a, beta).label is label


def test_phase_ordering_a03():
    b1, bu = beta1(0.3), 1.6 / 0.7
    seq = [phase_symmetric(0.3, b).label for b in (b1 - 0.1, 0.5 * (b1 + bu), bu + 0.1)]
    assert seq == [PhaseLabel.SYMMETRIC_ONLY, PhaseLabel.COEXISTENCE, PhaseLabel.ASYMMETRIC_ONLY]


def test_phase_agrees_with_stability():
    # coexistence: center stable and asymmetric stable points exist
    for a, beta in [(0.26, 2.0), (0.3, 2.25), (0.1, 1.2)]:
        ph = phase_symmetric(a, beta)
        pts = enumerate_stationary_points(a, beta)
        center_stable = pts[0].stability is Stability.STABLE
        off_stable = any(p.stability is Stability.STABLE for p in pts[1:])
        expect = {
            PhaseLabel.SYMMETRIC_ONLY: (True, False),
            PhaseLabel.COEXISTENCE: (True, True),
            PhaseLabel.ASYMMETRIC_ONLY: (False, True),
        }[ph.label]
        assert (center_stable, off_stable) == expect, (a, beta, ph.label)


# ---------------------------------------------------------------- two-type


def test_two_type_examples():
    r = two_type_root(0.2, 2.0)
    oracle = bisect_oracle(lambda z: 0.2 * z**3 - z**2 + z - 0.2, 1e-9, 0.9)
    assert abs(r - oracle) < 1e-12
    assert abs(r - (2 - math.sqrt(3))) < 1e-12
    assert abs(0.2 * r**3 - r**2 + r - 0.2) < 1e-10
    assert two_type_root(0.5, 2.0) is None
    for a in (0.1, 0.5, 0.9, 2.0):
        assert two_type_root(a, 1.0) is None


@given(st.floats(0.01, 3), st.floats(0.05, 15))
def test_two_type_criterion(a, beta):
    crit = (1 - a) / (1 + a) * beta
    if abs(crit - 1) < 1e-6:
        return
    r = two_type_root(a, beta)
    assert (r is not None) == (crit > 1)
    if r is not None:
        assert 0 < r < 1
        assert abs(a * r ** (beta + 1) - r**beta + r - a) < 1e-10


def test_two_type_roots_via_general_finder():
    roots = find_positive_roots(PolyParams(0.2, 2.0, Variant.TWO_TYPE_SYMMETRIC))
    np.testing.assert_allclose(values(roots), [2 - math.sqrt(3), 1.0], atol=1e-12)


def test_two_type_points():
    pts = two_type_stationary_points(0.2, 2.0)
    assert len(pts) == 3 and pts[0].stability is Stability.UNSTABLE
    pts = two_type_stationary_points(0.5, 2.0)
    assert len(pts) == 1 and pts[0].stability is Stability.STABLE


# ---------------------------------------------------------------- cyclic


def test_cyclic_center_examples():
    assert cyclic_center_stability(1.0, 3.9) is Stability.STABLE
    assert cyclic_center_stability(1.0, 4.1) is Stability.UNSTABLE
    assert cyclic_center_stability(1.0, 4.0) is Stability.MARGINAL
    assert cyclic_center_stability(2.0, 100.0) is Stability.STABLE
    assert cyclic_center_stability(0.5, 2.0) is Stability.MARGINAL


@pytest.mark.parametrize("a, beta", [(0.5, 1.5), (0.5, 2.5), (1.0, 3.0), (1.0, 5.0), (1.9, 40.0), (1.9, 80.0)])
def test_cyclic_center_matches_fd(a, beta):
    lam = max_real_eigenvalue(lambda x: F_cyclic(a, beta, x), np.full(3, 1 / 3))
    assert (lam < 0) == (cyclic_center_stability(a, beta) is Stability.STABLE)


def test_cyclic_search_a1_center_only():
    res = cyclic_stationary_search(1.0, 6.0)
    assert len(res) == 1 and res.points[0].is_center and not res.unrefined
    assert res.points[0].stability is Stability.UNSTABLE


def test_cyclic_search_a02_extra_triple():
    res = cyclic_stationary_search(0.2, 2.0)
    stable = [p for p in res.non_center() if p.stability is Stability.STABLE]
    assert len(stable) == 3
    # three-fold cyclic symmetry
    locs = sorted(tuple(np.round(np.roll(stable[0].location, k), 8)) for k in range(3))
    assert locs == sorted(tuple(np.round(p.location, 8)) for p in stable)
    for p in res:
        assert np.linalg.norm(F_cyclic(0.2, 2.0, p.location)) < 1e-10


def test_cyclic_search_a03():
    res = cyclic_stationary_search(0.3, 2.0)
    assert res.points[0].is_center and res.points[0].stability is Stability.UNSTABLE
    assert not [p for p in res.non_center() if p.stability is Stability.STABLE]


def test_stationary_points_for_dispatch():
    assert len(stationary_points_for(ModelSpec.symmetric(0.2, 2.0))) == 7
    assert len(stationary_points_for(ModelSpec.two_type(0.2, 2.0))) == 3
    pts = stationary_points_for(ModelSpec.symmetric(0.1, 2.0, d=4))
    assert len(pts) == 1 and pts[0].stability is Stability.UNSTABLE
    # -1 + 2 (1 - 0.2) / (1 + 3 * 0.2) = 0
    assert stationary_points_for(ModelSpec.symmetric(0.2, 2.0, d=4))[0].stability is Stability.MARGINAL
    pts = stationary_points_for(ModelSpec(np.eye(3) + 0.5, 2.0), grid_resolution=100)
    assert pts[0].is_center
    with pytest.raises(NotImplementedError):
        stationary_points_for(ModelSpec(np.eye(4) + 0.1, 2.0))
