"""Acceptance suite A1-A10.

Each criterion returns a :class:`CriterionResult` with the measured values
and a pass flag. The report text depends only on the inputs (no timings), so
two runs with the same seed produce identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .field import (
    F_cyclic,
    F_symmetric,
    cyclic_center_jacobian,
    eigenvalues_2x2,
    jacobian_reduced,
    lyapunov,
    max_real_eigenvalue,
)
from .montecarlo import Tolerances, noise_positivity_check, run_ensemble
from .stationary import (
    PolyParams,
    Stability,
    beta1,
    classify_stationary,
    cyclic_center_stability,
    cyclic_stationary_search,
    enumerate_stationary_points,
    find_positive_roots,
    root_count,
    two_type_root,
)
from .urn import ModelSpec

DEFAULT_SEED = 7
CENTER = np.full(3, 1.0 / 3.0)


@dataclass
class CriterionResult:
    id: str
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)

    def line(self):
        parts = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        return f"{self.id} {'PASS' if self.passed else 'FAIL'} {self.title}: {parts}"

    def to_dict(self):
        return {"id": self.id, "title": self.title, "passed": self.passed, "measured": self.measured}


def _short(v):
    if isinstance(v, float):
        return format(v, ".6g")
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


# ensembles are shared between A6, A7 and A8
_ENSEMBLES = {}


def ensemble(model, n_traj, steps, seed):
    key = (model, n_traj, steps, seed)
    if key not in _ENSEMBLES:
        _ENSEMBLES[key] = run_ensemble(model, n_traj, steps, seed, Tolerances())
    return _ENSEMBLES[key]


def clear_cache():
    _ENSEMBLES.clear()


# ---------------------------------------------------------------- analytic


def _quadratic_roots(a):
    disc = math.sqrt(1 - 2 * a - 7 * a * a)
    return sorted([(1 - a - disc) / (2 * a), 1.0, (1 - a + disc) / (2 * a)])


def _stable_asymmetric(a, beta):
    return [p for p in enumerate_stationary_points(a, beta) if p.stability is Stability.STABLE and not p.is_center]


def a1():
    roots = [r.value for r in find_positive_roots(PolyParams(0.2, 2.0))]
    expected = _quadratic_roots(0.2)
    root_err = max(abs(x - y) for x, y in zip(roots, expected)) if len(roots) == 3 else math.inf
    errs = {}
    for a, target in ((0.2, (0.1847, 0.1847, 0.6306)), (0.26, (0.2792, 0.2792, 0.4416))):
        pts = _stable_asymmetric(a, 2.0)
        errs[a] = min((float(np.max(np.abs(p.location - target))) for p in pts), default=math.inf)
    ok = root_err <= 1e-6 and errs[0.2] <= 5e-5 and errs[0.26] <= 5e-5
    return CriterionResult(
        "A1",
        "beta=2 closed forms",
        ok,
        {"roots": roots, "root_err": root_err, "point_err_a0.2": errs[0.2], "point_err_a0.26": errs[0.26]},
    )


def _center_flip(beta=2.0, lo=0.2, hi=0.3):
    # lo: center unstable, hi: center stable
    unstable = lambda a: classify_stationary(a, beta, 1.0) is Stability.UNSTABLE  # noqa: E731
    if not unstable(lo) or unstable(hi):
        return math.nan
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if unstable(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def a2():
    b_first = beta1((math.sqrt(8) - 1) / 7)
    b_second = beta1(0.4160306)
    flip = _center_flip()
    marginal = classify_stationary(0.25, 2.0, 1.0) is Stability.MARGINAL
    ok = abs(b_first - 2) <= 1e-4 and abs(b_second - 3) <= 1e-2 and abs(flip - 0.25) <= 1e-9 and marginal
    return CriterionResult(
        "A2",
        "phase anchors",
        ok,
        {"beta1(0.261203)": b_first, "beta1(0.4160306)": b_second, "center_flip_a": flip, "marginal_at_quarter": marginal},
    )


def cubic_factor_roots(a):
    """Positive real roots of ``a z^3 + (a-1) z^2 + (a-1) z + 2a``, plus ``z = 1``."""
    r = np.roots([a, a - 1, a - 1, 2 * a])
    pos = [float(z.real) for z in r if abs(z.imag) < 1e-9 and z.real > 0]
    return sorted(pos + [1.0])


def a3():
    counts, errs = [], []
    for a in (0.35, 0.41, 0.45):
        ours = [r.value for r in find_positive_roots(PolyParams(a, 3.0))]
        ref = cubic_factor_roots(a)
        counts.append(root_count(a, 3.0))
        errs.append(max(abs(x - y) for x, y in zip(ours, ref)) if len(ours) == len(ref) else math.inf)
    ok = counts == [3, 3, 1] and max(errs) <= 1e-8
    return CriterionResult("A3", "beta=3 cubic cross-check", ok, {"root_counts": counts, "max_err": max(errs)})


def _fd_boundary(a, lo, hi):
    # beta where the largest real part at the center changes sign
    lam = lambda b: max_real_eigenvalue(lambda x: F_cyclic(a, b, x), CENTER)  # noqa: E731
    f_lo = lam(lo)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if (lam(mid) > 0) == (f_lo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def a4():
    jac_err = eig_err = 0.0
    for beta in (2.0, 4.0, 6.0):
        J = jacobian_reduced(lambda x: F_cyclic(1.0, beta, x), CENTER)
        jac_err = max(jac_err, float(np.max(np.abs(J - cyclic_center_jacobian(beta)))))
        ev = eigenvalues_2x2(J)
        want = complex(beta / 4 - 1, math.sqrt(3) * beta / 4)
        eig_err = max(eig_err, abs(ev[0] - want), abs(ev[1] - want.conjugate()))
    exact = (
        cyclic_center_stability(1.0, 4.0) is Stability.MARGINAL
        and cyclic_center_stability(1.0, 4.0 - 1e-6) is Stability.STABLE
        and cyclic_center_stability(1.0, 4.0 + 1e-6) is Stability.UNSTABLE
        and 2.0 * (1.0 + 1.0) / (2.0 - 1.0) == 4.0
    )
    bnd_err = 0.0
    for a in (0.5, 1.0, 1.9):
        formula = 2 * (1 + a) / (2 - a)
        bnd_err = max(bnd_err, abs(_fd_boundary(a, 0.5 * formula, 2.0 * formula) - formula))
    ok = jac_err <= 1e-4 and eig_err <= 1e-6 and exact and bnd_err <= 1e-6
    return CriterionResult(
        "A4",
        "cyclic eigenvalues",
        ok,
        {"jacobian_err": jac_err, "eigenvalue_err": eig_err, "beta4_exact": exact, "boundary_err": bnd_err},
    )


def _interior_sample(rng, d, n, floor=0.02):
    out = []
    while len(out) < n:
        x = rng.dirichlet(np.full(d, 2.0))
        if x.min() >= floor:
            out.append(x)
    return np.array(out)


def lyapunov_identity_error(a, beta, d, n=100, seed=0, h=1e-6):
    """Largest ``|x_i dL/dx_i - F_i|`` over ``n`` random points, with a central-difference gradient."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for x in _interior_sample(rng, d, n):
        grad = np.empty(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            grad[i] = (lyapunov(a, beta, x + e) - lyapunov(a, beta, x - e)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(x * grad - F_symmetric(a, beta, x)))))
    return worst


def a5():
    worst = 0.0
    for d in (3, 4, 5):
        for a in (0.2, 0.5, 2.0):
            for beta in (0.5, 2.0, 5.0):
                worst = max(worst, lyapunov_identity_error(a, beta, d, seed=1000 * d + int(10 * a) + int(beta)))
    return CriterionResult("A5", "Lyapunov identity", worst <= 1e-8, {"max_err": worst})


# ---------------------------------------------------------------- ensembles


def a6(seed=DEFAULT_SEED):
    low = ensemble(ModelSpec.symmetric(0.2, 2.0), 20, 100_000, seed)
    mid = ensemble(ModelSpec.symmetric(0.5, 2.0), 20, 100_000, seed)
    coex = ensemble(ModelSpec.symmetric(0.26, 2.0), 100, 100_000, seed)
    ok_low = low.non_center_hits >= 18 and low.center_hits == 0
    ok_mid = mid.center_hits >= 19
    ok_coex = coex.center_hits >= 1 and coex.non_center_hits >= 1
    return CriterionResult(
        "A6",
        "symmetric ensembles",
        ok_low and ok_mid and ok_coex,
        {
            "a0.2_asym": low.non_center_hits,
            "a0.2_center": low.center_hits,
            "a0.2_undetermined": low.undetermined,
            "a0.5_center": mid.center_hits,
            "a0.26_center": coex.center_hits,
            "a0.26_asym": coex.non_center_hits,
            "parts": [ok_low, ok_mid, ok_coex],
        },
    )


def a7(seed=DEFAULT_SEED):
    conv = ensemble(ModelSpec.cyclic(1.0, 3.0), 20, 1_000_000, seed)
    cyc = ensemble(ModelSpec.cyclic(1.0, 6.0), 20, 1_000_000, seed)
    windings = [abs(c.winding) for c in cyc.classifications]
    ok_conv = conv.center_hits >= 12
    ok_cyc = cyc.cycling >= 18 and cyc.center_hits == 0
    return CriterionResult(
        "A7",
        "cyclic ensembles",
        ok_conv and ok_cyc,
        {
            "beta3_center": conv.center_hits,
            "beta6_cycling": cyc.cycling,
            "beta6_center": cyc.center_hits,
            "beta6_median_winding": float(np.median(windings)),
            "beta6_min_tail_radius": float(min(c.radius_min for c in cyc.classifications)),
            "parts": [ok_conv, ok_cyc],
        },
    )


def a8(seed=DEFAULT_SEED):
    params = ((0.2, 20), (0.5, 20), (0.26, 100))
    unstable_hits = 0
    min_noise = math.inf
    for a, n in params:
        summary = ensemble(ModelSpec.symmetric(a, 2.0), n, 100_000, seed)
        unstable_hits += summary.unstable_hits
        model = ModelSpec.symmetric(a, 2.0)
        for p in enumerate_stationary_points(a, 2.0):
            if p.stability is Stability.UNSTABLE:
                min_noise = min(min_noise, noise_positivity_check(model, p.location, 360))
    ok = unstable_hits == 0 and min_noise > 1e-3
    return CriterionResult("A8", "no convergence to unstable points", ok, {"unstable_hits": unstable_hits, "min_noise": min_noise})


def a9():
    def extra(a):
        return sum(1 for p in cyclic_stationary_search(a, 2.0).non_center() if p.stability is Stability.STABLE)

    lo, hi = extra(0.24), extra(0.26)
    return CriterionResult("A9", "cyclic extra stable points", lo > 0 and hi == 0, {"a0.24_stable": lo, "a0.26_stable": hi})


A10_A_GRID = np.linspace(0.05, 1.5, 20)
A10_BETA_GRID = np.linspace(0.5, 8.0, 20)


def a10():
    mismatches = 0
    worst = 0.0
    for a in A10_A_GRID:
        for beta in A10_BETA_GRID:
            r = two_type_root(float(a), float(beta))
            expect = (1 - a) / (1 + a) * beta > 1
            if (r is not None) != expect or (r is not None and not 0 < r < 1):
                mismatches += 1
            if r is not None:
                worst = max(worst, abs(a * r ** (beta + 1) - r**beta + r - a))
    return CriterionResult("A10", "two-type root criterion", mismatches == 0 and worst < 1e-10, {"mismatches": mismatches, "max_residual": worst})


ANALYTIC = ("A1", "A2", "A3", "A4", "A5", "A9", "A10")
CRITERIA = {
    "A1": a1, "A2": a2, "A3": a3, "A4": a4, "A5": a5,
    "A6": a6, "A7": a7, "A8": a8, "A9": a9, "A10": a10,
}
SEEDED = ("A6", "A7", "A8")


@dataclass
class AcceptanceReport:
    results: list
    seed: int
    quick: bool

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def text(self):
        head = f"urnlab acceptance (seed={self.seed}, {'quick' if self.quick else 'full'})"
        lines = [head] + [r.line() for r in self.results]
        n_pass = sum(r.passed for r in self.results)
        lines.append(f"{n_pass}/{len(self.results)} passed")
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {"seed": self.seed, "quick": self.quick, "passed": self.passed, "results": [r.to_dict() for r in self.results]}


def run_criterion(cid, seed=DEFAULT_SEED):
    fn = CRITERIA[cid]
    return fn(seed) if cid in SEEDED else fn()


def run_acceptance(quick=False, seed=DEFAULT_SEED):
    ids = ANALYTIC if quick else tuple(CRITERIA)
    return AcceptanceReport([run_criterion(cid, seed) for cid in ids], seed, quick)
