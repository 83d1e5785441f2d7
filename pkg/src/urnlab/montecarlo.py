"""Trajectory ensembles and classification of their limit behaviour.

Each trajectory ends up as a point limit (its tail sits within ``point_tol``
of a known stationary point), as cycling (it winds around the center while
staying away from it), or as undetermined.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .stationary import Stability, StationaryPoint, stationary_points_for
from .urn import DEFAULT_THINNING, ModelSpec, TrajectoryRecord, simulate
from .validation import check_int, check_positive, check_simplex_point

THREADS_ENV = "URNLAB_THREADS"


@dataclass(frozen=True)
class Tolerances:
    point_tol: float = 0.02
    winding_min: float = 3.0
    radius_min: float = 0.05
    tail_fraction: float = 0.1
    min_tail: int = 100

    def __post_init__(self):
        check_positive("point_tol", self.point_tol)
        check_positive("winding_min", self.winding_min)
        check_positive("radius_min", self.radius_min)
        if not 0 < self.tail_fraction <= 1:
            raise ValueError(f"tail_fraction must lie in (0, 1], got {self.tail_fraction}")
        check_int("min_tail", self.min_tail, minimum=1)

    def to_dict(self):
        return asdict(self)


class Verdict(enum.Enum):
    POINT_LIMIT = "point_limit"
    CYCLING = "cycling"
    UNDETERMINED = "undetermined"


@dataclass
class LimitClassification:
    """Verdict for one trajectory plus the statistics it was based on.

    ``distance`` is the largest tail distance to the matched point and is set
    only for point limits. ``winding`` counts signed turns about the center
    over the whole record; the radius statistics cover the tail window.
    """

    verdict: Verdict
    point: StationaryPoint | None = None
    point_index: int | None = None
    distance: float | None = None
    winding: float = 0.0
    radius_min: float = math.nan
    radius_max: float = math.nan
    tail_oscillation: float = math.nan
    tail_mean: np.ndarray | None = None

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "point_index": self.point_index,
            "point": None if self.point is None else [float(v) for v in self.point.location],
            "point_stability": None if self.point is None else self.point.stability.value,
            "distance": self.distance,
            "winding": self.winding,
            "radius_min": self.radius_min,
            "radius_max": self.radius_max,
            "tail_oscillation": self.tail_oscillation,
            "tail_mean": None if self.tail_mean is None else [float(v) for v in self.tail_mean],
        }


def _as_points(points):
    out = []
    for p in points:
        if isinstance(p, StationaryPoint):
            out.append(p)
        else:
            out.append(StationaryPoint(np.asarray(p, dtype=float), Stability.MARGINAL))
    return out


def _tail_length(n, tol: Tolerances):
    return max(int(math.ceil(tol.tail_fraction * n)), 1)


def winding_number(points):
    """Signed number of turns of ``x - center`` in the ``(x1, x2)`` chart.

    Assumes consecutive samples are less than half a turn apart.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError("winding is measured for three-colour trajectories")
    y = points[:, :2] - 1.0 / 3.0
    theta = np.unwrap(np.arctan2(y[:, 1], y[:, 0]))
    return float((theta[-1] - theta[0]) / (2.0 * np.pi))


def classify_limit(traj, points, tolerances: Tolerances | None = None) -> LimitClassification:
    """Classify the limit behaviour of one trajectory.

    Parameters
    ----------
    traj : TrajectoryRecord or array_like
        Recorded proportions, shape ``(samples, d)``.
    points : list of StationaryPoint or array_like
        Candidate limits.
    tolerances : Tolerances, optional

    Returns
    -------
    LimitClassification

    Raises
    ------
    ValueError
        If the tail window has fewer than ``min_tail`` samples, or the tail has
        settled but there are no stationary points to attribute it to.
    """
    tol = tolerances or Tolerances()
    xs = traj.points if isinstance(traj, TrajectoryRecord) else np.asarray(traj, dtype=float)
    if xs.ndim != 2:
        raise ValueError("trajectory must be a (samples, d) array")
    n, d = xs.shape
    m = _tail_length(n, tol)
    if m < tol.min_tail:
        raise ValueError(f"tail window has {m} samples, need at least {tol.min_tail}")
    tail = xs[n - m :]
    mean = tail.mean(axis=0)
    oscillation = float(np.max(np.linalg.norm(tail - mean, axis=1)))
    center = np.full(d, 1.0 / d)
    radii = np.linalg.norm(tail - center, axis=1)
    out = LimitClassification(
        Verdict.UNDETERMINED,
        radius_min=float(radii.min()),
        radius_max=float(radii.max()),
        tail_oscillation=oscillation,
        tail_mean=mean,
    )

    cands = _as_points(points)
    if cands:
        worst = [float(np.max(np.linalg.norm(tail - p.location, axis=1))) for p in cands]
        best = int(np.argmin(worst))
        if worst[best] < tol.point_tol:
            out.verdict = Verdict.POINT_LIMIT
            out.point, out.point_index, out.distance = cands[best], best, worst[best]
            return out
    elif oscillation < tol.point_tol:
        raise ValueError("trajectory settled but the stationary-point list is empty")

    if d == 3:
        out.winding = winding_number(xs)
        if abs(out.winding) >= tol.winding_min and out.radius_min > tol.radius_min:
            out.verdict = Verdict.CYCLING
    return out


@dataclass
class EnsembleSummary:
    """Aggregated verdicts of an ensemble, in trajectory-index order."""

    model: ModelSpec
    n_traj: int
    steps: int
    base_seed: int
    seeds: list
    points: list
    point_hits: list
    cycling: int
    undetermined: int
    tolerances: Tolerances
    thinning: int = DEFAULT_THINNING
    classifications: list = field(default_factory=list)
    records: list | None = None

    def __post_init__(self):
        if sum(self.point_hits) + self.cycling + self.undetermined != self.n_traj:
            raise ValueError("verdict counts do not add up to the trajectory count")

    @property
    def point_limits(self):
        return sum(self.point_hits)

    def hits_where(self, pred):
        return sum(h for p, h in zip(self.points, self.point_hits) if pred(p))

    @property
    def center_hits(self):
        return self.hits_where(lambda p: p.is_center)

    @property
    def non_center_hits(self):
        return self.hits_where(lambda p: not p.is_center)

    @property
    def unstable_hits(self):
        return self.hits_where(lambda p: p.stability is Stability.UNSTABLE)

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "n_traj": self.n_traj,
            "steps": self.steps,
            "thinning": self.thinning,
            "base_seed": self.base_seed,
            "seeds": list(self.seeds),
            "tolerances": self.tolerances.to_dict(),
            "points": [
                {**p.to_dict(), "hits": h} for p, h in zip(self.points, self.point_hits)
            ],
            "point_limits": self.point_limits,
            "center_hits": self.center_hits,
            "non_center_hits": self.non_center_hits,
            "cycling": self.cycling,
            "undetermined": self.undetermined,
            "trajectories": [
                {"index": i, "seed": s, **c.to_dict()}
                for i, (s, c) in enumerate(zip(self.seeds, self.classifications))
            ],
        }


def resolve_threads(threads=None):
    """Worker count: explicit value, else ``URNLAB_THREADS``, else the CPU count (0 means auto)."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    threads = check_int("threads", threads, minimum=0)
    return threads or (os.cpu_count() or 1)


def run_ensemble(
    model: ModelSpec,
    n_traj,
    steps,
    base_seed=0,
    tolerances: Tolerances | None = None,
    thinning=DEFAULT_THINNING,
    points=None,
    threads=None,
    keep_records=False,
    initial=None,
):
    """Simulate and classify ``n_traj`` independent trajectories.

    Trajectory ``i`` uses the stream ``base_seed ^ i``. Results are assembled
    by index, so the summary does not depend on the number of threads.

    Returns
    -------
    EnsembleSummary
    """
    n_traj = check_int("n_traj", n_traj, minimum=1)
    steps = check_int("steps", steps, minimum=1)
    tol = tolerances or Tolerances()
    pts = _as_points(stationary_points_for(model) if points is None else points)

    def job(i):
        rec = simulate(model, initial=initial, steps=steps, seed=base_seed, thinning=thinning, index=i)
        return rec, classify_limit(rec, pts, tol)

    workers = min(resolve_threads(threads), n_traj)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(n_traj)))
    else:
        results = [job(i) for i in range(n_traj)]

    hits = [0] * len(pts)
    cycling = undetermined = 0
    for _, c in results:
        if c.verdict is Verdict.POINT_LIMIT:
            hits[c.point_index] += 1
        elif c.verdict is Verdict.CYCLING:
            cycling += 1
        else:
            undetermined += 1
    return EnsembleSummary(
        model=model,
        n_traj=n_traj,
        steps=steps,
        base_seed=int(base_seed),
        seeds=[int(base_seed) ^ i for i in range(n_traj)],
        points=pts,
        point_hits=hits,
        cycling=cycling,
        undetermined=undetermined,
        tolerances=tol,
        thinning=thinning,
        classifications=[c for _, c in results],
        records=[r for r, _ in results] if keep_records else None,
    )


def probabilities_at(model: ModelSpec, x):
    """Colour probabilities ``A x^beta / sum(A x^beta)`` at proportions ``x``."""
    x = check_simplex_point(x, model.d, atol=1e-9)
    u = model.A @ (x**model.beta)
    return u / u.sum()


def tangent_directions(d, n, seed=0):
    """``n`` unit vectors with zero coordinate sum.

    For three colours they are evenly spaced on the tangent circle; for more
    colours they are Gaussian draws projected onto the tangent plane.
    """
    n = check_int("directions", n, minimum=8)
    if d == 2:
        v = np.array([1.0, -1.0]) / np.sqrt(2.0)
        return np.array([v, -v])
    if d == 3:
        e1 = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
        e2 = np.array([1.0, 1.0, -2.0]) / np.sqrt(6.0)
        phi = 2.0 * np.pi * np.arange(n) / n
        return np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2
    g = np.random.default_rng(seed).standard_normal((n, d))
    g -= g.mean(axis=1, keepdims=True)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def noise_expectations(model: ModelSpec, x, directions=360):
    """``E[max(xi . theta, 0)]`` for each tangent direction ``theta``.

    ``xi = e_I - p`` with ``I`` drawn from ``p``; the expectation is the exact
    finite sum over the ``d`` outcomes.
    """
    p = probabilities_at(model, x)
    theta = tangent_directions(model.d, directions)
    proj = theta - (theta @ p)[:, None]
    return np.maximum(proj, 0.0) @ p


def noise_positivity_check(model: ModelSpec, x, directions=360):
    """Minimum over tangent directions of ``E[max(xi . theta, 0)]``.

    A positive value means the noise pushes out of every direction, which is
    what prevents convergence to linearly unstable points.
    """
    return float(noise_expectations(model, x, directions).min())
