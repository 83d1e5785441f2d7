"""scikit-learn style wrappers around the functional API.

The analytic objects here are not learned from data: ``fit`` computes (or
simulates) and stores results in trailing-underscore attributes, ``predict``
and ``transform`` apply them to new inputs. Parameters live in ``__init__``
unchanged, so ``get_params``/``set_params``/``clone`` behave as usual.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .montecarlo import Tolerances, Verdict, classify_limit, run_ensemble
from .phase import cyclic_label, symmetric_label
from .stationary import (
    PolyParams,
    Variant,
    beta0,
    beta1,
    find_positive_roots,
    phase_symmetric,
    stationary_points_for,
)
from .urn import DEFAULT_THINNING, ModelSpec
from .validation import check_simplex_point

CYCLING = -1
UNDETERMINED = -2


def make_model(kind, a=None, beta=2.0, d=3, A=None):
    """Build a ``ModelSpec`` from CLI/estimator style parameters."""
    if kind == "general":
        if A is None:
            raise ValueError("the general model needs an interaction matrix")
        return ModelSpec(np.asarray(A, dtype=float), beta)
    if A is not None:
        raise ValueError(f"an interaction matrix cannot be combined with kind={kind!r}")
    if a is None:
        raise ValueError(f"kind={kind!r} needs a value for a")
    if kind == "symmetric":
        return ModelSpec.symmetric(a, beta, d)
    if kind == "two-type":
        return ModelSpec.two_type(a, beta)
    if kind == "cyclic":
        if d != 3:
            raise ValueError("the cyclic model has three colours")
        return ModelSpec.cyclic(a, beta)
    raise ValueError(f"unknown model kind {kind!r}")


def _check_points(X, d):
    X = check_array(X, dtype=float)
    return check_simplex_point(X, d, atol=1e-9)


class StationaryPointAnalyzer(TransformerMixin, BaseEstimator):
    """Stationary points of a model; assigns simplex points to the nearest one.

    Parameters
    ----------
    kind : {"symmetric", "two-type", "cyclic", "general"}
    a, beta : float
    A : array_like, optional
        Interaction matrix for ``kind="general"``.
    grid_resolution : int
        Grid size for models analysed by grid search.
    """

    def __init__(self, kind="symmetric", a=0.2, beta=2.0, A=None, grid_resolution=400):
        self.kind = kind
        self.a = a
        self.beta = beta
        self.A = A
        self.grid_resolution = grid_resolution

    def fit(self, X=None, y=None):
        model = make_model(self.kind, self.a, self.beta, d=2 if self.kind == "two-type" else 3, A=self.A)
        self.model_ = model
        self.stationary_points_ = stationary_points_for(model, self.grid_resolution)
        self.locations_ = np.array([p.location for p in self.stationary_points_])
        self.stabilities_ = np.array([p.stability.value for p in self.stationary_points_])
        self.n_features_in_ = model.d
        self.roots_ = self.phase_ = self.beta0_ = self.beta1_ = None
        if self.kind == "symmetric":
            self.roots_ = find_positive_roots(PolyParams(model.a, model.beta))
            self.phase_ = phase_symmetric(model.a, model.beta)
            if model.a < 1:
                self.beta0_, self.beta1_ = beta0(model.a), beta1(model.a)
        elif self.kind == "two-type":
            self.roots_ = find_positive_roots(PolyParams(model.a, model.beta, Variant.TWO_TYPE_SYMMETRIC))
        return self

    def transform(self, X):
        """Euclidean distance from each row of ``X`` to each stationary point."""
        check_is_fitted(self, "locations_")
        X = _check_points(X, self.n_features_in_)
        return np.linalg.norm(X[:, None, :] - self.locations_[None, :, :], axis=2)

    def predict(self, X):
        """Index of the nearest stationary point."""
        return np.argmin(self.transform(X), axis=1)


class LimitClassifier(BaseEstimator):
    """Limit verdicts for recorded trajectories.

    ``fit`` takes the candidate limits (rows of stationary-point locations);
    ``predict`` takes a list of trajectories, each ``(samples, d)``, and
    returns the matched point index, ``CYCLING`` (-1) or ``UNDETERMINED`` (-2).
    """

    def __init__(self, point_tol=0.02, winding_min=3.0, radius_min=0.05, tail_fraction=0.1, min_tail=100):
        self.point_tol = point_tol
        self.winding_min = winding_min
        self.radius_min = radius_min
        self.tail_fraction = tail_fraction
        self.min_tail = min_tail

    def _tolerances(self):
        return Tolerances(self.point_tol, self.winding_min, self.radius_min, self.tail_fraction, self.min_tail)

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.points_ = check_simplex_point(X, atol=1e-9)
        self.n_features_in_ = X.shape[1]
        self.tolerances_ = self._tolerances()
        return self

    def classify(self, trajectories):
        check_is_fitted(self, "points_")
        out = []
        for traj in trajectories:
            pts = getattr(traj, "points", traj)
            pts = check_array(pts, dtype=float)
            if pts.shape[1] != self.n_features_in_:
                raise ValueError(f"trajectory has {pts.shape[1]} colours, expected {self.n_features_in_}")
            out.append(classify_limit(pts, list(self.points_), self.tolerances_))
        return out

    def predict(self, trajectories):
        codes = []
        for c in self.classify(trajectories):
            if c.verdict is Verdict.POINT_LIMIT:
                codes.append(c.point_index)
            elif c.verdict is Verdict.CYCLING:
                codes.append(CYCLING)
            else:
                codes.append(UNDETERMINED)
        return np.array(codes, dtype=int)


class _PhaseClassifier(BaseEstimator):
    def fit(self, X=None, y=None):
        self.n_features_in_ = 2
        return self

    def _pairs(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError("expected rows of (a, beta)")
        if np.any(X <= 0):
            raise ValueError("a and beta must be positive")
        return X

    def predict(self, X):
        return np.array([self._label(float(a), float(b)) for a, b in self._pairs(X)], dtype=object)


class SymmetricPhaseClassifier(_PhaseClassifier):
    """Phase label of the symmetric three-colour model for rows of ``(a, beta)``."""

    def __init__(self, tol=1e-9):
        self.tol = tol

    def _label(self, a, b):
        return symmetric_label(a, b, self.tol)


class CyclicPhaseClassifier(_PhaseClassifier):
    """Center-stability label of the cyclic model for rows of ``(a, beta)``."""

    def __init__(self, with_search=False, resolution=200, tol=1e-9):
        self.with_search = with_search
        self.resolution = resolution
        self.tol = tol

    def _label(self, a, b):
        return cyclic_label(a, b, self.with_search, self.resolution, self.tol)


class UrnEnsemble(BaseEstimator):
    """Seeded ensemble of urn trajectories.

    ``fit`` runs the ensemble; ``transform`` returns final proportions, one
    row per trajectory; ``predict`` returns limit codes as in
    :class:`LimitClassifier`.
    """

    def __init__(
        self,
        kind="symmetric",
        a=0.5,
        beta=2.0,
        d=3,
        A=None,
        n_traj=20,
        steps=100_000,
        seed=0,
        thinning=DEFAULT_THINNING,
        point_tol=0.02,
        winding_min=3.0,
        radius_min=0.05,
        threads=None,
    ):
        self.kind = kind
        self.a = a
        self.beta = beta
        self.d = d
        self.A = A
        self.n_traj = n_traj
        self.steps = steps
        self.seed = seed
        self.thinning = thinning
        self.point_tol = point_tol
        self.winding_min = winding_min
        self.radius_min = radius_min
        self.threads = threads

    def fit(self, X=None, y=None):
        self.model_ = make_model(self.kind, self.a, self.beta, self.d, self.A)
        tol = Tolerances(point_tol=self.point_tol, winding_min=self.winding_min, radius_min=self.radius_min)
        self.summary_ = run_ensemble(
            self.model_, self.n_traj, self.steps, self.seed, tol,
            thinning=self.thinning, threads=self.threads, keep_records=True,
        )
        self.records_ = self.summary_.records
        self.final_proportions_ = np.array([r.points[-1] for r in self.records_])
        self.n_features_in_ = self.model_.d
        return self

    def transform(self, X=None):
        check_is_fitted(self, "final_proportions_")
        return self.final_proportions_.copy()

    def predict(self, X=None):
        check_is_fitted(self, "summary_")
        codes = []
        for c in self.summary_.classifications:
            if c.verdict is Verdict.POINT_LIMIT:
                codes.append(c.point_index)
            else:
                codes.append(CYCLING if c.verdict is Verdict.CYCLING else UNDETERMINED)
        return np.array(codes, dtype=int)
