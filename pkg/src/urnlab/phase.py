"""Phase diagrams over ``(a, beta)`` grids.

Cells carry the analytic label; boundaries are located by label changes
between neighbouring cells, then refined by bisection on the same labelling
function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .montecarlo import Tolerances, run_ensemble
from .stationary import (
    PhaseLabel,
    Stability,
    beta1,
    beta_asymmetric,
    cyclic_center_stability,
    cyclic_stationary_search,
    phase_symmetric,
)
from .urn import ModelSpec
from .validation import check_grid, check_int, check_positive

BOUNDARY_TOL = 1e-6
REFINE_TOL = 1e-4
SEARCH_RESOLUTION = 200
EXTRA_STABLE = "+asymmetric_stable"

_CYCLIC_LABELS = {
    Stability.STABLE: "center_stable",
    Stability.UNSTABLE: "center_unstable",
    Stability.MARGINAL: "marginal",
}


@dataclass
class PhaseGrid:
    """Labels on the grid ``a_grid x beta_grid`` (rows indexed by ``a``).

    ``empirical`` maps ``(i, j)`` to whether an ensemble agreed with the
    analytic label of that cell.
    """

    kind: str
    a_grid: np.ndarray
    beta_grid: np.ndarray
    labels: np.ndarray
    empirical: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.a_grid = check_grid("a_grid", self.a_grid)
        self.beta_grid = check_grid("beta_grid", self.beta_grid)
        self.labels = np.asarray(self.labels, dtype=object)
        if self.labels.shape != (self.a_grid.size, self.beta_grid.size):
            raise ValueError("labels must have shape (len(a_grid), len(beta_grid))")
        if any(not lab for lab in self.labels.ravel()):
            raise ValueError("every cell needs a label")

    @property
    def shape(self):
        return self.labels.shape

    def label(self, i, j):
        return self.labels[i, j]

    def rows(self):
        """``(a, beta, label, empirical)`` per cell, ``a`` varying slowest."""
        for i, a in enumerate(self.a_grid):
            for j, b in enumerate(self.beta_grid):
                yield float(a), float(b), self.labels[i, j], self.empirical.get((i, j))

    def to_dict(self):
        return {
            "kind": self.kind,
            "a_grid": [float(v) for v in self.a_grid],
            "beta_grid": [float(v) for v in self.beta_grid],
            "cells": [
                {"a": a, "beta": b, "label": lab, "empirical": emp} for a, b, lab, emp in self.rows()
            ],
            "metadata": self.metadata,
        }


# ---------------------------------------------------------------- labelling


def symmetric_label(a, beta, tol=BOUNDARY_TOL):
    return phase_symmetric(a, beta, tol=tol).label.value


def cyclic_label(a, beta, with_search=False, resolution=SEARCH_RESOLUTION, tol=BOUNDARY_TOL):
    label = _CYCLIC_LABELS[cyclic_center_stability(a, beta, tol=tol)]
    if with_search and has_extra_stable(a, beta, resolution):
        label += EXTRA_STABLE
    return label


def has_extra_stable(a, beta, resolution=SEARCH_RESOLUTION):
    """Whether the cyclic drift has a linearly stable point other than the center."""
    found = cyclic_stationary_search(a, beta, grid_resolution=resolution)
    return any(p.stability is Stability.STABLE for p in found.non_center())


def sweep_symmetric(a_grid, beta_grid, tol=BOUNDARY_TOL) -> PhaseGrid:
    """Label every cell with the symmetric three-colour phase.

    Cells within ``tol`` of ``beta1(a)`` or ``(1 + 2a)/(1 - a)`` are Marginal.
    """
    a_grid = check_grid("a_grid", a_grid)
    beta_grid = check_grid("beta_grid", beta_grid)
    labels = np.empty((a_grid.size, beta_grid.size), dtype=object)
    for i, a in enumerate(a_grid):
        for j, b in enumerate(beta_grid):
            labels[i, j] = symmetric_label(float(a), float(b), tol)
    return PhaseGrid("symmetric", a_grid, beta_grid, labels, metadata={"boundary_tol": tol})


def sweep_cyclic(a_grid, beta_grid, with_search=False, resolution=SEARCH_RESOLUTION, tol=BOUNDARY_TOL) -> PhaseGrid:
    """Label cells by center stability of the cyclic model.

    With ``with_search`` the label gains ``+asymmetric_stable`` wherever the
    grid search finds a stable point off the center.
    """
    a_grid = check_grid("a_grid", a_grid)
    beta_grid = check_grid("beta_grid", beta_grid)
    resolution = check_int("resolution", resolution, minimum=8)
    labels = np.empty((a_grid.size, beta_grid.size), dtype=object)
    for i, a in enumerate(a_grid):
        for j, b in enumerate(beta_grid):
            labels[i, j] = cyclic_label(float(a), float(b), with_search, resolution, tol)
    meta = {"boundary_tol": tol, "with_search": bool(with_search)}
    if with_search:
        meta["search_resolution"] = resolution
    return PhaseGrid("cyclic", a_grid, beta_grid, labels, metadata=meta)


def boundary_curves(a_grid):
    """``beta1(a)`` and ``(1 + 2a)/(1 - a)`` on a grid inside ``(0, 1)``."""
    a_grid = check_grid("a_grid", a_grid)
    if a_grid[-1] >= 1:
        raise ValueError("boundary curves are defined for a < 1")
    return {
        "beta1": np.array([beta1(float(a)) for a in a_grid]),
        "beta_asymmetric": np.array([beta_asymmetric(float(a)) for a in a_grid]),
    }


# ---------------------------------------------------------------- boundaries


def _label_fn(grid: PhaseGrid):
    if grid.kind == "symmetric":
        tol = grid.metadata.get("boundary_tol", BOUNDARY_TOL)
        return lambda a, b: symmetric_label(a, b, tol)
    with_search = grid.metadata.get("with_search", False)
    res = grid.metadata.get("search_resolution", SEARCH_RESOLUTION)
    tol = grid.metadata.get("boundary_tol", BOUNDARY_TOL)
    return lambda a, b: cyclic_label(a, b, with_search, res, tol)


def _crossings(f, lo, hi, label_lo, label_hi, tol):
    # walk from lo to hi, bisecting each exit from the current label
    out = []
    while label_lo != label_hi:
        a, b = lo, hi
        while b - a > tol:
            mid = 0.5 * (a + b)
            if f(mid) == label_lo:
                a = mid
            else:
                b = mid
        label_next = f(b) if b < hi else label_hi
        out.append((0.5 * (a + b), f"{label_lo}|{label_next}"))
        lo, label_lo = b, label_next
    return out


def detect_boundaries(grid: PhaseGrid, tol=REFINE_TOL):
    """Boundary crossings between adjacent cells, refined by bisection to ``tol``.

    A segment whose end labels differ is walked from one end: each exit from
    the current label is bisected, so intermediate phases narrower than the
    grid spacing are still reported. Returns ``(a, beta, curve_id)`` with
    ``curve_id = "<label before>|<label after>"``.
    """
    tol = check_positive("tol", tol)
    f = _label_fn(grid)
    out = []
    A, B, L = grid.a_grid, grid.beta_grid, grid.labels
    for i, a in enumerate(A):
        g = lambda x, a=float(a): f(a, x)  # noqa: E731
        for j in range(B.size - 1):
            if L[i, j] != L[i, j + 1]:
                for b, cid in _crossings(g, float(B[j]), float(B[j + 1]), L[i, j], L[i, j + 1], tol):
                    out.append((float(a), b, cid))
    for j, b in enumerate(B):
        g = lambda x, b=float(b): f(x, b)  # noqa: E731
        for i in range(A.size - 1):
            if L[i, j] != L[i + 1, j]:
                for a, cid in _crossings(g, float(A[i]), float(A[i + 1]), L[i, j], L[i + 1, j], tol):
                    out.append((a, float(b), cid))
    return out


def curve_rows(grid: PhaseGrid, refine_tol=REFINE_TOL):
    """Rows ``(a, beta, curve_id)``: analytic curves (symmetric, a < 1) then detected crossings."""
    rows = []
    if grid.kind == "symmetric":
        sub = grid.a_grid[grid.a_grid < 1]
        if sub.size:
            for name, values in boundary_curves(sub).items():
                rows.extend((float(a), float(b), name) for a, b in zip(sub, values))
    rows.extend(detect_boundaries(grid, refine_tol))
    return rows


# ---------------------------------------------------------------- empirical overlay


def expected_outcome(grid: PhaseGrid, i, j):
    """What an ensemble should show in a cell: ``"center"``, ``"off_center"``, ``"both"`` or ``None``."""
    lab = grid.labels[i, j]
    if grid.kind == "symmetric":
        return {
            PhaseLabel.SYMMETRIC_ONLY.value: "center",
            PhaseLabel.SUPERCRITICAL_A.value: "center",
            PhaseLabel.COEXISTENCE.value: "both",
            PhaseLabel.ASYMMETRIC_ONLY.value: "off_center",
        }.get(lab)
    if lab == "center_stable":
        return "center"
    if lab == "center_stable" + EXTRA_STABLE:
        return "both"
    if lab.startswith("center_unstable"):
        return "not_center"
    return None


def _agrees(expected, summary):
    center, off = summary.center_hits, summary.non_center_hits
    if expected == "center":
        return center > 0 and off == 0
    if expected == "off_center":
        return center == 0 and off > 0
    if expected == "both":
        return center > 0 and off > 0
    if expected == "not_center":
        return center == 0
    return None


def empirical_overlay(grid: PhaseGrid, cells=None, n_traj=20, steps=100_000, seed=0, tolerances=None, threads=None):
    """Run an ensemble in each selected cell and record agreement with its label.

    Marginal cells get no verdict. Returns ``grid`` with ``empirical`` filled.
    """
    if cells is None:
        cells = [(i, j) for i in range(grid.shape[0]) for j in range(grid.shape[1])]
    tol = tolerances or Tolerances()
    for i, j in cells:
        expected = expected_outcome(grid, i, j)
        if expected is None:
            continue
        a, b = float(grid.a_grid[i]), float(grid.beta_grid[j])
        model = ModelSpec.symmetric(a, b) if grid.kind == "symmetric" else ModelSpec.cyclic(a, b)
        summary = run_ensemble(model, n_traj, steps, seed, tol, threads=threads)
        grid.empirical[(i, j)] = _agrees(expected, summary)
    grid.metadata["empirical"] = {"n_traj": n_traj, "steps": steps, "seed": seed, "tolerances": tol.to_dict()}
    return grid
