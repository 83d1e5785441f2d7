"""Compiled inner loops for the urn chain.

Both the single-step Python API and the bulk simulator go through
``draw_colour`` so that a trajectory advanced one step at a time is
bit-identical to one produced by ``advance``.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def count_powers(counts, beta):
    out = np.empty(counts.shape[0])
    for i in range(counts.shape[0]):
        out[i] = float(counts[i]) ** beta
    return out


@njit(cache=True, nogil=True)
def colour_weights(A, powers, out):
    d = powers.shape[0]
    total = 0.0
    for i in range(d):
        ui = 0.0
        for j in range(d):
            ui += A[i, j] * powers[j]
        out[i] = ui
        total += ui
    return total


@njit(cache=True, nogil=True)
def draw_colour(A, powers, uniform, scratch):
    # inverse-CDF draw against the unnormalised weights u = A @ powers
    total = colour_weights(A, powers, scratch)
    threshold = uniform * total
    d = powers.shape[0]
    cum = 0.0
    for i in range(d):
        cum += scratch[i]
        if threshold < cum:
            return i
    # threshold == total only through rounding; fall back to the last
    # colour with positive weight
    for i in range(d - 1, -1, -1):
        if scratch[i] > 0.0:
            return i
    return -1


@njit(cache=True, nogil=True)
def advance(A, beta, counts, powers, uniforms, done, thinning, times, points, k):
    """Apply ``len(uniforms)`` steps in place, recording every ``thinning``-th state.

    ``done`` is the number of steps already taken in this run and ``k`` the
    next free row of ``times``/``points``. Returns the updated ``k``.
    """
    d = counts.shape[0]
    scratch = np.empty(d)
    total = 0
    for i in range(d):
        total += counts[i]
    for s in range(uniforms.shape[0]):
        c = draw_colour(A, powers, uniforms[s], scratch)
        counts[c] += 1
        powers[c] = float(counts[c]) ** beta
        total += 1
        if (done + s + 1) % thinning == 0:
            times[k] = total
            for i in range(d):
                points[k, i] = counts[i] / total
            k += 1
    return k
