"""Mean-field drift of the proportion process and related quantities.

The proportions follow ``x(n+1) - x(n) = gamma_n (F(x(n)) + noise)`` with
``gamma_n = 1 / (n0 + n + 1)`` and ``F_i(x) = u_i / sum(u) - x_i``.
All field functions broadcast over leading axes of ``x``.
"""

import numpy as np

from .urn import ModelSpec, proportions, transition_probabilities
from .validation import check_positive

DEFAULT_FD_STEP = 1e-6
CENTER3 = np.full(3, 1.0 / 3.0)


def _check_domain(x, beta):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("drift is only defined on the simplex (negative coordinate)")
    if beta < 1 and np.any(x == 0):
        raise ValueError("x must be interior when beta < 1")
    return x


def F_general(model: ModelSpec, x):
    """Drift ``A x^beta / sum(A x^beta) - x`` for an arbitrary model."""
    x = _check_domain(x, model.beta)
    if x.shape[-1] != model.d:
        raise ValueError(f"expected {model.d} coordinates, got {x.shape[-1]}")
    u = (x**model.beta) @ model.A.T
    return u / u.sum(axis=-1, keepdims=True) - x


def F_symmetric(a, beta, x):
    """Drift for unit diagonal and all off-diagonal weights equal to ``a`` (any d)."""
    a = check_positive("a", a)
    beta = check_positive("beta", beta)
    x = _check_domain(x, beta)
    d = x.shape[-1]
    p = x**beta
    s = p.sum(axis=-1, keepdims=True)
    return (a * s + (1.0 - a) * p) / ((1.0 + (d - 1) * a) * s) - x


def F_cyclic(a, beta, x):
    """Drift for the three-colour cyclic matrix with weight ``a`` on ``(i, i+1)``."""
    a = check_positive("a", a)
    beta = check_positive("beta", beta)
    x = _check_domain(x, beta)
    if x.shape[-1] != 3:
        raise ValueError("the cyclic model has three colours")
    p = x**beta
    u = p + a * np.roll(p, -1, axis=-1)
    return u / ((1.0 + a) * p.sum(axis=-1, keepdims=True)) - x


def as_field(field):
    """Turn a ``ModelSpec`` into a drift callable; pass callables through."""
    if isinstance(field, ModelSpec):
        model = field
        return lambda x: F_general(model, x)
    if callable(field):
        return field
    raise TypeError("field must be a ModelSpec or a callable")


# Reduced coordinates on the 2-simplex: (x1, x2), x3 = 1 - x1 - x2.


def to_chart(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("the chart is defined for three colours")
    return x[..., :2].copy()


def from_chart(y):
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != 2:
        raise ValueError("chart coordinates are two-dimensional")
    return np.concatenate([y, 1.0 - y.sum(axis=-1, keepdims=True)], axis=-1)


def reduced_field(field):
    """The drift as a map ``R^2 -> R^2`` in chart coordinates."""
    F = as_field(field)
    return lambda y: F(from_chart(y))[..., :2]


def jacobian_reduced(field, x, h=DEFAULT_FD_STEP):
    """Central finite-difference Jacobian of the drift in the ``(x1, x2)`` chart.

    Parameters
    ----------
    field : ModelSpec or callable
        Drift ``F`` taking a 3-vector.
    x : array_like
        Interior point of the 2-simplex.
    h : float
        Difference step, within ``[1e-7, 1e-4]``.
    """
    if not 1e-7 <= h <= 1e-4:
        raise ValueError(f"finite-difference step must lie in [1e-7, 1e-4], got {h}")
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError("jacobian_reduced works on a single 3-colour point")
    # the stencil moves x3 by up to 2h
    if np.min(x) <= 2 * h:
        raise ValueError(f"point {x} is too close to the boundary for step {h}")
    G = reduced_field(field)
    y = to_chart(x)
    J = np.empty((2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        J[:, k] = (G(y + e) - G(y - e)) / (2 * h)
    return J


def cyclic_center_jacobian(beta):
    """Closed-form chart Jacobian of the a = 1 cyclic drift at the center."""
    b = beta / 2.0
    return np.array([[b - 1.0, b], [-b, -1.0]])


def cyclic_center_eigenvalues(a, beta):
    """Closed-form eigenvalues of the cyclic drift at the center.

    On the tangent plane the cyclic shift acts with eigenvalues
    ``exp(±2πi/3)``, giving ``beta (1 + a w) / (1 + a) - 1``.
    """
    re = beta * (1.0 - a / 2.0) / (1.0 + a) - 1.0
    im = beta * a * np.sqrt(3.0) / (2.0 * (1.0 + a))
    return complex(re, im), complex(re, -im)


def symmetric_center_eigenvalue(a, beta, d=3):
    """Repeated tangent eigenvalue of the symmetric drift at the center."""
    return -1.0 + beta * (1.0 - a) / (1.0 + (d - 1) * a)


def eigenvalues_2x2(M):
    """Eigenvalues of a real 2x2 matrix by the quadratic formula.

    Returned with the larger real part (then the positive imaginary part) first.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    half_trace = 0.5 * (M[0, 0] + M[1, 1])
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    disc = half_trace * half_trace - det
    if disc >= 0:
        root = np.sqrt(disc)
        return complex(half_trace + root), complex(half_trace - root)
    root = np.sqrt(-disc)
    return complex(half_trace, root), complex(half_trace, -root)


def max_real_eigenvalue(field, x, h=DEFAULT_FD_STEP):
    return max(ev.real for ev in eigenvalues_2x2(jacobian_reduced(field, x, h)))


def lyapunov(a, beta, x, d=None):
    """Strict Lyapunov function of the symmetric drift.

    ``L(x) = -sum(x) + c [a sum(log x) - ((a - 1) / beta) log sum(x^beta)]``
    with ``c = 1 / ((d - 1) a + 1)``. It satisfies ``x_i dL/dx_i = F_i`` on
    the positive orthant, so ``L`` is nondecreasing along the flow.
    """
    a = check_positive("a", a)
    beta = check_positive("beta", beta)
    x = np.asarray(x, dtype=float)
    if d is not None and x.shape[-1] != d:
        raise ValueError(f"expected {d} coordinates, got {x.shape[-1]}")
    d = x.shape[-1]
    if np.any(x <= 0):
        raise ValueError("the Lyapunov function diverges on the boundary")
    c = 1.0 / ((d - 1) * a + 1.0)
    logs = np.log(x).sum(axis=-1)
    return -x.sum(axis=-1) + c * (a * logs - (a - 1.0) / beta * np.log((x**beta).sum(axis=-1)))


def lyapunov_gradient(a, beta, x):
    """Analytic gradient of :func:`lyapunov` in ambient coordinates."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    c = 1.0 / ((d - 1) * a + 1.0)
    s = (x**beta).sum(axis=-1, keepdims=True)
    return -1.0 + c * (a / x - (a - 1.0) * x ** (beta - 1.0) / s)


def sa_increment_expectation(model, state):
    """Exact ``E[x(n+1) - x(n) | state]`` by summing over the d outcomes."""
    p = transition_probabilities(model, state)
    x = proportions(state)
    gamma = 1.0 / (state.total + 1)
    out = np.zeros(model.d)
    for i in range(model.d):
        e = np.zeros(model.d)
        e[i] = 1.0
        out += p[i] * gamma * (e - x)
    return out
