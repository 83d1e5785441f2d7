"""The urn Markov chain.

One ball is added per step; colour ``i`` is chosen with probability
``u_i / sum(u)`` where ``u = A @ counts**beta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .validation import (
    check_counts,
    check_int,
    check_interaction_matrix,
    check_positive,
)

# float64 represents every integer up to 2**53 exactly
MAX_EXACT_COUNT = 2**53
SEED_MASK = 2**64 - 1
DEFAULT_THINNING = 100
_CHUNK = 1 << 16

MODEL_KINDS = ("symmetric", "cyclic", "two-type", "general")


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Interaction matrix ``A``, reinforcement exponent ``beta`` and colour count.

    ``kind`` and ``a`` are metadata recording which named family produced
    the matrix; analytic routines use them to refuse matrices they do not
    cover.
    """

    A: np.ndarray
    beta: float
    kind: str = "general"
    a: float | None = None

    def __post_init__(self):
        A = check_interaction_matrix(self.A)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "beta", check_positive("beta", self.beta))
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.a is not None:
            object.__setattr__(self, "a", check_positive("a", self.a))

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @classmethod
    def symmetric(cls, a, beta, d=3):
        """Unit diagonal, every off-diagonal entry equal to ``a``."""
        a = check_positive("a", a)
        d = check_int("d", d, minimum=2)
        A = np.full((d, d), a)
        np.fill_diagonal(A, 1.0)
        kind = "two-type" if d == 2 else "symmetric"
        return cls(A, beta, kind=kind, a=a)

    @classmethod
    def two_type(cls, a, beta):
        return cls.symmetric(a, beta, d=2)

    @classmethod
    def cyclic(cls, a, beta):
        """Colour ``i`` reinforced by itself and, with weight ``a``, by colour ``i+1``."""
        a = check_positive("a", a)
        A = np.eye(3)
        for i in range(3):
            A[i, (i + 1) % 3] = a
        return cls(A, beta, kind="cyclic", a=a)

    def to_dict(self):
        return {
            "kind": self.kind,
            "a": self.a,
            "beta": self.beta,
            "d": self.d,
            "A": self.A.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(np.asarray(data["A"], dtype=float), data["beta"], kind=data.get("kind", "general"), a=data.get("a"))

    def __eq__(self, other):
        if not isinstance(other, ModelSpec):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.a == other.a
            and self.beta == other.beta
            and np.array_equal(self.A, other.A)
        )

    def __hash__(self):
        return hash((self.kind, self.a, self.beta, self.A.tobytes()))

    def __repr__(self):
        if self.kind != "general":
            return f"ModelSpec.{self.kind.replace('-', '_')}(a={self.a!r}, beta={self.beta!r}, d={self.d})"
        return f"ModelSpec(A={self.A.tolist()!r}, beta={self.beta!r})"


@dataclass(frozen=True, eq=False)
class UrnState:
    """Ball counts after ``n`` steps from an urn that started with ``n0`` balls."""

    counts: np.ndarray
    n0: int
    n: int = 0

    def __post_init__(self):
        counts = check_counts(self.counts)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        n0 = check_int("n0", self.n0, minimum=1)
        n = check_int("n", self.n, minimum=0)
        if int(counts.sum()) != n0 + n:
            raise ValueError(f"counts sum to {int(counts.sum())}, expected n0 + n = {n0 + n}")
        if n0 + n > MAX_EXACT_COUNT:
            raise OverflowError("ball total exceeds 2**53; probabilities would lose precision")

    @classmethod
    def initial(cls, d=None, counts=None):
        """Start state; defaults to one ball of each colour."""
        if counts is None:
            if d is None:
                raise ValueError("give either d or counts")
            counts = np.ones(check_int("d", d, minimum=2), dtype=np.int64)
        counts = check_counts(counts, d)
        return cls(counts, n0=int(counts.sum()), n=0)

    @property
    def d(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return self.n0 + self.n

    def __eq__(self, other):
        if not isinstance(other, UrnState):
            return NotImplemented
        return self.n0 == other.n0 and self.n == other.n and np.array_equal(self.counts, other.counts)

    __hash__ = None


@dataclass(eq=False)
class TrajectoryRecord:
    """A thinned realisation of the proportion process.

    ``times[k]`` is the number of steps taken when ``points[k]`` was recorded;
    the first row is the initial state and the last row the final state.
    """

    times: np.ndarray
    points: np.ndarray
    seed: int
    model: ModelSpec
    final_state: UrnState
    thinning: int = DEFAULT_THINNING
    index: int = 0
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TrajectoryRecord):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.thinning == other.thinning
            and self.model == other.model
            and self.final_state == other.final_state
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.points, other.points)
        )

    __hash__ = None


def _check_compatible(model, state):
    if state.d != model.d:
        raise ValueError(f"state has {state.d} colours, model has {model.d}")


def transition_probabilities(model: ModelSpec, state: UrnState) -> np.ndarray:
    """Probability of each colour being added next."""
    _check_compatible(model, state)
    powers = _kernels.count_powers(state.counts, model.beta)
    u = np.empty(model.d)
    total = _kernels.colour_weights(model.A, powers, u)
    if not total > 0:
        raise ValueError("all colour weights vanish; interaction matrix is malformed")
    return u / total


def proportions(state: UrnState) -> np.ndarray:
    return state.counts / state.total


def trajectory_rng(seed, index=0):
    """Generator for trajectory ``index`` of an ensemble seeded with ``seed``.

    Streams are split as ``seed XOR index``, so every trajectory can be
    regenerated on its own.
    """
    seed = check_int("seed", seed) & SEED_MASK
    return np.random.default_rng(seed ^ check_int("index", index, minimum=0))


def step(model: ModelSpec, state: UrnState, rng: np.random.Generator):
    """Add one ball. Returns ``(new_state, colour)``.

    Consumes exactly one ``rng.random()`` draw, the same as ``simulate``.
    """
    _check_compatible(model, state)
    if state.total + 1 > MAX_EXACT_COUNT:
        raise OverflowError("ball total would exceed 2**53")
    powers = _kernels.count_powers(state.counts, model.beta)
    colour = int(_kernels.draw_colour(model.A, powers, rng.random(), np.empty(model.d)))
    if colour < 0:
        raise ValueError("all colour weights vanish; interaction matrix is malformed")
    counts = state.counts.copy()
    counts[colour] += 1
    return UrnState(counts, state.n0, state.n + 1), colour


def simulate(model, initial=None, steps=1, seed=0, thinning=DEFAULT_THINNING, index=0, rng=None):
    """Run the chain for ``steps`` steps.

    Parameters
    ----------
    model : ModelSpec
    initial : UrnState, optional
        Defaults to one ball per colour.
    steps : int
        Number of balls to add, at least 1.
    seed : int
        Ensemble seed; trajectory ``index`` draws from ``trajectory_rng(seed, index)``.
    thinning : int
        Record every ``thinning``-th state. The initial and final states are
        always recorded, giving ``ceil(steps / thinning) + 1`` samples.
    rng : numpy.random.Generator, optional
        Overrides the seeded generator (its state is advanced).

    Returns
    -------
    TrajectoryRecord
    """
    steps = check_int("steps", steps, minimum=1)
    thinning = check_int("thinning", thinning, minimum=1)
    if initial is None:
        initial = UrnState.initial(model.d)
    _check_compatible(model, initial)
    if initial.total + steps > MAX_EXACT_COUNT:
        raise OverflowError(
            f"n0 + n + steps = {initial.total + steps} exceeds 2**53; refusing to lose count precision"
        )
    if rng is None:
        rng = trajectory_rng(seed, index)

    n_samples = -(-steps // thinning) + 1
    totals = np.empty(n_samples, dtype=np.int64)
    points = np.empty((n_samples, model.d))
    totals[0] = initial.total
    points[0] = proportions(initial)

    counts = initial.counts.copy()
    powers = _kernels.count_powers(counts, model.beta)
    k = 1
    done = 0
    while done < steps:
        chunk = min(_CHUNK, steps - done)
        k = _kernels.advance(model.A, model.beta, counts, powers, rng.random(chunk), done, thinning, totals, points, k)
        done += chunk
    if steps % thinning:
        totals[k] = counts.sum()
        points[k] = counts / totals[k]
        k += 1
    assert k == n_samples

    final = UrnState(counts, initial.n0, initial.n + steps)
    times = totals - initial.n0
    return TrajectoryRecord(times, points, seed=int(seed), model=model, final_state=final, thinning=thinning, index=index)
