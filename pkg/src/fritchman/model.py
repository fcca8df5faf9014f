"""Fritchman semi-hidden Markov model: data type, validation, sampling.

States ``0..n_good-1`` are error-free (good) and states ``n_good..n_states-1``
always produce an error (bad). Good states never transition to one another.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ModelValidationError, NonConvergenceError

STOCHASTIC_TOL = 1e-9
RNG_NAME = "PCG64"


def as_error_sequence(bits) -> np.ndarray:
    """Coerce ``bits`` to a 1-D uint8 array of 0/1 symbols.

    Raises ValueError on any symbol outside {0, 1}.
    """
    arr = np.asarray(bits)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("error sequence symbols must be 0 or 1")
    return arr.astype(np.uint8, copy=False)


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class FritchmanModel:
    """Transition matrix, initial distribution and the good/bad split.

    The emission matrix is not stored: column j is (1, 0) for good states
    and (0, 1) for bad states, so it follows from ``n_good``.
    """

    transition: np.ndarray
    initial: np.ndarray
    n_good: int

    def __post_init__(self):
        object.__setattr__(self, "transition", _frozen(self.transition))
        object.__setattr__(self, "initial", _frozen(self.initial))
        object.__setattr__(self, "n_good", int(self.n_good))

    @property
    def n_states(self) -> int:
        return self.initial.shape[0]

    @property
    def emission(self) -> np.ndarray:
        """2 x N matrix; row 0 is P(no error | state), row 1 is P(error | state)."""
        bad = (np.arange(self.n_states) >= self.n_good).astype(float)
        return np.vstack([1.0 - bad, bad])

    @property
    def bad_states(self) -> np.ndarray:
        return np.arange(self.n_good, self.n_states)

    def renormalized(self) -> "FritchmanModel":
        """Copy with rows of ``transition`` and ``initial`` rescaled to sum to 1."""
        a = np.clip(self.transition, 0.0, None)
        p = np.clip(self.initial, 0.0, None)
        return FritchmanModel(a / a.sum(axis=1, keepdims=True), p / p.sum(), self.n_good)

    def same_as(self, other: "FritchmanModel", atol: float = 0.0) -> bool:
        return (
            self.n_good == other.n_good
            and self.transition.shape == other.transition.shape
            and np.allclose(self.transition, other.transition, rtol=0, atol=atol)
            and np.allclose(self.initial, other.initial, rtol=0, atol=atol)
        )

    def __repr__(self):
        return (
            f"FritchmanModel(n_states={self.n_states}, n_good={self.n_good}, "
            f"transition={self.transition.tolist()}, initial={self.initial.tolist()})"
        )


@dataclass(frozen=True)
class Violation:
    """One broken invariant. ``index`` is 0-based; ``message`` uses 1-based labels."""

    kind: str
    message: str
    index: tuple = ()
    value: float | None = None


@dataclass(frozen=True, eq=False)
class StationaryReport:
    distribution: np.ndarray
    error_probability: float
    residual: float
    degenerate: bool = False
    iterations: int = 0


def validate_model(model: FritchmanModel) -> list[Violation]:
    """Return every violated invariant; an empty list means the model is valid."""
    out: list[Violation] = []
    a, p, k = model.transition, model.initial, model.n_good
    n = p.shape[0] if p.ndim == 1 else -1

    if p.ndim != 1 or n < 2:
        out.append(Violation("shape", f"initial must be a vector of length >= 2, got shape {p.shape}"))
        return out
    if a.shape != (n, n):
        out.append(Violation("shape", f"transition must be {n}x{n}, got shape {a.shape}"))
        return out
    if not 1 <= k < n:
        out.append(Violation("partition", f"n_good must satisfy 1 <= k < {n}, got {k}", (), k))

    for (i, j), v in np.ndenumerate(a):
        if not 0.0 <= v <= 1.0:
            out.append(Violation("range", f"transition entry ({i + 1},{j + 1}) = {v!r} outside [0,1]", (i, j), float(v)))
    for i, row_sum in enumerate(a.sum(axis=1)):
        if not abs(row_sum - 1.0) <= STOCHASTIC_TOL:
            out.append(Violation("row-sum", f"row {i + 1} not stochastic (sums to {row_sum!r})", (i,), float(row_sum)))

    for i, v in enumerate(p):
        if not 0.0 <= v <= 1.0:
            out.append(Violation("range", f"initial entry {i + 1} = {v!r} outside [0,1]", (i,), float(v)))
    if not abs(p.sum() - 1.0) <= STOCHASTIC_TOL:
        out.append(Violation("initial-sum", f"initial distribution sums to {p.sum()!r}", (), float(p.sum())))

    for i in range(min(k, n)):
        for j in range(min(k, n)):
            if i != j and a[i, j] != 0.0:
                out.append(
                    Violation("good-good", f"good-good transition nonzero at ({i + 1},{j + 1})", (i, j), float(a[i, j]))
                )
    return out


def check_model(model: FritchmanModel) -> FritchmanModel:
    violations = validate_model(model)
    if violations:
        raise ModelValidationError(violations)
    return model


def generate_error_sequence(model, length, seed=None, *, return_states=False):
    """Sample an error sequence of ``length`` symbols from ``model``.

    The first state is drawn from ``model.initial``; each later state from the
    transition row of the previous one. ``seed`` is anything accepted by
    :func:`numpy.random.default_rng`. With ``return_states`` the hidden state
    path is returned as well.
    """
    check_model(model)
    length = int(length)
    if length < 0:
        raise ValueError("length must be nonnegative")
    rng = np.random.default_rng(seed)
    uniforms = rng.random(length)
    cum_a = np.cumsum(model.transition, axis=1)
    cum_p = np.cumsum(model.initial)
    states = np.zeros(length, dtype=np.int64)
    _kernels.sample_chain(cum_p, cum_a, uniforms, states)
    seq = (states >= model.n_good).astype(np.uint8)
    if return_states:
        return seq, states
    return seq


def stationary_distribution(model, *, max_iterations=1_000_000, tol=1e-12) -> StationaryReport:
    """Power iteration from the uniform vector until the update stalls below ``tol``."""
    check_model(model)
    a = model.transition
    n = model.n_states
    pi = np.full(n, 1.0 / n)
    residual = np.inf
    for it in range(1, max_iterations + 1):
        nxt = pi @ a
        nxt /= nxt.sum()
        residual = np.abs(nxt - pi).max()
        pi = nxt
        if residual < tol:
            break
    else:
        raise NonConvergenceError(residual, max_iterations)
    residual = float(np.abs(pi @ a - pi).max())
    pe = float(pi[model.n_good:].sum())
    return StationaryReport(
        distribution=pi,
        error_probability=pe,
        residual=residual,
        degenerate=pe < 1e-9 or pe > 1.0 - 1e-9,
        iterations=it,
    )


def fritchman_model(a, initial=None, n_good=None) -> FritchmanModel:
    """Build a model from a transition matrix; ``initial`` defaults to the stationary law.

    ``n_good`` defaults to N - 1 (a single bad state).
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    k = n - 1 if n_good is None else n_good
    if initial is None:
        tmp = FritchmanModel(a, np.full(n, 1.0 / n), k)
        initial = stationary_distribution(tmp).distribution
    return check_model(FritchmanModel(a, initial, k))


def table_model(a11, a13, a22, a23, a31, a32, a33, initial=None) -> FritchmanModel:
    """Three-state model from the seven free entries of a results-table row."""
    a = [[a11, 0.0, a13], [0.0, a22, a23], [a31, a32, a33]]
    return fritchman_model(a, initial, 2)
