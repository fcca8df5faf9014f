"""Baum-Welch training of Fritchman models from an observed error sequence.

The emission matrix is structural and never re-estimated; only the
transition matrix and the initial distribution move. Forward/backward
variables are normalised per step, and the likelihood is accumulated as a
sum of log10 scale factors so that 10^5-bit sequences do not underflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegenerateSequenceError, ImpossibleObservationError
from .model import FritchmanModel, as_error_sequence, check_model


def paper_initial_model() -> FritchmanModel:
    """Starting point used for every training run unless overridden."""
    a = [[0.9, 0.0, 0.1], [0.0, 0.8, 0.2], [0.1, 0.7, 0.2]]
    return FritchmanModel(a, [0.4, 0.4, 0.2], 2)


@dataclass(frozen=True)
class TrainingConfig:
    max_iterations: int = 20
    log_likelihood_tolerance: float = 0.0
    initial_model: FritchmanModel = field(default_factory=paper_initial_model)
    # compare the improvement against tolerance * |log-likelihood| instead
    relative_tolerance: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.log_likelihood_tolerance < 0:
            raise ValueError("log_likelihood_tolerance must be nonnegative")
        check_model(self.initial_model)


@dataclass(frozen=True, eq=False)
class TrainingReport:
    final_model: FritchmanModel
    log_likelihoods: tuple
    iterations_run: int
    converged_at: int | None
    history: tuple = ()


def forward_scaled(model: FritchmanModel, seq):
    """Normalised forward variables and per-step predictive probabilities.

    Returns ``(alpha, scale)`` where ``alpha[t]`` is P(state_t | O_1..O_t)
    and ``scale[t]`` is P(O_t | O_1..O_{t-1}); the product of ``scale`` is
    the sequence likelihood.
    """
    obs = as_error_sequence(seq)
    if obs.size == 0:
        raise ValueError("sequence must be nonempty")
    n = model.n_states
    alpha = np.zeros((obs.size, n))
    scale = np.zeros(obs.size)
    bad_t = _kernels.forward(
        np.ascontiguousarray(model.transition), np.ascontiguousarray(model.initial),
        obs, model.n_good, alpha, scale,
    )
    if bad_t >= 0:
        raise ImpossibleObservationError(bad_t + 1)
    return alpha, scale


def backward_scaled(model: FritchmanModel, seq, scale) -> np.ndarray:
    """Backward variables scaled with the forward factors; ``beta[-1]`` is all ones."""
    obs = as_error_sequence(seq)
    scale = np.asarray(scale, dtype=float)
    if scale.shape != obs.shape:
        raise ValueError(f"scale factors have length {scale.size}, sequence has {obs.size}")
    beta = np.zeros((obs.size, model.n_states))
    if obs.size:
        _kernels.backward(np.ascontiguousarray(model.transition), obs, model.n_good, scale, beta)
    return beta


def state_posteriors(alpha, beta) -> np.ndarray:
    """P(state_t | whole sequence); rows sum to one."""
    return alpha * beta


def log10_likelihood(model: FritchmanModel, seq) -> float:
    _, scale = forward_scaled(model, seq)
    return float(np.log10(scale).sum())


def em_step(model: FritchmanModel, seq):
    """One Baum-Welch re-estimation.

    Returns ``(new_model, ll)`` where ``ll`` is the log10 likelihood of the
    *input* model. Rows of the transition matrix that receive no expected
    visits are carried over unchanged.
    """
    check_model(model)
    obs = as_error_sequence(seq)
    n_err = int(obs.sum())
    if n_err == 0 or n_err == obs.size:
        raise DegenerateSequenceError(
            "sequence must contain both error-free and errored symbols for re-estimation"
        )
    a = np.ascontiguousarray(model.transition)
    alpha, scale = forward_scaled(model, obs)
    beta = backward_scaled(model, obs, scale)
    xi = np.zeros_like(a)
    _kernels.expected_counts(a, obs, model.n_good, alpha, beta, scale, xi)

    counts = xi.sum(axis=1)
    new_a = a.copy()
    visited = counts > 0
    new_a[visited] = xi[visited] / counts[visited, None]

    gamma0 = alpha[0] * beta[0]
    new_pi = gamma0 / gamma0.sum()
    ll = float(np.log10(scale).sum())
    return FritchmanModel(new_a, new_pi, model.n_good), ll


def train(config: TrainingConfig, seq) -> TrainingReport:
    """Iterate :func:`em_step` up to ``config.max_iterations`` times.

    ``log_likelihoods[i]`` is the log10 likelihood of the model entering
    iteration ``i + 1``. Training stops early at the first iteration whose
    improvement over the previous one is below the tolerance (when the
    tolerance is positive); that iteration number is ``converged_at``.
    With ``relative_tolerance`` the threshold scales with |log-likelihood|.
    """
    obs = as_error_sequence(seq)
    model = config.initial_model
    lls = []
    history = [model]
    converged_at = None
    tol = config.log_likelihood_tolerance
    for it in range(1, config.max_iterations + 1):
        model, ll = em_step(model, obs)
        lls.append(ll)
        history.append(model)
        limit = tol * abs(lls[-1]) if config.relative_tolerance else tol
        if tol > 0 and it > 1 and lls[-1] - lls[-2] < limit:
            converged_at = it
            break
    check_model(model)
    return TrainingReport(
        final_model=model,
        log_likelihoods=tuple(lls),
        iterations_run=len(lls),
        converged_at=converged_at,
        history=tuple(history),
    )
