"""Independent learning rules: per-round updates and continuous-time drifts.

Critical parameters are stored as arrays whose last axis holds the state
vector: the probability of action 0 (length 1) for Cross learning and IGA,
the Q-value vector (length k) for Q-learning. Every operation broadcasts
over leading axes, so the simulator updates a whole population in one call
and the PDE solver evaluates drifts on a whole grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

CROSS = "Cross"
QBOLTZMANN = "QBoltzmann"
IGA = "IGA"
FAMILIES = (CROSS, QBOLTZMANN, IGA)

DEFAULT_ALPHA = {CROSS: 0.01, QBOLTZMANN: 0.05, IGA: 0.05}
DEFAULT_TAU = 2.0


@dataclass(frozen=True)
class LearnerSpec:
    """Learner family plus its fixed hyperparameters.

    ``alpha`` is the learning rate (Q-learning, IGA) or the step size that
    scales the Cross update. ``tau`` is the Boltzmann temperature and is only
    meaningful for Q-learning.
    """

    family: str
    alpha: float
    tau: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown learner family {self.family!r}; expected one of {FAMILIES}")
        # alpha = 0 is admitted as a degenerate learner that never moves
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if self.family == QBOLTZMANN:
            if self.tau is None or not self.tau > 0.0 or not np.isfinite(self.tau):
                raise DomainError(f"QBoltzmann needs a finite tau > 0, got {self.tau!r}")
        elif self.tau is not None:
            raise DomainError(f"{self.family} takes no temperature")

    @classmethod
    def default(cls, family: str) -> "LearnerSpec":
        tau = DEFAULT_TAU if family == QBOLTZMANN else None
        return cls(family, DEFAULT_ALPHA.get(family, 0.05), tau)

    def state_dim(self, k: int = 2) -> int:
        return k if self.family == QBOLTZMANN else 1


def _check_state(spec: LearnerSpec, x: np.ndarray, k: int | None = None) -> None:
    if spec.family == QBOLTZMANN:
        if k is not None and x.shape[-1] != k:
            raise DomainError(f"Q state has {x.shape[-1]} entries, expected {k}")
        if not np.all(np.isfinite(x)):
            raise DomainError("Q-values must be finite")
    else:
        if x.shape[-1] != 1:
            raise DomainError(f"{spec.family} state holds one probability, got {x.shape[-1]} entries")
        if k is not None and k != 2:
            raise DomainError(f"{spec.family} is implemented for two actions, got k={k}")


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def policy_of(spec: LearnerSpec, state) -> np.ndarray:
    """Mixed strategy implied by a state, shape ``(..., k)``."""
    x = np.asarray(state, dtype=float)
    _check_state(spec, x)
    if spec.family == QBOLTZMANN:
        return softmax(spec.tau * x)
    p1 = x[..., 0]
    return np.stack([p1, 1.0 - p1], axis=-1)


def cross_policy_step(pi, chosen, r, alpha: float) -> np.ndarray:
    """Unprojected Cross update of a full policy vector with step size ``alpha``.

    The chosen action moves by ``alpha r (1 - pi_j)`` and every other by
    ``-alpha r pi_i``; the increments telescope, so the sum is unchanged.
    """
    pi = np.asarray(pi, dtype=float)
    chosen = np.asarray(chosen)
    ar = alpha * np.asarray(r, dtype=float)[..., None]
    onehot = np.arange(pi.shape[-1]) == chosen[..., None]
    return pi + ar * (onehot - pi)


def _project_simplex_clamp(pi: np.ndarray) -> np.ndarray:
    # only touch rows that left [0, 1]; others would pick up rounding noise
    outside = np.any((pi < 0.0) | (pi > 1.0), axis=-1, keepdims=True)
    clipped = np.clip(pi, 0.0, 1.0)
    return np.where(outside, clipped / clipped.sum(axis=-1, keepdims=True), pi)


def apply_update(spec: LearnerSpec, state, chosen, r, rewards=None) -> np.ndarray:
    """One learning step after playing ``chosen`` and receiving ``r``.

    ``rewards`` is the vector of per-action rewards; only IGA uses it and
    IGA requires it. Works on a single state or a batch with matching
    leading axes on ``state``, ``chosen`` and ``r``.
    """
    x = np.asarray(state, dtype=float)
    _check_state(spec, x)
    chosen = np.asarray(chosen)
    a = spec.alpha
    if spec.family == CROSS:
        p1 = x[..., 0]
        pi = np.stack([p1, 1.0 - p1], axis=-1)
        new = _project_simplex_clamp(cross_policy_step(pi, chosen, r, a))
        return new[..., :1]
    if spec.family == QBOLTZMANN:
        onehot = np.arange(x.shape[-1]) == chosen[..., None]
        r = np.asarray(r, dtype=float)[..., None]
        return np.where(onehot, (1.0 - a) * x + a * r, x)
    if rewards is None:
        raise DomainError("IGA update needs the per-action reward vector")
    rv = np.asarray(rewards, dtype=float)
    if rv.shape[-1] != 2:
        raise DomainError(f"IGA is implemented for two actions, got {rv.shape[-1]} rewards")
    gap = (rv[..., 0] - rv[..., 1])[..., None]
    return np.clip(x + a * gap, 0.0, 1.0)


def drift(spec: LearnerSpec, x, rewards, t: int = 0, policy=None) -> np.ndarray:
    """Expected per-round change of the critical parameters.

    Cross: ``alpha pi (1 - pi)(r1 - r2)``; IGA: ``alpha (r1 - r2)``;
    Q-learning: ``alpha softmax_i(tau Q)(r_i - Q_i)``. The Cross drift
    carries ``alpha`` so that one simulated round is one unit of time.
    ``policy`` may pass a precomputed ``policy_of(spec, x)`` for Q-learning.
    """
    x = np.asarray(x, dtype=float)
    rv = np.asarray(rewards, dtype=float)
    a = spec.alpha
    if spec.family == QBOLTZMANN:
        _check_state(spec, x, rv.shape[-1])
        pol = softmax(spec.tau * x) if policy is None else policy
        return a * pol * (rv - x)
    _check_state(spec, x, rv.shape[-1])
    gap = (rv[..., 0] - rv[..., 1])[..., None]
    if spec.family == CROSS:
        return a * x * (1.0 - x) * gap
    return np.broadcast_to(a * gap, np.broadcast_shapes(x.shape, gap.shape)).copy()
