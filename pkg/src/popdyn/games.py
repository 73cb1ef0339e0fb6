"""Two-action population games.

A game maps (action, population profile, time step) to a real reward. The
profile is the vector of per-action fractions of the population; rewards
depend on nothing else, so every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

PROFILE_SUM_TOL = 1e-12


def check_profile(profile, k: int | None = None) -> np.ndarray:
    """Validate a population profile and return it as a float array."""
    o = np.asarray(profile, dtype=float)
    if o.ndim != 1 or o.size == 0:
        raise DomainError(f"profile must be a non-empty vector, got shape {o.shape}")
    if k is not None and o.size != k:
        raise DomainError(f"profile has {o.size} entries, game has {k} actions")
    # written so that NaN fails the test too
    if not (o.min() >= 0.0 and o.max() <= 1.0):
        raise DomainError(f"profile entries must lie in [0, 1]: {o}")
    if abs(o.sum() - 1.0) > PROFILE_SUM_TOL:
        raise DomainError(f"profile must sum to 1, sums to {o.sum()!r}")
    return o


def profile_from_actions(actions, k: int) -> np.ndarray:
    """Empirical profile of a vector of action indices."""
    a = np.asarray(actions)
    if a.size == 0:
        raise DomainError("cannot build a profile from an empty action list")
    if np.any(a < 0) or np.any(a >= k):
        raise DomainError(f"action indices must lie in [0, {k})")
    counts = np.bincount(a.ravel().astype(np.intp), minlength=k)
    return counts / a.size


class Game:
    """Base class; subclasses implement :meth:`reward_vector`."""

    k: int = 2
    action_names: tuple[str, ...] = ()

    def reward_vector(self, profile, t: int = 0) -> np.ndarray:
        raise NotImplementedError

    def reward(self, action: int, profile, t: int = 0) -> float:
        if not 0 <= int(action) < self.k or int(action) != action:
            raise DomainError(f"unknown action index {action!r} for a {self.k}-action game")
        return float(self.reward_vector(profile, t)[int(action)])

    @property
    def reward_range(self) -> tuple[float, float]:
        """Smallest and largest reward attainable over all profiles."""
        raise NotImplementedError


@dataclass(frozen=True)
class PublicGoods(Game):
    """n-player prisoner's dilemma. Action 0 defects, action 1 cooperates.

    With ``psi`` the cooperating fraction, defectors earn ``1.5 psi`` and
    cooperators ``1.5 psi - 0.5``.
    """

    action_names = ("defect", "cooperate")

    def reward_vector(self, profile, t=0):
        psi = check_profile(profile, self.k)[1]
        return np.array([1.5 * psi, 1.5 * psi - 0.5])

    @property
    def reward_range(self):
        return (-0.5, 1.5)


@dataclass(frozen=True)
class MacWindows(Game):
    """Network-effect game. Action 0 is Mac, action 1 is Windows.

    With ``psi`` the Mac fraction, Mac pays ``0.5 + 1.5 psi`` and Windows
    ``1.5 (1 - psi)``; the two coincide at the critical mass ``psi = 1/3``.
    """

    action_names = ("mac", "windows")

    def reward_vector(self, profile, t=0):
        psi = check_profile(profile, self.k)[0]
        return np.array([0.5 + 1.5 * psi, 1.5 * (1.0 - psi)])

    @property
    def reward_range(self):
        return (0.0, 2.0)


@dataclass(frozen=True)
class ElFarol(Game):
    """Congestion game. Action 0 goes to the bar, action 1 stays home.

    Going pays +1 when the going fraction is strictly below the active
    threshold and -1 otherwise; staying home pays 0. The threshold follows
    a piecewise-constant schedule of ``(t_start, threshold)`` pairs.
    """

    threshold_schedule: tuple[tuple[int, float], ...] = ((0, 0.6),)

    action_names = ("go", "stay")

    def __post_init__(self):
        sched = tuple((int(s), float(th)) for s, th in self.threshold_schedule)
        if not sched:
            raise DomainError("threshold schedule must not be empty")
        if sched[0][0] != 0:
            raise DomainError("threshold schedule must start at t = 0")
        starts = [s for s, _ in sched]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise DomainError(f"threshold schedule must be sorted by start time: {starts}")
        for _, th in sched:
            if not 0.0 < th < 1.0:
                raise DomainError(f"threshold {th!r} must lie strictly inside (0, 1)")
        object.__setattr__(self, "threshold_schedule", sched)

    def threshold(self, t) -> float:
        if t < 0:
            raise DomainError(f"time step must be non-negative, got {t!r}")
        active = self.threshold_schedule[0][1]
        for start, th in self.threshold_schedule:
            if t >= start:
                active = th
            else:
                break
        return active

    def reward_vector(self, profile, t=0):
        going = check_profile(profile, self.k)[0]
        return np.array([1.0 if going < self.threshold(t) else -1.0, 0.0])

    @property
    def reward_range(self):
        return (-1.0, 1.0)


GAMES = {"PublicGoods": PublicGoods, "MacWindows": MacWindows, "ElFarol": ElFarol}


def reward(game: Game, action_index: int, profile, t: int = 0) -> float:
    return game.reward(action_index, profile, t)


def reward_vector(game: Game, profile, t: int = 0) -> np.ndarray:
    return game.reward_vector(profile, t)


def make_game(variant: str, threshold_schedule: Sequence[Sequence[float]] | None = None) -> Game:
    if variant not in GAMES:
        raise DomainError(f"unknown game variant {variant!r}; expected one of {sorted(GAMES)}")
    if variant == "ElFarol":
        if threshold_schedule is None:
            return ElFarol()
        return ElFarol(tuple((int(s), float(th)) for s, th in threshold_schedule))
    if threshold_schedule is not None:
        raise DomainError(f"{variant} takes no threshold schedule")
    return GAMES[variant]()
