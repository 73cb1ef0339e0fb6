"""Synchronous-round agent-based simulation of independent learners.

Randomness comes from counter-based Philox streams. Round ``t`` of a
population seeded with ``seed`` draws its uniforms from the generator keyed
by ``(seed, ROUND_STREAM)`` with counter word 2 set to ``t``; agent ``i``
(by identity, not position) consumes the ``i``-th uniform. Agent streams
are therefore fixed by (seed, round, agent id) alone, which is what makes
the simulator invariant under relabelling the agents.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import os

import numpy as np

from .errors import DomainError
from .games import Game
from .init_dist import InitialDistribution
from .learners import IGA, LearnerSpec, apply_update, policy_of

INIT_STREAM = 1
ROUND_STREAM = 2
SEED_MASK = (1 << 64) - 1


def _generator(seed: int, stream: int, counter: int = 0) -> np.random.Generator:
    if not 0 <= seed <= SEED_MASK:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
    bitgen = np.random.Philox(key=[seed, stream], counter=[0, 0, counter, 0])
    return np.random.Generator(bitgen)


@dataclass
class Population:
    """Agent states (one row per agent) plus the identity of each row."""

    states: np.ndarray
    spec: LearnerSpec
    rng_seed: int
    ids: np.ndarray | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or self.states.shape[0] < 1:
            raise DomainError(f"states must be an (n, d) array with n >= 1, got {self.states.shape}")
        if self.ids is None:
            self.ids = np.arange(self.n)
        self.ids = np.asarray(self.ids, dtype=np.intp)
        if self.ids.shape != (self.n,) or len(np.unique(self.ids)) != self.n:
            raise DomainError("ids must be distinct, one per agent")

    @property
    def n(self) -> int:
        return self.states.shape[0]

    def policies(self) -> np.ndarray:
        return policy_of(self.spec, self.states)

    def permuted(self, perm) -> "Population":
        """Same agents in a different row order (their streams go with them)."""
        perm = np.asarray(perm)
        return Population(self.states[perm], self.spec, self.rng_seed, self.ids[perm])


@dataclass
class RoundRecord:
    t: int
    mean_policy: np.ndarray
    realized: np.ndarray


@dataclass
class AbmTrace:
    """Per-round statistics of one run, or the run-average of an ensemble.

    ``mean_policy[t]`` is the population-mean policy before round ``t``'s
    update; ``realized[t]`` the profile of the actions sampled in round
    ``t``. ``histograms`` maps snapshot times to per-cell agent fractions.
    """

    times: np.ndarray
    mean_policy: np.ndarray
    realized: np.ndarray
    histograms: dict[int, np.ndarray] = field(default_factory=dict)
    runs: int = 1
    histogram_grid: object = None

    @property
    def prob(self) -> np.ndarray:
        return self.mean_policy[:, 0]

    @property
    def realized_a1(self) -> np.ndarray:
        return self.realized[:, 0]

    @property
    def horizon(self) -> int:
        return int(self.times[-1])


def init_population(n: int, spec: LearnerSpec, init: InitialDistribution, seed: int, k: int = 2) -> Population:
    """Draw ``n`` i.i.d. initial states from ``init``.

    Deterministic in ``(seed, n, init)``.
    """
    if n < 1:
        raise DomainError(f"population size must be >= 1, got {n}")
    d = spec.state_dim(k)
    if init.dim != d:
        raise DomainError(f"{spec.family} state is {d}-D, initial distribution is {init.dim}-D")
    x = np.asarray(init.sample(_generator(seed, INIT_STREAM), n), dtype=float).reshape(n, d)
    return Population(x, spec, seed)


def _sample_actions(pi: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(pi, axis=-1)[:, :-1]
    return (u[:, None] >= cum).sum(axis=1)


def step(pop: Population, game: Game, t: int, update: bool = True) -> tuple[Population, RoundRecord]:
    """Play round ``t``: everyone samples an action, then everyone learns.

    The realised profile is computed from all sampled actions before any
    agent updates.
    """
    pi = pop.policies()
    draws = _generator(pop.rng_seed, ROUND_STREAM, t).random(int(pop.ids.max()) + 1)
    actions = _sample_actions(pi, draws[pop.ids])
    realized = np.bincount(actions, minlength=game.k) / pop.n
    record = RoundRecord(t, pi.mean(axis=0), realized)
    if not update:
        return pop, record
    rewards = game.reward_vector(realized, t)
    r = rewards[actions]
    info = rewards if pop.spec.family == IGA else None
    new_states = apply_update(pop.spec, pop.states, actions, r, info)
    return replace(pop, states=new_states), record


def histogram(states: np.ndarray, grid) -> np.ndarray:
    """Fraction of agents falling in each control volume of ``grid``."""
    x = np.asarray(states, dtype=float)
    edges = [np.asarray(e) for e in grid.edges]
    clipped = np.column_stack(
        [np.clip(x[:, j], e[0], e[-1]) for j, e in enumerate(edges)]
    )
    counts, _ = np.histogramdd(clipped, bins=edges)
    return counts / x.shape[0]


def run(
    game: Game,
    spec: LearnerSpec,
    init: InitialDistribution,
    n: int,
    horizon: int,
    seed: int,
    histogram_grid=None,
    snapshot_times=(),
) -> AbmTrace:
    """Simulate ``horizon`` rounds and record ``horizon + 1`` rows (t = 0..horizon).

    The last row plays round ``horizon`` for its realised profile but does
    not apply the update.
    """
    if horizon < 0:
        raise DomainError(f"horizon must be non-negative, got {horizon}")
    snaps = {int(s) for s in snapshot_times}
    if snaps and histogram_grid is None:
        raise DomainError("snapshot times need a histogram grid")
    if any(s < 0 or s > horizon for s in snaps):
        raise DomainError(f"snapshot times must lie in [0, {horizon}]")
    pop = init_population(n, spec, init, seed, game.k)
    means = np.empty((horizon + 1, game.k))
    realized = np.empty((horizon + 1, game.k))
    hists: dict[int, np.ndarray] = {}
    for t in range(horizon + 1):
        if t in snaps:
            hists[t] = histogram(pop.states, histogram_grid)
        pop, rec = step(pop, game, t, update=t < horizon)
        means[t] = rec.mean_policy
        realized[t] = rec.realized
    return AbmTrace(np.arange(horizon + 1), means, realized, hists, 1, histogram_grid)


def worker_count() -> int:
    env = os.environ.get("POPDYN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"POPDYN_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_ensemble(
    game: Game,
    spec: LearnerSpec,
    init: InitialDistribution,
    n: int,
    horizon: int,
    runs: int,
    base_seed: int,
    histogram_grid=None,
    snapshot_times=(),
    workers: int | None = None,
) -> AbmTrace:
    """Average of ``runs`` independent runs; run ``r`` uses seed ``base_seed + r``.

    Runs may execute on a thread pool; averaging always happens in run
    order, so the result does not depend on the worker count.
    """
    if runs < 1:
        raise DomainError(f"need at least one run, got {runs}")
    seeds = [base_seed + r for r in range(runs)]

    def one(s):
        return run(game, spec, init, n, horizon, s, histogram_grid, snapshot_times)

    workers = min(workers or worker_count(), runs)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            traces = list(ex.map(one, seeds))
    else:
        traces = [one(s) for s in seeds]
    if runs == 1:
        return traces[0]
    mean_policy = np.mean([tr.mean_policy for tr in traces], axis=0)
    realized = np.mean([tr.realized for tr in traces], axis=0)
    hists = {t: np.mean([tr.histograms[t] for tr in traces], axis=0) for t in traces[0].histograms}
    return AbmTrace(traces[0].times, mean_policy, realized, hists, runs, histogram_grid)
