"""Finite-volume solver for the density of critical parameters.

The density ``p(x, t)`` obeys the pure-advection continuity equation

    dp/dt = -sum_j d/dx_j [ p f_j(x, rewards(t)) ]

where ``f`` is a learner drift and the rewards are closed through the
population profile implied by ``p`` itself.

Discretisation
--------------
Each axis carries ``cells`` uniformly spaced nodes that include both
bounds. Node ``i`` owns the control volume ``[x_i - h/2, x_i + h/2]``
clipped to the domain, so the two edge volumes are half width. Putting
nodes on the bounds lets a point mass sit exactly at a policy of 0 or 1,
where the Cross drift vanishes.

Face fluxes use donor-cell flux splitting on node velocities,
``F_{i+1/2} = max(v_i, 0) p_i + min(v_{i+1}, 0) p_{i+1}``, with zero flux
through the domain boundary. Time stepping is forward Euler. The scheme is
conservative by construction and positivity preserving when every node
satisfies ``dt * sum_j |v_j| / w_j <= 1`` (counting only velocity
components that point into a neighbour).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import CFLError, DomainError
from .games import Game, check_profile
from .init_dist import InitialDistribution
from .learners import QBOLTZMANN, LearnerSpec, drift, policy_of

MIN_CELLS = 8
DEFAULT_CFL = 0.9
DEFAULT_MAX_DT = 0.1
CFL_SLACK = 1e-12


@dataclass(frozen=True)
class Axis:
    lower: float
    upper: float
    cells: int

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise DomainError("grid bounds must be finite")
        if not self.lower < self.upper:
            raise DomainError(f"need lower < upper, got [{self.lower}, {self.upper}]")
        if int(self.cells) != self.cells or self.cells < MIN_CELLS:
            raise DomainError(f"need an integer cell count >= {MIN_CELLS}, got {self.cells!r}")
        object.__setattr__(self, "cells", int(self.cells))

    @property
    def h(self) -> float:
        return (self.upper - self.lower) / (self.cells - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.cells)

    @property
    def edges(self) -> np.ndarray:
        inner = self.lower + self.h * (np.arange(1, self.cells) - 0.5)
        return np.concatenate([[self.lower], inner, [self.upper]])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)


class Grid:
    """Tensor-product node grid; see the module docstring for the layout."""

    def __init__(self, axes):
        axes = tuple(a if isinstance(a, Axis) else Axis(*a) for a in axes)
        if not 1 <= len(axes) <= 2:
            raise DomainError(f"grids are 1-D or 2-D, got {len(axes)} axes")
        self.axes = axes
        self.shape = tuple(a.cells for a in axes)
        self.edges = [a.edges for a in axes]
        self.widths = [a.widths for a in axes]
        # widths shaped to broadcast along the leading axis
        self.axis_widths = [w.reshape([-1] + [1] * (len(axes) - 1)) for w in self.widths]
        vol = np.ones(())
        for w in self.widths:
            vol = np.multiply.outer(vol, w)
        self.volumes = vol
        mesh = np.meshgrid(*[a.nodes for a in axes], indexing="ij")
        self.points = np.stack(mesh, axis=-1)

    @classmethod
    def uniform(cls, lower: float, upper: float, cells: int, dim: int = 1) -> "Grid":
        return cls([Axis(lower, upper, cells)] * dim)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.axes == other.axes

    def __repr__(self):
        return f"Grid({list(self.axes)})"


@dataclass
class DensityField:
    """Node values of ``p(x, t)``; ``values * grid.volumes`` are cell masses."""

    values: np.ndarray
    grid: Grid
    t: float = 0.0

    def mass(self) -> float:
        return float(np.sum(self.values * self.grid.volumes))

    def cell_mass(self) -> np.ndarray:
        return self.values * self.grid.volumes


@dataclass
class PdeTrace:
    """Per-integer-time record of a PDE solve.

    ``profile[t]`` is the density-implied population profile, so
    ``prob[t] = profile[t, 0]`` is the expected probability of action 0.
    """

    times: np.ndarray
    profile: np.ndarray
    mass: np.ndarray
    min_value: np.ndarray
    snapshots: dict[int, DensityField] = field(default_factory=dict)
    substeps: np.ndarray | None = None

    @property
    def prob(self) -> np.ndarray:
        return self.profile[:, 0]

    @property
    def horizon(self) -> int:
        return int(self.times[-1])


def default_grid(spec: LearnerSpec, game: Game) -> Grid:
    """401 nodes on [0, 1] for policies; 101 x 101 around the reward range for Q."""
    if spec.family == QBOLTZMANN:
        rmin, rmax = game.reward_range
        return Grid.uniform(rmin - 0.1, rmax + 0.1, 101, dim=game.k)
    return Grid.uniform(0.0, 1.0, 401)


def project_initial(dist: InitialDistribution, grid: Grid) -> DensityField:
    """Cell-averaged projection of ``dist`` onto ``grid``, renormalised to unit mass."""
    if dist.dim != grid.dim:
        raise DomainError(f"distribution is {dist.dim}-D but grid is {grid.dim}-D")
    mass = np.asarray(dist.cell_mass(grid.edges), dtype=float)
    total = mass.sum()
    if not total > 0.0:
        raise DomainError("initial distribution has no mass on the grid domain")
    return DensityField(mass / total / grid.volumes, grid, 0.0)


def mean_profile(density: DensityField, spec: LearnerSpec) -> np.ndarray:
    """Population profile implied by a density: the density-weighted mean policy."""
    return _profile(density, policy_of(spec, density.grid.points))


def _profile(density: DensityField, pol: np.ndarray) -> np.ndarray:
    return _profile_of(density.values, density.grid.volumes, pol)


def _profile_of(values: np.ndarray, volumes: np.ndarray, pol: np.ndarray) -> np.ndarray:
    w = (values * volumes).reshape(-1)
    prof = w @ pol.reshape(w.size, -1)
    # both factors are non-negative, so normalizing keeps every entry in [0, 1]
    return prof / prof.sum()


def drift_field(grid: Grid, spec: LearnerSpec, game: Game, profile, t: int = 0) -> np.ndarray:
    """Node velocities, shape ``grid.shape + (dim,)``, given the current profile."""
    rewards = game.reward_vector(check_profile(profile, game.k), t)
    if spec.family != QBOLTZMANN and grid.dim != 1:
        raise DomainError(f"{spec.family} lives on a 1-D grid")
    if spec.family == QBOLTZMANN and grid.dim != game.k:
        raise DomainError(f"Q-learning on a {game.k}-action game needs a {game.k}-D grid")
    return drift(spec, grid.points, rewards, t)


def _velocity(grid, spec, game, profile, t, pol):
    rewards = game.reward_vector(profile, t)
    return drift(spec, grid.points, rewards, t, policy=pol)


def _check_velocity(grid: Grid, velocity: np.ndarray) -> np.ndarray:
    v = np.asarray(velocity, dtype=float)
    if v.shape != grid.shape + (grid.dim,):
        raise DomainError(f"velocity shape {v.shape} does not match grid {grid.shape + (grid.dim,)}")
    return v


def _front(a: np.ndarray, j: int) -> np.ndarray:
    return a if j == 0 else np.moveaxis(a, j, 0)


def _back(a: np.ndarray, j: int) -> np.ndarray:
    return a if j == 0 else np.moveaxis(a, 0, j)


def _outflow_rate(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Per-node rate at which mass leaves, ``sum_j |v_j| / w_j`` over flux-carrying faces.

    The domain boundary carries no flux, so an outward velocity at a bound
    node does not count.
    """
    rate = None
    for j in range(grid.dim):
        vj = _front(v[..., j], j)
        o = np.zeros_like(vj)
        np.maximum(vj[:-1], 0.0, out=o[:-1])
        o[1:] -= np.minimum(vj[1:], 0.0)
        o /= grid.axis_widths[j]
        o = _back(o, j)
        rate = o if rate is None else rate + o
    return rate


def _inflow(p: np.ndarray, grid: Grid, v: np.ndarray) -> np.ndarray:
    """Per-node mass arriving from upwind neighbours, per unit volume and time."""
    total = None
    for j in range(grid.dim):
        vj = _front(v[..., j], j)
        pj = _front(p, j)
        f = np.zeros_like(pj)
        f[1:] = np.maximum(vj[:-1], 0.0) * pj[:-1]
        f[:-1] -= np.minimum(vj[1:], 0.0) * pj[1:]
        f /= grid.axis_widths[j]
        f = _back(f, j)
        total = f if total is None else total + f
    return total


def _euler(p: np.ndarray, out: np.ndarray, inflow: np.ndarray, dt: float) -> np.ndarray:
    # written as a sum of non-negative terms so roundoff cannot go below zero
    return p * np.maximum(1.0 - dt * out, 0.0) + dt * inflow


def cfl_number(grid: Grid, velocity, dt: float) -> float:
    """Largest fraction of a cell's mass that leaves it in one step."""
    v = _check_velocity(grid, velocity)
    return float(dt * _outflow_rate(grid, v).max())


def _transfer(values: np.ndarray, grid: Grid, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split the donor-cell update into an outflow rate and an inflow term.

    Returns ``(out, inflow)`` with ``dp/dt = inflow - out * p``; both are
    non-negative, and nothing crosses the domain boundary.
    """
    p = np.asarray(values, dtype=float)
    return _outflow_rate(grid, v), _inflow(p, grid, v)


def flux_divergence(values: np.ndarray, grid: Grid, velocity: np.ndarray) -> np.ndarray:
    """Discrete ``-div(p v)`` at every node (units of density per time)."""
    v = _check_velocity(grid, velocity)
    out, inflow = _transfer(values, grid, v)
    return inflow - out * np.asarray(values, dtype=float)


def advect_step(density: DensityField, velocity, dt: float) -> DensityField:
    """One forward-Euler donor-cell step; raises :class:`CFLError` if unstable."""
    grid = density.grid
    v = _check_velocity(grid, velocity)
    if not dt >= 0.0:
        raise DomainError(f"time step must be non-negative, got {dt!r}")
    out = _outflow_rate(grid, v)
    c = float(dt * out.max())
    if c > 1.0 + CFL_SLACK:
        raise CFLError(dt, c)
    if not np.any(v):
        return DensityField(density.values.copy(), grid, density.t + dt)
    new = _euler(density.values, out, _inflow(density.values, grid, v), dt)
    return DensityField(new, grid, density.t + dt)


def _count(rate: float, cfl: float, max_dt: float) -> int:
    n = max(1, math.ceil(1.0 / max_dt - 1e-12))
    if rate > 0.0:
        n = max(n, math.ceil(rate / cfl))
    return n


def substep_count(grid: Grid, velocity, cfl: float = DEFAULT_CFL, max_dt: float = DEFAULT_MAX_DT) -> int:
    """Number of equal substeps per unit time meeting both the CFL target and ``max_dt``."""
    rate = float(_outflow_rate(grid, _check_velocity(grid, velocity)).max())
    return _count(rate, cfl, max_dt)


class _Transport:
    """Velocity-dependent parts of the update, rebuilt whenever the rewards change."""

    def __init__(self, grid: Grid, spec: LearnerSpec, game: Game, pol: np.ndarray):
        self.grid, self.spec, self.game, self.pol = grid, spec, game, pol
        # scalar learners in 1-D move at unit(x) * (r1 - r2), so only the gap changes
        self.linear = grid.dim == 1 and spec.family != QBOLTZMANN
        if self.linear:
            unit = drift(spec, grid.points, np.array([1.0, 0.0]), policy=pol)[:, 0]
            self.up, self.um = np.maximum(unit, 0.0), np.minimum(unit, 0.0)
            self.w = grid.widths[0]

    def update(self, profile: np.ndarray, t: int) -> float:
        """Set the velocity for ``profile`` at round ``t``; returns the outflow rate bound."""
        if not self.linear:
            self.v = _velocity(self.grid, self.spec, self.game, profile, t, self.pol)
            self.out = _outflow_rate(self.grid, self.v)
            return float(self.out.max())
        r = self.game.reward_vector(profile, t)
        gap = r[0] - r[1]
        vp, vm = (gap * self.up, gap * self.um) if gap >= 0.0 else (gap * self.um, gap * self.up)
        out = np.empty_like(vp)
        out[:-1] = vp[:-1]
        out[-1] = 0.0
        out[1:] -= vm[1:]
        out /= self.w
        self.vp, self.vm, self.out = vp, vm, out
        return float(out.max())

    def step(self, p: np.ndarray, dt: float) -> np.ndarray:
        if not self.linear:
            return _euler(p, self.out, _inflow(p, self.grid, self.v), dt)
        f = np.empty_like(p)
        f[0] = 0.0
        np.multiply(self.vp[:-1], p[:-1], out=f[1:])
        f[:-1] -= self.vm[1:] * p[1:]
        f /= self.w
        return _euler(p, self.out, f, dt)


def solve(
    game: Game,
    spec: LearnerSpec,
    init: InitialDistribution | DensityField,
    grid: Grid | None = None,
    horizon: int = 100,
    snapshot_times=(),
    cfl: float = DEFAULT_CFL,
    max_dt: float = DEFAULT_MAX_DT,
    coupling: str = "substep",
) -> PdeTrace:
    """Integrate the density over ``horizon`` unit time intervals.

    With ``coupling="substep"`` the profile feeding the rewards is
    recomputed before every substep, which is the continuous-time closure.
    ``coupling="round"`` holds the profile from each integer time fixed for
    the whole interval, like one round of play. Within an interval the
    remaining time is split into equal substeps meeting ``cfl`` and
    ``max_dt``, re-sized whenever the velocity field changes.
    """
    if coupling not in ("substep", "round"):
        raise DomainError(f"coupling must be 'substep' or 'round', got {coupling!r}")
    if horizon < 0:
        raise DomainError(f"horizon must be non-negative, got {horizon}")
    if isinstance(init, DensityField):
        density = init
        grid = init.grid
    else:
        grid = grid if grid is not None else default_grid(spec, game)
        density = project_initial(init, grid)
    snaps = {int(s) for s in snapshot_times}
    if any(s < 0 or s > horizon for s in snaps):
        raise DomainError(f"snapshot times must lie in [0, {horizon}]")

    profiles = np.empty((horizon + 1, game.k))
    mass = np.empty(horizon + 1)
    mins = np.empty(horizon + 1)
    subs = np.zeros(horizon, dtype=int)
    snapshots: dict[int, DensityField] = {}
    pol = policy_of(spec, grid.points)
    vol = grid.volumes
    p = np.array(density.values, dtype=float)
    move = _Transport(grid, spec, game, pol)
    for t in range(horizon + 1):
        prof = _profile_of(p, vol, pol)
        profiles[t] = prof
        mass[t] = float(np.sum(p * vol))
        mins[t] = p.min()
        if t in snaps:
            snapshots[t] = DensityField(p.copy(), grid, float(t))
        if t == horizon:
            break
        rate = move.update(prof, t)
        left = 1.0
        while left > 0.0:
            if coupling == "substep" and left < 1.0:
                rate = move.update(_profile_of(p, vol, pol), t)
            # equal steps over what is left of the interval, so t + 1 is hit exactly
            m = math.ceil(left * _count(rate, cfl, max_dt) - 1e-9)
            dt = left / m if m > 1 else left
            p = move.step(p, dt)
            left = left - dt if m > 1 else 0.0
            subs[t] += 1
    return PdeTrace(np.arange(horizon + 1), profiles, mass, mins, snapshots, subs)
