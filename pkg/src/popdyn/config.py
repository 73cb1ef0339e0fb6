"""Scenario configuration: JSON schema, validation and the named presets.

A scenario is one game, one learner, one initial distribution and the
run settings for both solvers. Presets that cover several learners are
tuples of scenarios, one per learner ("arm").

JSON layout::

    {
      "schema_version": 1,
      "name": "fig2a-cross",
      "game": {"variant": "PublicGoods"},
      "learner": {"family": "Cross", "alpha": 0.01},
      "initial": {"kind": "truncnormal", "mu": 0.5, "sigma": 0.1},
      "n": 1000, "runs": 20, "horizon": 1000, "seed": 0,
      "grid": null,
      "solver": {"cfl": 0.9, "max_dt": 0.1, "coupling": "substep"},
      "output_dir": "runs/fig2a-cross",
      "snapshot_times": [250, 500, 750, 1000],
      "tolerance": 0.05
    }

Unknown keys anywhere are rejected, and every error names the offending
field path.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import json
import math
from pathlib import Path
from typing import Any

from .errors import ConfigError, DomainError
from .games import Game, make_game
from .init_dist import Beta, InitialDistribution, ProductOfIndependent, TruncNormal, Univariate
from .learners import FAMILIES, QBOLTZMANN, LearnerSpec
from .pde import DEFAULT_CFL, DEFAULT_MAX_DT, Axis, Grid, default_grid

SCHEMA_VERSION = 1
U64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class SolverOptions:
    cfl: float = DEFAULT_CFL
    max_dt: float = DEFAULT_MAX_DT
    coupling: str = "substep"


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    game: Game
    learner: LearnerSpec
    initial: InitialDistribution
    n: int = 1000
    runs: int = 20
    horizon: int = 100
    seed: int = 0
    grid: Grid | None = None
    solver: SolverOptions = field(default_factory=SolverOptions)
    output_dir: str = "runs"
    snapshot_times: tuple[int, ...] = ()
    tolerance: float = 0.05

    def resolved_grid(self) -> Grid:
        return self.grid if self.grid is not None else default_grid(self.learner, self.game)

    def with_overrides(self, seed=None, output_dir=None, tolerance=None) -> "ScenarioConfig":
        changes: dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = seed
        if output_dir is not None:
            changes["output_dir"] = str(output_dir)
        if tolerance is not None:
            changes["tolerance"] = tolerance
        cfg = replace(self, **changes)
        validate(cfg)
        return cfg


# -- parsing helpers ---------------------------------------------------------

def _obj(data, path: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected an object, got {type(data).__name__}")
    unknown = set(data) - required - set(optional)
    if unknown:
        raise ConfigError(_join(path, sorted(unknown)[0]), "unknown key")
    for key in sorted(required):
        if key not in data:
            raise ConfigError(_join(path, key), "missing required key")
    return data


def _join(path: str, key) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else str(key)


def _num(data, path: str) -> float:
    if isinstance(data, bool) or not isinstance(data, (int, float)):
        raise ConfigError(path, f"expected a number, got {data!r}")
    x = float(data)
    if not math.isfinite(x):
        raise ConfigError(path, f"expected a finite number, got {data!r}")
    return x


def _int(data, path: str, lo: int = 0, hi: int | None = None) -> int:
    if isinstance(data, bool) or not isinstance(data, int):
        raise ConfigError(path, f"expected an integer, got {data!r}")
    if data < lo or (hi is not None and data > hi):
        bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
        raise ConfigError(path, f"must be {bound}, got {data}")
    return data


def _str(data, path: str) -> str:
    if not isinstance(data, str) or not data:
        raise ConfigError(path, f"expected a non-empty string, got {data!r}")
    return data


def _wrap(path: str, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except DomainError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_game(data, path: str) -> Game:
    d = _obj(data, path, {"variant"}, {"threshold_schedule"})
    variant = _str(d["variant"], _join(path, "variant"))
    sched = d.get("threshold_schedule")
    if sched is not None:
        sp = _join(path, "threshold_schedule")
        if not isinstance(sched, list):
            raise ConfigError(sp, "expected a list of [start, threshold] pairs")
        pairs = []
        for i, item in enumerate(sched):
            ip = _join(sp, i)
            if not isinstance(item, list) or len(item) != 2:
                raise ConfigError(ip, "expected a [start, threshold] pair")
            pairs.append((_int(item[0], _join(ip, 0)), _num(item[1], _join(ip, 1))))
        sched = pairs
    return _wrap(path, make_game, variant, sched)


def _parse_learner(data, path: str) -> LearnerSpec:
    d = _obj(data, path, {"family"}, {"alpha", "tau"})
    family = _str(d["family"], _join(path, "family"))
    if family not in FAMILIES:
        raise ConfigError(_join(path, "family"), f"unknown family {family!r}; expected one of {FAMILIES}")
    base = LearnerSpec.default(family)
    alpha = _num(d["alpha"], _join(path, "alpha")) if "alpha" in d else base.alpha
    tau = d.get("tau", base.tau)
    if tau is not None:
        tau = _num(tau, _join(path, "tau"))
    return _wrap(path, LearnerSpec, family, alpha, tau)


def _parse_initial(data, path: str) -> InitialDistribution:
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError(_join(path, "kind"), "missing required key")
    kind = data["kind"]
    if kind == "truncnormal":
        d = _obj(data, path, {"kind", "mu", "sigma"}, {"lo", "hi"})
        args = [_num(d[k], _join(path, k)) for k in ("mu", "sigma")]
        lo = _num(d.get("lo", 0.0), _join(path, "lo"))
        hi = _num(d.get("hi", 1.0), _join(path, "hi"))
        return _wrap(path, TruncNormal, *args, lo, hi)
    if kind == "beta":
        d = _obj(data, path, {"kind", "a", "b"})
        return _wrap(path, Beta, _num(d["a"], _join(path, "a")), _num(d["b"], _join(path, "b")))
    if kind == "product":
        d = _obj(data, path, {"kind", "components"})
        cp = _join(path, "components")
        if not isinstance(d["components"], list):
            raise ConfigError(cp, "expected a list of distributions")
        comps = [_parse_initial(c, _join(cp, i)) for i, c in enumerate(d["components"])]
        for i, c in enumerate(comps):
            if not isinstance(c, Univariate):
                raise ConfigError(_join(cp, i), "product components must be univariate")
        return _wrap(path, ProductOfIndependent, tuple(comps))
    raise ConfigError(_join(path, "kind"), f"unknown distribution kind {kind!r}")


def _parse_grid(data, path: str) -> Grid | None:
    if data is None:
        return None
    d = _obj(data, path, {"axes"})
    ap = _join(path, "axes")
    if not isinstance(d["axes"], list) or not d["axes"]:
        raise ConfigError(ap, "expected a non-empty list of axes")
    axes = []
    for i, a in enumerate(d["axes"]):
        ip = _join(ap, i)
        a = _obj(a, ip, {"lower", "upper", "cells"})
        axes.append(
            _wrap(ip, Axis, _num(a["lower"], _join(ip, "lower")), _num(a["upper"], _join(ip, "upper")),
                  _int(a["cells"], _join(ip, "cells")))
        )
    return _wrap(path, Grid, axes)


def _parse_solver(data, path: str) -> SolverOptions:
    if data is None:
        return SolverOptions()
    d = _obj(data, path, set(), {"cfl", "max_dt", "coupling"})
    base = SolverOptions()
    cfl = _num(d.get("cfl", base.cfl), _join(path, "cfl"))
    if not 0.0 < cfl <= 1.0:
        raise ConfigError(_join(path, "cfl"), f"must lie in (0, 1], got {cfl}")
    max_dt = _num(d.get("max_dt", base.max_dt), _join(path, "max_dt"))
    if not 0.0 < max_dt <= 1.0:
        raise ConfigError(_join(path, "max_dt"), f"must lie in (0, 1], got {max_dt}")
    coupling = d.get("coupling", base.coupling)
    if coupling not in ("substep", "round"):
        raise ConfigError(_join(path, "coupling"), f"must be 'substep' or 'round', got {coupling!r}")
    return SolverOptions(cfl, max_dt, coupling)


_TOP_REQUIRED = {"schema_version", "name", "game", "learner", "initial", "horizon"}
_TOP_OPTIONAL = {"n", "runs", "seed", "grid", "solver", "output_dir", "snapshot_times", "tolerance"}


def from_dict(data) -> ScenarioConfig:
    d = _obj(data, "", _TOP_REQUIRED, _TOP_OPTIONAL)
    version = d["schema_version"]
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r}; expected {SCHEMA_VERSION}")
    snaps = d.get("snapshot_times", [])
    if not isinstance(snaps, list):
        raise ConfigError("snapshot_times", "expected a list of integers")
    cfg = ScenarioConfig(
        name=_str(d["name"], "name"),
        game=_parse_game(d["game"], "game"),
        learner=_parse_learner(d["learner"], "learner"),
        initial=_parse_initial(d["initial"], "initial"),
        n=_int(d.get("n", 1000), "n", lo=1),
        runs=_int(d.get("runs", 20), "runs", lo=1),
        horizon=_int(d["horizon"], "horizon"),
        seed=_int(d.get("seed", 0), "seed", hi=U64_MAX),
        grid=_parse_grid(d.get("grid"), "grid"),
        solver=_parse_solver(d.get("solver"), "solver"),
        output_dir=_str(d.get("output_dir", "runs"), "output_dir"),
        snapshot_times=tuple(_int(s, _join("snapshot_times", i)) for i, s in enumerate(snaps)),
        tolerance=_num(d.get("tolerance", 0.05), "tolerance"),
    )
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    """Cross-field checks that single-field parsing cannot see."""
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed <= U64_MAX:
        raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {cfg.seed!r}")
    if cfg.seed + cfg.runs - 1 > U64_MAX:
        raise ConfigError("seed", "seed + runs - 1 overflows 64 bits")
    for i, s in enumerate(cfg.snapshot_times):
        if not 0 <= s <= cfg.horizon:
            raise ConfigError(f"snapshot_times[{i}]", f"{s} lies outside [0, {cfg.horizon}]")
    if len(set(cfg.snapshot_times)) != len(cfg.snapshot_times):
        raise ConfigError("snapshot_times", "contains duplicates")
    if not cfg.tolerance >= 0.0:
        raise ConfigError("tolerance", f"must be non-negative, got {cfg.tolerance!r}")
    d = cfg.learner.state_dim(cfg.game.k)
    if cfg.initial.dim != d:
        raise ConfigError("initial", f"{cfg.learner.family} needs a {d}-D initial distribution, got {cfg.initial.dim}-D")
    if cfg.grid is not None and cfg.grid.dim != d:
        raise ConfigError("grid", f"{cfg.learner.family} needs a {d}-D grid, got {cfg.grid.dim}-D")


def _initial_to_dict(dist: InitialDistribution) -> dict:
    if isinstance(dist, TruncNormal):
        return {"kind": "truncnormal", "mu": dist.mu, "sigma": dist.sigma, "lo": dist.lo, "hi": dist.hi}
    if isinstance(dist, Beta):
        return {"kind": "beta", "a": dist.a, "b": dist.b}
    if isinstance(dist, ProductOfIndependent):
        return {"kind": "product", "components": [_initial_to_dict(c) for c in dist.components]}
    raise ConfigError("initial", f"cannot serialise {type(dist).__name__}")


def _game_to_dict(game: Game) -> dict:
    out: dict[str, Any] = {"variant": type(game).__name__}
    sched = getattr(game, "threshold_schedule", None)
    if sched is not None:
        out["threshold_schedule"] = [[s, th] for s, th in sched]
    return out


def to_dict(cfg: ScenarioConfig) -> dict:
    learner: dict[str, Any] = {"family": cfg.learner.family, "alpha": cfg.learner.alpha}
    if cfg.learner.tau is not None:
        learner["tau"] = cfg.learner.tau
    grid = None
    if cfg.grid is not None:
        grid = {"axes": [{"lower": a.lower, "upper": a.upper, "cells": a.cells} for a in cfg.grid.axes]}
    return {
        "schema_version": SCHEMA_VERSION,
        "name": cfg.name,
        "game": _game_to_dict(cfg.game),
        "learner": learner,
        "initial": _initial_to_dict(cfg.initial),
        "n": cfg.n,
        "runs": cfg.runs,
        "horizon": cfg.horizon,
        "seed": cfg.seed,
        "grid": grid,
        "solver": {"cfl": cfg.solver.cfl, "max_dt": cfg.solver.max_dt, "coupling": cfg.solver.coupling},
        "output_dir": cfg.output_dir,
        "snapshot_times": list(cfg.snapshot_times),
        "tolerance": cfg.tolerance,
    }


def dumps(cfg: ScenarioConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2) + "\n"


def loads(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from None
    return from_dict(data)


def load(path) -> ScenarioConfig:
    return loads(Path(path).read_text(encoding="utf-8"))


# -- presets -----------------------------------------------------------------

def q_initial(game: Game, means=None, sigma: float = 0.4) -> ProductOfIndependent:
    """Independent truncated normals on ``[r_min, r_max]`` for each Q-value.

    Defaults to the reward-range midpoint for every action.
    """
    lo, hi = game.reward_range
    if means is None:
        means = [(lo + hi) / 2.0] * game.k
    return ProductOfIndependent(tuple(TruncNormal(m, sigma, lo, hi) for m in means))


VARYING_SCHEDULE = ((0, 0.6), (40, 0.2), (80, 0.5))
ARM_LABELS = {"Cross": "cross", QBOLTZMANN: "qboltzmann", "IGA": "iga"}


def _quarters(horizon: int) -> tuple[int, ...]:
    return tuple(horizon * q // 4 for q in (1, 2, 3, 4))


def _arm(name, game, family, initial, horizon, snaps=None, tolerance=0.05) -> ScenarioConfig:
    return ScenarioConfig(
        name=name,
        game=game,
        learner=LearnerSpec.default(family),
        initial=initial,
        horizon=horizon,
        output_dir=f"runs/{name}",
        snapshot_times=_quarters(horizon) if snaps is None else snaps,
        tolerance=tolerance,
    )


def _learner_arms(stem, game, horizon, policy_init, q_init, tolerance=0.05):
    arms = []
    for family in ("Cross", QBOLTZMANN, "IGA"):
        init = q_init if family == QBOLTZMANN else policy_init
        arms.append(_arm(f"{stem}-{ARM_LABELS[family]}", game, family, init, horizon, tolerance=tolerance))
    return tuple(arms)


def _build_presets() -> dict[str, tuple[ScenarioConfig, ...]]:
    pg, mac = make_game("PublicGoods"), make_game("MacWindows")
    farol = make_game("ElFarol")
    farol_varying = make_game("ElFarol", VARYING_SCHEDULE)
    half = TruncNormal(0.5, 0.1)
    presets: dict[str, tuple[ScenarioConfig, ...]] = {}
    fig1 = {
        "fig1a": half,
        "fig1b": Beta(0.4, 0.4),
        "fig1c": TruncNormal(0.8, 0.3),
        "fig1d": TruncNormal(0.2, 0.3),
    }
    for name, init in fig1.items():
        presets[name] = (_arm(name, pg, "Cross", init, 1000, snaps=(0, 250, 500, 750, 1000)),)
    presets["fig2a"] = _learner_arms("fig2a", pg, 1000, half, q_initial(pg))
    presets["fig2b"] = _learner_arms("fig2b", mac, 1000, half, q_initial(mac))
    presets["fig2c"] = _learner_arms(
        "fig2c", mac, 1000, TruncNormal(0.28, 0.1), q_initial(mac, means=(0.0, 0.5), sigma=0.1)
    )
    presets["fig2d"] = _learner_arms("fig2d", farol, 300, half, q_initial(farol))
    presets["fig2e"] = _learner_arms("fig2e", farol_varying, 120, half, q_initial(farol_varying), tolerance=0.07)
    presets["public-goods-cross"] = (_arm("public-goods-cross", pg, "Cross", half, 1000),)
    presets["el-farol-varying"] = (
        _arm("el-farol-varying", farol_varying, "IGA", half, 120, snaps=(0, 39, 79, 120), tolerance=0.07),
    )
    return presets


PRESETS = _build_presets()


def preset(name: str) -> tuple[ScenarioConfig, ...]:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; see --list-presets")
    return PRESETS[name]
