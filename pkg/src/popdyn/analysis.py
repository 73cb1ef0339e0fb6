"""Derived quantities and validation metrics for the two solvers.

Expectations and the derivative identity for Cross learning, the steady
state residual of the discrete advection operator, and the ABM-vs-PDE
comparison report.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .learners import CROSS, LearnerSpec
from .pde import DensityField, flux_divergence

RHS_FLOOR = 1e-12


def expectation(density: DensityField, fn) -> float:
    """Density-weighted mean of ``fn(points)`` using the control-volume quadrature."""
    vals = np.asarray(fn(density.grid.points), dtype=float)
    w = density.cell_mass()
    return float(np.sum(vals * w) / np.sum(w))


def expected_derivative_check(
    density: DensityField,
    rewards,
    numeric_dEdt: float,
    alpha: float = 1.0,
    spec: LearnerSpec | None = None,
) -> tuple[float, float]:
    """Compare a measured ``dE[pi_1]/dt`` with its quadrature prediction.

    For Cross learning ``dE[pi_1]/dt = (r2 - r1) * int pi (pi - 1) p dpi``
    in the unscaled time of the replicator equation. The solver runs the
    drift scaled by the step size, so pass ``alpha`` (or the learner
    ``spec``) to put the prediction on the solver's clock.

    Returns ``(rhs, rel_error)`` with ``rel_error = |numeric - rhs| /
    max(|rhs|, 1e-12)``.
    """
    if spec is not None:
        if spec.family != CROSS:
            raise DomainError(f"the derivative identity holds for Cross learning, not {spec.family}")
        alpha = spec.alpha
    if density.grid.dim != 1:
        raise DomainError("the derivative identity needs a 1-D Cross density")
    r = np.asarray(rewards, dtype=float)
    if r.shape != (2,):
        raise DomainError(f"need two rewards, got shape {r.shape}")
    x = density.grid.points[..., 0]
    integral = float(np.sum(x * (x - 1.0) * density.cell_mass()))
    rhs = alpha * (r[1] - r[0]) * integral
    rel = abs(numeric_dEdt - rhs) / max(abs(rhs), RHS_FLOOR)
    return rhs, rel


def centered_derivative(values) -> np.ndarray:
    """Per-unit-time derivative of a series sampled at integer times.

    Centred differences in the interior, one-sided at the two ends.
    """
    e = np.asarray(values, dtype=float)
    if e.ndim != 1 or e.size < 2:
        raise DomainError("need at least two samples to differentiate")
    return np.gradient(e, edge_order=1)


def steady_residual(density: DensityField, velocity) -> float:
    """L1 norm of the discrete right-hand side ``-div(p v)``."""
    div = flux_divergence(density.values, density.grid, velocity)
    return float(np.sum(np.abs(div) * density.grid.volumes))


def histogram_l1(hist, density: DensityField) -> float:
    """``sum |hist_cell - p_cell * vol|`` between agent fractions and a density."""
    h = np.asarray(hist, dtype=float)
    q = density.cell_mass()
    if h.shape != q.shape:
        raise DomainError(f"histogram shape {h.shape} differs from grid shape {q.shape}")
    return float(np.sum(np.abs(h - q)))


@dataclass
class ComparisonReport:
    times: np.ndarray
    pde_prob: np.ndarray
    abm_prob: np.ndarray
    gap: np.ndarray
    hist_l1: dict[int, float] = field(default_factory=dict)

    @property
    def max_gap(self) -> float:
        return float(self.gap.max())

    @property
    def mean_gap(self) -> float:
        return float(self.gap.mean())

    @property
    def argmax_gap(self) -> int:
        return int(self.times[int(self.gap.argmax())])

    def summary(self) -> str:
        lines = [
            f"max gap   {self.max_gap:.6f} (t={self.argmax_gap})",
            f"mean gap  {self.mean_gap:.6f}",
            f"final     pde {self.pde_prob[-1]:.6f}  abm {self.abm_prob[-1]:.6f}",
        ]
        for t, d in sorted(self.hist_l1.items()):
            lines.append(f"hist L1   t={t}: {d:.6f}")
        return "\n".join(lines)


def compare(pde_trace, abm_trace) -> ComparisonReport:
    """Per-time gap between the PDE expectation and the ABM average.

    Histogram distances are added for every time that has both an ABM
    histogram and a PDE snapshot.
    """
    tp = np.asarray(pde_trace.times)
    ta = np.asarray(abm_trace.times)
    if tp.shape != ta.shape or np.any(tp != ta):
        raise DomainError(
            f"traces are not time aligned: PDE covers {tp.size} times, ABM {ta.size}"
        )
    p = np.asarray(pde_trace.prob, dtype=float)
    a = np.asarray(abm_trace.prob, dtype=float)
    l1 = {}
    snaps = getattr(pde_trace, "snapshots", {})
    for t, h in getattr(abm_trace, "histograms", {}).items():
        snap = snaps.get(t)
        if snap is not None:
            l1[int(t)] = histogram_l1(h, snap)
    return ComparisonReport(tp.copy(), p, a, np.abs(p - a), l1)
