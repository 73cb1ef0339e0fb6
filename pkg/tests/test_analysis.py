from __future__ import annotations

import numpy as np
import pytest

from popdyn import abm, analysis, pde
from popdyn.errors import DomainError
from popdyn.games import PublicGoods
from popdyn.init_dist import Beta, TruncNormal
from popdyn.learners import LearnerSpec

CROSS = LearnerSpec.default("Cross")


def _grid(n=401):
    return pde.Grid.uniform(0, 1, n)


def test_derivative_rhs_uniform_density():
    d = pde.DensityField(np.ones(401), _grid())
    rhs, _ = analysis.expected_derivative_check(d, [0.75, 0.25], 0.0)
    # closed form 0.5 / 6; the node quadrature is the trapezoid rule, exact to O(h^2)
    assert rhs == pytest.approx(0.5 / 6, rel=1e-5)
    assert rhs == pytest.approx(0.0833, abs=1e-4)
    rhs_a, rel = analysis.expected_derivative_check(d, [0.75, 0.25], 0.5 / 6 * 0.01, spec=CROSS)
    assert rhs_a == pytest.approx(0.01 * rhs)
    assert rel < 1e-4


def test_derivative_rhs_trivial_cases():
    g = _grid()
    d = pde.DensityField(np.ones(401), g)
    assert analysis.expected_derivative_check(d, [0.3, 0.3], 0.0)[0] == 0.0
    v = np.zeros(401)
    v[0] = 0.5 / g.volumes[0]
    v[-1] = 0.5 / g.volumes[-1]
    assert analysis.expected_derivative_check(pde.DensityField(v, g), [1.0, 0.0], 0.0)[0] == 0.0


def test_derivative_check_rejects_non_cross():
    d2 = pde.DensityField(np.ones((9, 9)), pde.Grid.uniform(0, 1, 9, dim=2))
    with pytest.raises(DomainError):
        analysis.expected_derivative_check(d2, [1.0, 0.0], 0.0)
    d1 = pde.DensityField(np.ones(11), pde.Grid.uniform(0, 1, 11))
    with pytest.raises(DomainError):
        analysis.expected_derivative_check(d1, [1.0, 0.0], 0.0, spec=LearnerSpec.default("IGA"))


def test_centered_derivative():
    t = np.arange(6.0)
    np.testing.assert_allclose(analysis.centered_derivative(t**2), [1, 2, 4, 6, 8, 9])
    with pytest.raises(DomainError):
        analysis.centered_derivative([1.0])


def test_steady_residual_examples():
    g = _grid()
    game = PublicGoods()
    v = np.zeros(401)
    v[0] = 0.5 / g.volumes[0]
    v[-1] = 0.5 / g.volumes[-1]
    split = pde.DensityField(v, g)
    vel = pde.drift_field(g, CROSS, game, pde.mean_profile(split, CROSS))
    assert analysis.steady_residual(split, vel) <= 1e-12
    flat = pde.DensityField(np.ones(401), g)
    assert analysis.steady_residual(flat, pde.drift_field(g, CROSS, game, [0.5, 0.5])) > 0
    dens = pde.project_initial(Beta(0.4, 0.4), g)
    assert analysis.steady_residual(dens, np.zeros((401, 1))) == 0.0


class _Trace:
    def __init__(self, prob, snapshots=None, histograms=None):
        self.times = np.arange(len(prob))
        self.prob = np.asarray(prob, dtype=float)
        self.snapshots = snapshots or {}
        self.histograms = histograms or {}


def test_compare_identical_and_offset():
    base = np.linspace(0.2, 0.9, 50)
    rep = analysis.compare(_Trace(base), _Trace(base))
    assert rep.max_gap == 0.0
    rep = analysis.compare(_Trace(base), _Trace(base + 0.03))
    assert rep.max_gap == pytest.approx(0.03) and rep.mean_gap == pytest.approx(0.03)
    swapped = analysis.compare(_Trace(base + 0.03), _Trace(base))
    np.testing.assert_array_equal(rep.gap, swapped.gap)
    assert rep.max_gap == rep.gap.max()
    with pytest.raises(DomainError):
        analysis.compare(_Trace(base), _Trace(base[:-1]))


def test_histogram_distance_from_own_density_is_zero():
    g = _grid(101)
    d = pde.project_initial(TruncNormal(0.5, 0.1), g)
    assert analysis.histogram_l1(d.cell_mass(), d) < 1e-15
    other = pde.project_initial(TruncNormal(0.2, 0.05), g)
    assert 0.0 < analysis.histogram_l1(other.cell_mass(), d) <= 2.0


def test_compare_real_traces_short_horizon():
    game = PublicGoods()
    grid = pde.default_grid(CROSS, game)
    p = pde.solve(game, CROSS, TruncNormal(0.5, 0.1), grid=grid, horizon=50, snapshot_times=[50])
    a = abm.run_ensemble(game, CROSS, TruncNormal(0.5, 0.1), 1000, 50, 4, 0, histogram_grid=grid,
                         snapshot_times=[50])
    rep = analysis.compare(p, a)
    assert rep.max_gap < 0.01
    assert set(rep.hist_l1) == {50} and rep.hist_l1[50] < 0.3
    assert "max gap" in rep.summary()


def test_public_goods_expectation_matches_identity_on_short_run():
    game = PublicGoods()
    tr = pde.solve(game, CROSS, TruncNormal(0.5, 0.1), horizon=20, snapshot_times=range(21))
    dE = analysis.centered_derivative(tr.prob)
    for t in range(1, 20):
        _, rel = analysis.expected_derivative_check(tr.snapshots[t], game.reward_vector(tr.profile[t]), dE[t],
                                                    spec=CROSS)
        assert rel < 1e-3
