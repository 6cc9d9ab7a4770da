import math

import numpy as np
import pytest

from conftest import make_task
from pinchmeta.baselines import (
    BaselineKind,
    BaselineSettings,
    MinPowerSolver,
    conventional_optimize,
    min_power_at,
    min_power_for_reliability,
    power_only,
    scratch_learner,
    static_decision,
)
from pinchmeta.channel import ControlDecision, Vec3, WaveguideGeometry
from pinchmeta.errors import DomainError
from pinchmeta.meta import online_adapt
from pinchmeta.oracles import closed_form_power, slack_secrecy_task
from pinchmeta.policy import PolicyObjective, init_params
from pinchmeta.rng import RngStream
from pinchmeta.stochastic import DiskDraws, outage_from_points, secrecy_from_points
from pinchmeta.tasks import Requirements, Task, TaskDistribution, sample_task, simulate_pilots, task_loss


def test_kinds():
    assert {k.value for k in BaselineKind} == {"conventional_opt", "static_antenna", "power_only",
                                              "scratch_learner"}


def test_static():
    g = WaveguideGeometry(5.0, 3.0)
    assert static_decision(g, 1.0) == ControlDecision(2.5, 1.0)
    assert static_decision(g, 1.0, BaselineSettings(static_x=1.0, static_power=0.5)) == \
        ControlDecision(1.0, 0.5)


def test_closed_form_conventional(dist):
    gen = RngStream(1).generator()
    for k in range(5):
        t = slack_secrecy_task(gen, dist)
        d = conventional_optimize(t, rng=RngStream(2, k))
        x_star = min(max(t.user_est.x, 0.0), 5.0)
        assert d.feasible
        assert abs(d.x_pa - x_star) <= 1e-3
        assert d.power_w == pytest.approx(closed_form_power(t, x_star), rel=1e-3)


def test_vacuous_constraints_zero_power():
    t = Task(Vec3(1.0, 2.0, 0.0), 0.0, Vec3(4.0, 5.0, 0.0), req=Requirements(r_th=0.0, r_sec=0.0))
    assert conventional_optimize(t, rng=RngStream(0)).power_w == 0.0
    assert power_only(t, rng=RngStream(0)).power_w == 0.0


def test_power_only_closed_form_and_nesting():
    t = make_task(2.5, 0.0, 0.0, 0.5, 6.0)
    d = power_only(t, rng=RngStream(0))
    assert d.x_pa == 2.5
    assert d.power_w == pytest.approx(t.env.noise_power_w * 3.0 * 9.0 / t.env.friis_constant,
                                      rel=1e-6)
    powers = [power_only(make_task(1.0, 2.0, 0.8, 4.0, 5.0, r_th=r), rng=RngStream(1)).power_w
              for r in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(a <= b for a, b in zip(powers, powers[1:]))
    bad = power_only(make_task(1.0, 2.0, 0.8, 4.0, 5.0, r_th=40.0), rng=RngStream(1))
    assert not bad.feasible and bad.power_w == 1.0
    with pytest.raises(DomainError):
        power_only(make_task())


def test_infeasible_conventional_is_flagged():
    d = conventional_optimize(make_task(r_th=40.0), rng=RngStream(0))
    assert not d.feasible and d.power_w == 1.0
    d.validate(WaveguideGeometry(), 1.0)


def _grid_min_power(task, draws, nx=500, npw=500):
    """Least power over a 500-point x grid; per x a 500-point geometric P grid
    over [1e-9, 1] P_max, refined by 500 points inside the first feasible cell.

    Every grid point below the returned one is ruled out. Outage feasibility
    is exact through the (allowed+1)-th largest distance: P k0 / D is monotone
    in D, so counting draws below the threshold reduces to one comparison.
    """
    px, py = draws.points(task.disk)
    n = px.shape[0]
    allowed = math.floor(task.req.epsilon * n + 1e-9)
    gth = 2.0**task.req.r_th - 1.0
    k0, d2, pmax = task.env.gain_to_snr, task.geom.height_d**2, task.req.p_max
    ex, ey = task.eve.x, task.eve.y
    coarse = np.geomspace(pmax * 1e-9, pmax, npw)
    best = math.inf

    for x in np.linspace(0.0, task.geom.length_L, nx):
        D = (px - x) ** 2 + py**2 + d2
        d_crit = np.partition(D, n - allowed - 1)[n - allowed - 1]
        de = (ex - x) ** 2 + ey**2 + d2

        def feasible(p):
            if p * k0 / d_crit < gth:
                return False
            h = np.log2(1 + p * k0 / D).mean() - math.log2(1 + p * k0 / de)
            return h >= task.req.r_sec

        # a cell can only improve on best if its lower edge is below it
        i = next((i for i, p in enumerate(coarse)
                  if (coarse[i - 1] if i else 0.0) < best and feasible(p)), None)
        if i is None:
            continue
        lo = coarse[i - 1] if i > 0 else 0.0
        fine = np.linspace(lo, coarse[i], npw + 1)[1:]
        best = min(best, next(p for p in fine if feasible(p)))
    return best


@pytest.mark.slow
def test_conventional_matches_grid(dist):
    # 25 scenes where the solver reports feasible; proving infeasibility by
    # grid means a full scan, so only the first few such scenes are checked
    worst, feasible, infeasible_checked = 0.0, 0, 0
    k = 0
    while feasible < 25:
        t = sample_task(dist, RngStream(30, k))
        draws = DiskDraws.generate(10_000, RngStream(31, k))
        k += 1
        d = conventional_optimize(t, draws=draws)
        if not d.feasible:
            if infeasible_checked < 3:
                assert not math.isfinite(_grid_min_power(t, draws))
                infeasible_checked += 1
            continue
        g = _grid_min_power(t, draws)
        worst = max(worst, abs(d.power_w - g) / g)
        feasible += 1
    assert worst <= 0.01


def test_bisection_invariants(dist):
    for k in range(50):
        t = sample_task(dist, RngStream(40, k))
        draws = DiskDraws.generate(10_000, RngStream(41, k))
        g = RngStream(42, k).generator()
        x, target = g.uniform(0, 5), g.uniform(0.01, 0.2)
        res = min_power_at(x, t, target, draws)
        px, py = draws.points(t.disk)
        assert res.feasible
        out = lambda p: outage_from_points(ControlDecision(x, p), px, py, t.env, t.geom, t.req.r_th)
        assert out(res.power_w) <= target
        assert out(res.power_w * (1 - 2e-6)) > target


def test_min_power_for_reliability(dist):
    t0 = make_task(1.0, 2.0, 0.0, 4.0, 5.0)
    r = min_power_for_reliability(1.5, t0, 0.95, rng=RngStream(0))
    assert r.x_pa == 1.5 and r.power_w == pytest.approx(closed_form_power(t0, 1.5), rel=1e-5)
    for k in range(10):
        t = sample_task(dist, RngStream(50, k))
        draws = DiskDraws.generate(10_000, RngStream(51, k))
        ps = [min_power_for_reliability(2.5, t, rel, draws=draws).power_w
              for rel in (0.01, 0.8, 0.85, 0.9, 0.95)]
        assert all(a <= b for a, b in zip(ps, ps[1:]))
    via_callable = min_power_for_reliability(lambda task, tgt: ControlDecision(1.5, 1.0), t0, 0.95,
                                             rng=RngStream(0))
    assert via_callable == r
    with pytest.raises(DomainError):
        min_power_for_reliability(1.0, t0, 1.0, rng=RngStream(0))


def test_scheme_power_ordering(dist):
    for k in range(15):
        t = sample_task(dist, RngStream(60, k))
        draws = DiskDraws.generate(10_000, RngStream(61, k))
        conv = conventional_optimize(t, draws=draws)
        po = power_only(t, draws=draws)
        if not po.feasible:
            continue
        assert conv.feasible
        assert conv.power_w <= po.power_w * (1 + 1e-9)
        assert po.power_w <= static_decision(t.geom, t.req.p_max).power_w


def test_solver_feasible_point_meets_constraints(dist):
    t = sample_task(dist, RngStream(70))
    draws = DiskDraws.generate(10_000, RngStream(71))
    s = MinPowerSolver(t, draws)
    px, py = draws.points(t.disk)
    for x in np.linspace(0, 5, 11):
        pt = s.evaluate(float(x))
        if pt.feasible:
            dec = ControlDecision(float(x), pt.power_w)
            assert outage_from_points(dec, px, py, t.env, t.geom, t.req.r_th) <= t.req.epsilon
            signed = secrecy_from_points(dec, px, py, t.eve, t.env, t.geom, t.req.r_sec)[0]
            assert signed >= t.req.r_sec - 1e-9


def test_scratch_deterministic(task):
    pil = simulate_pilots(task, 10, RngStream(1))
    a = scratch_learner(task, pil, 0.01, 3, 5)
    assert a == scratch_learner(task, pil, 0.01, 3, 5)
    with pytest.raises(DomainError):
        scratch_learner(task, pil, 0.01, 0, 5)


@pytest.mark.slow
def test_scratch_long_run_reaches_conventional_loss(dist):
    # r_u = 0 so every pilot sits at the estimate; the residual is the mu P
    # penalty crawling down the logistic plateau, so alpha is raised to 0.3
    gen = RngStream(80).generator()
    obj = PolicyObjective()
    for k in range(6):
        t = slack_secrecy_task(gen, dist)
        pil = simulate_pilots(t, 10, RngStream(81, k))
        conv = conventional_optimize(t, rng=RngStream(82, k))
        d = scratch_learner(t, pil, 0.3, 1000, 7 + k, obj)
        gap = task_loss(d, t, pil, obj.weights) - task_loss(conv, t, pil, obj.weights)
        assert abs(gap) <= 1e-3


def test_scratch_post_not_worse_than_pre(dist):
    obj = PolicyObjective()
    ok = 0
    for k in range(100):
        t = sample_task(dist, RngStream(90, k))
        theta = init_params(obj.spec, RngStream(91, k).int_seed())
        _, losses = online_adapt(theta, t, 10, 0.01, 3, RngStream(92, k), obj)
        ok += losses[-1] <= losses[0]
    assert ok >= 90
