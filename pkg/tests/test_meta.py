import numpy as np
import pytest

from pinchmeta.errors import DivergenceError, DomainError, InvalidParameterError
from pinchmeta.meta import (
    MetaConfig,
    TrainTrace,
    inner_adapt,
    maml_meta_step,
    maml_task_gradient,
    meta_train,
    online_adapt,
    reptile_meta_step,
)
from pinchmeta.oracles import QuadraticStub, check_maml_analytics
from pinchmeta.policy import PolicyObjective, init_params, load_checkpoint, save_checkpoint
from pinchmeta.rng import RngStream
from pinchmeta.tasks import TaskDistribution, sample_task, sample_tasks, simulate_pilots
from pinchmeta.policy import GradResult


class ShiftStub(QuadraticStub):
    """c/2 (theta - task)^2: each task pulls theta toward its own center."""

    def loss_and_grad(self, theta, task=None, pilots=None):
        d = np.asarray(theta, dtype=np.float64) - float(task)
        return GradResult(0.5 * self.c * float(d @ d), self.c * d)


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        MetaConfig(inner_lr=0.0)
    with pytest.raises(InvalidParameterError):
        MetaConfig(inner_steps=0)
    with pytest.raises(InvalidParameterError):
        MetaConfig(order="third")
    assert MetaConfig().meta_steps == 100


def test_inner_adapt_stub():
    stub = QuadraticStub(1.0)
    th = np.array([1.0])
    assert inner_adapt(th, None, None, 0.1, 0, stub) is th
    assert inner_adapt(th, None, None, 0.1, 1, stub)[0] == pytest.approx(0.9, abs=1e-15)
    assert inner_adapt(th, None, None, 0.1, 3, stub)[0] == pytest.approx(0.729, abs=1e-15)
    with pytest.raises(DomainError):
        inner_adapt(th, None, None, 0.1, -1, stub)


@pytest.mark.parametrize("c,alpha,theta", [(2.0, 0.1, 1.5), (0.5, 0.01, -3.0), (3.0, 0.2, 0.4)])
def test_maml_stub_gradients(c, alpha, theta):
    stub = QuadraticStub(c)
    th = np.array([theta])
    for order, expected in (("second", c * (1 - alpha * c) ** 2 * theta),
                            ("first", c * (1 - alpha * c) * theta)):
        g, _, _ = maml_task_gradient(th, None, MetaConfig(inner_lr=alpha, order=order), stub,
                                     None, None)
        assert g[0] == pytest.approx(expected, rel=1e-6)


def test_maml_stub_two_steps():
    c, a, th = 1.5, 0.1, 2.0
    g, _, _ = maml_task_gradient(np.array([th]), None, MetaConfig(inner_lr=a, inner_steps=2),
                                 QuadraticStub(c), None, None)
    assert g[0] == pytest.approx(c * (1 - a * c) ** 4 * th, rel=1e-6)


def test_maml_batch_sum():
    stub = QuadraticStub(2.0)
    th = np.array([1.0])
    cfg = MetaConfig(inner_lr=0.1, meta_lr=0.01)
    one, _ = maml_meta_step(th, [None], cfg, RngStream(0), stub)
    five, _ = maml_meta_step(th, [None] * 5, cfg, RngStream(0), stub)
    assert (th - five)[0] == pytest.approx(5 * (th - one)[0], rel=1e-12)
    with pytest.raises(DomainError):
        maml_meta_step(th, [], cfg, RngStream(0), stub)


def test_reptile_updates():
    stub = ShiftStub(1.0)
    th = np.array([0.5])
    cfg = MetaConfig(inner_lr=0.1, reptile_step=1.0)
    sym = reptile_meta_step(th, [0.0, 1.0], cfg, RngStream(0), stub)
    assert sym[0] == pytest.approx(0.5, abs=1e-15)
    single = reptile_meta_step(th, [3.0], cfg, RngStream(0), stub)
    assert single[0] == pytest.approx(inner_adapt(th, 3.0, None, 0.1, 1, stub)[0], abs=0)
    quad = QuadraticStub(2.0)
    step = reptile_meta_step(np.array([1.0]), [None], cfg, RngStream(0), quad) - 1.0
    assert step[0] == pytest.approx(-0.1 * 2.0 * 1.0, rel=1e-12)


def test_reptile_fixed_point_real_policy():
    # every task's hinges are inactive at this theta, and mu = 0
    from pinchmeta.channel import Vec3
    from pinchmeta.tasks import LossWeights, Task
    obj = PolicyObjective(weights=LossWeights(0.5, 0.0))
    theta = init_params(obj.spec, 0)
    theta[-1] = 30.0
    tasks = [Task(Vec3(2.5, 1.0, 0.0), 0.2, Vec3(0.0, 6.0, 0.0)),
             Task(Vec3(2.0, 1.2, 0.0), 0.1, Vec3(5.0, 6.0, 0.0))]
    out = reptile_meta_step(theta, tasks, MetaConfig(), RngStream(1), obj)
    np.testing.assert_allclose(out, theta, atol=1e-10, rtol=0)


def test_first_second_order_agree_as_alpha_shrinks(dist):
    obj = PolicyObjective()
    t = sample_task(dist, RngStream(2))
    sup = simulate_pilots(t, 10, RngStream(2, 1))
    qry = simulate_pilots(t, 64, RngStream(2, 2))
    theta = init_params(obj.spec, 3)
    cs = []
    for a in (1e-3, 1e-4):
        g1 = maml_task_gradient(theta, t, MetaConfig(inner_lr=a, order="first"), obj, sup, qry)[0]
        g2 = maml_task_gradient(theta, t, MetaConfig(inner_lr=a, order="second"), obj, sup, qry)[0]
        cs.append(np.linalg.norm(g2 - g1) / np.linalg.norm(g1) / a)
    assert cs[0] > 0 and 0.5 < cs[1] / cs[0] < 2.0


def test_analytics_check_passes():
    r = check_maml_analytics()
    assert r.passed, r.line()


def _small_cfg(**kw):
    base = dict(batch_size=5, train_tasks=10, val_tasks=4, val_every=1)
    base.update(kw)
    return MetaConfig(**base)


def test_meta_train_trace_and_determinism(dist, tmp_path):
    cfg = MetaConfig(batch_size=5, train_tasks=5, val_tasks=3)
    p1, tr = meta_train(cfg, dist, RngStream(4))
    assert len(tr) == 1 and tr.rows[0].iteration == 1
    p2, _ = meta_train(cfg, dist, RngStream(4))
    save_checkpoint(tmp_path / "a.bin", p1, PolicyObjective().spec, 4)
    save_checkpoint(tmp_path / "b.bin", p2, PolicyObjective().spec, 4)
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
    for method in ("maml", "reptile"):
        _, tr = meta_train(_small_cfg(), dist, RngStream(4), method=method)
        assert [r.iteration for r in tr.rows] == [1, 2]
        assert [v[0] for v in tr.validation] == [0, 1, 2]
    with pytest.raises(InvalidParameterError):
        meta_train(cfg, dist, RngStream(4), method="sgd")


def test_trace_csv(tmp_path, dist):
    _, tr = meta_train(_small_cfg(), dist, RngStream(5))
    tr.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,pre_loss,post_loss,grad_norm,ms"
    assert len(lines) == 3
    assert all(line.endswith(",0") for line in lines[1:])  # timing off -> reproducible
    tr.to_csv(tmp_path / "t2.csv", timing=True)
    assert len((tmp_path / "t2.csv").read_text().splitlines()) == 3


def test_divergence_guard(dist):
    # the policy loss is bounded, so overshoot a quadratic stub instead
    cfg = _small_cfg(meta_lr=10.0, train_tasks=100)
    with pytest.raises(DivergenceError) as exc:
        meta_train(cfg, dist, RngStream(6), QuadraticStub(1.0), "maml", init=np.array([1.0]))
    assert isinstance(exc.value.trace, TrainTrace) and len(exc.value.trace) >= 1


@pytest.mark.slow
def test_training_reduces_validation_loss(dist):
    wins = 0
    for seed in range(3):
        _, tr = meta_train(MetaConfig(train_tasks=400, val_tasks=50, val_every=0), dist,
                           RngStream(seed))
        wins += tr.validation[-1][1] < tr.validation[0][1]
    assert wins == 3


def test_online_adapt_contract(dist, tmp_path):
    obj = PolicyObjective()
    theta = init_params(obj.spec, 1)
    t = sample_task(dist, RngStream(7))
    d0, l0 = online_adapt(theta, t, 10, 0.01, 0, RngStream(8), obj)
    assert d0 == obj.decision(theta, t) and len(l0) == 1
    d3, l3 = online_adapt(theta, t, 10, 0.01, 3, RngStream(8), obj)
    assert len(l3) == 4
    save_checkpoint(tmp_path / "c.bin", theta, obj.spec, 1)
    back = load_checkpoint(tmp_path / "c.bin")[0]
    assert online_adapt(back, t, 10, 0.01, 3, RngStream(8), obj) == (d3, l3)


def test_online_losses_mostly_nonincreasing(dist):
    obj = PolicyObjective()
    theta = init_params(obj.spec, 2)
    ok = 0
    for k, t in enumerate(sample_tasks(dist, 100, RngStream(9))):
        _, losses = online_adapt(theta, t, 10, 0.01, 3, RngStream(10, k), obj)
        ok += all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))
    assert ok >= 90
