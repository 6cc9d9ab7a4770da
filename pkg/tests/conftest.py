import numpy as np
import pytest

from pinchmeta.channel import Vec3, WaveguideGeometry, derive_radio_env
from pinchmeta.tasks import Requirements, Task, TaskDistribution


@pytest.fixture
def env():
    return derive_radio_env(28e9, 100e6, -174.0)


@pytest.fixture
def geom():
    return WaveguideGeometry(5.0, 3.0)


@pytest.fixture
def dist():
    return TaskDistribution()


def make_task(xu=2.0, yu=2.0, r=0.5, xe=4.0, ye=5.0, **req):
    return Task(Vec3(xu, yu, 0.0), r, Vec3(xe, ye, 0.0), req=Requirements(**req))


@pytest.fixture
def task():
    return make_task()


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def tiny_checkpoints(tmp_path_factory):
    """Briefly meta-trained MAML and Reptile checkpoints (20 tasks each)."""
    from pinchmeta.meta import MetaConfig, meta_train
    from pinchmeta.policy import PolicyObjective, save_checkpoint
    from pinchmeta.rng import RngStream

    d = tmp_path_factory.mktemp("ckpt")
    obj = PolicyObjective()
    cfg = MetaConfig(batch_size=5, train_tasks=20, val_tasks=0)
    out = {}
    for method in ("maml", "reptile"):
        params, _ = meta_train(cfg, TaskDistribution(), RngStream(0, 1), obj, method=method)
        out[method] = str(d / f"{method}.bin")
        save_checkpoint(out[method], params, obj.spec, 0)
    return out


# one PASS/FAIL line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
