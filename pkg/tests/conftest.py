import numpy as np
import pytest
import torch
from hypothesis import settings

from hairedit.backends import toy_bundle
from hairedit.core import DTYPE, Dims

settings.register_profile("desk", deadline=None, max_examples=25)
settings.load_profile("desk")

SEED = 7


@pytest.fixture(scope="session")
def dims():
    return Dims.desk()


@pytest.fixture(scope="session")
def bundle(dims):
    return toy_bundle(dims, SEED)


@pytest.fixture(scope="session")
def trained_run(tmp_path_factory):
    """A short desk training run shared by CLI/service tests: (config_path, checkpoint_path, cfg)."""
    from hairedit.config import desk_config, save_config
    from hairedit.training import train

    out = tmp_path_factory.mktemp("trained_run")
    cfg = desk_config(seed=0, iterations=40, checkpoint_every=20)
    cfg = type(cfg)(
        train=cfg.train,
        service=cfg.service,
        backend_seed=cfg.backend_seed,
        output_dir=str(out / "out"),
        corpus_path=cfg.corpus_path,
    )
    config_path = out / "config.json"
    save_config(cfg, config_path)
    backends = toy_bundle(cfg.dims, cfg.backend_seed)
    ckpt = train(cfg, backends, out_dir=cfg.output_dir)
    return config_path, ckpt, cfg


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


def rand_image(rng, size):
    return torch.from_numpy(rng.uniform(0.0, 1.0, size=(3, size, size))).to(DTYPE)


def rand_latent(rng, dims):
    from hairedit.core import LatentCode

    return LatentCode(torch.from_numpy(rng.standard_normal((dims.n_layers, dims.latent_dim))).to(DTYPE))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, printed after the run."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            label = nodeid.split("::")[-1]
            status = "PASS" if outcome == "passed" else "FAIL"
            lines.append((label, status))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for label, status in sorted(lines):
            terminalreporter.write_line(f"[{status}] {label}")
