import numpy as np
import pytest

from tdbkgc.model import CoreTensor, TdbModel, build_preset_core, get_preset

# preset -> parts, for sizing random models
PARTS = {"cp": 1, "distmult": 1, "complex": 2, "simple": 2, "analogy": 4, "quate": 4}

ACCEPTANCE_LINES: list[str] = []


def random_model(preset: str, rng, n_ent=5, n_rel=3, blocks=2, parts=None, scale=1.0,
                 tied=None) -> TdbModel:
    """Float64 model with N(0, scale^2) entries; tucker gets a random core of size ``parts``."""
    p = parts if preset == "tucker" else PARTS[preset]
    if preset == "tucker" and p is None:
        p = 3
    dim = p * blocks
    preset_cfg = get_preset(preset, dim, tied=tied, parts=p)
    if preset == "tucker":
        core = CoreTensor(rng.normal(size=(p, p, p)), trainable=True)
    else:
        core = build_preset_core(preset_cfg, dim)
    head = scale * rng.normal(size=(n_ent, blocks, p))
    rel = scale * rng.normal(size=(n_rel, blocks, p))
    tail = head if preset_cfg.tied else scale * rng.normal(size=(n_ent, blocks, p))
    return TdbModel(head, rel, tail, core, preset_cfg.tied, preset)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
