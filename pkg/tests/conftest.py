import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oschybrid.analog import AnalogStage, effective_channel
from oschybrid.channel import ArrayGeometry, ChannelSet, sample_channel
from oschybrid.config import SystemConfig
from oschybrid.digital import DigitalStage, InitialCombiner, design_digital
from oschybrid.experiment import CodebookCache, japc_analog, trial_rng

CACHE = CodebookCache()


@dataclass
class Pipeline:
    config: SystemConfig
    channels: ChannelSet
    analog: AnalogStage
    digital: DigitalStage
    h_eff_blocks: List[np.ndarray]

    @property
    def H_eff(self):
        return np.vstack(self.h_eff_blocks)


def build_pipeline(config: SystemConfig, seed: int, trial: int, sigma2: float,
                   v_ini: InitialCombiner = None) -> Pipeline:
    channels = sample_channel(config, config.cluster_spec, trial_rng(seed, trial, 0))
    analog = japc_analog(config, channels, CACHE)
    blocks = [effective_channel(channels[k], analog.F, analog.combiners[k])
              for k in range(len(channels))]
    digital = design_digital(blocks, analog.F, analog.combiners, config.n_streams,
                             config.p_t, sigma2, v_ini)
    return Pipeline(config, channels, analog, digital, blocks)


_SMALL_SHAPES = [
    # (bs grid, user grid, K, M_r)
    ((4, 4), (2, 2), 2, 2),
    ((4, 4), (2, 2), 4, 1),
    ((4, 2), (2, 2), 2, 2),
    ((4, 4), (4, 1), 1, 2),
    ((8, 4), (2, 2), 4, 2),
]


def random_small_pipeline(rng: np.random.Generator, seed: int, v_ini=None) -> Pipeline:
    """Library pipeline on a small random configuration (N_s = M_r, K M_r = M_t)."""
    bs, ue, k, m_r = _SMALL_SHAPES[rng.integers(len(_SMALL_SHAPES))]
    config = SystemConfig(
        bs_geometry=ArrayGeometry(*bs), user_geometry=ArrayGeometry(*ue),
        n_users=k, m_t=k * m_r, m_r=m_r, n_streams=m_r,
        rho=int(rng.choice([1, 2])), beta=float(rng.choice([0.3, 0.5, 0.8])),
        bits_t=int(rng.choice([0, 3])), bits_r=int(rng.choice([0, 2])),
        p_t=float(rng.uniform(0.5, 4.0)),
    )
    sigma2 = float(10 ** rng.uniform(-2, 1))
    return build_pipeline(config, seed, 0, sigma2, v_ini)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def cache():
    return CACHE


def random_codebook(rng, n, count):
    """Codebook of random constant-modulus vectors (not an OSC)."""
    from oschybrid.codebook import Codebook
    v = np.exp(1j * rng.uniform(0, 2 * np.pi, (count, n))) / np.sqrt(n)
    return Codebook(v, 1, ArrayGeometry(1, n))


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


ACCEPTANCE_LINES: List[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
