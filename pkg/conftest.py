"""
共用測試夾具：maser、古典鏈與振幅阻尼系統
"""

from functools import lru_cache

import numpy as np
import pytest

from config import Config
from modules.core import HermitianOperator, JumpOperator, OpenSystem
from modules.liouvillian import LiouvillianBundle
from modules.models import (
    ClassicalChain, MaserParams, build_maser, cycle_current, embed_classical,
)

SWEEP_GRID = [float(x) for x in np.linspace(0.0, 2.0, 5)]


@lru_cache(maxsize=None)
def maser_bundle_at(delta, omega=Config.MASER_OMEGA):
    return LiouvillianBundle(build_maser(MaserParams(delta=delta, omega=omega)))


def amplitude_damping(gamma=1.0, drive=0.0):
    """d = 2，L = √γ|0⟩⟨1|，H = (drive/2)σx"""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    lowering = np.array([[0, 1], [0, 0]], dtype=complex)
    return OpenSystem(HermitianOperator(0.5 * drive * sx), (JumpOperator(np.sqrt(gamma) * lowering, 1),))


def two_state_chain(w10=1.0, w01=1.0):
    rates = np.zeros((2, 2))
    rates[1, 0] = w10
    rates[0, 1] = w01
    return ClassicalChain(rates)


def three_cycle(forward=2.0, backward=0.5):
    """0 → 1 → 2 → 0 速率 forward，反向 backward"""
    rates = np.zeros((3, 3))
    for n in range(3):
        rates[(n + 1) % 3, n] = forward
        rates[n, (n + 1) % 3] = backward
    return ClassicalChain(rates)


@pytest.fixture
def config():
    return Config()


@pytest.fixture
def maser_bundle():
    return maser_bundle_at(1.0)


@pytest.fixture
def maser_current(maser_bundle):
    return cycle_current(maser_bundle.system)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cycle_bundle():
    system, channel_map = embed_classical(three_cycle())
    return LiouvillianBundle(system), channel_map


def random_state(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_matrix(rng, dim):
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
