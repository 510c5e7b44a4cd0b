import numpy as np
import pytest

from zsb import potential as pot
from zsb.birkhoff import Workspace
from zsb.monodromy import IntegratorConfig


@pytest.fixture(scope="session")
def zero_pot():
    return pot.from_fourier([])


@pytest.fixture(scope="session")
def pw04():
    return pot.plane_wave(0.4)


@pytest.fixture(scope="session")
def onegap_pot():
    # single u-mode at k=1 opens the single gap at index -1
    return pot.from_u([(1, 0.12)])


@pytest.fixture(scope="session")
def twomode_pot():
    # generic focusing potential: macroscopic gaps at -1, -2, micro-gaps elsewhere
    return pot.from_u([(1, 0.10), (2, 0.06 + 0.03j)])


@pytest.fixture(scope="session")
def tuned3_med():
    # modes 1 and 3 fixed, mode 2 tuned so gap -2 is open but small (~5e-3)
    return pot.from_u([(1, 0.25), (2, 0.00125), (3, 0.2)])


@pytest.fixture(scope="session")
def tuned3_small():
    # same family with gap -2 shrunk to ~1e-5, just above the collapse threshold
    return pot.from_u([(1, 0.25), (2, 5.3696e-06), (3, 0.2)])


@pytest.fixture(scope="session")
def lowpair_pot():
    # R = 1: conjugate low pairs near +-i and +-2.97 +- 0.25i
    return pot.from_u([(0, 1.0), (1, 0.25), (-1, 0.2)])


@pytest.fixture(scope="session")
def zero_ws(zero_pot):
    return Workspace.build(zero_pot, 8)


@pytest.fixture(scope="session")
def pw04_ws(pw04):
    return Workspace.build(pw04, 8)


@pytest.fixture(scope="session")
def onegap_ws(onegap_pot):
    return Workspace.build(onegap_pot, 8)


@pytest.fixture(scope="session")
def twomode_ws(twomode_pot):
    return Workspace.build(twomode_pot, 8)


@pytest.fixture(scope="session")
def lowpair_ws(lowpair_pot):
    return Workspace.build(lowpair_pot, 6, IntegratorConfig(steps=512, richardson=True))


def random_focusing(rng, n_modes=3, amp=0.08):
    modes = []
    ks = rng.choice(np.arange(-3, 4), size=n_modes, replace=False)
    for k in ks:
        a = amp * (rng.standard_normal() + 1j * rng.standard_normal())
        modes.append((int(k), a))
    return pot.from_u(modes)
