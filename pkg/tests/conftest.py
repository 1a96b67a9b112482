import pytest

from conformal_energy.circle_maps import FourierMap, identity, make_moebius, make_pwl, make_square
from conformal_energy.energy import QuadratureSpec


@pytest.fixture
def small_q():
    return QuadratureSpec(n=256, refine=1)


@pytest.fixture
def medium_q():
    return QuadratureSpec(n=512, refine=1)


@pytest.fixture
def corpus():
    """Homeomorphisms of every closed-form kind, pinned at 1."""
    return {
        "identity": identity(),
        "moebius": make_moebius(0.3 + 0.2j, 0.0),
        "moebius_real": make_moebius(0.6, 1.1),
        "pwl": make_pwl(0.1),
        "square": make_square(),
        "fourier": FourierMap(identity(), [0.0, 0.2]),
    }
