import numpy as np
import pytest

from nterm import (
    ConstantWeights,
    LogPowerWeights,
    PowLogWeights,
    TabulatedWeights,
)


def builtin_families():
    """The four closed-form models exercised throughout the suite."""
    return {
        "const": ConstantWeights(),
        "logpow:beta=1": LogPowerWeights(1.0),
        "powlog:alpha=1,beta=0": PowLogWeights(1.0, 0.0),
        "powlog:alpha=0.5,beta=-1": PowLogWeights(0.5, -1.0),
    }


def random_monotone_weights(rng: np.random.Generator, size: int) -> TabulatedWeights:
    """A random valid table: 1 + nonnegative increments."""
    steps = rng.exponential(scale=0.5, size=size)
    steps[0] = 0.0
    return TabulatedWeights(1.0 + np.cumsum(steps))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
