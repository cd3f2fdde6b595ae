import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from global_bandits.reward_model import RewardFunction, three_arm_example

settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def three_arm():
    return three_arm_example()


@pytest.fixture
def builtin_functions():
    return [
        RewardFunction.linear(0.8),
        RewardFunction.linear(-0.6, 0.9),
        RewardFunction.power(2.0),
        RewardFunction.power(0.5, a=-1.0, b=1.0),
        RewardFunction.power(3.0, a=0.5, b=0.2),
        RewardFunction.exponential(0.3, 1.0),
        RewardFunction.exponential(0.9, -0.7),
        RewardFunction.piecewise([(0.0, 0.1), (0.3, 0.5), (1.0, 0.7)]),
        RewardFunction.piecewise([(0.0, 0.9), (0.5, 0.2), (1.0, 0.05)]),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
