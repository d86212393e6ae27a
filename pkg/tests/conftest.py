import itertools

import numpy as np
import pytest

from bexsam.genbench import GeneratorConfig, random_model
from bexsam.model import structural_sample


def model_bank(count=50, dmax=5, seed=20240):
    """Seeded random models, d cycling over 2..dmax, noise in [0.1,0.4] or [0.6,0.9]."""
    models = []
    for s in range(count):
        rng = np.random.default_rng([seed, s])
        d = 2 + s % (dmax - 1)
        base = rng.uniform(0.1, 0.4, size=d)
        probs = np.where(rng.random(d) < 0.5, 1 - base, base)
        config = GeneratorConfig(d=d, n=1, noise_probs=[float(p) for p in probs])
        models.append(random_model(config, rng))
    return models


def brute_joint(model):
    """Joint as a dict pattern-tuple -> probability, by pushing every noise pattern through."""
    joint = {}
    for noise in itertools.product((0, 1), repeat=model.d):
        weight = 1.0
        for e, p in zip(noise, model.noise_probs):
            weight *= p if e else 1 - p
        x = structural_sample(model, noise)
        joint[x] = joint.get(x, 0.0) + weight
    return joint


def brute_conditional(joint, target, given):
    num = den = 0.0
    for x, p in joint.items():
        if all(x[v] == b for v, b in given.items()):
            den += p
            if x[target] == 1:
                num += p
    return num / den


@pytest.fixture(scope="session")
def bank():
    return model_bank()


@pytest.fixture(scope="session")
def bank_d4():
    return model_bank(dmax=4, seed=777)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
