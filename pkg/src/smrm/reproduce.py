"""Embedded reference models: a 4-state toy chain, a waste-treatment process
and a hospital patient-flow model with Weibull sojourn times."""

from __future__ import annotations

import numpy as np

from .model import Smrm, chain_model
from .rewards import Binomial, DiracZero, DiscreteWeibull, Geometric, UniformMixture, WeibullCont

TOY_A = np.array([
    [0.1288838, 0.38242891, 0.12495781, 0.13139189],
    [0.27758284, 0.09654253, 0.15592425, 0.24690511],
    [0.10418887, 0.18054794, 0.1492027, 0.32815053],
    [0.33540355, 0.31410283, 0.16746947, 0.1316041],
])
TOY_B = np.array([0.23233759, 0.22304527, 0.23790995, 0.05142005])
TOY_K = 150

TOY_MIXTURE = UniformMixture([(1 / 3, 0.0, 2.0), (1 / 3, 0.5, 4.0), (1 / 6, 2.0, 8.0), (1 / 6, 6.0, 15.0)])


def toy_model(reward=None) -> Smrm:
    """States s0..s3 plus goal s4.  Every reward defaults to Binomial(100, 0.5).

    The published rows carry 8-digit rounding; the leftover 1e-8 of mass goes
    to an absorbing sink so the rows sum to one.
    """
    reward = Binomial(100, 0.5) if reward is None else reward
    return chain_model(TOY_A, TOY_B, reward, names=[f"s{i}" for i in range(4)], goal="s4")


def waste_model() -> Smrm:
    states = ["s0", "s1", "s2"]
    P = np.array([
        [0.0, 1.0, 0.0],
        [0.95, 0.0, 0.05],
        [1.0, 0.0, 0.0],
    ])
    rewards = {
        ("s0", "s1"): Geometric(0.8),
        ("s1", "s0"): DiscreteWeibull(0.3, 0.5),
        ("s1", "s2"): DiscreteWeibull(0.5, 0.7),
        ("s2", "s0"): DiscreteWeibull(0.6, 0.9),
    }
    return Smrm(states, P, rewards, {"s2"})


WASTE_K = 100

CORONARY_STATES = ["CCU", "PCCU", "ICU", "MED", "SURG", "AMB", "ECF", "HOME", "DIED"]
CORONARY_P = np.array([
    [0.0000, 0.7447, 0.0084, 0.1339, 0.0042, 0.0063, 0.0000, 0.0063, 0.0962],
    [0.0192, 0.0000, 0.0137, 0.0247, 0.0027, 0.0027, 0.0577, 0.8298, 0.0495],
    [0.0000, 0.5833, 0.0000, 0.1667, 0.0833, 0.0000, 0.0000, 0.0000, 0.1667],
    [0.0000, 0.0135, 0.0405, 0.0000, 0.0135, 0.0270, 0.0811, 0.7028, 0.1216],
    [0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 1.0000, 0.0000],
    [0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 1.0000, 0.0000],
    [0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 1.0000, 0.0000, 0.0000],
    [0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 1.0000, 0.0000],
    [0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 1.0000],
])
# (shape, theta) with pdf (shape/theta) x^(shape-1) exp(-x^shape / theta)
CORONARY_WEIBULL = {
    "f1": (4.738025, 4566277818.13),
    "f2": (2.207438, 14541.6089),
    "f3": (0.766338, 16.6991),
    "f4": (2.303331, 1017649.5158),
    "f6": (1.623492, 4707.3132),
}
CORONARY_REWARDS = {
    "CCU": {"PCCU": "f1", "ICU": "f1", "MED": "f1", "SURG": "f1", "AMB": "f2", "HOME": "f2", "DIED": "f3"},
    "PCCU": {"CCU": "f4", "ICU": "f1", "MED": "f4", "SURG": "f1", "AMB": "f1", "ECF": "f4", "HOME": "f4",
             "DIED": "f6"},
    "ICU": {"PCCU": "f4", "MED": "f1", "SURG": "f1", "DIED": "f3"},
    "MED": {"PCCU": "f4", "ICU": "f4", "SURG": "f4", "AMB": "f4", "ECF": "f4", "HOME": "f4", "DIED": "f6"},
    "SURG": {"HOME": "f4"},
    "AMB": {"HOME": "f4"},
}
CORONARY_TARGETS = ("ECF", "HOME", "DIED")
CORONARY_START = "CCU"
CORONARY_BOUND = 3000.0
CORONARY_POINTS = 2001


def coronary_model(target: str = "HOME") -> Smrm:
    families = {k: WeibullCont.from_shape_theta(*v) for k, v in CORONARY_WEIBULL.items()}
    rewards = {}
    for src, row in CORONARY_REWARDS.items():
        for dst, fam in row.items():
            rewards[(src, dst)] = families[fam]
    for s in ("ECF", "HOME", "DIED"):
        rewards[(s, s)] = DiracZero()
    return Smrm(CORONARY_STATES, CORONARY_P, rewards, {target})
