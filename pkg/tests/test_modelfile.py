import numpy as np
import pytest

from smrm import modelfile, reproduce
from smrm.errors import ModelFileError
from smrm.model import validate
from smrm.rewards import DiscreteWeibull, ExplicitLattice, Geometric, UniformMixture, WeibullCont

WASTE = """
states: [s0, s1, s2]
target: [s2]
transitions:
  - [s0, s1, 1.0, "geometric(0.8)"]
  - {src: s1, dst: s0, prob: 0.95, reward: "family(dweibull, 0.3, 0.5)"}
  - [s1, s2, 0.05, {family: dweibull, params: [0.5, 0.7]}]
  - [s2, s0, 1.0, "dweibull(0.6, 0.9)"]
"""


def test_parse_waste_matches_embedded_model():
    model = modelfile.loads(WASTE)
    ref = reproduce.waste_model()
    assert model.states == ref.states
    assert np.array_equal(model.transition_probs, ref.transition_probs)
    assert model.rewards == ref.rewards
    assert model.target_set == ref.target_set


@pytest.mark.parametrize("spec,expected", [
    ("geometric(0.5)", Geometric(0.5)),
    ("lattice([0.5, 0.5])", ExplicitLattice([0.5, 0.5])),
    ("uniform_mixture([[1.0, 0.0, 2.0]])", UniformMixture([(1.0, 0.0, 2.0)])),
    ("weibull_theta(2.0, 4.0)", WeibullCont(2.0, 2.0)),
    ({"family": "dweibull", "params": [0.3, 0.5]}, DiscreteWeibull(0.3, 0.5)),
])
def test_parse_reward_forms(spec, expected):
    assert modelfile.parse_reward(spec) == expected


@pytest.mark.parametrize("spec", ["poisson(2)", "geometric(", "geometric(2.0)", "lattice(1, 2)", 42,
                                  {"params": [1]}])
def test_parse_reward_errors(spec):
    with pytest.raises(ModelFileError):
        modelfile.parse_reward(spec)


def test_unknown_family_lists_known_ones():
    with pytest.raises(ModelFileError, match="known families"):
        modelfile.parse_reward("poisson(2)")


@pytest.mark.parametrize("model", [reproduce.toy_model(), reproduce.waste_model(),
                                   reproduce.coronary_model("DIED")])
def test_round_trip(model):
    back = modelfile.loads(modelfile.dumps(model))
    assert back.states == tuple(str(s) for s in model.states)
    assert np.allclose(back.transition_probs, model.transition_probs)
    assert back.target_set == model.target_set
    for key, dist in model.rewards.items():
        if model.transition_probs[model.index(key[0]), model.index(key[1])] > 0:
            assert back.rewards[key] == dist


def test_target_without_row_becomes_absorbing():
    text = """
states: [a, b]
target: b
transitions:
  - [a, b, 1.0, "geometric(0.5)"]
"""
    model = modelfile.loads(text)
    assert model.transition_probs[1, 1] == 1.0
    assert validate(model) == []


@pytest.mark.parametrize("text", ["[1, 2]", "states: [a]\ntarget: [a]\n", ": :",
                                  "states: [a]\ntarget: [z]\ntransitions: []\n",
                                  "states: [a]\ntarget: [a]\ntransitions:\n  - [a, q, 1.0, dirac]\n",
                                  "states: [a]\ntarget: [a]\ntransitions:\n  - [a, a]\n"])
def test_malformed_documents(text):
    with pytest.raises(ModelFileError):
        modelfile.loads(text)


def test_file_io(tmp_path):
    path = tmp_path / "waste.yaml"
    modelfile.dump(reproduce.waste_model(), path)
    assert modelfile.load(path).rewards == reproduce.waste_model().rewards
    with pytest.raises(ModelFileError):
        modelfile.load(tmp_path / "missing.yaml")
