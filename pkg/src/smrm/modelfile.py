"""Reading and writing models as YAML documents.

Layout::

    states: [s0, s1, s2]
    target: [s2]
    transitions:
      - [s0, s1, 1.0, "geometric(0.8)"]
      - {src: s1, dst: s0, prob: 0.95, reward: "family(dweibull, 0.3, 0.5)"}
      - [s1, s2, 0.05, "lattice([0.0, 0.5, 0.5])"]

A reward spec is ``name(args...)``, ``family(name, args...)``,
``lattice([v0, v1, ...])`` or a mapping ``{family: name, params: [...]}``.
Missing transitions have probability zero.  Rows of target states may be
omitted; they are made absorbing before solving.
"""

from __future__ import annotations

import ast
import re
from pathlib import Path

import numpy as np
import yaml

from .errors import InvalidParameter, ModelFileError
from .model import Smrm
from .rewards import (
    Binomial,
    DiracZero,
    DiscreteGumbel,
    DiscreteWeibull,
    Exponential,
    ExplicitLattice,
    FAMILIES,
    Geometric,
    RewardDist,
    UniformMixture,
    WeibullCont,
)

_CALL = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$", re.S)


def _build(name: str, args: list) -> RewardDist:
    name = name.lower()
    try:
        if name == "weibull_theta":
            return WeibullCont.from_shape_theta(*args)
        if name in ("lattice", "uniform_mixture"):
            if len(args) != 1:
                raise ModelFileError(f"{name} takes one list argument")
            return FAMILIES[name](args[0])
        if name not in FAMILIES:
            known = sorted(list(FAMILIES) + ["weibull_theta"])
            raise ModelFileError(f"unknown reward family {name!r}; known families: {', '.join(known)}")
        return FAMILIES[name](*args)
    except TypeError as exc:
        raise ModelFileError(f"bad arguments for {name}: {exc}") from exc
    except InvalidParameter as exc:
        raise ModelFileError(str(exc)) from exc


def parse_reward(spec) -> RewardDist:
    if isinstance(spec, dict):
        if "family" not in spec:
            raise ModelFileError(f"reward mapping needs a 'family' key: {spec}")
        return _build(str(spec["family"]), list(spec.get("params", [])))
    if not isinstance(spec, str):
        raise ModelFileError(f"cannot read reward spec {spec!r}")
    m = _CALL.match(spec)
    if not m:
        if spec.strip().lower() in ("dirac", "zero"):
            return DiracZero()
        raise ModelFileError(f"reward spec {spec!r} is not of the form name(args)")
    name, body = m.group(1), m.group(2)
    if name == "family":
        fam, _, body = body.partition(",")
        name = fam.strip()
    try:
        args = ast.literal_eval(f"[{body}]") if body.strip() else []
    except (ValueError, SyntaxError) as exc:
        raise ModelFileError(f"cannot parse arguments of {spec!r}") from exc
    return _build(name, args)


def reward_spec(dist: RewardDist) -> str:
    """Inverse of ``parse_reward``."""
    if isinstance(dist, DiracZero):
        return "dirac()"
    if isinstance(dist, ExplicitLattice):
        return f"lattice({list(dist.values)!r})"
    if isinstance(dist, UniformMixture):
        return f"uniform_mixture({[list(c) for c in dist.components]!r})"
    if isinstance(dist, Binomial):
        return f"binomial({int(dist.n)}, {dist.p!r})"
    if isinstance(dist, Geometric):
        return f"geometric({dist.p!r})"
    if isinstance(dist, DiscreteWeibull):
        return f"dweibull({dist.q!r}, {dist.b!r})"
    if isinstance(dist, DiscreteGumbel):
        return f"dgumbel({dist.p!r}, {dist.a!r})"
    if isinstance(dist, Exponential):
        return f"exponential({dist.rate!r})"
    if isinstance(dist, WeibullCont):
        return f"weibull({dist.shape!r}, {dist.scale!r})"
    raise ModelFileError(f"no text form for {type(dist).__name__}")


def _transition(item):
    if isinstance(item, dict):
        try:
            return item["src"], item["dst"], item["prob"], item["reward"]
        except KeyError as exc:
            raise ModelFileError(f"transition {item} misses key {exc}") from exc
    if isinstance(item, (list, tuple)) and len(item) == 4:
        return tuple(item)
    raise ModelFileError(f"transition entry {item!r} must be [src, dst, prob, reward] or a mapping")


def loads(text: str) -> Smrm:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelFileError(f"not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFileError("model document must be a mapping")
    for key in ("states", "transitions", "target"):
        if key not in doc:
            raise ModelFileError(f"missing block {key!r}")
    states = [str(s) for s in doc["states"]]
    index = {s: i for i, s in enumerate(states)}
    target = doc["target"]
    target = [str(t) for t in (target if isinstance(target, list) else [target])]
    P = np.zeros((len(states), len(states)))
    rewards = {}
    for item in doc["transitions"] or []:
        src, dst, prob, spec = _transition(item)
        src, dst = str(src), str(dst)
        for s in (src, dst):
            if s not in index:
                raise ModelFileError(f"transition mentions unknown state {s!r}")
        P[index[src], index[dst]] += float(prob)
        rewards[(src, dst)] = parse_reward(spec)
    for t in target:
        i = index.get(t)
        if i is None:
            raise ModelFileError(f"target {t!r} is not a declared state")
        if not P[i].any():
            P[i, i] = 1.0
            rewards.setdefault((t, t), DiracZero())
    initial = doc.get("initial")
    return Smrm(states, P, rewards, target, initial)


def load(path) -> Smrm:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read {p}: {exc.strerror}") from exc
    return loads(text)


def dumps(model: Smrm) -> str:
    P = model.transition_probs
    transitions = []
    for i, j in zip(*np.nonzero(P > 0)):
        src, dst = model.states[i], model.states[j]
        dist = model.rewards.get((src, dst), DiracZero())
        transitions.append([str(src), str(dst), float(P[i, j]), reward_spec(dist)])
    doc = {
        "states": [str(s) for s in model.states],
        "target": sorted(str(t) for t in model.target_set),
        "transitions": transitions,
    }
    if model.initial_dist is not None:
        doc["initial"] = [float(v) for v in model.initial_dist]
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def dump(model: Smrm, path) -> None:
    Path(path).write_text(dumps(model))
